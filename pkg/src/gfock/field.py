"""Mollified free fields on a periodic box.

The regularised two-point kernel is expanded over the box momenta with weights
``F(eps k)``.  Its plane-wave coefficients are

    c_k(x, t) = F(eps k) exp(-i (k.x - k0 t)) / (2 k0 sqrt(V)),

and the field operator uses the Klein-Gordon normalised one-particle
amplitudes ``sqrt(2 k0) c_k``, which is what makes the equal-time commutator
of the field and its time derivative equal to ``i delta_eps``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError, ShapeError
from .fock import (
    FockBasis,
    FockOperator,
    ModeSet,
    commutator,
    enumerate_basis,
    field_operator_sparse,
    opnorm,
    safe_subspace,
)
from .moll import Damper, Mollifier, make_plateau_profile, mollifier_weight

__all__ = [
    "FieldConfig",
    "KernelCoeffs",
    "CCRResidual",
    "make_field_config",
    "spectral_weights",
    "delta_plus_coeffs",
    "field_amplitudes",
    "phi0",
    "pi0",
    "grad_phi0",
    "delta_eps_kernel",
    "delta_eps_gradient",
    "plane_wave",
    "kg_pair",
    "ccr_check",
    "translation_operator",
    "in_plateau_regime",
]


@dataclass(frozen=True)
class FieldConfig:
    modeset: ModeSet
    basis: FockBasis
    mollifier: Mollifier
    damper: Damper = field(default_factory=Damper)
    eps: float = 0.1
    tau: float = 0.0

    def __post_init__(self):
        if not self.eps > 0:
            raise ParameterError(f"eps must be > 0, got {self.eps}")
        if self.mollifier.dim != self.modeset.d:
            raise ParameterError(
                f"mollifier dimension {self.mollifier.dim} != mode dimension {self.modeset.d}"
            )
        if self.basis.modeset != self.modeset:
            raise ShapeError("basis was built on a different mode set")

    def with_eps(self, eps):
        return FieldConfig(self.modeset, self.basis, self.mollifier, self.damper, eps, self.tau)

    def with_mollifier(self, mollifier):
        return FieldConfig(self.modeset, self.basis, mollifier, self.damper, self.eps, self.tau)

    def describe(self):
        return {
            "d": self.modeset.d,
            "L": self.modeset.L,
            "n_max": self.modeset.n_max,
            "m": self.modeset.m,
            "N_max": self.basis.N_max,
            "modes": self.modeset.M,
            "basis_size": self.basis.size,
            "r_inner": self.mollifier.profile.r_inner,
            "r_outer": self.mollifier.profile.r_outer,
            "damper": self.damper.enabled,
            "damper_r_inner": self.damper.profile.r_inner,
            "damper_r_outer": self.damper.profile.r_outer,
            "eps": self.eps,
            "tau": self.tau,
        }


def make_field_config(
    d=1, L=2 * math.pi, n_max=2, N_max=4, m=1.0, r_inner=1.0, r_outer=2.0,
    eps=0.1, tau=0.0, damper=None, max_states=None,
):
    """Convenience constructor with the default desk-scale model."""
    modeset = ModeSet(d, L, n_max, m)
    kwargs = {} if max_states is None else {"max_states": max_states}
    basis = enumerate_basis(modeset, N_max, **kwargs)
    mollifier = Mollifier(make_plateau_profile(r_inner, r_outer), d)
    return FieldConfig(modeset, basis, mollifier, damper or Damper(), eps, tau)


@dataclass(frozen=True)
class KernelCoeffs:
    """Plane-wave amplitudes of a positive-frequency solution.

    The solution is ``sum_k coeffs[k] exp(i (k.xi - k0 t)) / sqrt(V)``.
    """

    coeffs: np.ndarray
    k0: np.ndarray

    def at(self, t):
        return self.coeffs * np.exp(-1j * self.k0 * t)


def spectral_weights(cfg):
    return mollifier_weight(cfg.mollifier, cfg.eps, cfg.modeset.k)


def in_plateau_regime(cfg):
    kmax = float(np.max(np.linalg.norm(cfg.modeset.k, axis=1)))
    return cfg.eps * kmax <= cfg.mollifier.profile.r_inner


def _position(cfg, x):
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape != (cfg.modeset.d,):
        raise ShapeError(f"position of shape {x.shape} in dimension {cfg.modeset.d}")
    return x


def delta_plus_coeffs(cfg, x, t):
    """Plane-wave coefficients of the regularised kernel centred at ``(x, t)``."""
    ms = cfg.modeset
    x = _position(cfg, x)
    phase = np.exp(-1j * (ms.k @ x - ms.k0 * t))
    c = spectral_weights(cfg) * phase / (2 * ms.k0 * math.sqrt(ms.volume))
    return KernelCoeffs(c, ms.k0.copy())


def field_amplitudes(cfg, x, t, kind="phi", mu=0):
    """One-particle amplitudes feeding ``a_plus``/``a_minus`` for a field operator.

    ``kind`` is ``"phi"``, ``"pi"`` (time derivative) or ``"grad"``
    (derivative along axis ``mu``).
    """
    c = delta_plus_coeffs(cfg, x, t)
    psi = np.sqrt(2 * c.k0) * c.coeffs
    if kind == "phi":
        return psi
    if kind == "pi":
        return 1j * c.k0 * psi
    if kind == "grad":
        return -1j * cfg.modeset.k[:, mu] * psi
    raise ParameterError(f"unknown field kind {kind!r}")


def _field(cfg, psi):
    return FockOperator(field_operator_sparse(psi, cfg.basis), cfg.basis, hermitian=True)


def phi0(cfg, x, t):
    """Free field ``a_plus(psi) + a_minus(psi)`` at ``(x, t)``."""
    return _field(cfg, field_amplitudes(cfg, x, t, "phi"))


def pi0(cfg, x, t):
    """Analytic time derivative of :func:`phi0`."""
    return _field(cfg, field_amplitudes(cfg, x, t, "pi"))


def grad_phi0(cfg, x, t, mu=0):
    return _field(cfg, field_amplitudes(cfg, x, t, "grad", mu))


def delta_eps_kernel(cfg, r):
    """``(1/V) sum_k F(eps k)^2 exp(i k.r)``: the box form of the regularised delta."""
    ms = cfg.modeset
    r = _position(cfg, r)
    w = spectral_weights(cfg) ** 2
    return complex(np.sum(w * np.exp(1j * (ms.k @ r))) / ms.volume)


def delta_eps_gradient(cfg, r):
    """Gradient of :func:`delta_eps_kernel` with respect to ``r``."""
    ms = cfg.modeset
    r = _position(cfg, r)
    w = spectral_weights(cfg) ** 2 * np.exp(1j * (ms.k @ r))
    return (1j * ms.k.T @ w) / ms.volume


def plane_wave(modeset, index, amplitude=1.0):
    """Box-normalised plane wave ``exp(i (k.xi - k0 t)) / sqrt(V)`` of one mode."""
    c = np.zeros(modeset.M, dtype=complex)
    c[index] = amplitude
    return KernelCoeffs(c, modeset.k0.copy())


def kg_pair(f, g, t=0.0):
    """Klein-Gordon pairing ``i \\int (f* dg/dt - df*/dt g)`` on the slice ``t``.

    For positive-frequency expansions this is ``sum_k 2 k0 conj(f_k) g_k``.
    """
    if f.coeffs.shape != g.coeffs.shape or not np.array_equal(f.k0, g.k0):
        raise ShapeError("expansions live on different mode sets")
    fk, gk = f.at(t), g.at(t)
    return complex(np.sum(2 * f.k0 * np.conj(fk) * gk))


@dataclass(frozen=True)
class CCRResidual:
    phi_phi: float
    pi_pi: float
    phi_pi: float

    def max(self):
        return max(self.phi_phi, self.pi_pi, self.phi_pi)


def ccr_check(cfg, x, xp, t, margin=1):
    """Equal-time commutator residuals restricted to ``safe_subspace(margin)``."""
    if margin < 1:
        raise ParameterError("margin must be >= 1")
    safe = safe_subspace(cfg.basis, margin)
    f, fp = phi0(cfg, x, t).matrix, phi0(cfg, xp, t).matrix
    p, pp = pi0(cfg, x, t).matrix, pi0(cfg, xp, t).matrix
    x = _position(cfg, x)
    xp = _position(cfg, xp)
    expected = 1j * delta_eps_kernel(cfg, x - xp)
    c_fp = commutator(f, pp)[:, safe]
    c_fp[safe, np.arange(len(safe))] -= expected
    return CCRResidual(
        phi_phi=opnorm(commutator(f, fp)[:, safe]),
        pi_pi=opnorm(commutator(p, pp)[:, safe]),
        phi_pi=opnorm(c_fp),
    )


def translation_operator(basis, a):
    """Diagonal ``exp(-i sum_k n_k k.a)`` in the occupation basis."""
    a = np.atleast_1d(np.asarray(a, dtype=float))
    phases = basis.states @ (basis.modeset.k @ a)
    return FockOperator(np.diag(np.exp(-1j * phases)), basis)
