"""Unitary evolution, Heisenberg and interaction pictures, and the S operator.

Every exponential goes through a Hermitian eigendecomposition, so evolution
operators are unitary to roundoff and the group law holds phase by phase.
Operator identities that involve particle-raising products are checked on
the safe subspace transported to time ``t``; see :func:`transported_safe`.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import ContractViolation, ParameterError, ShapeError
from .fock import FockOperator, commutator, field_operator_sparse, fock_inner, opnorm, safe_subspace
from .field import (
    FieldConfig,
    delta_eps_gradient,
    delta_eps_kernel,
    field_amplitudes,
    phi0,
    pi0,
    grad_phi0,
    spectral_weights,
)
from .hamiltonian import (
    Interaction,
    QuadratureGrid,
    assemble_parts,
    check_quadrature,
    extended_basis,
    free_frequencies,
    _block_power,
)

__all__ = [
    "Model",
    "Propagator",
    "SMatrixResult",
    "FieldEquationResidual",
    "evolve",
    "heisenberg_field",
    "heisenberg_eom_residual",
    "field_equation_residual",
    "interaction_field",
    "interaction_hamiltonian",
    "interaction_hamiltonian_from_fields",
    "s_operator",
    "conjugation_residual",
    "s_ode_residual",
    "dyson_first_order_residual",
    "transition_probability",
    "transported_safe",
    "fingerprint",
]


class Propagator:
    """Spectral calculus for ``exp(-i (t - tau) H)``."""

    def __init__(self, hamiltonian: FockOperator, tau=0.0):
        h = hamiltonian.matrix
        scale = max(1.0, opnorm(h))
        if opnorm(h - h.conj().T) > 1e-12 * scale:
            raise ContractViolation("propagator needs a Hermitian generator")
        self.hamiltonian = hamiltonian
        self.tau = float(tau)
        self.eigenvalues, self.eigenvectors = np.linalg.eigh(h)

    @property
    def basis(self):
        return self.hamiltonian.basis

    def phases(self, t):
        return np.exp(-1j * (t - self.tau) * self.eigenvalues)

    def unitary(self, t):
        if t == self.tau:
            return np.eye(len(self.eigenvalues), dtype=complex)
        q = self.eigenvectors
        return (q * self.phases(t)) @ q.conj().T

    def conjugate(self, a, t):
        """``exp(i s H) a exp(-i s H)`` with ``s = t - tau``."""
        if t == self.tau:
            return np.array(a, copy=True)
        q = self.eigenvectors
        ph = self.phases(t)
        inner = np.conj(ph)[:, None] * (q.conj().T @ a @ q) * ph[None, :]
        return q @ inner @ q.conj().T

    def conjugate_derivative(self, a, t):
        """Exact ``d/dt`` of :meth:`conjugate`, i.e. ``i [H, a(t)]`` in the eigenbasis."""
        q = self.eigenvectors
        ph = self.phases(t)
        lam = self.eigenvalues
        inner = np.conj(ph)[:, None] * (q.conj().T @ a @ q) * ph[None, :]
        inner *= 1j * (lam[:, None] - lam[None, :])
        return q @ inner @ q.conj().T

    def reconstruction_error(self):
        q, lam = self.eigenvectors, self.eigenvalues
        return opnorm((q * lam) @ q.conj().T - self.hamiltonian.matrix)


def evolve(p: Propagator, t):
    return FockOperator(p.unitary(t), p.basis)


def fingerprint(cfg: FieldConfig, inter: Interaction, grid: QuadratureGrid | None = None):
    payload = dict(cfg.describe())
    payload.update({"g": inter.g, "N": inter.N, "vacuum_shift": inter.vacuum_shift})
    if grid is not None:
        payload["P"] = grid.P
    blob = json.dumps(payload, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


class Model:
    """A field configuration, an interaction and a quadrature, with cached operators.

    The quadratic part and the unit-coupling potential are assembled once and
    shared by :meth:`with_coupling`.
    """

    def __init__(self, cfg: FieldConfig, inter: Interaction, grid: QuadratureGrid, _parts=None):
        check_quadrature(cfg, inter, grid)
        self.cfg = cfg
        self.inter = inter
        self.grid = grid
        if _parts is not None:
            self.__dict__["_parts"] = _parts

    def __repr__(self):
        return f"Model(eps={self.cfg.eps}, g={self.inter.g}, N={self.inter.N}, P={self.grid.P})"

    @property
    def basis(self):
        return self.cfg.basis

    @property
    def tau(self):
        return self.cfg.tau

    @cached_property
    def _parts(self):
        return assemble_parts(self.cfg, self.inter, self.grid)

    def _shifted(self, m):
        if self.inter.vacuum_shift:
            return m - m[0, 0].real * np.eye(len(m))
        return m

    @cached_property
    def hamiltonian(self):
        quad, pot = self._parts
        return FockOperator(self._shifted(quad + self.inter.g * pot), self.basis, hermitian=True)

    @cached_property
    def free_hamiltonian(self):
        return FockOperator(self._shifted(self._parts[0]), self.basis, hermitian=True)

    @cached_property
    def potential(self):
        """Unit-coupling potential ``(1/(N+1)) \\int chi phi0^(N+1)``."""
        return self._parts[1]

    @cached_property
    def propagator(self):
        return Propagator(self.hamiltonian, self.tau)

    @cached_property
    def free_propagator(self):
        return Propagator(self.free_hamiltonian, self.tau)

    @cached_property
    def fingerprint(self):
        return fingerprint(self.cfg, self.inter, self.grid)

    def with_coupling(self, g):
        return Model(self.cfg, self.inter.with_g(g), self.grid, _parts=self._parts)

    def with_eps(self, eps):
        cfg = self.cfg.with_eps(eps)
        parts = None
        # without a damper, eps enters only through the mode weights
        if (
            not cfg.damper.enabled
            and "_parts" in self.__dict__
            and np.array_equal(spectral_weights(cfg), spectral_weights(self.cfg))
        ):
            parts = self._parts
        return Model(cfg, self.inter, self.grid, _parts=parts)

    def with_mollifier(self, mollifier):
        return Model(self.cfg.with_mollifier(mollifier), self.inter, self.grid)

    @property
    def vacuum_offset(self):
        """Constant removed from ``H - H0`` by the vacuum shift."""
        if not self.inter.vacuum_shift:
            return 0.0
        quad, pot = self._parts
        return float((quad + self.inter.g * pot)[0, 0].real - quad[0, 0].real)


def _free_operator(model, x, kind):
    fn = {"phi": phi0, "pi": pi0}[kind]
    return fn(model.cfg, x, model.tau).matrix


def heisenberg_field(model: Model, x, t, kind="phi"):
    """``exp(i s H) phi0(x, tau) exp(-i s H)``; ``kind="pi"`` conjugates ``pi0``."""
    a = _free_operator(model, x, kind)
    return FockOperator(model.propagator.conjugate(a, t), model.basis, hermitian=True)


def transported_safe(model: Model, t, margin):
    """Columns spanning ``exp(i s H)`` applied to ``safe_subspace(margin)``."""
    safe = safe_subspace(model.basis, margin)
    u = model.propagator.unitary(t)
    return u.conj().T[:, safe]


def _default_margin(model, margin):
    if margin is None:
        margin = min(model.inter.N + 2, model.basis.N_max)
    return margin


def heisenberg_eom_residual(model: Model, x, t, h, kind="phi", margin=None):
    """Central-difference residual of ``d/dt field = i [H, field]`` on the transported safe subspace."""
    if not h > 0:
        raise ParameterError(f"step must be > 0, got {h}")
    margin = _default_margin(model, margin)
    a = _free_operator(model, x, kind)
    p = model.propagator
    fd = (p.conjugate(a, t + h) - p.conjugate(a, t - h)) / (2 * h)
    exact = 1j * commutator(model.hamiltonian.matrix, p.conjugate(a, t))
    return opnorm((fd - exact) @ transported_safe(model, t, margin))


@dataclass(frozen=True)
class FieldEquationResidual:
    smeared_mollified: float
    smeared_raw: float
    first_order_mollified: float
    first_order_raw: float


def field_equation_residual(model: Model, t, xi, margin=None):
    """Smeared residuals of the interacting field equations at time ``t``.

    ``xi`` is a callable of positions of shape ``(n, d)``.  The second-order
    equation is ``d/dt pi - laplacian phi + m^2 phi + g phi^N = 0``.  In the
    mollified form the right-hand sides are convolved with ``delta_eps`` and
    damped, as the commutator algebra produces them; the raw form uses the
    bare local expressions.  Time derivatives are exact (spectral), and
    residuals are measured on the transported safe subspace.
    """
    cfg, inter = model.cfg, model.inter
    margin = inter.N + 2 if margin is None else margin
    cols = transported_safe(model, t, margin)
    p = model.propagator
    d = cfg.modeset.d
    m2 = cfg.modeset.m ** 2
    pts = model.grid.points
    w = model.grid.weight
    xi_vals = np.asarray(xi(pts), dtype=float)
    chi = cfg.damper.value(cfg.eps, pts)

    S = model.basis.size
    lhs2 = np.zeros((S, S), dtype=complex)
    lhs1 = np.zeros_like(lhs2)
    raw2 = np.zeros_like(lhs2)
    raw1 = np.zeros_like(lhs2)
    rhs2 = np.zeros_like(lhs2)
    rhs1 = np.zeros_like(lhs2)
    laplacian_weight = -np.sum(cfg.modeset.k ** 2, axis=1)

    for y, xv, c in zip(pts, xi_vals, chi):
        phi_y = p.conjugate(_free_operator(model, y, "phi"), t)
        pi_y = p.conjugate(_free_operator(model, y, "pi"), t)
        pow_y = np.linalg.matrix_power(phi_y, inter.N)
        # smeared test function and its gradient at y
        ker = np.array([delta_eps_kernel(cfg, y - xx) for xx in pts])
        dker = np.array([delta_eps_gradient(cfg, y - xx) for xx in pts])
        smeared = w * np.sum(xi_vals * ker).real
        smeared_grad = w * (xi_vals @ dker).real
        grad_term = np.zeros_like(lhs2)
        for mu in range(d):
            grad_mu = p.conjugate(grad_phi0(cfg, y, model.tau, mu).matrix, t)
            grad_term += grad_mu * smeared_grad[mu]
        rhs2 += w * c * (-grad_term - (m2 * phi_y + inter.g * pow_y) * smeared)
        rhs1 += w * c * pi_y * smeared
        if xv != 0:
            dpi = p.conjugate_derivative(_free_operator(model, y, "pi"), t)
            dphi = p.conjugate_derivative(_free_operator(model, y, "phi"), t)
            psi = field_amplitudes(cfg, y, model.tau, "phi") * laplacian_weight
            lap = p.conjugate(field_operator_sparse(psi, cfg.basis).toarray(), t)
            lhs2 += w * xv * dpi
            lhs1 += w * xv * dphi
            raw2 += w * xv * (dpi - lap + m2 * phi_y + inter.g * pow_y)
            raw1 += w * xv * (dphi - pi_y)

    return FieldEquationResidual(
        smeared_mollified=opnorm((lhs2 - rhs2) @ cols),
        smeared_raw=opnorm(raw2 @ cols),
        first_order_mollified=opnorm((lhs1 - rhs1) @ cols),
        first_order_raw=opnorm(raw1 @ cols),
    )


@dataclass(frozen=True)
class SMatrixResult:
    operator: FockOperator
    tau: float
    t: float
    fingerprint: str

    def unitarity_defect(self):
        s = self.operator.matrix
        return opnorm(s.conj().T @ s - np.eye(len(s)))


def s_operator(model: Model, t):
    """``S = exp(i s H0) exp(-i s H)`` with ``s = t - tau``."""
    u0 = model.free_propagator.unitary(t)
    u = model.propagator.unitary(t)
    s = u0.conj().T @ u
    return SMatrixResult(FockOperator(s, model.basis), model.tau, float(t), model.fingerprint)


def interaction_field(model: Model, x, t):
    """Free-picture field ``exp(i s H0) phi0(x, tau) exp(-i s H0)``."""
    a = _free_operator(model, x, "phi")
    return FockOperator(model.free_propagator.conjugate(a, t), model.basis, hermitian=True)


def interaction_hamiltonian(model: Model, t, g=None):
    """``H_I(t) = exp(i s H0) (H - H0) exp(-i s H0)``."""
    g = model.inter.g if g is None else g
    v = g * model.potential - model.vacuum_offset * np.eye(model.basis.size)
    return FockOperator(model.free_propagator.conjugate(v, t), model.basis, hermitian=True)


def interaction_hamiltonian_from_fields(model: Model, t, g=None):
    """``(g/(N+1)) \\int chi phi_I^(N+1)`` built from freely evolving mode amplitudes.

    Valid when the free Hamiltonian is mode-diagonal (undamped box); each
    amplitude then rotates with ``exp(i omega_k (t - tau))``.
    """
    cfg, inter = model.cfg, model.inter
    g = inter.g if g is None else g
    ext = extended_basis(cfg, inter)
    S = cfg.basis.size
    rot = np.exp(1j * free_frequencies(cfg) * (t - model.tau))
    pts = model.grid.points
    chi = cfg.damper.value(cfg.eps, pts)
    out = np.zeros((S, S), dtype=complex)
    for y, c in zip(pts, chi):
        psi = field_amplitudes(cfg, y, model.tau, "phi") * rot
        op = field_operator_sparse(psi, ext)
        out += (model.grid.weight * c) * _block_power(op, S, inter.N + 1)
    out = g * out / (inter.N + 1)
    out = 0.5 * (out + out.conj().T) - model.vacuum_offset * np.eye(S)
    return FockOperator(out, cfg.basis, hermitian=True)


def conjugation_residual(model: Model, x, t):
    """``|| phi(x, t) - S^-1 phi_I(x, t) S ||``."""
    s = s_operator(model, t).operator.matrix
    phi_i = interaction_field(model, x, t).matrix
    rebuilt = np.linalg.solve(s, phi_i @ s)
    return opnorm(heisenberg_field(model, x, t).matrix - rebuilt)


def s_ode_residual(model: Model, t, h):
    """Central-difference residual of ``dS/dt = -i H_I(t) S(t)``."""
    if not h > 0:
        raise ParameterError(f"step must be > 0, got {h}")
    sp = s_operator(model, t + h).operator.matrix
    sm = s_operator(model, t - h).operator.matrix
    s0 = s_operator(model, t).operator.matrix
    hi = interaction_hamiltonian(model, t).matrix
    return opnorm((sp - sm) / (2 * h) + 1j * hi @ s0)


def dyson_first_order_residual(model: Model, t, dg=1e-3, nodes=48):
    """``|| dS/dg at g=0 + i \\int_tau^t H_I^(g=1)(s) ds ||``.

    The coupling derivative is a central difference; the time integral uses
    Gauss-Legendre quadrature with ``nodes`` points.
    """
    s_plus = s_operator(model.with_coupling(dg), t).operator.matrix
    s_minus = s_operator(model.with_coupling(-dg), t).operator.matrix
    dsdg = (s_plus - s_minus) / (2 * dg)
    base = model.with_coupling(0.0)
    x, wts = np.polynomial.legendre.leggauss(nodes)
    half = 0.5 * (t - model.tau)
    integral = np.zeros_like(dsdg)
    for xi, wi in zip(x, wts):
        s = model.tau + half * (xi + 1)
        integral += wi * half * interaction_hamiltonian(base, s, g=1.0).matrix
    return opnorm(dsdg + 1j * integral)


def transition_probability(s, phi1, phi2):
    """``|<phi2, S phi1>|^2`` with the Fock inner product."""
    op = s.operator if isinstance(s, SMatrixResult) else s
    phi1, phi2 = np.asarray(phi1), np.asarray(phi2)
    if phi1.shape != (op.basis.size,) or phi2.shape != (op.basis.size,):
        raise ShapeError("state vectors do not match the operator basis")
    return abs(fock_inner(phi2, op @ phi1)) ** 2
