"""Regularised Hamiltonians by lattice quadrature of the operator density.

Field monomials are evaluated on an enlarged Fock basis with enough particle
headroom that every matrix element between states of the working basis is
exact, and only then projected back.  The free Hamiltonian therefore has the
exact harmonic spectrum on every retained state, including the top layer.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import CapacityError, ParameterError
from .fock import DEFAULT_MAX_STATES, FockOperator, basis_size, enumerate_basis, field_operator_sparse
from .field import field_amplitudes, spectral_weights

__all__ = [
    "Interaction",
    "QuadratureGrid",
    "quadrature_for",
    "check_quadrature",
    "extended_basis",
    "h_density",
    "assemble_parts",
    "assemble_h",
    "free_h",
    "free_frequencies",
    "free_spectrum_analytic",
]


@dataclass(frozen=True)
class Interaction:
    """Coupling ``g`` of the ``phi^(N+1) / (N+1)`` term.

    ``N + 1`` even keeps the spectrum bounded below for ``g > 0``; this is not
    enforced.
    """

    g: float = 0.0
    N: int = 3
    vacuum_shift: bool = False

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 2:
            raise ParameterError(f"N must be an integer >= 2, got {self.N}")

    def with_g(self, g):
        return Interaction(float(g), self.N, self.vacuum_shift)


@dataclass(frozen=True)
class QuadratureGrid:
    """Uniform lattice with ``P`` points per axis on the centred box."""

    P: int
    L: float
    d: int = 1

    def __post_init__(self):
        if self.P < 1:
            raise ParameterError(f"P must be >= 1, got {self.P}")

    @property
    def points(self):
        axis = -self.L / 2 + self.L * np.arange(self.P) / self.P
        mesh = np.meshgrid(*([axis] * self.d), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    @property
    def weight(self):
        return (self.L / self.P) ** self.d


def min_points(n_max, N):
    return 2 * (N + 1) * n_max + 1


def quadrature_for(cfg, inter, factor=1):
    """Smallest lattice meeting the exactness bound, optionally refined."""
    P = factor * min_points(cfg.modeset.n_max, inter.N)
    return QuadratureGrid(P, cfg.modeset.L, cfg.modeset.d)


def check_quadrature(cfg, inter, grid):
    need = min_points(cfg.modeset.n_max, inter.N)
    if grid.P < need:
        raise ParameterError(
            f"quadrature invariant P >= 2*(N+1)*n_max+1 = {need} violated (P = {grid.P})"
        )
    if grid.L != cfg.modeset.L or grid.d != cfg.modeset.d:
        raise ParameterError("quadrature grid does not match the box")


def headroom(inter):
    return max(1, (inter.N + 1) // 2)


@lru_cache(maxsize=8)
def _enlarged(modeset, N_max):
    return enumerate_basis(modeset, N_max, max_states=10**9)


def extended_basis(cfg, inter, max_states=DEFAULT_MAX_STATES):
    """Working basis plus ``floor((N+1)/2)`` layers of headroom.

    The first ``cfg.basis.size`` states coincide with the working basis.
    """
    N_ext = cfg.basis.N_max + headroom(inter)
    size = basis_size(cfg.modeset.M, N_ext)
    if size > max_states:
        raise CapacityError(f"power workspace of {size} states exceeds the bound {max_states}")
    return _enlarged(cfg.modeset, N_ext)


def _block_power(op, S, p):
    # rows/cols of op^p restricted to the first S states
    cols = op[:, :S].toarray()
    for _ in range(p - 1):
        cols = op @ cols
    return cols[:S]


def _block_square(op, S):
    return (op[:S, :] @ op[:, :S]).toarray()


def _density_parts(cfg, inter, ext, y, t):
    S = cfg.basis.size
    m2 = cfg.modeset.m ** 2
    phi = field_operator_sparse(field_amplitudes(cfg, y, t, "phi"), ext)
    pi = field_operator_sparse(field_amplitudes(cfg, y, t, "pi"), ext)
    quad = 0.5 * _block_square(pi, S) + 0.5 * m2 * _block_square(phi, S)
    for mu in range(cfg.modeset.d):
        grad = field_operator_sparse(field_amplitudes(cfg, y, t, "grad", mu), ext)
        quad += 0.5 * _block_square(grad, S)
    pot = _block_power(phi, S, inter.N + 1) / (inter.N + 1)
    return quad, pot


def h_density(cfg, inter, y, t):
    """Operator density at ``(y, t)``; exact matrix elements on the working basis."""
    ext = extended_basis(cfg, inter)
    quad, pot = _density_parts(cfg, inter, ext, y, t)
    dens = quad + inter.g * pot
    return FockOperator(0.5 * (dens + dens.conj().T), cfg.basis, hermitian=True)


def assemble_parts(cfg, inter, grid, t=None):
    """Quadratic part and unit-coupling potential, both damped and integrated.

    Returns ``(quadratic, potential)`` as dense arrays; the Hamiltonian is
    ``quadratic + g * potential``.
    """
    check_quadrature(cfg, inter, grid)
    t = cfg.tau if t is None else t
    ext = extended_basis(cfg, inter)
    S = cfg.basis.size
    quad = np.zeros((S, S), dtype=complex)
    pot = np.zeros((S, S), dtype=complex)
    pts = grid.points
    chi = cfg.damper.value(cfg.eps, pts)
    for y, c in zip(pts, chi):
        if c == 0:
            continue
        q, v = _density_parts(cfg, inter, ext, y, t)
        quad += (grid.weight * c) * q
        pot += (grid.weight * c) * v
    quad = 0.5 * (quad + quad.conj().T)
    pot = 0.5 * (pot + pot.conj().T)
    return quad, pot


def _finish(matrix, cfg, inter):
    if inter.vacuum_shift:
        matrix = matrix - matrix[0, 0].real * np.eye(len(matrix))
    return FockOperator(matrix, cfg.basis, hermitian=True)


def assemble_h(cfg, inter, grid):
    """Damped, quadrature-integrated Hamiltonian at the reference time."""
    quad, pot = assemble_parts(cfg, inter, grid)
    return _finish(quad + inter.g * pot, cfg, inter)


def free_h(cfg, grid, inter=None):
    inter = Interaction(0.0) if inter is None else inter.with_g(0.0)
    quad, _ = assemble_parts(cfg, inter, grid)
    return _finish(quad, cfg, inter)


def free_frequencies(cfg):
    """Mode energies of the undamped free Hamiltonian: ``k0 F(eps k)^2``."""
    return cfg.modeset.k0 * spectral_weights(cfg) ** 2


def free_spectrum_analytic(cfg):
    """``E_vac + sum_k n_k omega_k`` per basis state (undamped box)."""
    w = free_frequencies(cfg)
    return 0.5 * w.sum() + cfg.basis.states @ w
