"""Truncated bosonic Fock space in the occupation-number basis.

States are occupation vectors over a finite set of box momenta, truncated at
a total particle number ``N_max``.  Creation operators drop any transition
that would leave the truncated space (hard cutoff), so ladder identities hold
exactly only on the safe subspace of states far enough below the cutoff.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import sparse

from .errors import CapacityError, ParameterError, ShapeError

__all__ = [
    "ModeSet",
    "FockBasis",
    "FockOperator",
    "DEFAULT_MAX_STATES",
    "basis_size",
    "enumerate_basis",
    "a_plus",
    "a_minus",
    "field_operator_sparse",
    "fock_inner",
    "fock_norm",
    "safe_subspace",
    "vacuum",
    "number_state",
    "number_operator",
    "commutator",
    "opnorm",
]

DEFAULT_MAX_STATES = 20_000


@dataclass(frozen=True)
class ModeSet:
    """Box momenta ``k = 2 pi n / L`` with ``|n_i| <= n_max`` in ``d`` dimensions."""

    d: int = 1
    L: float = 2 * math.pi
    n_max: int = 2
    m: float = 1.0

    def __post_init__(self):
        if self.d not in (1, 2, 3):
            raise ParameterError(f"d must be 1, 2 or 3, got {self.d}")
        if not self.L > 0:
            raise ParameterError(f"L must be > 0, got {self.L}")
        if self.n_max < 0:
            raise ParameterError(f"n_max must be >= 0, got {self.n_max}")
        if not self.m > 0:
            raise ParameterError(f"mass must be > 0, got {self.m}")

    @cached_property
    def integers(self):
        r = range(-self.n_max, self.n_max + 1)
        return np.array(list(itertools.product(r, repeat=self.d)), dtype=int)

    @cached_property
    def k(self):
        return 2 * math.pi * self.integers / self.L

    @cached_property
    def k0(self):
        return np.sqrt(np.sum(self.k**2, axis=1) + self.m**2)

    @property
    def M(self):
        return len(self.integers)

    @property
    def volume(self):
        return self.L**self.d

    @cached_property
    def negation(self):
        """Index permutation mapping each mode to the mode with momentum ``-k``."""
        lookup = {tuple(n): i for i, n in enumerate(self.integers)}
        return np.array([lookup[tuple(-n)] for n in self.integers])


def basis_size(M, N_max):
    return sum(math.comb(n + M - 1, n) for n in range(N_max + 1))


def _compositions(total, parts):
    # descending lexicographic order
    if parts == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


@dataclass(frozen=True, eq=False)
class FockBasis:
    modeset: ModeSet
    N_max: int
    states: np.ndarray = field(repr=False)

    @property
    def size(self):
        return len(self.states)

    @property
    def M(self):
        return self.modeset.M

    def __len__(self):
        return self.size

    def __eq__(self, other):
        return (
            isinstance(other, FockBasis)
            and self.modeset == other.modeset
            and self.N_max == other.N_max
        )

    def __hash__(self):
        return hash((self.modeset, self.N_max))

    @cached_property
    def index(self):
        return {tuple(s): i for i, s in enumerate(self.states.tolist())}

    @cached_property
    def layer(self):
        return self.states.sum(axis=1)

    def ordinal(self, occupation):
        try:
            return self.index[tuple(int(n) for n in occupation)]
        except KeyError:
            raise ParameterError(f"occupation {tuple(occupation)} not in basis") from None

    @cached_property
    def raising_triplets(self):
        """``(mode, dst, src, amp)`` arrays for every truncated creation transition."""
        mode, src, dst, amp = [], [], [], []
        below = np.nonzero(self.layer < self.N_max)[0]
        for k in range(self.M):
            for s in below:
                occ = self.states[s].copy()
                n = occ[k]
                occ[k] += 1
                mode.append(k)
                src.append(s)
                dst.append(self.index[tuple(occ.tolist())])
                amp.append(math.sqrt(n + 1))
        return (np.array(mode, dtype=int), np.array(dst, dtype=int),
                np.array(src, dtype=int), np.array(amp))

    @cached_property
    def raising(self):
        """Per-mode sparse matrices of the truncated creation operators."""
        mode, dst, src, amp = self.raising_triplets
        return [
            sparse.csr_matrix(
                (amp[mode == k], (dst[mode == k], src[mode == k])), shape=(self.size, self.size)
            )
            for k in range(self.M)
        ]


def enumerate_basis(modeset, N_max, max_states=DEFAULT_MAX_STATES):
    """Occupation basis graded by particle number, descending-lexicographic within a layer.

    The vacuum has ordinal 0.

    Raises
    ------
    CapacityError
        If the basis would hold more than ``max_states`` states.
    """
    if N_max < 0:
        raise ParameterError(f"N_max must be >= 0, got {N_max}")
    size = basis_size(modeset.M, N_max)
    if size > max_states:
        raise CapacityError(f"basis of {size} states exceeds the bound {max_states}")
    states = [c for n in range(N_max + 1) for c in _compositions(n, modeset.M)]
    return FockBasis(modeset, int(N_max), np.array(states, dtype=int).reshape(size, modeset.M))


class FockOperator:
    """A square matrix over a :class:`FockBasis`."""

    __array_priority__ = 100

    def __init__(self, matrix, basis, hermitian=False):
        matrix = matrix.toarray() if sparse.issparse(matrix) else np.asarray(matrix)
        if matrix.shape != (basis.size, basis.size):
            raise ShapeError(f"matrix shape {matrix.shape} does not match basis size {basis.size}")
        if hermitian and np.max(np.abs(matrix - matrix.conj().T), initial=0.0) >= 1e-12:
            raise ParameterError("matrix flagged Hermitian is not")
        self.matrix = matrix
        self.basis = basis
        self.hermitian = bool(hermitian)

    def __repr__(self):
        return f"FockOperator(size={self.basis.size}, hermitian={self.hermitian})"

    def _other(self, other):
        if isinstance(other, FockOperator):
            if other.basis != self.basis:
                raise ShapeError("operators act on different bases")
            return other.matrix
        return other

    def dag(self):
        return FockOperator(self.matrix.conj().T, self.basis, self.hermitian)

    def __matmul__(self, other):
        if isinstance(other, FockOperator):
            return FockOperator(self.matrix @ self._other(other), self.basis)
        v = np.asarray(other)
        if v.shape[0] != self.basis.size:
            raise ShapeError(f"vector of length {v.shape[0]} on basis of size {self.basis.size}")
        return self.matrix @ v

    def __add__(self, other):
        herm = self.hermitian and isinstance(other, FockOperator) and other.hermitian
        return FockOperator(self.matrix + self._other(other), self.basis, herm)

    def __sub__(self, other):
        herm = self.hermitian and isinstance(other, FockOperator) and other.hermitian
        return FockOperator(self.matrix - self._other(other), self.basis, herm)

    def __mul__(self, c):
        herm = self.hermitian and np.isreal(c)
        return FockOperator(self.matrix * c, self.basis, herm)

    __rmul__ = __mul__

    def __neg__(self):
        return FockOperator(-self.matrix, self.basis, self.hermitian)

    def toarray(self):
        return self.matrix

    def columns(self, indices):
        return self.matrix[:, indices]

    def norm(self, indices=None):
        return opnorm(self.matrix if indices is None else self.matrix[:, indices])


def opnorm(a):
    """Spectral norm; 0 for an empty matrix."""
    a = np.asarray(a)
    if a.size == 0:
        return 0.0
    return float(np.linalg.norm(a, 2))


def commutator(a, b):
    return a @ b - b @ a


def _check_psi(psi, basis):
    psi = np.asarray(psi, dtype=complex)
    if psi.shape != (basis.M,):
        raise ShapeError(f"one-particle vector of shape {psi.shape}, expected ({basis.M},)")
    return psi


def _raising_sparse(psi, basis):
    mode, dst, src, amp = basis.raising_triplets
    return sparse.csr_matrix(
        (amp * psi[mode], (dst, src)), shape=(basis.size, basis.size), dtype=complex
    )


def a_plus(psi, basis):
    """Creation operator ``sum_k psi_k a+_k`` with hard cutoff at ``N_max``."""
    psi = _check_psi(psi, basis)
    return FockOperator(_raising_sparse(psi, basis), basis)


def a_minus(psi, basis):
    """Annihilation operator ``sum_k conj(psi_k) a_k``: the adjoint of :func:`a_plus`."""
    return a_plus(psi, basis).dag()


def field_operator_sparse(psi, basis):
    """Sparse ``a_plus(psi) + a_minus(psi)``."""
    up = _raising_sparse(_check_psi(psi, basis), basis)
    return (up + up.conj().T).tocsr()


def _check_vectors(u, v):
    u, v = np.asarray(u), np.asarray(v)
    if u.shape != v.shape:
        raise ShapeError(f"vectors of shapes {u.shape} and {v.shape}")
    return u, v


def fock_inner(u, v):
    """``<u, v>``, antilinear in ``u``."""
    u, v = _check_vectors(u, v)
    return complex(np.vdot(u, v))


def fock_norm(u):
    return math.sqrt(max(fock_inner(u, u).real, 0.0))


def safe_subspace(basis, margin):
    """Ordinals of states with at most ``N_max - margin`` particles."""
    if not 0 <= margin <= basis.N_max:
        raise ParameterError(f"margin must lie in [0, {basis.N_max}], got {margin}")
    return np.nonzero(basis.layer <= basis.N_max - margin)[0]


def vacuum(basis):
    v = np.zeros(basis.size, dtype=complex)
    v[0] = 1.0
    return v


def number_state(basis, occupation):
    v = np.zeros(basis.size, dtype=complex)
    v[basis.ordinal(occupation)] = 1.0
    return v


def number_operator(basis, mode=None):
    diag = basis.layer if mode is None else basis.states[:, mode]
    return FockOperator(np.diag(diag.astype(complex)), basis, hermitian=True)
