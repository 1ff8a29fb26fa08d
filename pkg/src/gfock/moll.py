"""Plateau profiles, the spectral mollifier and the position-space damper.

The mollifier is defined by its Fourier profile ``F(k)``: a smooth,
radial, compactly supported function equal to 1 near the origin.  The
position-space kernel is recovered by a Fourier integral under the symmetric
convention, normalised so that it integrates to ``F(0) = 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .errors import ParameterError, ResolutionError

__all__ = [
    "SpectralProfile",
    "Mollifier",
    "Damper",
    "make_plateau_profile",
    "mollifier_weight",
    "position_kernel",
    "support_radius",
]


def _bump(s):
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    pos = s > 0
    out[pos] = np.exp(-1.0 / s[pos])
    return out


@dataclass(frozen=True)
class SpectralProfile:
    """Radial C-infinity plateau: 1 on ``[0, r_inner]``, 0 beyond ``r_outer``."""

    r_inner: float
    r_outer: float

    def __post_init__(self):
        if not (self.r_inner > 0):
            raise ParameterError(f"r_inner must be > 0, got {self.r_inner}")
        if not (self.r_outer > self.r_inner):
            raise ParameterError(
                f"r_outer must exceed r_inner, got ({self.r_inner}, {self.r_outer})"
            )

    def eval(self, r):
        r = np.abs(np.asarray(r, dtype=float))
        out = np.where(r <= self.r_inner, 1.0, 0.0)
        band = (r > self.r_inner) & (r < self.r_outer)
        if np.any(band):
            rb = r[band] if r.ndim else r
            num = _bump(self.r_outer - rb)
            den = _bump(rb - self.r_inner) + num
            if r.ndim:
                out[band] = num / den
            else:
                out = num / den
        return out if r.ndim else float(out)

    __call__ = eval

    @property
    def tag(self):
        return f"plateau({self.r_inner:g},{self.r_outer:g})"


def make_plateau_profile(r_inner, r_outer):
    """Build a plateau profile from its two radii.

    The transition uses the quotient ``B(b - r) / (B(r - a) + B(b - r))`` with
    ``B(s) = exp(-1/s)`` for ``s > 0``, so every derivative vanishes at both
    junctions.
    """
    return SpectralProfile(float(r_inner), float(r_outer))


@dataclass(frozen=True)
class Mollifier:
    profile: SpectralProfile
    dim: int = 1

    def __post_init__(self):
        if self.dim not in (1, 2, 3):
            raise ParameterError(f"dimension must be 1, 2 or 3, got {self.dim}")

    @property
    def tag(self):
        return f"{self.profile.tag}/d{self.dim}"


@dataclass(frozen=True)
class Damper:
    """Position-space plateau ``chi(eps * y)``; identically 1 when disabled."""

    profile: SpectralProfile = field(default_factory=lambda: make_plateau_profile(1.0, 2.0))
    enabled: bool = False

    def value(self, eps, y):
        y = np.atleast_2d(np.asarray(y, dtype=float))
        if not self.enabled:
            return np.ones(y.shape[0])
        return self.profile.eval(eps * np.linalg.norm(y, axis=1))


def _check_eps(eps):
    if not (eps > 0):
        raise ParameterError(f"eps must be > 0, got {eps}")


def mollifier_weight(m, eps, k):
    """Spectral weight ``F(eps * |k|)`` for one momentum or an array of them.

    ``k`` may be a scalar, a single vector of length ``dim`` or an array of
    shape ``(n, dim)``.
    """
    _check_eps(eps)
    k = np.asarray(k, dtype=float)
    if k.ndim == 0:
        r = abs(float(k))
    elif k.ndim == 1 and m.dim > 1 and k.shape[0] == m.dim:
        r = float(np.linalg.norm(k))
    elif k.ndim == 2:
        r = np.linalg.norm(k, axis=1)
    else:
        r = np.abs(k)
    return m.profile.eval(eps * r)


def _gauss_panels(edges, order=24):
    x, w = np.polynomial.legendre.leggauss(order)
    lo, hi = edges[:-1, None], edges[1:, None]
    nodes = 0.5 * (hi - lo) * (x + 1) + lo
    weights = 0.5 * (hi - lo) * w
    return nodes.ravel(), weights.ravel()


def _radial_transform(profile, dim, r, chunk=4096):
    """Unit-scale kernel ``(2 pi)^-d \\int F(|k|) exp(i k.x) d^d k`` at radii ``r``."""
    r = np.abs(np.asarray(r, dtype=float))
    rmax = float(r.max()) if r.size else 0.0
    n_inner = max(4, math.ceil(profile.r_inner * rmax / math.pi))
    n_band = max(8, math.ceil((profile.r_outer - profile.r_inner) * rmax / math.pi))
    edges = np.concatenate(
        [
            np.linspace(0.0, profile.r_inner, n_inner + 1),
            np.linspace(profile.r_inner, profile.r_outer, n_band + 1)[1:],
        ]
    )
    k, w = _gauss_panels(edges)
    wf = w * profile.eval(k)
    out = np.empty_like(r)
    for start in range(0, r.size, chunk):
        rr = r.ravel()[start : start + chunk]
        kr = np.outer(k, rr)
        if dim == 1:
            vals = (wf @ np.cos(kr)) / math.pi
        elif dim == 2:
            vals = ((wf * k) @ special.j0(kr)) / (2 * math.pi)
        else:
            # k^2 * sin(kr)/(kr) keeps r = 0 regular
            vals = ((wf * k * k) @ np.sinc(kr / math.pi)) / (2 * math.pi**2)
        out.ravel()[start : start + chunk] = vals
    return out


def position_kernel(m, eps, grid):
    """Samples of the position-space kernel ``eps^-d K(x / eps)``.

    Parameters
    ----------
    m : Mollifier
    eps : float
        Regularisation scale, > 0.
    grid : array_like
        1-D sample points.  For ``dim > 1`` they are radii.

    Returns
    -------
    numpy.ndarray
        Real samples; ``K`` has unit integral over ``R^d``.

    Raises
    ------
    ResolutionError
        When the grid spacing cannot resolve the band limit ``r_outer / eps``.
    """
    _check_eps(eps)
    x = np.asarray(grid, dtype=float)
    if x.size > 1:
        h = float(np.max(np.diff(np.sort(x))))
        if h > math.pi * eps / m.profile.r_outer:
            raise ResolutionError(
                f"grid spacing {h:.3g} exceeds pi*eps/r_outer = "
                f"{math.pi * eps / m.profile.r_outer:.3g}"
            )
    return _radial_transform(m.profile, m.dim, x / eps) / eps**m.dim


def support_radius(m, tol=1e-10, r_max=1000.0):
    """Unit-scale radius beyond which ``|K|`` stays below ``tol`` on ``[0, r_max]``.

    The kernel is band limited, hence not compactly supported; this is the
    effective support used to size grids and ladders.
    """
    r = np.linspace(0.0, r_max, int(r_max * 2) + 1)
    vals = np.abs(_radial_transform(m.profile, m.dim, r))
    above = np.nonzero(vals >= tol)[0]
    return float(r[min(above[-1] + 1, r.size - 1)]) if above.size else 0.0
