"""Scalar nonlinear generalized functions on an interval.

A generalized function is handled through a representative: a deterministic
map ``eps -> samples`` on a fixed uniform grid.  Products, powers and
derivatives act rung by rung; association is tested by pairing with test
functions along a decreasing epsilon ladder and extrapolating to ``eps = 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate

from .errors import DomainError, LadderError, ParameterError, ResolutionError, ShapeError
from .moll import Mollifier, make_plateau_profile, position_kernel

__all__ = [
    "SampleGrid",
    "EpsilonLadder",
    "Representative",
    "AssociationReport",
    "heaviside_rep",
    "dirac_rep",
    "constant_rep",
    "gf_product",
    "gf_power",
    "gf_derivative",
    "grid_derivative",
    "pair",
    "integral",
    "associate",
    "bump_test_function",
    "window_test_function",
    "transition_width",
    "default_setup",
]

SLOPE_THRESHOLD = 0.5
LIMIT_RTOL = 1e-4
NOISE_RTOL = 1e-10


@dataclass(frozen=True)
class SampleGrid:
    """Uniform grid on ``[lo, hi]`` including both endpoints.

    ``rule`` selects the per-rung derivative: ``"spectral"`` (linear detrend
    followed by an FFT derivative, for functions flat at both ends) or
    ``"fd4"`` (fourth-order central differences).
    """

    lo: float
    hi: float
    n: int
    rule: str = "spectral"

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ParameterError(f"need lo < hi, got [{self.lo}, {self.hi}]")
        if self.n < 16:
            raise ParameterError(f"need at least 16 samples, got {self.n}")
        if self.rule not in ("spectral", "fd4"):
            raise ParameterError(f"unknown derivative rule {self.rule!r}")

    @property
    def h(self):
        return (self.hi - self.lo) / (self.n - 1)

    @property
    def x(self):
        return np.linspace(self.lo, self.hi, self.n)

    @property
    def period(self):
        return self.hi - self.lo


@dataclass(frozen=True)
class EpsilonLadder:
    eps: tuple

    def __post_init__(self):
        e = np.asarray(self.eps, dtype=float)
        if e.ndim != 1 or e.size == 0:
            raise LadderError("ladder must be a non-empty sequence")
        if np.any(e <= 0):
            raise LadderError("ladder values must be positive")
        if np.any(np.diff(e) >= 0):
            raise LadderError("ladder must be strictly decreasing")
        object.__setattr__(self, "eps", tuple(float(v) for v in e))

    @classmethod
    def geometric(cls, eps0, rungs, ratio=0.5):
        return cls(tuple(eps0 * ratio**j for j in range(rungs + 1)))

    def __len__(self):
        return len(self.eps)

    def __iter__(self):
        return iter(self.eps)

    def sub(self, indices):
        return EpsilonLadder(tuple(self.eps[i] for i in sorted(indices)))


class Representative:
    """An epsilon-indexed family of samples on one grid.

    Supports ``+``, ``-``, ``*`` (with another representative or a scalar),
    integer powers and :meth:`derivative`.
    """

    def __init__(self, generator: Callable[[float], np.ndarray], grid: SampleGrid, tag="anon"):
        self.generator = generator
        self.grid = grid
        self.tag = tag

    def __call__(self, eps):
        if not eps > 0:
            raise ParameterError(f"eps must be > 0, got {eps}")
        vals = np.asarray(self.generator(float(eps)))
        if vals.shape != (self.grid.n,):
            raise ShapeError(f"{self.tag}: expected {self.grid.n} samples, got {vals.shape}")
        return vals

    def __repr__(self):
        return f"Representative({self.tag})"

    def _check(self, other):
        if isinstance(other, Representative) and other.grid != self.grid:
            raise ShapeError(f"grid mismatch between {self.tag} and {other.tag}")

    def _lift(self, other, op, sym):
        if isinstance(other, Representative):
            self._check(other)
            return Representative(
                lambda e: op(self(e), other(e)), self.grid, f"({self.tag}{sym}{other.tag})"
            )
        c = complex(other) if np.iscomplexobj(other) else float(other)
        return Representative(lambda e: op(self(e), c), self.grid, f"({self.tag}{sym}{c:g})")

    def __add__(self, other):
        return self._lift(other, np.add, "+")

    __radd__ = __add__

    def __sub__(self, other):
        return self._lift(other, np.subtract, "-")

    def __rsub__(self, other):
        return (-1.0) * self + other

    def __mul__(self, other):
        return self._lift(other, np.multiply, "*")

    __rmul__ = __mul__

    def __neg__(self):
        return (-1.0) * self

    def __pow__(self, p):
        return gf_power(self, p)

    def derivative(self):
        return gf_derivative(self)


def constant_rep(grid, value=0.0, tag=None):
    vals = np.full(grid.n, value, dtype=complex if np.iscomplexobj(value) else float)
    return Representative(lambda e: vals, grid, tag or f"{value:g}")


def _check_contains_zero(grid):
    if not grid.lo < 0 < grid.hi:
        raise DomainError(f"grid [{grid.lo}, {grid.hi}] must contain 0 strictly inside")


def _heaviside_samples(m, grid, eps, derivative=False):
    # Fourier series of the periodised kernel: exact for a band-limited kernel
    # up to tails at distance min(-lo, hi) / eps.
    P = grid.period
    nfft = grid.n - 1
    n_modes = math.ceil(m.profile.r_outer * P / (2 * math.pi * eps))
    if 2 * n_modes >= nfft:
        raise ResolutionError(
            f"grid with {grid.n} points cannot resolve eps={eps:g}: "
            f"needs more than {2 * n_modes + 1} points"
        )
    km = 2 * math.pi * np.arange(1, n_modes + 1) / P
    w = (2.0 / P) * m.profile.eval(eps * km) * np.exp(1j * km * grid.lo)
    coef = np.zeros(nfft, dtype=complex)
    if derivative:
        coef[1 : n_modes + 1] = w
        series = np.fft.ifft(coef).real * nfft + 1.0 / P
    else:
        coef[1 : n_modes + 1] = w / km
        series = np.fft.ifft(coef).imag * nfft + 0.5 + grid.x[:-1] / P
    periodic_part = series if derivative else series - grid.x[:-1] / P
    tail = periodic_part[0] + (0.0 if derivative else grid.hi / P)
    return np.append(series, tail)


def heaviside_rep(m: Mollifier, grid: SampleGrid):
    """Representative of the step function: ``H_eps = step * kernel_eps``.

    Raises
    ------
    DomainError
        If 0 is not strictly inside the grid.
    """
    _check_contains_zero(grid)
    if m.dim != 1:
        raise ParameterError("generalized functions are one-dimensional")
    return Representative(lambda e: _heaviside_samples(m, grid, e), grid, "H")


def dirac_rep(m: Mollifier, grid: SampleGrid):
    """``delta_eps``: the grid derivative of :func:`heaviside_rep`."""
    rep = gf_derivative(heaviside_rep(m, grid))
    rep.tag = "H'"
    return rep


def gf_product(a, b):
    if isinstance(a, Representative) and isinstance(b, Representative) and a.grid != b.grid:
        raise ShapeError(f"grid mismatch between {a.tag} and {b.tag}")
    return a * b


def gf_power(a, p):
    if int(p) != p or p < 1:
        raise ParameterError(f"power must be an integer >= 1, got {p}")
    p = int(p)
    return Representative(lambda e: a(e) ** p, a.grid, f"{a.tag}^{p}")


def _spectral_derivative(f, grid):
    x = grid.x
    slope = (f[-1] - f[0]) / grid.period
    g = f - f[0] - slope * (x - grid.lo)
    nfft = grid.n - 1
    k = 2 * math.pi * np.fft.fftfreq(nfft, d=grid.h)
    if nfft % 2 == 0:
        k[nfft // 2] = 0.0
    ghat = np.fft.fft(g[:-1])
    dg = np.fft.ifft(1j * k * ghat)
    if not np.iscomplexobj(f):
        dg = dg.real
    return np.append(dg, dg[0]) + slope


def _fd4_derivative(f, h):
    d = np.empty_like(f)
    d[2:-2] = (f[:-4] - 8 * f[1:-3] + 8 * f[3:-1] - f[4:]) / (12 * h)
    d[0] = (-25 * f[0] + 48 * f[1] - 36 * f[2] + 16 * f[3] - 3 * f[4]) / (12 * h)
    d[1] = (-3 * f[0] - 10 * f[1] + 18 * f[2] - 6 * f[3] + f[4]) / (12 * h)
    d[-1] = (25 * f[-1] - 48 * f[-2] + 36 * f[-3] - 16 * f[-4] + 3 * f[-5]) / (12 * h)
    d[-2] = (3 * f[-1] + 10 * f[-2] - 18 * f[-3] + 6 * f[-4] - f[-5]) / (12 * h)
    return d


def grid_derivative(f, grid):
    f = np.asarray(f)
    if grid.rule == "spectral":
        return _spectral_derivative(f, grid)
    return _fd4_derivative(f, grid.h)


def gf_derivative(a):
    return Representative(lambda e: grid_derivative(a(e), a.grid), a.grid, f"{a.tag}'")


def _test_samples(psi, grid):
    vals = psi(grid.x) if callable(psi) else np.asarray(psi)
    if vals.shape != (grid.n,):
        raise ShapeError(f"test function has shape {vals.shape}, grid has {grid.n} points")
    scale = float(np.max(np.abs(vals))) if vals.size else 0.0
    edge = np.concatenate([vals[:2], vals[-2:]])
    if scale > 0 and np.max(np.abs(edge)) > 1e-14 * scale:
        raise DomainError("test function support touches the grid boundary")
    return vals


def pair(a: Representative, psi, eps):
    """Trapezoid quadrature of ``a_eps * psi`` over the grid.

    ``psi`` is an array of grid samples or a callable of ``x``; it must vanish
    on the two outermost samples at each end.
    """
    w = _test_samples(psi, a.grid)
    vals = a(eps) * w
    if not np.any(vals):
        return 0j
    return complex(integrate.trapezoid(vals, dx=a.grid.h))


def integral(a: Representative, eps):
    """Trapezoid quadrature of ``a_eps`` over the whole grid."""
    return complex(integrate.trapezoid(a(eps), dx=a.grid.h))


def bump_test_function(center=0.0, radius=0.5):
    """Smooth compactly supported bump ``exp(-1 / (1 - s^2))``."""

    def psi(x):
        s = (np.asarray(x, dtype=float) - center) / radius
        out = np.zeros_like(s)
        inside = np.abs(s) < 1
        out[inside] = np.exp(1.0 - 1.0 / (1.0 - s[inside] ** 2))
        return out

    return psi


def window_test_function(inner=0.5, outer=0.8):
    """Smooth window equal to 1 on ``|x| <= inner`` and 0 beyond ``outer``."""
    prof = make_plateau_profile(inner, outer)
    return lambda x: prof.eval(np.asarray(x, dtype=float))


@dataclass
class AssociationReport:
    eps: tuple
    pairings: dict
    slopes: dict
    limits: dict
    scale: float
    verdicts: dict
    verdict: str
    tol: float = field(default=0.0)

    def as_dict(self):
        return {
            "eps": list(self.eps),
            "slopes": self.slopes,
            "limits": {k: [v.real, v.imag] for k, v in self.limits.items()},
            "verdicts": self.verdicts,
            "verdict": self.verdict,
            "scale": self.scale,
            "tol": self.tol,
        }


def _extrapolate_to_zero(eps, values):
    # Richardson-style polynomial extrapolation through all rungs.
    eps = np.asarray(eps)
    deg = len(eps) - 1
    re = np.polynomial.polynomial.polyfit(eps, np.real(values), deg)[0]
    im = np.polynomial.polynomial.polyfit(eps, np.imag(values), deg)[0]
    return complex(re, im)


def associate(a, b, ladder: EpsilonLadder, tests) -> AssociationReport:
    """Decide whether ``a`` is associated to ``b`` along ``ladder``.

    ``tests`` maps names to test functions (a plain list is numbered).  Per
    test, the pairing of ``a - b`` must shrink along the ladder with a
    log-log slope of at least 0.5, and its extrapolated limit must be below
    ``1e-4`` times the largest pairing magnitude at the first rung.  Pairings
    below ``1e-10`` of the separate pairings of ``a`` and ``b`` on every rung
    count as exact cancellation.
    """
    if len(ladder) < 3:
        raise LadderError(f"need at least 3 rungs, got {len(ladder)}")
    if not isinstance(tests, dict):
        tests = {f"test{i}": t for i, t in enumerate(tests)}
    if not tests:
        raise ParameterError("need at least one test function")
    diff = a - b
    eps = np.asarray(ladder.eps)
    pairings, floors = {}, {}
    for name, psi in tests.items():
        pairings[name] = [pair(diff, psi, e) for e in eps]
        ref = max(abs(pair(a, psi, e)) + abs(pair(b, psi, e)) for e in eps)
        floors[name] = NOISE_RTOL * ref
    scale = max(abs(p[0]) for p in pairings.values())
    tol = LIMIT_RTOL * scale
    slopes, limits, verdicts = {}, {}, {}
    for name, vals in pairings.items():
        mags = np.abs(np.asarray(vals))
        if np.all(mags <= floors[name]):
            # cancels at roundoff level on every rung, e.g. odd integrands
            slopes[name], limits[name], verdicts[name] = math.inf, 0j, "associated"
            continue
        logs = np.log(np.maximum(mags, np.finfo(float).tiny))
        slope = float(np.polyfit(np.log(eps), logs, 1)[0])
        limit = _extrapolate_to_zero(eps, vals)
        decreasing = bool(np.all(np.diff(mags) < 0))
        slopes[name], limits[name] = slope, limit
        if slope >= SLOPE_THRESHOLD and decreasing and abs(limit) <= tol:
            verdicts[name] = "associated"
        elif abs(limit) > tol and slope < SLOPE_THRESHOLD:
            verdicts[name] = "not-associated"
        else:
            verdicts[name] = "inconclusive"
    vs = set(verdicts.values())
    if "not-associated" in vs:
        verdict = "not-associated"
    elif vs == {"associated"}:
        verdict = "associated"
    else:
        verdict = "inconclusive"
    return AssociationReport(
        eps=tuple(eps), pairings=pairings, slopes=slopes, limits=limits,
        scale=scale, verdicts=verdicts, verdict=verdict, tol=tol,
    )


def transition_width(m, level=0.01):
    """Unit-scale width of the region where ``level < H < 1 - level``."""
    x = np.linspace(0.0, 60.0, 24001)
    k = position_kernel(m, 1.0, x)
    upper = 0.5 + integrate.cumulative_trapezoid(k, x, initial=0.0)
    idx = np.nonzero(np.abs(upper - 1.0) > level)[0][-1]
    return 2.0 * x[idx + 1]


def default_setup(m=None, lo=-1.0, hi=1.0, eps0=0.004, rungs=4, cells=32):
    """Grid and ladder such that the jump spans ``cells`` cells at the finest rung."""
    if m is None:
        m = Mollifier(make_plateau_profile(1.0, 2.0))
    ladder = EpsilonLadder.geometric(eps0, rungs)
    width = transition_width(m) * ladder.eps[-1]
    n = int(math.ceil(cells * (hi - lo) / width)) + 1
    return m, SampleGrid(lo, hi, n), ladder
