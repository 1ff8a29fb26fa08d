"""Epsilon sweeps and Cesaro means of oscillating observables.

Observables are sampled uniformly in ``u = 1/eps``; the classical number
associated with an oscillating family is estimated by the running mean
``(1/T) \\int_0^T f(u) du``.  Nothing here asserts almost periodicity:
:func:`ap_diagnostic` only reports a translation defect as evidence.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .dynamics import s_operator, transition_probability
from .errors import LadderError, ResolutionError
from .genfunc import EpsilonLadder

__all__ = [
    "MeanEstimate",
    "APReport",
    "EpsilonSweep",
    "MIN_SAMPLES",
    "cesaro_mean",
    "ap_diagnostic",
    "uniform_u_ladder",
    "sweep_transition",
]

MIN_SAMPLES = 1000


@dataclass(frozen=True)
class MeanEstimate:
    """Partial means on a geometric ``T`` schedule and their final-decade summary."""

    T: np.ndarray
    partial_means: np.ndarray
    value: float
    band: tuple

    def __post_init__(self):
        if len(self.partial_means) == 0:
            raise ResolutionError("no partial means")

    @property
    def in_band(self):
        """Whether the estimate lies inside the final-decade band.

        True for oscillating inputs; a slow monotone transient can leave the
        debiased estimate outside the band of the raw partial means.
        """
        return self.band[0] <= self.value <= self.band[1]

    def as_dict(self):
        return {
            "value": float(self.value),
            "in_band": bool(self.in_band),
            "band": [float(b) for b in self.band],
            "T_max": float(self.T[-1]),
            "n_partial": int(len(self.T)),
        }


def cesaro_mean(samples, du, per_decade=200):
    """Running means of uniformly spaced samples ``f(0), f(du), ...``.

    Parameters
    ----------
    samples : array_like
        Real samples on ``[0, T_max]``.
    du : float
        Sample spacing.
    per_decade : int
        Density of the geometric ``T`` schedule.

    Returns
    -------
    MeanEstimate
        ``value`` is the least-squares slope of the cumulative integral
        against ``T`` over the last decade, which removes the ``1/T`` bias a
        bounded antiderivative leaves in the raw partial means; ``band`` is
        the min and max of the partial means over that decade.
    """
    f = np.asarray(samples, dtype=float)
    if f.ndim != 1 or len(f) - 1 < MIN_SAMPLES:
        raise ResolutionError(f"need at least {MIN_SAMPLES} intervals, got {max(len(f) - 1, 0)}")
    if not du > 0:
        raise ResolutionError(f"du must be > 0, got {du}")
    if not np.all(np.isfinite(f)):
        raise ResolutionError("samples must be finite")
    integral = cumulative_trapezoid(f, dx=du, initial=0.0)
    n = len(f) - 1
    T_max = n * du
    lo = max(1, n // 10**4)
    decades = np.log10(n / lo)
    idx = np.unique(np.round(np.geomspace(lo, n, int(per_decade * decades) + 2)).astype(int))
    T = idx * du
    means = integral[idx] / T
    tail = means[T >= T_max / 10]
    j = np.arange(-(-n // 10), n + 1)
    value = float(np.polyfit(j * du, integral[j], 1)[0])
    return MeanEstimate(T, means, value, (float(tail.min()), float(tail.max())))


@dataclass(frozen=True)
class APReport:
    best_period: float
    translation_defect: float
    shifts: np.ndarray = field(repr=False)
    defects: np.ndarray = field(repr=False)


def ap_diagnostic(samples, du, max_shift=None):
    """Scan translations ``p = j du`` for small ``sup |f(u + p) - f(u)|``.

    Shifts near zero are trivially good, so the scan starts after the defect
    first reaches half its maximum.  The reported period is the smallest shift
    whose defect is within one sample increment of the minimum.  A small
    defect is evidence of near periodicity, not a proof.
    """
    f = np.asarray(samples, dtype=float)
    if f.ndim != 1 or len(f) < MIN_SAMPLES:
        raise ResolutionError(f"need at least {MIN_SAMPLES} samples, got {len(f)}")
    n = len(f)
    jmax = n // 2 if max_shift is None else min(n - 1, int(round(max_shift / du)))
    shifts = np.arange(1, jmax + 1)
    defects = np.array([np.max(np.abs(f[j:] - f[:-j])) for j in shifts])
    peak = defects.max()
    if peak == 0:
        return APReport(float(shifts[0] * du), 0.0, shifts * du, defects)
    start = int(np.argmax(defects >= 0.5 * peak))
    window = defects[start:]
    slack = np.max(np.abs(np.diff(f)))
    best = start + int(np.argmax(window <= window.min() + slack))
    return APReport(float(shifts[best] * du), float(defects[best]), shifts * du, defects)


def uniform_u_ladder(u_min, u_max, count):
    """Epsilon values ``1/u`` for ``u`` uniform on ``[u_min, u_max]``."""
    if not 0 < u_min < u_max or count < 2:
        raise LadderError("need 0 < u_min < u_max and at least two rungs")
    u = np.linspace(u_min, u_max, count)
    return EpsilonLadder(tuple(float(e) for e in 1.0 / u))


@dataclass(frozen=True)
class EpsilonSweep:
    eps: np.ndarray
    values: np.ndarray
    fingerprint: str

    def __post_init__(self):
        if not np.all(np.isfinite(self.values)):
            raise ResolutionError("sweep produced non-finite values")

    @property
    def u(self):
        return 1.0 / self.eps

    def rows(self):
        return [(float(1 / e), float(e), float(v)) for e, v in zip(self.eps, self.values)]


def sweep_transition(model, t, phi1, phi2, ladder):
    """``|<phi2, S phi1>|^2`` per rung with every other parameter frozen."""
    eps = np.array(sorted(ladder, reverse=True), dtype=float)
    values = []
    fps = []
    m = model
    for e in eps:
        m = m.with_eps(float(e))
        s = s_operator(m, t)
        values.append(transition_probability(s, phi1, phi2))
        fps.append(s.fingerprint)
    tag = hashlib.sha256("".join(fps).encode()).hexdigest()[:16]
    return EpsilonSweep(eps, np.array(values), tag)
