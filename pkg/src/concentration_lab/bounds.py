"""Closed-form deviation bounds, medians, and the exact concentration function."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate

from .measure import DiscreteMeasure
from .metrics import MetricSpec, _values, distance_matrix

MAX_ALPHA_STATES = 20
HALF_TOL = 1e-12


@dataclass(frozen=True)
class BoundCurve:
    """A named tail bound t -> value; values above 1 are legal and flagged vacuous."""

    name: str
    params: dict
    func: Callable = field(repr=False, compare=False)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = self.func(t)
        return float(out) if out.ndim == 0 else out

    def vacuous(self, t):
        return np.asarray(self(t)) >= 1.0


def _nonneg(t):
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("t must be nonnegative")
    return t


def azuma_bound(D2: float, t):
    """2 exp(-t^2 / (2 D2)), for D2 >= sum of squared martingale-difference sup norms."""
    if not D2 > 0:
        raise ValueError("D2 must be positive")
    t = _nonneg(t)
    out = 2.0 * np.exp(-t ** 2 / (2.0 * D2))
    return out if t.ndim else float(out)


def main_bound(n: int, lip: float, delta_inf_norm: float, t, normalized: bool = False):
    """2 exp(-t^2 / (2 n lip^2 ||Delta||^2)).

    With ``normalized=True``, ``lip`` is taken with respect to the metric
    divided by n and the exponent becomes -n t^2 / (2 lip^2 ||Delta||^2).
    """
    if n < 1 or lip < 0 or delta_inf_norm <= 0:
        raise ValueError("need n >= 1, lip >= 0, delta_inf_norm > 0")
    t = _nonneg(t)
    if lip == 0:
        out = np.where(t > 0, 0.0, 2.0)
    elif normalized:
        out = 2.0 * np.exp(-n * t ** 2 / (2.0 * lip ** 2 * delta_inf_norm ** 2))
    else:
        out = 2.0 * np.exp(-t ** 2 / (2.0 * n * lip ** 2 * delta_inf_norm ** 2))
    return out if t.ndim else float(out)


def mcdiarmid_bound(n: int, t, lip: float = 1.0):
    """2 exp(-2 n t^2 / lip^2) for product measures; lip under normalized Hamming."""
    if n < 1 or lip <= 0:
        raise ValueError("need n >= 1 and lip > 0")
    t = _nonneg(t)
    out = 2.0 * np.exp(-2.0 * n * (t / lip) ** 2)
    return out if t.ndim else float(out)


def marton_bound(n: int, theta: float, t, lip: float = 1.0):
    """Median-centered bound for Doeblin-contracting Markov measures.

    2 exp(-2n ((t (1 - theta) / lip - sqrt(log 2 / (2n)))_+)^2); the ramp
    keeps the value at most 2 and nonincreasing in t.
    """
    if not 0 <= theta < 1:
        raise ValueError("theta must lie in [0, 1)")
    if n < 1 or lip <= 0:
        raise ValueError("need n >= 1 and lip > 0")
    t = _nonneg(t)
    inner = np.clip(t * (1.0 - theta) / lip - math.sqrt(math.log(2) / (2 * n)), 0.0, None)
    out = 2.0 * np.exp(-2.0 * n * inner ** 2)
    return out if t.ndim else float(out)


def samson_bound(gamma_spectral_norm: float, t, lip: float = 1.0):
    """2 exp(-t^2 / (2 lip^2 ||Gamma||_2^2)); the caller attests that f is convex."""
    if gamma_spectral_norm <= 0 or lip <= 0:
        raise ValueError("norm and lip must be positive")
    t = _nonneg(t)
    out = 2.0 * np.exp(-t ** 2 / (2.0 * lip ** 2 * gamma_spectral_norm ** 2))
    return out if t.ndim else float(out)


def make_curve(name: str, **params) -> BoundCurve:
    """Build a BoundCurve by name: azuma, main, mcdiarmid, marton or samson."""
    p = dict(params)
    if name == "azuma":
        func = lambda t: np.asarray(azuma_bound(p["D2"], t))
    elif name == "main":
        func = lambda t: np.asarray(main_bound(int(p["n"]), p.get("lip", 1.0), p["delta"], t,
                                               bool(p.get("normalized", False))))
    elif name == "mcdiarmid":
        func = lambda t: np.asarray(mcdiarmid_bound(int(p["n"]), t, p.get("lip", 1.0)))
    elif name == "marton":
        func = lambda t: np.asarray(marton_bound(int(p["n"]), p["theta"], t, p.get("lip", 1.0)))
    elif name == "samson":
        func = lambda t: np.asarray(samson_bound(p["gamma"], t, p.get("lip", 1.0)))
    else:
        raise ValueError(f"unknown bound curve {name!r}")
    try:
        func(np.array(0.0))
    except KeyError as exc:
        raise ValueError(f"curve {name!r} needs parameter {exc}") from None
    return BoundCurve(name, p, func)


def median(P: DiscreteMeasure, f, largest: bool = False) -> float:
    """A median of f under P among the values f attains with positive probability.

    The smallest such median is returned by default, the largest with
    ``largest=True``.
    """
    vals = _values(f)
    pos = P.p > 0
    support = np.unique(vals[pos])
    w = np.array([P.p[pos & (vals == v)].sum() for v in support])
    below = np.cumsum(w)                  # P(f <= v)
    above = np.cumsum(w[::-1])[::-1]      # P(f >= v)
    ok = (below >= 0.5 - HALF_TOL) & (above >= 0.5 - HALF_TOL)
    idx = np.nonzero(ok)[0]
    return float(support[idx[-1] if largest else idx[0]])


def concentration_alpha(P: DiscreteMeasure, spec: MetricSpec, t):
    """Exact alpha(t) = 1 - min{P(A_t) : P(A) >= 1/2}, A_t the closed t-fattening of A.

    Enumerates all 2**(a**n) subsets, so a**n is capped at 20.
    """
    N = P.size
    if N > MAX_ALPHA_STATES:
        raise ValueError(f"{N} states is too many for exact alpha; "
                         "use the Monte Carlo tail estimator instead")
    ts = np.atleast_1d(_nonneg(t))
    D = distance_matrix(spec, P.n, P.a)
    # mass[mask] = P(A) for the subset encoded by mask
    mass = np.zeros(1 << N)
    for b in range(N):
        mass[1 << b: 1 << (b + 1)] = mass[: 1 << b] + P.p[b]
    half = mass >= 0.5 - HALF_TOL
    bits = 1 << np.arange(N, dtype=np.int64)
    out = np.empty(ts.size)
    for k, tk in enumerate(ts):
        ball = ((D <= tk + 1e-12).astype(np.int64) * bits[None, :]).sum(axis=1)
        fat = np.zeros(1 << N, dtype=np.int64)
        for b in range(N):
            fat[1 << b: 1 << (b + 1)] = fat[: 1 << b] | ball[b]
        out[k] = 1.0 - mass[fat[half]].min()
    out = np.clip(out, 0.0, 1.0)
    return float(out[0]) if np.ndim(t) == 0 else out


def median_mean_convert(alpha_curve, r_max: float = 1e6, tol: float = 1e-12):
    """Constants for moving a tail bound between centerings.

    Returns ``(r0, alpha_bar)`` where r0 is the threshold past which
    alpha < 1/2 (so P(|f - M_f| >= r + r0) <= alpha(r)) and alpha_bar is the
    integral of alpha over [0, inf) (so P(|f - Ef| >= r + alpha_bar) <= alpha(r));
    alpha_bar is inf when the integral diverges.

    Raises
    ------
    ValueError
        If alpha stays at or above 1/2 on [0, r_max].
    """
    alpha = alpha_curve
    if alpha(0.0) < 0.5:
        r0 = 0.0
    else:
        hi = 1.0
        while alpha(hi) >= 0.5:
            hi *= 2.0
            if hi > r_max:
                raise ValueError("alpha never drops below 1/2 on the search bracket")
        lo = 0.0
        while hi - lo > tol * max(1.0, hi):
            mid = 0.5 * (lo + hi)
            if alpha(mid) < 0.5:
                hi = mid
            else:
                lo = mid
        r0 = hi
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            abar, _ = integrate.quad(lambda r: float(alpha(r)), 0.0, np.inf,
                                     epsabs=1e-10, epsrel=1e-8, limit=200)
        except integrate.IntegrationWarning:
            abar = math.inf
    if not math.isfinite(abar):
        abar = math.inf
    return r0, abar


def exact_tail(P: DiscreteMeasure, f, t, center: float | None = None, strict: bool = True):
    """P(|f - c| > t) (or >= with ``strict=False``) by enumeration; c defaults to E f."""
    vals = _values(f)
    c = float(P.p @ vals) if center is None else center
    dev = np.abs(vals - c)
    ts = np.atleast_1d(np.asarray(t, dtype=float))
    cmp = dev[None, :] > ts[:, None] if strict else dev[None, :] >= ts[:, None]
    out = (cmp * P.p[None, :]).sum(axis=1)
    return float(out[0]) if np.ndim(t) == 0 else out
