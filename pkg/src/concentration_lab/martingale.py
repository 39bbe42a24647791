"""Exact Doob martingale differences along the coordinate filtration."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .measure import DiscreteMeasure, MeasureError, SignedDensity, sequence_to_index
from .metrics import FunctionTable, MetricSpec, _values, lipschitz_constant
from .mixing import delta_matrix, inf_norm

VD_TOL = 1e-9


class ConditionalMeans:
    """Table of E[f | X_{1..i} = y] for every i and every prefix y, built from suffix sums.

    ``means[i]`` has length a**i; entries at zero-probability prefixes are NaN.
    """

    def __init__(self, P: DiscreteMeasure, f):
        vals = _values(f)
        if vals.size != P.size:
            raise ValueError(f"f has {vals.size} entries, measure has {P.size}")
        self.P = P
        self.mass = []
        self.means = []
        weighted = P.p * vals
        for i in range(P.n + 1):
            m = P.p.reshape(P.a ** i, -1).sum(axis=1)
            s = weighted.reshape(P.a ** i, -1).sum(axis=1)
            pos = m > 0
            mean = np.full(m.shape, np.nan)
            mean[pos] = s[pos] / m[pos]
            mean.setflags(write=False)
            self.mass.append(m)
            self.means.append(mean)

    def at(self, prefix) -> float:
        i = len(prefix)
        idx = sequence_to_index(prefix, self.P.a)
        if not self.mass[i][idx] > 0:
            raise MeasureError(f"prefix {tuple(prefix)} has zero probability")
        return float(self.means[i][idx])


def conditional_mean(P: DiscreteMeasure, f, prefix=()) -> float:
    """E[f(X) | X_{1..i} = prefix]."""
    prefix = tuple(prefix)
    if len(prefix) > P.n:
        raise ValueError("prefix longer than the sequence")
    vals = _values(f)
    block = P.a ** (P.n - len(prefix))
    start = sequence_to_index(prefix, P.a) * block
    q = P.p[start:start + block]
    mass = q.sum()
    if mass <= 0:
        raise MeasureError(f"prefix {prefix} has zero probability")
    return float(q @ vals[start:start + block] / mass)


def v_i(P: DiscreteMeasure, f, i: int, y) -> float:
    """V_i(f; y) = E[f | X_{1..i} = y] - E[f | X_{1..i-1} = y_{1..i-1}]."""
    y = tuple(y)
    if len(y) != i or not 1 <= i <= P.n:
        raise ValueError(f"need a prefix of length i in 1..{P.n}")
    return conditional_mean(P, f, y) - conditional_mean(P, f, y[:-1])


def v_hat(P: DiscreteMeasure, f, i: int, y, w: int, w2: int) -> float:
    """E[f | X_{1..i} = [y w]] - E[f | X_{1..i} = [y w2]]."""
    y = tuple(y)
    if len(y) != i - 1:
        raise ValueError(f"y must have length {i - 1}")
    return conditional_mean(P, f, y + (w,)) - conditional_mean(P, f, y + (w2,))


def ghat_density(P: DiscreteMeasure, i: int, y, w: int, w2: int) -> SignedDensity:
    """Signed density g with <f, g> = v_hat(P, f, i, y, w, w2) for every f."""
    y = tuple(y)
    if len(y) != i - 1:
        raise ValueError(f"y must have length {i - 1}")
    h = np.zeros(P.size)
    block = P.a ** (P.n - i)
    for v, sign in ((w, 1.0), (w2, -1.0)):
        start = sequence_to_index(y + (v,), P.a) * block
        q = P.p[start:start + block]
        mass = q.sum()
        if mass <= 0:
            raise MeasureError(f"prefix {y + (v,)} has zero probability")
        h[start:start + block] += sign * q / mass
    return SignedDensity(P.n, P.a, h)


def restrict_to_prefix(h, P: DiscreteMeasure, y) -> np.ndarray:
    """The table x -> h([y x]) on the remaining n - len(y) coordinates."""
    vals = h.h if isinstance(h, SignedDensity) else _values(h)
    block = P.a ** (P.n - len(y))
    start = sequence_to_index(tuple(y), P.a) * block
    return vals[start:start + block]


@dataclass
class MartingaleProfile:
    """V_i tables for i = 1..n and their sup norms over positive-probability prefixes.

    ``values[i - 1]`` has length a**i, NaN at zero-probability prefixes.
    """

    values: list
    sup_norms: np.ndarray
    mean: float
    support: list = field(repr=False)

    @property
    def d2(self) -> float:
        return float(np.sum(self.sup_norms ** 2))


def martingale_profile(P: DiscreteMeasure, f) -> MartingaleProfile:
    cm = ConditionalMeans(P, f)
    values, sups, support = [], [], []
    for i in range(1, P.n + 1):
        parent = np.repeat(cm.means[i - 1], P.a)
        v = cm.means[i] - parent
        pos = cm.mass[i] > 0
        v[~pos] = np.nan
        values.append(v)
        support.append(pos)
        sups.append(float(np.abs(v[pos]).max()) if pos.any() else 0.0)
    return MartingaleProfile(values, np.array(sups), float(cm.means[0][0]), support)


@dataclass
class VDReport:
    passed: bool
    sup_norms: list
    lip: float
    delta_inf_norm: float
    bound: float
    slack: float
    witness: tuple | None = None

    def to_json(self) -> dict:
        return {"pass": self.passed, "sup_norms": self.sup_norms, "lip": self.lip,
                "delta_inf_norm": self.delta_inf_norm, "bound": self.bound,
                "vd_slack": self.slack,
                "witness": list(self.witness) if self.witness else None}


def check_vd_bound(P: DiscreteMeasure, f, spec: MetricSpec, delta_norm: float | None = None,
                   tol: float = VD_TOL) -> VDReport:
    """Check max_i ||V_i||_inf <= Lip(f) * ||Delta_n||_inf.

    On failure ``witness`` is (i, prefix) at the largest |V_i|.
    """
    f = f if isinstance(f, FunctionTable) else FunctionTable(P.n, P.a, f)
    lip = lipschitz_constant(f, spec)
    dn = inf_norm(delta_matrix(P)) if delta_norm is None else delta_norm
    prof = martingale_profile(P, f)
    worst = float(prof.sup_norms.max())
    bound = lip * dn
    slack = bound - worst
    witness = None
    if slack < -tol:
        i = int(np.argmax(prof.sup_norms)) + 1
        idx = int(np.nanargmax(np.abs(prof.values[i - 1])))
        witness = (i, tuple(int(v) for v in np.unravel_index(idx, (P.a,) * i)))
    return VDReport(slack >= -tol, prof.sup_norms.tolist(), lip, dn, bound, slack, witness)
