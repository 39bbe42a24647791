"""Consistent metric families on {0..a-1}^n and Lipschitz machinery."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .measure import _check_size, _frozen, all_sequences

DIST_TOL = 1e-12
_KINDS = ("hamming", "nhamming", "dm", "lp")


@dataclass(frozen=True)
class MetricSpec:
    """A metric family rho_n on {0..a-1}^n.

    ``kind`` is one of ``"hamming"``, ``"nhamming"`` (Hamming / n),
    ``"dm"`` (grid metric sum |z_i - z'_i| / (m - 1)) and ``"lp"``
    (grid l_p norm with point k standing for k/m). For the grid kinds the
    alphabet size equals ``m``.
    """

    kind: str
    p: float = 1.0
    m: int | None = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown metric kind {self.kind!r}")
        if self.kind in ("dm", "lp") and (self.m is None or self.m < 2):
            raise ValueError(f"{self.kind} metric needs m >= 2")
        if self.kind == "lp" and not self.p >= 1:
            raise ValueError("lp metric needs p >= 1")

    @classmethod
    def parse(cls, text: str) -> MetricSpec:
        """Parse ``hamming``, ``nhamming``, ``dm:m`` or ``lp:p:m``."""
        parts = text.strip().lower().split(":")
        try:
            if parts == ["hamming"]:
                return cls("hamming")
            if parts == ["nhamming"]:
                return cls("nhamming")
            if parts[0] == "dm" and len(parts) == 2:
                return cls("dm", m=int(parts[1]))
            if parts[0] == "lp" and len(parts) == 3:
                p = math.inf if parts[1] in ("inf", "infinity") else float(parts[1])
                return cls("lp", p=p, m=int(parts[2]))
        except ValueError:
            pass
        raise ValueError(f"cannot parse metric spec {text!r}")

    def __str__(self):
        if self.kind == "dm":
            return f"dm:{self.m}"
        if self.kind == "lp":
            p = "inf" if math.isinf(self.p) else f"{self.p:g}"
            return f"lp:{p}:{self.m}"
        return self.kind

    def check_alphabet(self, a: int) -> None:
        if self.m is not None and a != self.m:
            raise ValueError(f"{self} metric needs alphabet size {self.m}, got {a}")

    @property
    def is_path_metric(self) -> bool:
        """True when rho is the shortest-path metric of its unit-step graph."""
        return self.kind in ("hamming", "nhamming", "dm") or (self.kind == "lp" and self.p == 1)


@dataclass(frozen=True, eq=False)
class FunctionTable:
    """Real-valued function on {0..a-1}^n in lexicographic table order."""

    n: int
    a: int
    values: np.ndarray

    def __post_init__(self):
        _check_size(self.n, self.a)
        object.__setattr__(self, "values", _frozen(self.values))
        if self.values.size != self.a ** self.n:
            raise ValueError(f"table has {self.values.size} entries, expected {self.a ** self.n}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("function table has non-finite entries")

    @classmethod
    def from_nested(cls, nested) -> FunctionTable:
        arr = np.asarray(nested, dtype=float)
        if arr.ndim == 0 or len(set(arr.shape)) != 1:
            raise ValueError(f"nested table must have shape (a,)*n, got {arr.shape}")
        return cls(arr.ndim, arr.shape[0], arr.ravel())

    @classmethod
    def from_callable(cls, func, n: int, a: int) -> FunctionTable:
        x = all_sequences(n, a)
        return cls(n, a, np.array([func(row) for row in x], dtype=float))

    def to_nested(self) -> list:
        return self.values.reshape((self.a,) * self.n).tolist()

    def __neg__(self):
        return FunctionTable(self.n, self.a, -self.values)

    def __add__(self, other):
        return FunctionTable(self.n, self.a, self.values + _values(other))

    def __mul__(self, c: float):
        return FunctionTable(self.n, self.a, c * self.values)

    __rmul__ = __mul__


def _values(f) -> np.ndarray:
    return f.values if isinstance(f, FunctionTable) else np.asarray(f, dtype=float).ravel()


def _coord_scale(spec: MetricSpec, n: int) -> np.ndarray:
    """Per-unit-step length used by the grid kinds."""
    if spec.kind == "dm":
        return 1.0 / (spec.m - 1)
    return 1.0 / spec.m


def _pairwise(spec: MetricSpec, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """Distances between rows of X (k, n) and rows of Y (l, n) as a (k, l) array."""
    n = X.shape[1]
    diff = X[:, None, :] - Y[None, :, :]
    if spec.kind == "hamming":
        return (diff != 0).sum(axis=2).astype(float)
    if spec.kind == "nhamming":
        return (diff != 0).sum(axis=2) / n
    absd = np.abs(diff) * _coord_scale(spec, n)
    if spec.kind == "dm" or spec.p == 1:
        return absd.sum(axis=2)
    if math.isinf(spec.p):
        return absd.max(axis=2)
    return (absd ** spec.p).sum(axis=2) ** (1.0 / spec.p)


def distance(spec: MetricSpec, x, y) -> float:
    x = np.atleast_2d(np.asarray(x, dtype=np.int64))
    y = np.atleast_2d(np.asarray(y, dtype=np.int64))
    if x.shape != y.shape:
        raise ValueError("points have different lengths")
    return float(_pairwise(spec, x, y)[0, 0])


def distance_matrix(spec: MetricSpec, n: int, a: int) -> np.ndarray:
    """All pairwise distances on {0..a-1}^n, in table order."""
    spec.check_alphabet(a)
    X = all_sequences(n, a)
    return _pairwise(spec, X, X)


def diameter(spec: MetricSpec, n: int, a: int | None = None) -> float:
    """Largest distance on the n-fold space.

    Closed forms: Hamming n, normalized Hamming 1, d_m n, grid l_p
    n**(1/p) * (m - 1)/m. A one-letter alphabet has diameter 0.
    """
    a = spec.m if a is None else a
    if a == 1:
        return 0.0
    if spec.kind == "hamming":
        return float(n)
    if spec.kind == "nhamming":
        return 1.0
    if spec.kind == "dm":
        return float(n)
    side = (spec.m - 1) / spec.m
    if math.isinf(spec.p):
        return side
    return n ** (1.0 / spec.p) * side


def _row_chunks(N: int, budget: int = 1 << 22):
    step = max(1, budget // max(N, 1))
    for start in range(0, N, step):
        yield start, min(N, start + step)


def lipschitz_constant(f, spec: MetricSpec, n: int | None = None, a: int | None = None) -> float:
    """Exact max over x != y of |f(x) - f(y)| / rho(x, y)."""
    if isinstance(f, FunctionTable):
        n, a = f.n, f.a
    vals = _values(f)
    spec.check_alphabet(a)
    X = all_sequences(n, a)
    best = 0.0
    for lo, hi in _row_chunks(len(X)):
        D = _pairwise(spec, X[lo:hi], X)
        num = np.abs(vals[lo:hi, None] - vals[None, :])
        mask = D > DIST_TOL
        if mask.any():
            best = max(best, float((num[mask] / D[mask]).max()))
    return best


def modulus_of_continuity(f, spec: MetricSpec, delta: float, n: int | None = None,
                          a: int | None = None) -> float:
    """sup |f(x) - f(y)| over pairs with rho(x, y) < delta; 0 if there are none."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    if isinstance(f, FunctionTable):
        n, a = f.n, f.a
    vals = _values(f)
    X = all_sequences(n, a)
    best = 0.0
    for lo, hi in _row_chunks(len(X)):
        D = _pairwise(spec, X[lo:hi], X)
        mask = D < delta - DIST_TOL
        if mask.any():
            best = max(best, float(np.abs(vals[lo:hi, None] - vals[None, :])[mask].max()))
    return best


def random_lipschitz(spec: MetricSpec, n: int, a: int | None = None, seed: int = 0,
                     anchors: int | None = None) -> FunctionTable:
    """Random 1-Lipschitz function with range in [0, diam].

    g(x) = min over anchors y of (c(y) + rho(x, y)), with random anchor
    offsets c, then clamped to [0, diam]. Both steps keep the Lipschitz
    constant at most 1.
    """
    a = spec.m if a is None else a
    spec.check_alphabet(a)
    rng = np.random.default_rng(seed)
    X = all_sequences(n, a)
    diam = diameter(spec, n, a)
    k = anchors if anchors is not None else int(rng.integers(1, min(len(X), 8) + 1))
    idx = rng.choice(len(X), size=min(k, len(X)), replace=False)
    offsets = rng.uniform(0.0, diam, size=idx.size)
    D = _pairwise(spec, X, X[idx])
    g = np.min(offsets[None, :] + D, axis=1)
    return FunctionTable(n, a, np.clip(g, 0.0, diam))


def check_consistency(spec: MetricSpec, n: int, a: int | None = None) -> bool:
    """Exhaustively test rho_n(x, y) == rho_{n-1}(x without i, y without i) when x_i == y_i.

    Normalized Hamming is not consistent in this sense (its scale depends
    on n), and this returns False for it when n >= 2.
    """
    a = spec.m if a is None else a
    if n < 2:
        return True
    Dn = distance_matrix(spec, n, a)
    Dm = distance_matrix(spec, n - 1, a)
    X = all_sequences(n, a)
    weights = a ** np.arange(n - 2, -1, -1)
    for i in range(n):
        rest = np.delete(X, i, axis=1) @ weights if n > 1 else np.zeros(len(X), int)
        same = X[:, i][:, None] == X[:, i][None, :]
        reduced = Dm[rest[:, None], rest[None, :]]
        if np.any(np.abs(Dn - reduced)[same] > DIST_TOL):
            return False
    return True
