"""Psi and Phi functionals on L_1 of a finite product space.

The Phi norm is a linear program over the Lipschitz class
{g : |g(x) - g(y)| <= rho(x, y), 0 <= g <= diam}; the Psi functional is
the recursive ramp-and-project sum. Psi-dominance is Phi <= Psi.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from .measure import all_sequences
from .metrics import (DIST_TOL, FunctionTable, MetricSpec, _pairwise, _values, diameter,
                      distance_matrix)

MAX_LP_POINTS = 512


class LPError(RuntimeError):
    def __init__(self, msg, status):
        super().__init__(msg)
        self.status = status


@dataclass(frozen=True)
class WeightedSpace:
    """Product of n copies of an a-point space, each point carrying ``coord_weight``.

    Counting measure has coord_weight 1; the m-grid on [0, 1] has 1/m,
    so each cell of the n-fold grid weighs (1/m)**n.
    """

    n: int
    a: int
    coord_weight: float = 1.0

    def __post_init__(self):
        if self.coord_weight <= 0:
            raise ValueError("coord_weight must be positive")

    @classmethod
    def counting(cls, n: int, a: int) -> WeightedSpace:
        return cls(n, a, 1.0)

    @classmethod
    def grid(cls, n: int, m: int) -> WeightedSpace:
        return cls(n, m, 1.0 / m)

    @property
    def cell_weight(self) -> float:
        return self.coord_weight ** self.n

    def with_dim(self, n: int) -> WeightedSpace:
        return WeightedSpace(n, self.a, self.coord_weight)


def _space_for(f, space: WeightedSpace | None) -> WeightedSpace:
    if space is not None:
        return space
    if isinstance(f, FunctionTable):
        return WeightedSpace.counting(f.n, f.a)
    raise ValueError("a WeightedSpace is required for raw arrays")


def l1_norm(f, space: WeightedSpace | None = None) -> float:
    space = _space_for(f, space)
    return space.cell_weight * float(np.abs(_values(f)).sum())


def marginal_projection(f, space: WeightedSpace | None = None) -> FunctionTable:
    """Integrate out the first coordinate: (pi f)(x_2..x_n) = sum_{x_1} f(x) * w."""
    space = _space_for(f, space)
    if space.n < 1:
        raise ValueError("cannot project a 0-dimensional function")
    vals = _values(f).reshape(space.a, -1)
    out = space.coord_weight * vals.sum(axis=0)
    if space.n == 1:
        return float(out[0])
    return FunctionTable(space.n - 1, space.a, out)


def psi_n(f, space: WeightedSpace | None = None) -> float:
    """Psi_n(f) = int (f)_+ + Psi_{n-1}(pi f), with Psi_0 = 0."""
    space = _space_for(f, space)
    vals = _values(f)
    total = 0.0
    for k in range(space.n, 0, -1):
        total += space.coord_weight ** k * float(np.clip(vals, 0.0, None).sum())
        vals = space.coord_weight * vals.reshape(space.a, -1).sum(axis=0)
    return total


def psi_norm(f, space: WeightedSpace | None = None) -> float:
    vals = _values(f)
    return max(psi_n(vals, _space_for(f, space)), psi_n(-vals, _space_for(f, space)))


def inner_product(f, g, space: WeightedSpace | None = None) -> float:
    fv, gv = _values(f), _values(g)
    if fv.shape != gv.shape:
        raise ValueError(f"shape mismatch: {fv.shape} vs {gv.shape}")
    space = _space_for(f if isinstance(f, FunctionTable) else g, space)
    return space.cell_weight * float(fv @ gv)


def lipschitz_constraints(spec: MetricSpec, n: int, a: int, thin: bool | None = None):
    """Sparse (A, b) with A g <= b encoding g(x) - g(y) <= rho(x, y) for ordered pairs.

    With ``thin`` (default for path metrics) only unit-step pairs are kept;
    the triangle inequality along shortest paths recovers the rest.
    """
    thin = spec.is_path_metric if thin is None else thin
    if thin and not spec.is_path_metric:
        raise ValueError(f"{spec} is not a path metric; cannot thin constraints")
    X = all_sequences(n, a)
    N = len(X)
    if thin:
        rows, cols, rhs = [], [], []
        weights = a ** np.arange(n - 1, -1, -1)
        for coord in range(n):
            if spec.kind in ("hamming", "nhamming"):
                steps = range(1, a)
            else:
                steps = [1]
            for s in steps:
                movable = X[:, coord] + s < a
                src = np.nonzero(movable)[0]
                dst = src + s * weights[coord]
                d = _pairwise(spec, X[src[:1]], X[dst[:1]])[0, 0] if src.size else 0.0
                rows.append(src)
                cols.append(dst)
                rhs.append(np.full(src.size, d))
        src = np.concatenate(rows)
        dst = np.concatenate(cols)
        d = np.concatenate(rhs)
    else:
        D = distance_matrix(spec, n, a)
        src, dst = np.nonzero(~np.eye(N, dtype=bool) & (D > DIST_TOL))
        src, dst = src[src < dst], dst[src < dst]
        d = D[src, dst]
    # both directions of every kept pair
    m = src.size
    r = np.arange(2 * m)
    i = np.concatenate([src, dst])
    j = np.concatenate([dst, src])
    data = np.concatenate([np.ones(2 * m), -np.ones(2 * m)])
    A = sparse.csr_matrix((data, (np.concatenate([r, r]), np.concatenate([i, j]))),
                          shape=(2 * m, N))
    b = np.concatenate([d, d])
    return A, b


def max_pairing(f, spec: MetricSpec, space: WeightedSpace, thin: bool | None = None,
                constraints=None) -> tuple[float, np.ndarray]:
    """max <f, g> over the Lipschitz class; returns (value, maximizing g)."""
    n, a = space.n, space.a
    spec.check_alphabet(a)
    N = a ** n
    if N > MAX_LP_POINTS:
        raise ValueError(f"{N} LP variables exceeds the {MAX_LP_POINTS} cap")
    fv = _values(f)
    diam = diameter(spec, n, a)
    if N == 1:
        return 0.0, np.zeros(1)
    A, b = constraints if constraints is not None else lipschitz_constraints(spec, n, a, thin)
    res = linprog(-space.cell_weight * fv, A_ub=A, b_ub=b, bounds=(0.0, diam),
                  method="highs-ds",
                  options={"primal_feasibility_tolerance": 1e-10,
                           "dual_feasibility_tolerance": 1e-10})
    if res.status != 0:
        raise LPError(f"LP failed: {res.message}", res.status)
    return float(-res.fun), res.x


def phi_norm(f, spec: MetricSpec, space: WeightedSpace | None = None,
             thin: bool | None = None) -> float:
    """sup over the Lipschitz class of |<f, g>|, as the larger of two LPs (for f and -f)."""
    space = _space_for(f, space)
    if space.a ** space.n == 1:
        return 0.0
    fv = _values(f)
    cons = lipschitz_constraints(spec, space.n, space.a, thin)
    return max(max_pairing(fv, spec, space, constraints=cons)[0],
               max_pairing(-fv, spec, space, constraints=cons)[0])


def _digest(values: np.ndarray) -> str:
    return hashlib.sha256(np.ascontiguousarray(values, dtype="<f8").tobytes()).hexdigest()[:16]


@dataclass
class DominanceReport:
    metric: str
    n: int
    a: int
    trials: int
    passed: bool
    max_ratio: float
    worst_f_digest: str
    worst_f: list = field(repr=False, default_factory=list)
    violations: int = 0

    def to_json(self) -> dict:
        return {"metric": self.metric, "n": self.n, "a": self.a, "trials": self.trials,
                "pass": self.passed, "max_ratio": self.max_ratio,
                "worst_f_digest": self.worst_f_digest, "violations": self.violations,
                **({"witness_f": self.worst_f} if not self.passed else {})}


def check_psi_dominance(spec: MetricSpec, space: WeightedSpace, trials: int = 200,
                        seed: int = 0, tol: float = 1e-6) -> DominanceReport:
    """Test sup_g <s f, g> <= Psi_n(s f) for s = +-1 over random signed f.

    Each trial draws f uniform in [-1, 1] from its own child seed, so the
    report does not depend on evaluation order.
    """
    n, a = space.n, space.a
    cons = lipschitz_constraints(spec, n, a)
    children = np.random.SeedSequence(seed).spawn(trials)
    worst_ratio, worst_f, witness, violations = -math.inf, None, None, 0
    for child in children:
        f = np.random.default_rng(child).uniform(-1.0, 1.0, size=a ** n)
        sups = [max_pairing(s * f, spec, space, constraints=cons)[0] for s in (1.0, -1.0)]
        if any(sup > psi_n(s * f, space) + tol for sup, s in zip(sups, (1.0, -1.0))):
            violations += 1
            witness = f if witness is None else witness
        ratio = max(sups) / psi_norm(f, space)
        if ratio > worst_ratio:
            worst_ratio, worst_f = ratio, f
    shown = witness if witness is not None else worst_f
    return DominanceReport(str(spec), n, a, trials, violations == 0, float(worst_ratio),
                           _digest(shown), shown.tolist(), violations)


def grid_map(x, m: int) -> np.ndarray:
    """Map points of [0, 1]^n to grid cells: max{k < m : k/m <= x_i} per coordinate."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any((x < 0) | (x > 1)) or not np.all(np.isfinite(x)):
        raise ValueError("grid_map needs coordinates in [0, 1]")
    k = np.floor(x * m).astype(np.int64)
    # repair floating products that land on the wrong side of k/m
    k = np.where(k / m > x, k - 1, k)
    k = np.where((k + 1) / m <= x, k + 1, k)
    return np.clip(k, 0, m - 1)


def alternating_grid_function(N: int) -> FunctionTable:
    """f_N = (-1)**k on grid cell k of [0, 1] split into N cells; L_1 norm 1 under weight 1/N."""
    if N < 2 or N % 2:
        raise ValueError("N must be a positive even integer")
    return FunctionTable(1, N, (-1.0) ** np.arange(N))


@dataclass
class TruncationReport:
    ms: list
    phi_sup: list
    psi: list
    dominated: list
    phi_full: float
    psi_full: float
    phi_monotone: bool
    psi_monotone: bool

    @property
    def passed(self) -> bool:
        return all(self.dominated)


def truncation_dominance_check(f: FunctionTable, ms, tol: float = 1e-6) -> TruncationReport:
    """Hamming dominance along the truncations f_m = f * 1{all coordinates < m}.

    For each m, sup_g <f_m, g> <= Psi_n(f_m) is checked on the full alphabet.
    Monotone convergence toward the untruncated values is reported; it is
    guaranteed only for nonnegative f.
    """
    spec = MetricSpec("hamming")
    space = WeightedSpace.counting(f.n, f.a)
    X = all_sequences(f.n, f.a)
    cons = lipschitz_constraints(spec, f.n, f.a)
    phis, psis, dom = [], [], []
    for m in ms:
        if not 1 <= m <= f.a:
            raise ValueError(f"truncation level {m} outside 1..{f.a}")
        fm = np.where(np.all(X < m, axis=1), f.values, 0.0)
        sup = max_pairing(fm, spec, space, constraints=cons)[0]
        psi = psi_n(fm, space)
        phis.append(sup)
        psis.append(psi)
        dom.append(sup <= psi + tol)
    phi_full = max_pairing(f.values, spec, space, constraints=cons)[0]
    psi_full = psi_n(f.values, space)
    return TruncationReport(list(ms), phis, psis, dom, phi_full, psi_full,
                            bool(np.all(np.diff(phis) >= -tol)),
                            bool(np.all(np.diff(psis) >= -tol)))
