"""Mixing coefficients: eta_ij, the Delta/Gamma matrices and their norms,
phi-mixing coefficients and the Doeblin coefficient of a kernel."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .measure import DiscreteMeasure, conditional


ENTRY_TOL = 1e-12


class SpectralNormError(RuntimeError):
    def __init__(self, msg, iterations, last_estimates):
        super().__init__(msg)
        self.iterations = iterations
        self.last_estimates = last_estimates


@dataclass(frozen=True, eq=False)
class MixingMatrix:
    """Upper-triangular Delta_n (kind ``"delta"``) or Gamma_n (``"gamma"``)."""

    n: int
    entries: np.ndarray
    kind: str = "delta"

    def __post_init__(self):
        e = np.array(self.entries, dtype=float)
        if e.shape != (self.n, self.n):
            raise ValueError(f"entries must be {self.n}x{self.n}")
        if np.any(np.tril(e, -1) != 0):
            raise ValueError("mixing matrix must be upper triangular")
        if not np.allclose(np.diag(e), 1.0):
            raise ValueError("mixing matrix must have unit diagonal")
        if self.kind not in ("delta", "gamma"):
            raise ValueError(f"unknown kind {self.kind!r}")
        e.setflags(write=False)
        object.__setattr__(self, "entries", e)

    @property
    def row_sums(self) -> np.ndarray:
        return self.entries.sum(axis=1)

    def satisfies_range(self) -> bool:
        """Constraint (*): every entry in [0, 1]."""
        e = self.entries
        return bool(np.all(e >= -ENTRY_TOL) and np.all(e <= 1 + ENTRY_TOL))

    def satisfies_row_monotonicity(self) -> bool:
        """Constraint (**): entries do not increase along each row right of the diagonal."""
        e = self.entries
        for i in range(self.n):
            row = e[i, i + 1:]
            if np.any(np.diff(row) > ENTRY_TOL):
                return False
        return True

    def to_rows(self):
        """(row, col, value) triples, 1-based, upper triangle including the diagonal."""
        return [(i + 1, j + 1, float(self.entries[i, j]))
                for i in range(self.n) for j in range(i, self.n)]


def _check_pair(P: DiscreteMeasure, i: int, j: int) -> None:
    if not 1 <= i < j <= P.n:
        raise ValueError(f"need 1 <= i < j <= n={P.n}, got i={i}, j={j}")


def _suffix_joint(P: DiscreteMeasure, i: int, j: int) -> np.ndarray:
    """Array T[y, w, s] = P(X_{1..i-1} = y, X_i = w, X_{j..n} = s)."""
    a, n = P.a, P.n
    T = P.p.reshape(a ** (i - 1), a, a ** (j - i - 1), a ** (n - j + 1))
    return T.sum(axis=2)


def eta_ij(P: DiscreteMeasure, i: int, j: int, y, w: int, w2: int) -> float:
    """TV distance between the laws of X_{j..n} given X_{1..i} = [y w] and = [y w2].

    Raises
    ------
    MeasureError
        If either prefix has zero probability.
    """
    _check_pair(P, i, j)
    y = tuple(y)
    if len(y) != i - 1:
        raise ValueError(f"y must have length {i - 1}")
    laws = []
    for v in (w, w2):
        cond = conditional(P, y + (v,))
        # cond lives on X_{i+1..n}; sum out X_{i+1..j-1}
        laws.append(cond.p.reshape(P.a ** (j - i - 1), -1).sum(axis=0))
    return 0.5 * float(np.abs(laws[0] - laws[1]).sum())


def eta_bar(P: DiscreteMeasure, i: int, j: int) -> float:
    """Max of eta_ij over (y, w, w') with both prefixes of positive probability."""
    _check_pair(P, i, j)
    T = _suffix_joint(P, i, j)
    mass = T.sum(axis=2)
    pos = mass > 0
    C = np.divide(T, mass[:, :, None], out=np.zeros_like(T), where=pos[:, :, None])
    best = 0.0
    for w in range(P.a):
        for w2 in range(w + 1, P.a):
            ok = pos[:, w] & pos[:, w2]
            if ok.any():
                tv = 0.5 * np.abs(C[ok, w] - C[ok, w2]).sum(axis=1)
                best = max(best, float(tv.max()))
    return best


def delta_matrix(P: DiscreteMeasure) -> MixingMatrix:
    n = P.n
    D = np.eye(n)
    for i in range(1, n):
        for j in range(i + 1, n + 1):
            D[i - 1, j - 1] = eta_bar(P, i, j)
    return MixingMatrix(n, D, "delta")


def gamma_matrix(P: DiscreteMeasure | MixingMatrix) -> MixingMatrix:
    D = P if isinstance(P, MixingMatrix) else delta_matrix(P)
    if D.kind != "delta":
        raise ValueError("gamma is built from a delta matrix")
    return MixingMatrix(D.n, np.sqrt(np.clip(D.entries, 0.0, None)), "gamma")


def inf_norm(M: MixingMatrix) -> float:
    """l_inf operator norm: the largest row sum."""
    return float(np.abs(M.entries).sum(axis=1).max())


def spectral_norm(M, rtol: float = 1e-10, max_iter: int = 10_000) -> float:
    """Largest singular value by power iteration on M^T M, started at the all-ones vector.

    Raises
    ------
    SpectralNormError
        If the Rayleigh quotient has not settled to ``rtol`` after ``max_iter`` steps.
    """
    A = M.entries if isinstance(M, MixingMatrix) else np.asarray(M, dtype=float)
    G = A.T @ A
    v = np.ones(G.shape[0]) / np.sqrt(G.shape[0])
    lam = float(v @ G @ v)
    history = [lam]
    for it in range(1, max_iter + 1):
        u = G @ v
        norm = np.linalg.norm(u)
        if norm == 0.0:
            return 0.0
        v = u / norm
        new = float(v @ G @ v)
        history.append(new)
        if abs(new - lam) <= rtol * abs(new):
            return float(np.sqrt(new))
        lam = new
    raise SpectralNormError(
        f"power iteration did not converge in {max_iter} steps", max_iter, history[-5:])


def gershgorin_bound(M) -> float:
    """sqrt of the largest absolute row sum of M^T M; bounds the spectral norm."""
    A = M.entries if isinstance(M, MixingMatrix) else np.asarray(M, dtype=float)
    return float(np.sqrt(np.abs(A.T @ A).sum(axis=1).max()))


def h_p(P: DiscreteMeasure) -> float:
    return inf_norm(delta_matrix(P))


def h_sequence(measures) -> dict:
    """H values across a sequence of measures of growing dimension.

    ``looks_bounded`` is a finite-sample heuristic: the log-log slope of H
    against n stays below 0.1.
    """
    ns = np.array([P.n for P in measures], dtype=float)
    hs = np.array([h_p(P) for P in measures])
    slope = float(np.polyfit(np.log(ns), np.log(hs), 1)[0]) if len(ns) > 1 else 0.0
    return {"n": ns.astype(int).tolist(), "H": hs.tolist(), "sup": float(hs.max()),
            "loglog_slope": slope, "looks_bounded": slope < 0.1}


def phi_coefficient(P: DiscreteMeasure, k: int) -> float:
    """phi_k = max over cuts j of sup |P(B|A) - P(B)|, A in sigma(X_1..j), B in sigma(X_{j+k}..n).

    For a fixed A the sup over B is the TV distance between L(X_{j+k..n} | A)
    and L(X_{j+k..n}); L(.|A) is a P-weighted mixture of the conditionals
    given single prefix atoms, and TV is convex, so the sup over A is
    attained at an atom. The value is therefore exact at every size.
    """
    if not 1 <= k < P.n:
        raise ValueError(f"gap must be in 1..{P.n - 1}, got {k}")
    a, n = P.a, P.n
    best = 0.0
    for j in range(1, n - k + 1):
        T = P.p.reshape(a ** j, a ** (k - 1), a ** (n - j - k + 1)).sum(axis=1)
        mass = T.sum(axis=1)
        future = T.sum(axis=0)
        pos = mass > 0
        cond = T[pos] / mass[pos, None]
        tv = 0.5 * np.abs(cond - future[None, :]).sum(axis=1)
        best = max(best, float(tv.max()))
    return best


def doeblin_coefficient(kernel) -> float:
    """Largest TV distance between two rows of a stochastic matrix."""
    K = np.asarray(kernel, dtype=float)
    if K.ndim != 2 or K.shape[0] != K.shape[1]:
        raise ValueError("kernel must be square")
    if np.any(K < 0) or np.any(np.abs(K.sum(axis=1) - 1) > 1e-12):
        raise ValueError("kernel must be stochastic")
    diffs = np.abs(K[:, None, :] - K[None, :, :]).sum(axis=2)
    return 0.5 * float(diffs.max())
