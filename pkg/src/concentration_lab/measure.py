"""Probability measures and signed densities on finite product spaces.

Tables are stored flat, indexed lexicographically with x_1 as the most
significant digit, so ``p.reshape((a,) * n)[x_1, ..., x_n]`` is p(x).
The carrying measure is always counting measure on the alphabet.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

MASS_TOL = 1e-12
MAX_LOG2_STATES = 24


class MeasureError(ValueError):
    """Invalid measure construction or an undefined conditional."""


class ConstructionError(RuntimeError):
    """A numerical construction failed to converge or bracket."""


def _check_size(n: int, a: int) -> None:
    if n < 1 or a < 1:
        raise MeasureError(f"need n >= 1 and a >= 1, got n={n}, a={a}")
    if n * math.log2(max(a, 1)) > MAX_LOG2_STATES + 1e-9:
        raise MeasureError(
            f"a**n = {a}**{n} exceeds the 2**{MAX_LOG2_STATES} table cap")


def _frozen(values) -> np.ndarray:
    arr = np.array(values, dtype=float).ravel()
    arr.setflags(write=False)
    return arr


def index_to_sequence(index: int, n: int, a: int) -> tuple[int, ...]:
    return tuple(int(v) for v in np.unravel_index(index, (a,) * n))


def sequence_to_index(x: Sequence[int], a: int) -> int:
    idx = 0
    for v in x:
        idx = idx * a + int(v)
    return idx


def all_sequences(n: int, a: int) -> np.ndarray:
    """Return the (a**n, n) array of all points of the space in table order."""
    return np.array(list(itertools.product(range(a), repeat=n)), dtype=np.int64).reshape(-1, n)


@dataclass(frozen=True, eq=False)
class SignedDensity:
    """Real table on the alphabet^n with no sign or normalization constraint."""

    n: int
    a: int
    h: np.ndarray

    def __post_init__(self):
        _check_size(self.n, self.a)
        object.__setattr__(self, "h", _frozen(self.h))
        if self.h.size != self.a ** self.n:
            raise MeasureError(f"table has {self.h.size} entries, expected {self.a ** self.n}")
        if not np.all(np.isfinite(self.h)):
            raise MeasureError("signed density has non-finite entries")

    def __sub__(self, other: SignedDensity) -> SignedDensity:
        return SignedDensity(self.n, self.a, self.h - other.h)


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """Probability measure on {0..a-1}^n given by its density table ``p``.

    Attributes
    ----------
    n : int
        Number of coordinates.
    a : int
        Alphabet size.
    p : ndarray
        Read-only table of length ``a**n``.
    """

    n: int
    a: int
    p: np.ndarray
    kind: str = field(default="explicit", compare=False)
    params: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        _check_size(self.n, self.a)
        object.__setattr__(self, "p", _frozen(self.p))
        if self.p.size != self.a ** self.n:
            raise MeasureError(f"table has {self.p.size} entries, expected {self.a ** self.n}")
        if not np.all(np.isfinite(self.p)) or np.any(self.p < 0):
            raise MeasureError("density entries must be finite and nonnegative")
        total = float(self.p.sum())
        if abs(total - 1.0) > MASS_TOL:
            raise MeasureError(f"density sums to {total!r}, not 1")

    @property
    def size(self) -> int:
        return self.p.size

    def tensor(self) -> np.ndarray:
        return self.p.reshape((self.a,) * self.n)

    def prob(self, x: Sequence[int]) -> float:
        return float(self.p[sequence_to_index(x, self.a)])

    def prefix_mass(self, prefix: Sequence[int]) -> float:
        k = len(prefix)
        if k == 0:
            return 1.0
        block = self.a ** (self.n - k)
        start = sequence_to_index(prefix, self.a) * block
        return float(self.p[start:start + block].sum())

    def __sub__(self, other: DiscreteMeasure) -> SignedDensity:
        if (self.n, self.a) != (other.n, other.a):
            raise MeasureError("measures live on different spaces")
        return SignedDensity(self.n, self.a, self.p - other.p)

    def __eq__(self, other):
        if not isinstance(other, DiscreteMeasure):
            return NotImplemented
        return (self.n, self.a) == (other.n, other.a) and np.array_equal(self.p, other.p)

    __hash__ = None


@dataclass(frozen=True)
class MeasureFamily:
    """Measures on dimensions 1..n over a shared alphabet."""

    members: tuple[DiscreteMeasure, ...]

    def __post_init__(self):
        members = tuple(self.members)
        object.__setattr__(self, "members", members)
        if not members:
            raise MeasureError("empty family")
        for k, m in enumerate(members, start=1):
            if m.n != k or m.a != members[0].a:
                raise MeasureError(f"member {k} has n={m.n}, a={m.a}")
        for k in range(1, len(members)):
            reduced = marginal_prefix(members[k], k)
            if np.max(np.abs(reduced.p - members[k - 1].p)) > MASS_TOL:
                raise MeasureError(f"members {k} and {k + 1} are not consistent")

    @classmethod
    def from_measure(cls, P: DiscreteMeasure) -> MeasureFamily:
        return cls(tuple(marginal_prefix(P, k) for k in range(1, P.n + 1)))

    def __len__(self):
        return len(self.members)

    def __getitem__(self, k):
        return self.members[k]


def _as_prob_vector(v, name: str) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or v.size == 0:
        raise MeasureError(f"{name} must be a nonempty vector")
    if np.any(v < 0) or not np.all(np.isfinite(v)):
        raise MeasureError(f"{name} has negative or non-finite entries")
    if abs(v.sum() - 1.0) > MASS_TOL:
        raise MeasureError(f"{name} sums to {v.sum()!r}, not 1")
    return v


def make_product(marginals) -> DiscreteMeasure:
    """Product measure with the given per-coordinate probability vectors."""
    vecs = [_as_prob_vector(m, f"marginal {i + 1}") for i, m in enumerate(marginals)]
    if not vecs:
        raise MeasureError("need at least one marginal")
    a = vecs[0].size
    if any(v.size != a for v in vecs):
        raise MeasureError("marginals have different alphabet sizes")
    _check_size(len(vecs), a)
    p = vecs[0]
    for v in vecs[1:]:
        p = np.multiply.outer(p, v).ravel()
    return DiscreteMeasure(len(vecs), a, p, kind="product",
                           params={"marginals": [v.tolist() for v in vecs]})


def make_markov(init, kernel, n: int) -> DiscreteMeasure:
    """Markov chain law: p(x) = init(x_1) * prod kernel(x_i, x_{i+1})."""
    init = _as_prob_vector(init, "init")
    kernel = np.asarray(kernel, dtype=float)
    a = init.size
    if kernel.shape != (a, a):
        raise MeasureError(f"kernel must be {a}x{a}, got {kernel.shape}")
    for r in range(a):
        _as_prob_vector(kernel[r], f"kernel row {r}")
    _check_size(n, a)
    p = init
    for _ in range(n - 1):
        # last coordinate of flat index idx is idx % a
        p = (p[:, None] * kernel[np.arange(p.size) % a]).ravel()
    return DiscreteMeasure(n, a, p, kind="markov",
                           params={"init": init.tolist(), "kernel": kernel.tolist()})


def make_forbidden(n: int) -> DiscreteMeasure:
    """Uniform on binary sequences with x_1 == x_n, zero elsewhere."""
    if n < 2:
        raise MeasureError("forbidden measure needs n >= 2")
    _check_size(n, 2)
    x = all_sequences(n, 2)
    p = np.where(x[:, 0] == x[:, -1], 2.0 ** (-n + 1), 0.0)
    return DiscreteMeasure(n, 2, p, kind="forbidden", params={"n": n})


def make_row_homogeneous(n: int, tol: float = 1e-12, max_iter: int = 80) -> DiscreteMeasure:
    """Binary measure whose mixing coefficients satisfy eta_bar(i, j) = 1/(n - i).

    Starting from the uniform measure, stage k reweights sequences with
    x_k == x_n by p_k and the rest by 1 - p_k, then renormalizes; p_k in
    [0, 1/2] is found by bisection so that the row-k constant equals
    1/(n - k).

    Raises
    ------
    ConstructionError
        If the row constant does not bracket the target on [0, 1/2].
    """
    from .mixing import eta_bar

    if n < 2:
        raise MeasureError("row-homogeneous construction needs n >= 2")
    _check_size(n, 2)
    x = all_sequences(n, 2)
    p = np.full(2 ** n, 2.0 ** -n)
    weights = []
    for k in range(1, n):
        good = x[:, k - 1] == x[:, n - 1]
        target = 1.0 / (n - k)
        base = p

        def stage(pk):
            q = base * np.where(good, pk, 1.0 - pk)
            return q / q.sum()

        def row_constant(pk):
            return eta_bar(DiscreteMeasure(n, 2, stage(pk)), k, k + 1)

        h_lo, h_hi = row_constant(0.0), row_constant(0.5)
        if not (h_lo >= target - tol and h_hi <= target + tol):
            raise ConstructionError(
                f"stage {k}: h(0)={h_lo!r}, h(1/2)={h_hi!r} do not bracket {target!r}")
        if abs(h_lo - target) <= tol:
            pk = 0.0
        elif abs(h_hi - target) <= tol:
            pk = 0.5
        else:
            lo, hi = 0.0, 0.5
            for _ in range(max_iter):
                pk = 0.5 * (lo + hi)
                h = row_constant(pk)
                if abs(h - target) <= tol:
                    break
                if h > target:
                    lo = pk
                else:
                    hi = pk
            else:
                raise ConstructionError(f"stage {k}: bisection did not reach tolerance {tol}")
        weights.append(pk)
        p = stage(pk)
    return DiscreteMeasure(n, 2, p, kind="row_homogeneous",
                           params={"n": n, "p_k": weights})


def marginal_prefix(P: DiscreteMeasure, k: int) -> DiscreteMeasure:
    """Law of (X_1, ..., X_k)."""
    if not 1 <= k <= P.n:
        raise MeasureError(f"k must be in 1..{P.n}, got {k}")
    if k == P.n:
        return P
    q = P.p.reshape(P.a ** k, -1).sum(axis=1)
    return DiscreteMeasure(k, P.a, q / q.sum())


def conditional(P: DiscreteMeasure, prefix: Sequence[int]) -> DiscreteMeasure:
    """Law of X_{i+1..n} given X_{1..i} = prefix.

    Raises
    ------
    MeasureError
        If the prefix has zero probability or is the full sequence.
    """
    i = len(prefix)
    if not 0 <= i < P.n:
        raise MeasureError(f"prefix length must be in 0..{P.n - 1}, got {i}")
    if any(not 0 <= int(v) < P.a for v in prefix):
        raise MeasureError(f"prefix {tuple(prefix)} outside the alphabet")
    block = P.a ** (P.n - i)
    start = sequence_to_index(prefix, P.a) * block
    q = P.p[start:start + block]
    mass = q.sum()
    if mass <= 0:
        raise MeasureError(f"conditional undefined: prefix {tuple(prefix)} has zero probability")
    return DiscreteMeasure(P.n - i, P.a, q / mass)


def total_variation(h) -> float:
    """Half the l1 mass of a signed density (probabilists' convention)."""
    h = h.h if isinstance(h, SignedDensity) else np.asarray(h, dtype=float)
    return 0.5 * float(np.abs(h).sum())


def positive_part_mass(h) -> float:
    h = h.h if isinstance(h, SignedDensity) else np.asarray(h, dtype=float)
    return float(np.clip(h, 0.0, None).sum())


def reindex(P: DiscreteMeasure, perm: Sequence[int]) -> DiscreteMeasure:
    """Law of Y with Y_i = X_{perm(i)}; ``perm`` is 1-based."""
    perm = [int(v) for v in perm]
    if sorted(perm) != list(range(1, P.n + 1)):
        raise MeasureError(f"{perm} is not a permutation of 1..{P.n}")
    q = np.transpose(P.tensor(), [v - 1 for v in perm])
    return DiscreteMeasure(P.n, P.a, q.ravel(), kind="explicit")


# -- JSON measure specs -----------------------------------------------------

def measure_from_spec(spec: dict) -> DiscreteMeasure:
    """Build a measure from a ``{"kind": ..., ...}`` mapping."""
    if not isinstance(spec, dict) or "kind" not in spec:
        raise MeasureError("measure spec must be an object with a 'kind' field")
    kind = spec["kind"]
    try:
        if kind == "product":
            return make_product(spec["marginals"])
        if kind == "markov":
            return make_markov(spec["init"], spec["kernel"], int(spec["n"]))
        if kind == "forbidden":
            return make_forbidden(int(spec["n"]))
        if kind == "row_homogeneous":
            return make_row_homogeneous(int(spec["n"]))
        if kind == "explicit":
            return DiscreteMeasure(int(spec["n"]), int(spec["a"]), spec["p"])
    except KeyError as exc:
        raise MeasureError(f"measure spec of kind {kind!r} is missing {exc}") from None
    raise MeasureError(f"unknown measure kind {kind!r}")


def measure_to_spec(P: DiscreteMeasure, explicit: bool = True) -> dict:
    if not explicit and P.kind in ("product", "markov", "forbidden", "row_homogeneous"):
        spec = {"kind": P.kind, **{k: v for k, v in P.params.items() if k != "p_k"}}
        if P.kind == "markov":
            spec["n"] = P.n
        return spec
    return {"kind": "explicit", "n": P.n, "a": P.a, "p": [float(v) for v in P.p]}


def load_measure(path) -> DiscreteMeasure:
    with open(Path(path)) as fh:
        return measure_from_spec(json.load(fh))


def save_measure(P: DiscreteMeasure, path, explicit: bool = True) -> None:
    # json writes floats with repr(), the shortest round-tripping form
    with open(Path(path), "w") as fh:
        json.dump(measure_to_spec(P, explicit), fh)
