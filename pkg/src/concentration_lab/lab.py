"""Experiment harness: exact sampling, Monte Carlo tails against the closed-form
bounds, the R_n asymptotics table and the re-indexing comparison."""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from statsmodels.stats.proportion import proportion_confint

from . import bounds as B
from .measure import DiscreteMeasure, load_measure, make_forbidden, make_row_homogeneous, reindex
from .metrics import FunctionTable, MetricSpec, lipschitz_constant, random_lipschitz
from .martingale import martingale_profile
from .mixing import delta_matrix, doeblin_coefficient, gamma_matrix, inf_norm, spectral_norm

CSV_VERSION = "# concentration-lab v1"
RNG_ID = "numpy.random.PCG64 via SeedSequence([seed, chunk])"
CHUNK = 1 << 14
EXACT_MEAN_MAX_STATES = 1 << 20


class ConfigError(ValueError):
    pass


# -- sampling ---------------------------------------------------------------

def _prefix_masses(P: DiscreteMeasure) -> list:
    return [P.p.reshape(P.a ** i, -1).sum(axis=1) for i in range(P.n + 1)]


def sample(P: DiscreteMeasure, size: int, rng: np.random.Generator,
           masses: list | None = None) -> np.ndarray:
    """Draw ``size`` flat table indices by sequential conditional sampling.

    X_1 comes from the first marginal, then each X_i from the conditional law
    given the prefix drawn so far.
    """
    masses = _prefix_masses(P) if masses is None else masses
    idx = np.zeros(size, dtype=np.int64)
    for i in range(1, P.n + 1):
        children = masses[i].reshape(-1, P.a)[idx]          # (size, a)
        cum = np.cumsum(children, axis=1)
        u = rng.random(size) * cum[:, -1]
        w = (u[:, None] >= cum).sum(axis=1)
        # guard against u landing on a zero-mass tail due to rounding
        w = np.minimum(w, P.a - 1)
        while True:
            bad = children[np.arange(size), w] <= 0
            if not bad.any():
                break
            w[bad] -= 1
        idx = idx * P.a + w
    return idx


def sample_sequence(P: DiscreteMeasure, seed) -> tuple[int, ...]:
    """One draw from P as a tuple in the alphabet."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    idx = int(sample(P, 1, rng)[0])
    return tuple(int(v) for v in np.unravel_index(idx, (P.a,) * P.n))


def sample_values(P: DiscreteMeasure, f, samples: int, seed: int, workers: int = 1) -> np.ndarray:
    """f evaluated at ``samples`` draws; chunk c uses SeedSequence([seed, c]).

    The chunking fixes the stream, so the result does not depend on ``workers``.
    """
    vals = f.values if isinstance(f, FunctionTable) else np.asarray(f, dtype=float)
    masses = _prefix_masses(P)
    sizes = [min(CHUNK, samples - s) for s in range(0, samples, CHUNK)]

    def run(c):
        rng = np.random.default_rng(np.random.SeedSequence([seed, c]))
        return vals[sample(P, sizes[c], rng, masses)]

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(run, range(len(sizes))))
    else:
        parts = [run(c) for c in range(len(sizes))]
    return np.concatenate(parts) if parts else np.empty(0)


# -- tail experiment --------------------------------------------------------

@dataclass
class ExperimentConfig:
    measure: object
    metric: str
    t_grid: list
    function: object = None
    function_seed: int | None = None
    samples: int = 100_000
    seed: int = 0
    output: object = None
    convex: bool = False
    force_sampling: bool = False
    workers: int = 1

    def __post_init__(self):
        if int(self.samples) < 1:
            raise ConfigError("sample count must be at least 1")
        t = np.asarray(self.t_grid, dtype=float)
        if t.ndim != 1 or t.size == 0 or np.any(np.diff(t) <= 0) or np.any(t < 0):
            raise ConfigError("t grid must be a nonempty, nonnegative, strictly increasing list")
        if self.function is None and self.function_seed is None:
            raise ConfigError("give a function file or a generator seed")


def parse_t_grid(text: str) -> np.ndarray:
    """``a:b:steps`` -> ``steps`` evenly spaced points from a to b inclusive."""
    try:
        a, b, steps = text.split(":")
        grid = np.linspace(float(a), float(b), int(steps))
    except ValueError:
        raise ConfigError(f"t grid must look like a:b:steps, got {text!r}") from None
    return grid


def load_function(path) -> FunctionTable:
    with open(Path(path)) as fh:
        data = json.load(fh)
    if isinstance(data, dict):
        return FunctionTable(int(data["n"]), int(data["a"]), data["values"])
    return FunctionTable.from_nested(data)


def save_function(f: FunctionTable, path) -> None:
    with open(Path(path), "w") as fh:
        json.dump(f.to_nested(), fh)


@dataclass
class TailReport:
    """Per-t empirical tails with Wilson 95% intervals and bound values.

    ``bounds[name]`` holds the curve on the t grid; ``violated[name]`` marks
    t values where the bound lies below the lower Wilson limit of the tail it
    applies to. Only curves listed in ``applicable`` are checked.
    """

    t: np.ndarray
    tail: np.ndarray
    ci_low: np.ndarray
    ci_high: np.ndarray
    median_tail: np.ndarray
    median_ci_low: np.ndarray
    median_ci_high: np.ndarray
    bounds: dict
    applicable: dict
    violated: dict
    meta: dict = field(default_factory=dict)

    @property
    def any_violation(self) -> bool:
        return any(bool(np.any(v)) for k, v in self.violated.items() if self.applicable[k])

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(CSV_VERSION + "\n")
        buf.write(f"# rng: {RNG_ID}\n")
        for k in sorted(self.meta):
            buf.write(f"# {k}: {self.meta[k]!r}\n")
        names = sorted(self.bounds)
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "tail", "ci_low", "ci_high", "median_tail", "median_ci_low",
                    "median_ci_high"] + [c for n in names for c in (n, f"{n}_violated")])
        for k in range(self.t.size):
            row = [repr(float(x[k])) for x in (self.t, self.tail, self.ci_low, self.ci_high,
                                               self.median_tail, self.median_ci_low,
                                               self.median_ci_high)]
            for n in names:
                row += [repr(float(self.bounds[n][k])),
                        int(bool(self.violated[n][k])) if self.applicable[n] else ""]
            w.writerow(row)
        return buf.getvalue()


def _wilson(counts, nobs):
    lo, hi = proportion_confint(counts, nobs, alpha=0.05, method="wilson")
    return np.asarray(lo, dtype=float), np.asarray(hi, dtype=float)


def _is_product(P: DiscreteMeasure, D=None) -> bool:
    D = delta_matrix(P) if D is None else D
    return bool(np.allclose(D.entries, np.eye(P.n), atol=1e-12))


def _theta(P: DiscreteMeasure, product: bool):
    if product:
        return 0.0
    if P.kind == "markov":
        th = doeblin_coefficient(P.params["kernel"])
        return th if th < 1 else None
    return None


def monte_carlo_tail(config: ExperimentConfig) -> TailReport:
    P = config.measure if isinstance(config.measure, DiscreteMeasure) else load_measure(config.measure)
    spec = MetricSpec.parse(config.metric) if isinstance(config.metric, str) else config.metric
    if config.function is not None:
        f = config.function if isinstance(config.function, FunctionTable) else load_function(config.function)
        if (f.n, f.a) != (P.n, P.a):
            raise ConfigError(f"function lives on a^{f.n} with a={f.a}, measure on {P.a}^{P.n}")
    else:
        f = random_lipschitz(spec, P.n, P.a, seed=int(config.function_seed))
    t = np.asarray(config.t_grid, dtype=float)
    n_samples = int(config.samples)

    draws = sample_values(P, f, n_samples, int(config.seed), config.workers)
    exact = P.size <= EXACT_MEAN_MAX_STATES and not config.force_sampling
    if exact:
        mean, stderr = float(P.p @ f.values), 0.0
        med = B.median(P, f)
    else:
        mean = float(draws.mean())
        stderr = float(draws.std(ddof=1) / math.sqrt(n_samples)) if n_samples > 1 else math.inf
        med = float(np.quantile(draws, 0.5, method="inverted_cdf"))

    dev = np.abs(draws - mean)
    counts = (dev[None, :] > t[:, None]).sum(axis=1)
    mdev = np.abs(draws - med)
    mcounts = (mdev[None, :] > t[:, None]).sum(axis=1)
    lo, hi = _wilson(counts, n_samples)
    mlo, mhi = _wilson(mcounts, n_samples)

    D = delta_matrix(P)
    dnorm = inf_norm(D)
    lip = lipschitz_constant(f, spec)
    # the main bound and McDiarmid/Marton are stated for (normalized) Hamming
    lip_ham = lipschitz_constant(f, MetricSpec("hamming"))
    lip_nh = P.n * lip_ham
    # Samson: Euclidean metric on the points k / (a - 1) of [0, 1]
    lip_l2 = lipschitz_constant(f, MetricSpec("lp", p=2.0, m=P.a)) * (P.a - 1) / P.a
    product = _is_product(P, D)
    theta = _theta(P, product)
    prof = martingale_profile(P, f)
    gnorm = spectral_norm(gamma_matrix(D))
    step = np.where(t > 0, 0.0, 2.0)      # any bound for a constant f

    curves, applicable, centered = {}, {}, {}
    curves["main"] = B.main_bound(P.n, lip_ham, dnorm, t)
    applicable["main"], centered["main"] = True, "mean"
    d2 = prof.d2
    curves["azuma"] = B.azuma_bound(d2, t) if d2 > 0 else step
    applicable["azuma"], centered["azuma"] = True, "mean"
    curves["mcdiarmid"] = B.mcdiarmid_bound(P.n, t, lip_nh) if lip_nh > 0 else step
    applicable["mcdiarmid"], centered["mcdiarmid"] = product, "mean"
    curves["samson"] = B.samson_bound(gnorm, t, lip_l2) if lip_l2 > 0 else step
    applicable["samson"], centered["samson"] = bool(config.convex), "mean"
    if theta is not None:
        curves["marton"] = B.marton_bound(P.n, theta, t, lip_nh) if lip_nh > 0 else step
        applicable["marton"], centered["marton"] = True, "median"

    violated = {}
    for name, vals in curves.items():
        lower = lo if centered[name] == "mean" else mlo
        violated[name] = np.asarray(vals) < lower
    meta = {"samples": n_samples, "seed": int(config.seed), "n": P.n, "a": P.a,
            "metric": str(spec), "mean": mean, "mean_exact": exact, "mean_stderr": stderr,
            "median": med, "lip": lip, "lip_hamming": lip_ham, "lip_l2": lip_l2,
            "delta_inf_norm": dnorm,
            "gamma_spectral_norm": gnorm, "D2": d2, "product": product,
            "theta": theta, "convex_attested": bool(config.convex)}
    report = TailReport(t, counts / n_samples, lo, hi, mcounts / n_samples, mlo, mhi,
                        {k: np.asarray(v, dtype=float) for k, v in curves.items()},
                        applicable, violated, meta)
    if config.output is not None:
        Path(config.output).write_text(report.to_csv())
    return report


# -- R_n asymptotics --------------------------------------------------------

def loglog_slope(ns, values) -> float:
    return float(np.polyfit(np.log(np.asarray(ns, float)), np.log(np.asarray(values, float)), 1)[0])


def rn_experiment(n_min: int, n_max: int, output=None) -> list[dict]:
    """For each n, ||Delta||_inf, ||Gamma||_2 and R_n for the row-homogeneous and
    forbidden families."""
    if n_max > 16:
        raise ConfigError("n_max is capped at 16")
    if not 2 <= n_min <= n_max:
        raise ConfigError("need 2 <= n_min <= n_max")
    rows = []
    for family, build in (("row_homogeneous", make_row_homogeneous), ("forbidden", make_forbidden)):
        for n in range(n_min, n_max + 1):
            D = delta_matrix(build(n))
            dn = inf_norm(D)
            gn = spectral_norm(gamma_matrix(D))
            rows.append({"family": family, "n": n, "delta_inf_norm": dn,
                         "gamma_spectral_norm": gn, "R_n": gn / dn})
    if output is not None:
        Path(output).write_text(rows_to_csv(rows))
    return rows


def rows_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    buf.write(CSV_VERSION + "\n")
    if rows:
        w = csv.writer(buf, lineterminator="\n")
        keys = list(rows[0])
        w.writerow(keys)
        for r in rows:
            w.writerow([repr(v) if isinstance(v, float) else v for v in (r[k] for k in keys)])
    return buf.getvalue()


# -- re-indexing ------------------------------------------------------------

def reindex_experiment(n: int, perm=None, t_grid=None) -> dict:
    """Forbidden measure before and after relabeling the coordinates.

    The default permutation swaps coordinates 2 and n. The symmetric test
    function is the mean of the bits, whose law is the same in both orders.
    """
    if n < 3:
        raise ConfigError("re-indexing experiment needs n >= 3")
    if perm is None:
        perm = list(range(1, n + 1))
        perm[1], perm[n - 1] = n, 2
    X = make_forbidden(n)
    Y = reindex(X, perm)
    spec = MetricSpec("hamming")
    f = FunctionTable.from_callable(lambda x: float(np.mean(x)), n, 2)
    lip = lipschitz_constant(f, spec)
    t = np.linspace(0.0, 1.0, 21) if t_grid is None else np.asarray(t_grid, dtype=float)
    dx, dy = inf_norm(delta_matrix(X)), inf_norm(delta_matrix(Y))
    return {
        "n": n, "perm": list(perm), "delta_inf_norm_before": dx, "delta_inf_norm_after": dy,
        "t": t.tolist(),
        "main_bound_before": np.atleast_1d(B.main_bound(n, lip, dx, t)).tolist(),
        "main_bound_after": np.atleast_1d(B.main_bound(n, lip, dy, t)).tolist(),
        "exact_tail_before": np.atleast_1d(B.exact_tail(X, f, t)).tolist(),
        "exact_tail_after": np.atleast_1d(B.exact_tail(Y, f, t)).tolist(),
    }
