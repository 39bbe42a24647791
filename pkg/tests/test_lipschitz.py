import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

import oracles
from concentration_lab.lipschitz import (
    MAX_LP_POINTS, WeightedSpace, alternating_grid_function, check_psi_dominance, grid_map,
    inner_product, l1_norm, lipschitz_constraints, marginal_projection, max_pairing, phi_norm,
    psi_n, psi_norm, truncation_dominance_check)
from concentration_lab.metrics import (FunctionTable, MetricSpec, diameter, distance,
                                       lipschitz_constant)

HAM = MetricSpec("hamming")
values = st.floats(-1, 1, allow_nan=False)


def test_marginal_projection_example():
    pi = marginal_projection(FunctionTable(2, 2, [1.0, 2.0, 3.0, 4.0]))
    np.testing.assert_array_equal(pi.values, [4.0, 6.0])
    assert marginal_projection(FunctionTable(1, 2, [1.0, 2.0])) == 3.0


@given(st.sampled_from([(2, 3, 1.0), (3, 2, 1.0), (2, 4, 0.25)]), st.data())
def test_psi_matches_recursion(shape, data):
    n, a, w = shape
    f = data.draw(arrays(float, a ** n, elements=values))
    want = oracles.psi(dict(zip(oracles.sequences(n, a), f)), n, a, w)
    assert psi_n(f, WeightedSpace(n, a, w)) == pytest.approx(want, abs=1e-12)


@given(st.sampled_from([(2, 3), (3, 2), (4, 2)]), st.data())
def test_psi_sandwich_and_trivial_bound(shape, data):
    n, a = shape
    space = WeightedSpace.counting(n, a)
    f = data.draw(arrays(float, a ** n, elements=values))
    l1 = l1_norm(f, space)
    assert 0.5 * l1 - 1e-10 <= psi_norm(f, space) <= n * l1 + 1e-10
    assert psi_n(f, space) <= n * l1 + 1e-10


def test_lp_example_single_bit():
    # vertices (0,0),(1,0),(0,1),(1,1) give <f,g> in {0,1,-1,0}
    assert phi_norm(np.array([1.0, -1.0]), HAM, WeightedSpace.counting(1, 2)) == 1.0


def test_one_point_space():
    assert phi_norm(np.array([3.0]), HAM, WeightedSpace.counting(1, 1)) == 0.0


def test_single_coordinate_hamming_closed_form(rng):
    # with n = 1 every g in [0, 1] is 1-Lipschitz, so the sup is sum f_+
    for _ in range(20):
        f = rng.uniform(-1, 1, size=5)
        got, g = max_pairing(f, HAM, WeightedSpace.counting(1, 5))
        assert got == pytest.approx(np.clip(f, 0, None).sum(), abs=1e-9)


CASES = [(HAM, WeightedSpace.counting(2, 3)), (HAM, WeightedSpace.counting(3, 2)),
         (MetricSpec("nhamming"), WeightedSpace.counting(2, 3)),
         (MetricSpec("dm", m=4), WeightedSpace.grid(2, 4)),
         (MetricSpec("lp", p=1, m=3), WeightedSpace.grid(2, 3)),
         (MetricSpec("lp", p=2, m=3), WeightedSpace.grid(2, 3))]


@pytest.mark.parametrize("spec,space", CASES, ids=lambda c: str(c))
def test_lp_matches_dense_all_pairs(spec, space, rng):
    diam = diameter(spec, space.n, space.a)
    for _ in range(3):
        f = rng.uniform(-1, 1, size=space.a ** space.n)
        fd = dict(zip(oracles.sequences(space.n, space.a), f))
        want = oracles.lp_sup(fd, lambda x, y: distance(spec, x, y), diam, space.coord_weight)
        got, g = max_pairing(f, spec, space)
        assert got == pytest.approx(want, abs=1e-7)
        # the maximizer is feasible
        assert lipschitz_constant(FunctionTable(space.n, space.a, g), spec) <= 1 + 1e-8
        assert g.min() >= -1e-9 and g.max() <= diam + 1e-9


def test_thin_constraints_only_for_path_metrics():
    with pytest.raises(ValueError):
        lipschitz_constraints(MetricSpec("lp", p=2, m=3), 2, 3, thin=True)
    A, b = lipschitz_constraints(HAM, 2, 2)
    assert A.shape == (8, 4) and np.all(b == 1)


@given(arrays(float, 9, elements=values), arrays(float, 9, elements=st.floats(0, 2)))
def test_pairing_below_diam_times_l1(f, g):
    space = WeightedSpace.counting(2, 3)
    # any g with values in [0, diam] obeys the trivial bound
    assert abs(inner_product(f, g, space)) <= diameter(HAM, 2, 3) * l1_norm(f, space) + 1e-12


def test_phi_is_seminorm(rng):
    space = WeightedSpace.counting(2, 2)
    f, h = rng.normal(size=4), rng.normal(size=4)
    assert phi_norm(f + h, HAM, space) <= phi_norm(f, HAM, space) + phi_norm(h, HAM, space) + 1e-9
    assert phi_norm(-2.5 * f, HAM, space) == pytest.approx(2.5 * phi_norm(f, HAM, space),
                                                           rel=1e-8)


def test_lp_cap():
    with pytest.raises(ValueError):
        max_pairing(np.zeros(3 ** 6), HAM, WeightedSpace.counting(6, 3))
    assert 3 ** 5 <= MAX_LP_POINTS


@pytest.mark.parametrize("spec,space", [
    (HAM, WeightedSpace.counting(2, 3)),
    (MetricSpec("lp", p=1, m=4), WeightedSpace.grid(2, 4)),
    (MetricSpec("nhamming"), WeightedSpace.counting(2, 3)),
], ids=str)
def test_dominance_small(spec, space):
    rep = check_psi_dominance(spec, space, trials=40, seed=1)
    assert rep.passed and rep.max_ratio <= 1 + 1e-6
    js = rep.to_json()
    assert set(js) >= {"pass", "max_ratio", "worst_f_digest"}
    again = check_psi_dominance(spec, space, trials=40, seed=1)
    assert again.worst_f_digest == rep.worst_f_digest


def test_grid_map():
    np.testing.assert_array_equal(grid_map([0.0, 0.25, 0.2499999, 0.999, 1.0], 4),
                                  [0, 1, 0, 3, 3])
    np.testing.assert_array_equal(grid_map([0.3, 0.6, 0.9], 10), [3, 6, 9])
    with pytest.raises(ValueError):
        grid_map([1.2], 4)


@pytest.mark.parametrize("N", [2, 4, 8, 16])
def test_alternating_function_weak_norm(N):
    f = alternating_grid_function(N)
    space = WeightedSpace.grid(1, N)
    assert l1_norm(f, space) == pytest.approx(1.0)
    # pair each even cell with the next odd cell: N/2 pairs, each gap <= 1/N, weight 1/N
    assert phi_norm(f, MetricSpec("lp", p=1, m=N), space) == pytest.approx(1 / (2 * N), abs=1e-9)
    assert psi_norm(f, space) >= 0.5


def test_truncation_nonnegative(rng):
    f = FunctionTable(2, 6, rng.random(36))
    rep = truncation_dominance_check(f, [2, 4, 6])
    assert rep.passed
    assert rep.phi_monotone and rep.psi_monotone
    assert rep.phi_sup[-1] == pytest.approx(rep.phi_full, abs=1e-9)
