"""Step-curve construction, truncation, evaluation and exact clearing."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from erfcurves import (
    DEMAND,
    SUPPLY,
    BidLayer,
    StepCurve,
    build_demand_curve,
    build_supply_curve,
    clear_market,
    eval_step,
    truncate_curve,
)
from erfcurves.errors import (
    EmptyCurveError,
    InvalidArgumentError,
    InvalidLayerError,
    NoIntersectionError,
    OutOfDomainError,
)
from oracles import clearing_oracle


def offers(*pairs):
    return [BidLayer(v, p, SUPPLY) for v, p in pairs]


def bids(*pairs):
    return [BidLayer(v, p, DEMAND) for v, p in pairs]


def supply(*pts):
    return StepCurve.from_points(SUPPLY, pts)


def demand(*pts):
    return StepCurve.from_points(DEMAND, pts)


# construction -------------------------------------------------------------


def test_supply_cumulates_table_rows_exactly():
    curve = build_supply_curve(offers((13392.7, 0), (25, 0.1), (113.8, 1)))
    assert curve.points == [(13392.7, 0.0), (13417.7, 0.1), (13531.5, 1.0)]


def test_supply_single_layer():
    assert build_supply_curve(offers((10, 5))).points == [(10.0, 5.0)]


def test_supply_merges_equal_prices():
    assert build_supply_curve(offers((5, 7), (3, 7))).points == [(8.0, 7.0)]


def test_supply_sorts_by_price():
    curve = build_supply_curve(offers((1, 30), (2, 10), (3, 20)))
    assert curve.points == [(2.0, 10.0), (5.0, 20.0), (6.0, 30.0)]


def test_supply_errors():
    with pytest.raises(EmptyCurveError):
        build_supply_curve([])
    with pytest.raises(InvalidLayerError):
        build_supply_curve(offers((-1, 5)))
    with pytest.raises(InvalidLayerError):
        build_supply_curve(bids((1, 5)))


def test_zero_volume_layers_are_dropped():
    assert build_supply_curve(offers((0, 1), (4, 2))).points == [(4.0, 2.0)]
    with pytest.raises(EmptyCurveError):
        build_supply_curve(offers((0, 1)))


def test_demand_replaces_zero_price():
    assert build_demand_curve(bids((100, 0), (50, 60))).points == [(100.0, 3000.0), (150.0, 60.0)]


def test_demand_single_layer():
    assert build_demand_curve(bids((8, 40))).points == [(8.0, 40.0)]


def test_demand_replacement_then_merge():
    assert build_demand_curve(bids((10, 0), (10, 3000))).points == [(20.0, 3000.0)]


def test_demand_small_price_not_replaced():
    assert build_demand_curve(bids((10, 0.1), (5, 9))).points == [(5.0, 9.0), (15.0, 0.1)]


def test_demand_empty():
    with pytest.raises(EmptyCurveError):
        build_demand_curve([])


def test_stepcurve_rejects_broken_invariants():
    with pytest.raises(InvalidArgumentError):
        supply((10, 5), (10, 6))
    with pytest.raises(InvalidArgumentError):
        supply((10, 5), (20, 4))
    with pytest.raises(InvalidArgumentError):
        demand((10, 5), (20, 6))
    with pytest.raises(InvalidArgumentError):
        supply((10, 5), (20, 5))
    with pytest.raises(EmptyCurveError):
        StepCurve.from_points(SUPPLY, [])


layer_lists = st.lists(
    st.tuples(st.integers(0, 5000).map(lambda v: v / 10), st.integers(0, 300).map(lambda p: p / 10)),
    min_size=1, max_size=40,
).filter(lambda ls: any(v > 0 for v, _ in ls))


@settings(max_examples=10_000, deadline=None)
@given(layer_lists)
def test_built_curves_are_monotone_and_conserve_volume(layers):
    s = build_supply_curve(offers(*layers))
    d = build_demand_curve(bids(*layers))
    for curve in (s, d):
        assert np.all(np.diff(curve.quantities) > 0)
        assert curve.total_quantity == pytest.approx(sum(v for v, _ in layers), abs=1e-9)
    assert np.all(np.diff(s.prices) > 0)
    assert np.all(np.diff(d.prices) < 0)


# truncation -----------------------------------------------------------------


def test_truncate_supply_drops_expensive_steps():
    assert truncate_curve(supply((10, 5), (20, 700), (30, 3000)), 400).points == [(10.0, 5.0)]


def test_truncate_identity_below_cap():
    curve = supply((10, 5), (20, 50))
    assert truncate_curve(curve, 400) == curve
    d = demand((5, 300), (9, 120))
    assert truncate_curve(d, 400) == d


def test_truncate_demand_clamps():
    assert truncate_curve(demand((5, 3000), (9, 120)), 400).points == [(5.0, 400.0), (9.0, 120.0)]


def test_truncate_demand_merges_clamped_run():
    out = truncate_curve(demand((5, 3000), (7, 500), (9, 120)), 400)
    assert out.points == [(7.0, 400.0), (9.0, 120.0)]


def test_truncate_errors():
    with pytest.raises(EmptyCurveError):
        truncate_curve(supply((10, 500)), 400)
    with pytest.raises(InvalidArgumentError):
        truncate_curve(supply((10, 5)), 0)


# evaluation -----------------------------------------------------------------


def test_eval_step_semantics():
    curve = supply((10, 5), (20, 50))
    assert eval_step(curve, 10) == 5
    assert eval_step(curve, 10.01) == 50
    assert eval_step(supply((10, 5)), 0) == 5
    np.testing.assert_array_equal(eval_step(curve, [0, 10, 15, 20]), [5, 5, 50, 50])


def test_eval_step_out_of_domain():
    with pytest.raises(OutOfDomainError):
        eval_step(supply((10, 5)), 10.5)
    with pytest.raises(OutOfDomainError):
        eval_step(supply((10, 5)), -1)


# clearing -------------------------------------------------------------------


def test_clear_single_steps():
    eq = clear_market(supply((10, 5)), demand((8, 3000)))
    assert (eq.price, eq.quantity, eq.degenerate) == (5, 8, False)


def test_clear_two_steps_demand_price_is_marginal():
    # supply jumps 5 -> 50 at q=10 while demand sits at 20: the vertical
    # supply segment meets demand at (10, 20)
    eq = clear_market(supply((10, 5), (20, 50)), demand((5, 3000), (15, 20)))
    assert (eq.price, eq.quantity) == (20, 10)
    assert clearing_oracle([(10, 5), (20, 50)], [(5, 3000), (15, 20)]) == (20, 10, False)


def test_clear_no_intersection():
    with pytest.raises(NoIntersectionError):
        clear_market(supply((10, 100)), demand((10, 50)))


def test_clear_shared_plateau_is_degenerate():
    eq = clear_market(supply((10, 5), (20, 30)), demand((15, 30), (25, 1)))
    assert (eq.price, eq.quantity, eq.degenerate) == (30, 15, True)


def test_clear_coincident_jumps_is_degenerate():
    eq = clear_market(supply((10, 5), (20, 50)), demand((10, 40), (20, 1)))
    assert (eq.price, eq.quantity, eq.degenerate) == (5, 10, True)


def test_clear_demand_exhausted_first():
    eq = clear_market(supply((100, 5)), demand((40, 60), (50, 10)))
    assert (eq.price, eq.quantity) == (5, 50)


def _random_curve(rng, side):
    n = int(rng.integers(1, 7))
    q = np.cumsum(rng.integers(1, 5, size=n)).astype(float)
    p = np.sort(rng.choice(12, size=n, replace=False)).astype(float)
    return StepCurve(side, q, p if side == SUPPLY else p[::-1])


def test_clear_matches_oracle_on_small_grids():
    rng = np.random.default_rng(11)
    for _ in range(2000):
        s, d = _random_curve(rng, SUPPLY), _random_curve(rng, DEMAND)
        expected = clearing_oracle(s.points, d.points)
        if expected is None:
            with pytest.raises(NoIntersectionError):
                clear_market(s, d)
        else:
            eq = clear_market(s, d)
            assert (eq.price, eq.quantity, eq.degenerate) == expected


@settings(max_examples=300, deadline=None)
@given(st.data())
def test_clear_invariant_under_layer_split(data):
    s_layers = data.draw(layer_lists)
    d_layers = data.draw(layer_lists)
    s = build_supply_curve(offers(*s_layers))
    d = build_demand_curve(bids(*d_layers))
    k = data.draw(st.integers(0, len(s_layers) - 1))
    v, p = s_layers[k]
    part = data.draw(st.integers(0, int(round(v * 10)))) / 10
    split = s_layers[:k] + [(part, p), (round(v - part, 1), p)] + s_layers[k + 1:]
    s2 = build_supply_curve(offers(*split))
    assert s2 == s
    try:
        expected = clear_market(s, d)
    except NoIntersectionError:
        with pytest.raises(NoIntersectionError):
            clear_market(s2, d)
    else:
        assert clear_market(s2, d) == expected
