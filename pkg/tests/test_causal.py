import numpy as np
import pytest

from causalq import causal
from causalq.causal import (CausalOrder, CellRegion, Rect, build_order, cells,
                            causal_future, causal_past, classify_configuration,
                            cone_meets, fig2_preset, precedes, rect, spacelike)
from causalq.errors import CycleError


def test_rect_validation():
    with pytest.raises(ValueError):
        rect(1.0, 0.0, 0.0, 1.0)
    with pytest.raises(ValueError):
        cells([])


def test_future_cone_contains_rect():
    cone = causal_future(rect(0, 0, 0, 0))
    assert (1.0, 1.0) in cone        # lightlike boundary counts
    assert (1.0, 0.5) in cone
    assert (1.0, 1.5) not in cone
    assert (-0.1, 0.0) not in cone


def test_past_cone_contains_rect():
    cone = causal_past(rect(2, 2, 0, 0))
    assert (1.0, 1.0) in cone
    assert (1.0, -1.0) in cone
    assert (1.0, 1.1) not in cone
    assert (3.0, 0.0) not in cone


def test_lattice_cone_slope_one():
    cone = causal_future(cells([(0, 0)]))
    assert (3, 3) in cone and (3, -3) in cone and (3, 0) in cone
    assert (3, 4) not in cone
    assert (-1, 0) not in cone


def test_lattice_cone_periodic_wrap():
    cone = causal_future(cells([(0, 0)], period=8))
    assert (1, 7) in cone            # one step left wraps to site 7
    assert (2, 6) in cone
    assert (2, 5) not in cone


def test_cells_between_materializes_cone():
    cone = causal_future(cells([(0, 0)], period=16))
    got = cone.cells_between(0, 2)
    want = {(0, 0), (1, 15), (1, 0), (1, 1),
            (2, 14), (2, 15), (2, 0), (2, 1), (2, 2)}
    assert got == want


def test_precedes_boundary_lightlike_contact():
    # corner of one rectangle lightlike from the other: closed cones touch
    a = rect(0, 1, 0, 1)
    b = rect(2, 3, 2, 3)
    assert precedes(a, b)            # (1,1) -> (2,2) lightlike
    assert not precedes(b, a)


def test_precedes_requires_distinct_points():
    # sharing exactly one instant point is not precedence
    a = rect(0, 0, 0, 0)
    assert not precedes(a, a)
    b = rect(0, 1, 0, 0)
    assert precedes(b, b)            # timelike pair inside the same region


def test_precedes_spacelike_pair_false_both_ways():
    a = rect(0, 1, -5, -4)
    b = rect(0, 1, 4, 5)
    assert not precedes(a, b) and not precedes(b, a)
    assert spacelike(a, b)


def test_precedes_slab_above():
    o1 = rect(0, 1, 0, 1)
    slab = rect(2, 2.5, -10, 10)
    assert precedes(o1, slab)
    assert not precedes(slab, o1)


def test_fig2_pairwise_relations():
    o1, o2, o3 = fig2_preset()
    assert precedes(o1, o2)
    assert precedes(o2, o3)
    assert not precedes(o1, o3)
    assert spacelike(o1, o3)


def test_precedes_mixed_rect_lattice():
    a = cells([(0, 0)])
    b = rect(2.0, 3.0, 1.0, 2.0)
    assert precedes(a, b)
    assert not precedes(b, a)
    c = rect(0.0, 0.0, 0.0, 0.0)     # coincides with the single cell
    assert not precedes(a, c) and not precedes(c, a)


def test_mixed_periodic_comparison_rejected():
    with pytest.raises(ValueError):
        precedes(cells([(0, 0)], period=8), rect(1, 2, 0, 1))


def test_build_order_fig2_closure():
    order = build_order(list(fig2_preset()))
    assert order.before(0, 1) and order.before(1, 2)
    assert order.before(0, 2)        # induced by transitive closure
    assert not order.before(2, 0)


def test_build_order_single_region_trivial():
    order = build_order([rect(0, 1, 0, 1)])
    assert len(order) == 1 and order.before(0, 0)


def test_build_order_cycle_detected():
    # interleaved tall rectangles: each contains a point preceding the other
    a = rect(0.0, 10.0, 0.0, 0.5)
    b = rect(0.0, 10.0, 1.0, 1.5)
    with pytest.raises(CycleError):
        build_order([a, b])


def test_closure_idempotent():
    regions = list(fig2_preset())
    order = build_order(regions)
    closure = order.leq.copy()
    again = closure.copy()
    for k in range(len(regions)):
        again |= np.outer(again[:, k], again[k, :])
    assert (again == closure).all()


def test_linear_extensions_respect_strict_pairs():
    order = build_order(list(fig2_preset()))
    exts = list(order.linear_extensions())
    assert exts == [(0, 1, 2)]


def test_linear_extensions_antichain():
    regions = [rect(0, 1, 10 * i, 10 * i + 1) for i in range(3)]
    order = build_order(regions)
    assert len(list(order.linear_extensions())) == 6


def test_linear_extensions_cap():
    regions = [rect(0, 1, 10 * i, 10 * i + 1) for i in range(9)]
    order = build_order(regions)
    with pytest.raises(ValueError):
        list(order.linear_extensions())


def test_classify_fig2_sorkin_type():
    assert classify_configuration(*fig2_preset()) == "sorkin_type"


def test_classify_stacked_strictly_ordered():
    a = rect(0, 1, 0, 1)
    b = rect(3, 4, 0, 1)
    c = rect(6, 7, 0, 1)
    assert classify_configuration(a, b, c) == "strictly_ordered"


def test_classify_all_spacelike():
    a = rect(0, 1, -10, -9)
    b = rect(0, 1, 0, 1)
    c = rect(0, 1, 9, 10)
    assert classify_configuration(a, b, c) == "all_spacelike"


def test_classify_other():
    # b overlaps a's future but a and c are timelike, so no class fits
    a = rect(0, 1, 0, 1)
    b = rect(0.5, 1.5, 0, 1)
    c = rect(10, 11, 0, 1)
    assert classify_configuration(a, c, b) == "other"


def test_lattice_continuum_cone_agreement():
    # hull rectangle of a cell block reaches the same lattice points
    block = cells([(n, s) for n in (0, 1) for s in (0, 1)])
    hull = rect(0, 1, 0, 1)
    lat = causal_future(block)
    cont = causal_future(hull)
    for n in range(-2, 6):
        for s in range(-6, 8):
            assert lat.contains(n, s) == cont.contains(n, s)


def test_precedes_monotone_under_enlargement():
    rng = np.random.default_rng(7)
    for _ in range(50):
        t0, x0 = rng.uniform(-3, 3, size=2)
        a = rect(t0, t0 + rng.uniform(0, 2), x0, x0 + rng.uniform(0, 2))
        big = rect(a.t0 - 0.5, a.t1 + 0.5, a.x0 - 0.5, a.x1 + 0.5)
        t1, x1 = rng.uniform(-4, 4, size=2)
        b = rect(t1, t1 + rng.uniform(0, 2), x1, x1 + rng.uniform(0, 2))
        if precedes(a, b):
            assert precedes(big, b)


def test_linear_extensions_consistent_on_comparable_pairs():
    rng = np.random.default_rng(11)
    for _ in range(20):
        regions = []
        for i in range(4):
            t0 = rng.uniform(0, 6)
            x0 = rng.uniform(-6, 6)
            regions.append(rect(t0, t0 + 0.5, x0, x0 + 0.5))
        try:
            order = build_order(regions)
        except CycleError:
            continue
        strict = order.leq & ~order.leq.T
        for ext in order.linear_extensions():
            pos = {r: k for k, r in enumerate(ext)}
            for i in range(4):
                for j in range(4):
                    if strict[i, j]:
                        assert pos[i] < pos[j]


def test_spacelike_symmetric_random():
    rng = np.random.default_rng(3)
    for _ in range(100):
        t0, t1 = sorted(rng.uniform(-3, 3, size=2))
        x0, x1 = sorted(rng.uniform(-6, 6, size=2))
        a = rect(t0, t1, x0, x1)
        t0, t1 = sorted(rng.uniform(-3, 3, size=2))
        x0, x1 = sorted(rng.uniform(-6, 6, size=2))
        b = rect(t0, t1, x0, x1)
        assert spacelike(a, b) == spacelike(b, a)
        if spacelike(a, b):
            assert not precedes(a, b) and not precedes(b, a)


def test_cone_meets_vs_precedes_instant_touch():
    # cones meet at a single shared instant point, yet neither precedes
    a = rect(0, 0, 0, 0)
    b = rect(0, 0, 0, 0)
    assert cone_meets(a, b)
    assert not precedes(a, b)
