import io
import math

import numpy as np
import pytest
from scipy.integrate import quad

from ripscan import (PersistenceDiagram, PersistenceInterval, Tent,
                     build_landscape, landscape_norm, tent_eval)
from ripscan.landscape import l1_norm_from_diagram, write_landscape_csv

from oracles import kmax_tents_exact, kmax_tents_float


def diagram(intervals, dim=1):
    return PersistenceDiagram(
        tuple(PersistenceInterval(dim, b, d) for b, d in intervals))


def random_diagram(rng, max_intervals=40):
    m = int(rng.integers(1, max_intervals + 1))
    births = rng.uniform(0, 2, size=m)
    lengths = rng.uniform(1e-3, 2, size=m)
    return diagram(list(zip(births, births + lengths)))


class TestTent:
    def test_peak_of_unit_tent(self):
        assert tent_eval(Tent(0, 2), 1.0) == 1.0

    def test_outside_support(self):
        assert tent_eval(Tent(0, 2), 3.0) == 0.0

    def test_linear_ascent(self):
        assert tent_eval(Tent(1, 3), 1.5) == 0.5

    def test_degenerate_rejected(self):
        with pytest.raises(ValueError):
            Tent(2, 2)


class TestBuild:
    def test_single_interval_is_its_tent(self):
        rt2 = math.sqrt(2)
        ls = build_landscape(diagram([(1.0, rt2)]), {1})
        assert ls.num_levels == 1
        mid, peak = (1 + rt2) / 2, (rt2 - 1) / 2
        assert ls.breakpoints(1) == [(1.0, 0.0), (mid, peak), (rt2, 0.0)]

    def test_crossing_tents(self):
        ls = build_landscape(diagram([(0.0, 2.0), (1.0, 3.0)]), {1})
        assert ls.num_levels == 2
        assert ls.evaluate(1, 1.5) == 0.5
        assert ls.evaluate(2, 1.5) == 0.5

    def test_empty_diagram(self):
        ls = build_landscape(diagram([]), {1})
        assert ls.num_levels == 0
        assert landscape_norm(ls, 1.0) == 0.0
        assert ls.evaluate(1, 0.5) == 0.0

    def test_duplicate_intervals_occupy_two_levels(self):
        ls = build_landscape(diagram([(0.0, 2.0), (0.0, 2.0)]), {1})
        assert ls.num_levels == 2
        assert ls.breakpoints(1) == ls.breakpoints(2)

    def test_disjoint_tents_share_level_one(self):
        ls = build_landscape(diagram([(0.0, 1.0), (2.0, 3.0)]), {1})
        assert ls.num_levels == 1
        assert ls.evaluate(1, 0.5) == 0.5
        assert ls.evaluate(1, 2.5) == 0.5
        assert ls.evaluate(1, 1.5) == 0.0

    def test_infinite_intervals_excluded_by_default(self):
        diag = PersistenceDiagram((PersistenceInterval(1, 0.5, math.inf),
                                   PersistenceInterval(1, 0.0, 1.0)))
        ls = build_landscape(diag, {1})
        assert ls.num_levels == 1
        assert ls.breakpoints(1)[-1] == (1.0, 0.0)

    def test_infinite_interval_capped(self):
        diag = PersistenceDiagram((PersistenceInterval(0, 0.0, math.inf),))
        ls = build_landscape(diag, {0}, inf_cap=2.0)
        assert ls.breakpoints(1) == [(0.0, 0.0), (1.0, 1.0), (2.0, 0.0)]

    def test_dim_filter(self):
        diag = PersistenceDiagram((PersistenceInterval(0, 0.0, 1.0),
                                   PersistenceInterval(1, 0.0, 2.0)))
        assert build_landscape(diag, {0}).breakpoints(1)[-1] == (1.0, 0.0)
        assert build_landscape(diag, {1}).breakpoints(1)[-1] == (2.0, 0.0)
        assert build_landscape(diag, {0, 1}).num_levels == 2

    def test_empty_dims_rejected(self):
        with pytest.raises(ValueError):
            build_landscape(diagram([(0.0, 1.0)]), set())


class TestGridOracle:
    def test_breakpoint_evaluation_matches_kmax_exactly(self):
        rng = np.random.default_rng(60)
        for _ in range(20):
            diag = random_diagram(rng, max_intervals=15)
            intervals = [(iv.birth, iv.death) for iv in diag]
            ls = build_landscape(diag, {1})
            lo = min(b for b, _ in intervals) - 0.1
            hi = max(d for _, d in intervals) + 0.1
            xs = rng.uniform(lo, hi, size=300)
            for x in xs:
                for k in range(1, ls.num_levels + 2):
                    got = ls.evaluate(k, float(x))
                    assert got == float(kmax_tents_exact(intervals, k, float(x)))
                    assert got == kmax_tents_float(intervals, k, float(x))

    def test_level_count_equals_max_overlap(self):
        rng = np.random.default_rng(61)
        for _ in range(10):
            diag = random_diagram(rng, max_intervals=12)
            intervals = [(iv.birth, iv.death) for iv in diag]
            ls = build_landscape(diag, {1})
            # max multiplicity of overlapping open intervals bounds the levels
            points = sorted({v for bd in intervals for v in bd})
            overlap = 0
            for a, b in zip(points, points[1:]):
                mid = (a + b) / 2
                overlap = max(overlap, sum(1 for lo, hi in intervals
                                           if lo < mid < hi))
            assert ls.num_levels == overlap


class TestLevelProperties:
    def test_levels_pointwise_decreasing(self):
        rng = np.random.default_rng(62)
        for _ in range(10):
            ls = build_landscape(random_diagram(rng), {1})
            xs = sorted({x for k in range(1, ls.num_levels + 1)
                         for x, _ in ls.levels[k - 1]})
            for k in range(1, ls.num_levels):
                for x in xs:
                    assert (ls._evaluate_exact(k, x)
                            >= ls._evaluate_exact(k + 1, x))

    def test_one_lipschitz_segments(self):
        rng = np.random.default_rng(63)
        for _ in range(10):
            ls = build_landscape(random_diagram(rng), {1})
            for level in ls.levels:
                for (x1, y1), (x2, y2) in zip(level, level[1:]):
                    assert x2 > x1
                    assert abs(y2 - y1) <= x2 - x1  # exact rationals


class TestNorm:
    def test_single_tent_closed_form(self):
        rt2 = math.sqrt(2)
        ls = build_landscape(diagram([(1.0, rt2)]), {1})
        assert landscape_norm(ls, 1.0) == pytest.approx(
            (rt2 - 1) ** 2 / 4, abs=1e-15)

    def test_crossing_tents_total_area_conserved(self):
        ls = build_landscape(diagram([(0.0, 2.0), (1.0, 3.0)]), {1})
        assert landscape_norm(ls, 1.0) == 2.0

    def test_area_conservation_random(self):
        rng = np.random.default_rng(64)
        for _ in range(20):
            diag = random_diagram(rng)
            ls = build_landscape(diag, {1})
            want = sum((iv.death - iv.birth) ** 2 / 4 for iv in diag)
            assert landscape_norm(ls, 1.0) == pytest.approx(want, rel=1e-10)

    def test_l1_from_diagram_matches_built_landscape_bitwise(self):
        rng = np.random.default_rng(65)
        for _ in range(20):
            diag = random_diagram(rng)
            built = landscape_norm(build_landscape(diag, {1}), 1.0)
            assert l1_norm_from_diagram(diag, {1}) == built

    def test_p2_matches_quadrature(self):
        rng = np.random.default_rng(66)
        for _ in range(5):
            diag = random_diagram(rng, max_intervals=10)
            intervals = [(iv.birth, iv.death) for iv in diag]
            ls = build_landscape(diag, {1})
            total = 0.0
            for k in range(1, ls.num_levels + 1):
                xs = [x for x, _ in ls.breakpoints(k)]
                val, _ = quad(lambda x: kmax_tents_float(intervals, k, x) ** 2,
                              xs[0], xs[-1], points=xs[1:-1], limit=200)
                total += val ** 0.5
            assert landscape_norm(ls, 2.0) == pytest.approx(total, rel=1e-10)

    def test_norm_order_below_one_rejected(self):
        ls = build_landscape(diagram([(0.0, 1.0)]), {1})
        with pytest.raises(ValueError):
            landscape_norm(ls, 0.5)

    def test_zero_landscape_any_order(self):
        ls = build_landscape(diagram([]), {1})
        for p in (1.0, 2.0, 3.5):
            assert landscape_norm(ls, p) == 0.0


class TestSerialization:
    def test_csv_levels_and_breakpoints(self):
        ls = build_landscape(diagram([(0.0, 2.0), (1.0, 3.0)]), {1})
        buf = io.StringIO()
        write_landscape_csv(ls, buf)
        lines = buf.getvalue().splitlines()
        assert lines[0] == "level,x,y"
        assert lines[1] == "1,0.0,0.0"
        levels = {int(line.split(",")[0]) for line in lines[1:]}
        assert levels == {1, 2}
