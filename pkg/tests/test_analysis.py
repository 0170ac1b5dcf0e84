import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pixelprobe.analysis import (
    SPATIAL_VARIABLES,
    chromatic_rmse,
    chromatic_scatter,
    checkerboard_score,
    parity_analysis,
    placement_heatmap,
    spatial_stats,
    write_chromatic_csv,
    write_parity_csv,
    write_placement_csv,
    write_spatial_csv,
)
from pixelprobe.attack import AttackRecord, Direction, is_success
from pixelprobe.confmap import ConfidenceMap
from pixelprobe.errors import DataError, EmptyCollectionError
from pixelprobe.image import AttackVector

from oracles import two_pass_stats


def make_record(
    x=0, y=0, r=0, g=0, b=0, original=0.5, modified=0.5,
    direction=Direction.MINIMIZE, mean=(0.0, 0.0, 0.0), image_id="t",
):
    if direction is Direction.MINIMIZE and modified > original:
        direction = Direction.MAXIMIZE
    return AttackRecord(
        image_id=image_id,
        direction=direction,
        original_score=original,
        modified_score=modified,
        vector=AttackVector(x, y, r, g, b),
        neighborhood_mean=mean,
        generations_used=1,
        seed=0,
    )


class TestChromaticRmse:
    def test_identical_colors(self):
        assert chromatic_rmse((128, 128, 128), (128, 128, 128)) == 0.0

    def test_maximal_distance(self):
        assert chromatic_rmse((255, 255, 255), (0, 0, 0)) == 1.0

    def test_single_channel(self):
        assert chromatic_rmse((255, 0, 0), (0, 0, 0)) == pytest.approx(
            math.sqrt(1 / 3), abs=1e-12
        )

    @given(st.tuples(*[st.integers(0, 255)] * 3), st.tuples(*[st.integers(0, 255)] * 3))
    def test_symmetric(self, a, b):
        assert chromatic_rmse(a, b) == chromatic_rmse(b, a)

    @given(st.tuples(*[st.integers(0, 255)] * 3), st.tuples(*[st.integers(0, 255)] * 3),
           st.permutations([0, 1, 2]))
    def test_channel_permutation_invariant(self, a, b, perm):
        pa = tuple(a[i] for i in perm)
        pb = tuple(b[i] for i in perm)
        assert chromatic_rmse(pa, pb) == pytest.approx(chromatic_rmse(a, b), abs=1e-12)

    @given(st.tuples(*[st.integers(0, 255)] * 3), st.tuples(*[st.floats(0, 255)] * 3))
    def test_range(self, a, b):
        assert 0.0 <= chromatic_rmse(a, b) <= 1.0


class TestChromaticScatter:
    def test_empty(self):
        assert chromatic_scatter([]) == []

    def test_color_equal_to_mean_gives_zero(self):
        rec = make_record(r=10, g=20, b=30, mean=(10.0, 20.0, 30.0))
        (pt,) = chromatic_scatter([rec])
        assert pt.h == 0.0

    def test_delta(self):
        rec = make_record(original=0.9, modified=0.2)
        (pt,) = chromatic_scatter([rec])
        assert pt.delta == pytest.approx(-0.7)

    def test_two_cluster_separation(self):
        # strong attacks built with large color distance, weak with small
        strong = [
            make_record(r=250, g=250, b=250, mean=(5.0, 5.0, 5.0),
                        original=0.95, modified=0.95 - d)
            for d in (0.6, 0.7, 0.8)
        ]
        weak = [
            make_record(r=100, g=100, b=100, mean=(99.0, 101.0, 100.0),
                        original=0.95, modified=0.95 - d)
            for d in (0.0, 0.01, 0.02)
        ]
        pts = chromatic_scatter(strong + weak)
        for pt in pts:
            if abs(pt.delta) > 0.5:
                assert pt.h > 0.5
            else:
                assert pt.h < 0.1

    def test_csv(self, tmp_path):
        p = tmp_path / "scatter.csv"
        write_chromatic_csv(chromatic_scatter([make_record(original=0.8, modified=0.3)]), p)
        lines = p.read_text().strip().split("\n")
        assert lines[0] == "h,original,modified,delta"
        assert len(lines) == 2

    def test_empty_csv_has_header(self, tmp_path):
        p = tmp_path / "empty.csv"
        write_chromatic_csv([], p)
        assert p.read_text() == "h,original,modified,delta\n"


class TestSpatialStats:
    def test_singleton(self):
        stats = spatial_stats([make_record(x=32, y=30, r=255, g=255, b=37)])
        assert stats.mean == {"X": 32, "Y": 30, "Red": 255, "Green": 255, "Blue": 37}
        assert stats.median == stats.mean
        assert all(v == 0.0 for v in stats.sd.values())

    def test_two_point_analytic(self):
        recs = [make_record(x=0), make_record(x=64)]
        stats = spatial_stats(recs)
        assert stats.mean["X"] == 32.0
        assert stats.median["X"] == 32.0
        assert stats.sd["X"] == 32.0

    def test_matches_two_pass_oracle(self):
        from pixelprobe.rng import SplitMix64

        rng = SplitMix64(2024)
        recs = [
            make_record(
                x=rng.below(64), y=rng.below(64),
                r=rng.below(256), g=rng.below(256), b=rng.below(256),
            )
            for _ in range(1000)
        ]
        stats = spatial_stats(recs)
        cols = {name: [] for name in SPATIAL_VARIABLES}
        for rec in recs:
            v = rec.vector
            for name, val in zip(SPATIAL_VARIABLES, (v.x, v.y, v.r, v.g, v.b)):
                cols[name].append(val)
        for name in SPATIAL_VARIABLES:
            mean, median, sd = two_pass_stats(cols[name])
            assert stats.mean[name] == pytest.approx(mean, abs=1e-9)
            assert stats.median[name] == pytest.approx(median, abs=1e-9)
            assert stats.sd[name] == pytest.approx(sd, abs=1e-9)

    def test_even_count_median(self):
        recs = [make_record(x=v) for v in (1, 2, 10, 11)]
        assert spatial_stats(recs).median["X"] == 6.0

    def test_empty_collection(self):
        with pytest.raises(EmptyCollectionError):
            spatial_stats([])

    def test_csv_layout(self, tmp_path):
        p = tmp_path / "stats.csv"
        write_spatial_csv(spatial_stats([make_record(x=1, y=2, r=3, g=4, b=5)]), p)
        lines = p.read_text().strip().split("\n")
        assert lines[0] == "measure,X,Y,Red,Green,Blue"
        assert [ln.split(",")[0] for ln in lines[1:]] == ["Mean", "Median", "SD"]


class TestPlacement:
    def test_single_record(self):
        grid = placement_heatmap([make_record(x=5, y=7)], 16, 16)
        assert grid.counts[7, 5] == 1
        assert grid.total == 1

    def test_total_conserved_with_filter(self):
        recs = [
            make_record(x=1, y=1, original=0.95, modified=0.2),   # success
            make_record(x=2, y=2, original=0.95, modified=0.93),  # fail
            make_record(x=3, y=3, original=0.5, modified=0.4),    # fail (low start)
        ]
        grid = placement_heatmap(recs, 8, 8, success_filter=is_success)
        assert grid.total == 1
        assert grid.counts[1, 1] == 1

    def test_even_even_mass(self):
        recs = [make_record(x=2 * i % 8, y=2 * i % 6) for i in range(30)]
        grid = placement_heatmap(recs, 8, 8)
        assert grid.total == 30
        assert grid.counts[1::2, :].sum() == 0
        assert grid.counts[:, 1::2].sum() == 0

    def test_out_of_range_record(self):
        with pytest.raises(DataError, match="image_id"):
            placement_heatmap([make_record(x=9, y=0, image_id="big")], 8, 8)

    def test_csv(self, tmp_path):
        p = tmp_path / "grid.csv"
        write_placement_csv(placement_heatmap([make_record(x=1, y=0)], 2, 2), p)
        assert p.read_text() == "x,y,count\n0,0,0\n1,0,1\n0,1,0\n1,1,0\n"


class TestParity:
    def test_all_even_even(self):
        recs = [make_record(x=2 * i, y=4 * i) for i in range(10)]
        report = parity_analysis(recs)
        assert report.fractions["even-even"] == 1.0
        assert report.counts["even-even"] == 10

    def test_paper_fraction_even_even(self):
        recs = [make_record(x=0, y=0)] * 5334 + [make_record(x=1, y=1)] * 9
        report = parity_analysis(recs)
        assert report.total == 5343
        assert report.fractions["even-even"] == pytest.approx(0.9983, abs=1e-4)

    def test_paper_even_odd_split(self):
        recs = [make_record(x=2, y=2)] * 49573 + [make_record(x=1, y=3)] * 31152
        report = parity_analysis(recs)
        assert report.total == 80725
        assert report.fractions["even-even"] == pytest.approx(0.614, abs=1e-4)
        assert report.fractions["odd-odd"] == pytest.approx(0.386, abs=1e-4)

    def test_class_assignment(self):
        report = parity_analysis(
            [make_record(x=2, y=3), make_record(x=3, y=2), make_record(x=3, y=3)]
        )
        assert report.counts == {
            "even-even": 0, "even-odd": 1, "odd-even": 1, "odd-odd": 1,
        }

    def test_fractions_sum_to_one(self):
        from pixelprobe.rng import SplitMix64

        rng = SplitMix64(7)
        recs = [make_record(x=rng.below(64), y=rng.below(64)) for _ in range(321)]
        report = parity_analysis(recs)
        assert sum(report.fractions.values()) == pytest.approx(1.0, abs=1e-12)
        assert sum(report.counts.values()) == report.total

    def test_empty(self):
        with pytest.raises(EmptyCollectionError):
            parity_analysis([])

    def test_csv(self, tmp_path):
        p = tmp_path / "parity.csv"
        write_parity_csv(parity_analysis([make_record(x=0, y=0)]), p)
        lines = p.read_text().strip().split("\n")
        assert lines[0] == "class,count,fraction"
        assert len(lines) == 6  # four classes + total


def make_map(min_map, max_map):
    min_map = np.asarray(min_map, dtype=np.float64)
    return ConfidenceMap(
        width=min_map.shape[1],
        height=min_map.shape[0],
        original_score=0.5,
        min_map=min_map,
        max_map=np.asarray(max_map, dtype=np.float64),
        avg_map=(min_map + np.asarray(max_map, dtype=np.float64)) / 2,
        color_step=85,
        scorer_id="test",
    )


class TestCheckerboard:
    def test_constant_map_is_zero(self):
        m = make_map(np.full((8, 8), 0.3), np.full((8, 8), 0.3))
        assert checkerboard_score(m) == 0.0

    def test_pure_even_even_swing_is_four(self):
        mn = np.zeros((8, 8))
        mx = np.zeros((8, 8))
        mx[0::2, 0::2] = 1.0
        assert checkerboard_score(make_map(mn, mx)) == pytest.approx(4.0, abs=1e-12)

    def test_parity_independent_swing_is_zero(self):
        # swing varies by row blocks but identically across parity classes
        mn = np.zeros((4, 4))
        mx = np.tile(np.array([[0.25, 0.25], [0.25, 0.25]]), (2, 2))
        assert checkerboard_score(make_map(mn, mx)) == pytest.approx(0.0, abs=1e-12)

    def test_odd_swing_is_negative(self):
        mn = np.zeros((8, 8))
        mx = np.zeros((8, 8))
        mx[1::2, 1::2] = 1.0
        assert checkerboard_score(make_map(mn, mx)) < 0.0
