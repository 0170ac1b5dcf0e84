import numpy as np
import pytest

from pixelprobe.analysis import (
    checkerboard_score,
    placement_heatmap,
    read_placement_csv,
    write_placement_csv,
)
from pixelprobe.confmap import ConfidenceMap, compute_confidence_map
from pixelprobe.errors import ParameterError
from pixelprobe.image import color_grid
from pixelprobe.render import colormap, render_counts, render_field, render_map
from pixelprobe.scorer import ScorerSpec
from pixelprobe.synthetic import spot_image


def tiny_map(min_map, max_map):
    min_map = np.asarray(min_map, dtype=np.float64)
    max_map = np.asarray(max_map, dtype=np.float64)
    return ConfidenceMap(
        width=min_map.shape[1],
        height=min_map.shape[0],
        original_score=0.5,
        min_map=min_map,
        max_map=max_map,
        avg_map=(min_map + max_map) / 2,
        color_step=85,
        scorer_id="test",
    )


class TestColormap:
    def test_stops_exact(self):
        rgb = colormap(np.array([0.0, 0.5, 1.0]))
        assert rgb[0].tolist() == [0, 0, 128]
        assert rgb[1].tolist() == [255, 255, 255]
        assert rgb[2].tolist() == [200, 0, 0]

    def test_linear_between_stops(self):
        rgb = colormap(np.array([0.25]))
        assert rgb[0].tolist() == [128, 128, 192]  # midway navy -> white


class TestRenderField:
    def test_constant_field_renders_mid(self):
        img = render_field(np.full((4, 4), 0.7))
        assert np.all(img.pixels == 255)

    def test_two_value_field_hits_endpoints(self):
        img = render_field(np.array([[0.0, 1.0]]))
        assert img.pixels[0, 0].tolist() == [0, 0, 128]
        assert img.pixels[0, 1].tolist() == [200, 0, 0]

    def test_scale(self):
        img = render_field(np.array([[0.0, 1.0]]), scale=3)
        assert (img.width, img.height) == (6, 3)
        assert np.all(img.pixels[:, :3] == np.array([0, 0, 128]))

    def test_explicit_range_clips(self):
        img = render_field(np.array([[-1.0, 2.0]]), value_range=(0.0, 1.0))
        assert img.pixels[0, 0].tolist() == [0, 0, 128]
        assert img.pixels[0, 1].tolist() == [200, 0, 0]

    def test_explicit_range_comparable_across_fields(self):
        a = render_field(np.array([[0.2]]), value_range=(0.0, 1.0))
        b = render_field(np.array([[0.2, 0.9]]), value_range=(0.0, 1.0))
        assert a.pixels[0, 0].tolist() == b.pixels[0, 0].tolist()

    def test_bad_range(self):
        with pytest.raises(ParameterError):
            render_field(np.zeros((2, 2)), value_range=(1.0, 0.0))

    def test_bad_scale(self):
        with pytest.raises(ParameterError):
            render_field(np.zeros((2, 2)), scale=0)


class TestRenderMap:
    def test_modes(self):
        m = tiny_map([[0.1, 0.2]], [[0.5, 0.9]])
        for mode in ("min", "max", "avg", "swing"):
            img = render_map(m, mode)
            assert (img.width, img.height) == (2, 1)

    def test_unknown_mode(self):
        with pytest.raises(ParameterError):
            render_map(tiny_map([[0.0]], [[1.0]]), "median")

    def test_swing_render_preserves_checkerboard(self):
        # small spot stimulus; swing parity must survive the colormap
        img = spot_image(size=24, radius=6)
        cmap = compute_confidence_map(
            img, ScorerSpec.builtin("spotnet"), color_grid(85), batch_size=512
        )
        assert checkerboard_score(cmap) > 0
        rendered = render_map(cmap, "swing")
        # recover intensity as red-minus-blue: monotone along the gradient
        intensity = (
            rendered.pixels[:, :, 0].astype(np.float64)
            - rendered.pixels[:, :, 2].astype(np.float64)
        )
        intensity -= intensity.min()
        pseudo = ConfidenceMap(
            width=cmap.width,
            height=cmap.height,
            original_score=0.5,
            min_map=np.zeros_like(intensity),
            max_map=intensity / max(intensity.max(), 1.0),
            avg_map=intensity / 2.0 / max(intensity.max(), 1.0),
            color_step=85,
            scorer_id="render-intensity",
        )
        assert checkerboard_score(pseudo) > 0


class TestRenderCounts:
    def test_counts_round_trip_render(self, tmp_path):
        from test_analysis import make_record

        grid = placement_heatmap(
            [make_record(x=0, y=0), make_record(x=0, y=0), make_record(x=3, y=1)], 4, 2
        )
        p = tmp_path / "grid.csv"
        write_placement_csv(grid, p)
        loaded = read_placement_csv(p)
        assert loaded == grid
        img = render_counts(loaded)
        assert (img.width, img.height) == (4, 2)
        assert img.pixels[0, 0].tolist() == [200, 0, 0]  # hottest cell
