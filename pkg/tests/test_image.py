import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pixelprobe.errors import BoundsError, ImageIOError, ParameterError
from pixelprobe.image import (
    AttackVector,
    Image,
    apply_attack,
    color_grid,
    load_image,
    neighborhood_mean,
    save_image,
)
from pixelprobe.synthetic import random_image

from oracles import moore_mean


class TestApplyAttack:
    def test_single_pixel_on_black(self):
        img = Image.filled(2, 2, (0, 0, 0))
        out = apply_attack(img, AttackVector(0, 0, 255, 255, 255))
        assert out.pixel(0, 0) == (255, 255, 255)
        assert out.pixel(1, 0) == (0, 0, 0)
        assert out.pixel(0, 1) == (0, 0, 0)
        assert out.pixel(1, 1) == (0, 0, 0)

    def test_identity_color_is_noop(self):
        img = random_image(8, 8, seed=7)
        x, y = 3, 5
        out = apply_attack(img, AttackVector(x, y, *img.pixel(x, y)))
        assert out == img

    def test_input_unmodified(self):
        img = Image.filled(4, 4, (10, 20, 30))
        before = img.pixels.copy()
        apply_attack(img, AttackVector(2, 2, 200, 100, 50))
        assert np.array_equal(img.pixels, before)

    @settings(max_examples=30)
    @given(st.integers(0, 2**63 - 1), st.integers(0, 63), st.integers(0, 63),
           st.integers(0, 255), st.integers(0, 255), st.integers(0, 255))
    def test_exactly_one_pixel_differs(self, seed, x, y, r, g, b):
        img = random_image(64, 64, seed=seed)
        out = apply_attack(img, AttackVector(x, y, r, g, b))
        diff = np.any(out.pixels != img.pixels, axis=2)
        n_diff = int(diff.sum())
        if (r, g, b) == img.pixel(x, y):
            assert n_diff == 0
        else:
            assert n_diff == 1
            assert diff[y, x]

    def test_out_of_bounds(self):
        img = Image.filled(4, 4, (0, 0, 0))
        with pytest.raises(BoundsError):
            apply_attack(img, AttackVector(4, 0, 1, 2, 3))
        with pytest.raises(BoundsError):
            apply_attack(img, AttackVector(0, -1, 1, 2, 3))

    def test_out_of_range_channel(self):
        img = Image.filled(4, 4, (0, 0, 0))
        with pytest.raises(BoundsError):
            apply_attack(img, AttackVector(0, 0, 300, 0, 0))


class TestColorGrid:
    def test_step5_cardinality(self):
        assert len(color_grid(5)) == 140_608

    def test_step255_grid(self):
        cs = color_grid(255)
        assert len(cs) == 8
        assert set(cs) == {(r, g, b) for r in (0, 255) for g in (0, 255) for b in (0, 255)}

    def test_step1_cardinality(self):
        assert len(color_grid(1)) == 16_777_216

    @given(st.integers(1, 255))
    def test_cardinality_formula(self, step):
        assert len(color_grid(step)) == (255 // step + 1) ** 3

    def test_enumeration_order(self):
        cs = color_grid(255)
        assert list(cs) == [
            (0, 0, 0), (0, 0, 255), (0, 255, 0), (0, 255, 255),
            (255, 0, 0), (255, 0, 255), (255, 255, 0), (255, 255, 255),
        ]

    def test_deterministic(self):
        a, b = color_grid(17), color_grid(17)
        assert np.array_equal(a.colors, b.colors)

    def test_255_included_iff_step_divides(self):
        assert 255 in color_grid(51).values
        assert 255 not in color_grid(100).values

    @pytest.mark.parametrize("step", [0, 256, -3, 1.5, "5"])
    def test_bad_step(self, step):
        with pytest.raises(ParameterError):
            color_grid(step)


class TestNeighborhoodMean:
    def test_uniform_gray(self):
        img = Image.filled(8, 8, (128, 128, 128))
        assert neighborhood_mean(img, 4, 4, 1) == (128.0, 128.0, 128.0)

    def test_corner_has_three_neighbors(self):
        img = random_image(64, 64, seed=1)
        got = neighborhood_mean(img, 0, 0, 1)
        px = img.pixels
        expect = (
            px[0, 1].astype(float) + px[1, 0].astype(float) + px[1, 1].astype(float)
        ) / 3.0
        assert got == pytest.approx(tuple(expect), abs=1e-12)

    @settings(max_examples=25)
    @given(st.integers(0, 2**63 - 1), st.integers(1, 62), st.integers(1, 62))
    def test_matches_direct_summation(self, seed, x, y):
        img = random_image(64, 64, seed=seed)
        assert neighborhood_mean(img, x, y, 1) == pytest.approx(
            moore_mean(img, x, y, 1), abs=1e-9
        )

    def test_radius_two(self):
        img = random_image(16, 16, seed=3)
        assert neighborhood_mean(img, 8, 8, 2) == pytest.approx(
            moore_mean(img, 8, 8, 2), abs=1e-9
        )

    def test_channels_in_range(self):
        img = random_image(8, 8, seed=11)
        for ch in neighborhood_mean(img, 4, 4):
            assert 0.0 <= ch <= 255.0

    def test_out_of_bounds_center(self):
        img = Image.filled(4, 4, (0, 0, 0))
        with pytest.raises(BoundsError):
            neighborhood_mean(img, 4, 0)

    def test_bad_radius(self):
        img = Image.filled(4, 4, (0, 0, 0))
        with pytest.raises(ParameterError):
            neighborhood_mean(img, 1, 1, radius=0)


class TestImageIO:
    def test_round_trip(self, tmp_path):
        img = random_image(32, 24, seed=5)
        p = tmp_path / "img.png"
        save_image(img, p)
        assert load_image(p) == img

    def test_solid_color(self, tmp_path):
        img = Image.filled(64, 64, (13, 200, 77))
        p = tmp_path / "solid.png"
        save_image(img, p)
        loaded = load_image(p)
        assert np.all(loaded.pixels == np.array([13, 200, 77], dtype=np.uint8))

    def test_non_image_file(self, tmp_path):
        p = tmp_path / "junk.png"
        p.write_bytes(b"this is not a png at all")
        with pytest.raises(ImageIOError, match="junk.png"):
            load_image(p)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ImageIOError, match="nope.png"):
            load_image(tmp_path / "nope.png")

    def test_alpha_ignored(self, tmp_path):
        from PIL import Image as PILImage

        rgba = PILImage.new("RGBA", (4, 4), (10, 20, 30, 99))
        p = tmp_path / "rgba.png"
        rgba.save(p)
        img = load_image(p)
        assert img.pixel(0, 0) == (10, 20, 30)

    def test_16bit_rejected(self, tmp_path):
        from PIL import Image as PILImage

        deep = PILImage.new("I;16", (4, 4), 1000)
        p = tmp_path / "deep.png"
        deep.save(p)
        with pytest.raises(ImageIOError):
            load_image(p)


class TestImageType:
    def test_shape_validation(self):
        with pytest.raises(ParameterError):
            Image(np.zeros((4, 4), dtype=np.uint8))

    def test_value_validation(self):
        with pytest.raises(ParameterError):
            Image(np.full((2, 2, 3), 300, dtype=np.int32))

    def test_pixels_read_only(self):
        img = Image.filled(2, 2, (1, 2, 3))
        with pytest.raises(ValueError):
            img.pixels[0, 0, 0] = 9

    def test_accepts_in_range_ints(self):
        img = Image(np.full((2, 2, 3), 7, dtype=np.int64))
        assert img.pixels.dtype == np.uint8
