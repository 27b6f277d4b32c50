"""Image tensors, bicubic resampling, synthetic data, and netpbm I/O."""

import numpy as np
import pytest

import pixelboost as pb
from pixelboost import (CodecError, ParameterError, ShapeError,
                        UnsupportedFormatError)
from pixelboost.noise import STREAM_DATASET


def _rng(seed=0):
    return pb.RngStream(seed, STREAM_DATASET)


class TestAsImage:
    def test_promotes_2d_to_single_channel(self):
        img = pb.as_image(np.zeros((4, 5)))
        assert img.shape == (4, 5, 1)

    def test_rejects_bad_channel_count(self):
        with pytest.raises(ShapeError):
            pb.as_image(np.zeros((4, 4, 2)))

    def test_rejects_non_finite(self):
        bad = np.zeros((4, 4, 1))
        bad[0, 0, 0] = np.nan
        with pytest.raises(ParameterError):
            pb.as_image(bad)


class TestBicubicResize:
    def test_weight_rows_sum_to_one(self):
        # partition of unity must survive border clipping
        for n_in, n_out in [(16, 4), (4, 16), (7, 13), (13, 7), (5, 5)]:
            w = pb.resize_weights(n_in, n_out)
            np.testing.assert_allclose(w.sum(axis=1), 1.0, rtol=0, atol=1e-12)

    def test_constant_image_is_preserved(self):
        img = np.full((8, 8, 1), 0.37)
        out = pb.bicubic_resize(img, 4)
        np.testing.assert_allclose(out, 0.37, rtol=0, atol=1e-12)

    def test_identity_at_scale_one(self):
        img = _rng().uniform(0.0, 1.0, (6, 7, 1))
        np.testing.assert_allclose(pb.bicubic_resize(img, 1), img,
                                   rtol=0, atol=1e-12)

    def test_output_shape(self):
        img = np.zeros((8, 12, 3))
        assert pb.bicubic_resize(img, 0.25).shape == (2, 3, 3)
        assert pb.bicubic_resize(img, 4).shape == (32, 48, 3)

    def test_linear_ramp_interior_preserved(self):
        # cubic convolution reproduces degree-1 polynomials away from borders
        x = np.linspace(0.0, 1.0, 16)
        img = np.tile(x, (16, 1))[:, :, None]
        up = pb.bicubic_resize(img, 2)
        xs = (np.arange(32) + 0.5) / 2.0 - 0.5
        expect = np.interp(xs, np.arange(16), x)
        np.testing.assert_allclose(up[16, 4:-4, 0], expect[4:-4],
                                   rtol=0, atol=1e-12)

    def test_collapsing_scale_rejected(self):
        with pytest.raises(ParameterError):
            pb.bicubic_resize(np.zeros((4, 4, 1)), 0.01)


class TestMakeLrPair:
    def test_shapes(self):
        hr = pb.synth_dataset("mixed", 1, 16, _rng())[0]
        pair = pb.make_lr_pair(hr)
        assert pair.lr.shape == (4, 4, 1)
        assert pair.lr_up.shape == (16, 16, 1)
        assert pair.delta0.shape == (16, 16, 1)

    def test_residual_identity_is_exact(self):
        hr = pb.synth_dataset("mixed", 1, 16, _rng(3))[0]
        pair = pb.make_lr_pair(hr)
        np.testing.assert_array_equal(pair.hr + pair.delta0, pair.lr_up)

    def test_constant_image_has_zero_residual(self):
        pair = pb.make_lr_pair(np.full((8, 8, 1), 0.6))
        np.testing.assert_allclose(pair.delta0, 0.0, rtol=0, atol=1e-12)

    def test_checkerboard_has_nonzero_residual(self):
        hr = pb.synth_dataset("checkers", 1, 16, _rng(5))[0]
        pair = pb.make_lr_pair(hr)
        assert np.mean(np.abs(pair.delta0)) > 0.0

    def test_indivisible_dims_rejected(self):
        with pytest.raises(ParameterError):
            pb.make_lr_pair(np.zeros((10, 8, 1)))


class TestSynthDataset:
    @pytest.mark.parametrize("kind", pb.SYNTH_KINDS)
    def test_values_in_unit_range(self, kind):
        for img in pb.synth_dataset(kind, 20, 16, _rng(1)):
            assert img.shape == (16, 16, 1)
            assert img.min() >= 0.0 and img.max() <= 1.0

    def test_same_seed_same_dataset(self):
        a = pb.synth_dataset("mixed", 5, 16, _rng(9))
        b = pb.synth_dataset("mixed", 5, 16, _rng(9))
        for x, y in zip(a, b):
            np.testing.assert_array_equal(x, y)

    def test_mixed_images_are_non_degenerate(self):
        imgs = pb.synth_dataset("mixed", 100, 16, _rng(2))
        degenerate = sum(1 for im in imgs if im.var() == 0.0)
        assert degenerate <= 1

    def test_checkers_are_two_level(self):
        # a board whose cell spans the whole image shows just one level
        for img in pb.synth_dataset("checkers", 10, 32, _rng(4)):
            assert np.unique(img).size <= 2

    def test_invalid_parameters(self):
        with pytest.raises(ParameterError):
            pb.synth_dataset("noise", 1, 16, _rng())
        with pytest.raises(ParameterError):
            pb.synth_dataset("mixed", 1, 15, _rng())
        with pytest.raises(ParameterError):
            pb.synth_dataset("mixed", 0, 16, _rng())


class TestCodec:
    def test_quantization_values(self):
        img = np.array([[[0.0], [0.5], [1.0]]])
        np.testing.assert_array_equal(pb.quantize(img).ravel(),
                                      [0, 128, 255])

    def test_roundtrip_equals_quantized_values(self, tmp_path):
        img = _rng(7).uniform(0.0, 1.0, (9, 5, 1))
        back = pb.image_roundtrip(img, tmp_path / "x.pgm")
        np.testing.assert_array_equal(back, pb.quantize(img) / 255.0)

    def test_roundtrip_is_idempotent_after_first_write(self, tmp_path):
        img = _rng(8).uniform(-0.2, 1.2, (6, 6, 3))
        p1, p2 = tmp_path / "a.ppm", tmp_path / "b.ppm"
        once = pb.image_roundtrip(img, p1)
        pb.write_image(once, p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_write_image_bytes_matches_file(self, tmp_path):
        img = _rng(9).uniform(0.0, 1.0, (4, 7, 3))
        path = tmp_path / "x.ppm"
        pb.write_image(img, path)
        assert path.read_bytes() == pb.write_image_bytes(img)

    def test_header_layout(self):
        data = pb.write_image_bytes(np.zeros((4, 4, 3)))
        assert data.startswith(b"P6\n4 4\n255\n")
        assert len(data) == len(b"P6\n4 4\n255\n") + 48

    def test_single_channel_uses_p5(self):
        assert pb.write_image_bytes(np.zeros((2, 2, 1))).startswith(b"P5")

    def test_comments_in_header_are_skipped(self, tmp_path):
        path = tmp_path / "c.pgm"
        path.write_bytes(b"P5\n# a comment\n2 2\n255\n\x00\x40\x80\xff")
        img = pb.read_image(path)
        np.testing.assert_allclose(img.ravel() * 255.0, [0, 64, 128, 255])

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "bad.pgm"
        path.write_bytes(b"P3\n2 2\n255\n")
        with pytest.raises(UnsupportedFormatError):
            pb.read_image(path)

    def test_unsupported_maxval(self, tmp_path):
        path = tmp_path / "m.pgm"
        path.write_bytes(b"P5\n2 2\n65535\n" + b"\x00" * 8)
        with pytest.raises(UnsupportedFormatError):
            pb.read_image(path)

    def test_truncated_payload(self, tmp_path):
        path = tmp_path / "t.pgm"
        path.write_bytes(b"P5\n4 4\n255\n\x00\x01")
        with pytest.raises(CodecError):
            pb.read_image(path)

    def test_malformed_header(self, tmp_path):
        path = tmp_path / "h.pgm"
        path.write_bytes(b"P5\nxx yy\n255\n")
        with pytest.raises(CodecError):
            pb.read_image(path)
