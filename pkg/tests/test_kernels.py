"""RLE codec, mask overlap, and bilinear sampling kernels.

Every case runs against whichever backend is active, and the parity tests
pin compiled == python output bit for bit when both are built.
"""
import numpy as np
import pytest

from maskbench import kernels
from maskbench.data.types import BinaryMask, rle_decode, rle_encode
from maskbench.errors import CodecError

from helpers import random_bitmap


def backends():
    names = ["python"]
    try:
        kernels.get_backend("compiled")
        names.append("compiled")
    except ImportError:
        pass
    return names


@pytest.fixture(params=backends())
def backend(request):
    return kernels.get_backend(request.param)


class TestRleWorkedExamples:
    def test_all_zero_3x3(self, backend):
        counts = backend.rle_encode(np.zeros((3, 3), dtype=np.uint8))
        assert list(counts) == [9]

    def test_single_origin_pixel(self, backend):
        mask = np.zeros((3, 3), dtype=np.uint8)
        mask[0, 0] = 1
        assert list(backend.rle_encode(mask)) == [0, 1, 8]

    def test_all_one_2x2(self, backend):
        assert list(backend.rle_encode(np.ones((2, 2), dtype=np.uint8))) == [0, 4]

    def test_decode_all_zero(self, backend):
        out = backend.rle_decode([9], 3, 3)
        assert np.array_equal(out, np.zeros((3, 3), dtype=np.uint8))

    def test_decode_sum_mismatch(self, backend):
        with pytest.raises(CodecError):
            backend.rle_decode([5], 3, 3)

    def test_column_major_scan_order(self, backend):
        # pixel (row 2, col 0) is the 3rd element of a column-major scan
        mask = np.zeros((3, 3), dtype=np.uint8)
        mask[2, 0] = 1
        assert list(backend.rle_encode(mask)) == [2, 1, 6]


class TestRleRoundTrip:
    def test_thousand_random_masks(self, backend):
        rng = np.random.default_rng(12345)
        for trial in range(1000):
            h = int(rng.integers(1, 18))
            w = int(rng.integers(1, 24))
            mask = random_bitmap(rng, h, w, p=float(rng.uniform(0.05, 0.95)))
            counts = backend.rle_encode(mask)
            assert sum(counts) == h * w
            back = backend.rle_decode(counts, h, w)
            assert np.array_equal(back, mask), f"trial {trial} ({h}x{w})"

    def test_counts_start_with_zero_run(self, backend):
        mask = np.ones((4, 4), dtype=np.uint8)
        counts = list(backend.rle_encode(mask))
        assert counts[0] == 0

    def test_binary_mask_object_round_trip(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            bitmap = random_bitmap(rng, 11, 13)
            dense = BinaryMask.from_bitmap(bitmap)
            rle = rle_encode(dense)
            assert not rle.is_dense
            back = rle_decode(rle)
            assert back == dense
            assert np.array_equal(back.to_bitmap(), bitmap)

    def test_to_coco_format(self):
        mask = BinaryMask.from_bitmap(np.eye(3, dtype=np.uint8))
        coco = mask.to_coco()
        assert coco["size"] == [3, 3]
        assert sum(coco["counts"]) == 9


class TestBackendParity:
    @pytest.mark.skipif(
        len(backends()) < 2, reason="compiled backend not built"
    )
    def test_all_kernels_bitwise_equal(self):
        py = kernels.get_backend("python")
        cc = kernels.get_backend("compiled")
        rng = np.random.default_rng(99)
        for _ in range(100):
            h = int(rng.integers(1, 20))
            w = int(rng.integers(1, 20))
            mask = random_bitmap(rng, h, w)
            assert list(py.rle_encode(mask)) == list(cc.rle_encode(mask))
            counts = py.rle_encode(mask)
            assert np.array_equal(
                py.rle_decode(counts, h, w), cc.rle_decode(counts, h, w)
            )
        stack_a = np.stack([random_bitmap(rng, 9, 7) for _ in range(12)])
        stack_b = np.stack([random_bitmap(rng, 9, 7) for _ in range(5)])
        assert np.array_equal(
            py.mask_iou_matrix(stack_a, stack_b), cc.mask_iou_matrix(stack_a, stack_b)
        )
        assert np.array_equal(
            py.mask_intersection_over_area(stack_a, stack_b),
            cc.mask_intersection_over_area(stack_a, stack_b),
        )
        src = rng.random((8, 8))
        ys = rng.uniform(-1.0, 8.0, 30)
        xs = rng.uniform(-1.0, 8.0, 25)
        assert np.array_equal(
            np.asarray(py.grid_sample_2d(src, ys, xs)),
            np.asarray(cc.grid_sample_2d(src, ys, xs)),
        )


class TestMaskOverlap:
    def test_iou_pair_identity(self, backend):
        mask = random_bitmap(np.random.default_rng(0), 6, 6)
        assert backend.mask_iou_pair(mask, mask) == 1.0

    def test_iou_pair_disjoint(self, backend):
        a = np.zeros((4, 4), dtype=np.uint8)
        b = np.zeros((4, 4), dtype=np.uint8)
        a[0, 0] = 1
        b[3, 3] = 1
        assert backend.mask_iou_pair(a, b) == 0.0

    def test_iou_pair_both_empty(self, backend):
        z = np.zeros((4, 4), dtype=np.uint8)
        assert backend.mask_iou_pair(z, z) == 0.0

    def test_left_column_vs_top_row(self, backend):
        a = np.zeros((2, 2), dtype=np.uint8)
        b = np.zeros((2, 2), dtype=np.uint8)
        a[:, 0] = 1
        b[0, :] = 1
        assert backend.mask_iou_pair(a, b) == pytest.approx(1.0 / 3.0)

    def test_matrix_matches_pairwise(self, backend):
        rng = np.random.default_rng(3)
        masks_a = [random_bitmap(rng, 7, 5) for _ in range(6)]
        masks_b = [random_bitmap(rng, 7, 5) for _ in range(4)]
        matrix = backend.mask_iou_matrix(np.stack(masks_a), np.stack(masks_b))
        for i, ma in enumerate(masks_a):
            for j, mb in enumerate(masks_b):
                assert matrix[i, j] == backend.mask_iou_pair(ma, mb)

    def test_intersection_over_area(self, backend):
        a = np.zeros((4, 4), dtype=np.uint8)
        a[:2, :2] = 1  # area 4
        b = np.zeros((4, 4), dtype=np.uint8)
        b[:4, :1] = 1  # overlaps a in 2 pixels
        out = backend.mask_intersection_over_area(a[None], b[None])
        assert out[0, 0] == pytest.approx(2.0 / 4.0)

    def test_empty_a_mask_row_is_zero(self, backend):
        a = np.zeros((1, 3, 3), dtype=np.uint8)
        b = np.ones((1, 3, 3), dtype=np.uint8)
        assert backend.mask_intersection_over_area(a, b)[0, 0] == 0.0


class TestGridSample:
    def test_constant_map(self, backend):
        src = np.full((5, 5), 3.25)
        out = np.asarray(backend.grid_sample_2d(src, [0.3, 2.7], [1.1, 3.9]))
        assert np.allclose(out, 3.25)

    def test_exact_on_linear_ramp(self, backend):
        # bilinear interpolation reproduces f(y, x) = 2x + 3y exactly
        yy, xx = np.mgrid[0:6, 0:6].astype(np.float64)
        src = 2.0 * xx + 3.0 * yy
        ys = np.array([0.5, 1.25, 4.75])
        xs = np.array([0.0, 2.5, 4.9])
        out = np.asarray(backend.grid_sample_2d(src, ys, xs))
        expect = 2.0 * xs[None, :] + 3.0 * ys[:, None]
        assert np.allclose(out, expect, atol=1e-12)

    def test_clamps_outside_coordinates(self, backend):
        src = np.arange(9, dtype=np.float64).reshape(3, 3)
        out = np.asarray(backend.grid_sample_2d(src, [-5.0, 10.0], [-5.0, 10.0]))
        assert out[0, 0] == src[0, 0]
        assert out[1, 1] == src[2, 2]
