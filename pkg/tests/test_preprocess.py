import numpy as np
import pytest
from PIL import Image

from painsight.datamodel import LandmarkSchema
from painsight.errors import (
    ConfidenceError,
    DegenerateGeometryError,
    EmptyBoxError,
    SchemaError,
)
from painsight.preprocess import (
    AugmentationSpec,
    CanonicalEyeLandmarks,
    CropSpec,
    IDENTITY_AUGMENTATION,
    adapt_landmarks,
    augment_frame,
    compute_crop_box,
    crop_and_resize,
    crop_cache_path,
    intercanthal_distance,
    load_crop,
    read_landmark_file,
    save_crop,
    write_landmark_file,
)


def lm(left_inner, right_inner, left_outer=None, right_outer=None):
    left_outer = left_outer or (left_inner[0] - 30, left_inner[1])
    right_outer = right_outer or (right_inner[0] + 30, right_inner[1])
    return CanonicalEyeLandmarks(left_inner, right_inner, left_outer, right_outer)


class TestAdaptLandmarks:
    def test_sparse68_index_selection(self):
        # point i sits at (2i, 3i): the adapter must read exactly the
        # published canthus indices 36/39/42/45
        pts = np.stack([np.arange(68) * 2.0, np.arange(68) * 3.0], axis=1)
        out = adapt_landmarks(pts, LandmarkSchema.SPARSE_68)
        assert out.left_outer_canthus == (72.0, 108.0)
        assert out.left_inner_canthus == (78.0, 117.0)
        assert out.right_inner_canthus == (84.0, 126.0)
        assert out.right_outer_canthus == (90.0, 135.0)

    def test_dense_mesh_translation_equivariance(self):
        rng = np.random.default_rng(0)
        pts = rng.uniform(0, 200, size=(468, 2))
        base = adapt_landmarks(pts, LandmarkSchema.DENSE_MESH)
        moved = adapt_landmarks(pts + 10.0, LandmarkSchema.DENSE_MESH)
        for field in (
            "left_inner_canthus", "right_inner_canthus",
            "left_outer_canthus", "right_outer_canthus",
        ):
            bx, by = getattr(base, field)
            mx, my = getattr(moved, field)
            assert (mx, my) == pytest.approx((bx + 10, by + 10))

    def test_dense_mesh_accepts_refined_count(self):
        pts = np.zeros((478, 2))
        pts[133] = (40, 50)
        pts[362] = (80, 50)
        out = adapt_landmarks(pts, LandmarkSchema.DENSE_MESH)
        assert out.left_inner_canthus == (40.0, 50.0)

    def test_wrong_point_count(self):
        with pytest.raises(SchemaError):
            adapt_landmarks(np.zeros((67, 2)), LandmarkSchema.SPARSE_68)
        with pytest.raises(SchemaError):
            adapt_landmarks(np.zeros((400, 2)), LandmarkSchema.DENSE_MESH)

    def test_no_face_flagged(self):
        pts = np.zeros((68, 2))
        pts[39] = (np.nan, np.nan)
        with pytest.raises(ConfidenceError):
            adapt_landmarks(pts, LandmarkSchema.SPARSE_68)

    def test_mirrored_provider_normalized(self):
        pts = np.zeros((68, 2))
        pts[36], pts[39] = (120.0, 50.0), (90.0, 50.0)   # "left" eye on the right
        pts[42], pts[45] = (60.0, 50.0), (30.0, 50.0)
        out = adapt_landmarks(pts, LandmarkSchema.SPARSE_68)
        assert out.right_inner_canthus[0] > out.left_inner_canthus[0]


class TestGeometry:
    def test_axis_aligned_distance(self):
        assert intercanthal_distance(lm((100, 100), (200, 100))) == 100.0

    def test_three_four_five(self):
        assert intercanthal_distance(lm((0, 0), (30, 40))) == 50.0

    def test_coincident_canthi(self):
        with pytest.raises(DegenerateGeometryError):
            intercanthal_distance(lm((10, 10), (10, 10)))

    def test_crop_box_defaults_with_clamping(self):
        box = compute_crop_box(lm((100, 100), (200, 100)), CropSpec(), (1920, 1080))
        assert box == (0, 0, 350, 200)

    def test_crop_box_narrow_width(self):
        spec = CropSpec(half_width_factor=0.5)
        box = compute_crop_box(lm((100, 100), (200, 100)), spec, (1920, 1080))
        assert box == (100, 0, 200, 200)

    def test_crop_box_degenerate_outside_image(self):
        with pytest.raises(DegenerateGeometryError):
            compute_crop_box(lm((500, 500), (600, 500)), CropSpec(), (10, 10))

    def test_crop_spec_validation(self):
        with pytest.raises(ValueError):
            CropSpec(half_width_factor=0.0)
        with pytest.raises(ValueError):
            CropSpec(output_size=8)


class TestCropAndResize:
    def test_identity_resize_is_pixel_exact(self):
        rng = np.random.default_rng(1)
        frame = rng.integers(0, 256, size=(400, 400, 3), dtype=np.uint8)
        out = crop_and_resize(frame, (10, 20, 234, 244), 224)
        assert np.array_equal(out, frame[20:244, 10:234])

    def test_constant_field_stays_constant(self):
        frame = np.full((500, 500, 3), 77, dtype=np.uint8)
        out = crop_and_resize(frame, (0, 0, 448, 448), 224)
        assert out.shape == (224, 224, 3)
        assert np.all(out == 77)

    def test_anisotropic_box_with_corner_markers(self):
        frame = np.zeros((400, 400, 3), dtype=np.uint8)
        # distinct 8x8 corner markers inside a 100x300 box at (50, 40)
        frame[40:48, 50:58] = (255, 0, 0)
        frame[40:48, 142:150] = (0, 255, 0)
        frame[332:340, 50:58] = (0, 0, 255)
        out = crop_and_resize(frame, (50, 40, 150, 340), 224)
        assert out.shape == (224, 224, 3)
        assert tuple(out[0, 0]) == (255, 0, 0)
        assert tuple(out[0, -1]) == (0, 255, 0)
        assert tuple(out[-1, 0]) == (0, 0, 255)

    def test_empty_or_outside_box(self):
        frame = np.zeros((50, 50, 3), dtype=np.uint8)
        with pytest.raises(EmptyBoxError):
            crop_and_resize(frame, (10, 10, 10, 20), 32)
        with pytest.raises(EmptyBoxError):
            crop_and_resize(frame, (0, 0, 60, 40), 32)

    def test_crop_translation_equivariance(self):
        rng = np.random.default_rng(2)
        pattern = rng.integers(0, 256, size=(120, 120, 3), dtype=np.uint8)
        frame_a = np.zeros((600, 600, 3), dtype=np.uint8)
        frame_b = np.zeros((600, 600, 3), dtype=np.uint8)
        frame_a[100:220, 100:220] = pattern
        dx, dy = 37, 53
        frame_b[100 + dy:220 + dy, 100 + dx:220 + dx] = pattern
        spec = CropSpec(half_width_factor=1.0, above_factor=1.0, below_factor=1.0,
                        output_size=64)
        eyes_a = lm((130, 160), (190, 160))
        eyes_b = lm((130 + dx, 160 + dy), (190 + dx, 160 + dy))
        box_a = compute_crop_box(eyes_a, spec, (600, 600))
        box_b = compute_crop_box(eyes_b, spec, (600, 600))
        out_a = crop_and_resize(frame_a, box_a, 64)
        out_b = crop_and_resize(frame_b, box_b, 64)
        assert np.array_equal(out_a, out_b)

    def test_scale_covariance_within_resampling_error(self):
        # smooth synthetic face: content of the resized crop should not
        # depend on the source resolution
        y, x = np.mgrid[0:200, 0:200]
        face = (128 + 60 * np.sin(x / 25) * np.cos(y / 30)).astype(np.uint8)
        frame = np.stack([face] * 3, axis=2)
        big = np.asarray(
            Image.fromarray(frame).resize((400, 400), Image.BILINEAR)
        )
        spec = CropSpec(half_width_factor=1.2, above_factor=1.2, below_factor=0.8)
        eyes = lm((70, 90), (130, 90))
        eyes2 = lm((140, 180), (260, 180))
        crop_small = crop_and_resize(frame, compute_crop_box(eyes, spec, (200, 200)), 224)
        crop_big = crop_and_resize(big, compute_crop_box(eyes2, spec, (400, 400)), 224)
        mad = np.mean(np.abs(crop_small.astype(float) - crop_big.astype(float)))
        assert mad < 3.0


class TestAugment:
    def test_identity_spec_returns_input_unchanged(self):
        img = np.random.default_rng(0).integers(0, 256, (64, 64, 3), dtype=np.uint8)
        out = augment_frame(img, IDENTITY_AUGMENTATION, np.random.default_rng(1))
        assert out is img

    def test_forced_flip_maps_pixels(self):
        spec = AugmentationSpec(
            horizontal_flip_prob=1.0, max_affine_deg=0.0,
            rotation_range_deg=(0.0, 0.0), brightness=0.0, contrast=0.0,
            saturation=0.0,
        )
        img = np.arange(4 * 4 * 3, dtype=np.uint8).reshape(4, 4, 3)
        out = augment_frame(img, spec, np.random.default_rng(0))
        assert np.array_equal(out, img[:, ::-1])

    def test_deterministic_given_seed(self):
        spec = AugmentationSpec()
        img = np.random.default_rng(3).integers(0, 256, (64, 64, 3), dtype=np.uint8)
        a = augment_frame(img, spec, np.random.default_rng(42))
        b = augment_frame(img, spec, np.random.default_rng(42))
        assert np.array_equal(a, b)

    def test_output_keeps_dimensions(self):
        spec = AugmentationSpec(shear_deg=5.0, translate_frac=0.05)
        img = np.random.default_rng(4).integers(0, 256, (96, 96, 3), dtype=np.uint8)
        out = augment_frame(img, spec, np.random.default_rng(0))
        assert out.shape == img.shape

    def test_spec_validation(self):
        with pytest.raises(ValueError):
            AugmentationSpec(horizontal_flip_prob=1.5)
        with pytest.raises(ValueError):
            AugmentationSpec(rotation_range_deg=(10.0, -10.0))


class TestLandmarkFile:
    def test_round_trip(self, tmp_path):
        per_frame = {
            0: np.array([[1.5, 2.5], [3.0, 4.0]]),
            1: np.array([[5.0, 6.0], [7.25, 8.125]]),
        }
        path = tmp_path / "lm.csv"
        write_landmark_file(path, per_frame)
        again = read_landmark_file(path)
        assert set(again) == {0, 1}
        assert np.array_equal(again[0], per_frame[0])
        assert np.array_equal(again[1], per_frame[1])

    def test_empty_fields_become_nan(self, tmp_path):
        path = tmp_path / "lm.csv"
        path.write_text("0,1.0,2.0,,\n")
        pts = read_landmark_file(path)[0]
        assert np.isnan(pts[1]).all()

    def test_odd_coordinate_count(self, tmp_path):
        path = tmp_path / "lm.csv"
        path.write_text("0,1.0,2.0,3.0\n")
        with pytest.raises(SchemaError):
            read_landmark_file(path)


class TestCropCache:
    def test_layout_and_round_trip(self, tmp_path):
        crop = np.random.default_rng(5).integers(0, 256, (32, 32, 3), dtype=np.uint8)
        path = save_crop(tmp_path, "P7", 123, crop)
        assert path == tmp_path / "P7" / "000123.png"
        assert path == crop_cache_path(tmp_path, "P7", 123)
        assert np.array_equal(load_crop(tmp_path, "P7", 123), crop)
