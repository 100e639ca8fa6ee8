import json
import math

import numpy as np
import pytest

from oscholder.errors import GridFormatError, UnsupportedDimensionError
from oscholder.grid.grid_function import (
    GridFunction,
    from_samples,
    integrate,
    load_grid_function,
    save_grid_function,
)
from oscholder.grid.hull import (
    convex_hull_volume,
    domain_diameter,
    extend_to_hull,
    hull_membership,
)


class TestGridFunction:
    def test_basic_properties(self, ramp_1d):
        assert ramp_1d.dim == 1
        assert ramp_1d.shape == (11,)
        assert ramp_1d.masked_count == 11
        assert ramp_1d.sup() == 1.0
        assert ramp_1d.inf() == 0.0
        assert ramp_1d.measure() == pytest.approx(1.1)

    def test_values_outside_mask_are_sentinel(self):
        mask = np.array([True, False, True])
        g = from_samples([1.0, 5.0, 2.0], 1.0, mask=mask)
        assert np.isnan(g.values[1])
        assert g.sup() == 2.0

    def test_arrays_are_read_only(self, ramp_1d):
        with pytest.raises(ValueError):
            ramp_1d.values[0] = 3.0

    def test_empty_mask_rejected(self):
        with pytest.raises(GridFormatError, match="empty mask"):
            from_samples([1.0, 2.0], 1.0, mask=np.zeros(2, dtype=bool))

    def test_nonfinite_masked_value_rejected(self):
        with pytest.raises(GridFormatError, match="non-finite"):
            from_samples([1.0, np.inf], 1.0)

    def test_nonfinite_unmasked_value_allowed(self):
        g = from_samples([1.0, np.inf], 1.0, mask=np.array([True, False]))
        assert g.masked_count == 1

    @pytest.mark.parametrize("h", [0.0, -1.0, float("nan")])
    def test_bad_spacing_rejected(self, h):
        with pytest.raises(GridFormatError):
            from_samples([1.0], h)

    def test_centers_follow_origin_and_spacing(self):
        g = from_samples(np.zeros((2, 3)), 0.5, origin=(1.0, -1.0))
        centers = g.centers()
        assert centers.shape == (6, 2)
        np.testing.assert_allclose(centers[0], [1.0, -1.0])
        np.testing.assert_allclose(centers[-1], [1.5, 0.0])

    def test_perimeter_count(self, square_2d):
        assert from_samples(np.zeros(5), 1.0).perimeter_count() == 2
        assert square_2d.perimeter_count() == 16

    def test_shift_scale_negate(self, ramp_1d):
        np.testing.assert_allclose(ramp_1d.shifted(2.0).values, ramp_1d.values + 2.0)
        np.testing.assert_allclose(ramp_1d.scaled(3.0).values, ramp_1d.values * 3.0)
        assert ramp_1d.negated().sup() == 0.0


class TestIntegrate:
    def test_constant(self):
        g = from_samples(np.full(10, 3.0), 0.1)
        assert integrate(g) == pytest.approx(3.0)

    def test_measure_constant(self):
        g = from_samples(np.full((4, 4), 1.0), 0.5, c=2.0)
        assert integrate(g) == pytest.approx(2.0 * 0.25 * 16)
        assert integrate(g, c=1.0) == pytest.approx(4.0)

    def test_order_independent(self):
        rng = np.random.default_rng(0)
        values = rng.normal(size=1000) * 1e8
        g = from_samples(values, 1.0)
        h = from_samples(values[::-1].copy(), 1.0)
        assert integrate(g) == integrate(h)

    def test_rejects_nonpositive_constant(self, ramp_1d):
        with pytest.raises(ValueError):
            integrate(ramp_1d, c=0.0)


class TestGridFiles:
    def test_save_and_load_masked(self, tmp_path):
        rng = np.random.default_rng(4)
        mask = rng.random((6, 7)) > 0.3
        mask[0, 0] = True
        g = from_samples(rng.normal(size=(6, 7)), 0.25, origin=(-1.0, 2.0), mask=mask, c=1.5)
        header = save_grid_function(g, tmp_path / "f.json")
        assert (tmp_path / "f.mask").exists()

        loaded = load_grid_function(header)
        assert loaded.shape == g.shape
        assert loaded.spacing == g.spacing
        assert loaded.origin == g.origin
        assert loaded.c == 1.5
        np.testing.assert_array_equal(loaded.mask, g.mask)
        np.testing.assert_array_equal(loaded.values[g.mask], g.values[g.mask])

    def test_full_mask_written_as_full(self, tmp_path, ramp_1d):
        header = save_grid_function(ramp_1d, tmp_path / "ramp.json")
        with header.open() as fh:
            assert json.load(fh)["mask"] == "full"
        assert not (tmp_path / "ramp.mask").exists()

    def test_missing_header(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_grid_function(tmp_path / "absent.json")

    def _write(self, tmp_path, header, data):
        np.asarray(data, dtype="<f8").tofile(tmp_path / "g.f64")
        path = tmp_path / "g.json"
        path.write_text(json.dumps(header))
        return path

    def _header(self, **overrides):
        header = {"dim": 1, "shape": [4], "spacing": 0.5, "origin": [0.0],
                  "data": "g.f64", "mask": "full"}
        header.update(overrides)
        return header

    def test_length_mismatch(self, tmp_path):
        path = self._write(tmp_path, self._header(), [1.0, 2.0, 3.0])
        with pytest.raises(GridFormatError, match="length mismatch"):
            load_grid_function(path)

    def test_anisotropic_spacing(self, tmp_path):
        header = self._header(dim=2, shape=[2, 2], spacing=[0.5, 0.25], origin=[0.0, 0.0])
        path = self._write(tmp_path, header, [1.0] * 4)
        with pytest.raises(GridFormatError, match="anisotropic"):
            load_grid_function(path)

    def test_isotropic_spacing_list(self, tmp_path):
        header = self._header(dim=2, shape=[2, 2], spacing=[0.5, 0.5], origin=[0.0, 0.0])
        path = self._write(tmp_path, header, [1.0] * 4)
        assert load_grid_function(path).spacing == 0.5

    def test_nonpositive_spacing(self, tmp_path):
        path = self._write(tmp_path, self._header(spacing=0.0), [1.0] * 4)
        with pytest.raises(GridFormatError):
            load_grid_function(path)

    def test_nonfinite_value(self, tmp_path):
        path = self._write(tmp_path, self._header(), [1.0, np.nan, 3.0, 4.0])
        with pytest.raises(GridFormatError, match="non-finite"):
            load_grid_function(path)

    def test_missing_key(self, tmp_path):
        header = self._header()
        del header["origin"]
        path = self._write(tmp_path, header, [1.0] * 4)
        with pytest.raises(GridFormatError, match="malformed header"):
            load_grid_function(path)

    def test_missing_data_file(self, tmp_path):
        path = tmp_path / "g.json"
        path.write_text(json.dumps(self._header()))
        with pytest.raises(FileNotFoundError):
            load_grid_function(path)


class TestHull:
    def test_interval_length(self, ramp_1d):
        info = convex_hull_volume(ramp_1d)
        assert info.volume == pytest.approx(1.0)
        assert not info.degenerate

    def test_square_area(self, square_2d):
        info = convex_hull_volume(square_2d)
        assert info.volume == pytest.approx(16.0)
        assert info.rank == 2
        assert len(info.vertices) == 4

    def test_cube_volume(self):
        g = from_samples(np.ones((3, 3, 3)), 0.5)
        assert convex_hull_volume(g).volume == pytest.approx(1.0)

    def test_collinear_points_are_degenerate(self):
        mask = np.zeros((4, 4), dtype=bool)
        mask[:, 1] = True
        g = from_samples(np.ones((4, 4)), 1.0, mask=mask)
        info = convex_hull_volume(g)
        assert info.degenerate
        assert info.volume == 0.0
        assert info.rank == 1

    def test_override(self, square_2d):
        assert convex_hull_volume(square_2d, volume_override=3.0).volume == 3.0

    def test_high_dimension_needs_override(self):
        g = from_samples(np.ones((2, 2, 2, 2)), 1.0)
        with pytest.raises(UnsupportedDimensionError):
            convex_hull_volume(g)
        assert convex_hull_volume(g, volume_override=1.0).volume == 1.0

    def test_extend_l_shape(self):
        mask = np.zeros((3, 3), dtype=bool)
        mask[0, :] = True
        mask[:, 0] = True
        values = np.arange(9, dtype=float).reshape(3, 3) + 1.0
        g = from_samples(values, 1.0, mask=mask)

        extended = extend_to_hull(g)
        # hull of the L is the triangle (0,0), (0,2), (2,0)
        assert extended.mask[1, 1]
        assert not extended.mask[2, 2]
        assert extended.values[1, 1] == g.inf()
        np.testing.assert_array_equal(extended.values[mask], g.values[mask])

    def test_extend_is_idempotent(self):
        mask = np.zeros((5, 5), dtype=bool)
        mask[0, :] = True
        mask[:, 0] = True
        mask[4, 4] = True
        g = from_samples(np.ones((5, 5)), 1.0, mask=mask)
        once = extend_to_hull(g)
        twice = extend_to_hull(once)
        np.testing.assert_array_equal(once.mask, twice.mask)
        np.testing.assert_array_equal(once.values[once.mask], twice.values[twice.mask])

    def test_extend_fills_gap_in_1d(self, disconnected_small):
        extended = extend_to_hull(disconnected_small)
        assert extended.mask.all()
        assert extended.inf() == 0.0

    def test_membership_contains_mask(self, disconnected_small):
        inside = hull_membership(disconnected_small)
        assert np.all(inside[disconnected_small.mask])

    def test_diameter(self, square_2d, disconnected_small):
        assert domain_diameter(square_2d) == pytest.approx(math.sqrt(32.0))
        assert domain_diameter(disconnected_small) == pytest.approx(10.0)

    def test_single_cell(self):
        g = from_samples([2.0], 1.0)
        assert domain_diameter(g) == 0.0
        assert extend_to_hull(g) is g
        assert isinstance(g, GridFunction)
