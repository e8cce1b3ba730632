import numpy as np
import pytest

from stripwave.energy import energy
from stripwave.geometry import (PRESETS, GeometryError, StripSpec, build_line,
                                build_mask, check_connectedness,
                                domain_from_mask, flat_cylinder, mask_is_periodic,
                                sinusoidal_strip, snap_h,
                                translate_field_by_period)
from stripwave.potential import ScalarQuartic


def test_flat_cylinder_counts():
    D = build_mask(flat_cylinder(), 1 / 16, 4)
    assert D.mask.sum() == 128 * 16 == D.n_cells
    cols = D.mask.sum(axis=1)
    assert np.all(cols == 16)
    assert D.period_shift_cells == 16


def test_sinusoidal_column_heights_periodic():
    spec = sinusoidal_strip(amplitude=0.2)
    D = build_mask(spec, 1 / 16, 4)
    heights = D.mask.sum(axis=1)
    np.testing.assert_array_equal(heights[:-16], heights[16:])
    assert heights.min() < heights.max()
    # direct count of centers below the analytic upper boundary
    for i in (0, 5, 37):
        want = np.sum((D.y > 0) & (D.y < spec.g_plus(D.s[i])))
        assert heights[i] == want


def test_inverted_boundary_is_rejected():
    spec = StripSpec(kind="flat", lower=0.5, upper=0.2)
    with pytest.raises(GeometryError, match="empty"):
        build_mask(spec, 1 / 16, 2)


def test_non_multiple_truncation_rejected():
    with pytest.raises(GeometryError):
        build_mask(flat_cylinder(), 1 / 16, 2.5)


def test_snap_h():
    assert snap_h(1.0, 1 / 16) == (1 / 16, False)
    h, changed = snap_h(1.0, 0.3)
    assert changed and h == pytest.approx(1 / 3)


def test_cells_column_major_and_faces_ordered():
    D = build_mask(sinusoidal_strip(), 1 / 8, 2)
    assert np.all(np.diff(D.cell_i) >= 0)
    assert np.all(D.faces[:, 0] < D.faces[:, 1])
    for i in range(D.nx):
        cells = D.cross_section(i)
        assert np.all(D.cell_i[cells] == i)
        assert np.all(np.diff(D.cell_j[cells]) > 0)


def test_no_isolated_cells():
    D = build_mask(sinusoidal_strip(amplitude=0.3), 1 / 16, 3)
    assert np.all(D.neighbor_count() > 0)


def test_isolated_cell_is_an_error():
    mask = np.zeros((4, 4), dtype=bool)
    mask[0, 0] = mask[2, 2] = mask[2, 3] = True
    with pytest.raises(GeometryError, match="isolated"):
        domain_from_mask(mask, 0.25)


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_presets_valid_and_connected(name):
    spec = PRESETS[name]()
    assert spec.check()["pass"]
    D = build_mask(spec, 1 / 16, 3)
    assert check_connectedness(D, D.column_index(0.0))
    assert mask_is_periodic(D)


def test_connectedness_detects_split_column():
    mask = np.ones((3, 5), dtype=bool)
    mask[0, 2] = False
    D = domain_from_mask(mask, 0.2)
    assert not check_connectedness(D, 0)
    assert check_connectedness(D, 1)


def test_rebuild_is_idempotent():
    spec = sinusoidal_strip(amplitude=0.2, phase=0.3)
    D1, D2 = build_mask(spec, 1 / 16, 3), build_mask(spec, 1 / 16, 3)
    np.testing.assert_array_equal(D1.mask, D2.mask)
    np.testing.assert_array_equal(D1.faces, D2.faces)
    # the mask is the analytic test itself
    inside = (spec.g_minus(D1.s)[:, None] < D1.y) & (D1.y < spec.g_plus(D1.s)[:, None])
    np.testing.assert_array_equal(D1.mask, inside)


def test_line_domain():
    D = build_line(2, 1 / 8)
    assert D.dim == 1 and D.n_cells == 32
    assert D.faces.shape == (31, 2)
    assert D.cell_volume == 1 / 8 and D.face_weight == 8.0


def test_translate_constant_field():
    D = build_mask(flat_cylinder(), 1 / 16, 3)
    u = np.ones((D.n_cells, 1))
    v = translate_field_by_period(D, u, 1, -1.0, 1.0)
    # cells shifted in from the left get a_minus
    assert np.all(v[D.cell_s > -2] == 1.0)
    assert np.all(v[D.cell_s < -2] == -1.0)
    w = translate_field_by_period(D, u, -1, 1.0, 1.0)
    np.testing.assert_array_equal(w, u)


def test_translate_tanh():
    D = build_mask(flat_cylinder(), 1 / 16, 4)
    u = np.tanh(D.cell_s)[:, None]
    v = translate_field_by_period(D, u, 1, -1.0, 1.0)
    inner = np.abs(D.cell_s) < 3
    np.testing.assert_allclose(v[inner, 0], np.tanh(D.cell_s[inner] - 1.0),
                               rtol=0, atol=1e-15)
    with pytest.raises(ValueError):
        translate_field_by_period(D, u, 2, -1.0, 1.0)


def test_translate_preserves_window_energy():
    P = ScalarQuartic()
    D = build_mask(sinusoidal_strip(amplitude=0.2), 1 / 16, 4)
    rng = np.random.default_rng(3)
    u = rng.uniform(-1, 1, (D.n_cells, 1))
    v = translate_field_by_period(D, u, 1, -1.0, 1.0)
    assert energy(D, v, P, window=(-1.0, 2.0)) == energy(D, u, P, window=(-2.0, 1.0))
