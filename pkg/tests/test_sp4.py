import numpy as np
import pytest

from grace import sp4
from grace.mesh import Grid, VectorField, average_magnetization


class TestHelpers:
    def test_first_zero_crossing_interpolates(self):
        t = np.array([0.0, 1.0, 2.0, 3.0])
        mx = np.array([1.0, 0.5, -0.5, 0.3])
        assert sp4.first_zero_crossing(t, mx) == pytest.approx(1.5)
        assert np.isnan(sp4.first_zero_crossing(t, np.abs(mx)))

    @pytest.mark.parametrize("which", [1, 2])
    def test_reference_curves(self, which):
        ref = sp4.load_reference(which)
        assert ref.shape[1] == 4 and ref[0, 0] == 0.0 and ref[-1, 0] == pytest.approx(1.0)
        np.testing.assert_allclose(ref[0, 1:3], [0.967, 0.126], atol=0.01)
        assert np.all(np.abs(ref[:, 1:]) <= 1.0)
        assert 0.1 < sp4.first_zero_crossing(ref[:, 0], ref[:, 1]) < 0.2

    def test_compare_against_itself(self):
        ref = sp4.load_reference(1)
        cmp = sp4.compare(ref[::10], ref)
        assert cmp.passed and cmp.max_dmy == 0.0
        assert cmp.crossing_error < 0.01

    def test_compare_detects_offset(self):
        ref = sp4.load_reference(2)
        shifted = ref.copy()
        shifted[:, 2] += 0.15
        cmp = sp4.compare(shifted, ref)
        assert not cmp.my_ok and cmp.crossing_ok and not cmp.passed
        assert "FAIL" in cmp.summary()

    def test_field_conversion(self):
        hx, hy, hz = sp4.field_A_per_m(1)
        assert hx == pytest.approx(-24.6e-3 / (4e-7 * np.pi))
        assert hz == 0.0

    def test_prolong(self):
        coarse = Grid(2, 1, 1, 5e-9, 5e-9, 3e-9)
        m = VectorField(coarse, np.array([[1.0, 2.0], [0, 0], [0, 0]]).reshape(3, 1, 1, 2))
        fine = sp4._prolong(m, Grid(10, 5, 3, 1e-9, 1e-9, 1e-9))
        assert fine.data.shape == (3, 3, 5, 10)
        np.testing.assert_array_equal(fine.data[0, :, :, :5], 1.0)
        np.testing.assert_array_equal(fine.data[0, :, :, 5:], 2.0)

    def test_initial_guess_is_saturated(self):
        m = sp4.initial_guess(sp4.COARSE.grid)
        np.testing.assert_allclose(m.norms(), sp4.MS)


@pytest.fixture(scope="module")
def coarse_s_state():
    return sp4.relax_s_state(sp4.COARSE)


class TestCoarse:
    def test_s_state(self, coarse_s_state):
        m, res = coarse_s_state
        assert res.converged
        avg = average_magnetization(m, sp4.MS)
        assert avg[0] == pytest.approx(0.97, abs=0.02)
        assert avg[1] == pytest.approx(0.12, abs=0.02)
        assert abs(avg[2]) < 1e-3

    @pytest.mark.parametrize("which", [1, 2])
    def test_reversal_against_reference(self, coarse_s_state, which, tmp_path):
        cmp = sp4.run_validation(which, tmp_path, coarse=True, m_s=coarse_s_state[0])
        print(cmp.summary())
        assert cmp.passed
        assert (tmp_path / f"sp4_field{which}_crossing.txt").exists()
        assert "overall: PASS" in (tmp_path / f"sp4_field{which}_summary.txt").read_text()
