import math
import pytest
import numpy as np
from scatter_trace import box_spectrum, model_from_dict, phase_shifts, radial_box_spectrum, solve
from scatter_trace.boxsim import level_shifts
from scatter_trace.errors import DomainError

FREE = {'kind': 'gaussian', 'V0': 0.0, 'a': 1.0}
GAUSSIAN = {'kind': 'gaussian', 'V0': 1.0, 'a': 1.0}

class BoxSolverMixin:

    method = None

    def test_free_levels(self):
        spectrum = box_spectrum(model_from_dict(FREE), 10.0, 5, method=self.method)
        assert np.allclose(spectrum.eigen_k, np.arange(1, 6)*math.pi/20, rtol=1e-7, atol=0)
        assert np.allclose(level_shifts(spectrum), 0.0, atol=1e-8)

    def test_free_radial_levels(self):
        spectrum = radial_box_spectrum(model_from_dict(FREE), 0, 10.0, 5, method=self.method)
        assert spectrum.radial
        assert np.allclose(spectrum.eigen_k, np.arange(1, 6)*math.pi/10, rtol=1e-7, atol=0)

    def test_repulsive_levels_interlace(self):
        spectrum = box_spectrum(model_from_dict(GAUSSIAN), 50.0, 10, method=self.method)
        assert np.all(np.diff(spectrum.eigen_k) > 0)
        assert np.all(spectrum.eigen_k >= spectrum.free_levels())

    # Each shifted level carries twice the eigenphase of its parity sector:
    def test_shifts_match_sector_eigenphases(self):
        model = model_from_dict(GAUSSIAN)
        spectrum = box_spectrum(model, 50.0, 10, method=self.method)
        shifts = level_shifts(spectrum)
        for k_n, shift in zip(spectrum.eigen_k, shifts):
            rec = solve(model, k_n)
            assert min(abs(shift - 2*rec.eta1), abs(shift - 2*rec.eta2)) < 1e-4

    # Neighbouring levels belong to opposite sectors, so their mean shift is eta_1 + eta_2 = arg T:
    def test_pair_mean_shift(self):
        model = model_from_dict(GAUSSIAN)
        spectrum = box_spectrum(model, 200.0, 11, method=self.method)
        shifts, k = level_shifts(spectrum), spectrum.eigen_k
        for n in range(10):
            expected = solve(model, 0.5*(k[n] + k[n + 1])).arg_T
            assert abs(0.5*(shifts[n] + shifts[n + 1]) - expected) <= 0.02*abs(expected)

    def test_radial_shifts_match_phase_shifts(self):
        model = model_from_dict(GAUSSIAN)
        spectrum = radial_box_spectrum(model, 0, 30.0, 8, method=self.method)
        for k_n, shift in zip(spectrum.eigen_k, level_shifts(spectrum)):
            assert shift == pytest.approx(phase_shifts(model, k_n).eta[0], abs=1e-4)

    def test_centrifugal_channel_reference(self):
        spectrum = radial_box_spectrum(model_from_dict(FREE), 2, 20.0, 6, method=self.method)
        assert np.allclose(level_shifts(spectrum), 0.0, atol=1e-6)

    BOX_ERROR_TEST_CASES = {'box_inside_potential': (GAUSSIAN, 2.0, 5),
                            'no_levels': (GAUSSIAN, 50.0, 0),
                            'dense_dielectric': ({'kind': 'dielectric', 'contrast': 1.0, 'a': 1.0}, 50.0, 5)}
    @pytest.mark.parametrize('spec, L, n_max', BOX_ERROR_TEST_CASES.values(), ids=BOX_ERROR_TEST_CASES.keys())
    def test_box_errors(self, spec, L, n_max):
        self.assert_exception(box_spectrum, DomainError, model_from_dict(spec), L, n_max, method=self.method)
