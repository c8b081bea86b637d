import math
import pytest
import numpy as np
from hypothesis import given, settings, strategies as st
from scatter_trace import ScatterData1D, load_scatter1d, model_from_dict, save_scatter1d, solve, solve_grid
from scatter_trace.errors import DomainError, FormatError, GridError, UnitarityError
from scatter_trace.scatter1d import TransmissionSingularities, transmission_singularities
from main_tests import utils

def test_delta_closed_form(delta_model):
    rec = solve(delta_model, 1.0)
    assert abs(rec.T - (1 - 1j)/2) < 1e-10
    assert rec.arg_det_S == pytest.approx(-math.pi/2, abs=1e-10)
    assert abs(rec.R - (-1 - 1j)/2) < 1e-10

def test_gaussian_unitarity(gaussian_barrier):
    data = solve_grid(gaussian_barrier, np.geomspace(0.05, 50.0, 200))
    assert max(rec.unitarity_defect for rec in data) <= 1e-8

def test_unitarity_and_flux(std_model):
    data = solve_grid(std_model, np.geomspace(0.05, 20.0, 40))
    for rec in data:
        assert rec.abs_R2 + abs(rec.T)**2 == pytest.approx(1.0, abs=1e-8)
        assert rec.amplitudes.flux_defect == pytest.approx(0.0, abs=1e-8)

def test_phase_vanishes_at_high_k(std_model):
    data = solve_grid(std_model, np.geomspace(0.05, 50.0, 120))
    assert abs(data[-1].arg_det_S) < 0.1
    assert all(rec.arg_det_S <= 1e-12 for rec in data)

def test_sech2_transmission():
    V0, a = 1.5, 0.5
    model = model_from_dict({'kind': 'sech2', 'V0': V0, 'a': a})
    for rec in solve_grid(model, np.linspace(0.2, 6.0, 30)):
        assert abs(rec.T)**2 == pytest.approx(utils.sech2_transmission_squared(V0, a, rec.k), abs=1e-8)

def test_square_barrier_orientation():
    model = model_from_dict({'kind': 'square_barrier', 'V0': 2.0, 'a': 1.0})
    left, right = solve(model, 0.8), solve(model, 0.8, orientation='right')
    # Transmission is reciprocal, reflection picks up the displacement phase:
    assert abs(left.T - right.T) < 1e-9
    assert abs(left.R) == pytest.approx(abs(right.R), abs=1e-9)
    assert right.orientation == 'right'

def test_eigenphases_of_s():
    rec = solve(model_from_dict({'kind': 'gaussian', 'V0': 1.0, 'a': 1.0}), 0.7)
    eigenvalues = np.sort_complex(np.linalg.eigvals(rec.S))
    expected = np.sort_complex(np.exp(2j*np.array([rec.eta1, rec.eta2])))
    assert np.allclose(eigenvalues, expected, atol=1e-9)
    assert rec.eta1 + rec.eta2 == pytest.approx(rec.arg_T)

def test_low_k_extrapolation_warns(delta_model):
    with pytest.warns(UserWarning):
        data = solve_grid(delta_model, [1e-4, 1e-2, 1.0])
    assert abs(data[0].T) == pytest.approx(abs(solve(delta_model, 1e-3).T)*0.1, rel=1e-9)

GRID_ERROR_TEST_CASES = {'non_positive': ([0.0, 1.0], DomainError),
                         'decreasing': ([2.0, 1.0], GridError),
                         'repeated': ([1.0, 1.0], GridError),
                         'empty': ([], GridError)}
@pytest.mark.parametrize('kgrid, exception', GRID_ERROR_TEST_CASES.values(), ids=GRID_ERROR_TEST_CASES.keys())
def test_grid_errors(delta_model, kgrid, exception):
    with pytest.raises(exception):
        solve_grid(delta_model, kgrid)

def test_save_and_load(tmp_path, gaussian_barrier):
    data = solve_grid(gaussian_barrier, np.geomspace(0.1, 10.0, 20))
    path = tmp_path/'scatter1d.csv'
    save_scatter1d(path, data)
    reloaded = load_scatter1d(path)
    for rec, new in zip(data, reloaded):
        assert new.k == rec.k and new.T == rec.T and new.R == rec.R
        assert new.arg_T == pytest.approx(rec.arg_T, abs=1e-15)

def test_load_rejects_non_unitary(tmp_path):
    path = tmp_path/'bad.csv'
    path.write_text('k,re_R,im_R,re_T,im_T,arg_det_S,abs_R2\n1,0.5,0,0.5,0,0,0.25\n')
    with pytest.raises(UnitarityError):
        load_scatter1d(path)

def test_load_rejects_missing_columns(tmp_path):
    path = tmp_path/'bad.csv'
    path.write_text('k,re_T,im_T\n1,1,0\n')
    with pytest.raises(FormatError):
        load_scatter1d(path)

def test_from_amplitudes_uses_principal_branch():
    rec = ScatterData1D.from_amplitudes(1.0, 0j, -1 + 0j)
    assert rec.arg_T == pytest.approx(math.pi)

@settings(max_examples=25, deadline=None)
@given(g=st.floats(min_value=0.05, max_value=20.0), k=st.floats(min_value=0.01, max_value=50.0))
def test_delta_matches_closed_form(g, k):
    rec = solve(model_from_dict({'kind': 'delta', 'g': g}), k)
    assert abs(rec.T - utils.delta_transmission(g, k)) < 1e-12
    assert rec.arg_det_S == pytest.approx(utils.delta_arg_det(g, k), abs=1e-12)

@settings(max_examples=10, deadline=None)
@given(V0=st.floats(min_value=0.1, max_value=3.0), k=st.floats(min_value=0.1, max_value=5.0))
def test_gaussian_phase_is_repulsive(V0, k):
    rec = solve(model_from_dict({'kind': 'gaussian', 'V0': V0, 'a': 1.0}), k)
    assert -math.pi < rec.arg_T <= 0
    assert rec.unitarity_defect < 1e-8

SINGULARITY_TEST_CASES = {
    'plain_delta': ({'kind': 'delta', 'g': 2.0}, (), ()),
    'free': ({'kind': 'delta', 'g': 0.0, 'dispersion': {'k_c': 1.0, 'p': 1}}, (), ()),
    # y^3 - y - 1 = 0 puts the pole at the plastic number:
    'first_order_delta': ({'kind': 'delta', 'g': 2.0, 'dispersion': {'k_c': 1.0, 'p': 1}},
                          (1j,), (1.324717957244746j,)),
    'second_order_delta': ({'kind': 'delta', 'g': 2.0, 'dispersion': {'k_c': 2.0, 'p': 2}}, (2j, 2j), None),
    'gaussian': ({'kind': 'gaussian', 'V0': 1.0, 'a': 1.0}, (), ()),
}
@pytest.mark.parametrize('spec, zeros, poles', SINGULARITY_TEST_CASES.values(), ids=SINGULARITY_TEST_CASES.keys())
def test_transmission_singularities(spec, zeros, poles):
    model = model_from_dict(spec)
    singularities = transmission_singularities(model)
    assert singularities.zeros == zeros
    if poles is not None:
        assert np.allclose(singularities.poles, poles, atol=1e-10)
    for pole in singularities.poles:
        # 1/T = 1 + i g(k)/2k vanishes at every pole
        assert pole.imag > 0
        assert abs(2*pole*(1 + pole**2/model.dispersion.k_c**2)**model.dispersion.p + 2j) < 1e-8

def test_singular_phase_closed_form():
    model = model_from_dict({'kind': 'delta', 'g': 2.0, 'dispersion': {'k_c': 1.0, 'p': 1}})
    singularities = transmission_singularities(model)
    k = np.array([0.3, 1.0, 3.0])
    y = singularities.poles[0].imag
    assert np.allclose(singularities.arg_det_correction(k), 4*(np.arctan(y/k) - np.arctan(1/k)))

def test_integrated_singular_phase():
    singularities = TransmissionSingularities(zeros=(2j,))
    # int_0^K -4 atan(2/k) dk = -4 K atan(2/K) - 4 log(1 + K^2/4)
    assert singularities.integrated_correction(3.0) == pytest.approx(-12*math.atan(2/3) - 4*math.log(1 + 9/4))
    assert TransmissionSingularities().empty

def test_dispersive_gaussian_singularities_warn():
    model = model_from_dict({'kind': 'gaussian', 'V0': 0.5, 'a': 1.0, 'dispersion': {'k_c': 1.0, 'p': 2}})
    with pytest.warns(UserWarning, match='singular'):
        assert transmission_singularities(model).empty
