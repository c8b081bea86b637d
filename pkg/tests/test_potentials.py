import math
import pytest
import numpy as np
from scatter_trace import DispersionProfile, PotentialKind, PotentialModel, evaluate, model_from_dict
from scatter_trace.errors import ConfigError, DomainError, GridError
from scatter_trace.potentials import (delta_strength, line_integral, model_to_dict, permittivity, support_radius,
                                      volume_integral)
from main_tests import utils

def test_vanishes_far_away(std_model):
    if std_model.kind is PotentialKind.DELTA:
        assert evaluate(std_model, 1.0, 1.0) == 0.0
    else:
        assert abs(evaluate(std_model, 1e6*max(std_model.width, 1.0), 1.0)) < 1e-12

def test_non_negative(std_model):
    x = np.linspace(-5.0, 5.0, 101)
    for k in (0.0, 0.3, 3.0):
        assert np.all(evaluate(std_model, x[x != 0], k) >= 0)

def test_dispersion_multiplier():
    profile = DispersionProfile(k_c=2.0, p=3)
    assert profile.multiplier(0.0) == 1.0
    assert profile.multiplier(2.0) == pytest.approx(2.0**-3)
    model = model_from_dict({'kind': 'delta', 'g': 2.0, 'dispersion': {'k_c': 1.0, 'p': 2}})
    assert delta_strength(model, 1.0) == pytest.approx(0.5)

def test_dielectric_maps_to_potential():
    model = model_from_dict({'kind': 'dielectric', 'contrast': 0.3, 'a': 1.0})
    assert evaluate(model, 0.0, 2.0) == pytest.approx(4*0.3)
    assert permittivity(model, 0.0, 2.0) == pytest.approx(0.7)

INTEGRAL_TEST_CASES = {'gaussian': ({'kind': 'gaussian', 'V0': 2.0, 'a': 0.5}, 2.0*0.5*math.sqrt(math.pi)),
                       'square_barrier': ({'kind': 'square_barrier', 'V0': 2.0, 'a': 0.5}, 1.0),
                       'sech2': ({'kind': 'sech2', 'V0': 1.5, 'a': 0.5}, 1.5),
                       'delta': ({'kind': 'delta', 'g': 0.7}, 0.7)}
@pytest.mark.parametrize('spec, expected', INTEGRAL_TEST_CASES.values(), ids=INTEGRAL_TEST_CASES.keys())
def test_line_integral(spec, expected):
    assert line_integral(model_from_dict(spec), 1.0) == pytest.approx(expected, rel=1e-12)

def test_volume_integral():
    model = model_from_dict({'kind': 'gaussian', 'V0': 0.05, 'a': 1.0})
    assert volume_integral(model, 3.0) == pytest.approx(utils.gaussian_volume_integral(0.05, 1.0))
    grid = model_from_dict({'kind': 'user_grid', 'strength': 1.0,
                            'grid': {'x': [0.0, 0.5, 1.0, 1.5], 'values': [1.0, 1.0, 1.0, 1.0]}})
    # A flat profile out to r = 1.5:
    assert volume_integral(grid, 1.0) == pytest.approx(4*math.pi/3*1.5**3, rel=1e-8)

def test_support_radius():
    model = model_from_dict({'kind': 'gaussian', 'V0': 1.0, 'a': 2.0})
    radius = support_radius(model, 1e-8)
    assert evaluate(model, radius, 1.0) == pytest.approx(1e-8, rel=1e-9)
    assert support_radius(model_from_dict({'kind': 'delta', 'g': 1.0})) == 0.0

def test_round_trip(std_model):
    assert model_from_dict(model_to_dict(std_model)) == std_model

MODEL_ERROR_TEST_CASES = {'negative_strength': ({'kind': 'gaussian', 'V0': -1.0}, ConfigError),
                          'unknown_kind': ({'kind': 'yukawa', 'V0': 1.0}, ConfigError),
                          'missing_strength': ({'kind': 'gaussian'}, ConfigError),
                          'duplicate_strength': ({'kind': 'gaussian', 'V0': 1.0, 'g': 1.0}, ConfigError),
                          'attractive_grid': ({'kind': 'user_grid', 'strength': 1.0,
                                               'grid': {'x': [0, 1, 2, 3], 'values': [0, -1, 0, 0]}}, ConfigError),
                          'soft_dielectric_cutoff': ({'kind': 'dielectric', 'contrast': 0.2,
                                                      'dispersion': {'k_c': 1.0, 'p': 2}}, ConfigError),
                          'not_a_number': ({'kind': 'gaussian', 'V0': 'high'}, ConfigError)}
@pytest.mark.parametrize('spec, exception', MODEL_ERROR_TEST_CASES.values(), ids=MODEL_ERROR_TEST_CASES.keys())
def test_model_errors(spec, exception):
    with pytest.raises(exception):
        model_from_dict(spec)

def test_direct_construction_errors():
    with pytest.raises(DomainError):
        PotentialModel('gaussian', strength=1.0, width=0.0)
    with pytest.raises(GridError):
        PotentialModel('user_grid', strength=1.0, grid_x=(0.0, 1.0), grid_values=(1.0, 1.0))
    with pytest.raises(DomainError):
        DispersionProfile(k_c=1.0, p=0)
    with pytest.raises(DomainError):
        evaluate(model_from_dict({'kind': 'gaussian', 'V0': 1.0}), 0.0, -1.0)

def test_first_order_dispersion():
    profile = DispersionProfile(k_c=1.0, p=1)
    assert float(profile.multiplier(1.0)) == pytest.approx(0.5)
    assert float(profile.multiplier(100.0)) == pytest.approx(1/10001)
