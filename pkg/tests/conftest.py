import pytest
import numpy as np
from copy import deepcopy
from main_tests import utils
from scatter_trace import WeightFunction, model_from_dict, solve_grid

STD_MODELS = {
'free': [ {'kind': 'gaussian', 'V0': 0.0, 'a': 1.0} ],
'delta': [ {'kind': 'delta', 'g': 2.0} ],
'gaussian': [ {'kind': 'gaussian', 'V0': 1.0, 'a': 1.0} ],
'square_barrier': [ {'kind': 'square_barrier', 'V0': 2.0, 'a': 1.0} ],
'sech2': [ {'kind': 'sech2', 'V0': 1.5, 'a': 0.5} ],
'dispersive_gaussian': [ {'kind': 'gaussian', 'V0': 0.5, 'a': 1.0, 'dispersion': {'k_c': 1.0, 'p': 2}} ],
'dielectric': [ {'kind': 'dielectric', 'contrast': 0.3, 'a': 1.0, 'dispersion': {'k_c': 2.0, 'p': 3}} ],
}

STD_WEIGHTS = {
'bump': [ {'kind': 'gaussian_bump', 'center': 1.0, 'width': 0.5} ],
'exp_cutoff': [ {'kind': 'exp_cutoff_casimir', 'cutoff': 2.0} ],
'user_grid': [ {'kind': 'user_grid', 'grid': {'k': [0.0, 1.0, 2.0, 3.0], 'values': [0.0, 1.0, 1.5, 1.6]}} ],
}

@pytest.fixture(scope="function")
def model(request):
    yield model_from_dict(deepcopy(request.param))

@pytest.fixture(scope="function")
def phi(request):
    yield WeightFunction.from_dict(deepcopy(request.param))

@pytest.fixture(scope="function", params=utils.unpack_test_cases(STD_MODELS), ids=utils.unpack_test_ids(STD_MODELS))
def std_model(request):
    yield model_from_dict(deepcopy(request.param))

@pytest.fixture(scope="function", params=utils.unpack_test_cases(STD_WEIGHTS), ids=utils.unpack_test_ids(STD_WEIGHTS))
def std_phi(request):
    yield WeightFunction.from_dict(deepcopy(request.param))

@pytest.fixture(scope="session")
def delta_model():
    return model_from_dict({'kind': 'delta', 'g': 2.0})

@pytest.fixture(scope="session")
def gaussian_barrier():
    return model_from_dict({'kind': 'gaussian', 'V0': 1.0, 'a': 1.0})

@pytest.fixture(scope="session")
def bump():
    return WeightFunction.gaussian_bump(center=1.0, width=0.5)

@pytest.fixture(scope="session")
def delta_data(delta_model):
    return solve_grid(delta_model, np.geomspace(1e-3, 60.0, 500))

@pytest.fixture(scope="session")
def gaussian_data(gaussian_barrier):
    return solve_grid(gaussian_barrier, np.geomspace(1e-3, 30.0, 400))
