import math
import numpy as np

# Closed-form 1D scatterers:
def delta_transmission(g, k):
    return 1.0/(1.0 + 1j*g/(2*k))

def delta_arg_det(g, k):
    return -2*np.arctan(g/(2*k))

def sech2_transmission_squared(V0, a, k):
    # |T|^2 for V0 sech^2(x/a), V0 > 0
    nu = 4*V0*a**2 - 1
    angle = 0.5*math.pi*math.sqrt(abs(nu))
    barrier = math.cosh(angle)**2 if nu > 0 else math.cos(angle)**2
    s = math.sinh(math.pi*k*a)**2
    return s/(s + barrier)

def square_barrier_s_wave(V0, a, k):
    # Repulsive radial step below the barrier top: k cot(ka + eta) = kappa coth(kappa a)
    kappa = math.sqrt(V0 - k**2)
    return math.atan(k*math.tanh(kappa*a)/kappa) - k*a

def gaussian_volume_integral(V0, a):
    return V0*math.pi**1.5*a**3

# Helpers for synthetic unitary operators:
def random_unitary(n, seed=42):
    rng = np.random.default_rng(seed)
    z = (rng.standard_normal((n, n)) + 1j*rng.standard_normal((n, n)))/math.sqrt(2)
    q, r = np.linalg.qr(z)
    return q*(np.diag(r)/np.abs(np.diag(r)))

def rotated_operator(eta, seed=42):
    eta = np.asarray(eta, dtype=float)
    U = random_unitary(eta.size, seed)
    return U @ np.diag(np.exp(2j*eta)) @ U.conj().T

def assert_relative(result, expected, rtol):
    assert abs(result - expected) <= rtol*abs(expected), f'{result} differs from {expected} by more than {rtol}'

def assert_tables_equal(table_1, table_2):
    assert type(table_1) == type(table_2)
    assert table_1.list_keys() == table_2.list_keys()
    for name in table_1.keys():
        assert np.allclose(table_1[name], table_2[name], atol=1e-12, rtol=1e-12)

# Helper functions to unpack parameter combos to paramterised test functions:
def unpack_test_cases(test_cases):
    return tuple([val_i for val in test_cases.values() for val_i in val])

def unpack_test_ids(test_cases):
    return tuple([key for key, val in test_cases.items() for _ in val])
