"""Principal-value integration, Hilbert transforms and the regularized Gamma product.

Every principal value here is computed by singularity subtraction: the sampled
function is replaced by a cubic spline ``s``, and

    P int_a^b s(t)/(t - k) dt = int_a^b [s(t) - s(k)]/(t - k) dt + s(k) log((b - k)/(k - a)),

where the first integrand is smooth and is integrated with composite
Gauss-Legendre rules on the sample intervals. Contributions outside ``[a, b]``
come from the analytic head and tail models of the sampled function.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property, lru_cache

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import CubicSpline
from scipy.special import zeta

from .errors import AccuracyError, DomainError, GridError, PoleError, RangeError, TailError

logger = logging.getLogger(__name__)

GAUSS_ORDER = 8


@dataclass(frozen=True)
class TailModel:
    """Analytic continuation of sampled data beyond one end of its grid.

    ``zero``: f = 0.  ``power_law``: f = coefficient*|t|**exponent.
    ``log``: f = coefficient + exponent*log|t| (integrable head near t = 0).
    """
    kind: str = 'zero'
    exponent: float = 0.0
    coefficient: float = 0.0

    def __post_init__(self):
        if self.kind not in ('zero', 'power_law', 'log'):
            raise TailError(f'Unknown tail kind {self.kind!r}; use zero, power_law or log.')

    def __call__(self, t):
        t = np.abs(np.asarray(t, dtype=float))
        if self.kind == 'power_law':
            return self.coefficient*t**self.exponent
        if self.kind == 'log':
            return self.coefficient + self.exponent*np.log(t)
        return np.zeros_like(t)

    @property
    def is_zero(self):
        return self.kind == 'zero' or (self.kind == 'power_law' and self.coefficient == 0.0)


@dataclass(frozen=True, eq=False)
class SampledFunction:
    """Samples of a real function plus models for what lies beyond them.

    ``tail`` covers ``t > abscissae[-1]``; ``head`` covers ``t < abscissae[0]``,
    i.e. ``(-inf, a)`` for full-line transforms and ``[0, a)`` for folded ones.
    """
    abscissae: np.ndarray
    values: np.ndarray
    tail: TailModel = field(default_factory=TailModel)
    head: TailModel = field(default_factory=TailModel)

    def __post_init__(self):
        x = np.asarray(self.abscissae, dtype=float)
        y = np.asarray(self.values, dtype=float)
        object.__setattr__(self, 'abscissae', x)
        object.__setattr__(self, 'values', y)
        if x.ndim != 1 or x.shape != y.shape or x.size < 4:
            raise GridError(f'A sampled function needs matching 1-D abscissae and values with at least '
                            f'4 points; received shapes {x.shape} and {y.shape}.')
        if not np.all(np.diff(x) > 0):
            raise GridError('Sampled abscissae must be strictly increasing.')
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise GridError('Sampled abscissae and values must be finite.')
        # With the 1/(t - k) kernel a power-law tail converges for any negative exponent:
        if self.tail.kind == 'power_law' and not self.tail.is_zero and self.tail.exponent >= 0:
            raise TailError(f'Tail exponent {self.tail.exponent} does not decay; the tail integral diverges.')
        if self.tail.kind == 'log':
            raise TailError('A log model only describes the head of a sampled function.')

    @cached_property
    def spline(self):
        return CubicSpline(self.abscissae, self.values)

    @property
    def a(self):
        return self.abscissae[0]

    @property
    def b(self):
        return self.abscissae[-1]

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        inside = self.spline(np.clip(t, self.a, self.b))
        return np.where(t < self.a, self.head(t), np.where(t > self.b, self.tail(t), inside))

    def scaled(self, factor):
        return SampledFunction(self.abscissae, factor*self.values,
                               TailModel(self.tail.kind, self.tail.exponent, factor*self.tail.coefficient),
                               _scaled_head(self.head, factor))


def _scaled_head(head, factor):
    if head.kind == 'log':
        return TailModel('log', factor*head.exponent, factor*head.coefficient)
    return TailModel(head.kind, head.exponent, factor*head.coefficient)


#
#   Fitting Methods
#

def fit_power_law(k, f, n_points=8, at='tail'):
    """Fit f ~ c*k**alpha to the last (``at='tail'``) or first (``at='head'``) samples."""
    k, f = np.asarray(k, dtype=float), np.asarray(f, dtype=float)
    sel = slice(-n_points, None) if at == 'tail' else slice(0, n_points)
    k_fit, f_fit = k[sel], f[sel]
    if np.all(f_fit == 0):
        return TailModel()
    sign = np.sign(f_fit[-1] if at == 'tail' else f_fit[0])
    if np.any(np.sign(f_fit) != sign):
        raise TailError(f'Cannot fit a power law to the {at} samples near k={k_fit[-1]:.6g}: '
                        'the values change sign.')
    alpha, log_c = np.polyfit(np.log(k_fit), np.log(np.abs(f_fit)), 1)
    residual = np.log(np.abs(f_fit)) - (alpha*np.log(k_fit) + log_c)
    if np.max(np.abs(residual)) > 0.25:
        raise TailError(f'The {at} samples near k={k_fit[-1]:.6g} are not power-law like '
                        f'(log residual {np.max(np.abs(residual)):.3g}).')
    return TailModel('power_law', float(alpha), float(sign*math.exp(log_c)))

def fit_tail(k, f, n_points=8, name='integrand', negligible=1e-10):
    """Power-law tail of samples, or a zero tail when they have already died out.

    Samples that decay faster than any power (e.g. Gaussian) get a zero tail
    once the last value is six orders below the peak.
    """
    f = np.asarray(f, dtype=float)
    if np.max(np.abs(f[-n_points:])) <= negligible:
        return TailModel()
    try:
        return fit_power_law(k, f, n_points)
    except TailError:
        if abs(f[-1]) <= 1e-6*np.max(np.abs(f)):
            logger.info('%s decays faster than a power law; dropping its tail beyond k=%.6g', name, k[-1])
            return TailModel()
        raise

def fit_log_head(k, f, n_points=4):
    """Fit f ~ c + alpha*log(k) to the first samples."""
    k, f = np.asarray(k, dtype=float)[:n_points], np.asarray(f, dtype=float)[:n_points]
    alpha, c = np.polyfit(np.log(k), f, 1)
    return TailModel('log', float(alpha), float(c))


#
#   Quadrature Methods
#

@lru_cache(maxsize=None)
def _legendre_rule(order):
    return np.polynomial.legendre.leggauss(order)

def gauss_nodes(x, order=GAUSS_ORDER):
    """Composite Gauss-Legendre nodes and weights over the intervals of ``x``."""
    x = np.asarray(x, dtype=float)
    ref_nodes, ref_weights = _legendre_rule(order)
    mid, half = 0.5*(x[1:] + x[:-1]), 0.5*np.diff(x)
    nodes = mid[:, None] + half[:, None]*ref_nodes[None, :]
    weights = half[:, None]*ref_weights[None, :]
    return nodes.ravel(), weights.ravel()

def _check_smooth(fn):
    # A step shows up as one large first difference between two small ones:
    d = np.abs(np.diff(fn.values))
    spread = np.ptp(fn.values)
    if d.size < 3 or spread == 0:
        return
    h = np.diff(fn.abscissae)
    neighbours = np.maximum(d[:-2], d[2:])
    uniform = (h[1:-1] < 2*h[:-2]) & (h[1:-1] < 2*h[2:]) & (h[1:-1] > 0.5*h[:-2]) & (h[1:-1] > 0.5*h[2:])
    jumps = uniform & (d[1:-1] > 50*neighbours) & (d[1:-1] > 1e-3*spread)
    if np.any(jumps):
        where = fn.abscissae[2:-1][jumps][0]
        raise AccuracyError(f'Sampled integrand is discontinuous near k={where:.6g}; '
                            'singularity subtraction needs a smooth function.')

def _cauchy_body(fn, k):
    """P int_a^b s(t)/(t - k) dt with k strictly inside (a, b)."""
    nodes, weights = gauss_nodes(fn.abscissae)
    s_k = fn.spline(k)
    diff = nodes - k
    close = np.abs(diff) < 1e-12*max(1.0, abs(k))
    safe = np.where(close, 1.0, diff)
    integrand = np.where(close, fn.spline(k, 1), (fn.spline(nodes) - s_k)/safe)
    return float(weights @ integrand + s_k*math.log((fn.b - k)/(k - fn.a)))

def _regular_body(fn, kernel):
    nodes, weights = gauss_nodes(fn.abscissae)
    return float(weights @ (fn.spline(nodes)*kernel(nodes)))

def _outer_integral(model, kernel, lo, hi):
    if model.is_zero:
        return 0.0
    value, _ = quad(lambda t: float(model(t))*kernel(t), lo, hi, limit=200)
    return value

def _check_interior(fn, k):
    if not fn.a < k < fn.b:
        raise RangeError(f'Principal value point k={k} must lie strictly inside the sampled range '
                         f'[{fn.a}, {fn.b}].')


#
#   Principal Value Methods
#

def pv_hilbert(fn, k):
    """(1/pi) P int_{-inf}^{inf} f(t)/(t - k) dt."""
    _check_interior(fn, k)
    _check_smooth(fn)
    kernel = lambda t: 1.0/(t - k)
    value = _cauchy_body(fn, k)
    value += _outer_integral(fn.head, kernel, -np.inf, fn.a)
    value += _outer_integral(fn.tail, kernel, fn.b, np.inf)
    return value/math.pi

def pv_symmetric(fn, k, parity='even'):
    """Folded principal value on the half line.

    ``parity='even'``: P int_0^inf f(t) 2k/(k^2 - t^2) dt.
    ``parity='odd'``:  P int_0^inf f(t) 2t/(k^2 - t^2) dt.
    For an even (odd) extension of f this equals -pi*pv_hilbert on the full line.
    """
    if fn.a < 0:
        raise RangeError(f'pv_symmetric needs samples on t >= 0; the grid starts at {fn.a}.')
    _check_interior(fn, k)
    _check_smooth(fn)
    if parity == 'even':
        sign = 1.0
        kernel = lambda t: 2*k/(k*k - t*t)
    elif parity == 'odd':
        sign = -1.0
        kernel = lambda t: 2*t/(k*k - t*t)
    else:
        raise ValueError(f"parity must be 'even' or 'odd'; received {parity!r}.")
    # 2k/(k^2 - t^2) = -1/(t - k) + 1/(t + k) and 2t/(k^2 - t^2) = -1/(t - k) - 1/(t + k):
    value = -_cauchy_body(fn, k) + sign*_regular_body(fn, lambda t: 1.0/(t + k))
    value += _outer_integral(fn.head, kernel, 0.0, fn.a)
    value += _outer_integral(fn.tail, kernel, fn.b, np.inf)
    return value


#
#   Gamma Toy Model
#

def euler_constant(N=1000, accelerate=True):
    """H_N - log N, with the Euler-Maclaurin corrections when ``accelerate``."""
    if N < 100:
        raise DomainError(f'euler_constant needs N >= 100; received {N}.')
    harmonic = math.fsum(1.0/n for n in range(N, 0, -1))
    value = harmonic - math.log(N)
    if accelerate:
        value += -1/(2*N) + 1/(12*N**2) - 1/(120*N**4) + 1/(252*N**6)
    return value

def gamma_regularized(z, N=1000, gamma_const=None, n_zeta=40):
    """Gamma(z) from the reciprocal of the Euler-regularized Weierstrass product.

    1/Gamma(z) = z e^{gamma z} prod_n e^{-z/n}(1 + z/n); factors past ``N`` are
    summed through log(1 + w) - w = sum_j (-1)^{j+1} w^j/j with Hurwitz zeta
    values, so only rounding limits the result.
    """
    z = complex(z)
    if z.imag == 0 and z.real <= 0 and z.real == round(z.real):
        raise PoleError(f'Gamma has a pole at z={z.real:g}.')
    if N < 10:
        raise DomainError(f'gamma_regularized needs N >= 10; received {N}.')
    if abs(z) >= N/2:
        raise DomainError(f'|z|={abs(z):.6g} is too large for a product truncated at N={N}.')
    if gamma_const is None:
        gamma_const = euler_constant()
    n = np.arange(1, N + 1, dtype=float)
    w = z/n
    log_product = np.sum(np.log1p(w) - w)
    j = np.arange(2, n_zeta + 1)
    log_tail = np.sum((-1.0)**(j + 1)*z**j/j*zeta(j, N + 1))
    log_reciprocal = np.log(z) + gamma_const*z + log_product + log_tail
    return complex(np.exp(-log_reciprocal))
