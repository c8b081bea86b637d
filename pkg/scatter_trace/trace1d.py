"""Trace formulas for one-dimensional scatterers.

    direct:      tr phi = -int_0^inf (dk/2pi) phi'(k) arg det S(k)
    reflection:  tr phi =  int int (dk/pi)(dk'/pi) phi'(k) k log(1 - |R(k')|^2)/(k'^2 - k^2)
    Casimir:     tr sqrt(H) = 1/2 int int (dk/pi)(dk'/pi) [k L(k') - k' L(k)]/(k'^2 - k^2),
                 L = log(1 - |R|^2)

The two routes agree through the dispersion relation
``arg det S(k) = pv_symmetric(L, k)/pi + B(k)``, where B is the phase of the
zeros and poles of T in the upper half plane (zero for non-dispersive
non-negative potentials).
"""

from __future__ import annotations

import enum
import logging
import math
import numbers
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import CubicSpline, PchipInterpolator

from ._parallel import thread_map
from .errors import ConfigError, ConvergenceError, DomainError, GridError, TailError
from .pvmath import SampledFunction, TailModel, fit_log_head, fit_power_law, fit_tail, gauss_nodes, pv_symmetric
from .tabulation import Tabulation

logger = logging.getLogger(__name__)

TAIL_POINTS = 8
HEAD_DECADES = 12
BLOCK_ROWS = 512
PHASE_GAP_TOL = 1e-2


class WeightKind(str, enum.Enum):
    CASIMIR = 'casimir'
    EXP_CUTOFF_CASIMIR = 'exp_cutoff_casimir'
    GAUSSIAN_BUMP = 'gaussian_bump'
    USER_GRID = 'user_grid'


@dataclass(frozen=True, eq=False)
class WeightFunction:
    """Smooth spectral weight phi(k) on k >= 0.

    ``casimir``: phi = k.  ``exp_cutoff_casimir``: phi = k exp(-k/cutoff).
    ``gaussian_bump``: phi = height*exp(-((k - center)/width)^2).
    ``user_grid``: monotone cubic through (grid_k, grid_values), constant beyond.
    """
    kind: WeightKind
    cutoff: float = 1.0
    center: float = 1.0
    width: float = 0.5
    height: float = 1.0
    grid_k: tuple = ()
    grid_values: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, 'kind', WeightKind(self.kind))
        if self.kind is WeightKind.EXP_CUTOFF_CASIMIR and not self.cutoff > 0:
            raise DomainError(f'exp_cutoff_casimir needs a positive cutoff; received {self.cutoff}.')
        if self.kind is WeightKind.GAUSSIAN_BUMP and not self.width > 0:
            raise DomainError(f'gaussian_bump needs a positive width; received {self.width}.')
        if self.kind is WeightKind.USER_GRID:
            k = np.asarray(self.grid_k, dtype=float)
            if k.size < 2 or k.size != len(self.grid_values) or np.any(np.diff(k) <= 0) or k[0] < 0:
                raise GridError('A user_grid weight needs at least 2 increasing non-negative abscissae '
                                'with one value each.')

    @classmethod
    def casimir(cls):
        return cls(WeightKind.CASIMIR)

    @classmethod
    def gaussian_bump(cls, center=1.0, width=0.5, height=1.0):
        return cls(WeightKind.GAUSSIAN_BUMP, center=center, width=width, height=height)

    @property
    def _interpolant(self):
        return PchipInterpolator(np.asarray(self.grid_k, dtype=float), np.asarray(self.grid_values, dtype=float))

    def __call__(self, k):
        k = np.asarray(k, dtype=float)
        if self.kind is WeightKind.CASIMIR:
            return k.copy()
        if self.kind is WeightKind.EXP_CUTOFF_CASIMIR:
            return k*np.exp(-k/self.cutoff)
        if self.kind is WeightKind.GAUSSIAN_BUMP:
            return self.height*np.exp(-((k - self.center)/self.width)**2)
        return self._interpolant(np.clip(k, self.grid_k[0], self.grid_k[-1]))

    def derivative(self, k):
        k = np.asarray(k, dtype=float)
        if self.kind is WeightKind.CASIMIR:
            return np.ones_like(k)
        if self.kind is WeightKind.EXP_CUTOFF_CASIMIR:
            return (1.0 - k/self.cutoff)*np.exp(-k/self.cutoff)
        if self.kind is WeightKind.GAUSSIAN_BUMP:
            return -2*(k - self.center)/self.width**2*self(k)
        inside = (k >= self.grid_k[0]) & (k <= self.grid_k[-1])
        return np.where(inside, self._interpolant.derivative()(np.clip(k, self.grid_k[0], self.grid_k[-1])), 0.0)

    @property
    def decays(self):
        return self.kind is not WeightKind.CASIMIR

    @property
    def support_edge(self):
        """Wavenumber beyond which phi' is negligible (below 1e-16 relative)."""
        if self.kind is WeightKind.CASIMIR:
            return math.inf
        if self.kind is WeightKind.EXP_CUTOFF_CASIMIR:
            return 45*self.cutoff
        if self.kind is WeightKind.GAUSSIAN_BUMP:
            return self.center + 6.1*self.width
        return self.grid_k[-1]

    @classmethod
    def from_dict(cls, spec, where='phi'):
        if not isinstance(spec, dict) or 'kind' not in spec:
            raise ConfigError(f'{where} must be an object with a "kind".')
        try:
            kind = WeightKind(spec['kind'])
        except ValueError:
            raise ConfigError(f'{where}.kind={spec["kind"]!r} is not one of {[m.value for m in WeightKind]}.')
        params = {}
        for name in ('cutoff', 'center', 'width', 'height'):
            if name in spec:
                value = spec[name]
                if isinstance(value, bool) or not isinstance(value, numbers.Real):
                    raise ConfigError(f'{where}.{name} must be a number; received {value!r}.')
                params[name] = float(value)
        if kind is WeightKind.USER_GRID:
            grid = spec.get('grid')
            if not isinstance(grid, dict) or 'k' not in grid or 'values' not in grid:
                raise ConfigError(f'{where}.grid with arrays "k" and "values" is required for user_grid.')
            params['grid_k'] = tuple(float(v) for v in grid['k'])
            params['grid_values'] = tuple(float(v) for v in grid['values'])
        try:
            return cls(kind, **params)
        except (DomainError, GridError) as error:
            raise ConfigError(f'{where}: {error}')

    def to_dict(self):
        spec = {'kind': self.kind.value}
        if self.kind is WeightKind.EXP_CUTOFF_CASIMIR:
            spec['cutoff'] = self.cutoff
        elif self.kind is WeightKind.GAUSSIAN_BUMP:
            spec.update(center=self.center, width=self.width, height=self.height)
        elif self.kind is WeightKind.USER_GRID:
            spec['grid'] = {'k': list(self.grid_k), 'values': list(self.grid_values)}
        return spec


@dataclass
class TraceResult:
    """A regularized trace with the terms it is made of.

    ``value`` equals the sum of ``breakdown``; ``integrand`` optionally holds
    the per-k integrand actually integrated.
    """
    value: float
    breakdown: dict
    quadrature_error: float
    kgrid_used: tuple
    diagnostics: dict = field(default_factory=dict)
    integrand: Tabulation | None = None

    @classmethod
    def from_terms(cls, breakdown, quadrature_error, kgrid_used, **kwargs):
        value = math.fsum(breakdown.values())
        return cls(value, dict(breakdown), float(quadrature_error), tuple(kgrid_used), **kwargs)

    def to_dict(self):
        out = {'value': self.value, 'breakdown': dict(self.breakdown),
               'quadrature_error': self.quadrature_error,
               'kgrid_used': {'k_min': self.kgrid_used[0], 'k_max': self.kgrid_used[1],
                              'count': self.kgrid_used[2]}}
        out.update({name: val for name, val in self.diagnostics.items() if _is_json_scalar(val)})
        return out


def _is_json_scalar(val):
    return isinstance(val, (bool, int, float, str)) or val is None


#
#   Helper Methods
#

def _unpack(data):
    if len(data) < 4:
        raise GridError(f'Trace formulas need at least 4 scattering records; received {len(data)}.')
    k = np.array([rec.k for rec in data])
    if np.any(np.diff(k) <= 0):
        raise GridError('Scattering records must be sorted by strictly increasing k.')
    arg_det = np.array([rec.arg_det_S for rec in data])
    abs_R2 = np.array([rec.abs_R2 for rec in data])
    return k, arg_det, abs_R2

def _grid_descriptor(k):
    return (float(k[0]), float(k[-1]), int(k.size))

def _log_transmission(abs_R2):
    # log(1 - |R|^2) = log|T|^2; clip so a total reflection stays finite
    return np.log(np.clip(1.0 - abs_R2, 1e-300, None))

def _reflection_function(k, L, tails):
    if not tails:
        return SampledFunction(k, L)
    head = fit_log_head(k, L) if k[0] > 0 else TailModel()
    return SampledFunction(k, L, tail=fit_tail(k, L, TAIL_POINTS, 'log(1 - |R|^2)'), head=head)

def _phase_tail(phi, k, arg, tail_tol):
    """-(1/2pi) int_{k_max}^inf phi'(t) arg(t) dt from a power-law fit to the last samples."""
    k_max = k[-1]
    if phi.support_edge <= k_max:
        return 0.0
    if phi.decays and np.all(np.abs(phi.derivative(k[-TAIL_POINTS:])*arg[-TAIL_POINTS:]) < tail_tol):
        return 0.0
    try:
        model = fit_tail(k, arg, TAIL_POINTS, 'arg det S', tail_tol)
    except TailError as error:
        raise TailError(f'The trace integrand has not decayed by k={k_max:.6g} and no tail model fits: {error}')
    if model.is_zero:
        return 0.0
    if not phi.decays and model.exponent >= -1.0:
        raise TailError(f'arg det S decays like k^{model.exponent:.3g} beyond k={k_max:.6g}; with phi(k)=k '
                        'the trace diverges. Use a dispersive potential or exp_cutoff_casimir.')
    value, _ = quad(lambda t: float(phi.derivative(t)*model(t)), k_max, np.inf, limit=200)
    return -value/(2*math.pi)

def _phase_head(phi, k_lo, arg_lo, head='constant'):
    """Contribution of [0, k_lo]: arg held constant (1D, where it tends to -pi) or vanishing linearly (3D)."""
    if head == 'constant':
        return -(float(phi(k_lo)) - float(phi(0.0)))*arg_lo/(2*math.pi)
    value, _ = quad(lambda t: float(phi.derivative(t))*t/k_lo, 0.0, k_lo)
    return -value*arg_lo/(2*math.pi)


#
#   Trace Methods
#

def trace_direct(data, phi, tail_tol=1e-8, emit_integrand=False):
    """-int (dk/2pi) phi'(k) arg det S(k), with head and tail beyond the tabulated grid."""
    k, arg_det, _ = _unpack(data)
    return phase_trace(k, arg_det, phi, tail_tol, emit_integrand)

def phase_trace(k, arg_det, phi, tail_tol=1e-8, emit_integrand=False, head='constant'):
    """-int (dk/2pi) phi'(k) arg_det(k) for a tabulated phase on an increasing grid."""
    k, arg_det = np.asarray(k, dtype=float), np.asarray(arg_det, dtype=float)
    body = _spline_phase_integral(phi, k, arg_det)
    if k.size >= 8:
        coarse = _spline_phase_integral(phi, k[::2], arg_det[::2])
        error = abs(body - coarse)/15
    else:
        error = abs(body)*1e-3
    terms = {'body': body, 'head': _phase_head(phi, k[0], arg_det[0], head),
             'tail': _phase_tail(phi, k, arg_det, tail_tol)}
    integrand = None
    if emit_integrand:
        integrand = Tabulation({'k': k, 'integrand': -phi.derivative(k)*arg_det/(2*math.pi)})
    logger.info('Direct trace over k in [%.6g, %.6g]: %s', k[0], k[-1], terms)
    return TraceResult.from_terms(terms, error, _grid_descriptor(k), integrand=integrand)

def _spline_phase_integral(phi, k, arg):
    nodes, weights = gauss_nodes(k)
    spline = CubicSpline(k, arg)
    return float(-(weights @ (phi.derivative(nodes)*spline(nodes)))/(2*math.pi))

def trace_reflection(data, phi, tails=True, outer_order=4, tail_tol=1e-8, singularities=None):
    """Reflection-only trace through the folded dispersion relation.

    ``singularities`` (see ``scatter1d.transmission_singularities``) adds the
    phase of the upper-half-plane zeros and poles of T. With ``tails=False``
    both integrals are confined to the tabulated range.
    """
    k, arg_det, abs_R2 = _unpack(data)
    L = _log_transmission(abs_R2)
    return _reflection_trace(k, L, phi, tails, outer_order, tail_tol, singularities=singularities,
                             reference=arg_det if tails else None)

def _reflection_trace(k, L, phi, tails, outer_order, tail_tol, label='reflection', singularities=None,
                      reference=None):
    inner = _reflection_function(k, L, tails)
    nodes, weights = gauss_nodes(k, outer_order)
    if phi.decays and np.isfinite(phi.support_edge):
        relevant = nodes <= phi.support_edge
    else:
        relevant = np.ones_like(nodes, dtype=bool)
    arg = np.zeros_like(nodes)
    arg[relevant] = np.array(thread_map(lambda x: pv_symmetric(inner, x)/math.pi, nodes[relevant]))
    if singularities is not None:
        arg[relevant] += singularities.arg_det_correction(nodes[relevant])

    body = float(-(weights @ (phi.derivative(nodes)*arg))/(2*math.pi))
    coarse_nodes, coarse_weights = gauss_nodes(k, max(outer_order - 2, 1))
    coarse = float(-(coarse_weights @ (phi.derivative(coarse_nodes)*CubicSpline(nodes, arg)(coarse_nodes)))
                   /(2*math.pi))
    terms = {'body': body}
    if tails:
        terms['head'] = _phase_head(phi, nodes[0], arg[0])
        terms['tail'] = _phase_tail(phi, nodes[relevant], arg[relevant], tail_tol) if relevant.all() else 0.0
    diagnostics = {}
    if reference is not None:
        diagnostics['max_phase_gap'] = _phase_gap(k, reference, nodes[relevant], arg[relevant])
    logger.info('%s trace over k in [%.6g, %.6g]: %s', label.capitalize(), k[0], k[-1], terms)
    return TraceResult.from_terms(terms, abs(body - coarse), _grid_descriptor(k), diagnostics=diagnostics,
                                  integrand=Tabulation({'k': nodes, 'arg_det_S': arg}))

def _phase_gap(k, arg_det, nodes, arg):
    """Largest difference between the reconstructed phase and the tabulated arg det S."""
    if nodes.size == 0:
        return 0.0
    gaps = np.abs(arg - CubicSpline(k, arg_det)(nodes))
    gap = float(np.max(gaps))
    if gap > PHASE_GAP_TOL:
        msg = (f'The phase rebuilt from log(1 - |R|^2) misses arg det S by {gap:.3g} near '
               f'k={nodes[np.argmax(gaps)]:.6g}; T has zeros or poles in the upper half plane that were '
               'not supplied.')
        logger.warning(msg)
        warnings.warn(msg)
    return gap

def multiple_reflection(data, phi, order=4, tails=True, outer_order=4, singularities=None):
    """Reflection trace split by powers of |R|^2: log(1 - |R|^2) = -sum_n |R|^(2n)/n."""
    if order < 1:
        raise DomainError(f'multiple_reflection needs order >= 1; received {order}.')
    k, _, abs_R2 = _unpack(data)
    terms, error = {}, 0.0
    for n in range(1, order + 1):
        partial = _reflection_trace(k, -abs_R2**n/n, phi, tails, outer_order, 1e-8, label=f'order {n}')
        terms[f'order_{n}'] = partial.value
        error += partial.quadrature_error
    if singularities is not None and not singularities.empty:
        terms['singularities'] = _singularity_trace(k, phi, singularities, tails, outer_order)
    remainder = np.max(abs_R2)**(order + 1)/((order + 1)*(1 - np.max(abs_R2))) if np.max(abs_R2) < 1 else math.inf
    return TraceResult.from_terms(terms, error, _grid_descriptor(k),
                                  diagnostics={'truncation_bound': float(remainder)})

def _singularity_trace(k, phi, singularities, tails, outer_order, tail_tol=1e-8):
    nodes, weights = gauss_nodes(k, outer_order)
    arg = singularities.arg_det_correction(nodes)
    value = float(-(weights @ (phi.derivative(nodes)*arg))/(2*math.pi))
    if tails:
        value += _phase_head(phi, nodes[0], arg[0]) + _phase_tail(phi, nodes, arg, tail_tol)
    return value

def casimir_energy_1d(data, order=8, singularities=None):
    """Casimir energy from the symmetric double integral over [0, k_max]^2.

    Below the grid L = log(1 - |R|^2) follows its logarithmic head, on panels
    shrinking geometrically towards k = 0. The diagonal is filled with its
    limit (k L'(k) - L(k))/(2k). ``singularities`` adds the phase of the
    upper-half-plane zeros and poles of T, integrated in closed form over
    [0, k_max]; for dispersive T the double integral alone grows like
    log k_max and only the sum converges.
    """
    k, arg_det, abs_R2 = _unpack(data)
    _check_dispersive(k, arg_det)
    L = _log_transmission(abs_R2)
    spline = CubicSpline(k, L)
    head = fit_log_head(k, L) if k[0] > 0 else None
    value, diagonal_max = _casimir_square(spline, head, *_casimir_nodes(k, order))
    coarse, _ = _casimir_square(spline, head, *_casimir_nodes(k, max(order - 2, 1)))
    terms = {'double_integral': value}
    if singularities is not None and not singularities.empty:
        terms['singularities'] = -singularities.integrated_correction(float(k[-1]))/(2*math.pi)
    logger.info('Casimir double integral over [0, %.6g]^2: %s', k[-1], terms)
    return TraceResult.from_terms(terms, abs(value - coarse), _grid_descriptor(k),
                                  diagnostics={'diagonal_max': diagonal_max})

def _casimir_nodes(k, order):
    """Composite Gauss nodes over the grid, preceded by head panels on [0, k_min]."""
    nodes, weights = gauss_nodes(k, order)
    if not k[0] > 0:
        return nodes, weights, 0
    edges = np.concatenate([[0.0], k[0]*np.logspace(-HEAD_DECADES, 0, HEAD_DECADES + 1)])
    head_nodes, head_weights = gauss_nodes(edges, order)
    return np.concatenate([head_nodes, nodes]), np.concatenate([head_weights, weights]), head_nodes.size

def _casimir_square(spline, head, nodes, weights, n_head):
    L, dL = np.empty_like(nodes), np.empty_like(nodes)
    L[n_head:], dL[n_head:] = spline(nodes[n_head:]), spline(nodes[n_head:], 1)
    if n_head:
        L[:n_head], dL[:n_head] = head(nodes[:n_head]), head.exponent/nodes[:n_head]
    diagonal = (nodes*dL - L)/(2*nodes)
    # The kernel is symmetric in (k, k'); rows go in blocks to bound memory
    total = 0.0
    for start in range(0, nodes.size, BLOCK_ROWS):
        rows = np.arange(start, min(start + BLOCK_ROWS, nodes.size))
        kk, LL = nodes[rows, None], L[rows, None]
        with np.errstate(divide='ignore', invalid='ignore'):
            G = (kk*L[None, :] - nodes[None, :]*LL)/(nodes[None, :]**2 - kk**2)
        G[rows - start, rows] = diagonal[rows]
        total += float(weights[rows] @ G @ weights)
    return 0.5*total/math.pi**2, float(np.max(np.abs(diagonal[n_head:])))

def _check_dispersive(k, arg_det):
    tail = arg_det[-TAIL_POINTS:]
    if np.max(np.abs(tail)) <= 1e-12:
        return
    try:
        model = fit_power_law(k, arg_det, TAIL_POINTS)
    except TailError as error:
        raise ConvergenceError(f'Cannot establish the decay of arg det S beyond k={k[-1]:.6g}: {error}')
    if model.exponent > -1.5:
        raise ConvergenceError(f'arg det S decays like k^{model.exponent:.3g}; the Casimir energy of a '
                               'non-dispersive scatterer diverges. Add a dispersion profile.')

def density_of_states(data):
    """rho(k) = (1/2pi) d(arg det S)/dk by second-order finite differences."""
    k, arg_det, _ = _unpack(data)
    return phase_density(k, arg_det)

def phase_density(k, arg_det):
    phases = Tabulation({'k': k, 'arg_det_S': arg_det})
    rho = np.gradient(phases, phases.abscissa, edge_order=2)/(2*math.pi)
    return Tabulation({'k': phases.abscissa, 'rho': rho['arg_det_S'], 'arg_det_S': phases['arg_det_S']})
