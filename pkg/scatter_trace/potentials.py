"""Potential and dielectric models supplying V(x,k) and V(r,k) to the solvers.

Units are those of ``-u'' + V u = k^2 u``. A dispersive model multiplies its
base profile by ``m(k) = (1 + k^2/k_c^2)^(-p)``; a dielectric model is mapped to
the effective potential ``V(x,k) = k^2 [1 - eps(x,k)]``.

The square barrier occupies ``0 <= x <= a`` in 1D and ``r <= a`` radially;
the other built-in profiles are centred on the origin.
"""

from __future__ import annotations

import enum
import math
import numbers
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import PchipInterpolator

from .errors import ConfigError, DomainError, GridError


class PotentialKind(str, enum.Enum):
    DELTA = 'delta'
    SQUARE_BARRIER = 'square_barrier'
    GAUSSIAN = 'gaussian'
    SECH2 = 'sech2'
    USER_GRID = 'user_grid'
    DIELECTRIC = 'dielectric'


class DispersionKind(str, enum.Enum):
    NONE = 'none'
    LORENTZIAN_CUTOFF = 'lorentzian_cutoff'


@dataclass(frozen=True)
class DispersionProfile:
    kind: DispersionKind = DispersionKind.LORENTZIAN_CUTOFF
    k_c: float = 1.0
    p: int = 2

    def __post_init__(self):
        object.__setattr__(self, 'kind', DispersionKind(self.kind))
        if self.kind is DispersionKind.NONE:
            return
        if not (np.isfinite(self.k_c) and self.k_c > 0):
            raise DomainError(f'Dispersion cutoff k_c must be positive; received {self.k_c}.')
        if not isinstance(self.p, numbers.Integral) or self.p < 1:
            raise DomainError(f'Dispersion exponent p must be a positive integer; received {self.p}.')

    @property
    def active(self):
        return self.kind is not DispersionKind.NONE

    def multiplier(self, k):
        k = np.asarray(k, dtype=float)
        if not self.active:
            return np.ones_like(k)
        return (1.0 + (k/self.k_c)**2)**(-self.p)


@dataclass(frozen=True)
class PotentialModel:
    """Immutable description of a non-negative scatterer.

    ``strength`` is g for ``delta``, the peak height V0 for the barrier,
    gaussian and sech2 profiles, and the permittivity contrast
    ``1 - eps`` at the centre for ``dielectric``. ``width`` is the length
    scale a. ``user_grid`` models carry tabulated ``grid_x``/``grid_values``,
    interpolated by a monotonicity-preserving local cubic and zero outside.
    """
    kind: PotentialKind
    strength: float = 0.0
    width: float = 1.0
    grid_x: tuple = ()
    grid_values: tuple = ()
    dispersion: DispersionProfile | None = None

    def __post_init__(self):
        object.__setattr__(self, 'kind', PotentialKind(self.kind))
        object.__setattr__(self, 'grid_x', tuple(float(x) for x in self.grid_x))
        object.__setattr__(self, 'grid_values', tuple(float(v) for v in self.grid_values))
        self._check_parameters()
        self._check_positivity()

    def _check_parameters(self):
        if not (np.isfinite(self.strength) and self.strength >= 0):
            raise DomainError(f'{self.kind.value} strength must be finite and non-negative; '
                              f'received {self.strength}.')
        if self.kind is not PotentialKind.DELTA and not (np.isfinite(self.width) and self.width > 0):
            raise DomainError(f'{self.kind.value} width must be positive; received {self.width}.')
        if self.kind is PotentialKind.USER_GRID:
            x, values = np.array(self.grid_x), np.array(self.grid_values)
            if x.size < 4 or x.size != values.size:
                raise GridError(f'user_grid needs at least 4 abscissae with one value each; received '
                                f'{x.size} abscissae and {values.size} values.')
            if not np.all(np.diff(x) > 0):
                raise GridError('user_grid abscissae must be strictly increasing.')
            if not np.all(np.isfinite(values)):
                raise GridError('user_grid values must be finite.')
        if self.kind is PotentialKind.DIELECTRIC and self.dispersive and self.dispersion.p < 3:
            # k^2 V = k^4 * contrast * m(k) only vanishes for p > 2:
            raise DomainError('A dispersive dielectric needs p >= 3 so that k^2 V(x,k) -> 0; '
                              f'received p={self.dispersion.p}.')

    def _check_positivity(self):
        if self.kind is PotentialKind.DELTA:
            return
        reach = max(10*self.width, max(np.abs(self.grid_x), default=0.0))
        x = np.linspace(-reach, reach, 401)
        for k in (0.0, 0.5, 1.0, 10.0):
            values = self._shape(x)*self._scale(k)
            if np.any(values < 0):
                worst = x[np.argmin(values)]
                raise DomainError(f'{self.kind.value} potential is negative near x={worst:.6g}, k={k}; '
                                  'only non-negative (repulsive) scatterers are supported.')

    @property
    def dispersive(self):
        return self.dispersion is not None and self.dispersion.active

    @cached_property
    def _interpolant(self):
        return PchipInterpolator(np.array(self.grid_x), np.array(self.grid_values), extrapolate=False)

    def _shape(self, x):
        x = np.asarray(x, dtype=float)
        a = self.width
        if self.kind is PotentialKind.SQUARE_BARRIER:
            return np.where((x >= 0) & (x <= a), self.strength, 0.0)
        if self.kind in (PotentialKind.GAUSSIAN, PotentialKind.DIELECTRIC):
            return self.strength*np.exp(-(x/a)**2)
        if self.kind is PotentialKind.SECH2:
            return self.strength/np.cosh(np.clip(x/a, -350.0, 350.0))**2
        if self.kind is PotentialKind.USER_GRID:
            return np.nan_to_num(self._interpolant(x), nan=0.0)
        raise DomainError('A delta potential is a distribution and has no sampled profile.')

    def _scale(self, k):
        scale = self.dispersion.multiplier(k) if self.dispersive else np.ones_like(np.asarray(k, dtype=float))
        if self.kind is PotentialKind.DIELECTRIC:
            scale = np.asarray(k, dtype=float)**2*scale
        return scale


#
#   Evaluation
#

def evaluate(model, x, k):
    """V(x,k); vectorised over ``x``. A delta is reported as 0 away from the origin."""
    if k < 0:
        raise DomainError(f'Wavenumber must be non-negative; received k={k}.')
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise DomainError('Potential evaluation requires finite positions.')
    if model.kind is PotentialKind.DELTA:
        values = np.where(x == 0, np.inf, 0.0)
    else:
        values = model._shape(x)*model._scale(k)
    if np.any(values < 0):
        raise DomainError(f'{model.kind.value} potential evaluates negative at k={k}.')
    return values if values.ndim else float(values)

def delta_strength(model, k):
    """Dispersed coupling g(k) of a delta model."""
    if model.kind is not PotentialKind.DELTA:
        raise DomainError(f'delta_strength needs a delta model; received {model.kind.value}.')
    return float(model.strength*model._scale(k))

def factorize(model):
    """Split V(x,k) = scale(k)*shape(x); returns the two callables."""
    if model.kind is PotentialKind.DELTA:
        raise DomainError('A delta potential has no sampled profile to factorize.')
    return model._shape, model._scale

def permittivity(model, x, k):
    """eps(x,k) = 1 - V(x,k)/k^2, the inverse of the dielectric-to-potential map."""
    if k <= 0:
        raise DomainError(f'Permittivity needs k > 0; received k={k}.')
    return 1.0 - evaluate(model, x, k)/k**2

def breakpoints(model):
    """Positions where V is discontinuous; integrators restart there."""
    if model.kind is PotentialKind.SQUARE_BARRIER:
        return (0.0, model.width)
    return ()

def support_radius(model, tol=1e-12):
    """Smallest X with V(x, k=1) < tol for |x| > X."""
    if tol <= 0:
        raise DomainError(f'support_radius needs tol > 0; received {tol}.')
    if model.kind is PotentialKind.DELTA:
        return 0.0
    peak = model.strength*float(model._scale(1.0))
    a = model.width
    if model.kind is PotentialKind.SQUARE_BARRIER:
        return a if peak >= tol else 0.0
    if peak <= tol:
        return 0.0
    if model.kind in (PotentialKind.GAUSSIAN, PotentialKind.DIELECTRIC):
        return a*math.sqrt(math.log(peak/tol))
    if model.kind is PotentialKind.SECH2:
        return a*math.acosh(math.sqrt(peak/tol))
    # user_grid: step one knot outward from the last sample above tol
    x = np.array(model.grid_x)
    above = np.nonzero(np.array(model.grid_values)*model._scale(1.0) >= tol)[0]
    if above.size == 0:
        return 0.0
    lo, hi = max(above[0] - 1, 0), min(above[-1] + 1, x.size - 1)
    return float(max(abs(x[lo]), abs(x[hi])))

def line_integral(model, k):
    """Integral of V(x,k) over the line."""
    if model.kind is PotentialKind.DELTA:
        return delta_strength(model, k)
    a, scale = model.width, float(model._scale(k))
    if model.kind is PotentialKind.SQUARE_BARRIER:
        return model.strength*a*scale
    if model.kind in (PotentialKind.GAUSSIAN, PotentialKind.DIELECTRIC):
        return model.strength*a*math.sqrt(math.pi)*scale
    if model.kind is PotentialKind.SECH2:
        return 2*model.strength*a*scale
    return float(model._interpolant.integrate(model.grid_x[0], model.grid_x[-1]))*scale

def volume_integral(model, k):
    """Integral of V(r,k) over space for the radial reading of ``model``."""
    check_radial(model)
    a, scale = model.width, float(model._scale(k))
    if model.kind is PotentialKind.SQUARE_BARRIER:
        return 4*math.pi/3*a**3*model.strength*scale
    if model.kind in (PotentialKind.GAUSSIAN, PotentialKind.DIELECTRIC):
        return model.strength*math.pi**1.5*a**3*scale
    if model.kind is PotentialKind.SECH2:
        # int_0^inf x^2 sech^2 x dx = pi^2/12
        return 4*math.pi*model.strength*a**3*math.pi**2/12*scale
    r_max = model.grid_x[-1]
    if r_max <= 0:
        return 0.0
    radial, _ = quad(lambda r: r**2*model._shape(r), max(model.grid_x[0], 0.0), r_max, limit=200)
    return 4*math.pi*radial*scale

def check_radial(model):
    if model.kind is PotentialKind.DELTA:
        raise DomainError('Radial solvers do not support delta potentials.')
    if model.kind is PotentialKind.USER_GRID and model.grid_x[-1] <= 0:
        raise GridError('A radial user_grid must tabulate r >= 0.')


#
#   Configuration Methods
#

_STRENGTH_KEYS = ('strength', 'g', 'V0', 'contrast')
_WIDTH_KEYS = ('width', 'a')

def model_from_dict(spec, where='potential'):
    if not isinstance(spec, dict):
        raise ConfigError(f'{where} must be an object; received {type(spec).__name__}.')
    try:
        kind = PotentialKind(spec['kind'])
    except KeyError:
        raise ConfigError(f'{where}.kind is required.')
    except ValueError:
        raise ConfigError(f'{where}.kind={spec["kind"]!r} is not one of '
                          f'{[member.value for member in PotentialKind]}.')
    params = {'kind': kind}
    for name, aliases in (('strength', _STRENGTH_KEYS), ('width', _WIDTH_KEYS)):
        given = [key for key in aliases if key in spec]
        if len(given) > 1:
            raise ConfigError(f'{where} sets {name} more than once via {given}.')
        if given:
            params[name] = _number(spec[given[0]], f'{where}.{given[0]}')
    if 'strength' not in params:
        raise ConfigError(f'{where}.strength is required for kind {kind.value}.')
    if kind is PotentialKind.USER_GRID:
        grid = spec.get('grid')
        if not isinstance(grid, dict) or 'x' not in grid or 'values' not in grid:
            raise ConfigError(f'{where}.grid with arrays "x" and "values" is required for user_grid.')
        params['grid_x'] = tuple(_number(v, f'{where}.grid.x') for v in grid['x'])
        params['grid_values'] = tuple(_number(v, f'{where}.grid.values') for v in grid['values'])
    if spec.get('dispersion') is not None:
        params['dispersion'] = _dispersion_from_dict(spec['dispersion'], f'{where}.dispersion')
    try:
        return PotentialModel(**params)
    except (DomainError, GridError) as error:
        raise ConfigError(f'{where}: {error}')

def _dispersion_from_dict(spec, where):
    if not isinstance(spec, dict):
        raise ConfigError(f'{where} must be an object.')
    try:
        return DispersionProfile(kind=spec.get('kind', 'lorentzian_cutoff'),
                                 k_c=_number(spec.get('k_c', 1.0), f'{where}.k_c'),
                                 p=int(_number(spec.get('p', 2), f'{where}.p')))
    except ValueError as error:
        raise ConfigError(f'{where}: {error}')

def model_to_dict(model):
    spec = {'kind': model.kind.value, 'strength': model.strength}
    if model.kind is not PotentialKind.DELTA:
        spec['width'] = model.width
    if model.kind is PotentialKind.USER_GRID:
        spec['grid'] = {'x': list(model.grid_x), 'values': list(model.grid_values)}
    if model.dispersion is not None:
        spec['dispersion'] = {'kind': model.dispersion.kind.value, 'k_c': model.dispersion.k_c,
                              'p': model.dispersion.p}
    return spec

def _number(value, where):
    if isinstance(value, bool) or not isinstance(value, numbers.Real) or not math.isfinite(value):
        raise ConfigError(f'{where} must be a finite number; received {value!r}.')
    return float(value)
