"""Finite-box spectra and mode sums used as a brute-force check of the trace formulas.

A scatterer is enclosed by Dirichlet walls at ``x = +-L`` (or ``r = R`` for a
radial channel) and the regularized trace is the sum of level differences

    sum_n [phi(k_n(L)) - phi(k_n^0(L))],

extrapolated to ``L -> inf`` through a fit ``c0 + c1/L``.

Grid spectra come from second-order finite differences refined three times
with step ratio 2 and combined by Richardson extrapolation. Wavenumber
dependent scatterers are written as a one-parameter family ``H(s)`` with
``s = m(k)`` the dispersion multiplier; the levels ``lambda_n(s)`` are
interpolated on Chebyshev nodes in ``s`` and ``k^2 = lambda_n(m(k))`` is solved
level by level.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import BarycentricInterpolator
from scipy.linalg import eigh_tridiagonal
from scipy.optimize import brentq

from ._parallel import thread_map
from .errors import DomainError, ExtrapolationError, IntegrationError, MissedLevelError, ResolutionError
from .potentials import PotentialKind, check_radial, delta_strength, evaluate, factorize, support_radius
from .tabulation import Tabulation
from .trace1d import TraceResult

logger = logging.getLogger(__name__)

METHODS = ('matrix_fd', 'shooting')
REFINEMENTS = 3
CHEBYSHEV_NODES = 12
SHOOTING_LEVELS = 20


@dataclass(frozen=True, eq=False)
class BoxSpectrum:
    """Lowest Dirichlet levels of a box of half-width ``L`` (or radius ``L`` when ``l`` is set)."""
    L: float
    eigen_k: np.ndarray
    method: str
    l: int | None = None
    error_estimate: np.ndarray = field(default=None)
    reference: np.ndarray | None = None

    @property
    def count(self):
        return int(self.eigen_k.size)

    @property
    def radial(self):
        return self.l is not None

    def free_levels(self):
        """Free levels of the same box: solver-matched when available, else pi n/(2L) or (n + l/2) pi/R."""
        if self.reference is not None:
            return self.reference
        n = np.arange(1, self.count + 1)
        if self.radial:
            return (n + 0.5*self.l)*math.pi/self.L
        return n*math.pi/(2*self.L)


#
#   Richardson Methods
#

def richardson_limit(step_ratio, values):
    """Richardson table over successively refined ``values`` whose error falls by ``step_ratio``."""
    last_level = [np.asarray(val, dtype=float) for val in values]
    for m in range(1, len(values)):
        mult = step_ratio**m
        last_level = [(mult*high - low)/(mult - 1.0) for low, high in zip(last_level[:-1], last_level[1:])]
    return last_level[0]


#
#   Discretized Operators
#

class _BoxOperator:
    """Second-order finite differences for H(s) on a uniform grid.

    Potentials: H(s) = -D2 + s*shape (+ l(l+1)/r^2 radially).
    Dielectrics: H(s) = E^{-1/2}(-D2)E^{-1/2} with E = 1 - s*contrast_profile.
    """

    def __init__(self, model, length, l=None):
        self.model = model
        self.length = length
        self.l = l
        self.dielectric = model is not None and model.kind is PotentialKind.DIELECTRIC
        self.shape = factorize(model)[0] if model is not None and model.strength > 0 else None

    def grid(self, N):
        if self.l is None:
            h = 2*self.length/(N + 1)
            return -self.length + h*np.arange(1, N + 1), h
        h = self.length/(N + 1)
        return h*np.arange(1, N + 1), h

    def profile(self, N):
        x, h = self.grid(N)
        if self.shape is None:
            return np.zeros_like(x)
        # Two-point Gauss average over each cell
        offset = h/(2*math.sqrt(3))
        return 0.5*(self.shape(x - offset) + self.shape(x + offset))

    def eigenvalues(self, s, N, n_levels):
        x, h = self.grid(N)
        profile = self.profile(N)
        if self.dielectric:
            eps = 1.0 - s*profile
            scale = 1.0/np.sqrt(eps)
            diag = 2/h**2*scale**2
            off = -1/h**2*scale[:-1]*scale[1:]
        else:
            diag = 2/h**2 + s*profile
            off = np.full(N - 1, -1/h**2)
        if self.l:
            diag = diag + self.l*(self.l + 1)/x**2
        return eigh_tridiagonal(diag, off, eigvals_only=True, select='i', select_range=(0, n_levels - 1))

    def romberg(self, s, N0, n_levels):
        """Richardson-extrapolated eigenvalues with an error estimate."""
        points = [(N0 + 1)*2**j - 1 for j in range(REFINEMENTS)]
        values = [self.eigenvalues(s, N, n_levels) for N in points]
        limit = richardson_limit(4.0, values)
        error = np.abs(limit - richardson_limit(4.0, values[-2:]))
        return limit, error


#
#   Spectrum Methods
#

def box_spectrum(model, L, n_max, method='matrix_fd', tol=1e-6):
    """Lowest ``n_max`` Dirichlet wavenumbers of ``model`` in the box ``[-L, L]``.

    Delta potentials are solved from their matching condition under either ``method``.
    """
    _check_box(model, L, n_max, method)
    if model.kind is PotentialKind.DELTA:
        return _delta_spectrum(model, L, n_max, method)
    if method == 'shooting':
        return _shooting_spectrum(model, L, n_max, tol)
    return _fd_spectrum(model, L, n_max, tol)

def radial_box_spectrum(model, l, R_box, n_max, method='matrix_fd', tol=1e-6):
    """Lowest ``n_max`` levels of the l-th radial channel with u(0) = u(R_box) = 0."""
    check_radial(model)
    if l < 0 or int(l) != l:
        raise DomainError(f'Angular momentum must be a non-negative integer; received l={l}.')
    _check_box(model, R_box, n_max, method)
    if method == 'shooting':
        return _shooting_spectrum(model, R_box, n_max, tol, l=int(l))
    return _fd_spectrum(model, R_box, n_max, tol, l=int(l))

def _check_box(model, L, n_max, method):
    if method not in METHODS:
        raise DomainError(f'method must be one of {METHODS}; received {method!r}.')
    if n_max < 1:
        raise DomainError(f'n_max must be positive; received {n_max}.')
    reach = support_radius(model, 1e-12)
    if not L > reach:
        raise DomainError(f'Box size {L} does not contain the potential (support radius {reach:.6g}).')
    if model.kind is PotentialKind.DIELECTRIC and model.strength >= 1:
        raise DomainError(f'A dielectric contrast of {model.strength} makes the permittivity non-positive.')
    if L < 10*support_radius(model, 1e-8):
        msg = f'Box size {L} is less than ten potential ranges; level shifts carry finite-size corrections.'
        logger.warning(msg)
        warnings.warn(msg)

def _delta_spectrum(model, L, n_max, method):
    """Exact levels: odd states never see the delta, even ones solve g sin kL + 2k cos kL = 0."""
    m = np.arange(1, n_max + 1)
    odd = m*math.pi/L
    if model.strength == 0:
        levels = np.arange(1, n_max + 1)*math.pi/(2*L)
        return BoxSpectrum(L, levels, method, error_estimate=np.zeros(n_max))

    def matching(k):
        return delta_strength(model, k)*math.sin(k*L) + 2*k*math.cos(k*L)

    even = np.empty(n_max)
    for idx, m_i in enumerate(m):
        lo, hi = (m_i - 0.5)*math.pi/L, m_i*math.pi/L
        if matching(lo) == 0.0:
            even[idx] = lo
        else:
            even[idx] = brentq(matching, lo, hi, xtol=1e-15, rtol=4*np.finfo(float).eps)
    levels = np.sort(np.concatenate([even, odd]))[:n_max]
    return BoxSpectrum(L, levels, method, error_estimate=np.zeros(n_max))

def _base_points(model, length, n_max, l):
    span = length if l is not None else 2*length
    k_top = (n_max + (l or 0))*math.pi/span
    h = min(0.3/k_top, 0.1*model.width if model.strength > 0 else math.inf, length/50)
    return int(math.ceil(span/h))

def _multiplier(model):
    if model.dispersive:
        return model.dispersion.multiplier
    return lambda k: np.ones_like(np.asarray(k, dtype=float))

def _fd_spectrum(model, length, n_max, tol, l=None):
    op = _BoxOperator(model, length, l)
    N0 = _base_points(model, length, n_max, l)
    if not model.dispersive:
        lam, lam_err = op.romberg(1.0, N0, n_max)
        free, _ = op.romberg(0.0, N0, n_max)
        k = np.sqrt(lam)
        k_err = lam_err/(2*k)
    else:
        k, k_err, free = _dispersive_levels(op, model, N0, n_max)
    logger.debug('Box of size %.6g: %d levels from %d base points, worst relative error %.3g',
                 length, n_max, N0, np.max(k_err/k))
    worst = int(np.argmax(k_err/k))
    if k_err[worst]/k[worst] > tol:
        raise ResolutionError(f'Level {worst + 1} at k={k[worst]:.6g} is only resolved to '
                              f'{k_err[worst]/k[worst]:.3g} relative; requested {tol}.')
    _check_interlacing(model, k, np.sqrt(free), tol)
    return BoxSpectrum(length, k, 'matrix_fd', l=l, error_estimate=k_err, reference=np.sqrt(free))

def _dispersive_levels(op, model, N0, n_max):
    multiplier = _multiplier(model)
    j = np.arange(CHEBYSHEV_NODES)
    nodes = 0.5*(1 - np.cos(math.pi*j/(CHEBYSHEV_NODES - 1)))
    solved = thread_map(lambda s: op.romberg(s, N0, n_max), nodes)
    table = np.array([lam for lam, _ in solved])
    errors = np.array([err for _, err in solved])

    k = np.empty(n_max)
    for n in range(n_max):
        curve = BarycentricInterpolator(nodes, table[:, n])
        k[n] = _dispersive_root(lambda kk: kk**2 - float(curve(float(multiplier(kk)))),
                                math.sqrt(table[0, n]), math.sqrt(table[-1, n]), np.max(errors[:, n]))
    k_err = np.max(errors, axis=0)/(2*k)
    return k, k_err, table[0]

def _dispersive_root(f, k_free, k_full, lam_err):
    """Root of k^2 = lambda(m(k)) between the free level and the undispersed one."""
    lo, hi = min(k_free, k_full), max(k_free, k_full)
    # Below the level error the two ends are the same level:
    if hi - lo <= lam_err/(2*hi) + 1e-15*hi:
        return 0.5*(lo + hi)
    f_lo, f_hi = f(lo), f(hi)
    if f_lo == 0.0 or f_hi == 0.0 or np.sign(f_lo) == np.sign(f_hi):
        return lo if abs(f_lo) <= abs(f_hi) else hi
    return brentq(f, lo, hi, xtol=1e-14)

def _check_interlacing(model, k, free, tol):
    if model.kind is PotentialKind.DIELECTRIC:
        upper = free/math.sqrt(1.0 - model.strength)
    else:
        peak = max(model.grid_values) if model.kind is PotentialKind.USER_GRID else model.strength
        upper = np.sqrt(free**2 + peak)
    slack = 10*tol
    bad = (k < free*(1 - slack)) | (k > upper*(1 + slack))
    if np.any(bad):
        n = int(np.argmax(bad))
        raise MissedLevelError(f'Level {n + 1} at k={k[n]:.6g} falls outside its interlacing window '
                               f'[{free[n]:.6g}, {upper[n]:.6g}]; a level was missed or duplicated.')


#
#   Shooting Methods
#

def _shooting_spectrum(model, length, n_max, tol, l=None):
    if n_max > SHOOTING_LEVELS:
        logger.info('Shooting resolves %d levels; prefer matrix_fd beyond %d.', n_max, SHOOTING_LEVELS)
    levels = _shoot_levels(model, length, n_max, tol, l)
    reference = None
    if l:
        # (n + l/2) pi/R is only asymptotic for l > 0:
        reference = _shoot_levels(replace(model, strength=0.0), length, n_max, tol, l)
    return BoxSpectrum(length, levels, 'shooting', l=l, error_estimate=np.full(n_max, 1e-12), reference=reference)

def _shoot_levels(model, length, n_max, tol, l):
    guide = _fd_spectrum(model, length, n_max + 1, max(tol, 1e-3), l).eigen_k
    bounds = np.concatenate([[0.5*guide[0]], 0.5*(guide[1:] + guide[:-1])])

    def endpoint(k):
        return _shoot(model, k, length, l, tol)

    levels = np.empty(n_max)
    for n in range(n_max):
        lo, hi = bounds[n], bounds[n + 1]
        f_lo, f_hi = endpoint(lo), endpoint(hi)
        if np.sign(f_lo) == np.sign(f_hi):
            raise MissedLevelError(f'No sign change of the shooting endpoint between k={lo:.6g} and '
                                   f'k={hi:.6g}; level {n + 1} was not bracketed.')
        levels[n] = brentq(endpoint, lo, hi, xtol=1e-13)
    return levels

def _shoot(model, k, length, l, tol):
    if l is None:
        start, stop = -length, length
        y0 = [0.0, 1.0]
        centrifugal = 0.0
    else:
        start, stop = 1e-4*length, length
        y0 = [1.0, (l + 1)/start]
        centrifugal = l*(l + 1)

    def rhs(x, y):
        barrier = centrifugal/x**2 if centrifugal else 0.0
        return [y[1], (float(evaluate(model, x, k)) + barrier - k**2)*y[0]]

    sol = solve_ivp(rhs, (start, stop), y0, method='DOP853', rtol=min(tol, 1e-10), atol=1e-12)
    if not sol.success:
        raise IntegrationError(f'Shooting integration failed at k={k:.6g}: {sol.message}')
    # Normalise by the amplitude so brentq sees a scale-free function:
    return sol.y[0, -1]/math.hypot(sol.y[0, -1], sol.y[1, -1]/max(k, 1e-12))


#
#   Mode Sum Methods
#

def level_shifts(spectrum):
    """(k_n^0 - k_n) times the box length; tends to twice the sector eigenphase in 1D, to eta_l radially."""
    span = spectrum.L if spectrum.radial else 2*spectrum.L
    return (spectrum.free_levels() - spectrum.eigen_k)*span

def _levels_needed(phi, length, n_max, span):
    if n_max is not None:
        return int(n_max)
    if not math.isfinite(phi.support_edge):
        raise DomainError('A weight without decay needs an explicit n_max for the mode sum.')
    return int(math.ceil(span*phi.support_edge/math.pi)) + 10

def _box_sum(phi, spectrum, free):
    return math.fsum(phi(spectrum.eigen_k) - phi(free))

def mode_sum(model, phi, Ls, n_max=None, method='matrix_fd', tol=1e-6, fit_tol=1e-3):
    """L -> inf limit of the 1D mode sum, from a least-squares fit c0 + c1/L."""
    Ls = _check_lengths(Ls)
    def one_box(L):
        spectrum = box_spectrum(model, L, _levels_needed(phi, L, n_max, 2*L), method, tol)
        return _box_sum(phi, spectrum, spectrum.free_levels())
    sums = np.array(thread_map(one_box, Ls))
    return _extrapolate(Ls, sums, fit_tol, 'mode sum')

def radial_mode_sum(model, phi, R_values, l_max=None, n_max=None, method='matrix_fd', tol=1e-6,
                    fit_tol=1e-3, channel_tol=1e-8):
    """Degeneracy-weighted sum over radial channels of the per-channel mode sums.

    Channels are added until two consecutive ones change the total by less
    than ``channel_tol`` relative, or ``l_max`` is reached.
    """
    R_values = _check_lengths(R_values)
    totals = np.zeros(R_values.size)
    per_channel = {}
    quiet = 0
    l = 0
    while l_max is None or l <= l_max:
        def one_box(R, l=l):
            spectrum = radial_box_spectrum(model, l, R, _levels_needed(phi, R, n_max, R), method, tol)
            return _box_sum(phi, spectrum, spectrum.free_levels())
        channel = (2*l + 1)*np.array(thread_map(one_box, R_values))
        per_channel[l] = channel
        totals += channel
        logger.debug('Channel l=%d contributes %s', l, channel)
        small = np.max(np.abs(channel)) <= channel_tol*max(np.max(np.abs(totals)), 1e-300)
        quiet = quiet + 1 if small else 0
        if quiet >= 2 or not np.any(totals):
            break
        l += 1
    result = _extrapolate(R_values, totals, fit_tol, 'radial mode sum')
    result.diagnostics['l_used'] = l
    result.diagnostics['channels'] = {key: val.tolist() for key, val in per_channel.items()}
    return result

def _check_lengths(Ls):
    Ls = np.asarray(Ls, dtype=float)
    if Ls.ndim != 1 or Ls.size < 3 or np.any(np.diff(Ls) <= 0):
        raise DomainError('Mode sums need at least three increasing box sizes for extrapolation.')
    return Ls

def _extrapolate(Ls, sums, fit_tol, label):
    design = np.column_stack([np.ones_like(Ls), 1/Ls])
    (c0, c1), *_ = np.linalg.lstsq(design, sums, rcond=None)
    residual = float(np.max(np.abs(design @ [c0, c1] - sums)))
    scale = max(float(np.max(np.abs(sums))), 1e-300)
    if residual > fit_tol*scale + 1e-12:
        raise ExtrapolationError(f'{label.capitalize()} values {sums.tolist()} at L={Ls.tolist()} do not '
                                 f'follow c0 + c1/L (residual {residual:.3g}).')
    # Two-point limit from the largest boxes as a spread estimate:
    c0_pair = (Ls[-1]*sums[-1] - Ls[-2]*sums[-2])/(Ls[-1] - Ls[-2])
    error = abs(c0 - c0_pair) + residual
    logger.info('%s extrapolated to %.12g (c1=%.6g, error %.3g)', label.capitalize(), c0, c1, error)
    return TraceResult.from_terms({'extrapolated': float(c0)}, error, (float(Ls[0]), float(Ls[-1]), int(Ls.size)),
                                  diagnostics={'slope': float(c1), 'fit_residual': residual},
                                  integrand=Tabulation({'L': Ls, 'mode_sum': sums}, abscissa='L'))


#
#   Asymptotic Quantization
#

def asymptotic_levels(eta, R, n_max, l=0, squared=False):
    """Levels from the large-box channel condition kR + eta(k) = n pi + l pi/2.

    ``squared=True`` uses 2kR + 2eta(k) = (n + l) pi instead, which reads the
    condition on the square of the channel eigenvalue and yields every level
    twice as densely. Both brackets assume |eta| < pi.
    """
    levels = np.empty(n_max)
    for idx, n in enumerate(range(1, n_max + 1)):
        if squared:
            c = (n + l)*math.pi
            f = lambda k: 2*k*R + 2*eta(k) - c
            lo, hi = (c - 2*math.pi)/(2*R), (c + 2*math.pi)/(2*R)
        else:
            c = (n + 0.5*l)*math.pi
            f = lambda k: k*R + eta(k) - c
            lo, hi = (c - math.pi)/R, (c + math.pi)/R
        levels[idx] = brentq(f, max(lo, 1e-12), hi, xtol=1e-14)
    return BoxSpectrum(R, levels, 'asymptotic', l=l)
