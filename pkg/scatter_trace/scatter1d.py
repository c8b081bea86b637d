"""One-dimensional scattering: R(k), T(k), the 2x2 S-matrix and its eigenphases.

The wave is written as ``u = a(x) e^{ikx} + b(x) e^{-ikx}`` with
``a' e^{ikx} + b' e^{-ikx} = 0``, which turns ``-u'' + V u = k^2 u`` into

    a' =  (V/2ik) (a + b e^{-2ikx}),
    b' = -(V/2ik) (a e^{2ikx} + b).

Starting from the purely transmitted wave ``a = 1, b = 0`` at ``x = +X`` and
integrating back to ``x = -X`` gives the incoming amplitudes, so that
``T = 1/a(-X)`` and ``R = b(-X)/a(-X)``. The flux ``|a|^2 - |b|^2 = 1`` is an
invariant, so ``a`` never vanishes and its phase can be followed continuously
along the path, which fixes the branch of ``arg T`` for every k separately.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass

import more_itertools
import numpy as np
from scipy.integrate import solve_ivp

from ._parallel import thread_map
from .errors import BranchError, DomainError, GridError, IntegrationError, UnitarityError
from .potentials import PotentialKind, breakpoints, delta_strength, factorize, line_integral, support_radius
from .tabulation import Tabulation

logger = logging.getLogger(__name__)

K_MIN = 1e-3
CHUNK_SIZE = 16
CSV_COLUMNS = ('k', 're_R', 'im_R', 're_T', 'im_T', 'arg_det_S', 'abs_R2')


@dataclass(frozen=True)
class AsymptoticAmplitudes:
    """Plane-wave coefficients: ``A e^{ikx} + B e^{-ikx}`` on the left, ``C e^{ikx} + D e^{-ikx}`` on the right."""
    A: complex
    B: complex
    C: complex
    D: complex

    @property
    def flux_defect(self):
        return abs(self.A)**2 + abs(self.D)**2 - abs(self.C)**2 - abs(self.B)**2


@dataclass(frozen=True)
class ScatterData1D:
    """Scattering amplitudes at one wavenumber.

    ``arg_T`` is the continuous branch of the transmission phase, vanishing as
    k grows; ``R`` is the reflection amplitude seen from ``orientation``.
    """
    k: float
    R: complex
    T: complex
    arg_T: float
    orientation: str = 'left'

    @classmethod
    def from_amplitudes(cls, k, R, T, arg_T=None, orientation='left'):
        if arg_T is None:
            arg_T = float(np.angle(T))
        return cls(float(k), complex(R), complex(T), float(arg_T), orientation)

    @property
    def S(self):
        T, R = self.T, self.R
        return np.array([[T, -np.conj(R)*T/np.conj(T)], [R, T]], dtype=complex)

    @property
    def amplitudes(self):
        return AsymptoticAmplitudes(1.0 + 0j, self.R, self.T, 0j)

    @property
    def abs_R2(self):
        return abs(self.R)**2

    @property
    def arg_det_S(self):
        return 2*self.arg_T

    @property
    def mixing_angle(self):
        return math.atan2(abs(self.R), abs(self.T))

    @property
    def eta1(self):
        return 0.5*(self.arg_T + self.mixing_angle)

    @property
    def eta2(self):
        return 0.5*(self.arg_T - self.mixing_angle)

    @property
    def unitarity_defect(self):
        S = self.S
        return float(np.max(np.abs(S.conj().T @ S - np.eye(2))))

    def with_arg_T(self, arg_T):
        return ScatterData1D(self.k, self.R, self.T, float(arg_T), self.orientation)


#
#   Solver Methods
#

def solve(model, k, tol=1e-10, k_min=K_MIN, orientation='left'):
    """Scattering data of ``model`` at a single wavenumber ``k > 0``."""
    return solve_grid(model, [k], tol=tol, k_min=k_min, orientation=orientation, anchor=False)[0]

def solve_grid(model, kgrid, tol=1e-10, k_min=K_MIN, orientation='left', anchor=True):
    """Per-k scattering data with one continuous branch of ``arg T`` over ``kgrid``.

    Wavenumbers below ``k_min`` are extrapolated from the solution at
    ``k_min`` with ``T`` proportional to k.
    """
    kgrid = _check_kgrid(kgrid)
    if orientation not in ('left', 'right'):
        raise DomainError(f"orientation must be 'left' or 'right'; received {orientation!r}.")
    below = kgrid < k_min
    if np.any(below):
        msg = (f'{int(below.sum())} wavenumber(s) below k_min={k_min} are extrapolated '
               'from the low-k limit T ~ k.')
        logger.warning(msg)
        warnings.warn(msg)
    solved_k = np.where(below, k_min, kgrid)
    unique_k, inverse = np.unique(solved_k, return_inverse=True)

    if model.kind is PotentialKind.DELTA:
        records = [_solve_delta(model, k, orientation) for k in unique_k]
    else:
        chunks = list(more_itertools.chunked(unique_k, CHUNK_SIZE))
        solved = thread_map(lambda ks: _solve_chunk(model, np.array(ks), tol, orientation), chunks)
        records = list(more_itertools.flatten(solved))

    data = [records[idx] for idx in np.ravel(inverse)]
    data = [_extrapolate_low_k(rec, k) if rec.k != k else rec for rec, k in zip(data, kgrid)]
    if anchor and len(data) > 1:
        _check_branch(model, data)
    return data

def _check_kgrid(kgrid):
    kgrid = np.atleast_1d(np.asarray(kgrid, dtype=float))
    if kgrid.ndim != 1 or kgrid.size == 0:
        raise GridError('The wavenumber grid must be a non-empty 1-D sequence.')
    if not np.all(np.isfinite(kgrid)) or np.any(kgrid <= 0):
        raise DomainError('Scattering requires finite wavenumbers k > 0.')
    if np.any(np.diff(kgrid) <= 0):
        idx = int(np.argmax(np.diff(kgrid) <= 0))
        raise GridError(f'The wavenumber grid is not strictly increasing at k={kgrid[idx + 1]!r}.')
    return kgrid

def _solve_delta(model, k, orientation):
    g = delta_strength(model, k)
    T = 1.0/(1.0 + 1j*g/(2*k))
    # 1 + ig/2k has positive real part, so the principal angle is the continuous branch:
    return ScatterData1D(float(k), T - 1.0, T, float(-math.atan2(g, 2*k)), orientation)

def _matching_radius(model, k, tol=1e-12):
    _, scale = factorize(model)
    ratio = float(scale(k))/float(scale(1.0))
    return support_radius(model, tol/max(ratio, 1.0))

def _solve_chunk(model, ks, tol, orientation):
    n = ks.size
    edge = max(_matching_radius(model, k) for k in ks)
    if edge == 0.0:
        return [ScatterData1D(float(k), 0j, 1 + 0j, 0.0, orientation) for k in ks]

    shape, scale = factorize(model)
    scales = np.broadcast_to(np.asarray(scale(ks), dtype=float), ks.shape)
    sign = 1.0 if orientation == 'left' else -1.0
    inner = [sign*point for point in breakpoints(model) if -edge < sign*point < edge]
    knots = sorted({edge, -edge, *inner}, reverse=True)
    rtol = max(1e-2*tol, 2.5e-14)

    def rhs(x, y):
        a, b = y[:n], y[n:]
        coupling = shape(sign*x)*scales/(2j*ks)
        phase = np.exp(2j*ks*x)
        return np.concatenate([coupling*(a + b*phase.conj()), -coupling*(a*phase + b)])

    y = np.concatenate([np.ones(n, dtype=complex), np.zeros(n, dtype=complex)])
    winding = np.zeros(n)
    for x_start, x_stop in more_itertools.pairwise(knots):
        sol = solve_ivp(rhs, (x_start, x_stop), y, method='DOP853', rtol=rtol, atol=rtol)
        if not sol.success:
            raise IntegrationError(f'Scattering integration failed for k in [{ks[0]:.6g}, {ks[-1]:.6g}] '
                                   f'on x in [{x_stop:.6g}, {x_start:.6g}]: {sol.message}')
        steps = np.diff(np.angle(sol.y[:n]), axis=1)
        steps = (steps + np.pi) % (2*np.pi) - np.pi
        if steps.size and np.max(np.abs(steps)) > np.pi/2:
            worst = ks[np.argmax(np.max(np.abs(steps), axis=1))]
            raise BranchError(f'Transmission phase jumps by more than pi/2 between solver checkpoints '
                              f'at k={worst:.6g}.')
        winding += steps.sum(axis=1)
        y = sol.y[:, -1]
    logger.debug('Integrated %d wavenumbers in [%.6g, %.6g] over |x| <= %.6g', n, ks[0], ks[-1], edge)

    A, B = y[:n], y[n:]
    defect = np.abs(1.0 + np.abs(B)**2 - np.abs(A)**2)/np.abs(A)**2
    if np.max(defect) > 10*tol:
        worst = int(np.argmax(defect))
        raise IntegrationError(f'Flux conservation violated by {defect[worst]:.3g} at k={ks[worst]:.6g}; '
                               f'the integrator did not meet tol={tol}.')
    return [ScatterData1D(float(k), complex(b/a), complex(1/a), float(-w), orientation)
            for k, a, b, w in zip(ks, A, B, winding)]

def _extrapolate_low_k(record, k):
    ratio = k/record.k
    T = record.T*ratio
    R = record.R/abs(record.R)*math.sqrt(max(1.0 - abs(T)**2, 0.0)) if record.R != 0 else 0j
    return ScatterData1D(float(k), complex(R), complex(T), record.arg_T, record.orientation)

def _check_branch(model, data):
    # Pin the top of the grid to the Born phase, then unwrap downwards:
    phases = np.array([rec.arg_T for rec in data])
    unwrapped = np.unwrap(phases)
    k_top = data[-1].k
    born = -line_integral(model, k_top)/(2*k_top)
    unwrapped += 2*np.pi*np.round((born - unwrapped[-1])/(2*np.pi))
    mismatch = np.abs(unwrapped - phases)
    if np.max(mismatch) > 1.0:
        idx = int(np.argmax(mismatch))
        raise BranchError(f'The k-grid is too coarse to follow arg T continuously near k={data[idx].k:.6g}.')


#
#   Analytic Structure Methods
#

@dataclass(frozen=True)
class TransmissionSingularities:
    """Zeros and poles of T(k) in the upper half plane, repeated by multiplicity.

    Each one adds a Blaschke phase to arg T on the real axis, which log|T|
    alone cannot reproduce through the dispersion relation.
    """
    zeros: tuple = ()
    poles: tuple = ()

    @property
    def empty(self):
        return not (self.zeros or self.poles)

    def arg_det_correction(self, k):
        """arg det S(k) minus the Hilbert transform of log(1 - |R|^2), for real k > 0."""
        k = np.asarray(k, dtype=float)
        phase = np.zeros_like(k)
        for sign, points in ((1, self.zeros), (-1, self.poles)):
            for z in points:
                phase += sign*(np.angle(k - z) - np.angle(k - np.conj(z)))
        return 2*phase

    def integrated_correction(self, k_max):
        """int_0^k_max arg_det_correction(k) dk, in closed form."""
        total = 0.0
        for sign, points in ((1, self.zeros), (-1, self.poles)):
            for z in points:
                total += sign*(_blaschke_primitive(k_max, z) - _blaschke_primitive(0.0, z))
        return 2*total

    def to_dict(self):
        return {'zeros': [[z.real, z.imag] for z in self.zeros], 'poles': [[p.real, p.imag] for p in self.poles]}

def _blaschke_primitive(k, z):
    # d/dk of this is arg(k - z) - arg(k - conj z); both logs stay off their cut for real k
    z = complex(z)
    return float(((k - z)*np.log(k - z) - (k - z.conjugate())*np.log(k - z.conjugate())).imag)

def transmission_singularities(model):
    """Upper-half-plane zeros and poles of T(k) for ``model``.

    A delta model has the rational ``T = 2k (1 + k^2/k_c^2)^p / (2k (1 + k^2/k_c^2)^p + i g)``,
    so its zeros sit at ``i k_c`` (p-fold) and its poles are roots of the denominator.
    Non-dispersive non-negative potentials have neither. Any other dispersive kind has an
    essential singularity at ``i k_c``, which is not captured; a warning says so.
    """
    profile = model.dispersion if model.dispersion is not None and model.dispersion.active else None
    if model.strength == 0 or (profile is None and model.kind is not PotentialKind.DELTA):
        return TransmissionSingularities()
    if model.kind is not PotentialKind.DELTA:
        msg = (f'T(k) of a dispersive {model.kind.value} model is singular at k = {profile.k_c}i; the '
               'reflection-only routes miss its phase and only approximate the direct ones.')
        logger.warning(msg)
        warnings.warn(msg)
        return TransmissionSingularities()
    p, k_c = (profile.p, profile.k_c) if profile is not None else (0, 1.0)
    numerator = 2*np.polynomial.polynomial.polymulx(np.polynomial.polynomial.polypow([1.0, 0.0, k_c**-2], p))
    denominator = numerator.astype(complex)
    denominator[0] += 1j*model.strength
    roots = np.polynomial.polynomial.polyroots(denominator)
    poles = sorted((complex(root) for root in roots if root.imag > 1e-12*max(abs(root), 1.0)),
                   key=lambda root: root.imag)
    singularities = TransmissionSingularities((1j*k_c,)*p, tuple(poles))
    logger.debug('Transmission singularities of %s: %s', model.kind.value, singularities)
    return singularities


#
#   Tabulation Methods
#

def tabulate(data):
    """Per-k records as a Tabulation with the CSV columns of the scattering data format."""
    return Tabulation({
        'k': [rec.k for rec in data],
        're_R': [rec.R.real for rec in data],
        'im_R': [rec.R.imag for rec in data],
        're_T': [rec.T.real for rec in data],
        'im_T': [rec.T.imag for rec in data],
        'arg_det_S': [rec.arg_det_S for rec in data],
        'abs_R2': [rec.abs_R2 for rec in data],
    })

def save_scatter1d(path, data):
    tabulate(data).to_csv(path)

def load_scatter1d(path, unitarity_tol=1e-6):
    """Read scattering records written by ``save_scatter1d`` (or any CSV with the same columns)."""
    table = Tabulation.from_csv(path, required=CSV_COLUMNS[1:6])
    return from_table(table, unitarity_tol)

def from_table(table, unitarity_tol=1e-6):
    R = table['re_R'] + 1j*table['im_R']
    T = table['re_T'] + 1j*table['im_T']
    defect = np.abs(np.abs(R)**2 + np.abs(T)**2 - 1.0)
    if np.any(defect > unitarity_tol):
        idx = int(np.argmax(defect))
        raise UnitarityError(f'|R|^2 + |T|^2 differs from 1 by {defect[idx]:.3g} at k={table["k"][idx]:.6g}.')
    if np.any(table['k'] <= 0):
        raise GridError('Scattering data must have k > 0.')
    arg_T = 0.5*table['arg_det_S']
    wrapped = (arg_T - np.angle(T) + np.pi) % (2*np.pi) - np.pi
    if np.max(np.abs(wrapped)) > 1e-6:
        idx = int(np.argmax(np.abs(wrapped)))
        raise UnitarityError(f'arg_det_S is not twice the phase of T at k={table["k"][idx]:.6g}.')
    return [ScatterData1D(float(k), complex(r), complex(t), float(phase))
            for k, r, t, phase in zip(table['k'], R, T, arg_T)]
