"""Dispersion relations and the Casimir energy of a three-dimensional scatterer.

With the forward amplitude written through the Born term and the averaged
cross section (g = k sigma_bar),

    Re tr f(k)   = -(1/4pi) int V d^3x - (1/4pi^2) pv_symmetric(g, k, 'odd'),
    arg det S(k) = arg det_1 S(k) + 2k Re tr f(k),

and for phi(k) = k the trace splits into an anomaly term carried by the
potential alone, a cross-section double integral and a det_1 remainder.
"""

from __future__ import annotations

import logging
import math
import warnings

import numpy as np
from scipy.interpolate import CubicSpline

from ._parallel import thread_map
from .errors import BranchError, ConvergenceError, DomainError, GridError, TailError
from .potentials import volume_integral
from .pvmath import SampledFunction, TailModel, fit_power_law, fit_tail, gauss_nodes, pv_symmetric
from .scatter3d import (WEAK_COUPLING, PhaseShiftSpectrum, SOperator, _eigenphases, hs_norm_squared,
                        log_det, log_det1, phase_shifts, trace_f)
from .tabulation import Tabulation
from .trace1d import TAIL_POINTS, TraceResult, _grid_descriptor, phase_trace

logger = logging.getLogger(__name__)

REQUIRED_COLUMNS = ('sigma_bar', 'log_det1_arg', 'born_integral', 'hs_bound')
DIRECT_COLUMNS = ('arg_det_s', 're_tr_f_direct', 'max_abs_eta')
IDENTITY_TOL = 1e-8


class DispersionInputs(Tabulation):
    """Per-k scattering data feeding the 3D dispersion relations.

    Required columns are ``sigma_bar``, ``log_det1_arg`` (continuous branch),
    ``born_integral`` and ``hs_bound``; tables built from phase shifts or
    S-operators also carry the direct values ``arg_det_s``,
    ``re_tr_f_direct`` and ``max_abs_eta``.
    """

    @classmethod
    def build(cls, operators, born_integral):
        """Columns from a k-ordered sequence of phase-shift spectra or tracked S-operators."""
        if len(operators) < 4:
            raise GridError(f'Dispersion inputs need at least 4 wavenumbers; received {len(operators)}.')
        k = np.array([op.k for op in operators])
        born = born_integral(k) if callable(born_integral) else np.asarray(born_integral, dtype=float)
        born = np.broadcast_to(born, k.shape).astype(float)
        hs = np.array([hs_norm_squared(op) for op in operators])
        inputs = cls({
            'k': k,
            'sigma_bar': math.pi*hs/k**2,
            'log_det1_arg': [log_det1(op).imag for op in operators],
            'born_integral': born,
            'hs_bound': 0.5*hs,
            'arg_det_s': [log_det(op).imag for op in operators],
            're_tr_f_direct': [trace_f(op).real for op in operators],
            'max_abs_eta': [float(np.max(np.abs(_eigenphases(op)[1]), initial=0.0)) for op in operators],
        })
        inputs.validate()
        return inputs

    def validate(self):
        self.check_abscissa()
        missing = [name for name in REQUIRED_COLUMNS if name not in self]
        if missing:
            raise GridError(f'Dispersion inputs lack the column(s) {missing}.')
        k = self.abscissa
        if self.count < 4 or k[0] <= 0:
            raise GridError('Dispersion inputs need at least 4 wavenumbers, all positive.')
        if np.any(self['sigma_bar'] < -1e-14):
            idx = int(np.argmin(self['sigma_bar']))
            raise DomainError(f'sigma_bar is negative ({self["sigma_bar"][idx]:.3g}) at k={k[idx]:.6g}.')
        if np.any(self['born_integral'] < 0):
            idx = int(np.argmin(self['born_integral']))
            raise DomainError(f'The Born integral is negative at k={k[idx]:.6g}; V must be non-negative.')
        steps = np.abs(np.diff(self['log_det1_arg']))
        if steps.size and np.max(steps) > math.pi/2:
            idx = int(np.argmax(steps))
            raise BranchError(f'arg det_1 S jumps by {steps[idx]:.3g} between k={k[idx]:.6g} and '
                              f'k={k[idx + 1]:.6g}; the branch is not continuous.')
        if 'arg_det_s' in self and 're_tr_f_direct' in self:
            residual = self['arg_det_s'] - self['log_det1_arg'] - 2*k*self['re_tr_f_direct']
            scale = np.maximum(1.0, np.abs(self['arg_det_s']))
            if np.max(np.abs(residual)/scale) > IDENTITY_TOL:
                idx = int(np.argmax(np.abs(residual)/scale))
                raise BranchError(f'arg det S differs from arg det_1 S + 2k Re tr f by {residual[idx]:.3g} '
                                  f'at k={k[idx]:.6g}.')
        return self

    @property
    def weak_coupling(self):
        if 'max_abs_eta' not in self:
            return None
        return bool(np.max(self['max_abs_eta']) < WEAK_COUPLING)


#
#   Construction Methods
#

def dispersion_inputs(model, kgrid, tol=1e-10):
    """Solve the radial problem on ``kgrid`` and tabulate the dispersion inputs."""
    kgrid = np.asarray(kgrid, dtype=float)
    if kgrid.ndim != 1 or np.any(np.diff(kgrid) <= 0):
        raise GridError('The wavenumber grid must be strictly increasing.')
    spectra = thread_map(lambda k: phase_shifts(model, k, tol=tol), kgrid)
    logger.info('Solved %d radial problems on k in [%.6g, %.6g]', kgrid.size, kgrid[0], kgrid[-1])
    return DispersionInputs.build(spectra, lambda k: np.array([volume_integral(model, val) for val in k]))

def dispersion_inputs_from_soperators(operators, born_integral):
    """Dispersion inputs from tracked S-operators plus a user-supplied Born integral per k."""
    if any(op.eigenphases is None for op in operators if isinstance(op, SOperator)):
        raise BranchError('S-operators must carry tracked eigenphases; run track_eigenphases first.')
    return DispersionInputs.build(operators, born_integral)


#
#   Dispersion Relation Methods
#

def _cross_section_function(inputs):
    k = inputs.abscissa
    g = k*inputs['sigma_bar']
    tail = fit_tail(k, g, TAIL_POINTS, 'k sigma_bar')
    if not tail.is_zero and tail.exponent > -0.9:
        raise TailError(f'k^2 sigma_bar grows like k^{tail.exponent + 1:.3g} beyond k={k[-1]:.6g}; '
                        'the cross-section dispersion integral diverges.')
    try:
        head = fit_power_law(k, g, 4, at='head')
    except TailError:
        head = TailModel()
    return SampledFunction(k, g, tail=tail, head=head)

def _born_at(inputs, k):
    return float(inputs.interpolate('born_integral', k))

def re_tr_f_terms(inputs, k, _cross=None):
    cross = _cross if _cross is not None else _cross_section_function(inputs)
    return {'born_term': -_born_at(inputs, k)/(4*math.pi),
            'cross_section_term': -pv_symmetric(cross, k, 'odd')/(4*math.pi**2)}

def re_tr_f(inputs, k):
    """Re tr f(k) from the Born integral and the principal value over sigma_bar."""
    return math.fsum(re_tr_f_terms(inputs, k).values())

def arg_det_S_terms(inputs, k, _cross=None):
    forward = re_tr_f_terms(inputs, k, _cross)
    return {'det1_term': float(inputs.interpolate('log_det1_arg', k)),
            'anomaly_term': 2*k*forward['born_term'],
            'cross_section_term': 2*k*forward['cross_section_term']}

def arg_det_S(inputs, k):
    """arg det S(k) = arg det_1 S - (k/2pi) int V d^3x - (k/2pi^2) pv_symmetric(k sigma_bar, k, 'odd')."""
    return math.fsum(arg_det_S_terms(inputs, k).values())


#
#   Trace Methods
#

def trace_direct_3d(source, phi, tail_tol=1e-8, emit_integrand=False):
    """-int (dk/pi) phi'(k) sum_a d_a eta_a, from spectra, S-operators or dispersion inputs."""
    if isinstance(source, DispersionInputs):
        if 'arg_det_s' not in source:
            raise GridError('The direct 3D trace needs an arg_det_s column.')
        k, arg = source.abscissa, source['arg_det_s']
    else:
        if len(source) < 4:
            raise GridError(f'The direct 3D trace needs at least 4 wavenumbers; received {len(source)}.')
        k = np.array([op.k for op in source])
        arg = np.array([log_det(op).imag for op in source])
        if np.any(np.diff(k) <= 0):
            raise GridError('Phase shifts must be ordered by strictly increasing k.')
    return phase_trace(k, arg, phi, tail_tol, emit_integrand, head='vanishing')

def _single_integral(k, f, name, tails, order):
    """int_0^inf f dk: spline body, a head vanishing linearly at k = 0, and a power-law tail."""
    spline = CubicSpline(k, f)
    nodes, weights = gauss_nodes(k, order)
    body = float(weights @ spline(nodes))
    coarse_nodes, coarse_weights = gauss_nodes(k, max(order - 2, 1))
    error = abs(body - float(coarse_weights @ spline(coarse_nodes)))
    if not tails:
        return body, error
    head = 0.5*k[0]*f[0]
    tail = fit_tail(k, f, TAIL_POINTS, name)
    if tail.is_zero:
        return body + head, error
    if tail.exponent >= -1:
        raise ConvergenceError(f'{name} decays like k^{tail.exponent:.3g} beyond k={k[-1]:.6g}; its integral '
                               'diverges. The Casimir energy needs a dispersive scatterer.')
    far = -tail.coefficient*k[-1]**(tail.exponent + 1)/(tail.exponent + 1)
    return body + head + far, error

def _cross_section_square(k, g, order):
    spline = CubicSpline(k, g)
    nodes, weights = gauss_nodes(k, order)
    G, dG = spline(nodes), spline(nodes, 1)
    kk, kp = nodes[:, None], nodes[None, :]
    denom = kp**2 - kk**2
    diagonal = denom == 0
    F = np.where(diagonal, 0.0, kk*kp*(G[None, :] - G[:, None])/np.where(diagonal, 1.0, denom))
    F[diagonal] = (0.5*nodes*dG)[np.nonzero(diagonal)[0]]
    return -float(weights @ F @ weights)/(4*math.pi**3)

def casimir_energy_3d(inputs, order=8, tails=True):
    """Casimir energy as anomaly, cross-section and det_1 terms.

    The double integral covers the tabulated square; the single integrals
    add analytic head and tail pieces when ``tails``. The det_1 term is
    compared with its weak-coupling bound, which is reported, not enforced.
    """
    inputs.validate()
    k = inputs.abscissa
    anomaly, anomaly_err = _single_integral(k, k*inputs['born_integral'], 'k int V d^3x', tails, order)
    det1, det1_err = _single_integral(k, inputs['log_det1_arg'], 'arg det_1 S', tails, order)
    bound, _ = _single_integral(k, inputs['hs_bound'], 'k^2 sigma_bar', tails, order)
    g = k*inputs['sigma_bar']
    cross = _cross_section_square(k, g, order)
    cross_err = abs(cross - _cross_section_square(k, g, max(order - 2, 1)))

    terms = {'anomaly_term': anomaly/(4*math.pi**2), 'cross_section_term': cross,
             'det1_term': -det1/(2*math.pi)}
    det1_bound = bound/(2*math.pi)
    violated = abs(terms['det1_term']) > det1_bound
    if violated:
        msg = (f'|det_1 term| = {abs(terms["det1_term"]):.6g} exceeds its weak-coupling bound '
               f'{det1_bound:.6g}.')
        logger.warning(msg)
        warnings.warn(msg)
    error = anomaly_err/(4*math.pi**2) + cross_err + det1_err/(2*math.pi)
    logger.info('Casimir 3D over k in [%.6g, %.6g]: %s', k[0], k[-1], terms)
    return TraceResult.from_terms(terms, error, _grid_descriptor(k),
                                  diagnostics={'det1_bound': det1_bound, 'bound_violated': bool(violated),
                                               'weak_coupling_flag': inputs.weak_coupling})
