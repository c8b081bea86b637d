"""Three-dimensional scattering observables and S-operator algebra.

Phase shifts of a spherically symmetric potential come from the variable
phase equation

    delta_l'(r) = -(V(r,k)/k) [jh_l(kr) cos delta_l + nh_l(kr) sin delta_l]^2,

with Riccati-Bessel functions ``jh_l(x) = x j_l(x)`` and ``nh_l(x) = -x y_l(x)``,
integrated outward from ``delta_l = 0`` so the branch is continuous in the
coupling and vanishes at high k.

Operator quantities (Hilbert-Schmidt norm, det_1, trace of the amplitude)
accept either a channel spectrum ``{(a, d_a, eta_a)}`` or a dense unitary
``SOperator``; both give the same numbers when they describe the same matrix.
"""

from __future__ import annotations

import json
import logging
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import linear_sum_assignment
from scipy.special import spherical_jn, spherical_yn

from .errors import BranchError, DomainError, FormatError, GridError, IntegrationError, TruncationError, UnitarityError
from .potentials import breakpoints, check_radial, factorize, support_radius

logger = logging.getLogger(__name__)

L_MARGIN = 8
BASIS_NAME = '(l,m) lexicographic'
WEAK_COUPLING = 0.5


@dataclass(frozen=True, eq=False)
class PhaseShiftSpectrum:
    """Channel phase shifts at one wavenumber.

    ``labels`` are the channel names (the angular momenta l for partial
    waves), ``degeneracies`` their multiplicities and ``eta`` the phase shifts.
    """
    k: float
    labels: tuple
    degeneracies: np.ndarray
    eta: np.ndarray
    l_max: int | None = None

    def __post_init__(self):
        object.__setattr__(self, 'degeneracies', np.asarray(self.degeneracies, dtype=float))
        object.__setattr__(self, 'eta', np.asarray(self.eta, dtype=float))
        if not self.k > 0:
            raise DomainError(f'Phase shifts need k > 0; received k={self.k}.')
        if self.eta.shape != self.degeneracies.shape or len(self.labels) != self.eta.size:
            raise DomainError('Phase-shift labels, degeneracies and values must have equal length.')

    @classmethod
    def partial_waves(cls, k, eta):
        eta = np.asarray(eta, dtype=float)
        l = np.arange(eta.size)
        return cls(float(k), tuple(int(val) for val in l), 2*l + 1, eta, l_max=int(eta.size - 1))

    @property
    def channels(self):
        return list(zip(self.labels, self.degeneracies, self.eta))

    @property
    def max_abs_eta(self):
        return float(np.max(np.abs(self.eta), initial=0.0))


@dataclass(frozen=True)
class CrossSection:
    k: float
    sigma_bar: float
    per_channel: tuple = ()


@dataclass(frozen=True, eq=False)
class SOperator:
    """Truncated unitary S(k) in the (l, m) basis, optionally with tracked eigenphases."""
    k: float
    matrix: np.ndarray
    l_max: int
    eigenphases: np.ndarray | None = None
    spectrum: PhaseShiftSpectrum | None = None

    def __post_init__(self):
        matrix = np.asarray(self.matrix, dtype=complex)
        object.__setattr__(self, 'matrix', matrix)
        dim = (self.l_max + 1)**2
        if matrix.shape != (dim, dim):
            raise FormatError(f'An S-operator with l_max={self.l_max} must be {dim}x{dim}; '
                              f'received shape {matrix.shape} at k={self.k}.')

    @property
    def basis(self):
        return [(l, m) for l in range(self.l_max + 1) for m in range(-l, l + 1)]

    @property
    def unitarity_defect(self):
        S = self.matrix
        return float(np.max(np.abs(S.conj().T @ S - np.eye(S.shape[0])), initial=0.0))

    @property
    def f_hat(self):
        """The amplitude operator defined by S = 1 + 2ik f."""
        return (self.matrix - np.eye(self.matrix.shape[0]))/(2j*self.k)

    def with_eigenphases(self, eigenphases):
        return SOperator(self.k, self.matrix, self.l_max, np.asarray(eigenphases, dtype=float), self.spectrum)


#
#   Phase Shift Methods
#

def phase_shifts(model, k, l_max=None, tol=1e-10):
    """Partial-wave phase shifts eta_0 ... eta_{l_max} of a radial model at wavenumber k."""
    check_radial(model)
    if not k > 0:
        raise DomainError(f'Phase shifts need k > 0; received k={k}.')
    shape, scale = factorize(model)
    strength = float(scale(k))
    reach = support_radius(model, 1e-12/max(strength/float(scale(1.0)), 1.0)) if model.strength > 0 else 0.0
    if l_max is None:
        l_max = int(math.ceil(k*reach)) + L_MARGIN
    if reach == 0.0 or strength == 0.0:
        return PhaseShiftSpectrum.partial_waves(k, np.zeros(l_max + 1))

    l = np.arange(l_max + 1)
    r_start = np.maximum(_regular_onset(l, k), 1e-6*reach)
    active_l = r_start < reach
    eta = np.zeros(l_max + 1)
    if np.any(active_l):
        eta[active_l] = _integrate_phases(shape, strength, k, l[active_l], r_start[active_l], reach,
                                          breakpoints(model), tol)
    if abs(eta[-1]) >= tol:
        raise TruncationError(f'|eta_{l_max}| = {abs(eta[-1]):.3g} at k={k:.6g} is not below tol={tol}; '
                              'raise l_max.')
    logger.debug('k=%.6g: %d partial waves, |eta_0|=%.3g', k, l_max + 1, abs(eta[0]))
    return PhaseShiftSpectrum.partial_waves(k, eta)

def _regular_onset(l, k, smallness=1e-10):
    """Radius where x j_l(x) ~ x^(l+1)/(2l+1)!! first reaches ``smallness``."""
    log_double_factorial = np.array([math.lgamma(2*li + 2) - li*math.log(2) - math.lgamma(li + 1) for li in l])
    log_x = (log_double_factorial + math.log(smallness))/(l + 1)
    return np.exp(log_x)/k

def _integrate_phases(shape, strength, k, l, r_start, reach, kinks, tol):
    knots = sorted({float(r_start.min()), reach, *(p for p in kinks if r_start.min() < p < reach)})

    def rhs(r, delta):
        x = k*r
        on = r >= r_start
        out = np.zeros_like(delta)
        if not np.any(on):
            return out
        lo, d = l[on], delta[on]
        jh = x*spherical_jn(lo, x)
        nh = -x*spherical_yn(lo, x)
        v = float(shape(r))*strength
        out[on] = -(v/k)*(jh*np.cos(d) + nh*np.sin(d))**2
        return out

    delta = np.zeros(l.size)
    for r0, r1 in zip(knots[:-1], knots[1:]):
        sol = solve_ivp(rhs, (r0, r1), delta, method='LSODA', rtol=tol, atol=1e-2*tol)
        if not sol.success:
            raise IntegrationError(f'Phase equation failed at k={k:.6g} on r in [{r0:.6g}, {r1:.6g}]: '
                                   f'{sol.message}')
        delta = sol.y[:, -1]
    return delta


#
#   Observable Methods
#

def _require_partial_waves(spectrum, name):
    if spectrum.l_max is None:
        raise DomainError(f'{name} needs partial-wave phase shifts; ingested channels carry no angular labels.')

def legendre_series(l_max, x):
    """P_0(x) ... P_{l_max}(x) by the upward three-term recurrence."""
    p = np.empty(l_max + 1)
    p[0] = 1.0
    if l_max >= 1:
        p[1] = x
    for n in range(1, l_max):
        p[n + 1] = ((2*n + 1)*x*p[n] - n*p[n - 1])/(n + 1)
    return p

def amplitude(spectrum, cos_theta):
    """f(k, theta) = (1/2ik) sum_l (2l+1)(e^{2i eta_l} - 1) P_l(cos theta)."""
    _require_partial_waves(spectrum, 'amplitude')
    if abs(cos_theta) > 1:
        raise DomainError(f'cos_theta must lie in [-1, 1]; received {cos_theta}.')
    p = legendre_series(spectrum.l_max, float(cos_theta))
    terms = spectrum.degeneracies*(np.exp(2j*spectrum.eta) - 1.0)*p
    return complex(np.sum(terms)/(2j*spectrum.k))

def cross_section(spectrum):
    per_channel = 4*math.pi/spectrum.k**2*spectrum.degeneracies*np.sin(spectrum.eta)**2
    return CrossSection(spectrum.k, float(math.fsum(per_channel)), tuple(per_channel.tolist()))

def _eigenphases(operator):
    if isinstance(operator, PhaseShiftSpectrum):
        return operator.degeneracies, operator.eta
    if operator.eigenphases is not None:
        phases = operator.eigenphases
    else:
        phases = 0.5*np.angle(np.linalg.eigvals(operator.matrix))
    return np.ones_like(phases), phases

def hs_norm_squared(operator):
    """tr (S - 1)^dagger (S - 1)."""
    if isinstance(operator, SOperator):
        deviation = operator.matrix - np.eye(operator.matrix.shape[0])
        return float(np.sum(np.abs(deviation)**2))
    return float(4*math.fsum(operator.degeneracies*np.sin(operator.eta)**2))

def log_det1(operator):
    """log det[S e^{-(S - 1)}] = sum_a d_a [2i eta_a - (e^{2i eta_a} - 1)].

    Its real part sum_a d_a (1 - cos 2 eta_a) is non-negative.
    """
    d, eta = _eigenphases(operator)
    return complex(np.sum(d*(2j*eta - (np.exp(2j*eta) - 1.0))))

def log_det(operator):
    """log det S = 2i sum_a d_a eta_a on the tracked branch."""
    d, eta = _eigenphases(operator)
    return complex(2j*math.fsum(d*eta))

def trace_f(operator):
    """tr f = tr(S - 1)/(2ik)."""
    if isinstance(operator, SOperator):
        return complex(np.trace(operator.matrix - np.eye(operator.matrix.shape[0]))/(2j*operator.k))
    d, eta = _eigenphases(operator)
    return complex(np.sum(d*(np.exp(2j*eta) - 1.0))/(2j*operator.k))

def det1_bound_report(operator):
    """Compare log det_1 S with (1/2pi) k^2 sigma_bar = hs_norm_squared/2.

    Re log det_1 S equals the bound identically, so the modulus exceeds it
    whenever arg det_1 S is non-zero; the flag therefore tests |arg det_1 S|,
    the part entering the trace formulas. It only holds for small phase
    shifts, so a violation is reported (and warned about) rather than raised.
    """
    d, eta = _eigenphases(operator)
    value = log_det1(operator)
    size = abs(value)
    bound = 0.5*hs_norm_squared(operator)
    max_eta = float(np.max(np.abs(eta), initial=0.0))
    report = {'k': operator.k, 'log_det1_abs': size, 'log_det1_arg': value.imag, 'bound': bound,
              'violated': bool(abs(value.imag) > bound),
              'max_abs_eta': max_eta, 'weak_coupling': bool(max_eta < WEAK_COUPLING)}
    if report['violated']:
        msg = (f'|arg det_1 S| = {abs(value.imag):.6g} exceeds k^2 sigma_bar/(2 pi) = {bound:.6g} '
               f'at k={operator.k:.6g} '
               f'(|log det_1 S| = {size:.6g}, max |eta| = {max_eta:.3g}).')
        logger.warning(msg)
        warnings.warn(msg)
    return report


#
#   Operator Construction Methods
#

def soperator_from_spectrum(spectrum):
    """Diagonal S in the (l, m) basis, each e^{2i eta_l} repeated 2l+1 times."""
    _require_partial_waves(spectrum, 'soperator_from_spectrum')
    phases = np.repeat(spectrum.eta, (2*np.arange(spectrum.l_max + 1) + 1))
    return SOperator(spectrum.k, np.diag(np.exp(2j*phases)), spectrum.l_max, phases, spectrum)

def track_eigenphases(operators, max_step=math.pi/4):
    """Assign continuous eigenphases along ascending k, anchored near zero at the largest k.

    Eigenvectors at neighbouring k are paired by maximal overlap (ties between
    degenerate eigenvalues broken by eigenvalue distance); a phase step larger
    than ``max_step`` means the grid is too coarse to follow the branch.
    """
    if not operators:
        return []
    ks = np.array([op.k for op in operators])
    if np.any(np.diff(ks) <= 0):
        raise GridError('S-operators must be ordered by strictly increasing k.')
    tracked = [None]*len(operators)
    values, vectors = np.linalg.eig(operators[-1].matrix)
    phases = 0.5*np.angle(values)
    tracked[-1] = operators[-1].with_eigenphases(phases)
    for idx in range(len(operators) - 2, -1, -1):
        new_values, new_vectors = np.linalg.eig(operators[idx].matrix)
        overlap = np.abs(vectors.conj().T @ new_vectors)**2
        cost = -overlap + 0.5*np.abs(values[:, None] - new_values[None, :])
        rows, cols = linear_sum_assignment(cost)
        order = cols[np.argsort(rows)]
        new_values, new_vectors = new_values[order], new_vectors[:, order]
        step = np.angle(new_values/values)
        if np.max(np.abs(step), initial=0.0) > 2*max_step:
            worst = int(np.argmax(np.abs(step)))
            raise BranchError(f'Eigenphase {worst} moves by {0.5*abs(step[worst]):.3g} between k={ks[idx]:.6g} '
                              f'and k={ks[idx + 1]:.6g}; the k-grid is too coarse to track it.')
        phases = phases + 0.5*step
        values, vectors = new_values, new_vectors
        tracked[idx] = operators[idx].with_eigenphases(phases)
    return tracked


#
#   File Methods
#

def save_soperator(path, operators, compact=False, unitarity_tol=1e-6):
    """Write S-operators as JSON; ``compact`` stores partial-wave phase shifts only."""
    if not operators:
        raise FormatError('Refusing to write an empty S-operator file.')
    l_max = operators[0].l_max
    records = []
    for op in operators:
        if compact:
            if op.spectrum is None:
                raise FormatError(f'The S-operator at k={op.k} carries no phase shifts for the compact form.')
            records.append({'k': op.k, 'phase_shifts': op.spectrum.eta.tolist()})
        else:
            flat = op.matrix.ravel()
            records.append({'k': op.k, 'matrix': [[val.real, val.imag] for val in flat.tolist()]})
    document = {'l_max': l_max, 'k_count': len(operators), 'unitarity_tol': unitarity_tol,
                'basis': BASIS_NAME, 'records': records}
    with open(path, 'w') as f:
        json.dump(document, f, indent=1)
        f.write('\n')

def load_soperator(path, k_key='k', unitarity_tol=None):
    """Read, validate and branch-track S-operators written by ``save_soperator``."""
    try:
        with open(path) as f:
            document = json.load(f)
    except json.JSONDecodeError as error:
        raise FormatError(f'{path} is not valid JSON: {error}')
    for key in ('l_max', 'k_count', 'records'):
        if key not in document:
            raise FormatError(f'{path} lacks the header field {key!r}.')
    if document.get('basis', BASIS_NAME) != BASIS_NAME:
        raise FormatError(f'{path} uses basis {document["basis"]!r}; only {BASIS_NAME!r} is supported.')
    l_max, records = int(document['l_max']), document['records']
    if len(records) != document['k_count']:
        raise FormatError(f'{path} declares {document["k_count"]} records but holds {len(records)}.')
    tol = unitarity_tol if unitarity_tol is not None else document.get('unitarity_tol', 1e-6)

    operators = [_operator_from_record(record, l_max, k_key, path) for record in records]
    ks = np.array([op.k for op in operators])
    if np.any(np.diff(ks) <= 0):
        idx = int(np.argmax(np.diff(ks) <= 0))
        raise GridError(f'{path}: k is not strictly increasing at record {idx + 1} (k={ks[idx + 1]!r}).')
    defects = np.array([op.unitarity_defect for op in operators])
    if np.any(defects > tol):
        worst = int(np.argmax(defects))
        raise UnitarityError(f'{path}: S(k) deviates from unitarity by {defects[worst]:.3g} at k={ks[worst]:.6g} '
                             f'(tolerance {tol}).')
    if all(op.eigenphases is not None for op in operators):
        return operators
    return track_eigenphases(operators)

def _operator_from_record(record, l_max, k_key, path):
    if k_key not in record:
        raise FormatError(f'{path}: a record lacks the wavenumber field {k_key!r}.')
    k = float(record[k_key])
    if 'phase_shifts' in record:
        eta = record['phase_shifts']
        if len(eta) != l_max + 1:
            raise FormatError(f'{path}: record at k={k} has {len(eta)} phase shifts; expected {l_max + 1}.')
        return soperator_from_spectrum(PhaseShiftSpectrum.partial_waves(k, eta))
    if 'matrix' not in record:
        raise FormatError(f'{path}: record at k={k} has neither "matrix" nor "phase_shifts".')
    try:
        pairs = np.asarray(record['matrix'], dtype=float)
    except (TypeError, ValueError):
        raise FormatError(f'{path}: matrix at k={k} is not a list of [re, im] pairs.')
    dim = (l_max + 1)**2
    if pairs.shape != (dim*dim, 2):
        raise FormatError(f'{path}: matrix at k={k} has {pairs.shape[0]} entries; expected {dim*dim}.')
    return SOperator(k, (pairs[:, 0] + 1j*pairs[:, 1]).reshape(dim, dim), l_max)
