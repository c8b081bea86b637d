"""Batch front end: ``scatter-trace <task> --config run.json [--out DIR] [--emit-integrand]``.

Each task writes its data files into the output directory (CSV for curves,
JSON for structured results) and prints a one-line summary. The process
status is 0 on success and the ``exit_code`` of the raised error otherwise.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

import numpy as np
from scipy.special import gamma as scipy_gamma

from . import boxsim, scatter1d, scatter3d, trace1d, trace3d
from ._parallel import thread_map
from .config import TASKS, load_config
from .errors import NUMERICAL_EXIT, ConfigError, ScatterTraceError, ValidationMismatch
from .potentials import volume_integral
from .pvmath import euler_constant, gamma_regularized
from .tabulation import Tabulation

logger = logging.getLogger(__name__)


def _parse_args(argv):
    parser = argparse.ArgumentParser(prog='scatter-trace',
                                     description='Trace formulas and Casimir energies from scattering data.')
    parser.add_argument('task', choices=TASKS, help='Computation to run.')
    parser.add_argument('--config', required=True, help='JSON run configuration.')
    parser.add_argument('--out', default=None, help='Output directory (overrides io.output_dir).')
    parser.add_argument('--emit-integrand', action='store_true',
                        help='Also write the density of states rho(k) as CSV.')
    parser.add_argument('-v', '--verbose', action='count', default=0, help='Increase verbosity (-v, -vv).')
    return parser.parse_args(argv)

def _configure_logging(verbose):
    level = max(logging.WARNING - 10*verbose, logging.DEBUG)
    logging.basicConfig(level=level, stream=sys.stderr, format='%(levelname)s %(name)s: %(message)s')
    logging.captureWarnings(True)

def main(argv=None):
    args = _parse_args(argv)
    _configure_logging(args.verbose)
    sys.exit(run(args.task, args.config, out=args.out, emit_integrand=args.emit_integrand))

def run(task, config_path, out=None, emit_integrand=False):
    """Execute one task; returns the process status."""
    try:
        config = load_config(config_path, task=task)
        out_dir = out if out is not None else config.output_dir
        os.makedirs(out_dir, exist_ok=True)
        summary = TASK_RUNNERS[task](config, out_dir, emit_integrand)
    except ScatterTraceError as error:
        logger.error('%s failed: %s', task, error)
        print(f'{task}: {type(error).__name__}: {error}', file=sys.stderr)
        return error.exit_code
    except Exception as error:
        logger.exception('%s failed unexpectedly', task)
        print(f'{task}: unexpected {type(error).__name__}: {error}', file=sys.stderr)
        return NUMERICAL_EXIT
    print(summary)
    return 0


#
#   Output Methods
#

def _write_json(path, document):
    with open(path, 'w') as f:
        json.dump(document, f, indent=1, sort_keys=True, allow_nan=True)
        f.write('\n')
    logger.info('Wrote %s', path)

def _write_table(path, table):
    table.to_csv(path)
    logger.info('Wrote %s', path)

def _summary(task, value, error):
    return f'{task}: total={value:.12g} error_estimate={error:.3g}'

def _emit_dos(out_dir, k, arg_det):
    _write_table(os.path.join(out_dir, 'density_of_states.csv'), trace1d.phase_density(k, arg_det))


#
#   Task Methods
#

def _scatter_data(config):
    path = config.input_path('scatter1d')
    if path:
        return scatter1d.load_scatter1d(path, config.tolerances['unitarity'])
    return scatter1d.solve_grid(config.potential, config.kgrid.values, tol=config.tolerances['solver'])

def _run_scatter1d(config, out_dir, emit_integrand):
    data = _scatter_data(config)
    scatter1d.save_scatter1d(os.path.join(out_dir, 'scatter1d.csv'), data)
    if emit_integrand:
        table = trace1d.density_of_states(data)
        _write_table(os.path.join(out_dir, 'density_of_states.csv'), table)
    defect = max(rec.unitarity_defect for rec in data)
    return f'scatter1d: {len(data)} wavenumbers, max unitarity defect {defect:.3g}'

def _singularities(config):
    # Data read from file carries no model, hence no analytic structure
    if config.potential is None:
        return None
    return scatter1d.transmission_singularities(config.potential)

def _run_trace1d(config, out_dir, emit_integrand):
    data = _scatter_data(config)
    tail_tol = config.tolerances['tail']
    if config.route == 'direct':
        result = trace1d.trace_direct(data, config.phi, tail_tol=tail_tol, emit_integrand=emit_integrand)
    elif config.route == 'reflection':
        result = trace1d.trace_reflection(data, config.phi, outer_order=4*config.refine, tail_tol=tail_tol,
                                          singularities=_singularities(config))
    else:
        result = trace1d.multiple_reflection(data, config.phi, outer_order=4*config.refine,
                                             singularities=_singularities(config))
    _write_json(os.path.join(out_dir, 'trace1d.json'), {'route': config.route, **result.to_dict()})
    if emit_integrand:
        table = trace1d.density_of_states(data)
        _write_table(os.path.join(out_dir, 'density_of_states.csv'), table)
    return _summary(f'trace1d[{config.route}]', result.value, result.quadrature_error)

def _run_casimir1d(config, out_dir, emit_integrand):
    data = _scatter_data(config)
    result = trace1d.casimir_energy_1d(data, order=8*config.refine, singularities=_singularities(config))
    _write_json(os.path.join(out_dir, 'casimir1d.json'), result.to_dict())
    if emit_integrand:
        _write_table(os.path.join(out_dir, 'density_of_states.csv'), trace1d.density_of_states(data))
    return _summary('casimir1d', result.value, result.quadrature_error)

def _spectra(config):
    model, kgrid, tol = config.potential, config.kgrid.values, config.tolerances['solver']
    # One l_max for the whole grid, fixed by the largest wavenumber:
    l_max = scatter3d.phase_shifts(model, kgrid[-1], tol=tol).l_max
    return thread_map(lambda k: scatter3d.phase_shifts(model, k, l_max=l_max, tol=tol), kgrid)

def _run_scatter3d(config, out_dir, emit_integrand):
    spectra = _spectra(config)
    operators = [scatter3d.soperator_from_spectrum(spectrum) for spectrum in spectra]
    scatter3d.save_soperator(os.path.join(out_dir, 'soperator.json'), operators,
                             compact=config.io.get('compact', True), unitarity_tol=config.tolerances['unitarity'])
    born = [volume_integral(config.potential, k) for k in config.kgrid.values]
    inputs = trace3d.DispersionInputs.build(spectra, born)
    _write_table(os.path.join(out_dir, 'dispersion_inputs.csv'), inputs)
    if emit_integrand:
        _emit_dos(out_dir, inputs.abscissa, inputs['arg_det_s'])
    flagged = sum(scatter3d.det1_bound_report(spectrum)['violated'] for spectrum in spectra)
    return (f'scatter3d: {len(spectra)} wavenumbers, l_max={spectra[0].l_max}, '
            f'det_1 bound violated at {flagged} of them')

def _dispersion_inputs(config):
    if config.potential is not None:
        return trace3d.dispersion_inputs(config.potential, config.kgrid.values, config.tolerances['solver'])
    operators = scatter3d.load_soperator(config.input_path('soperator'),
                                         unitarity_tol=config.tolerances['unitarity'])
    born = Tabulation.from_csv(config.input_path('born'), required=('born_integral',))
    k = np.array([op.k for op in operators])
    if k[0] < born.abscissa[0] or k[-1] > born.abscissa[-1]:
        raise ConfigError(f'io.inputs.born covers k in [{born.abscissa[0]}, {born.abscissa[-1]}], '
                          f'short of the S-operator grid [{k[0]}, {k[-1]}].')
    return trace3d.dispersion_inputs_from_soperators(operators, born.interpolate('born_integral', k))

def _run_casimir3d(config, out_dir, emit_integrand):
    inputs = _dispersion_inputs(config)
    result = trace3d.casimir_energy_3d(inputs, order=8*config.refine)
    document = {'total': result.value, **result.breakdown,
                'det1_bound': result.diagnostics['det1_bound'],
                'bound_violated': result.diagnostics['bound_violated'],
                'weak_coupling_flag': result.diagnostics['weak_coupling_flag'],
                'error_estimate': result.quadrature_error}
    _write_json(os.path.join(out_dir, 'casimir3d.json'), document)
    _write_table(os.path.join(out_dir, 'dispersion_inputs.csv'), inputs)
    if emit_integrand and 'arg_det_s' in inputs:
        _emit_dos(out_dir, inputs.abscissa, inputs['arg_det_s'])
    return _summary('casimir3d', result.value, result.quadrature_error)

def _run_validate(config, out_dir, emit_integrand):
    box, tol = config.box, config.tolerances
    if box['dimension'] == 1:
        data = _scatter_data(config)
        direct = trace1d.trace_direct(data, config.phi, tail_tol=tol['tail'])
        oracle = boxsim.mode_sum(config.potential, config.phi, box['Ls'], n_max=box['n_max'],
                                 method=box['method'], tol=tol['box'])
    else:
        direct = trace3d.trace_direct_3d(_spectra(config), config.phi, tail_tol=tol['tail'])
        oracle = boxsim.radial_mode_sum(config.potential, config.phi, box['R_values'], l_max=box['l_max'],
                                        n_max=box['n_max'], method=box['method'], tol=tol['box'])
    # The extrapolated sum goes in as the L=inf row:
    table = Tabulation({'L': np.append(oracle.integrand.abscissa, np.inf),
                        'mode_sum': np.append(oracle.integrand['mode_sum'], oracle.value)}, abscissa='L')
    gaps = np.abs(table - direct.value)/max(abs(direct.value), 1e-300)
    table['trace_direct'] = np.full(table.count, direct.value)
    table['relative_gap'] = gaps['mode_sum']
    _write_table(os.path.join(out_dir, 'validate.csv'), table)
    gap = float(table['relative_gap'][-1])
    if gap > tol['gap']:
        raise ValidationMismatch(f'Extrapolated mode sum {oracle.value:.12g} and direct trace {direct.value:.12g} '
                                 f'differ by {gap:.3g} relative (threshold {tol["gap"]}).')
    return f'validate: direct={direct.value:.12g} mode_sum={oracle.value:.12g} relative_gap={gap:.3g}'

def _run_gamma_demo(config, out_dir, emit_integrand):
    z = np.array(config.gamma['z'])
    N = config.gamma['N']
    regularized = np.array([gamma_regularized(val, N=N).real for val in z])
    reference = scipy_gamma(z)
    table = Tabulation({'z': z, 'gamma_regularized': regularized, 'gamma_reference': reference,
                        'relative_error': np.abs(regularized/reference - 1.0)}, abscissa='z')
    _write_table(os.path.join(out_dir, 'gamma_demo.csv'), table)
    euler = euler_constant(N)
    _write_json(os.path.join(out_dir, 'gamma_demo.json'),
                {'euler_constant': euler, 'euler_error': abs(euler - np.euler_gamma),
                 'max_relative_error': float(np.max(table['relative_error']))})
    return f'gamma-demo: euler_constant={euler:.15g} max_relative_error={np.max(table["relative_error"]):.3g}'


TASK_RUNNERS = {
    'scatter1d': _run_scatter1d,
    'trace1d': _run_trace1d,
    'casimir1d': _run_casimir1d,
    'scatter3d': _run_scatter3d,
    'casimir3d': _run_casimir3d,
    'validate': _run_validate,
    'gamma-demo': _run_gamma_demo,
}
