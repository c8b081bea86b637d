"""Run configuration: a JSON document parsed into a frozen ``RunConfig``.

Every problem is raised as ``ConfigError`` naming the offending field path,
before any computation starts.
"""

from __future__ import annotations

import json
import logging
import math
import numbers
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .potentials import model_from_dict
from .trace1d import WeightFunction

logger = logging.getLogger(__name__)

TASKS = ('scatter1d', 'trace1d', 'casimir1d', 'scatter3d', 'casimir3d', 'validate', 'gamma-demo')
ROUTES = ('direct', 'reflection', 'multiple_reflection')
SPACINGS = ('linear', 'log')
INPUT_KEYS = ('scatter1d', 'soperator', 'born')

DEFAULT_TOLERANCES = {'solver': 1e-10, 'pv': 1e-8, 'unitarity': 1e-6, 'gap': 0.01, 'tail': 1e-8, 'box': 1e-6}
DEFAULT_BOX = {'Ls': (50.0, 100.0, 200.0), 'n_max': None, 'R_values': (20.0, 30.0, 40.0), 'l_max': None,
               'method': 'matrix_fd', 'dimension': 1}
DEFAULT_GAMMA = {'z': (0.5, 1.5, 2.5), 'N': 1000}


@dataclass(frozen=True)
class KGrid:
    k_min: float = 0.05
    k_max: float = 50.0
    count: int = 200
    spacing: str = 'log'

    @property
    def values(self):
        if self.spacing == 'log':
            return np.geomspace(self.k_min, self.k_max, self.count)
        return np.linspace(self.k_min, self.k_max, self.count)


@dataclass(frozen=True)
class RunConfig:
    task: str
    potential: object = None
    phi: WeightFunction | None = None
    kgrid: KGrid = field(default_factory=KGrid)
    route: str = 'direct'
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    box: dict = field(default_factory=lambda: dict(DEFAULT_BOX))
    io: dict = field(default_factory=dict)
    gamma: dict = field(default_factory=lambda: dict(DEFAULT_GAMMA))
    refine: int = 1

    def input_path(self, name):
        return self.io.get('inputs', {}).get(name)

    @property
    def output_dir(self):
        return self.io.get('output_dir', '.')


def load_config(path, task=None, base_dir=None):
    """Parse and validate the JSON configuration at ``path``."""
    try:
        with open(path) as f:
            document = json.load(f)
    except FileNotFoundError:
        raise ConfigError(f'Configuration file {path} does not exist.')
    except json.JSONDecodeError as error:
        raise ConfigError(f'{path} is not valid JSON: {error}')
    base_dir = base_dir if base_dir is not None else os.path.dirname(os.path.abspath(path))
    config = config_from_dict(document, base_dir, task)
    logger.info('Loaded %s configuration from %s', config.task, path)
    return config

def config_from_dict(document, base_dir='.', task=None):
    if not isinstance(document, dict):
        raise ConfigError('The configuration must be a JSON object.')
    if task is not None:
        if document.get('task', task) != task:
            raise ConfigError(f'task={document["task"]!r} in the configuration contradicts the {task} subcommand.')
        document = {**document, 'task': task}
    unknown = set(document) - {'task', 'potential', 'phi', 'kgrid', 'route', 'tolerances', 'box', 'io',
                               'gamma', 'refine'}
    if unknown:
        raise ConfigError(f'Unknown configuration field(s) {sorted(unknown)}.')
    task = document.get('task')
    if task not in TASKS:
        raise ConfigError(f'task={task!r} is not one of {list(TASKS)}.')

    potential = None
    if document.get('potential') is not None:
        potential = model_from_dict(document['potential'], 'potential')
    phi = None
    if document.get('phi') is not None:
        phi = WeightFunction.from_dict(document['phi'], 'phi')
    route = document.get('route', 'direct')
    if route not in ROUTES:
        raise ConfigError(f'route={route!r} is not one of {list(ROUTES)}.')

    io = _parse_io(document.get('io', {}), base_dir)
    config = RunConfig(task=task, potential=potential, phi=phi,
                       kgrid=_parse_kgrid(document.get('kgrid', {}), potential),
                       route=route,
                       tolerances=_parse_numbers(document.get('tolerances', {}), DEFAULT_TOLERANCES, 'tolerances'),
                       box=_parse_box(document.get('box', {})),
                       io=io,
                       gamma=_parse_gamma(document.get('gamma', {})),
                       refine=_integer(document.get('refine', 1), 'refine', minimum=1))
    _check_task_inputs(config)
    return config


#
#   Field Parsers
#

def _number(value, where, positive=False):
    if isinstance(value, bool) or not isinstance(value, numbers.Real) or not math.isfinite(value):
        raise ConfigError(f'{where} must be a finite number; received {value!r}.')
    if positive and value <= 0:
        raise ConfigError(f'{where} must be positive; received {value!r}.')
    return float(value)

def _integer(value, where, minimum=None):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise ConfigError(f'{where} must be an integer; received {value!r}.')
    if minimum is not None and value < minimum:
        raise ConfigError(f'{where} must be at least {minimum}; received {value!r}.')
    return int(value)

def _object(value, where):
    if not isinstance(value, dict):
        raise ConfigError(f'{where} must be an object; received {type(value).__name__}.')
    return value

def _parse_kgrid(spec, potential):
    spec = _object(spec, 'kgrid')
    default_max = KGrid.k_max
    if potential is not None and potential.dispersive:
        default_max = 10*potential.dispersion.k_c
    k_min = _number(spec.get('k_min', KGrid.k_min), 'kgrid.k_min', positive=True)
    k_max = _number(spec.get('k_max', default_max), 'kgrid.k_max', positive=True)
    if not k_min < k_max:
        raise ConfigError(f'kgrid.k_min={k_min} must be below kgrid.k_max={k_max}.')
    count = _integer(spec.get('count', KGrid.count), 'kgrid.count', minimum=16)
    spacing = spec.get('spacing', KGrid.spacing)
    if spacing not in SPACINGS:
        raise ConfigError(f'kgrid.spacing={spacing!r} is not one of {list(SPACINGS)}.')
    return KGrid(k_min, k_max, count, spacing)

def _parse_numbers(spec, defaults, where):
    spec = _object(spec, where)
    unknown = set(spec) - set(defaults)
    if unknown:
        raise ConfigError(f'Unknown {where} field(s) {sorted(unknown)}; valid fields are {sorted(defaults)}.')
    return {**defaults, **{name: _number(val, f'{where}.{name}', positive=True) for name, val in spec.items()}}

def _sequence(value, where):
    if not isinstance(value, (list, tuple)) or not value:
        raise ConfigError(f'{where} must be a non-empty array.')
    return tuple(_number(val, f'{where}[{idx}]', positive=True) for idx, val in enumerate(value))

def _parse_box(spec):
    spec = _object(spec, 'box')
    box = dict(DEFAULT_BOX)
    for name in ('Ls', 'R_values'):
        if name in spec:
            values = _sequence(spec[name], f'box.{name}')
            if len(values) < 3 or any(b <= a for a, b in zip(values, values[1:])):
                raise ConfigError(f'box.{name} needs at least 3 increasing lengths; received {list(values)}.')
            box[name] = values
    for name in ('n_max', 'l_max'):
        if spec.get(name) is not None:
            box[name] = _integer(spec[name], f'box.{name}', minimum=0 if name == 'l_max' else 1)
    if 'method' in spec:
        if spec['method'] not in ('matrix_fd', 'shooting'):
            raise ConfigError(f"box.method={spec['method']!r} is not one of ['matrix_fd', 'shooting'].")
        box['method'] = spec['method']
    if 'dimension' in spec:
        if spec['dimension'] not in (1, 3):
            raise ConfigError(f"box.dimension must be 1 or 3; received {spec['dimension']!r}.")
        box['dimension'] = spec['dimension']
    return box

def _parse_gamma(spec):
    spec = _object(spec, 'gamma')
    gamma = dict(DEFAULT_GAMMA)
    if 'z' in spec:
        if not isinstance(spec['z'], (list, tuple)) or not spec['z']:
            raise ConfigError('gamma.z must be a non-empty array.')
        gamma['z'] = tuple(_number(val, f'gamma.z[{idx}]') for idx, val in enumerate(spec['z']))
    if 'N' in spec:
        gamma['N'] = _integer(spec['N'], 'gamma.N', minimum=10)
    return gamma

def _parse_io(spec, base_dir):
    spec = _object(spec, 'io')
    inputs = _object(spec.get('inputs', {}), 'io.inputs')
    resolved = {}
    for name, value in inputs.items():
        if name not in INPUT_KEYS:
            raise ConfigError(f'io.inputs.{name} is not one of {list(INPUT_KEYS)}.')
        if not isinstance(value, str):
            raise ConfigError(f'io.inputs.{name} must be a file path.')
        path = value if os.path.isabs(value) else os.path.join(base_dir, value)
        if not os.path.isfile(path):
            raise ConfigError(f'io.inputs.{name}: {path} does not exist.')
        resolved[name] = path
    io = {'inputs': resolved}
    if 'output_dir' in spec:
        if not isinstance(spec['output_dir'], str):
            raise ConfigError('io.output_dir must be a directory path.')
        io['output_dir'] = spec['output_dir']
    if 'compact' in spec:
        io['compact'] = bool(spec['compact'])
    return io

def _check_task_inputs(config):
    task = config.task
    if task in ('scatter1d', 'scatter3d', 'validate') and config.potential is None:
        raise ConfigError(f'task {task} needs a potential.')
    if task in ('trace1d', 'casimir1d') and config.potential is None and not config.input_path('scatter1d'):
        raise ConfigError(f'task {task} needs a potential or io.inputs.scatter1d.')
    if task == 'casimir3d' and config.potential is None:
        if not config.input_path('soperator') or not config.input_path('born'):
            raise ConfigError('task casimir3d needs a potential or both io.inputs.soperator and io.inputs.born.')
    if task in ('trace1d', 'validate') and config.phi is None:
        raise ConfigError(f'task {task} needs a weight function phi.')
