import csv
import numbers
import numpy as np
import more_itertools
from scipy.interpolate import CubicSpline

from ._columns import Columns
from .errors import FormatError, GridError

class Tabulation(Columns, np.lib.mixins.NDArrayOperatorsMixin):
    """Per-k table: named 1-D columns sharing one abscissa column.

    Numpy functions and operators act column-wise and carry the abscissa
    through untouched, so ``np.abs(tab)`` or ``2*tab`` are again tables on
    the same grid. Indexing with a string returns a column; indexing with a
    mask, slice or integer array selects rows of every column.
    """

    _arrays = (np.ndarray,)
    _float_format = '.17g'

    #
    #   Constructor Methods
    #

    def __init__(self, columns, abscissa='k', convert_arrays=True):
        self._abscissa = abscissa
        super().__init__(columns)
        if convert_arrays:
            self._columns = {name: self._convert_to_array(val) for name, val in self._columns.items()}
        if self._abscissa not in self._columns:
            raise KeyError(f'{self.__class__.__name__} requires an abscissa column {self._abscissa!r}; '
                           f'received columns {tuple(self.keys())}.')
        if not self._all_arrays_of_equal_shape(list(self.values())):
            lengths = {name: val.shape for name, val in self.items()}
            raise ValueError(f'All columns of a {self.__class__.__name__} must have the same length; '
                             f'received shapes {lengths}.')

    @classmethod
    def from_array(cls, array, names, abscissa='k'):
        array = np.asarray(array)
        if array.ndim != 2 or array.shape[1] != len(names):
            raise ValueError(f'Array of shape {array.shape} cannot be split into the {len(names)} '
                             f'columns {tuple(names)}.')
        return cls({name: array[:, idx] for idx, name in enumerate(names)}, abscissa=abscissa)

    @staticmethod
    def _convert_to_array(val):
        return np.atleast_1d(np.array(val))

    @staticmethod
    def _all_arrays_of_equal_shape(converted_list):
        # Converted list could be empty:
        if converted_list:
            first_array_shape = converted_list[0].shape
            all_equal = all(array_i.shape == first_array_shape for array_i in converted_list)
        else:
            all_equal = True
        return all_equal

    def _new_like(self, columns):
        return self.__class__(columns, abscissa=self._abscissa)

    #
    #   Getter Methods
    #

    def __getitem__(self, key):
        if isinstance(key, (*self._arrays, list)) or self._is_slice(key):
            item = self._get_with_array(key)
        elif isinstance(key, numbers.Integral):
            item = {name: val[key] for name, val in self.items()}
        else:
            item = super().__getitem__(key)
        return item

    def _get_with_array(self, array_key):
        if isinstance(array_key, list):
            array_key = np.asarray(array_key)
        item = {name: np.atleast_1d(self._columns[name][array_key]) for name in self.keys()}
        return self._new_like(item)

    @staticmethod
    def _is_slice(val):
        return isinstance(val, slice)

    @property
    def abscissa(self):
        return self._columns[self._abscissa]

    @property
    def abscissa_name(self):
        return self._abscissa

    @property
    def count(self):
        return self.abscissa.size

    def interpolate(self, name, k, nu=0):
        """Cubic-spline value (or ``nu``-th derivative) of a column at ``k``."""
        column = self[name]
        if np.iscomplexobj(column):
            return (CubicSpline(self.abscissa, column.real)(k, nu)
                    + 1j*CubicSpline(self.abscissa, column.imag)(k, nu))
        return CubicSpline(self.abscissa, column)(k, nu)

    def check_abscissa(self):
        """Raise ``GridError`` unless the abscissa is finite and strictly increasing."""
        grid = self.abscissa
        if not np.all(np.isfinite(grid)):
            raise GridError(f'Abscissa {self._abscissa!r} contains non-finite values.')
        for idx, (lo, hi) in enumerate(more_itertools.pairwise(grid)):
            if not hi > lo:
                raise GridError(f'Abscissa {self._abscissa!r} is not strictly increasing at row {idx + 1} '
                                f'({lo!r} followed by {hi!r}).')

    #
    #   Setter Methods
    #

    def __setitem__(self, name, new_value):
        new_value = self._convert_to_array(new_value)
        if self._columns and new_value.shape != (self.count,):
            raise ValueError(f'Column {name!r} has shape {new_value.shape}; this '
                             f'{self.__class__.__name__} holds {self.count} rows.')
        super().__setitem__(name, new_value)

    #
    #   CSV Methods
    #

    def to_csv(self, path):
        for name, val in self.items():
            if np.iscomplexobj(val):
                raise TypeError(f'Column {name!r} is complex; split it into real and imaginary '
                                'columns before writing CSV.')
        with open(path, 'w', newline='') as f:
            writer = csv.writer(f, lineterminator='\n')
            writer.writerow(self.list_keys())
            for row in zip(*self.values()):
                writer.writerow([format(float(val), self._float_format) for val in row])

    @classmethod
    def from_csv(cls, path, abscissa='k', required=()):
        with open(path, newline='') as f:
            reader = csv.reader(f)
            try:
                header = next(reader)
            except StopIteration:
                raise FormatError(f'{path} is empty; expected a CSV header row.')
            rows = [row for row in reader if row]
        missing = [name for name in (abscissa, *required) if name not in header]
        if missing:
            raise FormatError(f'{path} lacks the column(s) {missing}; found {header}.')
        try:
            values = np.array([[float(val) for val in row] for row in rows], dtype=float)
        except ValueError as error:
            raise FormatError(f'{path} contains a non-numeric entry: {error}.')
        if values.ndim != 2 or values.shape[1] != len(header):
            raise FormatError(f'{path}: every row must have {len(header)} fields.')
        table = cls.from_array(values, header, abscissa=abscissa)
        table.check_abscissa()
        return table

    #
    #   Column-wise Numpy Methods
    #

    def __array_ufunc__(self, ufunc, method, *inputs, **kwargs):
        if method != '__call__' or kwargs.get('out') is not None:
            return NotImplemented
        return self._columnwise(ufunc, inputs, kwargs)

    def __array_function__(self, func, types, args, kwargs):
        return self._columnwise(func, args, kwargs)

    def _columnwise(self, func, args, kwargs):
        """Call ``func`` once per data column, with every table argument replaced by that column.

        Results of one value per row come back as a table on this abscissa; reductions
        come back as a dict of per-column results.
        """
        tables = list(_tables_in((args, kwargs)))
        for table in tables:
            if table.count != self.count or not np.array_equal(table.abscissa, self.abscissa):
                raise ValueError(f'Tabulations combined through numpy must share one abscissa; received '
                                 f'grids of {table.count} and {self.count} rows.')
        names = [name for name in self.keys() if name != self._abscissa and all(name in t for t in tables)]
        results = {name: func(*_column_of(args, name), **_column_of(kwargs, name)) for name in names}
        if any(np.shape(val) != (self.count,) for val in results.values()):
            return results
        return self._new_like({self._abscissa: self.abscissa.copy(), **results})

def _tables_in(arg):
    # Tables may sit inside argument lists, e.g. np.stack((tab_1, tab_2)):
    if isinstance(arg, Tabulation):
        yield arg
    elif isinstance(arg, dict):
        for val in arg.values():
            yield from _tables_in(val)
    elif isinstance(arg, (list, tuple)):
        for val in arg:
            yield from _tables_in(val)

def _column_of(arg, name):
    if isinstance(arg, Tabulation):
        return arg[name]
    if isinstance(arg, dict):
        return {key: _column_of(val, name) for key, val in arg.items()}
    if isinstance(arg, (list, tuple)):
        return type(arg)(_column_of(val, name) for val in arg)
    return arg
