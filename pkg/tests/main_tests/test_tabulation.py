import pytest
import numpy as np
from scatter_trace._columns import Columns
from scatter_trace.errors import FormatError, GridError
from . import utils

class TabulationMixin:

    container_class = None

    def make_table(self, names=('a', 'b'), count=5, seed=42):
        rng = np.random.default_rng(seed)
        columns = {'k': np.linspace(0.5, 2.5, count)}
        columns.update({name: 10*rng.random(count) for name in names})
        return self.container_class(columns)

    NP_FUNC_TEST_CASES = {'exp': np.exp, 'cos': np.cos, 'floor': np.floor, 'log': np.log, 'sqrt': np.sqrt}
    @pytest.mark.parametrize('np_func', NP_FUNC_TEST_CASES.values(), ids=NP_FUNC_TEST_CASES.keys())
    def test_np_func(self, np_func):
        table = self.make_table()
        result = np_func(table)
        assert type(result) == self.container_class
        assert np.array_equal(result.abscissa, table.abscissa)
        for name in ('a', 'b'):
            assert np.allclose(result[name], np_func(table[name]))

    UFUNC_TEST_CASES = {'addition': lambda x, y: x + y, 'subtraction': lambda x, y: x - y,
                        'multiplication': lambda x, y: x*y, 'division': lambda x, y: x/y,
                        'exponent': lambda x, y: x**y, 'less_than': lambda x, y: x < y}
    @pytest.mark.parametrize('ufunc', UFUNC_TEST_CASES.values(), ids=UFUNC_TEST_CASES.keys())
    @pytest.mark.parametrize('scalar', [2, 2.0], ids=['int', 'float'])
    def test_ufunc_scalar(self, scalar, ufunc):
        table = self.make_table()
        # Tables must work on either side of the operator:
        for func_i in (lambda x: ufunc(x, scalar), lambda x: ufunc(scalar, x)):
            result = func_i(table)
            assert np.array_equal(result.abscissa, table.abscissa)
            for name in ('a', 'b'):
                assert np.allclose(result[name], func_i(table[name]))

    TABLE_PAIR_TEST_CASES = {'shared_grid': (5, ('a', 'b'), None),
                             'shared_subset': (5, ('a',), None),
                             'other_length': (6, ('a', 'b'), ValueError)}
    @pytest.mark.parametrize('count, names, exception', TABLE_PAIR_TEST_CASES.values(),
                                                        ids=TABLE_PAIR_TEST_CASES.keys())
    def test_ufunc_tables(self, count, names, exception):
        table_1 = self.make_table()
        table_2 = self.make_table(names=names, count=count, seed=1)
        if exception is None:
            result = table_1 + table_2
            assert result.list_keys() == ['k', *names]
            for name in names:
                assert np.allclose(result[name], table_1[name] + table_2[name])
        else:
            self.assert_exception(lambda x, y: x + y, exception, table_1, table_2)

    def test_reductions_give_one_value_per_column(self):
        table = self.make_table()
        result = np.max(table)
        assert set(result) == {'a', 'b'}
        assert result['a'] == np.max(table['a'])

    INDEX_TEST_CASES = {'mask': (np.array([True, False, True, False, True]), 3, None),
                        'slice': (slice(1, 4), 3, None),
                        'list': ([0, 4], 2, None),
                        'integer': (2, None, None),
                        'name': ('a', None, None),
                        'missing_name': ('z', None, KeyError)}
    @pytest.mark.parametrize('key, count, exception', INDEX_TEST_CASES.values(), ids=INDEX_TEST_CASES.keys())
    def test_indexing(self, key, count, exception):
        table = self.make_table()
        if exception is not None:
            self.assert_exception(lambda x: x[key], exception, table)
        elif count is not None:
            result = table[key]
            assert type(result) == self.container_class
            assert result.count == count
            assert np.array_equal(result['a'], table['a'][key])
        elif isinstance(key, str):
            assert np.array_equal(table[key], table._columns[key])
        else:
            assert table[key]['a'] == table['a'][key]

    SET_TEST_CASES = {'new_column': ('c', np.ones(5), None),
                      'replace_column': ('a', np.zeros(5), None),
                      'wrong_length': ('c', np.ones(4), ValueError),
                      'bad_name': ('c,d', np.ones(5), KeyError)}
    @pytest.mark.parametrize('name, value, exception', SET_TEST_CASES.values(), ids=SET_TEST_CASES.keys())
    def test_setting(self, name, value, exception):
        table = self.make_table()
        if exception is None:
            table[name] = value
            assert np.array_equal(table[name], value)
        else:
            self.assert_exception(table.__setitem__, exception, name, value)

    def test_independence(self):
        columns = {'k': np.arange(1.0, 4.0), 'a': np.zeros(3)}
        table = self.container_class(columns)
        columns['a'][0] = 5.0
        assert table['a'][0] == 0.0

    def test_gradient_acts_per_column(self):
        table = self.make_table(count=9)
        result = np.gradient(table, table.abscissa, edge_order=2)
        assert type(result) == self.container_class
        for name in ('a', 'b'):
            assert np.allclose(result[name], np.gradient(table[name], table.abscissa, edge_order=2))

    def test_functions_of_two_tables(self):
        table = self.make_table()
        result = np.hypot(table, 2*table)
        assert np.allclose(result['a'], np.sqrt(5)*table['a'])

    def test_interpolate_reproduces_cubic(self):
        k = np.linspace(0.0, 2.0, 21)
        table = self.container_class({'k': k, 'a': k**3 - k})
        assert np.allclose(table.interpolate('a', [0.55, 1.33]), np.array([0.55, 1.33])**3 - [0.55, 1.33],
                           atol=1e-3)

    def test_csv_round_trip(self, tmp_path):
        table = self.make_table(names=('a', 'b', 'c'))
        path = tmp_path/'table.csv'
        table.to_csv(path)
        reloaded = self.container_class.from_csv(path)
        utils.assert_tables_equal(table, reloaded)
        # 17 significant digits reproduce every float exactly:
        for name in table.keys():
            assert np.array_equal(table[name], reloaded[name])

    CSV_ERROR_TEST_CASES = {'missing_column': ('k,a\n1,2\n2,3\n', ('b',), FormatError),
                            'not_numeric': ('k,a\n1,x\n', (), FormatError),
                            'decreasing': ('k,a\n2,1\n1,2\n', (), GridError),
                            'empty': ('', (), FormatError)}
    @pytest.mark.parametrize('text, required, exception', CSV_ERROR_TEST_CASES.values(),
                                                          ids=CSV_ERROR_TEST_CASES.keys())
    def test_csv_errors(self, tmp_path, text, required, exception):
        path = tmp_path/'bad.csv'
        path.write_text(text)
        self.assert_exception(self.container_class.from_csv, exception, path, required=required)

    def test_complex_column_refused_by_csv(self, tmp_path):
        table = self.container_class({'k': np.arange(1.0, 3.0), 'T': np.array([1 + 1j, 2 - 1j])})
        self.assert_exception(table.to_csv, TypeError, tmp_path/'complex.csv')

    def test_abscissa_required(self):
        self.assert_exception(self.container_class, KeyError, {'a': np.zeros(3)})

    def test_direct_column_store_warns(self):
        with pytest.warns(UserWarning):
            Columns({'a': np.zeros(2)})
