import warnings
import copy
import more_itertools

class Columns:

    #
    #   Constructor Methods
    #

    def __new__(cls, *args, **kwargs):
        if cls is Columns:
            warnings.warn(f'Direct creation of {cls.__name__} class is not supported. '
                          'To avoid unexpected behaviour, create a Tabulation object instead.')
        return object.__new__(cls)

    def __init__(self, columns):
        self._columns = self._preprocess_columns(columns)

    def _preprocess_columns(self, columns):
        if isinstance(columns, Columns):
            columns = columns.unpack()
        if not hasattr(columns, 'keys'):
            raise TypeError(f'{self.__class__.__name__} must be created from a mapping of column names '
                            f'to values; received a {type(columns).__name__}.')
        self._check_names(columns.keys())
        return {name: copy.deepcopy(val) for name, val in columns.items()}

    def _check_names(self, names):
        for name in more_itertools.always_iterable(names):
            if not isinstance(name, str):
                raise KeyError(f'The column name {name!r} is not a string, which is not allowed in '
                               f'{self.__class__.__name__}.')
            # Names end up in CSV headers:
            if not name or any(char in name for char in ',\n\r"'):
                raise KeyError(f'The column name {name!r} cannot be written to a CSV header.')

    #
    #   Generic Methods
    #

    def __len__(self):
        return len(self._columns)

    def __repr__(self):
        return f"{self.__class__.__name__}({repr(self.unpack())})"

    def __contains__(self, name):
        return name in self._columns

    #
    #   Iterator Methods
    #

    def keys(self):
        return (name for name in self._columns.keys())

    def values(self):
        return (self._columns[name] for name in self.keys())

    def items(self):
        return ((name, self._columns[name]) for name in self.keys())

    def __iter__(self):
        return iter(self._columns)

    #
    #   Getter Methods
    #

    def __getitem__(self, name):
        return self._get_with_name(name)

    def _get_with_name(self, name):
        try:
            item = self._columns[name]
        except KeyError:
            raise KeyError(f'{name} is not a column of this {self.__class__.__name__}; '
                           f'valid columns are {tuple(self.keys())}.')
        return item

    def unpack(self):
        return dict(self.items())

    def list_keys(self):
        return list(self.keys())

    #
    #   Setter Methods
    #

    def __setitem__(self, name, new_value):
        self._check_names(name)
        self._columns[name] = new_value

