"""
option.py: descriptors for declaring config file schemas.

A config section declares its keys as class attributes,
the same way a component declares its options:

    class ReservoirSection(rc.Section):
        N = rc.Option.Integer("Number of reservoir nodes", default=500)

Each option knows its description, its default
(`Empty` meaning the key is required)
and how to coerce and validate a raw TOML value.
"""

from typing import Any, ClassVar

try:
    from typing import Self
except ImportError:
    # py3.10 and lower
    from typing_extensions import Self

import resclim as rc

class Option:
    def __init__(
            self,
            desc: str,
            default: Any = rc.Empty,
            *,
            minimum: float | None = None,
            choices: tuple[str, ...] | None = None,
            ):
        self.desc = desc
        self.default = default
        self.minimum = minimum
        self.choices = choices
        self.category = type(self)
        self.name = 'this should be set in __set_name__'

    # These are shorthands which will be assigned at
    # the end of this file.
    # The annotations are here to make mypy shut up
    Integer: ClassVar[type[Self]]
    Real: ClassVar[type[Self]]
    Text: ClassVar[type[Self]]
    Flag: ClassVar[type[Self]]
    Grid: ClassVar[type[Self]]
    IntList: ClassVar[type[Self]]

    def __set_name__(self, owner: type, name: str) -> None:
        self.name = name

    def resolve(self, table: dict, where: str) -> Any:
        """
        Look up this option in a TOML table and return the coerced value.
        """
        key = f'{where}.{self.name}' if where else self.name
        if self.name not in table:
            if self.default is rc.Empty:
                raise rc.ConfigError(
                    f"Missing required key `{key}` ({self.desc})."
                    )
            return self.default
        return self.coerce(table[self.name], key)

    def coerce(self, value: Any, key: str) -> Any:
        return value

    def fail(self, key: str, problem: str) -> None:
        raise rc.ConfigError(f"Key `{key}` ({self.desc}): {problem}")

    def check_minimum(self, value: float, key: str) -> None:
        if self.minimum is not None and value < self.minimum:
            self.fail(key, f"must be >= {self.minimum}, got {value}.")

class Integer(Option):
    def coerce(self, value, key):
        if isinstance(value, bool) or not isinstance(value, int):
            self.fail(key, f"expected an integer, got {value!r}.")
        self.check_minimum(value, key)
        return value

class Real(Option):
    def coerce(self, value, key):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            self.fail(key, f"expected a number, got {value!r}.")
        self.check_minimum(value, key)
        return float(value)

class Text(Option):
    def coerce(self, value, key):
        if not isinstance(value, str):
            self.fail(key, f"expected a string, got {value!r}.")
        if self.choices is not None and value not in self.choices:
            self.fail(key, f"must be one of {list(self.choices)}, got {value!r}.")
        return value

class Flag(Option):
    def coerce(self, value, key):
        if not isinstance(value, bool):
            self.fail(key, f"expected true or false, got {value!r}.")
        return value

class IntList(Option):
    """
    A single integer or a list of integers; always coerced to a list.
    """
    def coerce(self, value, key):
        values = value if isinstance(value, list) else [value]
        if not values:
            self.fail(key, "must not be empty.")
        for item in values:
            if isinstance(item, bool) or not isinstance(item, int):
                self.fail(key, f"expected integers, got {item!r}.")
            self.check_minimum(item, key)
        return list(values)

class Grid(Option):
    """
    A regularization parameter grid.

    Either an explicit list of numbers,
    or a table {log10_start, log10_stop, log10_step, include_zero}.
    """
    def coerce(self, value, key):
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            value = [value]

        if isinstance(value, list):
            if not value:
                self.fail(key, "grid must not be empty.")
            for item in value:
                if isinstance(item, bool) or not isinstance(item, (int, float)):
                    self.fail(key, f"expected numbers, got {item!r}.")
                if item < 0:
                    self.fail(key, f"regularization values must be >= 0, got {item}.")
            return [float(item) for item in value]

        if isinstance(value, dict):
            unknown = set(value) - {
                'log10_start', 'log10_stop', 'log10_step', 'include_zero'}
            if unknown:
                self.fail(key, f"unknown grid keys {sorted(unknown)}.")
            try:
                start = float(value['log10_start'])
                stop = float(value['log10_stop'])
                step = float(value.get('log10_step', 1.0))
            except KeyError as missing:
                self.fail(key, f"log grid needs {missing}.")
            if step <= 0 or stop < start:
                self.fail(key, "log grid needs log10_step > 0 and stop >= start.")
            return rc.log_grid(
                start, stop, step, bool(value.get('include_zero', False)))

        self.fail(key, f"expected a list or a log10 table, got {value!r}.")


Option.Integer = Integer
Option.Real = Real
Option.Text = Text
Option.Flag = Flag
Option.Grid = Grid
Option.IntList = IntList
