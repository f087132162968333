"""Variable tables: which names are coordinates, parameters or the pencil variable."""

from __future__ import annotations

from dataclasses import dataclass, field

from hamtrio.symcore.poly import PENCIL_VAR, var_key


def field_var_names(n: int) -> tuple[str, ...]:
    return tuple(f"u{i}" for i in range(1, n + 1))


@dataclass(frozen=True)
class VarTable:
    field_vars: tuple[str, ...]
    params: tuple[str, ...] = ()
    pencil_var: str | None = None
    _all: frozenset = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "field_vars", tuple(self.field_vars))
        object.__setattr__(self, "params", tuple(sorted(self.params, key=var_key)))
        names = list(self.field_vars) + list(self.params)
        if self.pencil_var is not None:
            names.append(self.pencil_var)
        if len(set(names)) != len(names):
            raise ValueError("variable names must be unique")
        for i, v in enumerate(self.field_vars, 1):
            if v != f"u{i}":
                raise ValueError(f"field variables must be u1..un, got {v!r}")
        for p in self.params:
            if var_key(p)[0] != 1:
                raise ValueError(f"parameter name {p!r} clashes with a field or pencil name")
        if self.pencil_var not in (None, PENCIL_VAR):
            raise ValueError(f"the pencil variable is named {PENCIL_VAR!r}")
        object.__setattr__(self, "_all", frozenset(names))

    @classmethod
    def for_dim(cls, n: int, params=(), pencil: bool = False) -> "VarTable":
        return cls(field_var_names(n), tuple(params), PENCIL_VAR if pencil else None)

    @property
    def n(self) -> int:
        return len(self.field_vars)

    def __contains__(self, name: str) -> bool:
        return name in self._all

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(sorted(self._all, key=var_key))

    def with_params(self, extra) -> "VarTable":
        return VarTable(self.field_vars, tuple(set(self.params) | set(extra)), self.pencil_var)

    def with_pencil(self) -> "VarTable":
        return VarTable(self.field_vars, self.params, PENCIL_VAR)
