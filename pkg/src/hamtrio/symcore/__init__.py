"""Exact polynomial and rational-function arithmetic."""

from hamtrio.symcore.linalg import (
    DegenerateMatrixError,
    LinearSolution,
    LinearSystem,
    det,
    matrix_inverse,
    rank,
    solve_linear,
    split_by_field_vars,
)
from hamtrio.symcore.parse import ParseError, parse_expr
from hamtrio.symcore.poly import PENCIL_VAR, Polynomial, const, var
from hamtrio.symcore.ratfunc import RationalFunction, as_rf
from hamtrio.symcore.vars import VarTable

__all__ = [
    "DegenerateMatrixError", "LinearSolution", "LinearSystem", "PENCIL_VAR", "ParseError",
    "Polynomial", "RationalFunction", "VarTable", "as_rf", "const", "det", "matrix_inverse",
    "parse_expr", "rank", "solve_linear", "split_by_field_vars", "var",
]
