"""Closed-form expression grammar for function-valued model parameters

Expressions are parsed with sympy from a restricted namespace: numeric
literals, + - * / **, exp, log, sqrt, the coordinates r1..rd of a simplex
point (or w for functions on [0, 1]) and dot(c, r) for inner products with
a constant vector. Parsed expressions are compiled to numpy callables.
"""

import logging
from typing import Dict, List, Sequence

import numpy as np
import sympy
from sympy.core.function import AppliedUndef
from sympy.parsing.sympy_parser import parse_expr, standard_transformations

from core.errors import ExpressionError

logger = logging.getLogger("lyapunov_toolkit.tools.expressions")

_ALLOWED_FUNCTIONS = {
    "exp": sympy.exp,
    "log": sympy.log,
    "sqrt": sympy.sqrt,
    "pi": sympy.pi,
    "E": sympy.E,
}

_PARSER_GLOBALS = {
    "__builtins__": {},
    "Integer": sympy.Integer,
    "Float": sympy.Float,
    "Rational": sympy.Rational,
    "Symbol": sympy.Symbol,
}


def _dot(coefficients, vector):
    coefficients = list(coefficients)
    vector = list(vector)
    if len(coefficients) != len(vector):
        raise ExpressionError(f"dot() needs {len(vector)} coefficients, got {len(coefficients)}")
    return sum(sympy.sympify(c) * v for c, v in zip(coefficients, vector))


def simplex_symbols(d: int) -> List[sympy.Symbol]:
    return list(sympy.symbols(f"r1:{d + 1}", real=True))


INTERVAL_SYMBOL = sympy.Symbol("w", real=True)


def parse(text: str, symbols: Sequence[sympy.Symbol]) -> sympy.Expr:
    """Parse text into a sympy expression over the given symbols only"""
    if not isinstance(text, str) or not text.strip():
        raise ExpressionError("Expression must be a non-empty string")
    local_dict: Dict[str, object] = dict(_ALLOWED_FUNCTIONS)
    local_dict.update({s.name: s for s in symbols})
    if len(symbols) > 1:
        local_dict["r"] = list(symbols)
        local_dict["dot"] = _dot
    try:
        expr = parse_expr(
            text,
            local_dict=local_dict,
            global_dict=dict(_PARSER_GLOBALS),
            transformations=standard_transformations,
            evaluate=True,
        )
    except ExpressionError:
        raise
    except Exception as e:
        raise ExpressionError(f"Cannot parse expression '{text}': {e}") from e
    if not isinstance(expr, sympy.Expr):
        raise ExpressionError(f"Expression '{text}' is not scalar")
    undefined = expr.atoms(AppliedUndef)
    if undefined:
        names = ", ".join(sorted({type(f).__name__ for f in undefined}))
        raise ExpressionError(f"Expression '{text}' calls unknown functions: {names}")
    unknown = expr.free_symbols - set(symbols)
    if unknown:
        names = ", ".join(sorted(s.name for s in unknown))
        raise ExpressionError(f"Expression '{text}' uses unknown names: {names}")
    return expr


class CompiledExpression:
    """A parsed expression with its numpy callable"""

    def __init__(self, expr: sympy.Expr, symbols: Sequence[sympy.Symbol], text: str = None):
        self.expr = expr
        self.symbols = list(symbols)
        self.text = text if text is not None else str(expr)
        self._fn = sympy.lambdify(self.symbols, expr, modules="numpy")

    def __call__(self, *args) -> float:
        return float(self._fn(*args))

    def at(self, r: np.ndarray) -> float:
        """Evaluate at a simplex point given as an array"""
        return float(self._fn(*r))

    def diff(self, symbol: sympy.Symbol) -> "CompiledExpression":
        return CompiledExpression(sympy.diff(self.expr, symbol), self.symbols)

    def __repr__(self) -> str:
        return f"CompiledExpression({self.text!r})"


def compile_simplex_expression(text: str, d: int) -> CompiledExpression:
    symbols = simplex_symbols(d)
    return CompiledExpression(parse(text, symbols), symbols, text)


def compile_interval_expression(text: str) -> CompiledExpression:
    return CompiledExpression(parse(text, [INTERVAL_SYMBOL]), [INTERVAL_SYMBOL], text)


def gibbs_fields(k_texts: Sequence[str]):
    """Potential sum_z K^z(r) r_z, the K vector and H^x = d/dr_x of the potential

    Returns (potential, k_fields, h_fields) as compiled expressions.
    """
    d = len(k_texts)
    symbols = simplex_symbols(d)
    k_exprs = [parse(text, symbols) for text in k_texts]
    potential = sympy.expand(sum(k * s for k, s in zip(k_exprs, symbols)))
    h_exprs = [sympy.diff(potential, s) for s in symbols]
    logger.debug(f"Gibbs potential {potential}")
    return (
        CompiledExpression(potential, symbols),
        [CompiledExpression(k, symbols, t) for k, t in zip(k_exprs, k_texts)],
        [CompiledExpression(h, symbols) for h in h_exprs],
    )
