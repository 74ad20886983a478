"""Numerical helpers shared by the analyses"""

from tools.expressions import CompiledExpression, compile_interval_expression, compile_simplex_expression
from tools.newton import NewtonResult, newton_ascent
from tools.parallel import default_jobs, parallel_map
from tools.quadrature import integrate_1d
from tools.rng import stream

__all__ = [
    'CompiledExpression',
    'compile_interval_expression',
    'compile_simplex_expression',
    'NewtonResult',
    'newton_ascent',
    'default_jobs',
    'parallel_map',
    'integrate_1d',
    'stream'
]
