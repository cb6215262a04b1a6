"""Closed-form solutions of differential equations."""
from .parser import (
    ExpressionSyntaxError,
    ParseError,
    ResidualSpec,
    UnknownIdentifier,
    UnsupportedOrder,
    parse_expression,
    parse_residual,
    render,
)
from .problem import (
    DE_KERNELS,
    BoundaryCondition,
    DeProblem,
    DeResult,
    DeSettings,
    boundary_violations,
    de_error,
    grid,
    make_problem,
    random_points,
    residuals,
    solve_de,
    solve_run,
)

__all__ = [
    "BoundaryCondition", "DE_KERNELS", "DeProblem", "DeResult", "DeSettings",
    "ExpressionSyntaxError", "ParseError", "ResidualSpec", "UnknownIdentifier",
    "UnsupportedOrder", "boundary_violations", "de_error", "grid", "make_problem",
    "parse_expression", "parse_residual", "random_points", "render", "residuals",
    "solve_de", "solve_run",
]
