"""The twelve sample functions shared by the unit and acceptance tests.

Seven 1D functions on [-2, 2] with 401 nodes and five 2D functions on the
matching 41x41 box.  Everything is defined through the expression language,
so building the corpus also exercises the parser and evaluator.
"""

from dcsmooth import Grid, Kernel, NormSpec, compile_expression, make_grid_function

GRID_1D = Grid.line(-2.0, 2.0, 401)
GRID_2D = Grid.box((-2.0, -2.0), (2.0, 2.0), (41, 41))

EXPR_1D = {
    "abs": "abs(x)",
    "two-min-quadratic": "(abs(x) - 1)^2",
    "abs-sin-3x": "abs(sin(3*x))",
    "sqrt-abs": "sqrt(abs(x))",
    "step": "if(x < 0, 1, 0)",
    "quadratic-extended": "if(abs(x) <= 1, x^2, inf)",
    "double-well": "min(abs(x + 1), 0.3 + abs(x - 1))",
}

EXPR_2D = {
    "abs-sum": "abs(x) + abs(y)",
    "well-plus-quadratic": "(abs(x) - 1)^2 + y^2",
    "abs-sin-sum": "abs(sin(3*x)) + abs(sin(3*y))",
    "sqrt-abs-sum": "sqrt(abs(x)) + sqrt(abs(y))",
    "box-extended-quadratic": "if(max(abs(x), abs(y)) <= 1, x^2 + y^2, inf)",
}

ALL_NAMES = tuple(EXPR_1D) + tuple(EXPR_2D)


def member(name):
    if name in EXPR_1D:
        return make_grid_function(GRID_1D, compile_expression(EXPR_1D[name], 1))
    return make_grid_function(GRID_2D, compile_expression(EXPR_2D[name], 2))


def euclidean_kernel(dim, exponent=2.0, kind="kp"):
    return Kernel(NormSpec(dim, 2.0), exponent, kind)
