import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dcsmooth import (
    Kernel,
    NormSpec,
    estimate_growth_constants,
    estimate_separation_constant,
    kernel_decompose,
    kernel_eval,
    kernel_matrix,
)
from dcsmooth.errors import InvalidValueError, VerificationFailureError
from dcsmooth.norms import ETA_LADDER, norm_eval

finite = st.floats(min_value=-100.0, max_value=100.0, allow_nan=False)


# --- norms -----------------------------------------------------------------

def test_norm_eval_basics():
    assert norm_eval(NormSpec(2, 1.0), (3.0, -4.0)) == 7.0
    assert norm_eval(NormSpec(2, 2.0), (3.0, -4.0)) == 5.0
    assert norm_eval(NormSpec(2, math.inf), (3.0, -4.0)) == 4.0
    assert norm_eval(NormSpec(1, 2.0), -2.5) == 2.5


def test_norm_spec_validation():
    with pytest.raises(InvalidValueError):
        NormSpec(3, 2.0)
    with pytest.raises(InvalidValueError):
        NormSpec(1, 0.5)
    with pytest.raises(InvalidValueError):
        NormSpec(1, math.nan)


def test_declared_power_types():
    assert NormSpec(1, 1.5).smoothness_power == 1.5
    assert NormSpec(1, 3.0).smoothness_power == 2.0
    assert NormSpec(1, 1.0).smoothness_power is None  # not uniformly smooth
    assert NormSpec(1, math.inf).smoothness_power is None
    assert NormSpec(1, 1.5).convexity_power == 2.0
    assert NormSpec(1, 3.0).convexity_power == 3.0
    assert NormSpec(1, math.inf).convexity_power is None


# --- kernels ---------------------------------------------------------------

def test_kernel_validation():
    with pytest.raises(InvalidValueError):
        Kernel(NormSpec(1, 2.0), 1.0)  # exponent must exceed 1
    with pytest.raises(InvalidValueError):
        Kernel(NormSpec(1, 2.0), math.inf)
    with pytest.raises(InvalidValueError):
        Kernel(NormSpec(1, 1.0), 2.0, "hilbert")  # hilbert needs the l2 norm
    with pytest.raises(InvalidValueError):
        Kernel(NormSpec(1, 2.0), 3.0, "hilbert")
    with pytest.raises(InvalidValueError):
        Kernel(NormSpec(1, 2.0), 2.0, "gauss")


@given(finite, finite)
def test_quadratic_kernel_is_squared_distance(x, y):
    k = Kernel(NormSpec(1, 2.0), 2.0, "kp")
    got = kernel_eval(k, x, y)
    want = (x - y) ** 2
    assert abs(got - want) <= 1e-12 * (1.0 + x * x + y * y)


@given(finite, finite, finite, finite)
def test_kernel_symmetric_nonnegative_zero_on_diagonal(x1, x2, y1, y2):
    k = Kernel(NormSpec(2, 2.0), 1.5, "kp")
    a, b = (x1, x2), (y1, y2)
    assert kernel_eval(k, a, a) == 0.0  # exact, not approximate
    v = kernel_eval(k, a, b)
    assert v >= 0.0
    assert v == pytest.approx(kernel_eval(k, b, a), rel=1e-12, abs=1e-12)


@given(finite, finite, finite)
def test_decomposition_recombines_and_d_is_convex(x1, x2, y):
    k = Kernel(NormSpec(1, 2.0), 3.0, "kp")
    c, d = kernel_decompose(k, x1, y)
    assert c - d == pytest.approx(kernel_eval(k, x1, y), rel=1e-9, abs=1e-9)
    # midpoint convexity of d(., y)
    _, d2 = kernel_decompose(k, x2, y)
    _, dm = kernel_decompose(k, (x1 + x2) / 2.0, y)
    assert dm <= (d + d2) / 2.0 + 1e-9 * (1.0 + abs(d) + abs(d2))


def test_kernel_matrix_agrees_with_scalar_eval():
    k = Kernel(NormSpec(2, 1.0), 1.5, "kp")
    xs = np.array([[0.0, 0.0], [1.0, -1.0]])
    ys = np.array([[0.5, 0.5], [2.0, 0.0], [-1.0, -1.0]])
    K = kernel_matrix(k, xs, ys)
    assert K.shape == (2, 3)
    for i in range(2):
        for j in range(3):
            assert K[i, j] == pytest.approx(kernel_eval(k, xs[i], ys[j]), abs=1e-12)


# --- growth constants ------------------------------------------------------

def test_growth_ladder_picks_first_working_eta():
    est = estimate_growth_constants(Kernel(NormSpec(1, 2.0), 2.0))
    assert est.eta == 3.0
    assert est.gamma == pytest.approx(2.0 - (4.0 / 3.0) ** 2)  # 2/9
    assert est.worst_margin >= -1e-9
    assert est.samples > 0


def test_growth_ladder_p_one_and_a_half():
    est = estimate_growth_constants(Kernel(NormSpec(2, 2.0), 1.5))
    # eta = 4 is the first ladder entry with 2^(p-1) > (1 + 1/eta)^p;
    # eta = 8 works too but is not first
    assert est.eta == 4.0
    assert est.gamma == pytest.approx(math.sqrt(2.0) - 1.25**1.5)
    assert 2.0**0.5 - (1.0 + 1.0 / 8.0) ** 1.5 > 0.0


def test_growth_fails_when_no_ladder_entry_works():
    # as the exponent approaches 1 the required eta leaves the ladder
    with pytest.raises(VerificationFailureError):
        estimate_growth_constants(Kernel(NormSpec(1, 2.0), 1.01))
    assert max(ETA_LADDER) == 32


def test_growth_estimate_deterministic_in_seed():
    k = Kernel(NormSpec(2, 2.0), 1.5)
    a = estimate_growth_constants(k, seed=7)
    b = estimate_growth_constants(k, seed=7)
    assert a == b


# --- separation constants --------------------------------------------------

def test_separation_quadratic_euclidean_is_one():
    est = estimate_separation_constant(Kernel(NormSpec(2, 2.0), 2.0))
    assert est.constant == pytest.approx(1.0, rel=1e-9)


def test_separation_l1_kernel_degenerates():
    # on the l1 flats, opposite axis points x = t e_1, y = t e_2 give
    # ||x|| = ||y|| = ||x + y|| scaled so the kernel vanishes while
    # ||x - y|| does not: no positive separation constant exists
    est = estimate_separation_constant(Kernel(NormSpec(2, 1.0), 2.0))
    assert est.constant == 0.0


def test_separation_rejects_bad_inputs():
    k = Kernel(NormSpec(1, 2.0), 2.0)
    with pytest.raises(InvalidValueError):
        estimate_separation_constant(k, radius=-1.0)
    with pytest.raises(InvalidValueError):
        estimate_separation_constant(k, min_distance=0.0)
