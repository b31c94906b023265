import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from corpus import GRID_1D, euclidean_kernel, member

from dcsmooth import (
    Grid,
    GridFunction,
    NormSpec,
    Kernel,
    fast_quadratic_inf_convolve,
    inf_convolve,
    iterated_smooth,
    lasry_lions,
    make_grid_function,
    omega_set,
    sup_convolve,
)
from dcsmooth.errors import (
    InfiniteValueInSupError,
    InvalidValueError,
    ScaleOrderError,
    UnsupportedKernelError,
)

K1 = euclidean_kernel(1)
HILBERT = Kernel(NormSpec(1, 2.0), 2.0, "hilbert")


@pytest.mark.parametrize("n", [1e-6, 0.5, 1.0, 64.0])
def test_inf_convolve_below_f_and_preserves_infimum(n):
    f = member("double-well")
    g = inf_convolve(f, K1, n)
    assert (g.values <= f.values).all()
    assert g.values.min() == f.values.min()


@pytest.mark.parametrize("bad", [0.0, -1.0, math.nan, math.inf])
def test_scale_must_be_positive_finite(bad):
    f = member("abs")
    with pytest.raises(InvalidValueError):
        inf_convolve(f, K1, bad)


def test_kernel_grid_dimension_mismatch():
    f = member("abs")
    with pytest.raises(InvalidValueError):
        inf_convolve(f, euclidean_kernel(2), 1.0)


def test_inf_convolve_monotone_in_scale():
    f = member("abs-sin-3x")
    prev = inf_convolve(f, K1, 1.0)
    for n in (2.0, 4.0, 8.0):
        cur = inf_convolve(f, K1, n)
        assert (cur.values >= prev.values - 1e-12).all()
        prev = cur


def test_moreau_envelope_of_quadratic_oracle():
    # min_y y^2 + n (x - y)^2 = x^2 * n / (1 + n); the grid minimum can sit
    # at most half a step from the true minimizer, costing (1+n) (h/2)^2
    g = Grid.line(-2.0, 2.0, 401)
    f = make_grid_function(g, lambda x: x * x)
    xs = g.axis(0)
    h = g.step[0]
    for n in (1.0, 4.0):
        got = inf_convolve(f, HILBERT, n).values
        want = xs * xs * (n / (1.0 + n))
        assert np.abs(got - want).max() <= (1.0 + n) * (h / 2.0) ** 2 + 1e-12


def test_constant_function_is_fixed_point():
    g = Grid.line(0.0, 1.0, 11)
    f = GridFunction(g, np.full(11, 3.25))
    assert np.array_equal(inf_convolve(f, K1, 2.0).values, f.values)
    assert np.array_equal(sup_convolve(f, K1, 2.0).values, f.values)


def test_extended_input_becomes_finite():
    f = member("quadratic-extended")
    assert not f.finite_mask.all()
    g = inf_convolve(f, K1, 1.0)
    assert np.isfinite(g.values).all()


def test_kp_quadratic_matches_hilbert_kernel():
    f = member("sqrt-abs")
    a = inf_convolve(f, euclidean_kernel(1, 2.0, "kp"), 3.0)
    b = inf_convolve(f, HILBERT, 3.0)
    assert np.abs(a.values - b.values).max() <= 1e-12 * (1.0 + f.sample_max_abs())


def test_sup_convolve_is_negated_inf_convolve():
    f = member("abs-sin-3x")
    neg = f.with_values(-f.values)
    assert np.array_equal(sup_convolve(f, K1, 2.0).values, -inf_convolve(neg, K1, 2.0).values)
    assert (sup_convolve(f, K1, 2.0).values >= f.values).all()


def test_sup_convolve_rejects_extended_input():
    with pytest.raises(InfiniteValueInSupError):
        sup_convolve(member("quadratic-extended"), K1, 1.0)


def test_iterated_smooth_vs_half_scale_semigroup():
    # continuous quadratic kernels compose: smoothing twice at n equals
    # smoothing once at n/2.  On a grid the intermediate point is quantized,
    # which can only raise the value, by at most n h^2 / 2.
    f = member("abs-sin-3x")
    h = GRID_1D.step[0]
    for n in (2.0, 8.0):
        twice = iterated_smooth(f, K1, n)
        half = inf_convolve(f, K1, n / 2.0)
        assert (twice.values >= half.values - 1e-12).all()
        assert (twice.values <= half.values + n * h * h / 2.0 + 1e-12).all()


def test_lasry_lions_sandwich_and_order_enforcement():
    f = member("double-well")
    inner = inf_convolve(f, K1, 4.0)
    ll = lasry_lions(f, K1, 4.0, 8.0)
    assert (ll.values >= inner.values - 1e-12).all()
    assert (ll.values <= f.values + 1e-12).all()
    with pytest.raises(ScaleOrderError):
        lasry_lions(f, K1, 4.0, 4.0, enforce_scale_order=True)
    # same-scale smoothing is allowed when not enforcing
    lasry_lions(f, K1, 4.0, 4.0)


def test_omega_set_flat_function_oracle():
    # f == 0: members are exactly the nodes with n |x - y|^2 <= 1,
    # so the diameter is twice floor((1/sqrt(n))/h) steps
    g = Grid.line(-2.0, 2.0, 401)
    f = GridFunction(g, np.zeros(401))
    h = g.step[0]
    center = 200
    for n in (1.0, 4.0, 16.0):
        om = omega_set(f, HILBERT, n, center)
        radius_nodes = math.floor((1.0 / math.sqrt(n)) / h + 1e-9)
        assert om.diameter == pytest.approx(2 * radius_nodes * h, abs=1e-12)
        assert center in om.members


def test_omega_set_tight_at_strict_minimum():
    f = member("abs")
    om = omega_set(f, K1, 1e8, 200)  # x = 0
    assert om.members == (200,)
    assert om.diameter == 0.0


def test_omega_set_diameter_nonincreasing():
    f = member("double-well")
    diams = [omega_set(f, K1, n, 100).diameter for n in (1.0, 2.0, 4.0, 8.0)]
    assert all(b <= a + 1e-12 for a, b in zip(diams, diams[1:]))


def test_omega_set_center_range():
    f = member("abs")
    with pytest.raises(InvalidValueError):
        omega_set(f, K1, 1.0, 401)
    with pytest.raises(InvalidValueError):
        omega_set(f, K1, 1.0, -1)


# --- fast quadratic path ----------------------------------------------------

@settings(max_examples=60, deadline=None)
@given(
    st.lists(
        st.one_of(st.floats(min_value=-50.0, max_value=50.0), st.just(math.inf)),
        min_size=2,
        max_size=25,
    ),
    st.sampled_from([0.25, 1.0, 7.5]),
)
def test_fast_path_matches_generic_1d(vals, n):
    vals = vals + [1.0]
    g = Grid.line(0.0, 1.0, len(vals))
    f = GridFunction(g, vals)
    k = Kernel(NormSpec(1, 2.0), 2.0, "hilbert")
    fast = fast_quadratic_inf_convolve(f, n)
    slow = inf_convolve(f, k, n)
    assert np.abs(fast.values - slow.values).max() <= 1e-9 * (1.0 + f.sample_max_abs())


def test_fast_path_matches_generic_2d_extended():
    f = member("box-extended-quadratic")
    k = Kernel(NormSpec(2, 2.0), 2.0, "hilbert")
    for n in (1.0, 4.0):
        fast = fast_quadratic_inf_convolve(f, n)
        slow = inf_convolve(f, k, n)
        assert np.abs(fast.values - slow.values).max() <= 1e-9 * (1.0 + f.sample_max_abs())


def test_fast_path_accepts_only_quadratic_euclidean():
    f = member("abs")
    with pytest.raises(UnsupportedKernelError):
        fast_quadratic_inf_convolve(f, 1.0, euclidean_kernel(1, 1.5))
    # quadratic kp over the euclidean norm is the same kernel, so it is fine
    fast_quadratic_inf_convolve(f, 1.0, euclidean_kernel(1, 2.0))
