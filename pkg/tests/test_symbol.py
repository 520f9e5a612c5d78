"""Symbol representation, catalog, KdV-type builder, and condition checks."""

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from weylab.symbol import (
    SampleSet,
    SympySymbol,
    VectorFieldSystem,
    build_kdv_type,
    catalog,
    check_grad_ellipticity,
    check_im_smallness,
    check_x_decay,
    phase_symbols,
    scale_symbol,
    seminorm_estimate,
)


def lam2(r):
    return 1.0 / (1.0 + r**2)


# -- catalog -------------------------------------------------------------------


def test_airy_value_and_gradient():
    a = catalog("airy")
    assert np.isclose(a.eval(0.3, 2.0).item().real, 8.0)
    assert np.isclose(a.deriv((1,), (0,), 0.3, 2.0).item().real, 12.0)
    assert a.order == 3 and a.real_valued and a.zero_nyquist


def test_kdv_sum_divergence_identity():
    # sum_j d_xi_j a = n |xi|^2 + 2 (sum_j xi_j)^2; at xi = (1, -1) the value is 4
    a = catalog("kdv_sum", n=2)
    xi = np.array([1.0, -1.0])
    div = sum(a.deriv(e, (0, 0), np.zeros(2), xi).item().real for e in [(1, 0), (0, 1)])
    assert np.isclose(div, 4.0)
    rng = np.random.default_rng(5)
    for _ in range(10):
        z = rng.standard_normal(2)
        div = sum(a.deriv(e, (0, 0), np.zeros(2), z).item().real for e in [(1, 0), (0, 1)])
        assert np.isclose(div, 2 * np.sum(z**2) + 2 * np.sum(z) ** 2)


def test_zk_gradient_at_characteristic_direction():
    a = catalog("zk")
    xi = np.array([0.0, 1.0])
    grad = a.grad_xi(np.zeros(2), xi).real.ravel()
    assert np.allclose(grad, [1.0, 0.0])
    assert np.isclose(np.linalg.norm(grad), np.sum(xi**2))


def test_catalog_errors():
    with pytest.raises(KeyError):
        catalog("not_a_symbol")
    with pytest.raises(ValueError):
        catalog("ultrahyperbolic", matrix=[[1.0, 0.5], [0.0, -1.0]])
    with pytest.raises(ValueError):
        catalog("ultrahyperbolic", matrix=[[1.0, 0.0], [0.0, 0.0]])
    with pytest.raises(ValueError):
        catalog("gaussian_kdv", eps=-1.0)


def test_parts_split_consistency():
    a = catalog("gaussian_kdv", eps=0.05)
    rng = np.random.default_rng(0)
    X = rng.uniform(-3, 3, size=(40, 1))
    XI = rng.uniform(-5, 5, size=(40, 1))
    whole = a.eval(X, XI)
    split = a.parts[0].eval(X, XI) + a.parts[1].eval(X, XI)
    assert np.max(np.abs(whole - split)) <= 1e-12 * np.max(np.abs(whole))


# -- derivative oracles ---------------------------------------------------------


def test_fd_fallback_matches_analytic():
    a = catalog("gaussian_kdv", eps=0.5)
    x, xi = np.array([[0.7]]), np.array([[1.3]])
    exact = a.deriv((1,), (1,), x, xi)

    # strip the analytic closures to force the fallback
    class Bare(type(a).__mro__[1]):
        pass

    bare = SympySymbol(a.expr, 1, 3.0)
    bare._analytic_deriv = lambda alpha, beta: None if any(alpha) or any(beta) else bare._closure((0,), (0,))
    approx = bare.deriv((1,), (1,), x, xi)
    assert np.abs(approx - exact) < 1e-6 * max(1.0, np.abs(exact))


def test_fd_second_order_halving_rate():
    # central differences on smooth probes: halving h cuts the error by ~4
    a = catalog("gaussian_kdv", eps=0.5)
    x0, xi0 = 0.7, 1.3
    exact = a.deriv((0,), (1,), x0, xi0).item()

    def fd(h):
        up = a.eval(x0 + h, xi0).item()
        dn = a.eval(x0 - h, xi0).item()
        return (up - dn) / (2 * h)

    e1 = abs(fd(1e-3) - exact)
    e2 = abs(fd(5e-4) - exact)
    assert 3.5 <= e1 / e2 <= 4.5


# -- KdV-type builder ------------------------------------------------------------


def test_build_kdv_type_constant_coefficients():
    sysc = VectorFieldSystem(2, [[1, 0], [0, 1]])
    kb = build_kdv_type(sysc)
    assert kb.re_a2.expr == 0 and kb.im_a2.expr == 0
    xi = np.array([1.0, 2.0])
    assert np.isclose(kb.a3.eval(np.zeros(2), xi).item().real, 1.0 * 5.0)
    assert all(d == 0 for d in kb.corrections)


def test_build_kdv_type_rejects_complex_coefficients():
    xs, _ = phase_symbols(1)
    with pytest.raises(ValueError):
        VectorFieldSystem(1, [[1 + sp.I * sp.exp(-xs[0] ** 2)]])


def test_build_kdv_type_variable_matches_kn_route():
    # independent oracle: compose in KN quantization, then change quantization
    from weylab.symbol.core import kn_to_weyl_expr

    xs, xis = phase_symbols(1)
    x, xi = xs[0], xis[0]
    sys1 = VectorFieldSystem(1, [[1 + sp.Rational(1, 10) * sp.exp(-(x**2))]])
    kb = build_kdv_type(sys1)

    bx = sys1.coefficients[0][0]
    X = bx * xi
    # KN composition: Op(a)Op(b) = Op(c) with c = sum (-i)^k / k! d_xi^k a d_x^k b
    def kn_product(ae, be):
        out = sp.Integer(0)
        for k in range(8):
            term = (-sp.I) ** k / sp.factorial(k) * sp.diff(ae, xi, k) * sp.diff(be, x, k)
            if term == 0 and k > 3:
                break
            out += term
        return sp.expand(out)

    c_kn = kn_product(X, kn_product(X, X))
    full_via_kn = sp.expand(kn_to_weyl_expr(c_kn, 1))
    diff = sp.simplify(full_via_kn - kb.full.expr)
    assert diff == 0


def test_build_kdv_type_im_part_is_odd_and_small():
    xs, _ = phase_symbols(1)
    eps = 0.05
    sys1 = VectorFieldSystem(1, [[1 + eps * sp.exp(-xs[0] ** 2)]])
    kb = build_kdv_type(sys1)
    # Im a_2 vanishes at x = 0 by parity and scales with eps
    assert abs(kb.im_a2.eval(0.0, 1.0).item()) < 1e-14
    val = abs(kb.im_a2.eval(0.7, 1.0).item().real)
    assert 0 < val < 10 * eps
    S = SampleSet.standard(1, x_radius=10, xi_max=32)
    rep = check_im_smallness(kb.full, lam2, S)
    assert rep.passed and rep.constants["c0_hat"] < 1.0


# -- condition checks ------------------------------------------------------------


def test_grad_ellipticity_airy():
    rep = check_grad_ellipticity(catalog("airy"), SampleSet.standard(1))
    assert rep.passed
    assert np.isclose(rep.constants["C_lower"], 1.0 / 3.0, rtol=1e-6)
    assert np.isclose(rep.constants["C_upper"], 3.0, rtol=1e-6)


def test_grad_ellipticity_zk_sphere_oracle():
    a = catalog("zk")
    rep = check_grad_ellipticity(a, SampleSet.standard(2, x_points=5))
    assert rep.passed
    # dense scan over the unit sphere: min |grad a| / |xi|^2 is 1 at (0, +-1)
    ang = np.linspace(0, 2 * np.pi, 4001)
    xi = np.stack([np.cos(ang), np.sin(ang)], axis=-1)
    grad = a.grad_xi(np.zeros((1, 2)), xi).real
    ratio = np.linalg.norm(grad, axis=-1)
    assert np.isclose(ratio.min(), 1.0, atol=1e-6)
    assert np.isclose(rep.constants["C_lower"], 1.0, rtol=1e-6)


def test_grad_ellipticity_degenerate_fails():
    xs, xis = phase_symbols(2)
    a = SympySymbol(xis[0] ** 3, 2, 3.0, label="xi1^3")
    rep = check_grad_ellipticity(a, SampleSet.standard(2, x_points=5))
    assert rep.verdict == "fail"


@settings(max_examples=15, deadline=None)
@given(scale=st.floats(0.01, 100.0))
def test_grad_ellipticity_scaling_invariance(scale):
    S = SampleSet.standard(1, x_points=9, num_shells=12)
    base = check_grad_ellipticity(catalog("airy"), S)
    scaled = check_grad_ellipticity(scale_symbol(catalog("airy"), scale), S)
    assert scaled.verdict == base.verdict == "pass"
    # invariant combination: C_upper * C_lower is scale-free
    prod_base = base.constants["C_upper"] * base.constants["C_lower"]
    prod_scaled = scaled.constants["C_upper"] * scaled.constants["C_lower"]
    assert np.isclose(prod_base, prod_scaled, rtol=1e-8)


def test_x_decay_airy_zero():
    rep = check_x_decay(catalog("airy"), lam2, SampleSet.standard(1))
    assert rep.passed and rep.constants["eps_hat"] == 0.0


@pytest.mark.parametrize("eps,expect", [(0.05, "pass"), (5.0, "fail")])
def test_x_decay_gaussian_kdv(eps, expect):
    rep = check_x_decay(catalog("gaussian_kdv", eps=eps), lam2, SampleSet.standard(1))
    assert rep.verdict == expect


def test_im_smallness_real_symbol_zero():
    rep = check_im_smallness(catalog("airy"), lam2, SampleSet.standard(1))
    assert rep.passed and rep.constants["c0_hat"] == 0.0


def test_im_smallness_unit_imaginary_fails():
    xs, xis = phase_symbols(1)
    a = SympySymbol(xis[0] ** 3 + sp.I * xis[0] ** 2, 1, 3.0, label="xi^3+i xi^2")
    a.parts = (
        SympySymbol(xis[0] ** 3, 1, 3.0),
        SympySymbol(sp.I * xis[0] ** 2, 1, 2.0, zero_nyquist=False),
    )
    rep = check_im_smallness(a, lam2, SampleSet.standard(1))
    assert rep.verdict == "fail"
    # the fitted constant grows like <x>^2 over the scan box
    assert rep.constants["c0_hat"] > 50.0


def test_im_smallness_requires_split():
    xs, xis = phase_symbols(1)
    a = SympySymbol(xis[0] ** 3 + sp.I * xis[0] ** 2, 1, 3.0)
    with pytest.raises(ValueError):
        check_im_smallness(a, lam2, SampleSet.standard(1))


# -- seminorms -------------------------------------------------------------------


def test_seminorm_constant_symbol():
    a = SympySymbol(sp.Integer(1), 1, 0.0)
    for k in (0, 1, 2):
        assert np.isclose(seminorm_estimate(a, k), 1.0)


def test_seminorm_airy_k0():
    val = seminorm_estimate(catalog("airy"), 0)
    assert 0.999 <= val <= 1.0  # sup |xi|^3 <xi>^{-3} = 1, approached from below


def test_seminorm_zk_k1_finite():
    val = seminorm_estimate(catalog("zk"), 1, SampleSet.standard(2, x_points=3))
    assert np.isfinite(val) and 2.5 <= val <= 10.0  # approaches 3 from below


# -- qualifying gradient directions for vector-field systems ------------------------


def test_qualifying_directions_reports_all():
    xs, _ = phase_symbols(2)
    sys2 = VectorFieldSystem(
        2,
        [
            [1 + sp.Rational(1, 100) * sp.exp(-xs[0] ** 2 - xs[1] ** 2), sp.Rational(1, 10)],
            [sp.Rational(1, 50), 1],
        ],
    )
    out = sys2.qualifying_directions(x_radius=5.0, points=41)
    ks = {e["k"] for e in out}
    assert 1 in ks
    for e in out:
        assert e["C"] > 0
