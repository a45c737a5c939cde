import math

import numpy as np
import pytest

from wulff_lab.errors import (
    FinitenessFailure,
    InadmissibleParams,
    PRangeError,
)
from wulff_lab.field_grid import GridField, GridGeometry
from wulff_lab.function_spaces import (
    LorentzParams,
    _lz_piece_integral,
    campanato_seminorm,
    lorentz_zygmund_norm,
    luxemburg_norm,
    monotone_envelope,
    morrey_norm,
    potential_young_transforms,
    rearrange,
    weight_one,
    weight_power,
    weight_transforms,
    young_exp,
    young_linf,
    young_power,
    young_table,
    young_transforms,
    young_zygmund,
)
from wulff_lab.function_spaces import WeightFunction


def unit_grid(cells=16):
    return GridGeometry((cells, cells), (1.0, 1.0), (0.0, 0.0))


def step_field(values_and_counts, cells=16):
    """Scalar field taking value v on k cells, row-major fill."""
    flat = np.zeros(cells * cells)
    pos = 0
    for v, k in values_and_counts:
        flat[pos:pos + k] = v
        pos += k
    return GridField(unit_grid(cells), flat.reshape(cells, cells))


# ---------------------------------------------------------------------------
# rearrangement and Lorentz-Zygmund norms


def test_rearrangement_of_step_function():
    f = step_field([(3.0, 4), (1.0, 8)])
    r = rearrange(f)
    meas = 1.0 / 256
    assert r(0.5 * meas) == 3.0
    assert r(4 * meas) == 3.0
    assert r(4.5 * meas) == 1.0
    assert r(12 * meas) == 1.0
    assert r(12.5 * meas) == 0.0
    assert r.integral() == pytest.approx((3.0 * 4 + 1.0 * 8) * meas)


def test_lorentz_qq_equals_lq():
    f = step_field([(2.0, 10), (0.5, 30), (1.25, 7)])
    meas = 1.0 / 256
    for q in (1.0, 2.0, 3.5):
        exact = (
            (2.0**q * 10 + 0.5**q * 30 + 1.25**q * 7) * meas
        ) ** (1 / q)
        got = lorentz_zygmund_norm(f, LorentzParams(q, q))
        assert got == pytest.approx(exact, abs=1e-10 * max(1, exact))


def test_lorentz_indicator_closed_form():
    f = step_field([(1.0, 24)])
    measure = 24.0 / 256
    for q, rho in ((2.0, 1.0), (3.0, 2.0), (1.5, 0.7)):
        exact = (q / rho) ** (1 / rho) * measure ** (1 / q)
        got = lorentz_zygmund_norm(f, LorentzParams(q, rho))
        assert got == pytest.approx(exact, abs=1e-6)


def test_lorentz_sup_norm_branch():
    f = step_field([(4.0, 3), (2.0, 5)])
    assert lorentz_zygmund_norm(f, LorentzParams(math.inf, math.inf)) == pytest.approx(4.0)


def test_lorentz_zygmund_log_weight_finiteness():
    # L^(inf, 2)(log L)^-1 needs rho*|beta| > 1 at q = inf to converge at 0
    f = step_field([(1.0, 256)])
    val = lorentz_zygmund_norm(f, LorentzParams(math.inf, 2.0, -1.0))
    assert math.isfinite(val) and val > 0


def test_lorentz_params_admissibility():
    with pytest.raises(InadmissibleParams):
        LorentzParams(0.5, 1.0)
    with pytest.raises(InadmissibleParams):
        LorentzParams(1.0, 2.0)  # q = 1 needs rho <= 1
    LorentzParams(1.0, 1.0)
    LorentzParams(2.0, 0.25)


def test_piece_integral_against_sympy():
    sympy = pytest.importorskip("sympy")
    s = sympy.symbols("s", positive=True)
    a, b, M = 0.5, 2, 2.0
    exact = float(
        sympy.integrate(
            s ** (a - 1) * (1 + sympy.log(M / s)) ** b, (s, sympy.Rational(1, 5), 1)
        )
    )
    got = _lz_piece_integral(0.2, 1.0, a, float(b), M)
    assert got == pytest.approx(exact, rel=1e-8)


def test_piece_integral_closed_forms():
    # b = 0: plain power
    assert _lz_piece_integral(0.25, 1.0, 2.0, 0.0, 1.0) == pytest.approx(
        (1.0 - 0.25**2) / 2.0
    )
    # a = 0: u-substitution, b = -2 converges down to s0 = 0
    M = 1.0
    val = _lz_piece_integral(0.0, 1.0, 0.0, -2.0, M)
    assert val == pytest.approx(1.0)  # int_0^1 (1+log(1/s))^-2 ds/s = 1


# ---------------------------------------------------------------------------
# Luxemburg norms


def test_luxemburg_power_equals_lq():
    f = step_field([(2.0, 9), (0.75, 40)])
    meas = 1.0 / 256
    for q in (1.0, 2.0, 4.0):
        exact = ((2.0**q * 9 + 0.75**q * 40) * meas) ** (1 / q)
        got = luxemburg_norm(f, young_power(q))
        assert got == pytest.approx(exact, abs=1e-10 * max(1, exact))


def test_luxemburg_exponential_unit_instance():
    # f = 1 on a measure-one domain with A = e^t - 1: the modular equation
    # e^(1/lam) - 1 = 1 gives lam = 1/log 2
    f = GridField.constant(unit_grid(8), 1.0)
    got = luxemburg_norm(f, young_exp(1.0))
    assert got == pytest.approx(1.0 / math.log(2.0), rel=1e-9)


def test_luxemburg_linf_marker_is_sup():
    f = step_field([(5.0, 2), (1.0, 100)])
    assert luxemburg_norm(f, young_linf()) == pytest.approx(5.0, rel=1e-9)


def test_luxemburg_zero_field():
    f = GridField.constant(unit_grid(8), 0.0)
    assert luxemburg_norm(f, young_power(2.0)) == 0.0


def test_luxemburg_homogeneity():
    f = step_field([(1.0, 17), (0.2, 50)])
    A = young_zygmund(2.0, 1.0)
    base = luxemburg_norm(f, A)
    scaled = luxemburg_norm(f.with_values(7.0 * f.values), A)
    assert scaled == pytest.approx(7.0 * base, rel=1e-8)


def test_young_builders_are_convex():
    for A in (young_power(1.5), young_zygmund(2.0, 1.0), young_exp(1.0),
              young_zygmund(1.0, 2.0)):
        assert A.check_convexity()


def test_young_inverse():
    A = young_power(2.0)
    assert A.inverse(9.0) == pytest.approx(3.0, rel=1e-9)


def test_young_table_matches_power():
    t = np.geomspace(1e-3, 1e3, 40)
    A = young_table(t, t**2.5)
    for x in (0.01, 0.9, 37.0):
        assert float(A(x)) == pytest.approx(x**2.5, rel=1e-6)
    # power extrapolation beyond the table
    assert float(A(1e5)) == pytest.approx(1e5**2.5, rel=1e-4)


# ---------------------------------------------------------------------------
# Young transforms and the balance condition


def test_transforms_power_and_quadrature_routes_agree():
    # beta = 0 Zygmund functions equal the power functions but take the
    # numeric route; both routes must produce the same transforms
    alpha, s, n = 0.6, 2.5, 2
    A1, B1 = young_power(7 / 6), young_power(28 / 3)
    A2, B2 = young_zygmund(7 / 6, 0.0), young_zygmund(28 / 3, 0.0)
    exact = potential_young_transforms(A1, B1, alpha, s, n)
    quad = potential_young_transforms(A2, B2, alpha, s, n)
    for t in (0.5, 1.0, 8.0, 125.0):
        assert quad.E(t) == pytest.approx(exact.E(t), rel=1e-6)
        assert quad.F(t) == pytest.approx(exact.F(t), rel=1e-6)


def test_transform_asymptotic_exponents():
    pair = potential_young_transforms(young_power(7 / 6), young_power(28 / 3),
                                      0.6, 2.5, 2)
    assert pair.E.asym.power == pytest.approx(1.0 / 8.0)
    assert pair.F.asym.power == pytest.approx(4.0 / 3.0)


def test_young_transforms_specializes_p():
    # alpha = p/(p+1), s = p+1 reproduces the p-Laplace transforms
    p = 1.5
    via_p = young_transforms(young_power(7 / 6), young_power(28 / 3), p, 2)
    direct = potential_young_transforms(young_power(7 / 6), young_power(28 / 3),
                                        p / (p + 1), p + 1, 2)
    for t in (0.7, 3.0):
        assert via_p.E(t) == pytest.approx(direct.E(t), rel=1e-12)
        assert via_p.F(t) == pytest.approx(direct.F(t), rel=1e-12)


def test_balance_criterion_pair():
    A, B = young_power(7 / 6), young_power(28 / 3)
    rep = potential_young_transforms(A, B, 0.6, 2.5, 2).balance()
    assert rep.satisfiable and rep.gamma is not None and rep.mode == "symbolic"
    # strengthening B by one extra log power breaks the balance
    B_plus = young_zygmund(28 / 3, 1.0)
    rep2 = potential_young_transforms(A, B_plus, 0.6, 2.5, 2).balance()
    assert not rep2.satisfiable and rep2.mode == "symbolic"


def test_balance_numeric_mode_on_untagged_input():
    t = np.geomspace(1e-4, 1e6, 60)
    A = young_table(t, t ** (7 / 6))
    B = young_table(t, t ** (28 / 3))
    rep = potential_young_transforms(A, B, 0.6, 2.5, 2).balance()
    assert rep.mode == "numeric"
    assert rep.satisfiable


def test_transform_range_rejections():
    with pytest.raises(InadmissibleParams):
        potential_young_transforms(young_power(2), young_power(4), 1.1, 1.8, 2)
    with pytest.raises(FinitenessFailure):
        potential_young_transforms(young_power(3.0), young_power(28 / 3), 0.6, 2.5, 2)
    with pytest.raises(FinitenessFailure):
        potential_young_transforms(young_power(7 / 6), young_power(1.0), 0.6, 2.5, 2)
    with pytest.raises(PRangeError):
        young_transforms(young_power(2), young_power(4), 2.5, 2)
    with pytest.raises(PRangeError):
        young_transforms(young_power(2), young_power(4), 1.0, 2)


# ---------------------------------------------------------------------------
# weights


def test_weight_transforms_power_closed_forms():
    wt = weight_transforms(weight_power(0.5), 2, 1.5)
    assert wt.dini
    assert wt.varpi(0.3) == pytest.approx(0.3**0.5 / 0.5)
    # mu(r) = r * (int_r^1 rho^(beta - n/p' - 1) drho)^(1/(p-1))
    c_exp = 0.5 - 2.0 / 3.0
    inner = (1 - 0.3**c_exp) / c_exp
    assert wt.mu(0.3) == pytest.approx(0.3 * inner ** (1 / 0.5))


def test_weight_transforms_numeric_route_matches_power():
    omega = WeightFunction(lambda r: np.asarray(r) ** 0.5, tag="custom")
    exact = weight_transforms(weight_power(0.5), 2, 1.5)
    numeric = weight_transforms(omega, 2, 1.5)
    assert numeric.dini == exact.dini
    for r in (0.1, 0.5, 0.9):
        assert numeric.mu(r) == pytest.approx(exact.mu(r), rel=1e-6)
        assert numeric.varpi(r) == pytest.approx(exact.varpi(r), rel=1e-6)


def test_weight_borderline_log_modulus():
    # beta = n/p' makes the inner integral logarithmic
    n, p = 2, 2.0
    wt = weight_transforms(weight_power(n / 2.0), n, p)
    r = 0.25
    assert wt.mu(r) == pytest.approx(r * math.log(1 / r), rel=1e-9)


def test_non_dini_weight():
    wt = weight_transforms(weight_one(), 2, 2.0)
    assert not wt.dini


# ---------------------------------------------------------------------------
# Campanato / Morrey scans


def test_campanato_affine_oracle():
    # mean oscillation of x1 over B_r is 4r/(3 pi): with omega(r) = r the
    # scan ratio is scale-free
    geom = GridGeometry((128, 128), (1.0, 1.0), (0.0, 0.0))
    f = GridField.from_function(geom, lambda x, y: x)
    scan = campanato_seminorm(f, weight_power(1.0))
    assert scan.value == pytest.approx(4 / (3 * math.pi), rel=0.05)
    assert scan.balls_scanned > 100


def test_campanato_constant_is_zero():
    f = GridField.constant(unit_grid(32), 3.0)
    assert campanato_seminorm(f, weight_one()).value == pytest.approx(0.0, abs=1e-14)


def test_campanato_coerces_q_for_nondecreasing_weights():
    geom = GridGeometry((64, 64), (1.0, 1.0), (0.0, 0.0))
    rng = np.random.default_rng(0)
    f = GridField(geom, rng.normal(size=(64, 64)))
    a = campanato_seminorm(f, weight_one(), q=3.0)
    b = campanato_seminorm(f, weight_one(), q=1.0)
    assert a.value == b.value


def test_morrey_uniform_field_oracle():
    geom = GridGeometry((128, 128), (1.0, 1.0), (0.0, 0.0))
    f = GridField.constant(geom, 1.0)
    q = 2.0
    scan = morrey_norm(f, weight_power(2.0 / q), q=q)
    assert scan.value == pytest.approx(math.sqrt(math.pi), rel=0.03)


def test_morrey_rejects_small_q():
    f = GridField.constant(unit_grid(32), 1.0)
    with pytest.raises(InadmissibleParams):
        morrey_norm(f, weight_one(), q=0.5)


# ---------------------------------------------------------------------------
# envelopes


def test_monotone_envelope_sandwich():
    rep = monotone_envelope([1.0, 0.8, 1.2, 1.1, 2.0], k=1.5)
    assert rep.quasi_increasing
    assert rep.max_ratio == pytest.approx(1.25)
    assert np.all(rep.psi >= [1.0, 0.8, 1.2, 1.1, 2.0])
    assert np.all(np.diff(rep.psi) >= 0)


def test_monotone_envelope_detects_violation():
    rep = monotone_envelope([1.0, 0.1, 1.0], k=2.0)
    assert not rep.quasi_increasing
    assert rep.violations == 1
    assert rep.max_ratio == pytest.approx(10.0)


def test_monotone_envelope_input_checks():
    with pytest.raises(InadmissibleParams):
        monotone_envelope([1.0, -1.0], k=2.0)
    with pytest.raises(InadmissibleParams):
        monotone_envelope([1.0, 2.0], k=0.5)
