import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wulff_lab.errors import (
    BallBelowResolution,
    BallOutsideDomain,
    InadmissibleParams,
    InsufficientRadii,
    ParameterRangeViolation,
    QuasiIncreasingViolation,
    ResidualTooLarge,
)
from wulff_lab.field_grid import GridField, GridGeometry
from wulff_lab.function_spaces import young_power, young_zygmund
from wulff_lab.inequality_lab import (
    FAMILY_VERSION,
    SampleRecord,
    VerificationReport,
    random_field,
    random_matrix_field,
    refinement_trace,
    verify_domination,
    verify_energy_inequalities,
    verify_hardy,
    verify_oscillation,
    verify_pointwise,
    verify_pointwise_osc,
    verify_potential_norm_maps,
    verify_regularity_exponents,
    verify_telescope,
)
from wulff_lab.inequality_lab import _PiecewisePhi, _check_quasi_increasing
from wulff_lab.plaplace_solver import manufacture


def unit_grid(cells=48):
    return GridGeometry((cells, cells), (1.0, 1.0), (0.0, 0.0))


def smooth_pair(p, cells=48):
    geom = unit_grid(cells)
    u = GridField.from_function(
        geom, lambda x, y: np.sin(np.pi * x) * np.sin(np.pi * y)
    )
    return u, manufacture(u, p)


# ---------------------------------------------------------------------------
# reports and field families


def test_report_shapes_and_version():
    rep = verify_telescope(random_field(unit_grid(32), 0), (0.5, 0.5), 0.1, 0.4)
    assert rep.family_version == FAMILY_VERSION
    d = rep.to_dict()
    assert d["theorem"] == "telescoping-means"
    assert len(d["samples"]) == 2 and isinstance(d["samples"][0], dict)
    rows = rep.csv_rows()
    assert len(rows) == 2 and rows[0][0] == "telescoping-means"
    assert float(rows[0][4]) == rep.samples[0].ratio


def test_random_field_determinism():
    geom = unit_grid(32)
    for kind in ("fourier", "bumps", "singular"):
        a = random_field(geom, 7, kind)
        b = random_field(geom, 7, kind)
        assert np.array_equal(a.values, b.values)
    assert not np.array_equal(
        random_field(geom, 7).values, random_field(geom, 8).values
    )


def test_random_field_families():
    geom = unit_grid(32)
    f = random_field(geom, 1, "fourier", nonneg=True)
    assert f.values.min() > 0
    s = random_field(geom, 2, "singular")
    assert np.all(np.isfinite(s.values)) and s.values.min() > 0
    with pytest.raises(ValueError):
        random_field(geom, 0, "perlin")
    m = random_matrix_field(geom, 3)
    assert m.kind == "matrix" and m.ncomp == 2


def test_refinement_trace_stability():
    def fake(c_star):
        rec = SampleRecord("s", c_star, 1.0, c_star)
        return VerificationReport("demo", {"cells": 0}, (rec,), c_star,
                                  (c_star,), True, ())

    ladder = {32: 1.0, 64: 1.05, 128: 0.95}
    rep = refinement_trace(lambda c: fake(ladder[c]), [32, 64, 128], band=0.25)
    assert rep.passed and rep.trace == (1.0, 1.05, 0.95)
    assert "refinement trace" in rep.notes[-1]

    drifting = {32: 1.0, 64: 0.5}
    rep2 = refinement_trace(lambda c: fake(drifting[c]), [32, 64], band=0.25)
    assert not rep2.passed


# ---------------------------------------------------------------------------
# telescoping means


def test_telescope_holds_on_smooth_field():
    f = random_field(unit_grid(64), 11, "fourier")
    rep = verify_telescope(f, (0.5, 0.5), 0.05, 0.4)
    assert rep.passed
    assert all(s.ratio <= 1.10 for s in rep.samples)
    assert {s.label for s in rep.samples} == {"means-of-f", "means-of-|f|"}


def test_telescope_trivial_and_constant():
    f = random_field(unit_grid(32), 0, "bumps")
    rep = verify_telescope(f, (0.5, 0.5), 0.2, 0.2)
    assert rep.passed and rep.c_star == 0.0
    const = GridField.constant(unit_grid(32), 4.0)
    rep2 = verify_telescope(const, (0.5, 0.5), 0.1, 0.4)
    assert rep2.passed and rep2.c_star == 0.0


def test_telescope_input_validation():
    f = random_field(unit_grid(32), 0)
    with pytest.raises(BallBelowResolution):
        verify_telescope(f, (0.5, 0.5), 0.01, 0.4)
    with pytest.raises(BallOutsideDomain):
        verify_telescope(f, (0.5, 0.5), 0.3, 0.2)
    with pytest.raises(BallOutsideDomain):
        verify_telescope(f, (0.9, 0.9), 0.1, 0.4)


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 10_000), frac=st.floats(0.15, 0.9))
def test_telescope_property_random_bumps(seed, frac):
    f = random_field(unit_grid(48), seed, "bumps", bumps=3)
    R = 0.4
    rep = verify_telescope(f, (0.5, 0.5), max(frac * R, 2.0 / 48 * 1.01), R)
    assert rep.passed


# ---------------------------------------------------------------------------
# Hardy inequalities


def test_hardy_fubini_identity():
    rep = verify_hardy("i", 1.0, 0.0, samples=12, seed=3)
    assert rep.passed
    for s in rep.samples:
        assert s.ratio == pytest.approx(1.0, abs=1e-10)
    assert rep.c_star == pytest.approx(1.0, abs=1e-10)


def test_hardy_beta_function_instance():
    rep = verify_hardy("ii-near", 0.5, -2.0, a=1.0, family="ones")
    (s,) = rep.samples
    assert s.lhs == pytest.approx((math.pi / 2.0) ** 2, rel=1e-9)
    assert s.rhs == pytest.approx(8.0, rel=1e-12)
    assert rep.c_star == pytest.approx((math.pi / 2.0) ** 2 / 8.0, rel=1e-9)
    assert rep.passed


def test_hardy_random_ensembles_hold():
    far = verify_hardy("ii-far", 0.5, -3.5, samples=10, seed=1)
    assert far.passed and math.isfinite(far.c_star)
    near = verify_hardy("ii-near", 0.5, -2.5, samples=10, seed=2)
    assert near.passed and math.isfinite(near.c_star)


def test_hardy_determinism():
    a = verify_hardy("ii-far", 0.5, -3.5, samples=6, seed=9)
    b = verify_hardy("ii-far", 0.5, -3.5, samples=6, seed=9)
    assert [s.ratio for s in a.samples] == [s.ratio for s in b.samples]


def test_hardy_parameter_ranges():
    with pytest.raises(ParameterRangeViolation):
        verify_hardy("i", 0.5, 0.0)
    with pytest.raises(ParameterRangeViolation):
        verify_hardy("ii-far", 1.2, -4.0)
    with pytest.raises(ParameterRangeViolation):
        verify_hardy("ii-far", 0.5, -2.9)  # needs alpha < -3
    with pytest.raises(ParameterRangeViolation):
        verify_hardy("ii-near", 0.5, -0.9)  # needs alpha < -1
    with pytest.raises(ParameterRangeViolation):
        verify_hardy("ii-near", 0.5, -2.0, a=-1.0)
    with pytest.raises(ParameterRangeViolation):
        verify_hardy("iii", 0.5, -2.0)
    with pytest.raises(ParameterRangeViolation):
        verify_hardy("ii-far", 0.5, -3.5, k=0.5)


def test_quasi_increasing_gate():
    phi = _PiecewisePhi(np.array([0.0, 1.0, 2.0, 3.0]),
                        np.array([2.0, 1.0, 0.4]))
    with pytest.raises(QuasiIncreasingViolation):
        _check_quasi_increasing(phi, 2.0)
    ok = _PiecewisePhi(np.array([0.0, 1.0, 2.0]), np.array([1.0, 0.6]))
    _check_quasi_increasing(ok, 2.0)
    interior_zero = _PiecewisePhi(np.array([0.0, 1.0, 2.0, 3.0]),
                                  np.array([1.0, 0.0, 1.0]))
    with pytest.raises(QuasiIncreasingViolation):
        _check_quasi_increasing(interior_zero, 2.0)


@settings(max_examples=8, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_hardy_fubini_property(seed):
    rep = verify_hardy("i", 1.0, 0.0, samples=3, seed=seed)
    assert rep.c_star == pytest.approx(1.0, abs=1e-10)


# ---------------------------------------------------------------------------
# pointwise estimates


def test_pointwise_report_and_scale_invariance():
    p = 1.5
    u, F = smooth_pair(p)
    pts = [(0.4, 0.55), (0.6, 0.35)]
    rep = verify_pointwise(u, F, p, 0.2, pts)
    assert rep.passed and math.isfinite(rep.c_star) and rep.c_star > 0
    u3 = u.with_values(3.0 * u.values)
    F3 = F.with_values(3.0 ** (p - 1.0) * F.values)
    rep3 = verify_pointwise(u3, F3, p, 0.2, pts)
    for a, b in zip(rep.samples, rep3.samples):
        assert b.ratio == pytest.approx(a.ratio, rel=1e-12)


def test_pointwise_osc_dominated_by_wulff():
    u, F = smooth_pair(2.0)
    rep = verify_pointwise_osc(u, F, 2.0, 0.2, [(0.5, 0.5), (0.3, 0.6)])
    assert rep.passed
    assert "ok" in rep.notes[0]


def test_residual_gate_rejects_mismatched_pairs():
    u, F = smooth_pair(2.0)
    # doubling F doubles div F, so u no longer solves the system (a constant
    # shift would be divergence-free and must NOT trip the gate)
    bad = F.with_values(2.0 * F.values)
    with pytest.raises(ResidualTooLarge) as e:
        verify_pointwise(u, bad, 2.0, 0.2, [(0.5, 0.5)])
    assert e.value.residual > 1e-5
    shifted = F.with_values(F.values + 0.5)
    rep = verify_pointwise(u, shifted, 2.0, 0.2, [(0.5, 0.5)])
    assert rep.passed


def test_pointwise_ball_must_fit():
    u, F = smooth_pair(2.0)
    with pytest.raises(BallOutsideDomain):
        verify_pointwise(u, F, 2.0, 0.3, [(0.9, 0.9)])


def test_oscillation_decay():
    u, F = smooth_pair(2.0, cells=64)
    rep = verify_oscillation(u, F, 2.0, (0.5, 0.5), 0.25)
    assert rep.passed and len(rep.samples) >= 3
    assert math.isfinite(rep.c_star)


def test_oscillation_radii_validation():
    u, F = smooth_pair(2.0)
    with pytest.raises(InsufficientRadii):
        verify_oscillation(u, F, 2.0, (0.5, 0.5), 0.01)
    with pytest.raises(BallBelowResolution):
        verify_oscillation(u, F, 2.0, (0.5, 0.5), 0.25, radii=[0.5])


def test_energy_inequalities():
    u, F = smooth_pair(2.0)
    rep = verify_energy_inequalities(u, F, 2.0, (0.5, 0.5), 0.3)
    assert rep.passed and len(rep.samples) == 3
    assert all(s.rhs > 0 for s in rep.samples)
    labels = {s.label for s in rep.samples}
    assert "caccioppoli" in " ".join(labels)
    with pytest.raises(ParameterRangeViolation):
        verify_energy_inequalities(u, F, 2.0, (0.5, 0.5), 0.3, q=0.5)


# ---------------------------------------------------------------------------
# potential domination and norm maps


def test_domination_small_ensemble():
    rep = verify_domination(unit_grid(48), 0.5, 3.0, samples=4, seed=0)
    assert rep.passed and math.isfinite(rep.c_star) and rep.c_star > 0
    assert rep.params["alpha"] == 0.5 and rep.params["samples"] == 4


def test_domination_threads_equivalence():
    a = verify_domination(unit_grid(32), 0.5, 3.0, samples=3, seed=1, threads=1)
    b = verify_domination(unit_grid(32), 0.5, 3.0, samples=3, seed=1, threads=2)
    assert [s.ratio for s in a.samples] == [s.ratio for s in b.samples]


def test_domination_rejects_supercritical():
    with pytest.raises(InadmissibleParams):
        verify_domination(unit_grid(32), 1.5, 2.0)


def test_norm_maps_run_and_pass():
    geom = unit_grid(32)
    a1 = verify_potential_norm_maps("A-i", 0.5, 3.0, geom, sigma=1.2,
                                    rho=2.0, samples=3, seed=0)
    assert a1.passed and math.isfinite(a1.c_star)
    a3 = verify_potential_norm_maps("A-iii", 0.6, 2.5, geom, rho=1.0,
                                    samples=3, seed=0)
    assert a3.passed and math.isfinite(a3.c_star)
    a4 = verify_potential_norm_maps("A-iv", 0.6, 2.5, geom, rho=0.5,
                                    samples=3, seed=0)
    assert a4.passed and math.isfinite(a4.c_star)
    b = verify_potential_norm_maps("B", 0.6, 2.5, geom,
                                   A=young_power(7 / 6), B=young_power(28 / 3),
                                   samples=2, seed=0)
    assert b.passed and math.isfinite(b.c_star)
    assert "balance holds" in b.notes[0]


def test_norm_maps_admissibility():
    geom = unit_grid(32)
    with pytest.raises(InadmissibleParams):
        verify_potential_norm_maps("A-i", 0.5, 3.0, geom, sigma=3.0)
    with pytest.raises(InadmissibleParams):
        verify_potential_norm_maps("A-iii", 0.6, 2.5, geom, rho=0.5)
    with pytest.raises(InadmissibleParams):
        verify_potential_norm_maps("A-iv", 0.6, 2.5, geom, rho=1.0)
    with pytest.raises(InadmissibleParams):
        verify_potential_norm_maps("B", 0.6, 2.5, geom)
    with pytest.raises(InadmissibleParams):
        verify_potential_norm_maps("B", 0.6, 2.5, geom,
                                   A=young_power(7 / 6),
                                   B=young_zygmund(28 / 3, 1.0))
    with pytest.raises(InadmissibleParams):
        verify_potential_norm_maps("A-ii", 0.5, 3.0, geom)
    with pytest.raises(InadmissibleParams):
        verify_potential_norm_maps("A-i", 1.5, 2.0, geom, sigma=1.2)


# ---------------------------------------------------------------------------
# regularity exponents


def test_regularity_holder_fit():
    rep = verify_regularity_exponents("holder", 2.0, q=4.0, cells=128)
    assert rep.passed
    assert rep.params["kappa"] == pytest.approx(0.5)
    assert abs(rep.params["slope"] - 0.5) <= rep.params["band"]


def test_regularity_parameter_ranges():
    with pytest.raises(ParameterRangeViolation):
        verify_regularity_exponents("holder", 2.0, q=1.5)
    with pytest.raises(ParameterRangeViolation):
        verify_regularity_exponents("bmo", 2.5)
    with pytest.raises(ParameterRangeViolation):
        verify_regularity_exponents("lorentz", 1.5, q=3.0)
    with pytest.raises(ParameterRangeViolation):
        verify_regularity_exponents("lipschitz", 2.0, beta=-0.1)
    with pytest.raises(ParameterRangeViolation):
        verify_regularity_exponents("sobolev", 2.0)
