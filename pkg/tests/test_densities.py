import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles as orc
from taubergames.densities import (
    BUILTIN_FAMILIES,
    DEFAULT_R_GRID,
    CesaroDensity,
    Density,
    ExponentialDensity,
    GeneratedDensity,
    PatchedDensity,
    ShiftedDensity,
    TabulatedDensity,
    cesaro_family,
    escape_diagnostic,
    exponential_family,
    fixed_bump_family,
    flatness_diagnostic,
    l1_distance,
    linear_profile_family,
    load_family,
    oscillating_family,
    parse_family_spec,
    regularity_diagnostic,
    self_similar_decompose,
)
from taubergames.errors import (
    DomainError,
    ModelFormatError,
    UnreachableQuantileError,
    UnsupportedFamilyError,
)

SMOOTH_FAMILIES = ("cesaro", "exp", "gen-linear")


def make(fam_name, lam):
    return BUILTIN_FAMILIES[fam_name]().make(lam)


# -- mass and evaluation -------------------------------------------------------


@pytest.mark.parametrize("fam_name,lam", [
    ("cesaro", 0.7), ("exp", 0.3), ("gen-flat", 0.5),
    ("gen-linear", 0.2), ("gen-oscillating", 0.5), ("bump", 0.25),
])
def test_mass_matches_quadrature(fam_name, lam):
    d = make(fam_name, lam)
    for T in (0.3, 1.1, 2.7, 6.0):
        assert d.mass(T) == pytest.approx(orc.quad_mass(d, T), abs=1e-9)


def test_total_mass_is_one_for_probability_families():
    for fam_name in SMOOTH_FAMILIES + ("gen-oscillating", "bump"):
        d = make(fam_name, 0.2)
        assert d.total_mass == pytest.approx(1.0, abs=1e-12)
        big = 1e9 if d.cutoff is None else d.cutoff
        assert d.mass(big) == pytest.approx(1.0, abs=1e-9)


def test_box_density_closed_support():
    d = CesaroDensity(0.5)
    assert d.eval(2.0) == 0.5  # support closed at the right endpoint
    assert d.eval(2.0 + 1e-9) == 0.0
    assert d.mass(2.0) == pytest.approx(1.0)


def test_eval_rejects_negative_time():
    with pytest.raises(DomainError):
        ExponentialDensity(1.0).eval(-0.1)


def test_step_weights_sum_to_covered_mass():
    d = ExponentialDensity(0.4)
    w = d.step_weights(0.5, 30)
    assert float(np.sum(w)) == pytest.approx(d.mass(15.0), abs=1e-12)
    assert np.all(w >= 0)


# -- quantiles -------------------------------------------------------------------


@pytest.mark.parametrize("fam_name", SMOOTH_FAMILIES)
@pytest.mark.parametrize("lam", [1.0, 0.1, 0.01])
@pytest.mark.parametrize("r", [0.1, 0.5, 0.9])
def test_quantile_inverts_mass(fam_name, lam, r):
    d = make(fam_name, lam)
    q = d.quantile(r)
    assert d.mass(q) == pytest.approx(r, abs=1e-8)
    assert q == pytest.approx(orc.bisect_quantile(d.mass, r),
                              rel=1e-7, abs=1e-10)


def test_quantile_closed_forms():
    assert CesaroDensity(0.25).quantile(0.5) == pytest.approx(2.0)
    assert ExponentialDensity(2.0).quantile(0.5) == pytest.approx(
        math.log(2.0) / 2.0)


def test_quantile_lands_on_left_edge_of_flat_stretch():
    # zero-level middle cell: mass is flat on [1, 2]
    d = TabulatedDensity([0.0, 1.0, 2.0, 3.0], [0.5, 0.0, 0.5])
    assert d.quantile(0.5) == pytest.approx(1.0, abs=1e-9)
    assert d.quantile(0.25) == pytest.approx(0.5, abs=1e-9)
    assert d.quantile(0.75) == pytest.approx(2.5, abs=1e-9)


def test_quantile_domain_errors():
    d = ExponentialDensity(1.0)
    for bad in (0.0, 1.0, -0.2, 1.7):
        with pytest.raises(DomainError):
            d.quantile(bad)


def test_unreachable_quantile_raises():
    base = ExponentialDensity(1.0)
    tail = base.shift_by_quantile(0.5)  # total mass 0.5
    assert tail.total_mass == pytest.approx(0.5)
    with pytest.raises(UnreachableQuantileError):
        tail.quantile(0.9)


@given(r1=st.floats(0.01, 0.98), r2=st.floats(0.01, 0.98))
@settings(max_examples=60, deadline=None)
def test_quantile_monotone_in_level(r1, r2):
    d = ExponentialDensity(0.7)
    lo, hi = sorted((r1, r2))
    assert d.quantile(lo) <= d.quantile(hi) + 1e-12


# -- log variation ----------------------------------------------------------------


def test_box_variation_exactly_zero():
    d = CesaroDensity(0.3)
    for r in (0.1, 0.5, 0.9):
        assert d.log_total_variation(0.0, d.quantile(r)) == 0.0


def test_box_variation_infinite_past_cutoff():
    d = CesaroDensity(1.0)
    assert math.isinf(d.log_total_variation(0.5, 1.5))


@pytest.mark.parametrize("lam", [1.0, 0.1, 0.01])
@pytest.mark.parametrize("r", [0.1, 0.5, 0.9])
def test_exp_variation_closed_form(lam, r):
    d = ExponentialDensity(lam)
    v = d.log_total_variation(0.0, d.quantile(r))
    assert v == pytest.approx(-math.log1p(-r), abs=1e-9)


def test_exp_variation_matches_grid_oracle():
    d = ExponentialDensity(0.6)
    v = d.log_total_variation(0.2, 3.1)
    assert v == pytest.approx(orc.grid_log_variation(d, 0.2, 3.1), abs=1e-4)


def test_generated_variation_matches_grid_oracle():
    d = oscillating_family().make(0.25)
    v = d.log_total_variation(0.3, 2.6)
    assert v > 1.0  # genuinely oscillating on this window
    assert v == pytest.approx(orc.grid_log_variation(d, 0.3, 2.6), rel=1e-3)


def test_tabulated_variation_is_jump_sum():
    d = TabulatedDensity([0.0, 1.0, 2.0], [0.25, 0.75])
    assert d.log_total_variation(0.0, 1.9) == pytest.approx(math.log(3.0))
    # interval [a, b) not touching the jump has zero variation
    assert d.log_total_variation(0.0, 1.0) == 0.0


def test_variation_infinite_on_zero_level():
    d = TabulatedDensity([0.0, 1.0, 2.0, 3.0], [0.5, 0.0, 0.5])
    assert math.isinf(d.log_total_variation(0.5, 2.5))


@given(st.floats(0.1, 2.0), st.floats(0.05, 1.5), st.floats(0.05, 1.5))
@settings(max_examples=40, deadline=None)
def test_variation_additive_under_splitting(a, d1, d2):
    rho = oscillating_family().make(0.2)
    b, c = a + d1, a + d1 + d2
    whole = rho.log_total_variation(a, c)
    split = (rho.log_total_variation(a, b) + rho.log_total_variation(b, c))
    assert whole <= split + 1e-9
    assert whole == pytest.approx(split, abs=1e-9)


# -- shifted tails ------------------------------------------------------------------


@pytest.mark.parametrize("fam_name", SMOOTH_FAMILIES)
@pytest.mark.parametrize("r", [0.1, 0.5, 0.9])
def test_shift_identities_pointwise(fam_name, r):
    d = make(fam_name, 0.2)
    q = d.quantile(r)
    tail = d.shift_by_quantile(r)
    horizon = 5.0 / 0.2 if d.cutoff is None else d.cutoff - q
    ts = np.linspace(0.0, max(horizon, 1e-6) * 0.999, 1000)
    np.testing.assert_allclose(tail.eval_grid(ts), d.eval_grid(ts + q),
                               atol=1e-9)
    np.testing.assert_allclose(tail.mass_grid(ts),
                               d.mass_grid(ts + q) - d.mass(q), atol=1e-9)
    assert tail.total_mass == pytest.approx(1.0 - r, abs=1e-8)


def test_shifted_tail_never_renormalized():
    tail = ExponentialDensity(1.0).shift_by_quantile(0.75)
    assert tail.total_mass == pytest.approx(0.25, abs=1e-12)
    assert tail.eval(0.0) == pytest.approx(0.25 * 1.0, rel=1e-9)


@pytest.mark.parametrize("fam_name", ["cesaro", "exp", "gen-flat", "gen-linear"])
@pytest.mark.parametrize("lam,r", [(0.5, 0.25), (0.05, 0.5), (0.01, 0.9)])
def test_self_similar_decomposition(fam_name, lam, r):
    fam = BUILTIN_FAMILIES[fam_name]()
    dec = self_similar_decompose(fam, lam, r)
    assert dec.ok
    assert dec.residual <= 1e-8


def test_decomposition_rates():
    dec = self_similar_decompose(cesaro_family(), 0.2, 0.5)
    assert dec.nu == pytest.approx(0.4)  # box tail is a faster box
    dec = self_similar_decompose(exponential_family(), 0.2, 0.5)
    assert dec.nu == pytest.approx(0.2)  # memoryless


def test_decompose_rejects_non_self_similar():
    with pytest.raises(UnsupportedFamilyError):
        self_similar_decompose(fixed_bump_family(), 0.2, 0.5)


# -- patched densities ----------------------------------------------------------


def test_patched_keeps_cell_masses():
    base = ExponentialDensity(0.8)
    bounds = [0.0, 1.0, 2.5, 4.0]
    masses = np.diff(base.mass_grid(np.asarray(bounds)))
    levels = [float(m / w) for m, w in zip(masses, np.diff(bounds))]
    patched = PatchedDensity(base, bounds, [True, False, True], levels)
    got = np.diff(patched.mass_grid(np.asarray(bounds)))
    np.testing.assert_allclose(got, masses, atol=1e-12)
    # kept cell evaluates like the base, replaced cell at its mean level
    assert patched.eval(1.7) == base.eval(1.7)
    assert patched.eval(0.5) == pytest.approx(levels[0])
    assert patched.eval(4.2) == 0.0  # dropped tail


def test_patched_requires_partition_from_zero():
    base = ExponentialDensity(1.0)
    with pytest.raises(DomainError):
        PatchedDensity(base, [0.5, 1.0], [True], [1.0])


def test_l1_distance_between_boxes():
    a, b = CesaroDensity(1.0), CesaroDensity(2.0)
    assert l1_distance(a, b, 0.0, 1.0) == pytest.approx(1.0, abs=1e-6)
    assert l1_distance(a, a, 0.0, 1.0) == pytest.approx(0.0, abs=1e-12)


# -- family diagnostics -----------------------------------------------------------


def test_default_r_grid_tail_below_flat_tolerance():
    # the innermost mass level must classify the memoryless family as flat
    assert -math.log1p(-DEFAULT_R_GRID[-1]) < 1e-2


@pytest.mark.parametrize("fam_name,expect", [
    ("cesaro", True), ("exp", True), ("gen-flat", True),
    ("gen-linear", True), ("gen-oscillating", False),
])
def test_flatness_verdicts(fam_name, expect):
    rep = flatness_diagnostic(BUILTIN_FAMILIES[fam_name]())
    assert rep.flat is expect, rep.reason


def test_flatness_report_shape():
    rep = flatness_diagnostic(exponential_family())
    assert rep.table.shape == (len(rep.r_grid), len(rep.lam_grid))
    # variation at level r is rate-free for the memoryless family
    for i, r in enumerate(rep.r_grid):
        np.testing.assert_allclose(rep.table[i], -math.log1p(-r), atol=1e-9)
    assert rep.sensitivity == pytest.approx(0.0, abs=1e-9)


@pytest.mark.parametrize("fam_name,expect", [
    ("cesaro", True), ("exp", True), ("gen-linear", True),
    ("gen-oscillating", False),
])
def test_regularity_verdicts(fam_name, expect):
    rep = regularity_diagnostic(BUILTIN_FAMILIES[fam_name](), 0.5)
    assert rep.regular is expect, rep.reason


def test_regularity_limsup_value():
    rep = regularity_diagnostic(exponential_family(), 0.5)
    assert rep.limsup_estimate == pytest.approx(math.log(2.0), abs=1e-6)
    rep = regularity_diagnostic(linear_profile_family(), 0.5)
    assert rep.limsup_estimate == pytest.approx(0.5 * math.log(2.0), abs=1e-3)


@pytest.mark.parametrize("fam_name,expect", [
    ("cesaro", True), ("exp", True), ("bump", False),
])
def test_escape_verdicts(fam_name, expect):
    rep = escape_diagnostic(BUILTIN_FAMILIES[fam_name]())
    assert rep.escapes is expect, rep.reason
    if not expect:
        assert rep.witness_T is not None


def test_linear_profile_quantile_asymptote():
    # for profile 1 + s the r-quantile approaches (1+T) * (1 - sqrt(1-r))
    fam = linear_profile_family()
    lam = 1e-4
    d = fam.make(lam)
    T = 1.0 / lam
    expect = (1.0 + T) * (1.0 - math.sqrt(1.0 - 0.5))
    assert d.quantile(0.5) == pytest.approx(expect, rel=1e-3)


def test_linear_profile_initial_rate_doubles():
    # density at zero approaches twice the rate: the averaging hypothesis
    # rho(0) ~ rate fails for this family even though it is flat and regular
    fam = linear_profile_family()
    ratios = [fam.make(lam).eval(0.0) / lam for lam in (1e-2, 1e-3, 1e-4)]
    assert ratios[-1] == pytest.approx(2.0, rel=1e-3)


# -- family loading -----------------------------------------------------------------


def test_load_family_builtin_names():
    for name in BUILTIN_FAMILIES:
        fam = load_family(name)
        assert fam.make(0.3).total_mass > 0


def test_load_family_unknown():
    with pytest.raises(UnsupportedFamilyError):
        load_family("no-such-family")


def test_parse_family_spec_generated(tmp_path):
    text = """
# staircase profile
kind generated
name stairs

[generator]
0    1.0
1.0  2.0
2.0  0.5
"""
    path = tmp_path / "stairs.fam"
    path.write_text(text)
    fam = load_family(str(path))
    assert fam.name == "stairs"
    d = fam.make(0.5)
    assert d.total_mass == pytest.approx(1.0, abs=1e-9)
    assert d.mass(2.0) == pytest.approx(orc.quad_mass(d, 2.0), abs=1e-9)


def test_parse_family_spec_bad_kind_reports_line():
    with pytest.raises(ModelFormatError) as err:
        parse_family_spec("kind nonsense\n", path="fam.txt")
    assert "fam.txt" in str(err.value)
    assert "1" in str(err.value)


def test_generated_profile_requires_positive_values():
    with pytest.raises(DomainError):
        GeneratedDensity([0.0, 1.0], [1.0, 0.0], lam=1.0)


@given(st.lists(st.floats(0.05, 3.0), min_size=2, max_size=6),
       st.floats(0.1, 0.9))
@settings(max_examples=40, deadline=None)
def test_tabulated_quantile_inverts(levels, r):
    bp = [float(i) for i in range(len(levels) + 1)]
    total = sum(levels)
    d = TabulatedDensity(bp, [v / total for v in levels])
    q = d.quantile(r)
    assert d.mass(q) == pytest.approx(r, abs=1e-9)
    assert d.mass(q - 1e-9) < r + 1e-9
