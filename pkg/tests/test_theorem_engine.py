from fractions import Fraction

import pytest

from vardescent.bicomplex import Chart, LocalForm, parse_form
from vardescent.cech import (
    CECH, DELIGNE, Cochain, Cover, LagrangianCocycle, Transition, verify_lagrangian_cocycle,
)
from vardescent.errors import NotASolution, SourceGluingFailure
from vardescent.problem import fixture_path, load_problem
from vardescent.symexpr import parse_expr
from vardescent.theorem_engine import (
    CartanCochain, CurrentCochain, FieldSolutionSample, on_shell_check, run_theorem1, sign_audit,
    universal_current, verify_prop1,
)
from vardescent.variational import source_decompose

CORPUS = ("theta1", "poisson2", "cyl2", "synth2", "torus2")


def load(name):
    return load_problem(fixture_path(name))


@pytest.fixture(scope="module")
def theta1():
    p = load("theta1")
    omega = p.lagrangian_cocycle()
    return p, omega, run_theorem1(omega)


def test_theta1_glued_source_and_cartan(theta1):
    p, omega, res = theta1
    c0 = p.cover.chart(0)
    assert res.report.passed, res.report.to_dict()
    for i, a in res.sources.items():
        assert a.form == parse_form("-(u_tt + 1)*theta(u,[])^dx(t)", p.cover.chart(i))
    assert res.report.get("source_gluing").passed
    assert res.cartan.gamma(0).value((0,)) == parse_form("(u_t + t)*theta(u,[])", c0)
    assert len(res.cartan.components) == 1
    assert res.report.get("variation_identity").passed
    assert res.report.get("top_variation").passed


def test_theta1_top_step_sign_is_reported(theta1):
    p, omega, res = theta1
    c0 = p.cover.chart(0)
    unsigned = res.report.get("top_variation_unsigned")
    assert unsigned.informational and not unsigned.passed
    # d_v omega^(1) - dCech gamma^(0) = -2 pi theta - 2 pi theta on the winding overlap
    assert unsigned.residual.value((0, 2)) == parse_form("-4*pi*theta(u,[])", c0)
    assert res.report.notes


def test_single_chart_reduces_to_source_decompose():
    chart = Chart(0, ("t",))
    cover = Cover([chart], [], {})
    w = LocalForm.volume(chart, parse_expr("1/2*u_t^2", chart.scope()))
    omega = LagrangianCocycle(cover, [Cochain(cover, 0, 0, 1, {(0,): w}), Cochain.zero(cover, 1, 0, 0)])
    res = run_theorem1(omega)
    assert res.report.passed
    dec = source_decompose(w)
    assert res.source == dec.source
    assert res.source.form == parse_form("-u_tt*theta(u,[])^dx(t)", chart)
    assert res.cartan.gamma(0).value((0,)) == dec.cartan == parse_form("u_t*theta(u,[])", chart)


def test_poisson2():
    p = load("poisson2")
    res = run_theorem1(p.lagrangian_cocycle())
    assert res.report.passed
    assert res.source.form == parse_form("-(u_xx + u_yy)*theta(u,[])^dx(x)^dx(y)", p.cover.chart(0))
    assert res.cartan.gamma(1).is_zero()


def test_cylinder_has_nonzero_second_cartan_component():
    p = load("cyl2")
    omega = p.lagrangian_cocycle()
    assert verify_lagrangian_cocycle(omega).passed
    res = run_theorem1(omega)
    assert res.report.passed
    assert res.cartan.gamma(1).value((0, 2)) == parse_form("2*pi*theta(u,[])", p.cover.chart(0))
    assert res.report.get("cartan_recursion[1]").passed


def test_universal_current_theta1(theta1):
    p, omega, res = theta1
    cur = universal_current(res.cartan)
    for i in range(3):
        assert cur.theta(0).value((i,)) == parse_form("-theta(u,[])^theta(u,[t])", p.cover.chart(i))
    assert universal_current(CartanCochain([Cochain.zero(p.cover, 0, 1, 0)])).theta(0).is_zero()


def test_prop1_theta1_sign(theta1):
    p, omega, res = theta1
    rep = verify_prop1(universal_current(res.cartan), res.source_cochain(), omega.period)
    assert rep.passed
    assert rep.results["sign"] == -1
    assert rep.get("current_total_differential").sign == -1


def test_prop1_zero_current_and_source():
    p = load("theta1")
    zero_current = CurrentCochain([Cochain.zero(p.cover, 0, 2, 0)])
    rep = verify_prop1(zero_current, Cochain.zero(p.cover, 0, 1, 1))
    assert rep.passed


@pytest.mark.parametrize("name", CORPUS)
def test_corpus_identities(name):
    p = load(name)
    omega = p.lagrangian_cocycle()
    res = run_theorem1(omega)
    assert res.report.passed, res.report.to_dict()
    cur = universal_current(res.cartan)
    rep = verify_prop1(cur, res.source_cochain(), omega.period)
    assert rep.passed and rep.results["sign"] == -1
    for i in range(len(p.charts)):
        assert rep.get(f"current_horizontal[{i}]").passed
    assert rep.get("current_total_differential").passed


def test_on_shell_theta1(theta1):
    p, omega, res = theta1
    rep = on_shell_check(p.cover, res.sources, p.solution)
    assert rep.passed
    checks = [c for c in rep.checks if c.name.startswith("current_on_shell")]
    assert checks and all(float(c.residual) < 1e-12 for c in checks)


def test_on_shell_rejects_zero_field(theta1):
    p, omega, res = theta1
    zero = {i: {"u": parse_expr("0", c.scope())} for i, c in enumerate(p.charts)}
    sample = FieldSolutionSample(zero, [], p.solution.domains, [], 11)
    with pytest.raises(NotASolution) as exc:
        on_shell_check(p.cover, res.sources, sample)
    assert exc.value.residual == pytest.approx(1.0)


def test_on_shell_poisson2_seams():
    p = load("poisson2")
    res = run_theorem1(p.lagrangian_cocycle())
    rep = on_shell_check(p.cover, res.sources, p.solution)
    seams = [c for c in rep.checks if c.name.startswith("seam_agreement")]
    assert seams and all(c.passed for c in seams)


def test_sign_audit_prefers_deligne(theta1):
    p, omega, res = theta1
    rep = sign_audit(omega, res)
    assert rep.passed
    assert rep.results["consistent_conventions"] == [DELIGNE]
    assert not rep.get(f"variation_identity[{CECH}]").passed


# -- negative controls ------------------------------------------------------------


def test_perturbed_density_breaks_source_gluing():
    p = load("theta1")
    c2 = p.cover.chart(2)
    dens = dict(p.densities.values)
    dens[(2,)] = dens[(2,)] + LocalForm.volume(c2, parse_expr("u^2", c2.scope()))
    omega = LagrangianCocycle(p.cover, [Cochain(p.cover, 0, 0, 1, dens), p.lagrangian_cocycle().omega(1)])
    assert not verify_lagrangian_cocycle(omega).passed
    with pytest.raises(SourceGluingFailure) as exc:
        run_theorem1(omega)
    assert str(exc.value.residual) != "0"
    lax = run_theorem1(omega, strict=False)
    assert not lax.report.get("source_gluing").passed


def test_perturbed_omega1_fails_verification():
    p = load("theta1")
    omega = p.lagrangian_cocycle()
    c0 = p.cover.chart(0)
    vals = dict(omega.omega(1).values)
    vals[(0, 1)] = LocalForm.scalar(c0, parse_expr("u_t", c0.scope()))
    bad = LagrangianCocycle(p.cover, [omega.omega(0), Cochain(p.cover, 1, 0, 0, vals)], {}, omega.period)
    rep = verify_lagrangian_cocycle(bad)
    assert not rep.get("descent[0]").passed
    assert str(rep.get("descent[0]").residual) != "0"
    assert not run_theorem1(bad, strict=False).report.passed


def test_perturbed_transition_fails_verification():
    p = load("theta1")
    omega = p.lagrangian_cocycle()
    t = p.cover.transition(0, 2)
    c0, c2 = t.source, t.target
    moved = Transition(c0, c2, {"t": parse_expr("t + 2*pi + 1/10", c0.scope())},
                       {"t": parse_expr("t - 2*pi - 1/10", c2.scope())}, t.shifts)
    cover = Cover(p.charts, [(0, 1), (1, 2), (0, 2)], {**p.cover.transitions, (0, 2): moved})
    comps = [Cochain(cover, q, 0, 1 - q, c.values) for q, c in enumerate(omega.components)]
    rep = verify_lagrangian_cocycle(LagrangianCocycle(cover, comps, {}, omega.period))
    bad = rep.get("descent[0]")
    assert not bad.passed
    assert bad.residual.value((0, 2)) == LocalForm.volume(c0, parse_expr("-1/10*u_t", c0.scope()))


def test_explicit_level_roundtrip():
    omega = load("synth2").lagrangian_cocycle()
    res = run_theorem1(omega)
    assert res.report.passed
    assert omega.resolved_level() == {(0, 1, 2): Fraction(1)}
