import random

import pytest

from randomgen import random_form
from vardescent.bicomplex import Chart, LocalForm, format_form, parse_form, parse_form_sum, raw_differential
from vardescent.errors import DegreeError, JetOrderError, MixedChartError
from vardescent.symexpr import JetExpr, parse_expr

C1 = Chart(0, ("t",))
C2 = Chart(0, ("x", "y"), jet_order=6)
C1_HIGH = Chart(0, ("t",), jet_order=6)


def F(text, chart=C1):
    return parse_form(text, chart)


def test_graded_sign_and_nilpotency():
    th, dt = LocalForm.theta(C1, "u"), LocalForm.dx(C1, "t")
    assert th.wedge(dt) == -dt.wedge(th)
    assert (LocalForm.scalar(C1, parse_expr("u_t", C1.scope())) * 1).wedge(th).wedge(th).is_zero()
    assert F("u_t*theta(u,[])^theta(u,[])").is_zero()


def test_wedge_properties_random():
    rng = random.Random(4)
    for _ in range(30):
        ps = [rng.randint(0, 2) for _ in range(3)]
        qs = [rng.randint(0, 1) for _ in range(3)]
        if sum(qs) > 2:
            continue
        a, b, c = (random_form(rng, C2, p, q) for p, q in zip(ps, qs))
        assert a.wedge(b).wedge(c) == a.wedge(b.wedge(c))
        sign = -1 if (a.degree * b.degree) % 2 else 1
        assert a.wedge(b) == b.wedge(a) * sign
        assert a.wedge(b).bidegree == (a.p + b.p, a.q + b.q)


def test_wedge_rejects_mixed_charts_and_overflow():
    other = Chart(1, ("t",))
    with pytest.raises(MixedChartError):
        LocalForm.dx(C1, "t").wedge(LocalForm.theta(other, "u"))
    with pytest.raises(DegreeError):
        LocalForm(C1, 0, 2)


def test_d_h_examples():
    assert LocalForm.scalar(C1, parse_expr("u", C1.scope())).d_h() == F("u_t*dx(t)")
    assert F("1/2*u_t^2*dx(t)").d_h().is_zero()
    # contact generators: d_h(theta) = -dx ^ theta_t = theta_t ^ dx
    assert LocalForm.theta(C1, "u").d_h() == F("theta(u,[t])^dx(t)")


def test_d_v_examples():
    assert F("1/2*u_t^2*dx(t)").d_v() == F("u_t*theta(u,[t])^dx(t)")
    assert F("t*u_t*dx(t)").d_v() == F("t*theta(u,[t])^dx(t)")
    assert LocalForm.theta(C1, "u").d_v().is_zero()


def test_differentials_square_to_zero_and_commute_random():
    rng = random.Random(12)
    for chart in (C1_HIGH, C2):
        for _ in range(50):
            p = rng.randint(0, 2)
            q = rng.randint(0, chart.n)
            w = random_form(rng, chart, p, q, max_order=3)
            assert w.d_h().d_h().is_zero()
            assert w.d_v().d_v().is_zero()
            assert (w.d_v().d_h() - w.d_h().d_v()).is_zero()
            assert w.d_h().bidegree == (p, q + 1) and w.d_v().bidegree == (p + 1, q)


def test_d_h_respects_cap():
    with pytest.raises(JetOrderError):
        LocalForm.scalar(C1, parse_expr("u_tttt", C1.scope())).d_h()
    with pytest.raises(JetOrderError):
        LocalForm.theta(C1, "u", ("t",) * 4).d_h()


def test_top_degree_d_h_is_formal_zero():
    top = F("u*dx(t)")
    z = top.d_h()
    assert z.is_zero() and z.q == 2


def test_raw_differential_re_expands_in_contact_basis():
    du = raw_differential(C1, "u")
    assert str(du) == str(parse_form_sum("theta(u,[]) + u_t*dx(t)", C1))
    # du ^ dt keeps only the contact part
    assert F("du(u,[])^dx(t)") == F("theta(u,[])^dx(t)")
    again = parse_form_sum(str(parse_form_sum("du(u,[t])^du(u,[])", C1)), C1)
    assert str(again) == str(parse_form_sum("du(u,[t])^du(u,[])", C1))


def test_format_parse_roundtrip_random():
    rng = random.Random(8)
    for _ in range(30):
        w = random_form(rng, C2, rng.randint(0, 2), rng.randint(0, 2))
        assert parse_form(format_form(w), C2, w.bidegree) == w


def test_parse_form_with_fixed_bidegree():
    assert parse_form("0", C1, (0, 1)).bidegree == (0, 1)
    with pytest.raises(DegreeError):
        parse_form("u*dx(t)", C1, (1, 1))
    with pytest.raises(DegreeError):
        parse_form("u*dx(t) + theta(u,[])", C1)


def test_contact_factors_and_scalar():
    w = F("u_t*theta(u,[t])^dx(t) + theta(u,[])^dx(t)")
    assert {str(j) for j in w.contact_factors()} == {"u", "u_t"}
    assert LocalForm.scalar(C1, 3).as_scalar() == JetExpr(3)
    with pytest.raises(DegreeError):
        w.as_scalar()
