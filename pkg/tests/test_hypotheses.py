import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import decoupled
from impulsive_rnn.hypotheses import check_hypotheses, derive_constants, h3_quantity, h4_quantity
from impulsive_rnn.model import ImpulseFamily, ImpulseMap, NetworkSpec, TimeStructure


def hand_constants(a, B, C, Lf, Lg, ell, tb, p):
    """Scalar re-evaluation of the constants with explicit loops."""
    m = len(a)
    colB = [sum(abs(B[j][i]) for j in range(m)) for i in range(m)]
    colC = [sum(abs(C[j][i]) for j in range(m)) for i in range(m)]
    k1 = max(a[i] + Lf[i] * colB[i] for i in range(m))
    k2 = max(Lg[i] * colC[i] for i in range(m))
    mu = max(Lf[i] * colB[i] for i in range(m))
    grow = (1 + ell) ** p * math.exp(k1 * tb)
    h3 = ((k1 + 2 * k2) * tb + ell * p) * grow
    h4 = k2 * tb + (k1 * tb + ell * p) * (1 + k2 * tb) * grow
    return dict(k1=k1, k2=k2, mu=mu, h3=h3, h4=h4)


class TestDerivedConstants:
    def test_example1_matches_hand_formulas(self, ex1):
        dc = derive_constants(ex1.spec, ex1.ts, ex1.imp)
        s = ex1.spec
        want = hand_constants(s.a.tolist(), s.B.tolist(), s.C.tolist(), [0.1, 0.3], [0.2, 0.2],
                              0.025, 1.0, 1)
        for key in ("k1", "k2", "mu"):
            assert getattr(dc, key) == pytest.approx(want[key], rel=1e-14)
        assert dc.h3 == pytest.approx(want["h3"], rel=1e-14)
        assert dc.h4 == pytest.approx(want["h4"], rel=1e-14)
        assert dc.R_const == pytest.approx(1 / (1 - math.exp(-0.5)), rel=1e-14)
        lam = 1 / (1 - want["h4"])
        assert dc.lambda_ == pytest.approx(lam, rel=1e-12)
        assert dc.alpha1 == pytest.approx(dc.R_const * (dc.mu + lam * dc.k2 + 0.025), rel=1e-12)
        assert dc.alpha2 == pytest.approx(dc.R_const * (2.0 + 0 + 2 * 1 * 0.5), rel=1e-12)
        assert dc.h_bound == pytest.approx(dc.alpha2 / (1 - dc.alpha1), rel=1e-14)

    def test_example1_reference_values(self, ex1):
        dc = derive_constants(ex1.spec, ex1.ts, ex1.imp)
        expected = dict(k1=0.5001, k2=0.0046, lambda_=9.6421, mu=0.00015, gamma=0.5,
                         R_const=2.5415, alpha1=0.1766)
        for key, val in expected.items():
            assert abs(getattr(dc, key) - val) < 5e-4, key

    def test_decoupled_reduction(self):
        spec = decoupled([0.2, 0.1], 0.0)
        ts = TimeStructure.periodic([0.0], [0.5], 1.0)
        dc = derive_constants(spec, ts, ImpulseFamily.zero(2))
        assert dc.k1 == 0.2 and dc.k2 == 0.0 and dc.mu == 0.0
        assert dc.lambda_ == pytest.approx(1 / (1 - 0.2 * math.exp(0.2)), rel=1e-14)

    def test_example2_k1(self, ex2):
        dc = derive_constants(ex2.spec, ex2.ts, ex2.imp)
        assert dc.k1 == 35.0
        assert dc.lambda_ is None
        assert dc.alpha1 is None and dc.h_bound is None
        assert any("lambda undefined" in n for n in dc.notes)

    def test_omega_missing(self, ex1):
        ts = TimeStructure([0.0, 1.0, 2.0, 3.0], [0.5, 1.5, 2.5])
        dc = derive_constants(ex1.spec, ts, ex1.imp)
        assert dc.R_const is None and dc.alpha1 is None and dc.alpha2 is None

    def test_lambda_identity_and_lower_bound(self, ex1):
        dc = derive_constants(ex1.spec, ex1.ts, ex1.imp)
        assert dc.lambda_ * (1 - dc.h4) == pytest.approx(1.0, abs=1e-15)
        assert dc.lambda_ >= 1
        assert dc.k1 >= dc.gamma

    @settings(max_examples=60, deadline=None)
    @given(i=st.integers(0, 1), j=st.integers(0, 1), bump=st.floats(0.0, 0.5))
    def test_monotone_in_b(self, ex1, i, j, bump):
        s = ex1.spec
        B = s.B.copy()
        B[i, j] = B[i, j] + math.copysign(bump, B[i, j])
        s2 = NetworkSpec(s.a, B, s.C, s.d, s.f, s.g)
        d1 = derive_constants(s, ex1.ts, ex1.imp)
        d2 = derive_constants(s2, ex1.ts, ex1.imp)
        assert d2.k1 >= d1.k1 and d2.k4 >= d1.k4 and d2.mu >= d1.mu

    @settings(max_examples=60, deadline=None)
    @given(st.floats(0.0, 0.3), st.floats(0.0, 0.3))
    def test_monotone_in_ell(self, ex1, e1, e2):
        lo, hi = sorted((e1, e2))
        row = ex1.imp.maps[0]
        d_lo = derive_constants(ex1.spec, ex1.ts, ImpulseFamily.uniform(row, lo))
        d_hi = derive_constants(ex1.spec, ex1.ts, ImpulseFamily.uniform(row, hi))
        assert h3_quantity(d_hi) >= h3_quantity(d_lo)
        assert h4_quantity(d_hi) >= h4_quantity(d_lo)


class TestCheckHypotheses:
    def test_example1_all_pass(self, ex1):
        rep = check_hypotheses(ex1.spec, ex1.ts, ex1.imp)
        assert abs(rep["H3"].value - 0.9032) < 5e-4
        assert abs(rep["H4"].value - 0.8963) < 5e-4
        assert abs(rep["H5"].value - 0.4308) < 5e-4
        assert abs(rep["H7"].value - 0.1766) < 5e-4
        assert all(v for k, v in rep.flags.items() if v is not None)

    def test_example2_fails_h3(self, ex2):
        rep = check_hypotheses(ex2.spec, ex2.ts, ex2.imp)
        assert not rep["H3"].passed and rep["H3"].value > 1e10
        assert not rep.flags["existence_unique"]
        assert rep["H5"].value is None

    def test_zero_network(self):
        spec = decoupled([1.0], 0.0)
        ts = TimeStructure.periodic([0.0], [], 1.0)
        rep = check_hypotheses(spec, ts, ImpulseFamily.zero(1))
        assert rep["H3"].value == pytest.approx(math.e, rel=1e-14)
        assert not rep["H3"].passed
        assert rep["equilibrium-margin"].passed

    def test_margin_sign_agrees_with_pass(self, ex1, ex2, ex3):
        for doc in (ex1, ex2, ex3):
            rep = check_hypotheses(doc.spec, doc.ts, doc.imp, box=doc.box)
            for e in rep.entries:
                if e.margin is not None:
                    assert (e.margin > 0 or (e.margin == 0 and e.relation in ("<=", ">="))) == e.passed

    def test_condition_a(self, ex1, ex3):
        from impulsive_rnn.equilibrium import solve_equilibrium
        x3 = solve_equilibrium(ex3.spec).x_star
        rep = check_hypotheses(ex3.spec, ex3.ts, ex3.imp, x_star=x3, box=ex3.box)
        assert rep.flags["condition_A"] is True
        x1 = solve_equilibrium(ex1.spec).x_star
        rep = check_hypotheses(ex1.spec, ex1.ts, ex1.imp, x_star=x1)
        assert rep.flags["condition_A"] is False

    def test_quadratic_without_box_fails_h2(self, ex3):
        rep = check_hypotheses(ex3.spec, ex3.ts, ex3.imp)
        assert not rep["H2"].passed
        assert check_hypotheses(ex3.spec, ex3.ts, ex3.imp, box=ex3.box)["H2"].passed

    def test_h3_implied_reported(self, ex1):
        rep = check_hypotheses(ex1.spec, ex1.ts, ex1.imp)
        assert rep["H3-implied"].value == pytest.approx(0.50475 + 0.025, rel=1e-12)

    def test_deterministic(self, ex1):
        a = check_hypotheses(ex1.spec, ex1.ts, ex1.imp).to_dict()
        b = check_hypotheses(ex1.spec, ex1.ts, ex1.imp).to_dict()
        assert a == b

    def test_h6_requires_periodic_time(self, ex1):
        ts = TimeStructure([0.0, 1.0, 2.0], [0.5, 1.5])
        assert not check_hypotheses(ex1.spec, ts, ex1.imp)["H6"].passed
