import math
import random

import gmpy2
import mpmath
import pytest
from gmpy2 import mpc, mpfr
from hypothesis import given
from hypothesis import strategies as st

import oracles
from stabenv.errors import PoleAtArgument, UnassignedSymbol
from stabenv.theta_core import (
    EllipticParams,
    Monomial,
    SymbolTable,
    VirtualChar,
    complex_to_json,
    eval_monomial,
    format_mpfr,
    four_term_sides,
    inversion_residual,
    phi,
    phi_quasiperiod_residual,
    quasiperiod_residual,
    relative_residual,
    theta,
    theta_nonzero,
    theta_of_char,
    three_term_sides,
    to_mpc,
)

# frozen from tests/oracles.py at 320 bits, x = 0.3 and q = 0.1 exactly
THETA_AT_03 = mpmath.mpf("-0.79329380756221230547377593966223365997610996517990007229119124407049117671625709682")
PHI_AT_03_07 = mpmath.mpf("-3.77356643477796045734329233284916645464872175751640936486472323438167687236029677474")

re_part = st.floats(-0.6, 0.6, allow_nan=False)
im_part = st.floats(-3.0, 3.0, allow_nan=False)
logs = st.builds(complex, re_part, im_part)
# keep clear of the zero of theta at x = 1, where a relative residual is meaningless
nonzero_logs = logs.filter(lambda w: abs(w) > 0.05)
# 1e-80 truncation so comparisons at 1e-70 test the arithmetic, not the product cutoff
TIGHT = EllipticParams(("0.1", "0"), 256, 1e-80)
nomes = st.builds(lambda r, a: (r * math.cos(a), r * math.sin(a)),
                  st.floats(0.01, 0.5), st.floats(-math.pi, math.pi))


def _mp(value):
    return mpmath.mpc(str(value.real), str(value.imag))


def exact_log(text, ell):
    with ell.context():
        return mpc(gmpy2.log(mpfr(text)))


class TestMonomials:
    def test_empty_monomial_is_log_one(self):
        assert eval_monomial(Monomial(), SymbolTable()) == 0

    def test_linearity(self):
        tbl = SymbolTable().assign("u1", complex(0.2, 0.1)).assign("hbar", 0.5)
        m = Monomial({"u1": 1, "hbar": -1})
        assert eval_monomial(m, tbl) == to_mpc(complex(0.2, 0.1)) - to_mpc(0.5)

    def test_half_exponent(self):
        tbl = SymbolTable().assign("q", -1.0)
        assert eval_monomial(Monomial({"q": "1/2"}), tbl) == -0.5

    def test_unassigned_symbol(self):
        with pytest.raises(UnassignedSymbol):
            eval_monomial(Monomial({"z": 1}), SymbolTable())

    def test_quarter_exponent_rejected(self):
        with pytest.raises(ValueError):
            Monomial({"z": "1/4"})

    def test_group_laws(self):
        a, b = Monomial({"u1": 1, "hbar": 2}), Monomial({"u1": -1, "z": 1})
        assert (a * b).exponents == {"hbar": 2, "z": 1}
        assert (a * a.inverse()).is_identity()


class TestEllipticParams:
    def test_refuses_q_near_unit_circle(self):
        with pytest.raises(ValueError):
            EllipticParams(0.9995)

    def test_truncation_index(self):
        p = EllipticParams(0.1, 256, 1e-60)
        assert 0.1 ** p.base_terms() < 1e-60

    def test_string_q_is_exact(self, ell):
        with ell.context():
            assert ell.q_value() == mpc(mpfr("0.1"), 0)


class TestTheta:
    def test_zero_at_one(self, ell):
        assert theta(0, ell) == 0

    def test_frozen_value_at_03(self):
        val = theta(exact_log("0.3", TIGHT), TIGHT)
        assert abs(mpmath.mpf(str(val.real)) - THETA_AT_03) < mpmath.mpf("1e-70")
        assert abs(val.imag) < 1e-70

    def test_default_truncation_error_bounded(self, ell):
        val = theta(exact_log("0.3", ell), ell)
        assert abs(mpmath.mpf(str(val.real)) - THETA_AT_03) < mpmath.mpf("1e-58")

    def test_against_product_oracle_live(self):
        ell = TIGHT
        rng = random.Random(5)
        for _ in range(10):
            w = complex(rng.uniform(-0.6, 0.6), rng.uniform(-3, 3))
            with ell.context():
                mine = theta(w, ell)
            ref = oracles.theta_from_log(w, mpmath.mpf("0.1"))
            assert abs(_mp(mine) - ref) <= mpmath.mpf("1e-70") * abs(ref)

    def test_against_jacobi_series(self):
        ell = TIGHT
        rng = random.Random(6)
        for _ in range(10):
            w = complex(rng.uniform(-0.6, 0.6), rng.uniform(-3, 3))
            mine = theta(w, ell)
            ref = oracles.theta_jacobi(w, mpmath.mpf("0.1"))
            assert abs(_mp(mine) - ref) <= mpmath.mpf("1e-70") * abs(ref)

    @given(logs)
    def test_inversion(self, w):
        assert inversion_residual(w, EllipticParams(("0.1", "0"))) <= 1e-60

    @given(nonzero_logs, nomes)
    def test_quasiperiod(self, w, q):
        assert quasiperiod_residual(w, EllipticParams(q)) <= 1e-50

    def test_theta_nonzero_raises_at_zero(self, ell):
        with pytest.raises(PoleAtArgument):
            theta_nonzero(0, ell)


class TestPhi:
    def test_frozen_value(self):
        ell = TIGHT
        val = phi(exact_log("0.3", ell), exact_log("0.7", ell), ell)
        assert abs(mpmath.mpf(str(val.real)) - PHI_AT_03_07) < mpmath.mpf("1e-70")

    def test_symmetric(self, ell):
        assert relative_residual(phi(0.2 + 1j, -0.3 + 0.5j, ell), phi(-0.3 + 0.5j, 0.2 + 1j, ell)) < 1e-70

    @given(nonzero_logs, nonzero_logs)
    def test_quasiperiod_in_first_argument(self, wx, wy):
        assert phi_quasiperiod_residual(wx, wy, EllipticParams(("0.1", "0"))) <= 1e-50


class TestIdentities:
    @given(st.lists(logs, min_size=5, max_size=5), nomes)
    def test_three_term(self, ws, q):
        lhs, rhs = three_term_sides(*ws, EllipticParams(q, 256, 1e-80))
        assert relative_residual(lhs, rhs) <= 1e-40

    @given(st.lists(logs, min_size=7, max_size=7), nomes)
    def test_four_term(self, ws, q):
        lhs, rhs = four_term_sides(*ws, EllipticParams(q, 256, 1e-80))
        assert relative_residual(lhs, rhs) <= 1e-40

    def test_three_term_against_oracle_thetas(self):
        ell = TIGHT
        ws = [0.1 + 0.4j, 0.3 - 1j, -0.2 + 2j, 0.5 + 0.1j, -0.4 - 0.7j]
        a, h, x, y1, y2 = (mpmath.mpc(w) for w in ws)
        t = lambda w: oracles.theta_from_log(w, mpmath.mpf("0.1"))
        lhs = t(a + y1 - x) * t(h + y2 - x) * t(h + y1 - y2) * t(a)
        rhs = t(a + h + y1 - x) * t(y2 - x) * t(y1 - y2) * t(a - h) + t(h + y1 - x) * t(a + y2 - x) * t(h) * t(a + y1 - y2)
        assert abs(lhs - rhs) <= mpmath.mpf("1e-60") * abs(lhs)
        mine, _ = three_term_sides(*ws, ell)
        assert abs(_mp(mine) - lhs) <= mpmath.mpf("1e-60") * abs(lhs)


class TestCharacters:
    def test_theta_of_char_is_ratio(self, ell):
        tbl = SymbolTable().assign("u1", 0.3 + 0.2j).assign("hbar", -0.1 + 1j)
        c = VirtualChar([(1, Monomial({"u1": 1})), (-1, Monomial({"hbar": 1})), (1, Monomial({"u1": 1, "hbar": -1}))])
        with ell.context():
            expect = theta(0.3 + 0.2j, ell) * theta(to_mpc(0.3 + 0.2j) - to_mpc(-0.1 + 1j), ell) / theta(-0.1 + 1j, ell)
        assert relative_residual(theta_of_char(c, tbl, ell), expect) < 1e-70

    def test_reduced_cancels(self):
        m = Monomial({"u1": 1})
        assert len(VirtualChar([(1, m), (-1, m)]).reduced()) == 0

    def test_dual_inverts(self):
        c = VirtualChar([(1, Monomial({"u1": 2}))]).dual()
        assert c.terms[0][1].exponents == {"u1": -2}


class TestJson:
    def test_round_trip_string(self, ell):
        with ell.context():
            v = mpc(1) / 3
        out = complex_to_json(v)
        with ell.context():
            assert abs(mpfr(out["re"]) - v.real) < mpfr("1e-70")
        assert out["im"].startswith("0.0")

    def test_format_matches_float(self):
        for text in ["-1.2345e-50", "123.5", "1", "0"]:
            assert format_mpfr(mpfr(text, 256), 6) == f"{float(text):.6e}"
