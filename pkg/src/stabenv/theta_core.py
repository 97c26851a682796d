"""Odd Jacobi theta function, the Poincare section phi and theta classes of characters.

All arguments are complex logarithms. A value x is recovered as exp(w), and
x^{1/2} is exp(w/2), so half powers never need a branch choice.

theta(x) = (x^{1/2} - x^{-1/2}) prod_{i>=1} (1 - q^i x)(1 - q^i / x)
phi(x, y) = theta(xy) / (theta(x) theta(y))
"""

import functools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import gmpy2
from gmpy2 import mpc, mpfr

from .errors import PoleAtArgument, UnassignedSymbol

DEFAULT_PRECISION = 256
DEFAULT_TRUNCATION_TOL = 1e-60
DEFAULT_Q = 0.1
# Parameter draws with a denominator theta below this are rejected as non-generic.
POLE_TOL = mpfr("1e-20")

_CACHE_LIMIT = 400_000


def to_mpc(value):
    """Convert a complex, string, (re, im) pair or gmpy2 number to mpc."""
    if isinstance(value, type(mpc(0))):
        return value
    if isinstance(value, type(mpfr(0))):
        with gmpy2.context(precision=max(value.precision, gmpy2.get_context().precision)):
            return mpc(value, mpfr(0))
    if isinstance(value, (tuple, list)):
        re, im = value
        return mpc(mpfr(str(re)) if isinstance(re, str) else mpfr(re),
                   mpfr(str(im)) if isinstance(im, str) else mpfr(im))
    if isinstance(value, str):
        return mpc(mpfr(value), mpfr(0))
    if isinstance(value, (int, float)):
        return mpc(mpfr(value), mpfr(0))
    if isinstance(value, complex):
        return mpc(mpfr(value.real), mpfr(value.imag))
    return mpc(value)


@dataclass(frozen=True)
class EllipticParams:
    """Modular parameter and numerical controls for theta evaluation."""

    q: complex = DEFAULT_Q
    precision_bits: int = DEFAULT_PRECISION
    truncation_tol: float = DEFAULT_TRUNCATION_TOL

    def __post_init__(self):
        qa = self.q_abs()
        if not qa < 1 - 1e-3:
            raise ValueError(f"|q| = {qa} must be below 1 - 1e-3")
        if int(self.precision_bits) <= 0:
            raise ValueError("precision_bits must be positive")
        if not self.truncation_tol > 0:
            raise ValueError("truncation_tol must be positive")

    def q_complex(self):
        if isinstance(self.q, (tuple, list)):
            return complex(float(self.q[0]), float(self.q[1]))
        if isinstance(self.q, str):
            return complex(float(self.q))
        return complex(self.q)

    def q_abs(self):
        return abs(self.q_complex())

    def q_value(self):
        """q at the working precision; string components are parsed exactly."""
        with self.context():
            return to_mpc(self.q)

    def q_json(self):
        return complex_to_json(self.q_value(), 20)

    def context(self, extra_bits=0):
        return gmpy2.context(precision=int(self.precision_bits) + int(extra_bits))

    def with_precision(self, bits):
        return EllipticParams(self.q, int(bits), self.truncation_tol)

    def base_terms(self):
        """Truncation index N with |q|^N < truncation_tol (for |x| = 1)."""
        qa = self.q_abs()
        if qa == 0:
            return 0
        return int(math.ceil(math.log(self.truncation_tol) / math.log(qa))) + 1


class _Engine:
    """Cached powers of q and memoised theta values at one precision."""

    def __init__(self, params):
        self.params = params
        self.ctx = params.context()
        with gmpy2.context(self.ctx):
            self.q = to_mpc(params.q)
            qa = params.q_abs()
            self.log_q_abs = math.log(qa) if qa > 0 else None
            self.base = params.base_terms()
            self.pow = [mpc(1)]
            self.pow2 = [mpc(1)]
            self._grow(self.base + 8)
        self.cache = {}

    def _grow(self, n):
        while len(self.pow) <= n:
            nxt = self.pow[-1] * self.q
            self.pow.append(nxt)
            self.pow2.append(nxt * nxt)

    def terms_for(self, w):
        if self.log_q_abs is None:
            return 0
        # the tail behaves like |q|^N max(|x|, 1/|x|); widen N to cover |Re w|
        extra = int(math.ceil(abs(float(w.real)) / -self.log_q_abs))
        return self.base + extra

    def theta(self, w):
        key = (w.real, w.imag)
        hit = self.cache.get(key)
        if hit is not None:
            return hit
        with gmpy2.context(self.ctx):
            n = self.terms_for(w)
            if n >= len(self.pow):
                self._grow(n + 8)
            x = gmpy2.exp(w)
            s = x + 1 / x
            prod = mpc(1)
            pw, pw2 = self.pow, self.pow2
            for i in range(1, n + 1):
                prod *= 1 - pw[i] * s + pw2[i]
            half = gmpy2.exp(w / 2)
            val = prod * (half - 1 / half)
        if len(self.cache) > _CACHE_LIMIT:
            self.cache.clear()
        self.cache[key] = val
        return val


@functools.lru_cache(maxsize=32)
def _engine(params):
    return _Engine(params)


def theta(w, p):
    """Theta at the point with log w."""
    return _engine(p).theta(to_mpc(w) if not isinstance(w, type(mpc(0))) else w)


def pole_threshold(p):
    """|theta| below this is roundoff around an exact zero at the working precision."""
    return mpfr(2) ** (-(int(p.precision_bits) * 4 // 5))


def theta_nonzero(w, p, what="theta argument"):
    """Theta at w, raising PoleAtArgument if it is numerically zero."""
    val = theta(w, p)
    if abs(val) < pole_threshold(p):
        raise PoleAtArgument(what, abs(val))
    return val


def phi(wx, wy, p):
    """phi(x, y) = theta(xy) / (theta(x) theta(y)) on logs."""
    with p.context():
        wx, wy = to_mpc(wx), to_mpc(wy)
        den = theta_nonzero(wx, p, "phi first argument") * theta_nonzero(wy, p, "phi second argument")
        return theta(wx + wy, p) / den


def log_q(p):
    with p.context():
        return gmpy2.log(to_mpc(p.q))


# ----------------------------------------------------------------------------
# Symbols, monomials and virtual characters


@dataclass
class SymbolTable:
    """Ordered symbol names with an assigned complex log for each."""

    symbols: list = field(default_factory=list)
    assignment: dict = field(default_factory=dict)

    def assign(self, name, log):
        if name not in self.assignment and name not in self.symbols:
            self.symbols.append(name)
        self.assignment[name] = to_mpc(log)
        return self

    def log(self, name):
        try:
            return self.assignment[name]
        except KeyError:
            raise UnassignedSymbol(name) from None

    def __contains__(self, name):
        return name in self.assignment

    def copy(self):
        return SymbolTable(list(self.symbols), dict(self.assignment))

    def to_json(self):
        return {name: complex_to_json(self.assignment[name])
                for name in self.symbols if name in self.assignment}


def complex_to_json(value, digits=None):
    value = to_mpc(value)
    if digits is None:
        digits = max(20, int(value.real.precision * 0.30103) + 2)
    return {"re": format_mpfr(value.real, digits), "im": format_mpfr(value.imag, digits)}


def format_mpfr(x, digits):
    """Scientific notation with `digits` digits after the point (gmpy2's __format__ is unreliable)."""
    mant, exp, _ = x.digits(10, digits + 1)
    if mant in ("inf", "-inf", "nan"):
        return mant
    sign = "-" if mant.startswith("-") else ""
    mant = mant.lstrip("-").ljust(digits + 1, "0")
    if set(mant) == {"0"}:
        exp = 1
    return f"{sign}{mant[0]}.{mant[1:]}e{exp - 1:+03d}"


def _frac(e):
    f = Fraction(e)
    if f.denominator not in (1, 2):
        raise ValueError(f"exponent {e} must be an integer or half-integer")
    return f


class Monomial:
    """Laurent monomial in named symbols with integer or half-integer exponents."""

    __slots__ = ("_exp",)

    def __init__(self, exponents=None):
        exp = {}
        for name, e in (exponents or {}).items():
            f = _frac(e)
            if f:
                exp[name] = f
        self._exp = exp

    @classmethod
    def of(cls, name, power=1):
        return cls({name: power})

    @property
    def exponents(self):
        return dict(self._exp)

    def __mul__(self, other):
        exp = dict(self._exp)
        for name, e in other._exp.items():
            exp[name] = exp.get(name, 0) + e
        return Monomial(exp)

    def __truediv__(self, other):
        return self * other.inverse()

    def __pow__(self, k):
        return Monomial({n: e * k for n, e in self._exp.items()})

    def inverse(self):
        return Monomial({n: -e for n, e in self._exp.items()})

    def is_identity(self):
        return not self._exp

    def key(self):
        return tuple(sorted(self._exp.items()))

    def __eq__(self, other):
        return isinstance(other, Monomial) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def __repr__(self):
        if not self._exp:
            return "1"
        parts = []
        for name, e in sorted(self._exp.items()):
            parts.append(name if e == 1 else f"{name}^{e}")
        return "*".join(parts)


def eval_monomial(m, tbl):
    """Sum of exponent * log over the monomial's symbols."""
    total = mpc(0)
    for name, e in m._exp.items():
        lg = tbl.log(name)
        total += lg * e.numerator / e.denominator if e.denominator != 1 else lg * e.numerator
    return total


class VirtualChar:
    """Signed multiset of monomials: sum of + terms minus sum of - terms."""

    def __init__(self, terms=()):
        self.terms = [(int(s), m) for s, m in terms]
        for s, _ in self.terms:
            if s not in (1, -1):
                raise ValueError("term signs must be +1 or -1")

    def __add__(self, other):
        return VirtualChar(self.terms + other.terms)

    def __neg__(self):
        return VirtualChar([(-s, m) for s, m in self.terms])

    def __sub__(self, other):
        return self + (-other)

    def positive(self):
        return [m for s, m in self.terms if s > 0]

    def negative(self):
        return [m for s, m in self.terms if s < 0]

    def multiplicities(self):
        """Net multiplicity of each distinct monomial."""
        out = {}
        for s, m in self.terms:
            out[m] = out.get(m, 0) + s
        return out

    def reduced(self):
        """Cancel equal monomials between the + and - parts."""
        terms = []
        for m, c in self.multiplicities().items():
            terms.extend([(1 if c > 0 else -1, m)] * abs(c))
        return VirtualChar(terms)

    def dual(self):
        return VirtualChar([(s, m.inverse()) for s, m in self.terms])

    def scaled(self, mono):
        return VirtualChar([(s, m * mono) for s, m in self.terms])

    def rank(self):
        return sum(s for s, _ in self.terms)

    def __len__(self):
        return len(self.terms)

    def __repr__(self):
        return " ".join(("+" if s > 0 else "-") + repr(m) for s, m in self.terms) or "0"


def theta_of_char(c, tbl, p):
    """prod theta(+terms) / prod theta(-terms)."""
    with p.context():
        num = mpc(1)
        den = mpc(1)
        for s, m in c.terms:
            val = theta(eval_monomial(m, tbl), p)
            if s > 0:
                num *= val
            else:
                if abs(val) < pole_threshold(p):
                    raise PoleAtArgument(repr(m), abs(val))
                den *= val
        return num / den


# ----------------------------------------------------------------------------
# Identities used as numerical certificates


def _precision_of(value):
    prec = getattr(value, "precision", 53)
    return max(prec) if isinstance(prec, tuple) else int(prec)


def relative_residual(lhs, rhs, floor=mpfr("1e-30")):
    """|lhs - rhs| / max(|lhs|, |rhs|, floor), computed at the inputs' precision."""
    with gmpy2.context(precision=max(_precision_of(lhs), _precision_of(rhs), 53)):
        lhs, rhs = to_mpc(lhs), to_mpc(rhs)
        scale = max(abs(lhs), abs(rhs), mpfr(floor))
        return abs(lhs - rhs) / scale


def quasiperiod_residual(w, p):
    """theta(xq) + theta(x) / (x sqrt(q)), relative to |theta(xq)|."""
    with p.context():
        w = to_mpc(w)
        lq = log_q(p)
        shifted = theta(w + lq, p)
        other = -theta(w, p) / gmpy2.exp(w + lq / 2)
        return relative_residual(shifted, other)


def inversion_residual(w, p):
    """theta(1/x) + theta(x), relative."""
    with p.context():
        w = to_mpc(w)
        return relative_residual(theta(-w, p), -theta(w, p))


def phi_quasiperiod_residual(wx, wy, p):
    """phi(xq, y) y against phi(x, y)."""
    with p.context():
        wx, wy = to_mpc(wx), to_mpc(wy)
        lhs = phi(wx + log_q(p), wy, p) * gmpy2.exp(wy)
        return relative_residual(lhs, phi(wx, wy, p))


def three_term_sides(a, h, x, y1, y2, p):
    """Both sides of the three-term relation, logs in.

    theta(a y1/x) theta(h y2/x) theta(h y1/y2) theta(a)
      = theta(a h y1/x) theta(y2/x) theta(y1/y2) theta(a/h)
      + theta(h y1/x) theta(a y2/x) theta(h) theta(a y1/y2)
    """
    t = lambda w: theta(w, p)
    with p.context():
        a, h, x, y1, y2 = (to_mpc(v) for v in (a, h, x, y1, y2))
        lhs = t(a + y1 - x) * t(h + y2 - x) * t(h + y1 - y2) * t(a)
        rhs = (t(a + h + y1 - x) * t(y2 - x) * t(y1 - y2) * t(a - h)
               + t(h + y1 - x) * t(a + y2 - x) * t(h) * t(a + y1 - y2))
        return lhs, rhs


def four_term_sides(a1, a2, h, x1, x2, y1, y2, p):
    """Both sides of the four-term relation, logs in."""
    t = lambda w: theta(w, p)
    with p.context():
        a1, a2, h, x1, x2, y1, y2 = (to_mpc(v) for v in (a1, a2, h, x1, x2, y1, y2))
        lhs = (t(h) * t(y1 - y2) * t(h + y1 - x1) * t(a2 + h + y2 - x1)
               * t(a1 + a2 + h + y1 - x2) * t(x2 - y2) * t(a1 + x2 - x1)
               - t(a1 + a2 + h + y1 - x1) * t(x1 - y2) * t(h + y1 - x2)
               * t(a2 + h + y2 - x2) * t(h + x2 - x1) * t(y1 - y2) * t(a1))
        rhs = (-t(h) * t(x1 - x2) * t(a1 + a2 + h + y2 - x1) * t(a2 + h + y1 - x2)
               * t(a1 + y1 - y2) * t(h + y1 - x1) * t(x2 - y2)
               + t(h + y2 - x1) * t(x2 - y1) * t(x1 - x2) * t(h + y1 - y2)
               * t(a1 + a2 + h + y1 - x1) * t(a2 + h + y2 - x2) * t(a1))
        return lhs, rhs


def three_term_residual(a, h, x, y1, y2, p):
    return relative_residual(*three_term_sides(a, h, x, y1, y2, p))


def four_term_residual(a1, a2, h, x1, x2, y1, y2, p):
    return relative_residual(*four_term_sides(a1, a2, h, x1, x2, y1, y2, p))


def random_log(rng, re_span=0.6, im_span=3.0):
    """A random log with bounded real part, drawn from a random.Random."""
    return mpc(mpfr(rng.uniform(-re_span, re_span)), mpfr(rng.uniform(-im_span, im_span)))
