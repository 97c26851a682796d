"""Elliptic stable envelope of T*Gr(k,n) and its restriction matrix.

Chamber sigma = (1, ..., n) and stability -1 are fixed. Parameters live in a
SymbolTable with logs for u1..un, hbar, z and the auxiliary zu1..zun.
"""

import itertools
import random
from dataclasses import dataclass, field

from gmpy2 import mpc

from .errors import NonGenericParameters, PoleAtArgument
from .rect_combinatorics import GrassData, dominates, subsets
from .theta_core import (
    POLE_TOL,
    EllipticParams,
    Monomial,
    SymbolTable,
    VirtualChar,
    complex_to_json,
    phi,
    random_log,
    theta,
    theta_nonzero,
)


def u_name(i):
    return f"u{i}"


def x_symbols(g):
    return [u_name(i) for i in range(1, g.n + 1)] + ["hbar", "z"] + [f"zu{i}" for i in range(1, g.n + 1)]


@dataclass
class XEnvelopeConfig:
    g: GrassData
    tbl: SymbolTable
    ell: EllipticParams = field(default_factory=EllipticParams)

    def u(self, i):
        return self.tbl.log(u_name(i))

    @property
    def h(self):
        return self.tbl.log("hbar")

    @property
    def z(self):
        return self.tbl.log("z")

    def zu(self, i):
        name = f"zu{i}"
        return self.tbl.log(name) if name in self.tbl else mpc(0)


@dataclass
class RestrictionMatrix:
    """entries[r][c] is envelope number r restricted to fixed point number c."""

    labels: list
    entries: list
    metadata: dict

    def to_json(self):
        return {
            "labels": [list(lab) for lab in self.labels],
            "entries": [[complex_to_json(v) for v in row] for row in self.entries],
            "metadata": self.metadata,
        }


def _generic_x(tbl, g, p):
    """True if no theta that can sit in a denominator is numerically zero."""
    with p.context():
        u = [None] + [tbl.log(u_name(i)) for i in range(1, g.n + 1)]
        h, z = tbl.log("hbar"), tbl.log("z")
        checks = []
        for i in range(1, g.n + 1):
            for j in range(1, g.n + 1):
                if i != j:
                    checks += [u[i] - u[j], u[i] - u[j] - h]
        checks += [z + m * h for m in range(-2 * g.n - 2, 2 * g.n + 3)]
        checks += [m * h for m in range(1, g.n + 2)]
        for i in range(1, g.n + 1):
            name = f"zu{i}"
            if name in tbl:
                checks += [tbl.log(name) + m * h for m in range(-g.n, g.n + 1)]
                checks += [u[i]]
        return all(abs(theta(w, p)) > POLE_TOL for w in checks)


def draw_x_table(g, seed, p=None, with_aux=True, max_tries=50):
    """Random generic logs for u, hbar, z (and zu_i) from a seeded generator."""
    p = p or EllipticParams()
    rng = random.Random(seed)
    for _ in range(max_tries):
        tbl = SymbolTable()
        with p.context():
            for i in range(1, g.n + 1):
                tbl.assign(u_name(i), random_log(rng))
            tbl.assign("hbar", random_log(rng))
            tbl.assign("z", random_log(rng))
            if with_aux:
                for i in range(1, g.n + 1):
                    tbl.assign(f"zu{i}", random_log(rng))
        if _generic_x(tbl, g, p):
            return tbl
    raise NonGenericParameters(f"no generic draw found for seed {seed}")


# ----------------------------------------------------------------------------
# Characters


def tangent_char_x(p, g):
    """Sum over i in p, j not in p of u_i/u_j + hbar^{-1} u_j/u_i."""
    terms = []
    for i in p:
        for j in range(1, g.n + 1):
            if j in p:
                continue
            terms.append((1, Monomial({u_name(i): 1, u_name(j): -1})))
            terms.append((1, Monomial({u_name(j): 1, u_name(i): -1, "hbar": -1})))
    return VirtualChar(terms)


def sigma_pairing(m, g):
    """Pairing of a monomial with the chamber cocharacter (1, ..., n)."""
    return sum(i * m.exponents.get(u_name(i), 0) for i in range(1, g.n + 1))


def tangent_split_x(p, g):
    """(N^+, N^-): tangent weights pairing positively and negatively with the chamber."""
    plus, minus = [], []
    for s, m in tangent_char_x(p, g).terms:
        val = sigma_pairing(m, g)
        if val == 0:
            raise ValueError(f"weight {m} is fixed by the chamber")
        (plus if val > 0 else minus).append((s, m))
    return VirtualChar(plus), VirtualChar(minus)


def index_degrees_x(p, g):
    """u_i-degrees of prod_{i in p, j not in p, j > i} u_j / (u_i hbar)."""
    deg = [0] * (g.n + 1)
    for i in p:
        for j in range(i + 1, g.n + 1):
            if j not in p:
                deg[j] += 1
                deg[i] -= 1
    return deg[1:]


# ----------------------------------------------------------------------------
# Envelope


def _z_shift(g, pl, l):
    return g.k - g.n + pl - 2 * l


def stab_x_eval(p, y, cfg):
    """Envelope of the fixed point p at Chern-root logs y (length k)."""
    g, ell = cfg.g, cfg.ell
    p = tuple(sorted(p))
    if len(y) != g.k:
        raise ValueError(f"need {g.k} Chern roots, got {len(y)}")
    with ell.context():
        u = [None] + [cfg.u(i) for i in range(1, g.n + 1)]
        h, z = cfg.h, cfg.z
        zden = [theta_nonzero(-z + _z_shift(g, p[l - 1], l) * h, ell, "z denominator")
                for l in range(1, g.k + 1)]
        total = mpc(0)
        for perm in itertools.permutations(range(g.k)):
            yy = [y[perm[l]] for l in range(g.k)]
            num = mpc(1)
            for l in range(1, g.k + 1):
                pl, yl = p[l - 1], yy[l - 1]
                for i in range(1, pl):
                    num *= theta(yl + u[i] - h, ell)
                num *= theta(yl + u[pl] - z + _z_shift(g, pl, l) * h, ell) / zden[l - 1]
                for i in range(pl + 1, g.n + 1):
                    num *= theta(yl + u[i], ell)
            den = mpc(1)
            for a in range(g.k):
                for b in range(a + 1, g.k):
                    den *= theta_nonzero(yy[a] - yy[b], ell, "y_i/y_j")
                    den *= theta_nonzero(yy[b] - yy[a] - h, ell, "y_j/(y_i hbar)")
            total += num / den
        return total


def restrict_x(p, q, cfg):
    """Envelope of p restricted to the fixed point q (y_i = 1/u_{q_i})."""
    y = [-cfg.u(i) for i in sorted(q)]
    try:
        return stab_x_eval(p, y, cfg)
    except PoleAtArgument as exc:
        raise NonGenericParameters(f"restriction of {tuple(p)} to {tuple(q)}: {exc}") from exc


def diagonal_from_logs(p, u, h, ell):
    """prod_{i in p, j not in p} theta(u_j/u_i) for i<j and theta(u_j/(u_i hbar)) for i>j.

    u is a list indexed 1..n (u[0] unused).
    """
    n = len(u) - 1
    with ell.context():
        out = mpc(1)
        for i in p:
            for j in range(1, n + 1):
                if j in p:
                    continue
                out *= theta(u[j] - u[i], ell) if i < j else theta(u[j] - u[i] - h, ell)
        return out


def diagonal_x(p, cfg):
    u = [None] + [cfg.u(i) for i in range(1, cfg.g.n + 1)]
    return diagonal_from_logs(p, u, cfg.h, cfg.ell)


def restriction_matrix_x(cfg, seed=None):
    labels = subsets(cfg.g)
    entries = [[restrict_x(p, q, cfg) for q in labels] for p in labels]
    meta = {"side": "x", "n": cfg.g.n, "k": cfg.g.k, "q": cfg.ell.q_json(),
            "precision": cfg.ell.precision_bits, "seed": seed, "parameters": cfg.tbl.to_json()}
    return RestrictionMatrix(labels, entries, meta)


def off_order(p, q):
    """True where the restriction of p to q must vanish (p does not dominate q)."""
    return not dominates(p, q)


# ----------------------------------------------------------------------------
# Normalisation and quasiperiods


def theta_prefactor_x(p, cfg):
    """Normalisation making the envelope of p holomorphic in z.

    Equals (-1)^{k(n-k)} prod_m theta(z hbar^{n-k-p_m+2m}), the mirror image of the
    diagonal of the dual restriction matrix.
    """
    g, ell = cfg.g, cfg.ell
    p = tuple(sorted(p))
    with ell.context():
        out = mpc((-1) ** (g.k * (g.n - g.k)))
        for m in range(1, g.k + 1):
            w = cfg.z + (g.n - g.k - p[m - 1] + 2 * m) * cfg.h
            val = theta(w, ell)
            if abs(val) < POLE_TOL:
                raise NonGenericParameters(f"prefactor of {p} vanishes")
            out *= val
        return out


def bold_stab_x(p, q, cfg):
    with cfg.ell.context():
        return theta_prefactor_x(p, cfg) * restrict_x(p, q, cfg)


def u_function_x(p, q, cfg):
    """Reference function with the same q-shift behaviour as T_{p,q} in every u_i."""
    g, ell = cfg.g, cfg.ell
    p, q = tuple(sorted(p)), tuple(sorted(q))
    with ell.context():
        u = [None] + [cfg.u(i) for i in range(1, g.n + 1)]
        h, z = cfg.h, cfg.z
        out = mpc(1)
        for i in q:
            for j in range(1, g.n + 1):
                if j not in q:
                    out *= theta(u[j] - u[i] - h, ell)
        for l in range(g.k):
            out *= phi(u[p[l]], -z, ell) / phi(u[q[l]], -z, ell)
        deg = index_degrees_x(p, g)
        for i in range(1, g.n + 1):
            zi = cfg.zu(i)
            out *= phi(u[i], -zi + deg[i - 1] * h, ell) / phi(u[i], -zi, ell)
        return out


__all__ = [
    "XEnvelopeConfig", "RestrictionMatrix", "x_symbols", "draw_x_table", "tangent_char_x",
    "tangent_split_x", "index_degrees_x", "stab_x_eval", "restrict_x", "diagonal_x",
    "diagonal_from_logs", "restriction_matrix_x", "off_order", "theta_prefactor_x",
    "bold_stab_x", "u_function_x",
]
