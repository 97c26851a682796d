"""Mirror layer: the parameter map kappa, restriction-matrix identity, Mother functions,
GKM gluing and the tree cancellation check.

kappa sends an X table (u_i, hbar, z) to an X' table:
    hbar' = 1/hbar, a2 = 1, a1 = z hbar^{k-1},
    z_i = u_i hbar / u_{i+1} (i < k), u_i / u_{i+1} (k <= i <= n-k), u_i / (u_{i+1} hbar) (i > n-k).
Only a1/a2 is fixed by the map, so a2 = 1 is a gauge choice.
"""

import dataclasses
import random
import time
from dataclasses import dataclass, field

from gmpy2 import mpc, mpfr

from . import envelope_x as ex
from . import envelope_xprime as ep
from .errors import PairNotConnected, SingularRestrictionMatrix
from .rect_combinatorics import (
    admissible_involutions,
    bij,
    bij_inverse,
    boxes,
    check_diagram,
    content,
    diagrams,
    involution,
    subsets,
    subtree,
)
from .theta_core import EllipticParams, SymbolTable, complex_to_json, random_log, relative_residual, theta

RESIDUAL_FLOOR = mpfr("1e-30")


# ----------------------------------------------------------------------------
# Parameter identification


def kappa_apply(tbl, g, ell=None):
    """X' table (a1, a2, hbar, z_1..z_{n-1}) from an X table (u_i, hbar, z)."""
    ell = ell or EllipticParams()
    with ell.context():
        h = tbl.log("hbar")
        out = SymbolTable()
        out.assign("a1", tbl.log("z") + (g.k - 1) * h)
        out.assign("a2", mpc(0))
        out.assign("hbar", -h)
        for i in range(1, g.n):
            d = tbl.log(f"u{i}") - tbl.log(f"u{i + 1}")
            if i < g.k:
                d += h
            elif i > g.n - g.k:
                d -= h
            out.assign(f"z{i}", d)
        return out


def kappa_inverse(tbl, g, ell=None):
    """X table from an X' table; u_n = 1 fixes the overall scale of the u's."""
    ell = ell or EllipticParams()
    probe = ep.XprimeEnvelopeConfig(g, tbl, ell)
    u, h = ep.equivariant_logs_from_kahler(probe)
    with ell.context():
        out = SymbolTable()
        for i in range(1, g.n + 1):
            out.assign(f"u{i}", u[i])
        out.assign("hbar", h)
        out.assign("z", tbl.log("a1") - tbl.log("a2") - (g.k - 1) * h)
        return out


def chamber_image(g):
    """Image of the X chamber (1..n) under the linearised kappa^{-1}, as X' stability weights.

    The pairing of u_i/u_{i+1} with (1..n) is -1 for every i.
    """
    return [-1] * (g.n - 1)


@dataclass
class Settings:
    ell: EllipticParams = field(default_factory=EllipticParams)
    epsilon: float = ep.DEFAULT_EPSILON
    levels: int = ep.DEFAULT_LEVELS
    guard_bits: int = ep.DEFAULT_GUARD_BITS
    cross_check: bool = True


def configs(g, xtbl, settings, seed=0):
    """Matching X and X' configurations for one X table."""
    cx = ex.XEnvelopeConfig(g, xtbl, settings.ell)
    ptbl = kappa_apply(xtbl, g, settings.ell)
    cp = ep.XprimeEnvelopeConfig(g, ptbl, settings.ell, settings.epsilon, settings.levels, seed,
                                 settings.guard_bits, settings.cross_check)
    return cx, cp


# ----------------------------------------------------------------------------
# Restriction-matrix identity


@dataclass
class PairResidual:
    lam: tuple
    mu: tuple
    p: tuple
    q: tuple
    lhs: object
    rhs: object
    residual: object
    passed: bool

    def to_json(self):
        return {"lambda": list(self.lam), "mu": list(self.mu), "p": list(self.p), "q": list(self.q),
                "lhs": complex_to_json(self.lhs), "rhs": complex_to_json(self.rhs),
                "residual": f"{float(self.residual):.6e}", "pass": self.passed}


@dataclass
class MirrorReport:
    n: int
    k: int
    seed: int
    tol: float
    parameters: dict
    settings: dict
    pairs: list
    seconds: float

    @property
    def worst(self):
        return max((r.residual for r in self.pairs), default=mpfr(0))

    @property
    def passed(self):
        return all(r.passed for r in self.pairs)

    def to_json(self, with_timing=False):
        out = {"n": self.n, "k": self.k, "seed": self.seed, "tol": self.tol,
               "parameters": self.parameters, "settings": self.settings,
               "worst_residual": f"{float(self.worst):.6e}", "pass": self.passed,
               "pairs": [r.to_json() for r in self.pairs]}
        if with_timing:
            out["seconds"] = round(self.seconds, 3)
        return out


def settings_json(settings, seed):
    return {"q": settings.ell.q_json(), "precision": settings.ell.precision_bits,
            "truncation_tol": settings.ell.truncation_tol, "epsilon": settings.epsilon,
            "levels": settings.levels, "guard_bits": settings.guard_bits, "seed": seed}


def verify_mirror(g, seed, settings=None, tol=1e-10):
    """T_{p,p} T'_{lam,mu} = T'_{mu,mu} T_{q,p} for every ordered pair, p = bj(lam), q = bj(mu)."""
    settings = settings or Settings()
    start = time.perf_counter()
    xtbl = ex.draw_x_table(g, seed, settings.ell)
    cx, cp = configs(g, xtbl, settings, seed)
    labels = diagrams(g)
    tx = {}
    tp = {}
    for lam in labels:
        for mu in labels:
            tx[(bij(lam, g), bij(mu, g))] = ex.restrict_x(bij(lam, g), bij(mu, g), cx)
            tp[(lam, mu)] = ep.restrict_xprime(lam, mu, cp)
    pairs = []
    with settings.ell.context():
        for lam in labels:
            for mu in labels:
                p, q = bij(lam, g), bij(mu, g)
                lhs = tx[(p, p)] * tp[(lam, mu)]
                rhs = tp[(mu, mu)] * tx[(q, p)]
                res = relative_residual(lhs, rhs, RESIDUAL_FLOOR)
                pairs.append(PairResidual(lam, mu, p, q, lhs, rhs, res, bool(res <= tol)))
    return MirrorReport(g.n, g.k, seed, tol, xtbl.to_json(), settings_json(settings, seed), pairs,
                        time.perf_counter() - start)


# ----------------------------------------------------------------------------
# Mother function, k = 1


def mother_k1(x, y, xtbl, g, ell=None):
    """(-1)^n prod_{i=1}^n theta(x_i hbar' / x_{i-1} u_i y), x_0 = a1, x_n = a2 via kappa.

    x holds the logs x_1..x_{n-1} (one per box of the single column), y is a log.
    """
    if g.k != 1:
        raise ValueError("the closed Mother function needs k = 1")
    ell = ell or EllipticParams()
    ptbl = kappa_apply(xtbl, g, ell)
    with ell.context():
        chain = [ptbl.log("a1")] + list(x) + [ptbl.log("a2")]
        hp = ptbl.log("hbar")
        out = mpc((-1) ** g.n)
        for i in range(1, g.n + 1):
            out *= theta(chain[i] - chain[i - 1] + hp + xtbl.log(f"u{i}") + y, ell)
        return out


def mother_k1_restrict(side, index, xtbl, g, point, ell=None):
    """Restriction of the k = 1 Mother function.

    side 'x': y = 1/u_index and point is the X' Chern assignment (box -> log).
    side 'xprime': x = Chern values of the index-th diagram and point is the log y.
    """
    ell = ell or EllipticParams()
    if side == "x":
        x = [point[(i, 1)] for i in range(1, g.n)]
        with ell.context():
            return mother_k1(x, -xtbl.log(f"u{index}"), xtbl, g, ell)
    if side == "xprime":
        lam = diagrams(g)[index - 1]
        cp = ep.XprimeEnvelopeConfig(g, kappa_apply(xtbl, g, ell), ell)
        phil = ep.chern_logs(lam, cp)
        return mother_k1([phil[(i, 1)] for i in range(1, g.n)], point, xtbl, g, ell)
    raise ValueError(f"unknown side {side!r}")


def mother_k1_residuals(g, seed, ell=None):
    """Both restriction families of the k = 1 Mother function against the bold envelopes."""
    ell = ell or EllipticParams()
    xtbl = ex.draw_x_table(g, seed, ell)
    cx = ex.XEnvelopeConfig(g, xtbl, ell)
    cp = ep.XprimeEnvelopeConfig(g, kappa_apply(xtbl, g, ell), ell)
    rng = random.Random(f"mother|{seed}")
    xg = ep.random_chern_assignment(g, rng, ell)
    with ell.context():
        yg = random_log(rng)
    out = []
    with ell.context():
        for idx, lam in enumerate(diagrams(g), start=1):
            p = bij(lam, g)
            a = mother_k1_restrict("x", p[0], xtbl, g, xg, ell)
            b = ep.theta_prefactor_xprime(lam, cp) * ep.stab_xprime_eval(lam, xg, cp)
            out.append(("x", p, relative_residual(a, b, RESIDUAL_FLOOR)))
            a = mother_k1_restrict("xprime", idx, xtbl, g, yg, ell)
            b = ex.theta_prefactor_x(p, cx) * ex.stab_x_eval(p, [yg], cx)
            out.append(("xprime", list(lam), relative_residual(a, b, RESIDUAL_FLOOR)))
    return out


# ----------------------------------------------------------------------------
# General Mother function


def _invert(matrix):
    """Gauss-Jordan inverse with partial pivoting."""
    n = len(matrix)
    aug = [list(row) + [mpc(1) if i == j else mpc(0) for j in range(n)] for i, row in enumerate(matrix)]
    for col in range(n):
        piv = max(range(col, n), key=lambda r: abs(aug[r][col]))
        if abs(aug[piv][col]) < mpfr("1e-40"):
            raise SingularRestrictionMatrix(f"pivot {col} vanishes")
        aug[col], aug[piv] = aug[piv], aug[col]
        pv = aug[col][col]
        aug[col] = [v / pv for v in aug[col]]
        for r in range(n):
            if r != col and aug[r][col] != 0:
                f = aug[r][col]
                aug[r] = [a - f * b for a, b in zip(aug[r], aug[col])]
    return [row[n:] for row in aug]


def mother_general(y, x, xtbl, g, ell=None):
    """sum_{p,q} (M^{-1})_{q,p} boldStab(p)(y) boldStab'(bj^{-1}(q))(x), M_{a,b} = bold T_{p_a,p_b}."""
    ell = ell or EllipticParams()
    cx = ex.XEnvelopeConfig(g, xtbl, ell)
    cp = ep.XprimeEnvelopeConfig(g, kappa_apply(xtbl, g, ell), ell)
    labels = subsets(g)
    with ell.context():
        pref = [ex.theta_prefactor_x(p, cx) for p in labels]
        matrix = [[pref[a] * ex.restrict_x(labels[a], labels[b], cx) for b in range(len(labels))]
                  for a in range(len(labels))]
        inv = _invert(matrix)
        sx = [pref[a] * ex.stab_x_eval(labels[a], y, cx) for a in range(len(labels))]
        sp = [ep.theta_prefactor_xprime(bij_inverse(q, g), cp) * ep.stab_xprime_eval(bij_inverse(q, g), x, cp)
              for q in labels]
        total = mpc(0)
        for a in range(len(labels)):
            for b in range(len(labels)):
                total += inv[b][a] * sx[a] * sp[b]
        return total


# ----------------------------------------------------------------------------
# GKM gluing


def connecting_pair(lam, mu, g):
    """(i, j) with bj(mu) = bj(lam) - {i} + {j} and i < j, else PairNotConnected."""
    p, q = set(bij(lam, g)), set(bij(mu, g))
    lost, gained = p - q, q - p
    if len(lost) != 1:
        raise PairNotConnected(f"{list(lam)} and {list(mu)} differ in {len(lost)} subset entries")
    i, j = lost.pop(), gained.pop()
    if i > j:
        raise PairNotConnected(f"{list(mu)} lies below {list(lam)}")
    return i, j


def curve_connected_pairs(g):
    out = []
    for lam in diagrams(g):
        for mu in diagrams(g):
            try:
                out.append((lam, mu, connecting_pair(lam, mu, g)))
            except PairNotConnected:
                continue
    return out


def gkm_check_pair(lam, mu, xtbl, g, settings=None, delta=1e-10, levels=5):
    """Worst relative gap of bold T'_{lam,nu} and bold T'_{mu,nu} on u_i = u_j over nu containing lam.

    u_i = u_j + delta_l c with delta_l = delta 2^{-l}; both sides are extrapolated to delta = 0.
    """
    settings = settings or Settings()
    lam, mu = check_diagram(lam, g), check_diagram(mu, g)
    i, j = connecting_pair(lam, mu, g)
    ell = settings.ell
    with ell.context():
        nodes = [mpfr(delta) / 2 ** l for l in range(levels)]
        slope = mpc(mpfr("0.7"), mpfr("0.3"))
    # near u_i = u_j the eps-expansion converges only for eps well below delta
    inner = dataclasses.replace(settings, epsilon=min(settings.epsilon, delta * 2.0 ** -levels * 1e-10),
                                guard_bits=max(settings.guard_bits, 128))
    targets = [nu for nu in diagrams(g) if boxes(lam) <= boxes(nu)]
    worst = mpfr(0)
    for nu in targets:
        left, right = [], []
        for d in nodes:
            tbl = xtbl.copy()
            with ell.context():
                tbl.assign(f"u{i}", xtbl.log(f"u{j}") + d * slope)
            _, cp = configs(g, tbl, inner)
            left.append(ep.bold_stab_xprime(lam, nu, cp))
            right.append(ep.bold_stab_xprime(mu, nu, cp))
        with ell.context():
            a = ep.neville_at_zero(left, nodes)
            b = ep.neville_at_zero(right, nodes)
            worst = max(worst, relative_residual(a, b, RESIDUAL_FLOOR))
    return worst


def gkm_check_pair_x(p, q, xtbl, g, ell=None):
    """Worst gap of T_{r,p} and T_{r,q} on u_i = u_j over all r, for q = p - {i} + {j}."""
    ell = ell or EllipticParams()
    p, q = tuple(sorted(p)), tuple(sorted(q))
    lost, gained = set(p) - set(q), set(q) - set(p)
    if len(lost) != 1:
        raise PairNotConnected(f"{p} and {q} are not joined by a torus curve")
    i, j = lost.pop(), gained.pop()
    tbl = xtbl.copy()
    tbl.assign(f"u{i}", xtbl.log(f"u{j}"))
    cx = ex.XEnvelopeConfig(g, tbl, ell)
    worst = mpfr(0)
    with ell.context():
        for r in subsets(g):
            a = ex.stab_x_eval(r, [-cx.u(s) for s in p], cx)
            b = ex.stab_x_eval(r, [-cx.u(s) for s in q], cx)
            worst = max(worst, relative_residual(a, b, RESIDUAL_FLOOR))
    return worst


# ----------------------------------------------------------------------------
# Cancellation of tree pairs


def constrained_table(tbar, box, g, seed, ell=None):
    """X table with u(s) = 1, s the subtree at box: sum over s of u_{c+1} - u_c vanishes."""
    ell = ell or EllipticParams()
    rng = random.Random(f"cancel|{seed}|{box}|{tbar.edges}")
    coef = {}
    for cell in subtree(box, tbar):
        c = content(cell, g)
        coef[c + 1] = coef.get(c + 1, 0) + 1
        coef[c] = coef.get(c, 0) - 1
    with ell.context():
        tbl = SymbolTable()
        for i in range(1, g.n + 1):
            tbl.assign(f"u{i}", random_log(rng))
        tbl.assign("hbar", random_log(rng))
        tbl.assign("z", random_log(rng))
        live = [i for i in sorted(coef) if coef[i] != 0]
        if live:
            j = live[-1]
            rest = sum((coef[i] * tbl.log(f"u{i}") for i in live if i != j), mpc(0))
            tbl.assign(f"u{j}", -rest / coef[j])
        return tbl, rng


def cancellation_check(lam, tbar, box, g, seed=0, ell=None):
    """R(tbar)W(tbar) / R(inv tbar)W(inv tbar) at a draw with u(s) = 1; expected to be -1.

    Boxes whose subtree is the same in both trees drop their common theta(Z) denominator,
    which vanishes at the constrained box.
    """
    ell = ell or EllipticParams()
    lam = check_diagram(lam, g)
    other = involution(tbar, box, g)
    tbl, rng = constrained_table(tbar, box, g, seed, ell)
    cp = ep.XprimeEnvelopeConfig(g, kappa_apply(tbl, g, ell), ell)
    x = ep.random_chern_assignment(g, rng, ell)
    same = frozenset(b for b in tbar.vertices if set(subtree(b, tbar)) == set(subtree(b, other)))
    with ell.context():
        num = ep.complement_tree_factor(lam, tbar, x, cp, same)
        den = ep.complement_tree_factor(lam, other, x, cp, same)
        return num / den


def all_cancellation_ratios(g, seed=0, ell=None):
    out = []
    for lam in diagrams(g):
        for tb, box in admissible_involutions(lam, g):
            out.append((lam, tb, box, cancellation_check(lam, tb, box, g, seed, ell)))
    return out


__all__ = [
    "kappa_apply", "kappa_inverse", "chamber_image", "Settings", "configs", "MirrorReport",
    "verify_mirror", "mother_k1", "mother_k1_restrict", "mother_k1_residuals", "mother_general",
    "connecting_pair", "curve_connected_pairs", "gkm_check_pair", "gkm_check_pair_x",
    "cancellation_check", "all_cancellation_ratios",
]
