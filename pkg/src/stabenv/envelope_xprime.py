"""Elliptic stable envelope of the dual quiver variety X' and its restriction matrix.

Chamber (0, 1) and stability (1, ..., 1) are fixed. Parameters live in a
SymbolTable with logs for a1, a2, hbar, z1..z_{n-1} and the auxiliary za1, za2.
Chern roots are a map box -> log over the whole rectangle.

Restriction to a fixed point mu is a removable-singularity limit. The envelope
is evaluated at x = chern(mu) + eps_l * xi for a geometric schedule eps_l and
the values are extrapolated to eps = 0 with Neville's polynomial scheme.
"""

import dataclasses
import itertools
import random
from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache

from gmpy2 import mpc, mpfr

from .envelope_x import RestrictionMatrix, diagonal_from_logs
from .errors import LimitUnstable, NonGenericParameters, PoleAtArgument
from .rect_combinatorics import (
    SIDE_COMPLEMENT,
    SIDE_LAMBDA,
    GrassData,
    bij,
    boxes,
    box_table,
    check_diagram,
    chern_exponents,
    complement_boxes,
    content,
    diagrams,
    enumerate_trees,
    kappa,
    l_shape_count,
    skeleton,
    subtree,
    tree_root,
)
from .theta_core import (
    POLE_TOL,
    EllipticParams,
    Monomial,
    SymbolTable,
    VirtualChar,
    phi,
    random_log,
    relative_residual,
    theta,
    theta_nonzero,
)

DEFAULT_EPSILON = 1e-8
DEFAULT_LEVELS = 6
DEFAULT_GUARD_BITS = 64
UNSTABLE_TOL = 1e-6
RESIDUAL_FLOOR = mpfr("1e-30")


def xprime_symbols(g):
    return ["a1", "a2", "hbar"] + [f"z{i}" for i in range(1, g.n)] + ["za1", "za2"]


def box_name(box):
    return f"x_{box[0]}_{box[1]}"


@dataclass
class XprimeEnvelopeConfig:
    g: GrassData
    tbl: SymbolTable
    ell: EllipticParams = field(default_factory=EllipticParams)
    epsilon: float = DEFAULT_EPSILON
    levels: int = DEFAULT_LEVELS
    seed: int = 0
    guard_bits: int = DEFAULT_GUARD_BITS
    cross_check: bool = True

    def __post_init__(self):
        if not 0 < self.epsilon <= 1e-4:
            raise ValueError("epsilon must lie in (0, 1e-4]")
        if self.levels < 2:
            raise ValueError("at least two extrapolation levels are needed")

    @property
    def a1(self):
        return self.tbl.log("a1")

    @property
    def a2(self):
        return self.tbl.log("a2")

    @property
    def h(self):
        return self.tbl.log("hbar")

    def z(self, i):
        return self.tbl.log(f"z{i}")

    def za(self, i):
        name = f"za{i}"
        return self.tbl.log(name) if name in self.tbl else mpc(0)

    def schedule(self):
        return [mpfr(self.epsilon) / 2 ** l for l in range(self.levels)]

    def working(self):
        """Same configuration evaluated with the guard bits added."""
        return dataclasses.replace(self, ell=self.ell.with_precision(self.ell.precision_bits + self.guard_bits),
                                   guard_bits=0)


def draw_xprime_table(g, seed, p=None, with_aux=True):
    """Random logs for a1, a2, hbar, z_i (and za_i)."""
    p = p or EllipticParams()
    rng = random.Random(seed)
    tbl = SymbolTable()
    with p.context():
        for name in ["a1", "a2", "hbar"] + [f"z{i}" for i in range(1, g.n)]:
            tbl.assign(name, random_log(rng))
        if with_aux:
            tbl.assign("za1", random_log(rng))
            tbl.assign("za2", random_log(rng))
    return tbl


def random_chern_assignment(g, rng, p=None):
    p = p or EllipticParams()
    with p.context():
        return {b: random_log(rng) for b in g.rectangle()}


# ----------------------------------------------------------------------------
# Characters


def normal_chars_xprime(lam, g):
    """(N'^-, N'^+) at the fixed point lam: k monomials each."""
    p = bij(check_diagram(lam, g), g)
    minus, plus = [], []
    for m in range(1, g.k + 1):
        shift = 2 * g.k - g.n + p[m - 1] - 2 * m - 1
        minus.append((1, Monomial({"a1": 1, "a2": -1, "hbar": shift})))
        plus.append((1, Monomial({"a1": -1, "a2": 1, "hbar": -shift - 1})))
    return VirtualChar(minus), VirtualChar(plus)


def _eval_exps(e, cfg):
    return e[0] * cfg.a1 + e[1] * cfg.a2 + e[2] * cfg.h


def _add(a, b):
    return tuple(x + y for x, y in zip(a, b))


def _neg(a):
    return tuple(-x for x in a)


@lru_cache(maxsize=None)
def _polarization(lam, n, k):
    g = GrassData(n, k)
    ch = chern_exponents(lam, g)
    by_content = {}
    for b, e in sorted(ch.items()):
        by_content.setdefault(content(b, g), []).append(e)
    plus, minus = Counter(), Counter()
    for e in by_content[k]:
        plus[_add((-1, 0, 0), e)] += 1
    for e in by_content[n - k]:
        plus[_add((0, 1, 0), _neg(e))] += 1
    for i in range(1, n - 1):
        for a in by_content[i + 1]:
            for b in by_content[i]:
                plus[_add(a, _neg(b))] += 1
    for i in range(1, n):
        for a in by_content[i]:
            for b in by_content[i]:
                minus[_add(a, _neg(b))] += 1
    common = plus & minus
    return plus - common, minus - common


def _exps_to_monomial(e):
    return Monomial({"a1": e[0], "a2": e[1], "hbar": e[2]})


def polarization_char_xprime(lam, g):
    """Half tangent space at lam in a1, a2, hbar after cancelling equal weights."""
    plus, minus = _polarization(check_diagram(lam, g), g.n, g.k)
    terms = [(1, _exps_to_monomial(e)) for e, c in sorted(plus.items()) for _ in range(c)]
    terms += [(-1, _exps_to_monomial(e)) for e, c in sorted(minus.items()) for _ in range(c)]
    return VirtualChar(terms)


def index_degrees_xprime(lam, g):
    """(a1-degree, a2-degree) of the determinant of the attracting part of the polarization."""
    plus, minus = _polarization(check_diagram(lam, g), g.n, g.k)
    d1 = d2 = 0
    for e, c in plus.items():
        if e[1] > 0:
            d1 += c * e[0]
            d2 += c * e[1]
    for e, c in minus.items():
        if e[1] > 0:
            d1 -= c * e[0]
            d2 -= c * e[1]
    return d1, d2


# ----------------------------------------------------------------------------
# Static data per diagram


@dataclass(frozen=True)
class _DiagramData:
    lam: tuple
    inside: frozenset
    outside: frozenset
    rect: tuple
    contents: dict
    rho: dict
    v: dict
    chern: dict
    groups: tuple        # boxes grouped by content, all of R
    bar_groups: tuple    # boxes of the complement grouped by content
    trees: tuple
    bar_trees: tuple


@lru_cache(maxsize=None)
def _diagram_data(lam, n, k):
    g = GrassData(n, k)
    rect = tuple(g.rectangle())
    table = box_table(lam, g)

    def group(cells):
        by = {}
        for b in sorted(cells):
            by.setdefault(content(b, g), []).append(b)
        return tuple(tuple(by[c]) for c in sorted(by))

    return _DiagramData(
        lam=lam,
        inside=boxes(lam),
        outside=complement_boxes(lam, g),
        rect=rect,
        contents={b: table[b].content for b in rect},
        rho={b: table[b].rho for b in rect},
        v={b: table[b].v for b in rect},
        chern=chern_exponents(lam, g),
        groups=group(rect),
        bar_groups=group(complement_boxes(lam, g)),
        trees=tuple(enumerate_trees(lam, g, SIDE_LAMBDA)),
        bar_trees=tuple(enumerate_trees(lam, g, SIDE_COMPLEMENT)),
    )


def diagram_data(lam, g):
    return _diagram_data(check_diagram(lam, g), g.n, g.k)


def _permuted(x, groups):
    """Every reassignment of x permuting values inside each group, lexicographic order."""
    for perms in itertools.product(*[list(itertools.permutations(gr)) for gr in groups]):
        xs = dict(x)
        for gr, pg in zip(groups, perms):
            for b, src in zip(gr, pg):
                xs[b] = x[src]
        yield xs


def chern_logs(lam, cfg):
    """Box -> log of the Chern root value at the fixed point lam."""
    dd = diagram_data(lam, cfg.g)
    with cfg.ell.context():
        return {b: _eval_exps(dd.chern[b], cfg) for b in dd.rect}


def kahler_sums(t, dd, cfg):
    """Box -> log of prod over the subtree at that box of z_c^{-1} hbar^{-v}."""
    out = {}
    for b in t.vertices:
        out[b] = sum((-cfg.z(dd.contents[c]) - dd.v[c] * cfg.h for c in subtree(b, t)), mpc(0))
    return out


# ----------------------------------------------------------------------------
# Kahler-independent part and tree weights


def s_part(lam, x, cfg):
    """Kahler-independent product S^{n,k}_lam at Chern-root logs x."""
    g, ell = cfg.g, cfg.ell
    dd = diagram_data(lam, g)
    a1, a2, h = cfg.a1, cfg.a2, cfg.h
    with ell.context():
        return _s_part(dd, x, a1, a2, h, g, ell)


def _s_part(dd, x, a1, a2, h, g, ell):
    num = mpc(1)
    den = mpc(1)
    c, rho = dd.contents, dd.rho
    for I in dd.rect:
        if c[I] == g.k:
            num *= theta(x[I] - a1, ell) if I in dd.inside else theta(a1 - x[I] - h, ell)
        if c[I] == g.n - g.k:
            num *= theta(a2 + h - x[I], ell)
    for I in dd.rect:
        for J in dd.rect:
            if c[I] + 1 == c[J]:
                num *= theta(x[J] + h - x[I], ell) if rho[I] > rho[J] else theta(x[I] - x[J], ell)
            elif c[I] == c[J] and rho[I] > rho[J]:
                den *= theta_nonzero(x[I] - x[J], ell, f"x{I}/x{J}")
                den *= theta_nonzero(x[I] - x[J] - h, ell, f"x{I}/(x{J} hbar)")
    return (-1) ** (g.k * (g.n - g.k)) * num / den


def _single_tree_weight(t, dd, x, phil, zsum, ell):
    if not t.edges and t.root is None:
        return mpc(1)
    r = t.root
    w = (-1) ** kappa(t) * phi(phil[r] - x[r], zsum[r], ell)
    for a, b in t.edges:
        w *= phi(x[a] + phil[b] - phil[a] - x[b], zsum[b], ell)
    return w


def tree_weight(pair, lam, x, cfg):
    """Elliptic weight of a pair of trees (t on lam, tbar on its complement)."""
    dd = diagram_data(lam, cfg.g)
    with cfg.ell.context():
        phil = chern_logs(lam, cfg)
        out = mpc(1)
        for t in (pair.t, pair.tbar):
            if t.vertices:
                out *= _single_tree_weight(t, dd, x, phil, kahler_sums(t, dd, cfg), cfg.ell)
        return out


def stab_xprime_eval(lam, x, cfg):
    """Envelope of the fixed point lam at Chern-root logs x: symmetrised tree sum."""
    g, ell = cfg.g, cfg.ell
    dd = diagram_data(lam, g)
    with ell.context():
        phil = chern_logs(lam, cfg)
        a1, a2, h = cfg.a1, cfg.a2, cfg.h
        zs = [kahler_sums(t, dd, cfg) if t.vertices else None for t in dd.trees]
        zbs = [kahler_sums(t, dd, cfg) if t.vertices else None for t in dd.bar_trees]
        total = mpc(0)
        for xs in _permuted(x, dd.groups):
            s = _s_part(dd, xs, a1, a2, h, g, ell)
            w1 = mpc(0)
            for t, z in zip(dd.trees, zs):
                w1 += _single_tree_weight(t, dd, xs, phil, z, ell)
            w2 = mpc(0)
            for t, z in zip(dd.bar_trees, zbs):
                w2 += _single_tree_weight(t, dd, xs, phil, z, ell)
            total += s * w1 * w2
        return total


# ----------------------------------------------------------------------------
# Refined formula: only the complement's trees are summed


def complement_tree_factor(lam, tbar, x, cfg, skip=frozenset()):
    """R(tbar) W(tbar) of the refined formula; boxes in skip drop their theta(Z) denominator."""
    g, ell = cfg.g, cfg.ell
    dd = diagram_data(lam, g)
    h = cfg.h
    with ell.context():
        phil = chern_logs(lam, cfg)
        return _complement_tree_factor(dd, tbar, x, phil, kahler_sums(tbar, dd, cfg), cfg.a2, h,
                                       ell, skip)


def _complement_tree_factor(dd, tbar, x, phil, zsum, a2, h, ell, skip=frozenset()):
    if not tbar.vertices:
        return mpc(1)
    c, rho = dd.contents, dd.rho
    in_tree = {frozenset(e) for e in tbar.edges}
    rn = mpc(1)
    for e in sorted(skeleton(dd.outside) - in_tree, key=sorted):
        I, J = sorted(e, key=lambda b: c[b])
        rn *= theta(x[J] + h - x[I], ell) if rho[I] == rho[J] + 1 else theta(x[I] - x[J], ell)
    r = tbar.root
    w = theta(a2 + h - x[r] + zsum[r], ell)
    if r not in skip:
        w /= theta_nonzero(zsum[r], ell, "Kahler sum at root")
    for a, b in tbar.edges:
        w *= theta(x[a] + phil[b] - x[b] - phil[a] + zsum[b], ell)
        if b not in skip:
            w /= theta_nonzero(zsum[b], ell, f"Kahler sum at {b}")
    return rn * w


def refined_sign(lam, g):
    """epsilon(lam): L-shapes of lam plus adjacent-content pairs of lam off the skeleton."""
    dd = diagram_data(lam, g)
    skel = skeleton(dd.inside)
    c = dd.contents
    cnt = sum(1 for I in dd.inside for J in dd.inside
              if c[I] + 1 == c[J] and frozenset((I, J)) not in skel)
    return (-1) ** (l_shape_count(lam, g) + cnt)


def stab_xprime_refined(lam, x, cfg):
    """Envelope of lam through the refined formula (sum over the complement only)."""
    g, ell = cfg.g, cfg.ell
    dd = diagram_data(lam, g)
    a1, a2, h = cfg.a1, cfg.a2, cfg.h
    c, rho = dd.contents, dd.rho
    inside, outside = dd.inside, dd.outside
    corner = tree_root(SIDE_COMPLEMENT, g)
    with ell.context():
        num = mpc(1)
        den = mpc(1)
        for I in dd.rect:
            if c[I] == g.k and I not in inside:
                num *= theta(a1 - x[I] - h, ell)
            if c[I] == g.n - g.k and I in inside:
                num *= theta(a2 + h - x[I], ell)
        for I in dd.rect:
            for J in dd.rect:
                if c[I] + 1 == c[J]:
                    if I in inside and J in outside:
                        num *= theta(x[J] + h - x[I], ell)
                    if I in outside and J in inside:
                        num *= theta(x[I] - x[J], ell)
                if c[I] == c[J] and I in inside and J in outside:
                    den *= theta_nonzero(x[I] - x[J], ell, f"x{I}/x{J}")
                    den *= theta_nonzero(x[I] - x[J] - h, ell, f"x{I}/(x{J} hbar)")
        sign = (-1) ** (g.k * (g.n - g.k)) if not inside else (-1) ** (g.k * (g.n - g.k) - 1)
        prefactor = refined_sign(lam, g) * sign * num / den

        phil = chern_logs(lam, cfg)
        zbs = [kahler_sums(t, dd, cfg) for t in dd.bar_trees]
        skel_bar = skeleton(outside)
        total = mpc(0)
        for xs in _permuted(x, dd.bar_groups):
            nn = mpc(1)
            dn = mpc(1)
            for I in outside:
                if c[I] == g.n - g.k and I != corner:
                    nn *= theta(a2 + h - xs[I], ell)
            for I in outside:
                for J in outside:
                    if c[I] + 1 == c[J] and frozenset((I, J)) not in skel_bar:
                        nn *= theta(xs[J] + h - xs[I], ell) if rho[I] > rho[J] else theta(xs[I] - xs[J], ell)
                    if c[I] == c[J] and rho[I] > rho[J]:
                        dn *= theta_nonzero(xs[I] - xs[J], ell, f"x{I}/x{J}")
                        dn *= theta_nonzero(xs[I] - xs[J] - h, ell, f"x{I}/(x{J} hbar)")
            for tb, zsum in zip(dd.bar_trees, zbs):
                total += nn / dn * _complement_tree_factor(dd, tb, xs, phil, zsum, a2, h, ell)
        return prefactor * total


# ----------------------------------------------------------------------------
# Restriction to fixed points


def neville_at_zero(values, nodes):
    """Value at 0 of the interpolating polynomial through (nodes[i], values[i])."""
    t = list(values)
    m = len(values)
    for step in range(1, m):
        for i in range(m - 1, step - 1, -1):
            t[i] = (t[i] * nodes[i - step] - t[i - 1] * nodes[i]) / (nodes[i - step] - nodes[i])
    return t[-1]


def direction(cfg, label, draw):
    """Deterministic perturbation direction for a (label, draw) pair."""
    rng = random.Random(f"{cfg.seed}|{label}|{draw}")
    with cfg.ell.context():
        return {b: mpc(mpfr(rng.uniform(-1, 1)), mpfr(rng.uniform(-1, 1))) for b in cfg.g.rectangle()}


def limit_at_fixed_point(func, mu, cfg, label, draw=0):
    """lim_{eps -> 0} func(chern(mu) + eps * xi) by Neville extrapolation over the schedule."""
    work = cfg.working()
    xi = direction(cfg, label, draw)
    with work.ell.context():
        base = chern_logs(mu, work)
        nodes = work.schedule()
        values = []
        for e in nodes:
            x = {b: base[b] + e * xi[b] for b in base}
            try:
                values.append(func(x, work))
            except PoleAtArgument as exc:
                raise NonGenericParameters(f"{label}: {exc}") from exc
        return neville_at_zero(values, nodes)


def restrict_xprime(lam, mu, cfg):
    """Envelope of lam restricted to the fixed point mu, as an eps-limit."""
    lam, mu = check_diagram(lam, cfg.g), check_diagram(mu, cfg.g)
    label = f"T'[{list(lam)},{list(mu)}]"
    func = lambda x, c: stab_xprime_eval(lam, x, c)
    first = limit_at_fixed_point(func, mu, cfg, label, 0)
    if cfg.cross_check:
        second = limit_at_fixed_point(func, mu, cfg, label, 1)
        gap = relative_residual(first, second, RESIDUAL_FLOOR)
        if gap > UNSTABLE_TOL:
            raise LimitUnstable(label, gap)
    with cfg.ell.context():
        return mpc(first)


def restrict_xprime_refined(lam, mu, cfg):
    """Refined formula restricted to mu through the same limit as restrict_xprime."""
    lam, mu = check_diagram(lam, cfg.g), check_diagram(mu, cfg.g)
    label = f"T'[{list(lam)},{list(mu)}]"
    func = lambda x, c: stab_xprime_refined(lam, x, c)
    with cfg.ell.context():
        return mpc(limit_at_fixed_point(func, mu, cfg, label, 0))


def restriction_matrix_xprime(cfg, seed=None):
    labels = diagrams(cfg.g)
    entries = [[restrict_xprime(lam, mu, cfg) for mu in labels] for lam in labels]
    meta = {"side": "xprime", "n": cfg.g.n, "k": cfg.g.k, "q": cfg.ell.q_json(),
            "precision": cfg.ell.precision_bits, "guard_bits": cfg.guard_bits, "seed": seed,
            "epsilon_schedule": [str(e) for e in cfg.schedule()], "direction_seed": cfg.seed,
            "parameters": cfg.tbl.to_json()}
    return RestrictionMatrix([list(lab) for lab in labels], entries, meta)


def diagonal_xprime(lam, cfg):
    """(-1)^{k(n-k)} times the theta class of N'^-."""
    g, ell = cfg.g, cfg.ell
    p = bij(check_diagram(lam, g), g)
    with ell.context():
        out = mpc((-1) ** (g.k * (g.n - g.k)))
        for m in range(1, g.k + 1):
            out *= theta(cfg.a1 - cfg.a2 + (2 * g.k - g.n + p[m - 1] - 2 * m - 1) * cfg.h, ell)
        return out


# ----------------------------------------------------------------------------
# Normalisation and quasiperiods


def equivariant_logs_from_kahler(cfg):
    """u_1..u_n (u_n = 0) and hbar on the X side that map to this X' table.

    Only the ratios u_i/u_{i+1} are determined, which is all the prefactor needs.
    """
    g = cfg.g
    h = -cfg.h
    with cfg.ell.context():
        u = [mpc(0)] * (g.n + 1)
        for i in range(g.n - 1, 0, -1):
            d = cfg.z(i)
            if i < g.k:
                d -= h
            elif i > g.n - g.k:
                d += h
            u[i] = u[i + 1] + d
        u[0] = None
        return u, h


def theta_prefactor_xprime(lam, cfg):
    """Normalisation of the envelope of lam: the X-side diagonal entry read through the mirror map."""
    u, h = equivariant_logs_from_kahler(cfg)
    val = diagonal_from_logs(bij(check_diagram(lam, cfg.g), cfg.g), u, h, cfg.ell)
    if abs(val) < POLE_TOL:
        raise NonGenericParameters(f"prefactor of {list(lam)} vanishes")
    return val


def bold_stab_xprime(lam, mu, cfg):
    with cfg.ell.context():
        return theta_prefactor_xprime(lam, cfg) * restrict_xprime(lam, mu, cfg)


def u_function_xprime(lam, mu, cfg):
    """Reference function with the same q-shift behaviour as T'_{lam,mu} in a1 and a2."""
    g, ell = cfg.g, cfg.ell
    lam, mu = check_diagram(lam, g), check_diagram(mu, g)
    with ell.context():
        plus, minus = _polarization(mu, g.n, g.k)
        out = mpc(1)
        for e, c in sorted(plus.items()):
            if e != (0, 0, 0):
                out *= theta(_eval_exps(e, cfg), ell) ** c
        for e, c in sorted(minus.items()):
            if e != (0, 0, 0):
                out /= theta_nonzero(_eval_exps(e, cfg), ell, "polarization weight") ** c
        ch_l = diagram_data(lam, g).chern
        ch_m = diagram_data(mu, g).chern
        for b in g.rectangle():
            zc = -cfg.z(content(b, g))
            out *= phi(_eval_exps(ch_l[b], cfg), zc, ell) / phi(_eval_exps(ch_m[b], cfg), zc, ell)
        d1, d2 = index_degrees_xprime(lam, g)
        for a, za, d in ((cfg.a1, cfg.za(1), d1), (cfg.a2, cfg.za(2), d2)):
            out *= phi(a, -za + d * cfg.h, ell) / phi(a, -za, ell)
        return out
