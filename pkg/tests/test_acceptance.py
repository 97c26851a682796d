"""One test per acceptance criterion; each prints a single PASS/FAIL line."""

import dataclasses
import itertools
import math
import random
import time

from gmpy2 import mpfr

from stabenv import envelope_x as ex
from stabenv import envelope_xprime as ep
from stabenv import mirror
from stabenv.rect_combinatorics import (
    SIDE_COMPLEMENT,
    SIDE_LAMBDA,
    GrassData,
    bij,
    bij_inverse,
    boxes,
    complement_boxes,
    content,
    diagrams,
    dominates,
    enumerate_trees,
    subsets,
)
from stabenv.theta_core import (
    EllipticParams,
    four_term_residual,
    inversion_residual,
    log_q,
    quasiperiod_residual,
    random_log,
    relative_residual,
    three_term_residual,
)

SMALL_SHAPES = [(2, 1), (3, 1), (4, 1), (4, 2), (5, 1), (5, 2)]


def _polar(rng):
    r, a = rng.uniform(0.01, 0.5), rng.uniform(-math.pi, math.pi)
    return (r * math.cos(a), r * math.sin(a))


def test_01_theta_laws(record_criterion):
    rng = random.Random(101)
    start = time.perf_counter()
    worst = mpfr(0)
    for _ in range(100):
        ell = EllipticParams(_polar(rng), 256)
        with ell.context():
            w = random_log(rng)
        worst = max(worst, quasiperiod_residual(w, ell), inversion_residual(w, ell))
    secs = time.perf_counter() - start
    ok = worst <= 1e-40 and secs < 5
    assert record_criterion(1, "theta quasiperiod and inversion", ok, f"worst {float(worst):.2e}, {secs:.2f} s")


def test_02_three_and_four_term(record_criterion):
    rng = random.Random(202)
    start = time.perf_counter()
    worst3 = worst4 = mpfr(0)
    for _ in range(100):
        ell = EllipticParams(_polar(rng), 256)
        with ell.context():
            logs = [random_log(rng) for _ in range(7)]
        worst3 = max(worst3, three_term_residual(*logs[:5], ell))
        worst4 = max(worst4, four_term_residual(*logs, ell))
    secs = time.perf_counter() - start
    ok = max(worst3, worst4) <= 1e-35 and secs < 10
    assert record_criterion(2, "3-term and 4-term identities", ok,
                            f"3-term {float(worst3):.2e}, 4-term {float(worst4):.2e}, {secs:.2f} s")


def test_03_k1_mother_function(record_criterion, ell):
    start = time.perf_counter()
    worst = mpfr(0)
    for n in range(2, 7):
        for draw in range(5):
            rows = mirror.mother_k1_residuals(GrassData(n, 1), seed=1000 * n + draw, ell=ell)
            worst = max([worst] + [r for _, _, r in rows])
    secs = time.perf_counter() - start
    ok = worst <= 1e-30 and secs < 30
    assert record_criterion(3, "k=1 Mother function, n=2..6", ok, f"worst {float(worst):.2e}, {secs:.1f} s")


def test_04_mirror_small_rectangle(record_criterion):
    start = time.perf_counter()
    reports = [mirror.verify_mirror(GrassData(4, 2), seed, tol=1e-10) for seed in (1, 2, 3)]
    secs = time.perf_counter() - start
    worst = max(r.worst for r in reports)
    ok = all(r.passed and len(r.pairs) == 36 for r in reports) and secs < 300
    assert record_criterion(4, "mirror identity n=4 k=2, 3 seeds", ok, f"worst {float(worst):.2e}, {secs:.1f} s")


def test_05_mirror_larger(record_criterion):
    start = time.perf_counter()
    reports = [mirror.verify_mirror(GrassData(n, 2), 11, tol=1e-8) for n in (5, 6)]
    secs = time.perf_counter() - start
    counts = [len(r.pairs) for r in reports]
    ok = all(r.passed for r in reports) and counts == [100, 225] and secs < 1800
    detail = ", ".join(f"n={r.n} worst {float(r.worst):.2e}" for r in reports)
    assert record_criterion(5, "mirror identity n=5,6 k=2", ok, f"{detail}, {secs:.1f} s")


def test_06_triangularity_and_diagonals(record_criterion, ell):
    tri = diag = mpfr(0)
    for n, k in SMALL_SHAPES:
        g = GrassData(n, k)
        cx = ex.XEnvelopeConfig(g, ex.draw_x_table(g, 600 + n + k, ell), ell)
        mx = ex.restriction_matrix_x(cx)
        scale = max(abs(v) for row in mx.entries for v in row)
        for (a, p), (b, q) in itertools.product(enumerate(mx.labels), repeat=2):
            if p == q:
                diag = max(diag, relative_residual(mx.entries[a][b], ex.diagonal_x(p, cx)))
            elif not dominates(p, q):
                tri = max(tri, abs(mx.entries[a][b]) / scale)
        cp = ep.XprimeEnvelopeConfig(g, ep.draw_xprime_table(g, 700 + n + k, ell), ell)
        mp = ep.restriction_matrix_xprime(cp)
        scale = max(abs(v) for row in mp.entries for v in row)
        labels = diagrams(g)
        for (a, lam), (b, mu) in itertools.product(enumerate(labels), repeat=2):
            if lam == mu:
                diag = max(diag, relative_residual(mp.entries[a][b], ep.diagonal_xprime(lam, cp)))
            elif not boxes(lam) <= boxes(mu):
                tri = max(tri, abs(mp.entries[a][b]) / scale)
    ok = tri <= 1e-20 and diag <= 1e-30
    assert record_criterion(6, "triangularity and diagonals, n<=5, both sides", ok,
                            f"off-order {float(tri):.2e} of scale, diagonal {float(diag):.2e}")


def test_07_combinatorics(record_criterion):
    failures = []
    for n in range(2, 9):
        for k in range(1, n // 2 + 1):
            g = GrassData(n, k)
            lams = diagrams(g)
            images = [bij(lam, g) for lam in lams]
            if sorted(images) != subsets(g) or len(lams) != math.comb(n, k):
                failures.append(("bijection", n, k))
            if any(bij_inverse(p, g) != lam for lam, p in zip(lams, images)):
                failures.append(("inverse", n, k))
            for (lam, p), (mu, q) in itertools.product(zip(lams, images), repeat=2):
                if (boxes(lam) <= boxes(mu)) != all(a <= b for a, b in zip(p, q)):
                    failures.append(("order", lam, mu))
            for lam in lams:
                for side, cells, root in ((SIDE_LAMBDA, boxes(lam), (1, 1)),
                                          (SIDE_COMPLEMENT, complement_boxes(lam, g), (n - k, k))):
                    per = {}
                    for b in cells:
                        per[content(b, g)] = per.get(content(b, g), 0) + 1
                    trees = enumerate_trees(lam, g, side)
                    if len(trees) != 2 ** sum(c - 1 for c in per.values()):
                        failures.append(("count", n, k, lam, side))
                    for t in trees:
                        if not _is_rooted_spanning_tree(t, cells, root):
                            failures.append(("tree", n, k, lam, side))
    ok = not failures
    assert record_criterion(7, "combinatorics exhaustive n<=8", ok, f"{len(failures)} failures")


def _is_rooted_spanning_tree(t, cells, root):
    if not cells:
        return t.edges == ()
    if t.root != root or len(t.edges) != len(cells) - 1:
        return False
    indeg = {c: 0 for c in cells}
    for a, b in t.edges:
        if a not in indeg or b not in indeg or abs(a[0] - b[0]) + abs(a[1] - b[1]) != 1:
            return False
        indeg[b] += 1
    if indeg[root] != 0 or any(v != 1 for c, v in indeg.items() if c != root):
        return False
    reached, stack, kids = {root}, [root], t.children()
    while stack:
        for b in kids.get(stack.pop(), ()):
            reached.add(b)
            stack.append(b)
    return reached == set(cells)


def test_08_cancellation(record_criterion, ell):
    worst = mpfr(0)
    count = 0
    for n in (4, 5):
        for *_, ratio in mirror.all_cancellation_ratios(GrassData(n, 2), seed=8, ell=ell):
            with ell.context():
                worst = max(worst, abs(ratio + 1))
            count += 1
    ok = worst <= 1e-25 and count == 14
    assert record_criterion(8, "tree-pair cancellation R_{4,2}, R_{5,2}", ok, f"{count} cases, worst |ratio+1| {float(worst):.2e}")


def test_09_gkm(record_criterion, ell):
    g = GrassData(4, 2)
    worst = mpfr(0)
    pairs = mirror.curve_connected_pairs(g)
    for seed in (1, 2):
        xt = ex.draw_x_table(g, 900 + seed, ell)
        for lam, mu, _ in pairs:
            worst = max(worst, mirror.gkm_check_pair(lam, mu, xt, g))
    ok = worst <= 1e-8 and len(pairs) == 12
    assert record_criterion(9, "GKM gluing n=4 k=2, 2 seeds", ok, f"{len(pairs)} pairs, worst {float(worst):.2e}")


def test_10_refined_formula(record_criterion, ell):
    worst = mpfr(0)
    checks = 0
    for n, k in SMALL_SHAPES:
        g = GrassData(n, k)
        for draw in range(20):
            cp = ep.XprimeEnvelopeConfig(g, ep.draw_xprime_table(g, 10_000 * n + 100 * k + draw, ell), ell,
                                         seed=draw)
            for lam, nu in itertools.product(diagrams(g), repeat=2):
                if boxes(lam) <= boxes(nu):
                    full = ep.restrict_xprime(lam, nu, cp)
                    refined = ep.restrict_xprime_refined(lam, nu, cp)
                    worst = max(worst, relative_residual(refined, full, mpfr("1e-30")))
                    checks += 1
    ok = worst <= 1e-25
    assert record_criterion(10, "refined formula vs full, n<=5", ok, f"{checks} comparisons, worst {float(worst):.2e}")


def test_11_quasiperiods(record_criterion, ell):
    lq = log_q(ell)
    worst = mpfr(0)
    checks = 0
    for n, k in [(3, 1), (4, 2), (5, 2)]:
        g = GrassData(n, k)
        cx = ex.XEnvelopeConfig(g, ex.draw_x_table(g, 1100 + n, ell), ell)
        for p, q in itertools.product(subsets(g), repeat=2):
            if not dominates(p, q):
                continue
            for i in range(1, n + 1):
                tbl = cx.tbl.copy()
                with ell.context():
                    tbl.assign(f"u{i}", cx.u(i) + lq)
                shifted = ex.XEnvelopeConfig(g, tbl, ell)
                with ell.context():
                    a = ex.restrict_x(p, q, shifted) / ex.restrict_x(p, q, cx)
                    b = ex.u_function_x(p, q, shifted) / ex.u_function_x(p, q, cx)
                worst = max(worst, relative_residual(a, b))
                checks += 1
        cp = ep.XprimeEnvelopeConfig(g, ep.draw_xprime_table(g, 1200 + n, ell), ell)
        for lam, mu in itertools.product(diagrams(g), repeat=2):
            if not boxes(lam) <= boxes(mu):
                continue
            for key in ("a1", "a2"):
                tbl = cp.tbl.copy()
                with ell.context():
                    tbl.assign(key, cp.tbl.log(key) + lq)
                shifted = dataclasses.replace(cp, tbl=tbl)
                with ell.context():
                    a = ep.restrict_xprime(lam, mu, shifted) / ep.restrict_xprime(lam, mu, cp)
                    b = ep.u_function_xprime(lam, mu, shifted) / ep.u_function_xprime(lam, mu, cp)
                worst = max(worst, relative_residual(a, b))
                checks += 1
    ok = worst <= 1e-25
    assert record_criterion(11, "quasiperiod conformance, both sides", ok, f"{checks} shifts, worst {float(worst):.2e}")
