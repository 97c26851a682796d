"""Independent reference evaluators used only by the test-suite.

Nothing here imports the package. Theta is evaluated two ways: a plain
truncated product, and mpmath's Jacobi theta_1 series.
"""

import itertools

import mpmath

mpmath.mp.prec = 320


def theta_product(x, q, terms=400):
    """theta(x) = (x^{1/2} - x^{-1/2}) prod_{i>=1} (1 - q^i x)(1 - q^i / x)."""
    x = mpmath.mpc(x)
    q = mpmath.mpc(q)
    out = mpmath.sqrt(x) - 1 / mpmath.sqrt(x)
    qi = mpmath.mpc(1)
    for _ in range(terms):
        qi *= q
        out *= (1 - qi * x) * (1 - qi / x)
    return out


def theta_from_log(w, q, terms=400):
    """Product oracle driven by a log, so half powers follow exp(w/2)."""
    w = mpmath.mpc(w)
    x = mpmath.exp(w)
    out = mpmath.exp(w / 2) - mpmath.exp(-w / 2)
    qi = mpmath.mpc(1)
    q = mpmath.mpc(q)
    for _ in range(terms):
        qi *= q
        out *= (1 - qi * x) * (1 - qi / x)
    return out


def theta_jacobi(w, q):
    """Same function through mpmath.jtheta(1, v, nome) with x = e^{2iv}, nome^2 = q."""
    w = mpmath.mpc(w)
    q = mpmath.mpc(q)
    v = -1j * w / 2
    nome = mpmath.sqrt(q)
    euler = mpmath.qp(q)
    return 1j * mpmath.jtheta(1, v, nome) / (q ** mpmath.mpf(0.125) * euler)


def tangent_theta_n3k1(p, u, h, q):
    """Direct product of theta over T_p X for n=3, k=1 (4 factors), log inputs."""
    out = mpmath.mpc(1)
    i = p
    for j in (1, 2, 3):
        if j == i:
            continue
        out *= theta_from_log(u[i] - u[j], q)
        out *= theta_from_log(u[j] - u[i] - h, q)
    return out


def stab_x_n3k1_p2(y, u, h, z, q):
    """Hand-expanded envelope of p={2} for n=3, k=1: three theta factors over one."""
    t = lambda w: theta_from_log(w, q)
    e = 1 - 3 + 2 - 2
    return t(y + u[1] - h) * t(y + u[2] - z + e * h) / t(-z + e * h) * t(y + u[3])


def stab_xprime_k1(m, x, a1, a2, h, zs, q):
    """Closed product for the k=1 dual envelope of the m-th point, X' variables.

    x[1..n-1] are Chern roots, x[0]=a1, x[n]=a2; zs[1..n-1] Kahler logs.
    """
    n = len(zs)
    t = lambda w: theta_from_log(w, q)
    xs = [a1] + [x[i] for i in range(1, n)] + [a2]
    num = mpmath.mpc(1)
    den = mpmath.mpc(1)
    for i in range(1, m):
        s = sum(zs[j] for j in range(i, m))
        num *= t(xs[i] - xs[i - 1] + h + s)
        den *= t(h + s)
    num *= t(xs[m] - xs[m - 1] + h)
    for i in range(m + 1, n + 1):
        s = sum(zs[j] for j in range(m, i))
        num *= t(xs[i] - xs[i - 1] + h - s)
        den *= t(-s)
    return (-1) ** n * num / den


def mother_n2(x1, y, u, h, z, q):
    """k=1, n=2 Mother function in X variables: two thetas, a1 = z, a2 = 1."""
    t = lambda w: theta_from_log(w, q)
    a1, a2 = z, mpmath.mpc(0)
    hp = -h
    return t(x1 - a1 + hp + u[1] + y) * t(a2 - x1 + hp + u[2] + y)


def index_degrees_bruteforce(p, n):
    """Degree in each u_i of prod_{i in p, j not in p, j > i} u_j / (u_i hbar)."""
    deg = {i: 0 for i in range(1, n + 1)}
    for i in p:
        for j in range(i + 1, n + 1):
            if j not in p:
                deg[j] += 1
                deg[i] -= 1
    return [deg[i] for i in range(1, n + 1)]


def n_minus_signs_bruteforce(p, n):
    """Evaluate every tangent weight on sigma=(1..n); return the negative ones.

    Weights are (coefficient vector over u, hbar power) with u_a/u_b -> e_a - e_b.
    """
    out = []
    for i in p:
        for j in range(1, n + 1):
            if j in p:
                continue
            for vec, hp in (({i: 1, j: -1}, 0), ({j: 1, i: -1}, -1)):
                val = sum(c * a for a, c in vec.items())
                if val < 0:
                    out.append((tuple(sorted(vec.items())), hp))
    return sorted(out)


def containment_vs_bruhat(diagrams, bij):
    """Brute-force pairs (lam, mu) where containment and componentwise order disagree."""
    bad = []
    for lam, mu in itertools.product(diagrams, repeat=2):
        bl = {(i + 1, j + 1) for i, r in enumerate(lam) for j in range(r)}
        bm = {(i + 1, j + 1) for i, r in enumerate(mu) for j in range(r)}
        contained = bl <= bm
        p, q = bij(lam), bij(mu)
        below = all(a <= b for a, b in zip(p, q))
        if contained != below:
            bad.append((lam, mu))
    return bad
