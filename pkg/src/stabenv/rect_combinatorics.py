"""Fixed-point and tree combinatorics on the rectangle R_{n,k}.

A diagram is a tuple of weakly decreasing positive row lengths. Row i runs over
1..n-k and holds the boxes (i, 1..lambda_i), so every row length is at most k.
The content of box (i, j) is i - j + k and lies in 1..n-1.
"""

import itertools
from dataclasses import dataclass
from functools import lru_cache

from .errors import BoxNotInTree, DiagramOutOfRectangle, InvalidNK, InvolutionUndefined
from .theta_core import Monomial

SIDE_LAMBDA = "lambda"
SIDE_COMPLEMENT = "complement"


@dataclass(frozen=True)
class GrassData:
    n: int
    k: int

    def __post_init__(self):
        if not (isinstance(self.n, int) and isinstance(self.k, int)):
            raise InvalidNK("n and k must be integers")
        if self.k < 1 or self.n < 2 * self.k:
            raise InvalidNK(f"need k >= 1 and n >= 2k, got n={self.n}, k={self.k}")

    @property
    def rows(self):
        return self.n - self.k

    def rectangle(self):
        return [(i, j) for i in range(1, self.rows + 1) for j in range(1, self.k + 1)]


def normalize_diagram(rows):
    return tuple(int(r) for r in rows if int(r) > 0)


def check_diagram(lam, g):
    lam = normalize_diagram(lam)
    if len(lam) > g.rows or any(r > g.k for r in lam):
        raise DiagramOutOfRectangle(f"{list(lam)} does not fit R_{{{g.n},{g.k}}}")
    if any(a < b for a, b in zip(lam, lam[1:])):
        raise DiagramOutOfRectangle(f"{list(lam)} is not weakly decreasing")
    return lam


def boxes(lam):
    return frozenset((i + 1, j + 1) for i, r in enumerate(lam) for j in range(r))


def complement_boxes(lam, g):
    return frozenset(g.rectangle()) - boxes(lam)


def complement_diagram(lam, g):
    """The complement rotated by 180 degrees, read as a diagram."""
    lam = check_diagram(lam, g)
    padded = list(lam) + [0] * (g.rows - len(lam))
    return normalize_diagram(g.k - r for r in reversed(padded))


def content(box, g):
    return box[0] - box[1] + g.k


def boundary_path(lam, g):
    """Boundary steps 'D' and 'U' of the diagram, n of them."""
    lam = check_diagram(lam, g)
    padded = list(lam) + [0] * (g.rows - len(lam))
    steps = []
    height = g.k
    for r in padded:
        while height > r:
            steps.append("D")
            height -= 1
        steps.append("U")
    steps.extend("D" * height)
    return steps


def bij(lam, g):
    """Subset of the D-step positions along the boundary path."""
    return tuple(s + 1 for s, c in enumerate(boundary_path(lam, g)) if c == "D")


def bij_inverse(p, g):
    p = tuple(sorted(p))
    if len(p) != g.k or len(set(p)) != g.k or not all(1 <= v <= g.n for v in p):
        raise DiagramOutOfRectangle(f"{p} is not a {g.k}-subset of 1..{g.n}")
    rows = []
    height = g.k
    for s in range(1, g.n + 1):
        if s in p:
            height -= 1
        else:
            rows.append(height)
    return normalize_diagram(rows)


@lru_cache(maxsize=None)
def _diagrams(n, k):
    out = []

    def rec(prefix, cap, left):
        if left == 0:
            out.append(normalize_diagram(prefix))
            return
        for v in range(cap, -1, -1):
            rec(prefix + [v], v, left - 1)

    rec([], k, n - k)
    return tuple(sorted(out, key=lambda lam: bij(lam, GrassData(n, k))))


def diagrams(g):
    """All diagrams in R_{n,k}, ordered by their subsets lexicographically."""
    return list(_diagrams(g.n, g.k))


def subsets(g):
    return list(itertools.combinations(range(1, g.n + 1), g.k))


def partial_order(p, q):
    """'>' if p dominates q componentwise, '<' for the reverse, '=' or 'incomparable'."""
    p, q = tuple(sorted(p)), tuple(sorted(q))
    if p == q:
        return "="
    if all(a >= b for a, b in zip(p, q)):
        return ">"
    if all(a <= b for a, b in zip(p, q)):
        return "<"
    return "incomparable"


def dominates(p, q):
    """True when p_i >= q_i for all i."""
    return partial_order(p, q) in ("=", ">")


def chern_at_fixed_point(lam, g):
    """Box -> monomial in a1, a2, hbar given by the fixed-point rule."""
    inside = boxes(check_diagram(lam, g))
    out = {}
    for (i, j) in g.rectangle():
        if (i, j) in inside:
            out[(i, j)] = Monomial({"a1": 1, "hbar": j - 1})
        else:
            out[(i, j)] = Monomial({"a2": 1, "hbar": g.rows - i + 1})
    return out


def chern_exponents(lam, g):
    """Box -> (a1 exponent, a2 exponent, hbar exponent); integer form of the rule above."""
    inside = boxes(check_diagram(lam, g))
    return {(i, j): ((1, 0, j - 1) if (i, j) in inside else (0, 1, g.rows - i + 1))
            for (i, j) in g.rectangle()}


@dataclass(frozen=True)
class BoxData:
    content: int
    rho: int
    beta1: int
    beta2: int
    v: int


def box_functions(lam, box, g):
    lam = check_diagram(lam, g)
    i, j = box
    if not (1 <= i <= g.rows and 1 <= j <= g.k):
        raise DiagramOutOfRectangle(f"box {box} outside R_{{{g.n},{g.k}}}")
    inside = box in boxes(lam)
    c = content(box, g)
    steps = boundary_path(lam, g)
    b1 = 0
    if inside:
        pair = (steps[c - 1], steps[c])
        b1 = 1 if pair == ("U", "D") else (-1 if pair == ("D", "U") else 0)
    b2 = 1 if c < g.k else (-1 if c > g.n - g.k else 0)
    rho = i + j if inside else -i - j
    return BoxData(c, rho, b1, b2, b1 + b2)


@lru_cache(maxsize=None)
def _box_table(lam, n, k):
    g = GrassData(n, k)
    return {b: box_functions(lam, b, g) for b in g.rectangle()}


def box_table(lam, g):
    return _box_table(check_diagram(lam, g), g.n, g.k)


# ----------------------------------------------------------------------------
# Trees


@dataclass(frozen=True)
class Tree:
    side: str
    root: tuple
    edges: tuple  # sorted (tail, head) pairs, oriented away from the root
    vertices: frozenset

    def children(self):
        out = {}
        for a, b in self.edges:
            out.setdefault(a, []).append(b)
        return out

    def to_json(self):
        return {"side": self.side, "root": list(self.root) if self.root else None,
                "edges": [[list(a), list(b)] for a, b in self.edges]}


@dataclass(frozen=True)
class TreePair:
    t: Tree
    tbar: Tree


def skeleton(cells):
    """Undirected edges between horizontally or vertically adjacent cells."""
    out = set()
    for (i, j) in cells:
        if (i + 1, j) in cells:
            out.add(frozenset(((i, j), (i + 1, j))))
        if (i, j + 1) in cells:
            out.add(frozenset(((i, j), (i, j + 1))))
    return out


def l_shapes(cells):
    """Pairs of edges (i,j)-(i+1,j) and (i+1,j)-(i+1,j+1) inside the cell set."""
    out = []
    for (i, j) in sorted(cells):
        if (i + 1, j) in cells and (i + 1, j + 1) in cells:
            out.append((frozenset(((i, j), (i + 1, j))), frozenset(((i + 1, j), (i + 1, j + 1)))))
    return out


def orient(undirected, root, cells, side):
    """Orient a spanning edge set away from root; None unless it is a spanning tree."""
    adj = {c: [] for c in cells}
    for e in undirected:
        a, b = tuple(e)
        adj[a].append(b)
        adj[b].append(a)
    seen = {root}
    stack = [root]
    directed = []
    while stack:
        a = stack.pop()
        for b in sorted(adj[a]):
            if b not in seen:
                seen.add(b)
                directed.append((a, b))
                stack.append(b)
    if len(seen) != len(cells) or len(undirected) != len(cells) - 1:
        return None
    return Tree(side, root, tuple(sorted(directed)), frozenset(cells))


def tree_root(side, g):
    return (1, 1) if side == SIDE_LAMBDA else (g.rows, g.k)


@lru_cache(maxsize=None)
def _trees(cells, root, side):
    if not cells:
        return (Tree(side, None, (), frozenset()),)
    skel = skeleton(cells)
    shapes = l_shapes(cells)
    out = []
    for choice in itertools.product((0, 1), repeat=len(shapes)):
        removed = {shape[c] for shape, c in zip(shapes, choice)}
        tree = orient(skel - removed, root, cells, side)
        assert tree is not None
        out.append(tree)
    return tuple(out)


def enumerate_trees(lam, g, side=SIDE_LAMBDA):
    """All trees on lam (side 'lambda') or on its complement (side 'complement')."""
    lam = check_diagram(lam, g)
    cells = boxes(lam) if side == SIDE_LAMBDA else complement_boxes(lam, g)
    return list(_trees(frozenset(cells), tree_root(side, g), side))


def enumerate_tree_pairs(lam, g):
    return [TreePair(t, tb) for t in enumerate_trees(lam, g, SIDE_LAMBDA)
            for tb in enumerate_trees(lam, g, SIDE_COMPLEMENT)]


def l_shape_count(lam, g, side=SIDE_LAMBDA):
    lam = check_diagram(lam, g)
    cells = boxes(lam) if side == SIDE_LAMBDA else complement_boxes(lam, g)
    return len(l_shapes(frozenset(cells)))


def subtree(box, t):
    """Boxes of the canonically oriented subtree of t hanging from box (box first)."""
    if box not in t.vertices:
        raise BoxNotInTree(f"{box} is not a vertex of the tree")
    kids = t.children()
    out = [box]
    stack = [box]
    while stack:
        a = stack.pop()
        for b in kids.get(a, ()):
            out.append(b)
            stack.append(b)
    return out


def kappa(t):
    """Edges against the canonical direction: down/left on lambda, up/right on the complement."""
    if t.side == SIDE_LAMBDA:
        return sum(1 for a, b in t.edges if b[0] < a[0] or b[1] < a[1])
    return sum(1 for a, b in t.edges if b[0] > a[0] or b[1] > a[1])


def involution_square(box):
    c1, d = box
    c = c1 - 1
    return [(c, d), (c, d + 1), (c + 1, d + 1)]


def involution(tbar, box, g):
    """Trade the edge (c+1,d+1)->(c+1,d) for (c,d)->(c+1,d), or back, at box (c+1,d)."""
    cells = tbar.vertices
    if box not in cells or any(s not in cells for s in involution_square(box)):
        raise InvolutionUndefined(f"box {box} has no 2x2 square of the complement above it")
    c1, d = box
    into_from_right = ((c1, d + 1), (c1, d))
    into_from_above = ((c1 - 1, d), (c1, d))
    undirected = {frozenset(e) for e in tbar.edges}
    has_right = frozenset(into_from_right) in undirected
    has_above = frozenset(into_from_above) in undirected
    if has_right == has_above:
        raise InvolutionUndefined(f"box {box} needs exactly one of the two square edges")
    if has_right and into_from_right not in tbar.edges:
        raise InvolutionUndefined(f"edge into {box} from the right is not oriented into the box")
    if has_above and into_from_above not in tbar.edges:
        raise InvolutionUndefined(f"edge into {box} from above is not oriented into the box")
    if has_right:
        undirected = (undirected - {frozenset(into_from_right)}) | {frozenset(into_from_above)}
    else:
        undirected = (undirected - {frozenset(into_from_above)}) | {frozenset(into_from_right)}
    out = orient(undirected, tbar.root, cells, tbar.side)
    if out is None:
        raise InvolutionUndefined(f"swap at {box} does not give a spanning tree")
    return out


def admissible_involutions(lam, g):
    """All (tree, box) pairs on the complement where the involution applies."""
    out = []
    for tb in enumerate_trees(lam, g, SIDE_COMPLEMENT):
        for box in sorted(tb.vertices):
            try:
                involution(tb, box, g)
            except InvolutionUndefined:
                continue
            out.append((tb, box))
    return out
