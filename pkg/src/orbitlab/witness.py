"""Combinatorial counting machinery: witness graphs with SW/SE/P edges,
subordering axioms, initial subsets, combinatorial-type counting with a
budget, complexity-length arithmetic, the linear-gap checker, the distance
formula evaluator, and contribution-set overlap (badness) accounting.

Nesting and transversality are input data on synthetic instances; nothing
here derives them from surface topology.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

__all__ = [
    "WitnessGraph", "ComplexitySegments", "RafiInput", "AxiomReport",
    "complexity_length", "rescaled_complexity", "linear_gap_check",
    "check_suborder_axioms", "enumerate_initial_subsets",
    "count_combinatorial_types", "count_bound", "count_bound_log",
    "rafi_distance", "badness", "cutoff",
]

EDGE_TYPES = ("SW", "SE", "P")


@dataclass
class WitnessGraph:
    """Vertices carry (exponent, span) labels; edges are typed.

    * ``SW`` u -> v: progress happens in the nested witness u before v.
    * ``SE`` u -> v: progress happens in u before the nested witness v.
    * ``P``  u -> v: u and v are transverse and u comes first.

    ``nesting`` lists (child, parent) pairs and ``transverse`` unordered
    pairs; SW/SE edges must connect nested pairs and P edges transverse ones.
    Per-vertex constants (N_V, K_V) and the global constant C feed the
    wideness and admissibility predicates.
    """

    labels: list            # list of (exponent h > 0, span s >= 0)
    edges: dict             # (u, v) -> type
    nesting: set = field(default_factory=set)      # (child, parent)
    transverse: set = field(default_factory=set)   # frozenset({u, v})
    big_c: float = 10.0
    n_const: list | None = None
    k_const: list | None = None

    def __post_init__(self):
        n = len(self.labels)
        if self.n_const is None:
            self.n_const = [100.0] * n
        if self.k_const is None:
            self.k_const = [1.0] * n
        for (h, s) in self.labels:
            if h <= 0 or s < 0:
                raise ValueError("labels must have positive exponent and span >= 0")
        self.transverse = {frozenset(p) for p in self.transverse}
        for (u, v), t in self.edges.items():
            if u == v:
                raise ValueError("edge endpoints must be distinct")
            if t not in EDGE_TYPES:
                raise ValueError(f"unknown edge type {t}")
            if t == "P" and frozenset((u, v)) not in self.transverse:
                raise ValueError("P edge requires declared transversality")
            if t in ("SW", "SE") and not self._nested_pair(u, v):
                raise ValueError(f"{t} edge requires a nested pair")
        self._check_nesting_acyclic()

    def _nested_pair(self, u, v):
        return (u, v) in self.nesting_closure() or (v, u) in self.nesting_closure()

    def nesting_closure(self):
        if not hasattr(self, "_closure"):
            n = len(self.labels)
            reach = {(a, b) for (a, b) in self.nesting}
            changed = True
            while changed:
                changed = False
                for (a, b) in list(reach):
                    for (c, d) in list(reach):
                        if b == c and (a, d) not in reach and a != d:
                            reach.add((a, d))
                            changed = True
            self._closure = reach
        return self._closure

    def _check_nesting_acyclic(self):
        for (a, b) in self.nesting_closure():
            if (b, a) in self.nesting_closure():
                raise ValueError("nesting relation has a cycle")

    def n_vertices(self):
        return len(self.labels)

    def edge(self, u, v):
        return self.edges.get((u, v))

    def contributes_to(self, w, v):
        """w's minimal strict witness superset is v."""
        closure = self.nesting_closure()
        if (w, v) not in closure:
            return False
        for z in range(self.n_vertices()):
            if z not in (w, v) and (w, z) in closure and (z, v) in closure:
                return False
        return True

    def to_json(self) -> str:
        return json.dumps({
            "labels": [[h, s] for (h, s) in self.labels],
            "edges": [[u, v, t] for (u, v), t in sorted(self.edges.items())],
            "nesting": sorted([list(p) for p in self.nesting]),
            "transverse": sorted(sorted(p) for p in self.transverse),
            "big_c": self.big_c,
            "n_const": self.n_const,
            "k_const": self.k_const,
        })

    @classmethod
    def from_json(cls, text: str) -> "WitnessGraph":
        d = json.loads(text)
        return cls(
            labels=[tuple(l) for l in d["labels"]],
            edges={(u, v): t for u, v, t in d["edges"]},
            nesting={tuple(p) for p in d["nesting"]},
            transverse={frozenset(p) for p in d["transverse"]},
            big_c=d.get("big_c", 10.0),
            n_const=d.get("n_const"),
            k_const=d.get("k_const"),
        )


@dataclass
class AxiomReport:
    passed: dict
    witnesses: dict

    @property
    def all_pass(self) -> bool:
        return all(self.passed.values())


def check_suborder_axioms(g: WitnessGraph) -> AxiomReport:
    """Evaluate the four subordering axioms as pure graph predicates.

    (i)   along nested chains z in v in w, z SW w iff v SW w, and w SE z iff
          w SE v;
    (ii)  z SW v and v SE w forces transversality and the time order z P w;
    (iii) z SW v P w, or w P v SE z, forces z transverse to w;
    (iv)  z SW v forbids any w contributing to v with w P z, and v SE z
          forbids any contributing w with z P w.
    """
    closure = g.nesting_closure()
    n = g.n_vertices()
    passed = {k: True for k in ("i", "ii", "iii", "iv")}
    witness = {}

    def fail(key, triple):
        if passed[key]:
            passed[key] = False
            witness[key] = triple

    for z in range(n):
        for v in range(n):
            for w in range(n):
                if len({z, v, w}) < 3:
                    continue
                if (z, v) in closure and (v, w) in closure:
                    if (g.edge(z, w) == "SW") != (g.edge(v, w) == "SW"):
                        fail("i", (z, v, w))
                    if (g.edge(w, z) == "SE") != (g.edge(w, v) == "SE"):
                        fail("i", (z, v, w))
                if g.edge(z, v) == "SW" and g.edge(v, w) == "SE":
                    if frozenset((z, w)) not in g.transverse or g.edge(z, w) != "P":
                        fail("ii", (z, v, w))
                if g.edge(z, v) == "SW" and g.edge(v, w) == "P":
                    if frozenset((z, w)) not in g.transverse:
                        fail("iii", (z, v, w))
                if g.edge(w, v) == "P" and g.edge(v, z) == "SE":
                    if frozenset((z, w)) not in g.transverse:
                        fail("iii", (z, v, w))
                if g.edge(z, v) == "SW" and g.contributes_to(w, v) and g.edge(w, z) == "P":
                    fail("iv", (z, v, w))
                if g.edge(v, z) == "SE" and g.contributes_to(w, v) and g.edge(z, w) == "P":
                    fail("iv", (z, v, w))
    return AxiomReport(passed, witness)


def enumerate_initial_subsets(g: WitnessGraph):
    """Vertex subsets with no edge of any type entering from the complement.

    Requires the edge digraph to be acyclic.
    """
    n = g.n_vertices()
    _assert_edges_acyclic(g)
    out = []
    for mask in range(1 << n):
        subset = {i for i in range(n) if mask >> i & 1}
        ok = all(not (u not in subset and v in subset) for (u, v) in g.edges)
        if ok:
            out.append(frozenset(subset))
    return out


def _assert_edges_acyclic(g: WitnessGraph):
    n = g.n_vertices()
    color = [0] * n
    adj = {}
    for (u, v) in g.edges:
        adj.setdefault(u, []).append(v)

    def visit(u):
        color[u] = 1
        for v in adj.get(u, ()):
            if color[v] == 1:
                raise ValueError("edge digraph has a cycle")
            if color[v] == 0:
                visit(v)
        color[u] = 2

    for u in range(n):
        if color[u] == 0:
            visit(u)


def _structures_up_to(n):
    """All edge-typings of ordered pairs on n labeled vertices: dict pair ->
    one of 0 (none), 1..3 (SW, SE, P)."""
    pairs = [(i, j) for i in range(n) for j in range(n) if i != j]
    for assignment in itertools.product(range(4), repeat=len(pairs)):
        yield dict(zip(pairs, assignment))


def count_combinatorial_types(max_vertices: int, budget: float, exponents) -> int:
    """Labeled typed graphs with <= max_vertices vertices, labels (h, s) with
    h from ``exponents`` and integer span s >= 1, total h*s at most
    ``budget``, counted up to label-preserving isomorphism (Burnside over
    vertex permutations: a fixed pair needs both the edge typing and the
    labeling fixed, and those conditions factor).  A zero budget admits only
    the empty graph."""
    if max_vertices > 4:
        raise ValueError("exhaustive type counting is intended for <= 4 vertices")
    exponents = sorted(set(float(h) for h in exponents))
    if any(h <= 0 for h in exponents):
        raise ValueError("exponents must be positive")
    total = 0
    for n in range(0, max_vertices + 1):
        if n == 0:
            total += 1 if budget >= 0 else 0
            continue
        perms = list(itertools.permutations(range(n)))
        acc = Fraction(0)
        for pi in perms:
            fixed_structures = _count_fixed_structures(n, pi)
            fixed_labelings = _count_fixed_labelings(n, pi, exponents, budget)
            acc += Fraction(fixed_structures * fixed_labelings)
        acc /= len(perms)
        assert acc.denominator == 1
        total += int(acc)
    return total


def _count_fixed_structures(n, pi):
    pairs = [(i, j) for i in range(n) for j in range(n) if i != j]
    # orbits of ordered pairs under the cyclic group generated by pi
    seen = set()
    orbits = 0
    for p in pairs:
        if p in seen:
            continue
        orbits += 1
        q = p
        while True:
            seen.add(q)
            q = (pi[q[0]], pi[q[1]])
            if q == p:
                break
    return 4 ** orbits


def _cycles(pi):
    seen = [False] * len(pi)
    out = []
    for i in range(len(pi)):
        if not seen[i]:
            c = []
            j = i
            while not seen[j]:
                seen[j] = True
                c.append(j)
                j = pi[j]
            out.append(c)
    return out


def _count_fixed_labelings(n, pi, exponents, budget):
    cycles = _cycles(pi)
    sizes = [len(c) for c in cycles]
    memo = {}

    def rec(k, remaining):
        if k == len(sizes):
            return 1
        key = (k, round(remaining, 9))
        got = memo.get(key)
        if got is not None:
            return got
        count = 0
        for h in exponents:
            smax = math.floor(remaining / (sizes[k] * h) + 1e-12)
            for s in range(1, int(smax) + 1):
                count += rec(k + 1, remaining - sizes[k] * h * s)
        memo[key] = count
        return count

    return rec(0, float(budget))


@dataclass
class ComplexitySegments:
    """Weighted decomposition sum(e_i * l_i) of a geodesic of length sum(l_i)."""

    segments: list  # (length l_i >= 0, exponent e_i >= 0)

    def __post_init__(self):
        for (l, e) in self.segments:
            if l < 0 or e < 0:
                raise ValueError("lengths and exponents must be non-negative")

    @property
    def total_length(self):
        return sum(l for l, _ in self.segments)


def complexity_length(segments: ComplexitySegments) -> float:
    return float(sum(l * e for l, e in segments.segments))


def rescaled_complexity(segments: ComplexitySegments, ambient_exponent: float) -> float:
    if ambient_exponent <= 0:
        raise ValueError("ambient exponent must be positive")
    return complexity_length(segments) / ambient_exponent


def linear_gap_check(segments: ComplexitySegments, h: float, eps_b: float,
                     h_sub: float, tol: float = 1e-12):
    """Check the linear-gap bound on a segment list whose tail travels below
    the ambient exponent.

    Applicable when the final segments of total length >= eps_b * R all carry
    exponents <= h_sub < h; then the rescaled complexity must not exceed
    R * (1 - c) for c = eps_b * (1 - h_sub / h) - tol.  Returns
    (verdict, achieved_c) where verdict is "holds", "fails", or
    "not-applicable" when the precondition gate rejects the input.
    """
    if not (0 <= eps_b <= 1) or not (0 < h_sub < h):
        return "not-applicable", 0.0
    R = segments.total_length
    if R <= 0:
        return "not-applicable", 0.0
    tail_needed = eps_b * R
    acc = 0.0
    for (l, e) in reversed(segments.segments):
        if acc >= tail_needed - 1e-15:
            break
        if e > h_sub + 1e-12:
            return "not-applicable", 0.0
        acc += l
    if acc < tail_needed - 1e-12:
        return "not-applicable", 0.0
    achieved = 1.0 - rescaled_complexity(segments, h) / R
    c_required = eps_b * (1.0 - h_sub / h) - tol
    return ("holds" if achieved >= c_required else "fails"), achieved


def count_bound_log(g: WitnessGraph, eps_entropy) -> float:
    """log of the count bound: sum over vertices of (h + eps) * s.

    Exact when labels and eps are Fractions, which is how the sweep checks
    the budget inequality with zero rounding.
    """
    log_val = 0
    for (h, s) in g.labels:
        log_val = log_val + (h + eps_entropy) * s
    return log_val


def count_bound(g: WitnessGraph, eps_entropy: float) -> float:
    """Product over vertices of exp((h + eps) * s).

    With total budget sum(h*s) <= r and eps at most eps_r * min(h), the
    product is bounded by exp((1 + eps_r) * r).
    """
    return math.exp(float(count_bound_log(g, eps_entropy)))


def cutoff(x, k):
    """0 below the threshold, identity above."""
    return 0 if x <= k else x


@dataclass
class RafiInput:
    """Terms of the combinatorial distance formula.

    * ``nonannular``: projection distances d_Y over non-annular pieces.
    * ``annular_twists``: d_alpha over two-sided annuli not simultaneously
      short (log-scaled inside the cutoff).
    * ``short_two_sided``: per simultaneously-short two-sided curve, the
      plane-factor distance.
    * ``short_one_sided``: per simultaneously-short one-sided curve, the
      line-factor distance.
    * ``only_short_x`` / ``only_short_y``: lengths (0, eps] of the curves
      short at just one endpoint.
    """

    nonannular: list = field(default_factory=list)
    annular_twists: list = field(default_factory=list)
    short_two_sided: list = field(default_factory=list)
    short_one_sided: list = field(default_factory=list)
    only_short_x: list = field(default_factory=list)
    only_short_y: list = field(default_factory=list)
    threshold: float = 4.0

    def __post_init__(self):
        if self.threshold <= 0:
            raise ValueError("threshold must be positive")
        for group in (self.nonannular, self.annular_twists, self.short_two_sided,
                      self.short_one_sided):
            if any(v < 0 for v in group):
                raise ValueError("distances must be non-negative")
        for group in (self.only_short_x, self.only_short_y):
            if any(v <= 0 for v in group):
                raise ValueError("lengths must be positive")


def rafi_distance(inp: RafiInput) -> float:
    """Evaluate the distance formula; empty maxima contribute zero."""
    k = inp.threshold
    total = sum(cutoff(d, k) for d in inp.nonannular)
    total += sum(cutoff(math.log(d), k) if d > 0 else 0.0 for d in inp.annular_twists)
    total += max(inp.short_two_sided, default=0.0)
    total += max(inp.short_one_sided, default=0.0)
    total += max((math.log(1.0 / l) for l in inp.only_short_x), default=0.0)
    total += max((math.log(1.0 / l) for l in inp.only_short_y), default=0.0)
    return float(total)


def badness(contribution_sets: dict, total_length: float, k_const: dict,
            big_c: float, witness_budget: int | None = None):
    """Overlap accounting for witness contribution sets.

    ``contribution_sets`` maps witness id -> list of (a, b) subintervals of
    [0, total_length].  For each witness, the bad length is the measure of
    its contribution set covered by some other witness's set.  The family is
    admissible when every bad length is at most total_length / (K_V * C),
    and limited when the witness count stays within the budget.
    """
    ids = sorted(contribution_sets)
    merged = {}
    for v in ids:
        ivs = sorted((float(a), float(b)) for a, b in contribution_sets[v])
        for a, b in ivs:
            if not (0.0 <= a <= b <= total_length + 1e-12):
                raise ValueError("intervals must sit inside [0, total_length]")
        merged[v] = _merge(ivs)
    bad = {}
    for v in ids:
        others = _merge([iv for u in ids if u != v for iv in merged[u]])
        bad[v] = _overlap_length(merged[v], others)
    admissible = all(bad[v] <= total_length / (k_const[v] * big_c) + 1e-12 for v in ids)
    limited = witness_budget is None or len(ids) <= witness_budget
    return bad, admissible, limited


def _merge(intervals):
    out = []
    for a, b in sorted(intervals):
        if out and a <= out[-1][1]:
            out[-1] = (out[-1][0], max(out[-1][1], b))
        else:
            out.append((a, b))
    return out


def _overlap_length(ivs_a, ivs_b):
    total = 0.0
    for a1, b1 in ivs_a:
        for a2, b2 in ivs_b:
            lo, hi = max(a1, a2), min(b1, b2)
            if hi > lo:
                total += hi - lo
    return total
