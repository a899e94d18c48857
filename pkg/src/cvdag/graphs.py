"""DAGs, orderings, CPDAGs, equivalence-class conversion, and graph distances.

Nodes are integers 0..p-1. A directed edge is the ordered pair (parent, child);
undirected edges are stored canonically as (low, high).
"""

from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass, field
from pathlib import Path

from .errors import DataFormatError, ValidationError


@dataclass(frozen=True)
class Dag:
    """Directed acyclic graph; acyclicity is verified at construction."""

    p: int
    edges: frozenset[tuple[int, int]]

    def __post_init__(self):
        object.__setattr__(self, "edges", frozenset((int(a), int(b)) for a, b in self.edges))
        for a, b in self.edges:
            if a == b:
                raise ValidationError(f"self-loop at node {a}")
            if not (0 <= a < self.p and 0 <= b < self.p):
                raise ValidationError(f"edge ({a},{b}) out of range for p={self.p}")
        # Kahn's algorithm doubles as the acyclicity check
        order = _kahn(self.p, self.edges)
        if order is None:
            raise ValidationError("edge set contains a directed cycle")
        object.__setattr__(self, "_topo", tuple(order))

    def parents(self, j: int) -> frozenset[int]:
        return frozenset(a for a, b in self.edges if b == j)

    def children(self, j: int) -> frozenset[int]:
        return frozenset(b for a, b in self.edges if a == j)

    def skeleton(self) -> frozenset[tuple[int, int]]:
        return frozenset((min(a, b), max(a, b)) for a, b in self.edges)


@dataclass(frozen=True)
class Ordering:
    """A permutation of 0..p-1; position i holds the i-th variable."""

    order: tuple[int, ...]

    def __post_init__(self):
        order = tuple(int(j) for j in self.order)
        if sorted(order) != list(range(len(order))):
            raise ValidationError(f"not a permutation of 0..{len(order) - 1}: {order}")
        object.__setattr__(self, "order", order)

    def __iter__(self):
        return iter(self.order)

    def __len__(self):
        return len(self.order)

    def __getitem__(self, i):
        return self.order[i]


@dataclass(frozen=True)
class Cpdag:
    """Markov-equivalence-class representative: compelled edges directed."""

    p: int
    directed: frozenset[tuple[int, int]]
    undirected: frozenset[tuple[int, int]] = field(default=frozenset())

    def __post_init__(self):
        directed = frozenset((int(a), int(b)) for a, b in self.directed)
        undirected = frozenset(
            (min(int(a), int(b)), max(int(a), int(b))) for a, b in self.undirected
        )
        for a, b in directed | undirected:
            if a == b:
                raise ValidationError(f"self-loop at node {a}")
            if not (0 <= a < self.p and 0 <= b < self.p):
                raise ValidationError(f"edge ({a},{b}) out of range for p={self.p}")
        dir_pairs = {(min(a, b), max(a, b)) for a, b in directed}
        if dir_pairs & undirected:
            raise ValidationError("a pair appears both directed and undirected")
        if len(dir_pairs) != len(directed):
            raise ValidationError("both orientations of one pair are directed")
        object.__setattr__(self, "directed", directed)
        object.__setattr__(self, "undirected", undirected)

    def skeleton(self) -> frozenset[tuple[int, int]]:
        return frozenset((min(a, b), max(a, b)) for a, b in self.directed) | self.undirected


def _kahn(p: int, edges) -> list[int] | None:
    """Topological sort, smallest node index first; None if cyclic."""
    indeg = [0] * p
    children: list[list[int]] = [[] for _ in range(p)]
    for a, b in edges:
        indeg[b] += 1
        children[a].append(b)
    heap = [j for j in range(p) if indeg[j] == 0]
    heapq.heapify(heap)
    out: list[int] = []
    while heap:
        j = heapq.heappop(heap)
        out.append(j)
        for c in children[j]:
            indeg[c] -= 1
            if indeg[c] == 0:
                heapq.heappush(heap, c)
    return out if len(out) == p else None


def topological_order(g: Dag) -> Ordering:
    """Parents-before-children ordering, ties broken by smallest node index."""
    return Ordering(g._topo)


def descendants(g: Dag, j: int) -> frozenset[int]:
    """All nodes reachable from j by directed paths, excluding j itself."""
    if not 0 <= j < g.p:
        raise ValidationError(f"node {j} out of range for p={g.p}")
    children: dict[int, list[int]] = {}
    for a, b in g.edges:
        children.setdefault(a, []).append(b)
    seen: set[int] = set()
    stack = list(children.get(j, ()))
    while stack:
        k = stack.pop()
        if k not in seen:
            seen.add(k)
            stack.extend(children.get(k, ()))
    seen.discard(j)
    return frozenset(seen)


def is_consistent(ordering: Ordering, g: Dag) -> bool:
    """True iff every edge points from earlier to later in the ordering."""
    if len(ordering) != g.p:
        raise ValidationError(f"ordering of length {len(ordering)} for p={g.p}")
    pos = {j: i for i, j in enumerate(ordering)}
    return all(pos[a] < pos[b] for a, b in g.edges)


def vstructures(g: Dag) -> frozenset[tuple[int, int, int]]:
    """Unshielded colliders (a, c, b) with a->c<-b, a<b, and a,b non-adjacent."""
    adj = g.skeleton()
    out = set()
    for c in range(g.p):
        pa = sorted(g.parents(c))
        for a, b in itertools.combinations(pa, 2):
            if (min(a, b), max(a, b)) not in adj:
                out.add((a, c, b))
    return frozenset(out)


def dag_to_cpdag(g: Dag) -> Cpdag:
    """Equivalence-class representative: v-structures stay directed, then the
    orientation rules R1-R4 are applied to closure; whatever remains is undirected.
    """
    compelled: set[tuple[int, int]] = set()
    for a, c, b in vstructures(g):
        compelled.add((a, c))
        compelled.add((b, c))
    undirected = {pair for pair in g.skeleton() if pair not in
                  {(min(a, b), max(a, b)) for a, b in compelled}}
    directed, undirected = _orient_closure(g.p, compelled, undirected)
    return Cpdag(g.p, frozenset(directed), frozenset(undirected))


def _orient_closure(p, directed: set, undirected: set):
    """Iterate the four Meek orientation rules to a fixpoint."""

    def adjacent(a, b):
        return ((min(a, b), max(a, b)) in undirected
                or (a, b) in directed or (b, a) in directed)

    def orient(a, b):
        undirected.discard((min(a, b), max(a, b)))
        directed.add((a, b))

    changed = True
    while changed:
        changed = False
        for lo, hi in sorted(undirected):
            for a, b in ((lo, hi), (hi, lo)):
                if _rule_fires(p, directed, undirected, adjacent, a, b):
                    orient(a, b)
                    changed = True
                    break
            if changed:
                break
    return directed, undirected


def _rule_fires(p, directed, undirected, adjacent, a, b) -> bool:
    """True if any of R1-R4 forces orientation a -> b of the undirected pair."""
    parents_a = {x for x, y in directed if y == a}
    parents_b = {x for x, y in directed if y == b}
    und_nbrs_a = {y if x == a else x for x, y in undirected if a in (x, y)}
    # R1: c -> a, c and b non-adjacent
    for c in parents_a:
        if not adjacent(c, b):
            return True
    # R2: directed path a -> c -> b
    for c in parents_b:
        if (a, c) in directed:
            return True
    # R3: a - c, a - d, c -> b, d -> b with c, d non-adjacent
    cands = sorted(parents_b & und_nbrs_a)
    for c, d in itertools.combinations(cands, 2):
        if not adjacent(c, d):
            return True
    # R4: a - c, c -> d, d -> b with c, b non-adjacent and a, d adjacent
    for c in sorted(und_nbrs_a):
        if adjacent(c, b):
            continue
        for cc, d in directed:
            if cc == c and (d, b) in directed and adjacent(a, d):
                return True
    return False


def hamming_dag(g_true: Dag, g_est: Dag, *, reversal_as_one: bool = False) -> int:
    """Missing plus extra directed edges; a reversed edge costs 2 by default.

    ``reversal_as_one`` switches to the common SHD variant where a reversal
    counts once.
    """
    if g_true.p != g_est.p:
        raise ValidationError(f"node counts differ: {g_true.p} vs {g_est.p}")
    diff = len(g_true.edges - g_est.edges) + len(g_est.edges - g_true.edges)
    if reversal_as_one:
        reversed_pairs = sum(1 for a, b in g_true.edges if (b, a) in g_est.edges)
        diff -= reversed_pairs
    return diff


def _pair_kind(c: Cpdag, pair: tuple[int, int]) -> str:
    a, b = pair
    if pair in c.undirected:
        return "undirected"
    if (a, b) in c.directed:
        return "forward"
    if (b, a) in c.directed:
        return "backward"
    return "absent"


def hamming_cpdag(c_true: Cpdag, c_est: Cpdag) -> int:
    """Count pairs whose orientation kind (absent/undirected/direction) differs."""
    if c_true.p != c_est.p:
        raise ValidationError(f"node counts differ: {c_true.p} vs {c_est.p}")
    pairs = c_true.skeleton() | c_est.skeleton()
    return sum(1 for pair in pairs if _pair_kind(c_true, pair) != _pair_kind(c_est, pair))


# --- graph text format -------------------------------------------------------
# First line: p. One line per edge: "parent child", 0-based; undirected CPDAG
# edges carry a trailing "u". Edges are written sorted, so write/read/write is
# byte-identical.


def format_graph(g: Dag | Cpdag) -> str:
    lines = [str(g.p)]
    if isinstance(g, Dag):
        lines += [f"{a} {b}" for a, b in sorted(g.edges)]
    else:
        entries = [(a, b, "") for a, b in g.directed]
        entries += [(a, b, " u") for a, b in g.undirected]
        lines += [f"{a} {b}{u}" for a, b, u in sorted(entries)]
    return "\n".join(lines) + "\n"


def write_graph(g: Dag | Cpdag, path) -> None:
    Path(path).write_text(format_graph(g))


def _parse_graph_lines(text: str, where: str):
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [(i + 1, ln) for i, ln in enumerate(lines) if ln and not ln.startswith("#")]
    if not lines:
        raise DataFormatError(f"{where}: empty graph file")
    lineno, head = lines[0]
    try:
        p = int(head)
    except ValueError:
        raise DataFormatError(f"{where}:{lineno}: expected node count, got {head!r}") from None
    directed, undirected = [], []
    for lineno, ln in lines[1:]:
        parts = ln.split()
        if len(parts) == 3 and parts[2] == "u":
            bucket = undirected
        elif len(parts) == 2:
            bucket = directed
        else:
            raise DataFormatError(f"{where}:{lineno}: expected 'parent child [u]', got {ln!r}")
        try:
            bucket.append((int(parts[0]), int(parts[1])))
        except ValueError:
            raise DataFormatError(f"{where}:{lineno}: non-integer node in {ln!r}") from None
    return p, directed, undirected


def read_dag(path) -> Dag:
    p, directed, undirected = _parse_graph_lines(Path(path).read_text(), str(path))
    if undirected:
        raise DataFormatError(f"{path}: undirected edges not allowed in a DAG file")
    return Dag(p, frozenset(directed))


def read_cpdag(path) -> Cpdag:
    p, directed, undirected = _parse_graph_lines(Path(path).read_text(), str(path))
    return Cpdag(p, frozenset(directed), frozenset(undirected))
