"""Domination and strong domination on directed graphs.

The definitions generalize control-flow dominance to graphs without a
designated start node: v dominates w when every path to w that avoids v
starts at a vertex reachable from v; strong domination additionally
forbids the start vertex from reaching back to v (no shared cycle) and is
irreflexive.

Two permanently maintained algorithms compute strong domination: a
path-based check straight from the definition and a greatest-fixpoint
computation over predecessor conditions.  They are cross-checked against
each other exhaustively on all small graphs (see `verify_agreement_batch`,
a vectorized engine for that sweep) and the optimization pipeline uses the
fixpoint version.

Vertices are handled as indices with adjacency bitmasks; wrappers at the
bottom lift everything to binding graphs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .binding import BLACKHOLE, BindingGraph, GraphNode, VarNode

__all__ = [
    "closure_masks",
    "dominates_idx",
    "strongly_dominates_idx",
    "strong_dom_pairs_paths",
    "strong_dom_pairs_fixpoint",
    "strong_dom_paths_batch",
    "strong_dom_fixpoint_batch",
    "verify_agreement_batch",
    "DomRelation",
    "graph_index",
    "dominates",
    "strongly_dominates",
    "strong_dom_fixpoint",
    "strong_dominators_of",
]


# ---------------------------------------------------------------------------
# Index-level algorithms (adjacency bitmasks, one int per vertex)

def closure_masks(n: int, adj: list[int]) -> list[int]:
    """Reflexive-transitive reachability masks."""
    reach = [adj[v] | (1 << v) for v in range(n)]
    changed = True
    while changed:
        changed = False
        for v in range(n):
            acc = reach[v]
            rest = acc
            while rest:
                u = (rest & -rest).bit_length() - 1
                rest &= rest - 1
                acc |= reach[u]
            if acc != reach[v]:
                reach[v] = acc
                changed = True
    return reach


def _strict_closure(n: int, adj: list[int], reach: list[int]) -> list[int]:
    """v -> set of w reachable in at least one step."""
    out = []
    for v in range(n):
        acc = 0
        rest = adj[v]
        while rest:
            u = (rest & -rest).bit_length() - 1
            rest &= rest - 1
            acc |= reach[u]
        out.append(acc)
    return out


def _ancestors_avoiding(n: int, adj: list[int], v: int, w: int) -> int:
    """Vertices that start a path to w in the graph with v deleted (w included)."""
    preds = [0] * n
    for u in range(n):
        if u == v:
            continue
        rest = adj[u] & ~(1 << v)
        while rest:
            x = (rest & -rest).bit_length() - 1
            rest &= rest - 1
            preds[x] |= 1 << u
    anc = 1 << w
    frontier = [w]
    while frontier:
        x = frontier.pop()
        rest = preds[x] & ~anc
        while rest:
            u = (rest & -rest).bit_length() - 1
            rest &= rest - 1
            anc |= 1 << u
            frontier.append(u)
    return anc


def dominates_idx(n: int, adj: list[int], v: int, w: int, reach: list[int] | None = None) -> bool:
    """Path-based check of the domination definition."""
    if v == w:
        return True
    reach = reach or closure_masks(n, adj)
    anc = _ancestors_avoiding(n, adj, v, w)
    rest = anc
    while rest:
        u = (rest & -rest).bit_length() - 1
        rest &= rest - 1
        if not reach[v] >> u & 1:
            return False
    return True


def strongly_dominates_idx(
    n: int, adj: list[int], v: int, w: int, reach: list[int] | None = None
) -> bool:
    """Path-based check of the strong-domination definition."""
    if v == w:
        return False
    reach = reach or closure_masks(n, adj)
    anc = _ancestors_avoiding(n, adj, v, w)
    rest = anc
    while rest:
        u = (rest & -rest).bit_length() - 1
        rest &= rest - 1
        if not reach[v] >> u & 1:
            return False
        if reach[u] >> v & 1:  # u != v throughout, so this is a return path
            return False
    return True


def strong_dom_pairs_paths(n: int, adj: list[int]) -> set[tuple[int, int]]:
    reach = closure_masks(n, adj)
    return {
        (v, w)
        for v in range(n)
        for w in range(n)
        if strongly_dominates_idx(n, adj, v, w, reach)
    }


def strong_dom_pairs_fixpoint(n: int, adj: list[int]) -> set[tuple[int, int]]:
    """Greatest fixpoint of the predecessor-wise characterization.

    Start from all pairs with v != w, v reaching w, and no return path,
    then delete pairs with a predecessor of w (other than v) that is not
    itself strongly dominated, until stable.
    """
    reach = closure_masks(n, adj)
    strict = _strict_closure(n, adj, reach)
    dominated = [0] * n  # dominated[v] = mask of w currently held dominated by v
    for v in range(n):
        mask = 0
        for w in range(n):
            if v != w and strict[v] >> w & 1 and not strict[w] >> v & 1:
                mask |= 1 << w
        dominated[v] = mask
    preds = [0] * n
    for u in range(n):
        rest = adj[u]
        while rest:
            w = (rest & -rest).bit_length() - 1
            rest &= rest - 1
            preds[w] |= 1 << u
    changed = True
    while changed:
        changed = False
        for v in range(n):
            not_dom = ~(dominated[v] | (1 << v))
            bad = 0
            rest = not_dom & ((1 << n) - 1)
            while rest:
                u = (rest & -rest).bit_length() - 1
                rest &= rest - 1
                bad |= adj[u]
            new = dominated[v] & ~bad
            if new != dominated[v]:
                dominated[v] = new
                changed = True
    return {(v, w) for v in range(n) for w in range(n) if dominated[v] >> w & 1}


# ---------------------------------------------------------------------------
# Vectorized batch engine (verification sweeps over many graphs at once)

def _batch_closure(adj: np.ndarray, n: int) -> np.ndarray:
    """Reflexive-transitive closure of (G, n) uint32 adjacency masks."""
    reach = adj | (np.uint32(1) << np.arange(n, dtype=np.uint32))
    for _ in range(n):
        prev = reach.copy()
        for v in range(n):
            acc = reach[:, v]
            for u in range(n):
                hit = -((acc >> np.uint32(u)) & np.uint32(1))
                acc = acc | (reach[:, u] & hit)
            reach[:, v] = acc
        if np.array_equal(prev, reach):
            break
    return reach


def _batch_strict(adj: np.ndarray, reach: np.ndarray, n: int) -> np.ndarray:
    strict = np.zeros_like(adj)
    for v in range(n):
        acc = np.zeros_like(adj[:, 0])
        for u in range(n):
            hit = -((adj[:, v] >> np.uint32(u)) & np.uint32(1))
            acc = acc | (reach[:, u] & hit)
        strict[:, v] = acc
    return strict


def strong_dom_paths_batch(adj: np.ndarray, n: int) -> np.ndarray:
    """Path-based strong domination for a batch of graphs.

    adj: (G, n) uint32 successor masks.  Returns (G, n) uint32: entry v is
    the mask of vertices strongly dominated by v.
    """
    reach = _batch_closure(adj, n)
    strict = _batch_strict(adj, reach, n)
    one = np.uint32(1)
    out = np.zeros_like(adj)
    for v in range(n):
        sub = adj & ~(one << np.uint32(v))
        sub = sub.copy()
        sub[:, v] = 0
        anc_reach = _batch_closure(sub, n)  # u -> mask of w reachable avoiding v
        # a start vertex u is good if v reaches it and it cannot return to v
        bad_targets = np.zeros_like(adj[:, 0])
        for u in range(n):
            if u == v:
                continue
            good = ((reach[:, v] >> np.uint32(u)) & one) & ~((strict[:, u] >> np.uint32(v)) & one)
            bad_targets = bad_targets | (anc_reach[:, u] & -(good ^ one))
        mask = ~bad_targets & np.uint32((1 << n) - 1) & ~(one << np.uint32(v))
        out[:, v] = mask
    # strong domination additionally needs v to reach w at all; the trivial
    # path u0 = w enforces it except when w is isolated from v entirely
    for v in range(n):
        out[:, v] &= strict[:, v]
    return out


def strong_dom_fixpoint_batch(adj: np.ndarray, n: int) -> np.ndarray:
    """Greatest-fixpoint strong domination for a batch of graphs."""
    reach = _batch_closure(adj, n)
    strict = _batch_strict(adj, reach, n)
    one = np.uint32(1)
    full = np.uint32((1 << n) - 1)
    dominated = np.zeros_like(adj)
    for v in range(n):
        no_return = np.zeros_like(adj[:, 0])
        for w in range(n):
            no_return |= (~(strict[:, w] >> np.uint32(v)) & one) << np.uint32(w)
        dominated[:, v] = strict[:, v] & no_return & ~(one << np.uint32(v)) & full
    for _ in range(2 * n + 2):
        prev = dominated.copy()
        for v in range(n):
            not_dom = ~(dominated[:, v] | (one << np.uint32(v)))
            bad = np.zeros_like(adj[:, 0])
            for u in range(n):
                hit = -((not_dom >> np.uint32(u)) & one)
                bad = bad | (adj[:, u] & hit)
            dominated[:, v] = dominated[:, v] & ~bad
        if np.array_equal(prev, dominated):
            break
    return dominated


def verify_agreement_batch(masks: np.ndarray, n: int) -> int:
    """Compare both algorithms on graphs encoded as off-diagonal edge masks.

    Each entry of `masks` encodes the n*(n-1) off-diagonal adjacency bits
    row by row.  Returns the number of disagreeing graphs (0 expected).
    """
    g = masks.shape[0]
    adj = np.zeros((g, n), dtype=np.uint32)
    bit = 0
    for v in range(n):
        for w in range(n):
            if v == w:
                continue
            edge = (masks >> bit) & 1
            adj[:, v] |= edge.astype(np.uint32) << np.uint32(w)
            bit += 1
    paths = strong_dom_paths_batch(adj, n)
    fix = strong_dom_fixpoint_batch(adj, n)
    return int(np.count_nonzero((paths != fix).any(axis=1)))


# ---------------------------------------------------------------------------
# Binding-graph wrappers

@dataclass(frozen=True)
class DomRelation:
    pairs: frozenset[tuple[GraphNode, GraphNode]]
    strong: bool


def graph_index(g: BindingGraph) -> tuple[list[GraphNode], dict[GraphNode, int], list[int]]:
    """Deterministic node ordering plus adjacency bitmasks."""
    nodes = g.nodes()
    index = {node: i for i, node in enumerate(nodes)}
    adj = [0] * len(nodes)
    for src, tgt in g.edges:
        adj[index[src]] |= 1 << index[VarNode(tgt)]
    return nodes, index, adj


def dominates(g: BindingGraph, v: GraphNode, w: GraphNode) -> bool:
    nodes, index, adj = graph_index(g)
    return dominates_idx(len(nodes), adj, index[v], index[w])


def strongly_dominates(g: BindingGraph, v: GraphNode, w: GraphNode) -> bool:
    nodes, index, adj = graph_index(g)
    return strongly_dominates_idx(len(nodes), adj, index[v], index[w])


def strong_dom_fixpoint(g: BindingGraph) -> DomRelation:
    nodes, _, adj = graph_index(g)
    pairs = strong_dom_pairs_fixpoint(len(nodes), adj)
    return DomRelation(
        pairs=frozenset((nodes[v], nodes[w]) for v, w in pairs),
        strong=True,
    )


def strong_dominators_of(g: BindingGraph, name: str) -> list[GraphNode]:
    """Strong dominators of a variable node, deterministically ordered."""
    target = VarNode(name)
    rel = strong_dom_fixpoint(g)
    nodes = g.nodes()
    order = {node: i for i, node in enumerate(nodes)}
    doms = [v for v, w in rel.pairs if w == target]
    doms.sort(key=lambda n: order[n])
    return doms
