"""Binding analysis: annotated types, binding graphs, parameter cycles.

The analysis decorates a simple-typing derivation with binder names on the
arrows, then reads off a conservative approximation of which argument
subterms may become bound to which abstraction binders during evaluation.
Unknown positions (higher-order traffic, the term's own exposed parameters)
are routed to a synthetic blackhole node.

Two independent constructions of the same relation are provided: the
decorated inference rules (`decorate` + `binding_graph`) and a purely
syntactic upward spine search (`spine_search_graph`) kept as a permanent
cross-check.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import networkx as nx

from .infer import Arrow, Base, BareType, TypedTerm
from .terms import (
    Abs,
    App,
    Letrec,
    Path,
    Term,
    Var,
    binders,
    path_key,
    pretty,
    subterms,
)

__all__ = [
    "ABase",
    "AArrow",
    "AnnotatedType",
    "bare",
    "eps_of",
    "ann_type_str",
    "Decoration",
    "decorate",
    "VarNode",
    "ExprNode",
    "BLACKHOLE",
    "GraphNode",
    "BindingGraph",
    "binding_graph",
    "spine_search_graph",
    "parameter_cycles",
    "to_dot",
]


# ---------------------------------------------------------------------------
# Annotated types

@dataclass(frozen=True)
class ABase:
    name: str = "i"


@dataclass(frozen=True)
class AArrow:
    dom: "AnnotatedType"
    cod: "AnnotatedType"
    ann: str | None = None  # None renders as epsilon


AnnotatedType = ABase | AArrow


def bare(t: AnnotatedType) -> BareType:
    if isinstance(t, ABase):
        return Base(t.name)
    return Arrow(bare(t.dom), bare(t.cod))


def eps_of(t: BareType) -> AnnotatedType:
    """The all-epsilon annotated version of a bare type."""
    if isinstance(t, Base):
        return ABase(t.name)
    return AArrow(eps_of(t.dom), eps_of(t.cod), None)


def ann_type_str(t: AnnotatedType) -> str:
    if isinstance(t, ABase):
        return t.name
    dom = ann_type_str(t.dom)
    if isinstance(t.dom, AArrow):
        dom = f"({dom})"
    ann = t.ann if t.ann is not None else "e"
    return f"({dom} -> {ann_type_str(t.cod)})^{ann}"


# ---------------------------------------------------------------------------
# Decoration (least fixpoint of the annotation flow)

@dataclass
class Decoration:
    typed: TypedTerm
    ann: dict[Path, AnnotatedType]
    rounds: dict[Path, int] = field(default_factory=dict)

    @property
    def root(self) -> AnnotatedType:
        return self.ann[()]

    @property
    def max_rounds(self) -> int:
        return max(self.rounds.values(), default=0)


def decorate(typed: TypedTerm) -> Decoration:
    """Annotate every subterm's type with binder names.

    Letrec assumptions start all-epsilon and are re-derived until stable;
    each abstraction stamps its binder on its own arrow, and parameters are
    assumed all-epsilon.  Annotations only ever move from epsilon to a
    name, so the fixpoint is reached in a handful of rounds.
    """
    ann: dict[Path, AnnotatedType] = {}
    rounds: dict[Path, int] = {}

    def derive(path: Path, t: Term, env: dict[str, AnnotatedType]) -> AnnotatedType:
        if isinstance(t, Var):
            ty = env.get(t.name)
            if ty is None:
                ty = eps_of(typed.free_types[t.name])
        elif isinstance(t, Abs):
            node_ty = typed.type_at(path)
            assert isinstance(node_ty, Arrow)
            dom = eps_of(node_ty.dom)
            inner = dict(env)
            inner[t.binder] = dom
            cod = derive(path + ("body",), t.body, inner)
            ty = AArrow(dom, cod, t.binder)
        elif isinstance(t, App):
            tf = derive(path + ("fun",), t.fun, env)
            ta = derive(path + ("arg",), t.arg, env)
            assert isinstance(tf, AArrow) and bare(tf.dom) == bare(ta)
            ty = tf.cod
        elif isinstance(t, Letrec):
            assumptions = {
                name: eps_of(typed.type_at(path + (("def", i),)))
                for i, (name, _) in enumerate(t.defs)
            }
            n = 0
            while True:
                n += 1
                if n > len(t.defs) + 3:  # pragma: no cover - safety bound
                    raise RuntimeError("annotation fixpoint failed to stabilize")
                inner = dict(env)
                inner.update(assumptions)
                derived = {
                    name: derive(path + (("def", i),), d, inner)
                    for i, (name, d) in enumerate(t.defs)
                }
                if derived == assumptions:
                    break
                assumptions = derived
            rounds[path] = max(rounds.get(path, 0), n)
            inner = dict(env)
            inner.update(assumptions)
            ty = derive(path + ("body",), t.body, inner)
        else:  # pragma: no cover
            raise TypeError(f"not a term: {t!r}")
        ann[path] = ty
        return ty

    derive((), typed.term, {})
    return Decoration(typed, ann, rounds)


# ---------------------------------------------------------------------------
# Binding graphs

@dataclass(frozen=True)
class VarNode:
    name: str


@dataclass(frozen=True)
class ExprNode:
    path: Path
    label: str


@dataclass(frozen=True)
class _Blackhole:
    def __repr__(self) -> str:  # pragma: no cover - cosmetic
        return "BLACKHOLE"


BLACKHOLE = _Blackhole()

GraphNode = VarNode | ExprNode | _Blackhole


@dataclass(frozen=True)
class BindingGraph:
    """Directed graph housing the binding relation.

    An edge (source, x) encodes "x may be bound to source": sources flow
    into the variable nodes that may receive them.  Argument occurrences
    that are themselves bound variables share that variable's node; other
    arguments get one expression node per occurrence.
    """

    var_names: tuple[str, ...]
    expr_nodes: tuple[ExprNode, ...]
    edges: frozenset[tuple[GraphNode, str]]

    def nodes(self) -> list[GraphNode]:
        out: list[GraphNode] = [VarNode(n) for n in self.var_names]
        out.extend(self.expr_nodes)
        out.append(BLACKHOLE)
        return out

    def successors(self) -> dict[GraphNode, set[GraphNode]]:
        adj: dict[GraphNode, set[GraphNode]] = {n: set() for n in self.nodes()}
        for src, tgt in self.edges:
            adj[src].add(VarNode(tgt))
        return adj

    def in_sources(self, name: str) -> set[GraphNode]:
        return {src for src, tgt in self.edges if tgt == name}

    def rendered_edges(self) -> list[tuple[str, str]]:
        """Deduplicated (binder, source-label) pairs, sorted."""
        out = set()
        for src, tgt in self.edges:
            if isinstance(src, VarNode):
                label = src.name
            elif isinstance(src, ExprNode):
                label = src.label
            else:
                label = "BLACKHOLE"
            out.add((tgt, label))
        return sorted(out)


def _graph_from_edges(term: Term, edges: set[tuple[GraphNode, str]]) -> BindingGraph:
    exprs = sorted(
        {src for src, _ in edges if isinstance(src, ExprNode)},
        key=lambda e: path_key(e.path),
    )
    return BindingGraph(
        var_names=tuple(sorted(binders(term))),
        expr_nodes=tuple(exprs),
        edges=frozenset(edges),
    )


def _arg_node(term: Term, path: Path, arg: Term, bound: frozenset[str]) -> GraphNode:
    if isinstance(arg, Var) and arg.name in bound:
        return VarNode(arg.name)
    return ExprNode(path, pretty(arg))


def _blackhole_edges(ty: AnnotatedType, edges: set[tuple[GraphNode, str]]) -> None:
    # walk the result spine, outermost annotation included
    while isinstance(ty, AArrow):
        if ty.ann is not None:
            edges.add((BLACKHOLE, ty.ann))
        ty = ty.cod


def binding_graph(dec: Decoration) -> BindingGraph:
    """Binding graph from the decorated typing derivation.

    At every application the function type's outer annotation produces a
    binding edge for the argument, and the argument type's result spine is
    routed to the blackhole.  The root type's own result spine is exposed
    the same way (the term's future arguments are unknown).
    """
    term = dec.typed.term
    bound = binders(term)
    edges: set[tuple[GraphNode, str]] = set()
    for path, t in subterms(term):
        if isinstance(t, App):
            tf = dec.ann[path + ("fun",)]
            assert isinstance(tf, AArrow)
            if tf.ann is not None:
                edges.add((_arg_node(term, path + ("arg",), t.arg, bound), tf.ann))
            _blackhole_edges(dec.ann[path + ("arg",)], edges)
    _blackhole_edges(dec.root, edges)
    return _graph_from_edges(term, edges)


# ---------------------------------------------------------------------------
# Naive spine search (independent construction)

def spine_search_graph(term: Term) -> BindingGraph:
    """Binding graph by upward spine search from each abstraction.

    From every binder the search climbs the spine it sits on, skipping one
    application per intervening binder (the generalized-beta pairing).  A
    matching application yields a binding edge; entering argument position
    or running off the root yields a blackhole edge; letrec definitions
    continue the climb at every occurrence of the defined name.
    """
    bound = binders(term)
    parent: dict[Path, tuple[Path, object]] = {}
    node_at: dict[Path, Term] = {}
    for path, t in subterms(term):
        node_at[path] = t
        if isinstance(t, Abs):
            parent[path + ("body",)] = (path, "body")
        elif isinstance(t, App):
            parent[path + ("fun",)] = (path, "fun")
            parent[path + ("arg",)] = (path, "arg")
        elif isinstance(t, Letrec):
            for i in range(len(t.defs)):
                parent[path + (("def", i),)] = (path, ("def", i))
            parent[path + ("body",)] = (path, "body")

    # scope-resolved occurrences of each letrec definition
    occurrences: dict[tuple[Path, str], list[Path]] = {}

    def index_occurrences(path: Path, t: Term, env: dict[str, tuple[Path, str]]) -> None:
        if isinstance(t, Var):
            owner = env.get(t.name)
            if owner is not None:
                occurrences.setdefault(owner, []).append(path)
        elif isinstance(t, Abs):
            inner = dict(env)
            inner.pop(t.binder, None)
            index_occurrences(path + ("body",), t.body, inner)
        elif isinstance(t, App):
            index_occurrences(path + ("fun",), t.fun, env)
            index_occurrences(path + ("arg",), t.arg, env)
        elif isinstance(t, Letrec):
            inner = dict(env)
            for name, _ in t.defs:
                inner[name] = (path, name)
            for i, (_, d) in enumerate(t.defs):
                index_occurrences(path + (("def", i),), d, inner)
            index_occurrences(path + ("body",), t.body, inner)

    index_occurrences((), term, {})

    edges: set[tuple[GraphNode, str]] = set()

    def climb(x: str, path: Path, debt: int, visited: set) -> None:
        key = (path, debt)
        if key in visited:
            return
        visited.add(key)
        up = parent.get(path)
        if up is None:
            edges.add((BLACKHOLE, x))
            return
        ppath, step = up
        pnode = node_at[ppath]
        if isinstance(pnode, Abs):
            climb(x, ppath, debt + 1, visited)
        elif isinstance(pnode, App):
            if step == "fun":
                if debt == 0:
                    arg_path = ppath + ("arg",)
                    edges.add((_arg_node(term, arg_path, node_at[arg_path], bound), x))
                else:
                    climb(x, ppath, debt - 1, visited)
            else:  # argument position: future consumers are unknown
                edges.add((BLACKHOLE, x))
        elif isinstance(pnode, Letrec):
            if step == "body":
                climb(x, ppath, debt, visited)
            else:
                name = pnode.defs[step[1]][0]
                for occ in occurrences.get((ppath, name), []):
                    climb(x, occ, debt, visited)

    for path, t in subterms(term):
        if isinstance(t, Abs):
            climb(t.binder, path, 0, set())
    return _graph_from_edges(term, edges)


# ---------------------------------------------------------------------------
# Parameter cycles

def parameter_cycles(g: BindingGraph) -> list[list[str]]:
    """Simple cycles among variable nodes, canonically rotated and sorted."""
    dg = nx.DiGraph()
    for src, tgt in g.edges:
        if isinstance(src, VarNode):
            dg.add_edge(src.name, tgt)
    seen = set()
    out = []
    for cycle in nx.simple_cycles(dg):
        i = cycle.index(min(cycle))
        canon = tuple(cycle[i:] + cycle[:i])
        if canon not in seen:
            seen.add(canon)
            out.append(list(canon))
    out.sort(key=lambda c: (len(c), c))
    return out


# ---------------------------------------------------------------------------
# DOT rendering

def _dot_escape(s: str) -> str:
    return s.replace("\\", "\\\\").replace('"', '\\"')


def to_dot(g: BindingGraph) -> str:
    """Deterministic DOT rendering of a binding graph."""
    expr_ids = {e: f"e{i}" for i, e in enumerate(sorted(g.expr_nodes, key=lambda e: path_key(e.path)))}

    def node_id(n: GraphNode) -> str:
        if isinstance(n, VarNode):
            return f"v_{n.name}"
        if isinstance(n, ExprNode):
            return expr_ids[n]
        return "blackhole"

    lines = []
    for name in g.var_names:
        lines.append(f'  "v_{name}" [shape=ellipse, label="{_dot_escape(name)}"];')
    for e in sorted(g.expr_nodes, key=lambda e: path_key(e.path)):
        lines.append(f'  "{expr_ids[e]}" [shape=box, label="{_dot_escape(e.label)}"];')
    if any(src is BLACKHOLE for src, _ in g.edges):
        lines.append('  "blackhole" [shape=circle, style=filled, label=""];')
    rendered = sorted(f'  "{node_id(src)}" -> "v_{tgt}";' for src, tgt in g.edges)
    lines.extend(rendered)
    if not lines:
        return "digraph binding { }"
    return "digraph binding {\n" + "\n".join(lines) + "\n}"
