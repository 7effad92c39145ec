"""Granularity filtering, salient-view extraction, and template verbalization.

Turns a GraphBundle into a compact natural-language structural context made
of three fragments, always concatenated in AST, CFG, DFG order.  Filtering is
parameterized by a granularity level:

* level A keeps only skeleton kinds (function definitions, branches, loops,
  calls, returns);
* level B additionally keeps assignments, declarations, and operators;
* level C keeps every semantic node and removes only grammar noise such as
  type-expansion nodes.

A shared size budget scales with the level: it bounds both the number of
enumerated CFG paths and the length of traced DFG chains.  Degenerate views
(an entry-to-exit path with no interior node, a parameter that feeds a sink
directly with no intermediate hop) are not verbalized; the per-function
summary sentence already accounts for them.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum

from .errors import MissingPlaceholderError
from .graphs import (
    AstNode,
    CategoryCounts,
    CfgEdge,
    CfgGraph,
    CfgNode,
    DfgGraph,
    DfgNode,
    GraphBundle,
    SourceFunction,
    count_ast_categories,
    parse,
)

__all__ = [
    "Level",
    "LEVEL_BUDGETS",
    "RETAINED_AST_KINDS",
    "RETAINED_CFG_KINDS",
    "NOISE_AST_KINDS",
    "AstFunctionView",
    "CfgPath",
    "CfgFunctionView",
    "DfgChain",
    "DfgFunctionView",
    "SalientViews",
    "StructuralContext",
    "filter_ast",
    "filter_cfg",
    "filter_dfg",
    "aggregate_ast",
    "enumerate_paths",
    "trace_chains",
    "build_salient_views",
    "verbalize",
    "generate_structural_context",
    "TEMPLATE_PATTERNS",
]


class Level(str, Enum):
    A = "A"
    B = "B"
    C = "C"


# Path-count and chain-length budget per level.  Chosen to scale with the
# level while keeping the rendered context within a few hundred tokens.
LEVEL_BUDGETS: dict[Level, int] = {Level.A: 4, Level.B: 8, Level.C: 16}

NOISE_AST_KINDS = {"type-expansion"}

_SKELETON_KINDS = {"function-def", "branch", "loop", "call", "return"}
RETAINED_AST_KINDS: dict[Level, set[str] | None] = {
    Level.A: set(_SKELETON_KINDS),
    Level.B: _SKELETON_KINDS | {"assignment", "declaration", "operator"},
    Level.C: None,  # everything except noise kinds
}

RETAINED_CFG_KINDS = {"entry", "exit", "branch", "loop", "call", "return"}

# Enumeration safety valve; budgets are far below this.
_MAX_ENUMERATED_PATHS = 4096


# ---------------------------------------------------------------------------
# Filtering
# ---------------------------------------------------------------------------


def filter_ast(ast: AstNode, level: Level) -> AstNode:
    """Prune the AST to the node kinds retained at ``level``.

    Children of pruned nodes are spliced up to the nearest retained ancestor,
    so the result is still a tree rooted at the function definition.
    """
    retained = RETAINED_AST_KINDS[level]

    def keep(node: AstNode) -> bool:
        if node.kind in NOISE_AST_KINDS:
            return False
        if node.kind in ("function-def", "unit"):
            return True
        if retained is None:
            return True
        return node.kind in retained

    def rebuild(node: AstNode) -> list[AstNode]:
        kept_children: list[AstNode] = []
        for child in node.children:
            kept_children.extend(rebuild(child))
        if keep(node):
            clone = AstNode(
                kind=node.kind,
                name=node.name,
                line=node.line,
                children=kept_children,
                role=node.role,
                uid=node.uid,
            )
            return [clone]
        return kept_children

    rebuilt = rebuild(ast)
    if len(rebuilt) == 1:
        return rebuilt[0]
    return AstNode(kind="unit", name=None, line=ast.line, children=rebuilt, uid=ast.uid)


def filter_cfg(cfg: CfgGraph, level: Level) -> CfgGraph:
    """Fold maximal chains of plain statement nodes into single edges.

    Entry/exit, branch, loop, call, and return nodes survive; a folded edge
    keeps the first branch label found along the chain and remains a back
    edge if any folded hop was one.
    """
    nodes = {n.id: n for n in cfg.nodes}
    edges: set[tuple[int, int, str, bool]] = {
        (e.src, e.dst, e.label, e.back) for e in cfg.edges
    }

    for node_id in sorted(nodes):
        node = nodes[node_id]
        if node.kind in RETAINED_CFG_KINDS:
            continue
        incoming = [e for e in edges if e[1] == node_id and e[0] != node_id]
        outgoing = [e for e in edges if e[0] == node_id and e[1] != node_id]
        for src, _, in_label, in_back in incoming:
            for _, dst, out_label, out_back in outgoing:
                label = in_label if in_label in ("True", "False") else out_label
                edges.add((src, dst, label, in_back or out_back))
        edges = {e for e in edges if node_id not in (e[0], e[1])}
        del nodes[node_id]

    out = CfgGraph()
    out.nodes = [n for n in cfg.nodes if n.id in nodes]
    out.edges = [
        CfgEdge(src, dst, label, back)
        for src, dst, label, back in sorted(edges, key=lambda e: (e[0], e[1], e[2]))
    ]
    return out


def filter_dfg(dfg: DfgGraph, level: Level) -> DfgGraph:
    """Keep parameter sources and the cross-statement edges on their chains.

    Edges inside a single statement are dropped, as are flows that originate
    at a local definition with no parameter upstream.  Parameter nodes are
    always retained.
    """
    by_id = {n.id: n for n in dfg.nodes}
    cross = [
        e
        for e in dfg.edges
        if by_id[e.src].stmt != by_id[e.dst].stmt or by_id[e.src].fn != by_id[e.dst].fn
    ]
    adj: dict[int, list[int]] = {}
    for e in cross:
        adj.setdefault(e.src, []).append(e.dst)

    reached: set[int] = set()
    stack = [n.id for n in dfg.nodes if n.kind == "param"]
    param_ids = set(stack)
    while stack:
        current = stack.pop()
        if current in reached:
            continue
        reached.add(current)
        stack.extend(adj.get(current, ()))

    kept_edges = [e for e in cross if e.src in reached and e.dst in reached]
    kept_node_ids = {e.src for e in kept_edges} | {e.dst for e in kept_edges} | param_ids

    out = DfgGraph()
    out.nodes = [n for n in dfg.nodes if n.id in kept_node_ids]
    out.edges = kept_edges
    return out


# ---------------------------------------------------------------------------
# Salient views
# ---------------------------------------------------------------------------


@dataclass
class AstFunctionView:
    name: str
    line: int
    counts: CategoryCounts
    call_chain: list[str]
    conditions: list[str]
    returns: list[str]
    collapsed: int = 1


@dataclass
class CfgPath:
    nodes: list[CfgNode]
    taken: list[str | None]  # edge label leaving nodes[i]; None for the last

    def score(self) -> int:
        return sum(1 for n in self.nodes if n.kind in ("branch", "call"))


@dataclass
class CfgFunctionView:
    name: str
    retained: int
    total: int
    branches: int
    calls: int
    paths: list[CfgPath]
    truncated: bool
    branch_nodes: list[CfgNode] = field(default_factory=list)


@dataclass
class DfgChain:
    nodes: list[DfgNode]
    truncated: bool = False


@dataclass
class DfgFunctionView:
    name: str
    edges_retained: int
    edges_total: int
    params: list[DfgNode]
    chains: list[DfgChain]


@dataclass
class SalientViews:
    ast_views: list[AstFunctionView]
    cfg_views: list[CfgFunctionView]
    dfg_views: list[DfgFunctionView]


@dataclass
class StructuralContext:
    t_ast: str
    t_cfg: str
    t_dfg: str
    degraded: bool = False

    @property
    def s(self) -> str:
        return "\n".join(part for part in (self.t_ast, self.t_cfg, self.t_dfg) if part)


def aggregate_ast(ast: AstNode) -> list[AstFunctionView]:
    """Summarize each function in a filtered AST.

    Structurally isomorphic functions (same preorder kind sequence, names
    ignored) collapse to one representative view carrying the group size.
    """
    roots = [ast] if ast.kind == "function-def" else [
        child for child in ast.children if child.kind == "function-def"
    ]
    views: list[AstFunctionView] = []
    shapes: dict[tuple, int] = {}
    for root in roots:
        if root.name is None:
            raise MissingPlaceholderError("function definition without a name")
        shape = tuple(node.kind for node in root.walk())
        if shape in shapes:
            views[shapes[shape]].collapsed += 1
            continue
        call_chain: list[str] = []
        conditions: list[str] = []
        returns: list[str] = []
        for node in root.walk():
            if node.kind == "call" and node.name:
                call_chain.append(node.name)
            elif node.kind in ("branch", "loop") and node.name:
                conditions.append(node.name)
            elif node.kind == "return" and node.name:
                returns.append(node.name)
        shapes[shape] = len(views)
        views.append(
            AstFunctionView(
                name=root.name,
                line=root.line,
                counts=count_ast_categories(root),
                call_chain=call_chain,
                conditions=conditions,
                returns=returns,
            )
        )
    return views


def _edge_order(edge: CfgEdge) -> tuple[int, int]:
    rank = {"True": 0, "False": 1}.get(edge.label, 2)
    return (rank, edge.dst)


def enumerate_paths(cfg: CfgGraph, budget: int) -> list[CfgPath]:
    """Enumerate entry-to-exit paths, at most ``budget`` per function.

    Depth-first discovery takes True edges before False edges before
    sequential ones; each back edge is traversed at most once per path, so a
    loop contributes its zero- and one-iteration shapes.  When more paths
    exist than the budget allows, the paths that carry the most branch and
    call nodes are kept; the returned list preserves discovery order.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    results: list[CfgPath] = []
    for entry in cfg.entries():
        results.extend(_paths_for_function(cfg, entry, budget))
    return results


def _paths_for_function(cfg: CfgGraph, entry: CfgNode, budget: int) -> list[CfgPath]:
    exit_ids = {n.id for n in cfg.exits() if n.fn == entry.fn}
    by_id = {n.id: n for n in cfg.nodes}
    out: dict[int, list[CfgEdge]] = {}
    for e in cfg.edges:
        out.setdefault(e.src, []).append(e)
    for edges in out.values():
        edges.sort(key=_edge_order)

    discovered: list[CfgPath] = []

    def dfs(
        node_id: int,
        node_seq: list[int],
        label_seq: list[str],
        used_back: frozenset,
        on_path: set[int],
    ):
        if len(discovered) >= _MAX_ENUMERATED_PATHS:
            return
        if node_id in exit_ids:
            nodes = [by_id[i] for i in node_seq]
            discovered.append(CfgPath(nodes=nodes, taken=list(label_seq) + [None]))
            return
        for idx, e in enumerate(out.get(node_id, ())):
            if e.back:
                edge_key = (node_id, idx)
                if edge_key in used_back:
                    continue
                next_back = used_back | {edge_key}
            elif e.dst in on_path:
                continue
            else:
                next_back = used_back
            dfs(
                e.dst,
                node_seq + [e.dst],
                label_seq + [e.label],
                next_back,
                on_path | {e.dst},
            )

    dfs(entry.id, [entry.id], [], frozenset(), {entry.id})

    if len(discovered) <= budget:
        return discovered
    ranked = sorted(
        range(len(discovered)), key=lambda i: (-discovered[i].score(), i)
    )[:budget]
    keep = set(ranked)
    return [p for i, p in enumerate(discovered) if i in keep]


def _param_order(dfg: DfgGraph, param: DfgNode) -> tuple[int, str]:
    targets = [e.dst for e in dfg.out_edges(param.id)]
    if not targets:
        return (1 << 30, param.var)
    first = min({n.id: n for n in dfg.nodes}[t].stmt for t in targets)
    return (first, param.var)


def trace_chains(dfg: DfgGraph, budget: int) -> list[DfgChain]:
    """Trace def-use chains from each parameter source to a call/return sink.

    A chain longer than the budget is cut and marked truncated.  Chains with
    no intermediate hop between the parameter and the sink are omitted; the
    parameter listing already carries that information.
    """
    by_id = {n.id: n for n in dfg.nodes}
    out: dict[int, list[int]] = {}
    for e in dfg.edges:
        out.setdefault(e.src, []).append(e.dst)
    for dsts in out.values():
        dsts.sort()

    chains: list[DfgChain] = []

    def walk(node_id: int, path: list[int]):
        node = by_id[node_id]
        if node.kind == "sink":
            if len(path) >= 3:
                chains.append(DfgChain(nodes=[by_id[i] for i in path]))
            return
        if len(path) >= budget:
            chains.append(DfgChain(nodes=[by_id[i] for i in path], truncated=True))
            return
        for dst in out.get(node_id, ()):
            if dst not in path:
                walk(dst, path + [dst])

    params = sorted(dfg.params(), key=lambda p: _param_order(dfg, p))
    for param in params:
        walk(param.id, [param.id])
    return chains


def build_salient_views(
    bundle: GraphBundle,
    ast_filtered: AstNode,
    cfg_filtered: CfgGraph,
    dfg_filtered: DfgGraph,
    budget: int,
) -> SalientViews:
    """Assemble per-function views from the filtered graphs."""
    ast_views = aggregate_ast(ast_filtered)

    cfg_views: list[CfgFunctionView] = []
    dfg_views: list[DfgFunctionView] = []
    fn_names = [v.name for v in ast_views]
    seen = set(fn_names)
    for n in bundle.cfg.entries():
        if n.fn not in seen:
            fn_names.append(n.fn)
            seen.add(n.fn)

    all_paths = {fn: [] for fn in fn_names}
    for path in enumerate_paths(cfg_filtered, budget):
        all_paths.setdefault(path.nodes[0].fn, []).append(path)

    for fn in fn_names:
        pre_nodes = [n for n in bundle.cfg.nodes if n.fn == fn]
        post_nodes = [n for n in cfg_filtered.nodes if n.fn == fn]
        branch_nodes = [n for n in post_nodes if n.kind in ("branch", "loop")]
        paths = all_paths.get(fn, [])
        # Count the true number of paths to know whether the budget cut any.
        truncated = _budget_truncated(cfg_filtered, fn, budget)
        cfg_views.append(
            CfgFunctionView(
                name=fn,
                retained=len(post_nodes),
                total=len(pre_nodes),
                branches=sum(1 for n in post_nodes if n.kind == "branch"),
                calls=sum(1 for n in post_nodes if n.kind == "call"),
                paths=paths,
                truncated=truncated,
                branch_nodes=branch_nodes,
            )
        )

        pre_edges = [
            e
            for e in bundle.dfg.edges
            if _dfg_edge_fn(bundle.dfg, e) == fn
        ]
        post_edges = [
            e for e in dfg_filtered.edges if _dfg_edge_fn(dfg_filtered, e) == fn
        ]
        params = sorted(
            (n for n in dfg_filtered.params() if n.fn == fn),
            key=lambda p: _param_order(dfg_filtered, p),
        )
        fn_dfg = _project_dfg(dfg_filtered, fn)
        chains = trace_chains(fn_dfg, budget)
        dfg_views.append(
            DfgFunctionView(
                name=fn,
                edges_retained=len(post_edges),
                edges_total=len(pre_edges),
                params=params,
                chains=chains,
            )
        )
    return SalientViews(ast_views=ast_views, cfg_views=cfg_views, dfg_views=dfg_views)


def _dfg_edge_fn(dfg: DfgGraph, edge) -> str:
    by_id = {n.id: n for n in dfg.nodes}
    return by_id[edge.src].fn or by_id[edge.dst].fn


def _project_dfg(dfg: DfgGraph, fn: str) -> DfgGraph:
    out = DfgGraph()
    out.nodes = [n for n in dfg.nodes if n.fn == fn]
    ids = {n.id for n in out.nodes}
    out.edges = [e for e in dfg.edges if e.src in ids and e.dst in ids]
    return out


def _budget_truncated(cfg: CfgGraph, fn: str, budget: int) -> bool:
    entry = next((n for n in cfg.entries() if n.fn == fn), None)
    if entry is None:
        return False
    sub = CfgGraph()
    sub.nodes = [n for n in cfg.nodes if n.fn == fn]
    sub.edges = [
        e
        for e in cfg.edges
        if e.src in {n.id for n in sub.nodes} and e.dst in {n.id for n in sub.nodes}
    ]
    count = len(_paths_for_function(sub, entry, _MAX_ENUMERATED_PATHS))
    return count > budget


# ---------------------------------------------------------------------------
# Verbalization
# ---------------------------------------------------------------------------

# Regular skeletons of the rendered sentences; every sentence of a fragment
# matches exactly one of these.
TEMPLATE_PATTERNS: dict[str, str] = {
    "ast_summary": r"Function \S+@L\d+: \d+ declarations, \d+ assignments, \d+ branches, \d+ calls\.",
    "ast_call_chain": r"Key call chain: .+\.",
    "ast_conditions": r"Conditions/Loops: .+(; .+)*\.",
    "ast_returns": r"Returns: .+(; .+)*\.",
    "ast_isomorphic": r"Isomorphic functions collapsed: \S+ represents \d+ functions\.",
    "cfg_summary": r"Function \S+: retained control points \d+/\d+; branches \d+; calls \d+\.",
    "cfg_branches": r"Branch/Loop nodes: .+@L\d+(; .+@L\d+)*\.",
    "cfg_path": r"Path \d+: Entry( → .+)? → Exit\.",
    "dfg_summary": r"Function \S+: edges retained \d+/\d+; parameter sources \d+; chains \d+\.",
    "dfg_params": r"Parameter sources: param:\S+@L\d+(; param:\S+@L\d+)*\.",
    "dfg_chain": r"Data chain: param:\S+( → .+)+( \[truncated\])?\.",
}


def _render_ast_view(view: AstFunctionView) -> list[str]:
    c = view.counts
    sentences = [
        f"Function {view.name}@L{view.line}: {c.declarations} declarations, "
        f"{c.assignments} assignments, {c.branches} branches, {c.calls} calls."
    ]
    if view.call_chain:
        sentences.append(f"Key call chain: {', '.join(view.call_chain)}.")
    if view.conditions:
        sentences.append(f"Conditions/Loops: {'; '.join(view.conditions)}.")
    if view.returns:
        sentences.append(f"Returns: {'; '.join(view.returns)}.")
    if view.collapsed > 1:
        sentences.append(
            f"Isomorphic functions collapsed: {view.name} represents {view.collapsed} functions."
        )
    return sentences


_ARROW = " → "


def _render_path(index: int, path: CfgPath) -> str:
    parts: list[str] = []
    for node, taken in zip(path.nodes, path.taken):
        if node.kind == "entry":
            parts.append("Entry")
        elif node.kind == "exit":
            parts.append("Exit")
        elif node.kind in ("branch", "loop") and taken in ("True", "False"):
            parts.append(f"[{taken}] {node.label}")
        else:
            parts.append(node.label)
    rendered = _ARROW.join(parts)
    return f"Path {index}: {rendered}."


def _render_cfg_view(view: CfgFunctionView) -> list[str]:
    sentences = [
        f"Function {view.name}: retained control points {view.retained}/{view.total}; "
        f"branches {view.branches}; calls {view.calls}."
    ]
    if view.truncated and view.branch_nodes:
        listing = "; ".join(f"{n.label}@L{n.line}" for n in view.branch_nodes)
        sentences.append(f"Branch/Loop nodes: {listing}.")
    index = 0
    for path in view.paths:
        if len(path.nodes) <= 2:
            continue  # an interior-free path adds nothing over the summary
        index += 1
        sentences.append(_render_path(index, path))
    return sentences


def _render_dfg_view(view: DfgFunctionView) -> list[str]:
    sentences = [
        f"Function {view.name}: edges retained {view.edges_retained}/{view.edges_total}; "
        f"parameter sources {len(view.params)}; chains {len(view.chains)}."
    ]
    if view.params:
        listing = "; ".join(f"{p.label}@L{p.line}" for p in view.params)
        sentences.append(f"Parameter sources: {listing}.")
    for chain in view.chains:
        body = _ARROW.join(n.label for n in chain.nodes)
        suffix = " [truncated]" if chain.truncated else ""
        sentences.append(f"Data chain: {body}{suffix}.")
    return sentences


def verbalize(views: SalientViews) -> tuple[str, str, str]:
    """Render the three natural-language fragments from the salient views."""
    t_ast = " ".join(
        sentence for view in views.ast_views for sentence in _render_ast_view(view)
    )
    t_cfg = " ".join(
        sentence for view in views.cfg_views for sentence in _render_cfg_view(view)
    )
    t_dfg = " ".join(
        sentence for view in views.dfg_views for sentence in _render_dfg_view(view)
    )
    return t_ast, t_cfg, t_dfg


def generate_structural_context(
    fn: SourceFunction, level: Level = Level.C
) -> StructuralContext:
    """Full pipeline: parse, filter, extract salient views, verbalize.

    Propagates SourceSyntaxError; callers that must keep going on malformed
    input catch it and substitute a degraded context.
    """
    bundle = parse(fn)
    budget = LEVEL_BUDGETS[level]
    ast_f = filter_ast(bundle.ast, level)
    cfg_f = filter_cfg(bundle.cfg, level)
    dfg_f = filter_dfg(bundle.dfg, level)
    views = build_salient_views(bundle, ast_f, cfg_f, dfg_f, budget)
    t_ast, t_cfg, t_dfg = verbalize(views)
    return StructuralContext(t_ast=t_ast, t_cfg=t_cfg, t_dfg=t_dfg)


def matches_template(sentence: str) -> str | None:
    """Name of the template a sentence instantiates, or None."""
    for name, pattern in TEMPLATE_PATTERNS.items():
        if re.fullmatch(pattern, sentence):
            return name
    return None
