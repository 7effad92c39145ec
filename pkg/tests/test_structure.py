from __future__ import annotations

import re

import pytest

from fixtures import GOLDEN_T_AST, GOLDEN_T_CFG, GOLDEN_T_DFG

from vulncontext.graphs import (
    CfgEdge,
    CfgGraph,
    CfgNode,
    DfgEdge,
    DfgGraph,
    DfgNode,
    SourceFunction,
    parse,
)
from vulncontext.structure import (
    LEVEL_BUDGETS,
    NOISE_AST_KINDS,
    TEMPLATE_PATTERNS,
    Level,
    aggregate_ast,
    enumerate_paths,
    filter_ast,
    filter_cfg,
    filter_dfg,
    generate_structural_context,
    matches_template,
    trace_chains,
)

LEVELS = [Level.A, Level.B, Level.C]


# -- independent oracles ------------------------------------------------------


def brute_force_paths(cfg: CfgGraph, entry_id: int, exit_ids: set[int]) -> list[tuple[int, ...]]:
    """Exhaustive DFS over node-id sequences; back edges at most once each."""
    paths: list[tuple[int, ...]] = []

    def go(node, seq, used_back):
        if node in exit_ids:
            paths.append(tuple(seq))
            return
        for i, e in enumerate(sorted(cfg.out_edges(node), key=lambda e: ({"True": 0, "False": 1}.get(e.label, 2), e.dst))):
            key = (node, i)
            if e.back:
                if key in used_back:
                    continue
                go(e.dst, seq + [e.dst], used_back | {key})
            elif e.dst not in seq:
                go(e.dst, seq + [e.dst], used_back)

    go(entry_id, [entry_id], frozenset())
    return paths


def brute_force_chains(dfg: DfgGraph, min_len: int = 3) -> list[tuple[int, ...]]:
    """All simple paths from any param node to any sink node."""
    found: list[tuple[int, ...]] = []
    by_id = {n.id: n for n in dfg.nodes}

    def go(node, seq):
        if by_id[node].kind == "sink":
            if len(seq) >= min_len:
                found.append(tuple(seq))
            return
        for e in sorted(dfg.out_edges(node), key=lambda e: e.dst):
            if e.dst not in seq:
                go(e.dst, seq + [e.dst])

    for p in dfg.params():
        go(p.id, [p.id])
    return found


# -- golden verbalization -----------------------------------------------------


def test_golden_fragments_byte_for_byte(copy_bytes):
    ctx = generate_structural_context(copy_bytes, Level.C)
    assert ctx.t_ast == GOLDEN_T_AST
    assert ctx.t_cfg == GOLDEN_T_CFG
    assert ctx.t_dfg == GOLDEN_T_DFG
    assert ctx.s == "\n".join([GOLDEN_T_AST, GOLDEN_T_CFG, GOLDEN_T_DFG])


def test_context_is_byte_deterministic(corpus):
    for fn in corpus:
        for level in LEVELS:
            assert (
                generate_structural_context(fn, level).s
                == generate_structural_context(fn, level).s
            )


# -- AST filtering ------------------------------------------------------------


def test_copy_bytes_level_a_retains_exactly_skeleton_kinds(copy_bytes):
    bundle = parse(copy_bytes)
    filtered = filter_ast(bundle.ast, Level.A)
    kinds = {n.kind for n in filtered.walk()}
    assert kinds == {"function-def", "branch", "call", "return"}


def test_copy_bytes_level_c_removes_only_type_expansions(copy_bytes):
    bundle = parse(copy_bytes)
    filtered = filter_ast(bundle.ast, Level.C)
    expected = {n.uid for n in bundle.ast.walk() if n.kind not in NOISE_AST_KINDS}
    assert {n.uid for n in filtered.walk()} == expected


def test_empty_function_filters_to_function_def_only():
    bundle = parse(SourceFunction(id="f", code="void f(){}"))
    for level in LEVELS:
        filtered = filter_ast(bundle.ast, level)
        assert [n.kind for n in filtered.walk()] == ["function-def"]


def test_ast_level_monotonicity(corpus):
    for fn in corpus:
        bundle = parse(fn)
        retained = {
            level: {n.uid for n in filter_ast(bundle.ast, level).walk()} for level in LEVELS
        }
        assert retained[Level.A] <= retained[Level.B] <= retained[Level.C], fn.id


def test_no_noise_kinds_survive_any_level(corpus):
    for fn in corpus:
        bundle = parse(fn)
        for level in LEVELS:
            for node in filter_ast(bundle.ast, level).walk():
                assert node.kind not in NOISE_AST_KINDS


# -- CFG filtering ------------------------------------------------------------


def test_copy_bytes_cfg_keeps_5_of_9(copy_bytes):
    bundle = parse(copy_bytes)
    filtered = filter_cfg(bundle.cfg, Level.C)
    assert len(bundle.cfg.nodes) == 9
    assert len(filtered.nodes) == 5
    assert {n.kind for n in filtered.nodes} == {"entry", "exit", "branch", "call", "return"}


def test_straight_line_folds_to_entry_exit():
    code = """void s(void) {
    int a = 1;
    int b = a;
    int c = b;
    int d = c;
}
"""
    bundle = parse(SourceFunction(id="s", code=code))
    filtered = filter_cfg(bundle.cfg, Level.C)
    assert [(n.kind) for n in filtered.nodes] == ["entry", "exit"]
    assert [(e.src, e.dst, e.label) for e in filtered.edges] == [(0, 1, "seq")]


def test_loop_with_call_fold_matches_hand_fold():
    code = """void h(int n) {
    while (n > 0) {
        g();
        n--;
    }
}
"""
    bundle = parse(SourceFunction(id="h", code=code))
    assert len(bundle.cfg.nodes) == 6
    filtered = filter_cfg(bundle.cfg, Level.C)
    kinds = {n.kind for n in filtered.nodes}
    assert kinds == {"entry", "loop", "call", "exit"}
    by_kind = {n.kind: n.id for n in filtered.nodes}
    edges = {(e.src, e.dst, e.label) for e in filtered.edges}
    # Hand fold: entry->loop, loop-[True]->call, call->loop (folded back
    # edge), loop-[False]->exit (folded through the implicit end node).
    assert edges == {
        (by_kind["entry"], by_kind["loop"], "seq"),
        (by_kind["loop"], by_kind["call"], "True"),
        (by_kind["call"], by_kind["loop"], "seq"),
        (by_kind["loop"], by_kind["exit"], "False"),
    }
    back = [e for e in filtered.edges if e.back]
    assert [(e.src, e.dst) for e in back] == [(by_kind["call"], by_kind["loop"])]


def test_cfg_filter_preserves_invariants(corpus):
    for fn in corpus:
        bundle = parse(fn)
        filtered = filter_cfg(bundle.cfg, Level.C)
        assert len(filtered.entries()) == 1
        assert len(filtered.exits()) == 1
        entry = filtered.entries()[0]
        seen, stack = {entry.id}, [entry.id]
        while stack:
            cur = stack.pop()
            for e in filtered.out_edges(cur):
                if e.dst not in seen:
                    seen.add(e.dst)
                    stack.append(e.dst)
        assert seen == {n.id for n in filtered.nodes}, fn.id


# -- DFG filtering ------------------------------------------------------------


def test_copy_bytes_dfg_keeps_3_of_4_edges_and_2_sources(copy_bytes):
    bundle = parse(copy_bytes)
    filtered = filter_dfg(bundle.dfg, Level.C)
    assert len(bundle.dfg.edges) == 4
    assert len(filtered.edges) == 3
    assert sorted(p.var for p in filtered.params()) == ["len", "src"]


def test_dfg_without_params_or_cross_statement_edges_filters_empty():
    dfg = DfgGraph(
        nodes=[
            DfgNode(0, "x", "def", 1, "def:x", 5, "f"),
            DfgNode(1, "x", "use", 1, "x + 1", 5, "f"),
        ],
        edges=[DfgEdge(0, 1)],
    )
    filtered = filter_dfg(dfg, Level.C)
    assert filtered.edges == []
    assert filtered.nodes == []


def test_hand_built_intra_statement_edge_is_dropped():
    # Three variables; exactly one edge stays inside statement 4.
    dfg = DfgGraph(
        nodes=[
            DfgNode(0, "p", "param", 1, "param:p", -1, "f"),
            DfgNode(1, "a", "def", 2, "def:a", 3, "f"),
            DfgNode(2, "a", "use", 3, "if(a)", 4, "f"),
            DfgNode(3, "b", "def", 3, "def:b", 4, "f"),
            DfgNode(4, "b", "sink", 4, "call g", 5, "f"),
        ],
        edges=[
            DfgEdge(0, 1),  # param feeds the definition
            DfgEdge(1, 2),  # cross-statement use
            DfgEdge(2, 3),  # same statement: dropped
            DfgEdge(3, 4),  # would survive if reachable
        ],
    )
    filtered = filter_dfg(dfg, Level.C)
    kept = {(e.src, e.dst) for e in filtered.edges}
    assert (2, 3) not in kept
    assert (0, 1) in kept and (1, 2) in kept
    # The tail after the dropped hop is no longer parameter-rooted.
    assert (3, 4) not in kept


# -- AST aggregation ----------------------------------------------------------


def test_copy_bytes_aggregation(copy_bytes):
    bundle = parse(copy_bytes)
    views = aggregate_ast(filter_ast(bundle.ast, Level.C))
    assert len(views) == 1
    view = views[0]
    assert view.call_chain == ["memcpy"]
    assert view.conditions == ["if(len > max)"]
    assert view.returns == []


def test_aggregation_omits_empty_sections():
    bundle = parse(SourceFunction(id="f", code="void f(int a){int b = a;}"))
    views = aggregate_ast(filter_ast(bundle.ast, Level.C))
    view = views[0]
    assert view.call_chain == [] and view.conditions == [] and view.returns == []
    ctx = generate_structural_context(SourceFunction(id="f", code="void f(int a){int b = a;}"))
    assert "Key call chain" not in ctx.t_ast
    assert "Conditions/Loops" not in ctx.t_ast
    assert "Returns" not in ctx.t_ast


def test_byte_identical_helpers_collapse():
    code = """int add_one(int v) { return v + 1; }
int add_two(int v) { return v + 1; }
"""
    bundle = parse(SourceFunction(id="twins", code=code))
    views = aggregate_ast(filter_ast(bundle.ast, Level.C))
    assert len(views) == 1
    assert views[0].collapsed == 2
    ctx_line = generate_structural_context(SourceFunction(id="twins", code=code)).t_ast
    assert "Isomorphic functions collapsed: add_one represents 2 functions." in ctx_line


# -- path enumeration ---------------------------------------------------------


def test_copy_bytes_paths_exact(copy_bytes):
    bundle = parse(copy_bytes)
    filtered = filter_cfg(bundle.cfg, Level.C)
    paths = enumerate_paths(filtered, LEVEL_BUDGETS[Level.C])
    assert len(paths) == 2
    first, second = paths
    assert [n.kind for n in first.nodes] == ["entry", "branch", "return", "exit"]
    assert first.taken[1] == "True"
    assert [n.kind for n in second.nodes] == ["entry", "branch", "call", "exit"]
    assert second.taken[1] == "False"


def test_straight_line_yields_one_path():
    bundle = parse(SourceFunction(id="s", code="void s(void){int a = 1;}"))
    filtered = filter_cfg(bundle.cfg, Level.C)
    paths = enumerate_paths(filtered, 4)
    assert len(paths) == 1


def test_two_sequential_ifs_match_brute_force():
    code = """void two_ifs(int a, int b) {
    if (a) {
        f();
    }
    if (b) {
        g();
    }
    h();
}
"""
    bundle = parse(SourceFunction(id="t", code=code))
    filtered = filter_cfg(bundle.cfg, Level.C)
    assert len(filtered.nodes) == 7
    paths = enumerate_paths(filtered, 10)
    assert len(paths) == 4
    entry = filtered.entries()[0]
    exits = {n.id for n in filtered.exits()}
    oracle = brute_force_paths(filtered, entry.id, exits)
    assert [tuple(n.id for n in p.nodes) for p in paths] == oracle


def test_paths_obey_budget_and_endpoints(corpus):
    for fn in corpus:
        bundle = parse(fn)
        for level in LEVELS:
            filtered = filter_cfg(bundle.cfg, level)
            budget = LEVEL_BUDGETS[level]
            paths = enumerate_paths(filtered, budget)
            assert len(paths) <= budget, fn.id
            for path in paths:
                assert path.nodes[0].kind == "entry"
                assert path.nodes[-1].kind == "exit"


def test_enumerate_matches_oracle_when_under_budget(corpus):
    for fn in corpus:
        bundle = parse(fn)
        filtered = filter_cfg(bundle.cfg, Level.C)
        entry = filtered.entries()[0]
        exits = {n.id for n in filtered.exits()}
        oracle = brute_force_paths(filtered, entry.id, exits)
        if len(oracle) <= LEVEL_BUDGETS[Level.C]:
            got = [
                tuple(n.id for n in p.nodes)
                for p in enumerate_paths(filtered, LEVEL_BUDGETS[Level.C])
            ]
            assert got == oracle, fn.id


def test_budget_selection_prefers_branch_and_call_heavy_paths():
    code = """void many(int a, int b, int c) {
    if (a) { f(); }
    if (b) { g(); }
    if (c) { h(); }
}
"""
    bundle = parse(SourceFunction(id="many", code=code))
    filtered = filter_cfg(bundle.cfg, Level.C)
    entry = filtered.entries()[0]
    exits = {n.id for n in filtered.exits()}
    full = brute_force_paths(filtered, entry.id, exits)
    assert len(full) == 8
    got = enumerate_paths(filtered, 3)
    assert len(got) == 3
    # The all-True path (3 branches + 3 calls) must survive the cut.
    best = max(full, key=lambda seq: sum(1 for nid in seq if filtered.node(nid).kind in ("branch", "call")))
    assert best in [tuple(n.id for n in p.nodes) for p in got]


# -- chain tracing ------------------------------------------------------------


def test_copy_bytes_chain(copy_bytes):
    bundle = parse(copy_bytes)
    filtered = filter_dfg(bundle.dfg, Level.C)
    chains = trace_chains(filtered, LEVEL_BUDGETS[Level.C])
    assert len(chains) == 1
    labels = [n.label for n in chains[0].nodes]
    assert labels == ["param:len", "if(len > max)", "call memcpy"]


def test_unused_parameter_has_no_chain():
    bundle = parse(SourceFunction(id="u", code="int u(int unused, int v){return v;}"))
    filtered = filter_dfg(bundle.dfg, Level.C)
    chains = trace_chains(filtered, 8)
    assert all(c.nodes[0].var != "unused" for c in chains)


def test_diamond_chain_set_matches_brute_force():
    # Six nodes, two param-to-sink routes through different definitions.
    dfg = DfgGraph(
        nodes=[
            DfgNode(0, "p", "param", 1, "param:p", -1, "f"),
            DfgNode(1, "x", "def", 2, "def:x", 3, "f"),
            DfgNode(2, "y", "def", 3, "def:y", 4, "f"),
            DfgNode(3, "x", "use", 4, "if(x)", 5, "f"),
            DfgNode(4, "y", "use", 5, "if(y)", 6, "f"),
            DfgNode(5, "z", "sink", 6, "call out", 7, "f"),
        ],
        edges=[
            DfgEdge(0, 1),
            DfgEdge(0, 2),
            DfgEdge(1, 3),
            DfgEdge(2, 4),
            DfgEdge(3, 5),
            DfgEdge(4, 5),
        ],
    )
    chains = trace_chains(dfg, 16)
    got = [tuple(n.id for n in c.nodes) for c in chains]
    assert sorted(got) == sorted(brute_force_chains(dfg))


def test_chain_head_and_tail_law(corpus):
    for fn in corpus:
        bundle = parse(fn)
        for level in LEVELS:
            filtered = filter_dfg(bundle.dfg, level)
            for chain in trace_chains(filtered, LEVEL_BUDGETS[level]):
                assert chain.nodes[0].kind == "param", fn.id
                if chain.truncated:
                    assert len(chain.nodes) == LEVEL_BUDGETS[level]
                else:
                    assert chain.nodes[-1].kind == "sink", fn.id


def test_truncated_chain_is_marked():
    nodes = [DfgNode(0, "p", "param", 1, "param:p", -1, "f")]
    edges = []
    for i in range(1, 6):
        nodes.append(DfgNode(i, f"v{i}", "def", i + 1, f"def:v{i}", i + 1, "f"))
        edges.append(DfgEdge(i - 1, i))
    dfg = DfgGraph(nodes=nodes, edges=edges)
    chains = trace_chains(dfg, 4)
    assert len(chains) == 1
    assert chains[0].truncated
    assert len(chains[0].nodes) == 4


# -- whole-context properties -------------------------------------------------


def test_empty_function_context_is_three_zero_summaries():
    ctx = generate_structural_context(SourceFunction(id="f", code="void f(){}"))
    assert ctx.s.splitlines() == [
        "Function f@L1: 0 declarations, 0 assignments, 0 branches, 0 calls.",
        "Function f: retained control points 2/2; branches 0; calls 0.",
        "Function f: edges retained 0/0; parameter sources 0; chains 0.",
    ]


def test_two_branch_fixture_cfg_section_matches_oracle():
    code = """void two(int a, int b) {
    if (a) { f(); }
    if (b) { g(); }
}
"""
    fn = SourceFunction(id="two", code=code)
    bundle = parse(fn)
    filtered = filter_cfg(bundle.cfg, Level.C)
    entry = filtered.entries()[0]
    oracle = brute_force_paths(filtered, entry.id, {n.id for n in filtered.exits()})
    ctx = generate_structural_context(fn, Level.C)
    rendered_paths = re.findall(r"Path \d+:", ctx.t_cfg)
    with_interior = [seq for seq in oracle if len(seq) > 2]
    assert len(rendered_paths) == len(with_interior)


def test_every_sentence_matches_exactly_one_template(corpus):
    splitter = re.compile(
        r"(?<=\.) (?=(?:Function \S|Key call chain:|Conditions/Loops:|Returns:"
        r"|Isomorphic functions|Branch/Loop nodes:|Path \d|Parameter sources:|Data chain:))"
    )
    for fn in corpus:
        ctx = generate_structural_context(fn, Level.C)
        for fragment in (ctx.t_ast, ctx.t_cfg, ctx.t_dfg):
            for sentence in splitter.split(fragment):
                hits = [
                    name
                    for name, pattern in TEMPLATE_PATTERNS.items()
                    if re.fullmatch(pattern, sentence)
                ]
                assert len(hits) == 1, (fn.id, sentence, hits)
                assert matches_template(sentence) == hits[0]


def test_view_sizes_monotone_in_level(corpus):
    for fn in corpus:
        bundle = parse(fn)
        sizes = {}
        for level in LEVELS:
            filtered = filter_cfg(bundle.cfg, level)
            sizes[level] = len(enumerate_paths(filtered, LEVEL_BUDGETS[level]))
        assert sizes[Level.A] <= sizes[Level.B] <= sizes[Level.C], fn.id
