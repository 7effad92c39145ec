"""C source frontend: one parse produces the AST, CFG, and DFG of a function.

The abstract syntax tree is a lowering of pycparser's concrete tree onto a
small set of semantic node kinds; grammar plumbing such as ``TypeDecl`` and
``PtrDecl`` survives as ``type-expansion`` nodes so later filtering stages can
strip it.  The control-flow graph allocates one node per statement or
condition, with explicit join nodes after branch constructs and an implicit
end-of-body node for functions whose control can fall off the closing brace.
The data-flow graph links each definition to its subsequent uses (reaching
definitions, intraprocedural, by variable name).

Counting rules are fixed module constants, calibrated so that a bounded-copy
function with three parameters, one guarded length check, and one memcpy call
reports exactly 2 declarations / 1 assignment / 1 branch / 1 call, a 9-node
CFG, and a 4-edge DFG:

* a declaration with an initializer counts as one declaration and one
  assignment, and lowers to separate declaration and initialization CFG nodes;
* the parameter list counts as a single declaration aggregate;
* non-const pointer parameters are treated as output destinations, not data
  sources, so they contribute no DFG source node;
* pointer aliasing and the preprocessor are not modeled; unexpanded macro
  identifiers behave as opaque constants.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from pycparser import CParser, c_ast, c_generator

from .errors import SourceSyntaxError, UnsupportedLanguageError

__all__ = [
    "SourceFunction",
    "AstNode",
    "CfgNode",
    "CfgEdge",
    "CfgGraph",
    "DfgNode",
    "DfgEdge",
    "DfgGraph",
    "GraphBundle",
    "CategoryCounts",
    "parse",
    "count_ast_categories",
    "register_frontend",
]

VALID_LABELS = ("vulnerable", "benign")


@dataclass(frozen=True)
class SourceFunction:
    """One source-level function to analyze."""

    id: str
    code: str
    language: str = "c"
    label: str | None = None

    def __post_init__(self):
        if not self.code or not self.code.strip():
            raise ValueError("SourceFunction.code must be non-empty")
        if self.label is not None and self.label not in VALID_LABELS:
            raise ValueError(f"label must be one of {VALID_LABELS}, got {self.label!r}")


@dataclass
class AstNode:
    """Lowered syntax-tree node.

    ``kind`` is one of: function-def, declaration, assignment, branch, loop,
    call, return, operator, identifier, constant, type-expansion, and a few
    statement-level kinds (break, continue, goto, label, statement, unit).
    ``role`` distinguishes parameter declarations from body declarations.
    """

    kind: str
    name: str | None
    line: int
    children: list["AstNode"] = field(default_factory=list)
    role: str | None = None
    uid: int = -1

    def walk(self):
        yield self
        for child in self.children:
            yield from child.walk()


@dataclass(frozen=True)
class CfgNode:
    id: int
    kind: str  # entry | exit | branch | loop | call | return | statement
    label: str
    line: int
    fn: str


@dataclass(frozen=True)
class CfgEdge:
    src: int
    dst: int
    label: str = "seq"  # True | False | seq
    back: bool = False


@dataclass
class CfgGraph:
    nodes: list[CfgNode] = field(default_factory=list)
    edges: list[CfgEdge] = field(default_factory=list)

    def node(self, node_id: int) -> CfgNode:
        return self._index()[node_id]

    def _index(self) -> dict[int, CfgNode]:
        return {n.id: n for n in self.nodes}

    def out_edges(self, node_id: int) -> list[CfgEdge]:
        return [e for e in self.edges if e.src == node_id]

    def entries(self) -> list[CfgNode]:
        return [n for n in self.nodes if n.kind == "entry"]

    def exits(self) -> list[CfgNode]:
        return [n for n in self.nodes if n.kind == "exit"]


@dataclass(frozen=True)
class DfgNode:
    id: int
    var: str
    kind: str  # param | def | use | sink
    line: int
    label: str
    stmt: int  # id of the hosting CFG node; -1 for parameters
    fn: str = ""


@dataclass(frozen=True)
class DfgEdge:
    src: int
    dst: int


@dataclass
class DfgGraph:
    nodes: list[DfgNode] = field(default_factory=list)
    edges: list[DfgEdge] = field(default_factory=list)

    def node(self, node_id: int) -> DfgNode:
        return {n.id: n for n in self.nodes}[node_id]

    def out_edges(self, node_id: int) -> list[DfgEdge]:
        return [e for e in self.edges if e.src == node_id]

    def params(self) -> list[DfgNode]:
        return [n for n in self.nodes if n.kind == "param"]


@dataclass
class GraphBundle:
    """The three structural graphs derived from one source text."""

    ast: AstNode
    cfg: CfgGraph
    dfg: DfgGraph
    source: SourceFunction


@dataclass(frozen=True)
class CategoryCounts:
    declarations: int
    assignments: int
    branches: int
    calls: int


# ---------------------------------------------------------------------------
# Parsing front door
# ---------------------------------------------------------------------------

# Common typedefs so single functions parse without their headers.  The
# ``# 1`` line marker resets coordinates, keeping node lines 1-based relative
# to the submitted snippet.
_TYPEDEF_PROLOGUE = (
    "typedef unsigned long size_t; typedef long ssize_t; typedef long ptrdiff_t;\n"
    "typedef int wchar_t; typedef long intptr_t; typedef unsigned long uintptr_t;\n"
    "typedef signed char int8_t; typedef short int16_t; typedef int int32_t; typedef long int64_t;\n"
    "typedef unsigned char uint8_t; typedef unsigned short uint16_t;\n"
    "typedef unsigned int uint32_t; typedef unsigned long uint64_t;\n"
    "typedef unsigned char u8; typedef unsigned short u16; typedef unsigned int u32; typedef unsigned long u64;\n"
    "typedef long off_t; typedef long time_t; typedef int pid_t; typedef unsigned int mode_t;\n"
    "typedef struct __FILE FILE; typedef unsigned long uintmax_t; typedef long intmax_t;\n"
    "typedef int bool;\n"
)


def parse(fn: SourceFunction) -> GraphBundle:
    """Parse one source function into its AST, CFG, and DFG.

    Raises SourceSyntaxError when the grammar rejects the input and
    UnsupportedLanguageError when no frontend is registered for
    ``fn.language``.
    """
    language = fn.language.lower()
    frontend = _FRONTENDS.get(language)
    if frontend is None:
        raise UnsupportedLanguageError(
            f"no frontend registered for language {fn.language!r}"
        )
    return frontend(fn)


def register_frontend(language: str, frontend) -> None:
    """Register a parser for another language behind the GraphBundle contract."""
    _FRONTENDS[language.lower()] = frontend


def count_ast_categories(ast: AstNode) -> CategoryCounts:
    """Count declarations, assignments, branches, and calls under a function root.

    The parameter list counts as one declaration aggregate; a declaration
    with an initializer contributes to both the declaration and assignment
    counts (the initializer lowers to an assignment child node).
    """
    decls = assigns = branches = calls = 0
    has_params = False
    for node in ast.walk():
        if node.kind == "declaration":
            if node.role == "param":
                has_params = True
            else:
                decls += 1
        elif node.kind == "assignment":
            assigns += 1
        elif node.kind == "branch":
            branches += 1
        elif node.kind == "call":
            calls += 1
    if has_params:
        decls += 1
    return CategoryCounts(decls, assigns, branches, calls)


# ---------------------------------------------------------------------------
# C frontend
# ---------------------------------------------------------------------------

_PARSE_ERROR_RE = re.compile(r":(\d+):(\d+):")


def _parse_c(fn: SourceFunction) -> GraphBundle:
    text = _TYPEDEF_PROLOGUE + f'# 1 "{_safe_name(fn.id)}"\n' + fn.code
    try:
        unit = CParser().parse(text, filename=_safe_name(fn.id))
    except Exception as exc:  # pycparser raises plyparser.ParseError
        message = str(exc)
        match = _PARSE_ERROR_RE.search(message)
        line = int(match.group(1)) if match else None
        column = int(match.group(2)) if match else None
        raise SourceSyntaxError(message, line=line, column=column) from exc

    func_defs = [ext for ext in unit.ext if isinstance(ext, c_ast.FuncDef)]
    # Drop prologue typedef artifacts; anything left came from the snippet.
    if not func_defs:
        raise SourceSyntaxError("input contains no function definition")

    lowerer = _AstLowerer()
    roots = [lowerer.lower_funcdef(fd) for fd in func_defs]
    if len(roots) == 1:
        ast_root = roots[0]
    else:
        ast_root = AstNode(kind="unit", name=None, line=roots[0].line, children=roots)
        lowerer.assign_uid(ast_root)

    cfg = CfgGraph()
    dfg = DfgGraph()
    cfg_builder = _CfgBuilder()
    next_id = 0
    for fd in func_defs:
        fn_nodes, fn_edges, refs, params = cfg_builder.build_function(fd, start_id=next_id)
        cfg.nodes.extend(fn_nodes)
        cfg.edges.extend(fn_edges)
        if fn_nodes:
            next_id = max(n.id for n in fn_nodes) + 1
        _build_dfg(fn_nodes, fn_edges, refs, params, dfg)
    return GraphBundle(ast=ast_root, cfg=cfg, dfg=dfg, source=fn)


def _safe_name(name: str) -> str:
    return re.sub(r"[^\w.-]", "_", name) or "input"


_FRONTENDS = {"c": _parse_c}

_GEN = c_generator.CGenerator()


def _render(node) -> str:
    if node is None:
        return ""
    return _GEN.visit(node)


def _line_of(node, fallback: int = 1) -> int:
    coord = getattr(node, "coord", None)
    return coord.line if coord is not None and coord.line else fallback


# -- AST lowering -----------------------------------------------------------

_TYPE_EXPANSION = (
    c_ast.TypeDecl,
    c_ast.PtrDecl,
    c_ast.ArrayDecl,
    c_ast.FuncDecl,
    c_ast.IdentifierType,
    c_ast.Typename,
    c_ast.EllipsisParam,
    c_ast.Struct,
    c_ast.Union,
    c_ast.Enum,
    c_ast.Enumerator,
    c_ast.EnumeratorList,
    c_ast.Typedef,
)

_OPERATOR_NODES = (
    c_ast.BinaryOp,
    c_ast.UnaryOp,
    c_ast.Cast,
    c_ast.TernaryOp,
    c_ast.StructRef,
    c_ast.ArrayRef,
    c_ast.InitList,
    c_ast.CompoundLiteral,
    c_ast.NamedInitializer,
)

_SPLICE_NODES = (c_ast.Compound, c_ast.DeclList, c_ast.ParamList, c_ast.ExprList)


class _AstLowerer:
    """Lower pycparser's concrete tree to AstNode, assigning preorder uids."""

    def __init__(self):
        self._next_uid = 0

    def assign_uid(self, node: AstNode) -> None:
        node.uid = self._next_uid
        self._next_uid += 1

    def lower_funcdef(self, fd: c_ast.FuncDef) -> AstNode:
        line = _line_of(fd)
        root = AstNode(kind="function-def", name=fd.decl.name, line=line)
        self.assign_uid(root)
        func_decl = fd.decl.type
        if isinstance(func_decl, c_ast.FuncDecl) and func_decl.args is not None:
            for param in func_decl.args.params:
                if isinstance(param, c_ast.Decl) and param.name:
                    root.children.append(self._lower_decl(param, role="param"))
                else:
                    root.children.extend(self._lower(param))
        # Return-type machinery is grammar noise.
        root.children.append(self._type_expansion_node(func_decl, line))
        if fd.body is not None:
            root.children.extend(self._lower(fd.body))
        return root

    def _type_expansion_node(self, node, line: int) -> AstNode:
        out = AstNode(
            kind="type-expansion",
            name=type(node).__name__,
            line=_line_of(node, line),
        )
        self.assign_uid(out)
        return out

    def _lower_decl(self, decl: c_ast.Decl, role: str | None = None) -> AstNode:
        line = _line_of(decl)
        node = AstNode(kind="declaration", name=decl.name, line=line, role=role)
        self.assign_uid(node)
        node.children.extend(self._lower_type_chain(decl.type, line))
        if decl.init is not None:
            assign = AstNode(kind="assignment", name="=", line=line)
            self.assign_uid(assign)
            assign.children.extend(self._lower(decl.init))
            node.children.append(assign)
        return node

    def _lower_type_chain(self, tnode, line: int) -> list[AstNode]:
        if tnode is None:
            return []
        if isinstance(tnode, _TYPE_EXPANSION):
            out = AstNode(
                kind="type-expansion",
                name=type(tnode).__name__,
                line=_line_of(tnode, line),
            )
            self.assign_uid(out)
            for _, child in tnode.children():
                out.children.extend(self._lower_type_chain(child, line))
            return [out]
        return self._lower(tnode)

    def _lower(self, node) -> list[AstNode]:
        """Lower an arbitrary pycparser node to zero or more AstNodes."""
        if node is None:
            return []
        line = _line_of(node)

        if isinstance(node, _SPLICE_NODES):
            out: list[AstNode] = []
            for _, child in node.children():
                out.extend(self._lower(child))
            return out

        if isinstance(node, c_ast.Decl):
            return [self._lower_decl(node)]

        if isinstance(node, c_ast.FuncDef):
            return [self.lower_funcdef(node)]

        kind, name = self._classify(node)
        lowered = AstNode(kind=kind, name=name, line=line)
        self.assign_uid(lowered)
        for _, child in node.children():
            lowered.children.extend(self._lower(child))
        return [lowered]

    def _classify(self, node) -> tuple[str, str | None]:
        if isinstance(node, c_ast.Assignment):
            return "assignment", node.op
        if isinstance(node, (c_ast.If, c_ast.Switch)):
            return "branch", _branch_label(node)
        if isinstance(node, (c_ast.While, c_ast.DoWhile, c_ast.For)):
            return "loop", _loop_label(node)
        if isinstance(node, c_ast.FuncCall):
            return "call", _callee_name(node)
        if isinstance(node, c_ast.Return):
            return "return", _render(node.expr) if node.expr is not None else None
        if isinstance(node, _TYPE_EXPANSION):
            return "type-expansion", type(node).__name__
        if isinstance(node, c_ast.ID):
            return "identifier", node.name
        if isinstance(node, c_ast.Constant):
            return "constant", node.value
        if isinstance(node, c_ast.Break):
            return "break", None
        if isinstance(node, c_ast.Continue):
            return "continue", None
        if isinstance(node, c_ast.Goto):
            return "goto", node.name
        if isinstance(node, c_ast.Label):
            return "label", node.name
        if isinstance(node, (c_ast.Case, c_ast.Default)):
            return "case", None
        if isinstance(node, _OPERATOR_NODES):
            op = getattr(node, "op", None)
            return "operator", op if isinstance(op, str) else type(node).__name__
        return "statement", type(node).__name__


def _callee_name(call: c_ast.FuncCall) -> str:
    if isinstance(call.name, c_ast.ID):
        return call.name.name
    return _render(call.name)


def _branch_label(node) -> str:
    if isinstance(node, c_ast.If):
        return f"if({_render(node.cond)})"
    return f"switch({_render(node.cond)})"


def _loop_label(node) -> str:
    if isinstance(node, c_ast.While):
        return f"while({_render(node.cond)})"
    if isinstance(node, c_ast.DoWhile):
        return f"do-while({_render(node.cond)})"
    init = _render(node.init) if node.init is not None else ""
    cond = _render(node.cond) if node.cond is not None else ""
    nxt = _render(node.next) if node.next is not None else ""
    return f"for({init}; {cond}; {nxt})"


# -- variable reference extraction ------------------------------------------


class _Refs:
    __slots__ = ("defs", "uses")

    def __init__(self):
        self.defs: set[str] = set()
        self.uses: set[str] = set()


def _collect_uses(expr, refs: _Refs) -> None:
    """Record every identifier read by ``expr``."""
    if expr is None:
        return
    if isinstance(expr, c_ast.ID):
        refs.uses.add(expr.name)
        return
    if isinstance(expr, c_ast.Assignment):
        _collect_assignment(expr, refs)
        return
    if isinstance(expr, c_ast.UnaryOp) and expr.op in ("p++", "p--", "++", "--"):
        _collect_write_target(expr.expr, refs, also_use=True)
        return
    if isinstance(expr, c_ast.FuncCall):
        # The callee designator is not a data read unless it is an expression.
        if not isinstance(expr.name, c_ast.ID):
            _collect_uses(expr.name, refs)
        _collect_uses(expr.args, refs)
        return
    for _, child in expr.children():
        _collect_uses(child, refs)


def _collect_assignment(node: c_ast.Assignment, refs: _Refs) -> None:
    _collect_uses(node.rvalue, refs)
    _collect_write_target(node.lvalue, refs, also_use=(node.op != "="))


def _collect_write_target(lvalue, refs: _Refs, also_use: bool) -> None:
    """Classify an lvalue: plain names and member writes define the base name;
    pointer-dereference and arrow writes only read the pointer."""
    if isinstance(lvalue, c_ast.ID):
        refs.defs.add(lvalue.name)
        if also_use:
            refs.uses.add(lvalue.name)
    elif isinstance(lvalue, c_ast.ArrayRef):
        _collect_uses(lvalue.subscript, refs)
        _collect_write_target(lvalue.name, refs, also_use)
    elif isinstance(lvalue, c_ast.StructRef):
        if lvalue.type == "->":
            _collect_uses(lvalue.name, refs)
        else:
            _collect_write_target(lvalue.name, refs, also_use)
    elif isinstance(lvalue, c_ast.UnaryOp) and lvalue.op == "*":
        _collect_uses(lvalue.expr, refs)
    else:
        _collect_uses(lvalue, refs)


def _stmt_refs(stmt) -> _Refs:
    refs = _Refs()
    if stmt is None:
        return refs
    if isinstance(stmt, c_ast.Assignment):
        _collect_assignment(stmt, refs)
    elif isinstance(stmt, c_ast.Return):
        _collect_uses(stmt.expr, refs)
    else:
        _collect_uses(stmt, refs)
    return refs


def _contains_call(node) -> c_ast.FuncCall | None:
    if node is None:
        return None
    if isinstance(node, c_ast.FuncCall):
        return node
    for _, child in node.children():
        found = _contains_call(child)
        if found is not None:
            return found
    return None


# -- CFG construction ---------------------------------------------------------


class _ContinueCtx:
    __slots__ = ("target", "deferred")

    def __init__(self, target: int | None):
        self.target = target
        self.deferred: list[tuple[int, str]] = []


class _CfgBuilder:
    """Builds one statement-level CFG per function definition.

    Frontier discipline: ``self.frontier`` holds dangling (node, edge label)
    pairs awaiting their successor.  An empty frontier means the current
    program point is unreachable; unreachable statements produce no nodes
    (labels are the exception since a goto may resurrect them).
    """

    def build_function(self, fd: c_ast.FuncDef, start_id: int = 0):
        self.nodes: list[CfgNode] = []
        self.edges: list[CfgEdge] = []
        self.refs: dict[int, _Refs] = {}
        self.fn_name = fd.decl.name
        self._next_id = start_id
        self.frontier: list[tuple[int, str]] = []
        self.break_stack: list[list[tuple[int, str]]] = []
        self.continue_stack: list[_ContinueCtx] = []
        self.labels: dict[str, int] = {}
        self.pending_gotos: list[tuple[int, str]] = []

        entry = self._node("entry", "Entry", _line_of(fd))
        exit_node = self._node("exit", "Exit", _line_of(fd))
        self.exit_id = exit_node.id
        self.frontier = [(entry.id, "seq")]

        body_items = fd.body.block_items or [] if fd.body is not None else []
        body_start_count = len(self.nodes)
        for stmt in body_items:
            self._build_stmt(stmt)
        body_nonempty = len(self.nodes) > body_start_count

        if self.frontier:
            if body_nonempty:
                # Implicit return point at the closing brace.
                end = self._node("statement", "end", _line_of(fd))
                self._wire(self.frontier, end.id)
                self.frontier = [(end.id, "seq")]
            self._wire(self.frontier, self.exit_id)
            self.frontier = []

        for goto_id, label_name in self.pending_gotos:
            target = self.labels.get(label_name, self.exit_id)
            self.edges.append(CfgEdge(goto_id, target))

        self._prune_unreachable(entry.id)

        params = self._source_params(fd)
        return self.nodes, self.edges, self.refs, params

    # node / edge helpers

    def _node(self, kind: str, label: str, line: int, refs: _Refs | None = None) -> CfgNode:
        node = CfgNode(self._next_id, kind, label, line, self.fn_name)
        self._next_id += 1
        self.nodes.append(node)
        self.refs[node.id] = refs if refs is not None else _Refs()
        return node

    def _wire(self, sources: list[tuple[int, str]], dst: int, back: bool = False) -> None:
        for src, label in sources:
            self.edges.append(CfgEdge(src, dst, label, back))

    def _attach(self, kind: str, label: str, line: int, refs: _Refs | None = None) -> CfgNode:
        node = self._node(kind, label, line, refs)
        self._wire(self.frontier, node.id)
        self.frontier = [(node.id, "seq")]
        return node

    # statement dispatch

    def _build_stmt(self, stmt) -> None:
        if stmt is None:
            return
        if not self.frontier and not isinstance(stmt, c_ast.Label):
            return  # unreachable

        if isinstance(stmt, c_ast.Compound):
            for item in stmt.block_items or []:
                self._build_stmt(item)
        elif isinstance(stmt, c_ast.Decl):
            self._build_decl(stmt)
        elif isinstance(stmt, c_ast.DeclList):
            for decl in stmt.decls or []:
                self._build_decl(decl)
        elif isinstance(stmt, c_ast.If):
            self._build_if(stmt)
        elif isinstance(stmt, c_ast.While):
            self._build_while(stmt)
        elif isinstance(stmt, c_ast.DoWhile):
            self._build_dowhile(stmt)
        elif isinstance(stmt, c_ast.For):
            self._build_for(stmt)
        elif isinstance(stmt, c_ast.Switch):
            self._build_switch(stmt)
        elif isinstance(stmt, c_ast.Return):
            label = "return" if stmt.expr is None else f"return {_render(stmt.expr)}"
            self._attach("return", label, _line_of(stmt), _stmt_refs(stmt))
            self._wire(self.frontier, self.exit_id)
            self.frontier = []
        elif isinstance(stmt, c_ast.Break):
            node = self._attach("statement", "break", _line_of(stmt))
            if self.break_stack:
                self.break_stack[-1].append((node.id, "seq"))
            else:
                self._wire([(node.id, "seq")], self.exit_id)
            self.frontier = []
        elif isinstance(stmt, c_ast.Continue):
            node = self._attach("statement", "continue", _line_of(stmt))
            ctx = self.continue_stack[-1] if self.continue_stack else None
            if ctx is None:
                self._wire([(node.id, "seq")], self.exit_id)
            elif ctx.target is None:
                ctx.deferred.append((node.id, "seq"))
            else:
                self._wire([(node.id, "seq")], ctx.target, back=True)
            self.frontier = []
        elif isinstance(stmt, c_ast.Goto):
            node = self._attach("statement", f"goto {stmt.name}", _line_of(stmt))
            self.pending_gotos.append((node.id, stmt.name))
            self.frontier = []
        elif isinstance(stmt, c_ast.Label):
            before = self._next_id
            self._build_stmt(stmt.stmt)
            if self._next_id > before:
                self.labels[stmt.name] = before
            else:
                anchor = self._attach("statement", f"{stmt.name}:", _line_of(stmt))
                self.labels[stmt.name] = anchor.id
        elif isinstance(stmt, c_ast.EmptyStatement):
            pass
        else:
            self._build_simple(stmt)

    def _build_simple(self, stmt) -> None:
        refs = _stmt_refs(stmt)
        call = _contains_call(stmt)
        if call is not None:
            self._attach("call", f"call {_callee_name(call)}", _line_of(stmt), refs)
        else:
            self._attach("statement", _render(stmt), _line_of(stmt), refs)

    def _build_decl(self, decl: c_ast.Decl) -> None:
        line = _line_of(decl)
        type_text = " ".join(_decl_type_names(decl))
        self._attach("statement", f"decl {type_text} {decl.name}".strip(), line)
        if decl.init is not None:
            refs = _Refs()
            refs.defs.add(decl.name)
            _collect_uses(decl.init, refs)
            call = _contains_call(decl.init)
            label = f"{decl.name} = {_render(decl.init)}"
            if call is not None:
                self._attach("call", f"call {_callee_name(call)}", line, refs)
            else:
                self._attach("statement", label, line, refs)

    def _build_if(self, node: c_ast.If) -> None:
        refs = _Refs()
        _collect_uses(node.cond, refs)
        branch = self._attach("branch", f"if({_render(node.cond)})", _line_of(node), refs)

        self.frontier = [(branch.id, "True")]
        self._build_stmt(node.iftrue)
        then_exits = self.frontier

        if node.iffalse is not None:
            self.frontier = [(branch.id, "False")]
            self._build_stmt(node.iffalse)
            else_exits = self.frontier
        else:
            else_exits = [(branch.id, "False")]

        merged = then_exits + else_exits
        if merged:
            join = self._node("statement", "join", _line_of(node))
            self._wire(merged, join.id)
            self.frontier = [(join.id, "seq")]
        else:
            self.frontier = []

    def _build_while(self, node: c_ast.While) -> None:
        refs = _Refs()
        _collect_uses(node.cond, refs)
        loop = self._attach("loop", f"while({_render(node.cond)})", _line_of(node), refs)

        breaks: list[tuple[int, str]] = []
        self.break_stack.append(breaks)
        self.continue_stack.append(_ContinueCtx(target=loop.id))
        self.frontier = [(loop.id, "True")]
        self._build_stmt(node.stmt)
        self._wire(self.frontier, loop.id, back=True)
        self.break_stack.pop()
        self.continue_stack.pop()

        self.frontier = [(loop.id, "False")] + breaks

    def _build_dowhile(self, node: c_ast.DoWhile) -> None:
        body_start = self._next_id
        breaks: list[tuple[int, str]] = []
        cont = _ContinueCtx(target=None)
        self.break_stack.append(breaks)
        self.continue_stack.append(cont)
        self._build_stmt(node.stmt)  # entry frontier flows straight into the body
        body_exits = self.frontier
        self.break_stack.pop()
        self.continue_stack.pop()

        refs = _Refs()
        _collect_uses(node.cond, refs)
        loop = self._node("loop", f"do-while({_render(node.cond)})", _line_of(node), refs)
        self._wire(body_exits, loop.id)
        self._wire(cont.deferred, loop.id)
        body_created = any(n.id == body_start for n in self.nodes)
        back_target = body_start if body_created else loop.id
        self.edges.append(CfgEdge(loop.id, back_target, "True", back=True))
        self.frontier = [(loop.id, "False")] + breaks

    def _build_for(self, node: c_ast.For) -> None:
        if node.init is not None:
            if isinstance(node.init, c_ast.DeclList):
                for decl in node.init.decls or []:
                    self._build_decl(decl)
            elif isinstance(node.init, c_ast.Decl):
                self._build_decl(node.init)
            else:
                self._build_simple(node.init)

        refs = _Refs()
        _collect_uses(node.cond, refs)
        loop = self._attach("loop", _loop_label(node), _line_of(node), refs)

        breaks: list[tuple[int, str]] = []
        cont = _ContinueCtx(target=None)
        self.break_stack.append(breaks)
        self.continue_stack.append(cont)
        self.frontier = [(loop.id, "True")]
        self._build_stmt(node.stmt)
        body_exits = self.frontier
        self.break_stack.pop()
        self.continue_stack.pop()

        if node.next is not None:
            nrefs = _stmt_refs(node.next)
            nxt = self._node("statement", _render(node.next), _line_of(node.next), nrefs)
            self._wire(body_exits, nxt.id)
            self._wire(cont.deferred, nxt.id)
            self.edges.append(CfgEdge(nxt.id, loop.id, "seq", back=True))
        else:
            self._wire(body_exits, loop.id, back=True)
            self._wire(cont.deferred, loop.id, back=True)

        if node.cond is not None or not breaks:
            # A condition-free loop with no break still gets a never-taken
            # exit edge so the graph keeps a reachable exit node.
            self.frontier = [(loop.id, "False")] + breaks
        else:
            self.frontier = list(breaks)

    def _build_switch(self, node: c_ast.Switch) -> None:
        cond_text = _render(node.cond)
        cases = _flatten_cases(node.stmt)
        if not cases:
            return

        # Comparison chain: one branch node per case value, linked by False
        # edges; the final False edge reaches the default body or the join.
        branch_ids: list[int] = []
        incoming = self.frontier
        for case_expr, _ in cases:
            if case_expr is None:
                continue
            refs = _Refs()
            _collect_uses(node.cond, refs)
            _collect_uses(case_expr, refs)
            label = f"switch({cond_text}) case {_render(case_expr)}"
            b = self._node("branch", label, _line_of(case_expr, _line_of(node)), refs)
            self._wire(incoming, b.id)
            incoming = [(b.id, "False")]
            branch_ids.append(b.id)

        breaks: list[tuple[int, str]] = []
        self.break_stack.append(breaks)
        fallthrough: list[tuple[int, str]] = []
        incoming_used = False
        bi = 0
        for case_expr, stmts in cases:
            sources = list(fallthrough)
            if case_expr is None:
                sources.extend(incoming)
                incoming_used = True
            else:
                sources.append((branch_ids[bi], "True"))
                bi += 1
            self.frontier = sources
            for s in stmts:
                self._build_stmt(s)
            fallthrough = self.frontier
        self.break_stack.pop()

        exits = list(fallthrough) + breaks
        if not incoming_used:
            exits.extend(incoming)
        if exits:
            join = self._node("statement", "join", _line_of(node))
            self._wire(exits, join.id)
            self.frontier = [(join.id, "seq")]
        else:
            self.frontier = []

    def _prune_unreachable(self, entry_id: int) -> None:
        reachable = {entry_id}
        stack = [entry_id]
        out: dict[int, list[CfgEdge]] = {}
        for e in self.edges:
            out.setdefault(e.src, []).append(e)
        while stack:
            current = stack.pop()
            for e in out.get(current, ()):
                if e.dst not in reachable:
                    reachable.add(e.dst)
                    stack.append(e.dst)
        reachable.add(self.exit_id)
        self.nodes = [n for n in self.nodes if n.id in reachable]
        self.edges = [e for e in self.edges if e.src in reachable and e.dst in reachable]

    def _source_params(self, fd: c_ast.FuncDef) -> list[tuple[str, int]]:
        """Parameters usable as data sources: values and pointers to const.

        Non-const pointer parameters are output destinations under this
        model and contribute no source node.
        """
        func_decl = fd.decl.type
        params: list[tuple[str, int]] = []
        if not isinstance(func_decl, c_ast.FuncDecl) or func_decl.args is None:
            return params
        for p in func_decl.args.params:
            if not isinstance(p, c_ast.Decl) or not p.name:
                continue
            if isinstance(p.type, (c_ast.PtrDecl, c_ast.ArrayDecl)):
                quals = set(p.quals or [])
                inner = getattr(p.type, "type", None)
                quals.update(getattr(inner, "quals", []) or [])
                if "const" not in quals:
                    continue
            params.append((p.name, _line_of(p, _line_of(fd))))
        return params


def _decl_type_names(decl: c_ast.Decl) -> list[str]:
    node = decl.type
    while node is not None and not isinstance(node, c_ast.IdentifierType):
        node = getattr(node, "type", None)
        if isinstance(node, (c_ast.Struct, c_ast.Union, c_ast.Enum)):
            return [node.name or type(node).__name__.lower()]
    return list(node.names) if isinstance(node, c_ast.IdentifierType) else []


def _flatten_cases(stmt) -> list[tuple[object, list]]:
    """Flatten a switch body into (case expression | None for default, stmts)."""
    items = stmt.block_items or [] if isinstance(stmt, c_ast.Compound) else [stmt]
    cases: list[tuple[object, list]] = []
    for item in items:
        current = item
        while isinstance(current, (c_ast.Case, c_ast.Default)):
            expr = current.expr if isinstance(current, c_ast.Case) else None
            stmts = list(current.stmts or [])
            nested = None
            if stmts and isinstance(stmts[0], (c_ast.Case, c_ast.Default)):
                nested = stmts[0]
                stmts = []
            cases.append((expr, stmts))
            current = nested
        if not isinstance(item, (c_ast.Case, c_ast.Default)) and cases:
            cases[-1][1].append(item)
    return cases


# -- DFG construction ---------------------------------------------------------


def _build_dfg(
    nodes: list[CfgNode],
    edges: list[CfgEdge],
    refs: dict[int, _Refs],
    params: list[tuple[str, int]],
    dfg: DfgGraph,
) -> None:
    """Reaching-definitions data flow over one function's CFG.

    Each definition site links its reached uses in statement order, so a
    value's journey reads as a chain: definition, first use, next use, and so
    on.  A use inside a defining statement collapses onto that statement's
    definition node, which is how assignments relabel a flow from one
    variable to the next.
    """
    if not nodes:
        return
    entry = next(n for n in nodes if n.kind == "entry")
    fn_name = entry.fn
    node_ids = [n.id for n in nodes]
    by_id = {n.id: n for n in nodes}

    # Definition sites: (site key, var, cfg node id); parameters sit on entry.
    sites: list[tuple[int, str, int]] = []
    param_names = []
    for name, _line in params:
        sites.append((len(sites), name, entry.id))
        param_names.append(name)
    for nid in node_ids:
        r = refs.get(nid)
        if r is None:
            continue
        for var in sorted(r.defs):
            sites.append((len(sites), var, nid))

    gen: dict[int, set[int]] = {nid: set() for nid in node_ids}
    kill: dict[int, set[int]] = {nid: set() for nid in node_ids}
    sites_by_var: dict[str, set[int]] = {}
    for sid, var, nid in sites:
        sites_by_var.setdefault(var, set()).add(sid)
    for sid, var, nid in sites:
        gen[nid].add(sid)
    for nid in node_ids:
        killed: set[int] = set()
        for sid in gen[nid]:
            var = sites[sid][1]
            killed |= sites_by_var[var] - {sid}
        kill[nid] = killed

    preds: dict[int, list[int]] = {nid: [] for nid in node_ids}
    succs: dict[int, list[int]] = {nid: [] for nid in node_ids}
    for e in edges:
        if e.src in preds and e.dst in preds:
            preds[e.dst].append(e.src)
            succs[e.src].append(e.dst)

    in_sets: dict[int, set[int]] = {nid: set() for nid in node_ids}
    out_sets: dict[int, set[int]] = {
        nid: set(gen[nid]) for nid in node_ids
    }
    worklist = list(node_ids)
    while worklist:
        nid = worklist.pop(0)
        new_in: set[int] = set()
        for p in preds[nid]:
            new_in |= out_sets[p]
        new_out = gen[nid] | (new_in - kill[nid])
        if new_in != in_sets[nid] or new_out != out_sets[nid]:
            in_sets[nid] = new_in
            out_sets[nid] = new_out
            for s in succs[nid]:
                if s not in worklist:
                    worklist.append(s)

    # DFG nodes, created lazily as edges demand them.
    next_id = len(dfg.nodes)
    dfg_nodes: dict[tuple, int] = {}

    def get_node(key: tuple, factory) -> int:
        nonlocal next_id
        if key not in dfg_nodes:
            node = factory(next_id)
            dfg.nodes.append(node)
            dfg_nodes[key] = next_id
            next_id += 1
        return dfg_nodes[key]

    def param_node(var: str) -> int:
        line = dict(params)[var]
        return get_node(
            ("param", var),
            lambda i: DfgNode(i, var, "param", line, f"param:{var}", -1, fn_name),
        )

    def def_node(var: str, nid: int) -> int:
        return get_node(
            ("def", var, nid),
            lambda i: DfgNode(i, var, "def", by_id[nid].line, f"def:{var}", nid, fn_name),
        )

    def use_node(var: str, nid: int) -> int:
        cfg_node = by_id[nid]
        kind = "sink" if cfg_node.kind in ("call", "return") else "use"
        return get_node(
            ("use", var, nid),
            lambda i: DfgNode(i, var, kind, cfg_node.line, cfg_node.label, nid, fn_name),
        )

    edge_set: set[tuple[int, int]] = set()

    def add_edge(src: int, dst: int) -> None:
        if src != dst and (src, dst) not in edge_set:
            edge_set.add((src, dst))
            dfg.edges.append(DfgEdge(src, dst))

    for sid, var, def_nid in sites:
        is_param = def_nid == entry.id and var in param_names
        occurrences = sorted(
            nid
            for nid in node_ids
            if nid in refs and var in refs[nid].uses and sid in in_sets[nid]
        )
        if not occurrences:
            continue
        if is_param:
            prev = param_node(var)
        else:
            prev = def_node(var, def_nid)
        for nid in occurrences:
            node_defs = refs.get(nid).defs
            if node_defs:
                targets = [def_node(w, nid) for w in sorted(node_defs)]
            else:
                targets = [use_node(var, nid)]
            for t in targets:
                add_edge(prev, t)
            prev = targets[0]
