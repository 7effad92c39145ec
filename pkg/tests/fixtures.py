"""Shared test fixtures: C sources, toy weakness corpus, scripted responses."""

from __future__ import annotations

from vulncontext.graphs import SourceFunction
from vulncontext.knowledge import KnowledgeEntry

COPY_BYTES = """void copy_bytes(char *dst, const char *src, size_t len) {
    size_t max = MAX_BUF;
    if (len > max) {
        return;
    }
    memcpy(dst, src, len);
}
"""

GOLDEN_T_AST = (
    "Function copy_bytes@L1: 2 declarations, 1 assignments, 1 branches, 1 calls. "
    "Key call chain: memcpy. Conditions/Loops: if(len > max)."
)
GOLDEN_T_CFG = (
    "Function copy_bytes: retained control points 5/9; branches 1; calls 1. "
    "Path 1: Entry → [True] if(len > max) → return → Exit. "
    "Path 2: Entry → [False] if(len > max) → call memcpy → Exit."
)
GOLDEN_T_DFG = (
    "Function copy_bytes: edges retained 3/4; parameter sources 2; chains 1. "
    "Parameter sources: param:len@L1; param:src@L1. "
    "Data chain: param:len → if(len > max) → call memcpy."
)


def copy_bytes_fn(label: str | None = "vulnerable") -> SourceFunction:
    return SourceFunction(id="copy_bytes", code=COPY_BYTES, label=label)


# A small corpus of parseable C functions covering the statement forms the
# frontend supports: branches, loops of every flavor, switches, gotos,
# pointer parameters, early returns, and call-heavy bodies.
FIXTURE_CORPUS: list[tuple[str, str]] = [
    ("copy_bytes", COPY_BYTES),
    ("empty", "void empty(void) {}\n"),
    (
        "straight_line",
        """void straight_line(int a) {
    int x = a;
    int y = x + 1;
    int z = y * 2;
    int w = z - 3;
}
""",
    ),
    (
        "single_if",
        """int single_if(int a) {
    if (a > 0) {
        return 1;
    }
    return 0;
}
""",
    ),
    (
        "if_else",
        """int if_else(int a, int b) {
    int r;
    if (a < b) {
        r = a;
    } else {
        r = b;
    }
    return r;
}
""",
    ),
    (
        "two_ifs_then_call",
        """void two_ifs_then_call(int a, int b) {
    if (a) {
        first();
    }
    if (b) {
        second();
    }
    finish();
}
""",
    ),
    (
        "loop_with_call",
        """void loop_with_call(int n) {
    while (n > 0) {
        emit(n);
        n--;
    }
}
""",
    ),
    (
        "for_loop_sum",
        """int for_loop_sum(int n) {
    int total = 0;
    int i;
    for (i = 0; i < n; i++) {
        total = total + i;
    }
    return total;
}
""",
    ),
    (
        "do_while_drain",
        """void do_while_drain(int n) {
    do {
        consume(n);
        n--;
    } while (n > 0);
}
""",
    ),
    (
        "nested_loops",
        """void nested_loops(int rows, int cols) {
    int i;
    int j;
    for (i = 0; i < rows; i++) {
        for (j = 0; j < cols; j++) {
            visit(i, j);
        }
    }
}
""",
    ),
    (
        "nested_if",
        """int nested_if(int a, int b) {
    if (a > 0) {
        if (b > 0) {
            return a + b;
        }
        return a;
    }
    return 0;
}
""",
    ),
    (
        "switch_dispatch",
        """int switch_dispatch(int op, int x) {
    int r = 0;
    switch (op) {
        case 0:
            r = x + 1;
            break;
        case 1:
            r = x - 1;
            break;
        default:
            r = x;
    }
    return r;
}
""",
    ),
    (
        "early_return_guard",
        """int early_return_guard(const char *name) {
    if (!name) {
        return -1;
    }
    return validate(name);
}
""",
    ),
    (
        "break_in_loop",
        """int break_in_loop(int n, int target) {
    int i;
    for (i = 0; i < n; i++) {
        if (i == target) {
            break;
        }
    }
    return i;
}
""",
    ),
    (
        "continue_in_loop",
        """int continue_in_loop(int n) {
    int kept = 0;
    int i;
    for (i = 0; i < n; i++) {
        if (i % 2) {
            continue;
        }
        kept++;
    }
    return kept;
}
""",
    ),
    (
        "goto_cleanup",
        """int goto_cleanup(int fd, const char *path) {
    int rc = open_file(path);
    if (rc < 0) {
        goto out;
    }
    rc = read_file(fd);
out:
    close_file(fd);
    return rc;
}
""",
    ),
    (
        "unchecked_strcpy",
        """void unchecked_strcpy(char *dst, const char *src) {
    strcpy(dst, src);
}
""",
    ),
    (
        "guarded_index",
        """int guarded_index(const int *table, int idx, int limit) {
    if (idx < 0) {
        return 0;
    }
    if (idx >= limit) {
        return 0;
    }
    return table[idx];
}
""",
    ),
    (
        "pointer_walk",
        """int pointer_walk(const char *s) {
    int n = 0;
    while (*s) {
        n++;
        s++;
    }
    return n;
}
""",
    ),
    (
        "accumulate_calls",
        """int accumulate_calls(int seed) {
    int a = step_one(seed);
    int b = step_two(a);
    int c = step_three(b);
    return c;
}
""",
    ),
    (
        "diamond_flow",
        """int diamond_flow(int flag, const int *src) {
    int value;
    if (flag) {
        value = src[0];
    } else {
        value = src[1];
    }
    return use_value(value);
}
""",
    ),
    (
        "ternary_pick",
        """int ternary_pick(int a, int b) {
    int best = a > b ? a : b;
    return best;
}
""",
    ),
    (
        "unsigned_wrap",
        """unsigned unsigned_wrap(unsigned a, unsigned b) {
    unsigned total = a + b;
    if (total < a) {
        return 0;
    }
    return total;
}
""",
    ),
    (
        "null_check_deref",
        """int null_check_deref(const int *p) {
    if (p == 0) {
        return -1;
    }
    return *p;
}
""",
    ),
    (
        "loop_until_sentinel",
        """int loop_until_sentinel(const int *data) {
    int i = 0;
    while (data[i] != -1) {
        i++;
    }
    return i;
}
""",
    ),
    (
        "compound_update",
        """int compound_update(int base, int times) {
    int acc = base;
    acc += times;
    acc *= 2;
    acc -= base;
    return acc;
}
""",
    ),
    (
        "multi_return_paths",
        """int multi_return_paths(int code) {
    if (code == 0) {
        return handle_zero();
    }
    if (code < 0) {
        return handle_negative(code);
    }
    return handle_positive(code);
}
""",
    ),
    (
        "shadow_reassign",
        """int shadow_reassign(int a) {
    int x = a;
    x = x + 1;
    x = x * 2;
    return x;
}
""",
    ),
    (
        "void_logger",
        """void void_logger(const char *msg, int level) {
    if (level > 2) {
        log_warn(msg);
    } else {
        log_info(msg);
    }
}
""",
    ),
    (
        "mixed_flow",
        """int mixed_flow(int n, const int *values) {
    int total = 0;
    int i;
    for (i = 0; i < n; i++) {
        if (values[i] < 0) {
            continue;
        }
        total += values[i];
        if (total > 1000) {
            break;
        }
    }
    return total;
}
""",
    ),
]


def corpus_functions() -> list[SourceFunction]:
    return [SourceFunction(id=name, code=code) for name, code in FIXTURE_CORPUS]


TOY_ENTRIES = [
    KnowledgeEntry(
        "CWE-787",
        "Out-of-bounds Write",
        "The product writes data past the end, or before the beginning, of the intended buffer.",
        "memcpy(dest, src, returned_length);",
    ),
    KnowledgeEntry(
        "CWE-476",
        "NULL Pointer Dereference",
        "The product dereferences a pointer that it expects to be valid but is NULL.",
        "if (item) {} value = item->data;",
    ),
    KnowledgeEntry(
        "CWE-190",
        "Integer Overflow or Wraparound",
        "The product performs a calculation that can produce an integer overflow or wraparound.",
        "total = count * size;",
    ),
    KnowledgeEntry(
        "CWE-416",
        "Use After Free",
        "Referencing memory after it has been freed can cause the product to crash or execute code.",
        "free(buf); buf[0] = 1;",
    ),
    KnowledgeEntry(
        "CWE-134",
        "Uncontrolled Format String",
        "The product uses a function that accepts a format string from an external source.",
        "printf(user_supplied);",
    ),
]


def scripted_rules(verdict: str = "Verdict: Yes") -> list[tuple[str, object]]:
    return [
        (
            "identify at most two possible vulnerability types",
            "Query 1: out of bounds write via unchecked length\nQuery 2: N/A",
        ),
        (
            "summarize its observable functional behavior",
            "Copies len bytes from src to dst after a boundary check.",
        ),
        ("Return the final prediction", verdict),
    ]
