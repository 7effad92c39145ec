"""Full triage and evaluation round trip with the deterministic offline backend.

Run: python demos/03_offline_pipeline.py
"""

from vulncontext import (
    KnowledgeEntry,
    ScriptedChatClient,
    SourceFunction,
    build_knowledge_base,
    classify_pair,
    compute_metrics,
    triage,
)
from vulncontext.evaluation import tally_outcomes
from vulncontext.llm import default_offline_rules

index = build_knowledge_base(
    [
        KnowledgeEntry(
            "CWE-787",
            "Out-of-bounds Write",
            "The product writes data past the end of the intended buffer.",
            "memcpy(dest, src, n);",
        ),
        KnowledgeEntry(
            "CWE-476",
            "NULL Pointer Dereference",
            "The product dereferences a pointer that may be NULL.",
        ),
    ]
)

# Paired dataset: each vulnerable function rides with its fixed counterpart.
pairs = [
    (
        SourceFunction(
            id="blind_copy",
            label="vulnerable",
            code="void blind_copy(char *dst, const char *src, size_t n) { memcpy(dst, src, n); }",
        ),
        SourceFunction(
            id="checked_copy",
            label="benign",
            code=(
                "void checked_copy(char *dst, const char *src, size_t n) {\n"
                "    if (n > 64) {\n        return;\n    }\n"
                "    copy_small(dst, src, n);\n}"
            ),
        ),
    ),
]

# The scripted backend answers all three calls deterministically; swap in an
# HTTP client (config llm.kind = "http") for a real model.
client = ScriptedChatClient(rules=default_offline_rules())

outcomes = []
for vulnerable_fn, benign_fn in pairs:
    verdict_v = triage(vulnerable_fn, index, client)
    verdict_b = triage(benign_fn, index, client)
    print(f"{vulnerable_fn.id:>14}: {verdict_v.label}  (degraded: {sorted(verdict_v.degraded_paths) or 'none'})")
    print(f"{benign_fn.id:>14}: {verdict_b.label}  (degraded: {sorted(verdict_b.degraded_paths) or 'none'})")
    outcomes.append(classify_pair(verdict_v.label, verdict_b.label))

print()
pc, pv, pb, pr = tally_outcomes(outcomes)
report = compute_metrics(pc, pv, pb, pr)
for key, value in report.as_dict().items():
    print(f"{key:>6}: {value}")
print(f"\nmodel calls issued: {len(client.call_log)} (3 per function)")
