"""CWE knowledge base: corpus ingestion, hybrid scoring, retrieval, assembly.

Every indexed passage concatenates a weakness entry's name, description, and
demonstrative code example.  Two representations are computed per text: a
unit-normalized dense vector for semantic similarity and a sparse term-weight
map for lexical overlap.  Query/passage similarity is the convex combination

    alpha * cos(dense_q, dense_d) + (1 - alpha) * sum_t sparse_q[t] * sparse_d[t]

over shared terms t.  The corpus is small (about a thousand entries), so
retrieval scores every passage exhaustively; no approximate index is needed.
"""

from __future__ import annotations

import csv
import hashlib
import json
import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    CorpusFormatError,
    EmptyCorpusError,
    EncoderMismatchError,
    QueryParseError,
)
from .graphs import SourceFunction
from .llm import ChatClient, ChatRequest
from .prompts import fill_query_prompt

__all__ = [
    "KnowledgeEntry",
    "RetrievalQuery",
    "KnowledgeContext",
    "ReferenceEncoder",
    "KnowledgeIndex",
    "FALLBACK_QUERY_TEXT",
    "hybrid_score",
    "load_cwe_corpus",
    "build_knowledge_base",
    "generate_queries",
    "assemble_knowledge",
]

FALLBACK_QUERY_TEXT = "common software vulnerability patterns requiring further inspection"

INDEX_MAGIC = "VCKB"
INDEX_FORMAT_VERSION = 1

DEFAULT_ALPHA = 0.5
DEFAULT_TOP_K = 2
DEFAULT_MAX_ENTRIES = 2
DEFAULT_EXAMPLE_CHAR_BUDGET = 1200


@dataclass(frozen=True)
class KnowledgeEntry:
    """One indexable weakness passage."""

    cwe_id: str
    name: str
    description: str
    example: str = ""

    @property
    def passage(self) -> str:
        parts = [p for p in (self.name, self.description, self.example) if p]
        return "\n".join(parts)


@dataclass(frozen=True)
class RetrievalQuery:
    text: str
    kind: str = "predicted"  # predicted | fallback


@dataclass
class KnowledgeContext:
    entries: list[KnowledgeEntry]
    text: str


def _cwe_sort_key(cwe_id: str) -> tuple[int, str]:
    match = re.search(r"(\d+)", cwe_id)
    return (int(match.group(1)) if match else 1 << 31, cwe_id)


# ---------------------------------------------------------------------------
# Encoders
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(r"[a-z0-9]+")


class ReferenceEncoder:
    """Deterministic offline encoder.

    Sparse weights are within-document term frequencies normalized by token
    count, over lowercase alphanumeric tokens.  The dense vector is a seeded
    random projection of the sparse vector onto ``dim`` dimensions,
    unit-normalized.  The per-term projection directions derive from a stable
    hash, so identical text encodes identically on every platform and run.
    """

    name = "reference-tf-randproj"

    def __init__(self, dim: int = 64, seed: int = 0):
        self.dim = dim
        self.seed = seed
        self._term_cache: dict[str, np.ndarray] = {}

    @property
    def fingerprint(self) -> str:
        payload = json.dumps(
            {"name": self.name, "dim": self.dim, "seed": self.seed}, sort_keys=True
        )
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]

    def sparse(self, text: str) -> dict[str, float]:
        tokens = _TOKEN_RE.findall(text.lower())
        if not tokens:
            return {}
        weight = 1.0 / len(tokens)
        out: dict[str, float] = {}
        for token in tokens:
            out[token] = out.get(token, 0.0) + weight
        return out

    def _term_direction(self, term: str) -> np.ndarray:
        cached = self._term_cache.get(term)
        if cached is not None:
            return cached
        digest = hashlib.sha256(f"{self.seed}:{term}".encode("utf-8")).digest()
        rng = np.random.default_rng(int.from_bytes(digest[:8], "big"))
        direction = rng.standard_normal(self.dim)
        self._term_cache[term] = direction
        return direction

    def dense(self, text: str, sparse: dict[str, float] | None = None) -> np.ndarray:
        weights = self.sparse(text) if sparse is None else sparse
        vec = np.zeros(self.dim)
        for term, weight in weights.items():
            vec += weight * self._term_direction(term)
        norm = np.linalg.norm(vec)
        if norm > 0:
            vec = vec / norm
        return vec

    def encode(self, text: str) -> tuple[np.ndarray, dict[str, float]]:
        sparse = self.sparse(text)
        return self.dense(text, sparse), sparse


def hybrid_score(
    query_dense: np.ndarray,
    query_sparse: dict[str, float],
    entry_dense: np.ndarray,
    entry_sparse: dict[str, float],
    alpha: float,
) -> float:
    """Convex fusion of cosine similarity and sparse term overlap."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    dense_term = float(np.dot(query_dense, entry_dense))
    # Fixed summation order keeps scores bit-identical across processes.
    shared = sorted(query_sparse.keys() & entry_sparse.keys())
    sparse_term = sum(query_sparse[t] * entry_sparse[t] for t in shared)
    return alpha * dense_term + (1.0 - alpha) * sparse_term


# ---------------------------------------------------------------------------
# Corpus loading
# ---------------------------------------------------------------------------


def load_cwe_corpus(path: str | Path) -> list[KnowledgeEntry]:
    """Load a CWE list export, XML or CSV flavor.

    Required fields: ID, Name, Description; the demonstrative example code is
    used when present.  Entries with an empty description are skipped.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8", errors="replace")
    except OSError as exc:
        raise CorpusFormatError(f"cannot read corpus {path}: {exc}") from exc
    stripped = text.lstrip()
    if stripped.startswith("<"):
        entries = _load_cwe_xml(text)
    else:
        entries = _load_cwe_csv(text)
    if not entries:
        raise CorpusFormatError(f"no usable weakness entries found in {path}")
    entries.sort(key=lambda e: _cwe_sort_key(e.cwe_id))
    return entries


def _element_text(element) -> str:
    return " ".join("".join(element.itertext()).split())


def _local_name(tag: str) -> str:
    return tag.split("}")[-1]


def _load_cwe_xml(text: str) -> list[KnowledgeEntry]:
    try:
        root = ET.fromstring(text)
    except ET.ParseError as exc:
        raise CorpusFormatError(f"invalid XML: {exc}") from exc
    entries: list[KnowledgeEntry] = []
    for element in root.iter():
        if _local_name(element.tag) != "Weakness":
            continue
        raw_id = element.get("ID", "")
        name = element.get("Name", "")
        if not raw_id:
            continue
        description = ""
        example_parts: list[str] = []
        for child in element.iter():
            local = _local_name(child.tag)
            if local == "Description" and not description:
                description = _element_text(child)
            elif local == "Example_Code":
                code = "".join(child.itertext()).strip()
                if code:
                    example_parts.append(code)
        if not description:
            continue
        entries.append(
            KnowledgeEntry(
                cwe_id=f"CWE-{raw_id}",
                name=name,
                description=description,
                example="\n".join(example_parts),
            )
        )
    return entries


_CSV_ID_COLUMNS = ("CWE-ID", "ID", "cwe_id", "id")
_CSV_NAME_COLUMNS = ("Name", "name")
_CSV_DESC_COLUMNS = ("Description", "description")
_CSV_EXAMPLE_COLUMNS = (
    "Demonstrative Examples",
    "Example Code",
    "example",
    "Example",
)


def _pick_column(row: dict, candidates: tuple[str, ...]) -> str | None:
    for column in candidates:
        if column in row:
            return column
    return None


def _load_cwe_csv(text: str) -> list[KnowledgeEntry]:
    reader = csv.DictReader(text.splitlines())
    if reader.fieldnames is None:
        raise CorpusFormatError("CSV export has no header row")
    entries: list[KnowledgeEntry] = []
    id_col = name_col = desc_col = example_col = None
    for row in reader:
        if id_col is None:
            id_col = _pick_column(row, _CSV_ID_COLUMNS)
            name_col = _pick_column(row, _CSV_NAME_COLUMNS)
            desc_col = _pick_column(row, _CSV_DESC_COLUMNS)
            example_col = _pick_column(row, _CSV_EXAMPLE_COLUMNS)
            if id_col is None or name_col is None or desc_col is None:
                raise CorpusFormatError(
                    "CSV export must carry ID, Name, and Description columns; "
                    f"found {reader.fieldnames}"
                )
        raw_id = (row.get(id_col) or "").strip()
        description = (row.get(desc_col) or "").strip()
        if not raw_id or not description:
            continue
        cwe_id = raw_id if raw_id.upper().startswith("CWE-") else f"CWE-{raw_id}"
        entries.append(
            KnowledgeEntry(
                cwe_id=cwe_id,
                name=(row.get(name_col) or "").strip(),
                description=description,
                example=(row.get(example_col) or "").strip() if example_col else "",
            )
        )
    return entries


# ---------------------------------------------------------------------------
# Index
# ---------------------------------------------------------------------------


@dataclass
class KnowledgeIndex:
    """Immutable-after-build retrieval index with both encodings precomputed."""

    entries: list[KnowledgeEntry]
    dense: np.ndarray  # shape (n, dim)
    sparse: list[dict[str, float]]
    encoder: ReferenceEncoder
    alpha: float = DEFAULT_ALPHA
    fingerprint: str = ""

    def __post_init__(self):
        if not self.fingerprint:
            self.fingerprint = self.encoder.fingerprint

    def __len__(self) -> int:
        return len(self.entries)

    def score(self, query: RetrievalQuery | str, entry_index: int, alpha: float | None = None) -> float:
        text = query.text if isinstance(query, RetrievalQuery) else query
        q_dense, q_sparse = self._encode_query(text)
        return hybrid_score(
            q_dense,
            q_sparse,
            self.dense[entry_index],
            self.sparse[entry_index],
            self.alpha if alpha is None else alpha,
        )

    def _encode_query(self, text: str) -> tuple[np.ndarray, dict[str, float]]:
        if self.encoder.fingerprint != self.fingerprint:
            raise EncoderMismatchError(
                f"index was built with encoder {self.fingerprint}, "
                f"configured encoder is {self.encoder.fingerprint}"
            )
        return self.encoder.encode(text)

    def retrieve_top_k(
        self,
        query: RetrievalQuery | str,
        k: int = DEFAULT_TOP_K,
        alpha: float | None = None,
    ) -> list[tuple[KnowledgeEntry, float]]:
        """Exhaustively score the corpus; descending score, CWE id breaks ties."""
        if not self.entries:
            raise EmptyCorpusError("cannot retrieve from an empty index")
        text = query.text if isinstance(query, RetrievalQuery) else query
        effective_alpha = self.alpha if alpha is None else alpha
        q_dense, q_sparse = self._encode_query(text)
        scored = [
            (
                entry,
                hybrid_score(q_dense, q_sparse, self.dense[i], self.sparse[i], effective_alpha),
            )
            for i, entry in enumerate(self.entries)
        ]
        scored.sort(key=lambda pair: (-pair[1], _cwe_sort_key(pair[0].cwe_id)))
        return scored[: max(k, 0)]

    # -- persistence --------------------------------------------------------

    def save(self, path: str | Path, meta: dict | None = None) -> None:
        payload = {
            "magic": INDEX_MAGIC,
            "format_version": INDEX_FORMAT_VERSION,
            "meta": meta or {},
            "encoder": {
                "name": self.encoder.name,
                "dim": self.encoder.dim,
                "seed": self.encoder.seed,
            },
            "fingerprint": self.fingerprint,
            "alpha": self.alpha,
            "entries": [
                {
                    "cwe_id": e.cwe_id,
                    "name": e.name,
                    "description": e.description,
                    "example": e.example,
                }
                for e in self.entries
            ],
            "dense": [[float(x) for x in row] for row in self.dense],
            "sparse": self.sparse,
        }
        data = json.dumps(payload, sort_keys=True, ensure_ascii=False, separators=(",", ":"))
        Path(path).write_text(data, encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path, encoder: ReferenceEncoder | None = None) -> "KnowledgeIndex":
        try:
            payload = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise CorpusFormatError(f"cannot read index {path}: {exc}") from exc
        if payload.get("magic") != INDEX_MAGIC:
            raise CorpusFormatError(f"{path} is not a knowledge index (bad magic)")
        if payload.get("format_version") != INDEX_FORMAT_VERSION:
            raise CorpusFormatError(
                f"unsupported index format version {payload.get('format_version')}"
            )
        spec = payload["encoder"]
        if encoder is None:
            encoder = ReferenceEncoder(dim=spec["dim"], seed=spec["seed"])
        index = cls(
            entries=[KnowledgeEntry(**e) for e in payload["entries"]],
            dense=np.array(payload["dense"], dtype=float).reshape(
                len(payload["entries"]), -1
            )
            if payload["entries"]
            else np.zeros((0, spec["dim"])),
            sparse=[dict(s) for s in payload["sparse"]],
            encoder=encoder,
            alpha=payload.get("alpha", DEFAULT_ALPHA),
            fingerprint=payload["fingerprint"],
        )
        if encoder.fingerprint != index.fingerprint:
            raise EncoderMismatchError(
                f"index {path} was built with encoder {index.fingerprint}, "
                f"configured encoder is {encoder.fingerprint}"
            )
        return index


def build_knowledge_base(
    entries: list[KnowledgeEntry],
    encoder: ReferenceEncoder | None = None,
    alpha: float = DEFAULT_ALPHA,
) -> KnowledgeIndex:
    """Encode every passage with both representations and build the index."""
    encoder = encoder or ReferenceEncoder()
    dense_rows = []
    sparse_rows = []
    for entry in entries:
        dense, sparse = encoder.encode(entry.passage)
        dense_rows.append(dense)
        sparse_rows.append(sparse)
    dense = np.vstack(dense_rows) if dense_rows else np.zeros((0, encoder.dim))
    return KnowledgeIndex(
        entries=list(entries),
        dense=dense,
        sparse=sparse_rows,
        encoder=encoder,
        alpha=alpha,
    )


# ---------------------------------------------------------------------------
# Query generation and assembly
# ---------------------------------------------------------------------------

_QUERY_LINE_RE = re.compile(r"^\s*Query\s*([12])\s*:\s*(.+?)\s*$", re.IGNORECASE | re.MULTILINE)


def parse_query_response(text: str) -> list[RetrievalQuery]:
    """Extract the 'Query 1:' / 'Query 2:' lines; N/A entries are dropped."""
    queries: list[RetrievalQuery] = []
    for match in _QUERY_LINE_RE.finditer(text or ""):
        candidate = match.group(2).strip()
        if not candidate or candidate.rstrip(".").upper() == "N/A":
            continue
        queries.append(RetrievalQuery(text=candidate, kind="predicted"))
    if not queries:
        raise QueryParseError("no query lines found in model response")
    return queries[:2]


def generate_queries(fn: SourceFunction, llm: ChatClient) -> list[RetrievalQuery]:
    """Ask the model for up to two vulnerability descriptions to retrieve with.

    An unparseable response degrades to the generic fallback query; transport
    errors propagate for the caller to handle.
    """
    prompt = fill_query_prompt(fn.code)
    response = llm.complete(ChatRequest(prompt=prompt, tag=f"{fn.id}:query"))
    try:
        return parse_query_response(response.text)
    except QueryParseError:
        return [RetrievalQuery(text=FALLBACK_QUERY_TEXT, kind="fallback")]


def assemble_knowledge(
    results_per_query: list[list[tuple[KnowledgeEntry, float]]],
    max_entries: int = DEFAULT_MAX_ENTRIES,
    example_char_budget: int = DEFAULT_EXAMPLE_CHAR_BUDGET,
) -> KnowledgeContext:
    """Merge per-query rankings in (query order, rank order), dedupe, cap.

    The first occurrence of a CWE id wins; the rendered passage carries each
    entry's name, description, and example, with the example cut to the
    configured character budget.
    """
    chosen: list[KnowledgeEntry] = []
    seen: set[str] = set()
    for ranking in results_per_query:
        for entry, _score in ranking:
            if entry.cwe_id in seen:
                continue
            seen.add(entry.cwe_id)
            chosen.append(entry)
    chosen = chosen[:max_entries]
    return KnowledgeContext(entries=chosen, text=render_knowledge(chosen, example_char_budget))


def render_knowledge(
    entries: list[KnowledgeEntry], example_char_budget: int = DEFAULT_EXAMPLE_CHAR_BUDGET
) -> str:
    blocks: list[str] = []
    for entry in entries:
        lines = [f"[{entry.cwe_id}] {entry.name}".rstrip(), entry.description]
        if entry.example:
            example = entry.example
            if example_char_budget and len(example) > example_char_budget:
                example = example[:example_char_budget] + " [...]"
            lines.append("Example:")
            lines.append(example)
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks)
