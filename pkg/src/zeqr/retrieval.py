"""Self-contained BM25 indexing and search, plus the external-retriever
adapter seam and TREC run file I/O.

Scoring uses Robertson/Lucene idf with +1 smoothing,
idf(t) = ln(1 + (N - df + 0.5) / (df + 0.5)), so contributions are never
negative. Ties are broken by doc_id ascending for reproducibility. The
per-posting accumulation runs in the compiled kernel when available (see
zeqr._kernels).
"""

from __future__ import annotations

import json
import math
from collections import Counter
from collections.abc import Mapping
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._kernels import bm25_accumulate
from .datamodel import Config
from .errors import ParseError, ProtocolError, RetrievalError
from .ingest import Document
from .text import DEFAULT_ANALYZER, Analyzer

INDEX_FORMAT_VERSION = 1


class _PostingsView(Mapping):
    """Dict-like view over the packed postings arrays."""

    def __init__(self, index: "InvertedIndex"):
        self._index = index

    def __getitem__(self, term: str) -> list[tuple[int, int]]:
        start, end = self._index._vocab[term]
        docs = self._index._post_docs[start:end]
        tfs = self._index._post_tfs[start:end]
        return [(int(d), int(tf)) for d, tf in zip(docs, tfs)]

    def __iter__(self):
        return iter(self._index._vocab)

    def __len__(self):
        return len(self._index._vocab)


@dataclass
class InvertedIndex:
    """Immutable–after–build inverted index with packed postings.

    Postings for each term are stored as contiguous slices of two parallel
    arrays (doc index, term frequency), sorted by doc index.
    """

    doc_ids: list[str]
    doc_lengths: np.ndarray
    avg_doc_length: float
    analyzer: Analyzer
    _vocab: dict[str, tuple[int, int]]
    _post_docs: np.ndarray
    _post_tfs: np.ndarray
    _doc_id_arr: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self._doc_id_arr = np.asarray(self.doc_ids)

    @property
    def num_docs(self) -> int:
        return len(self.doc_ids)

    @property
    def num_terms(self) -> int:
        return len(self._vocab)

    @property
    def postings(self) -> Mapping:
        return _PostingsView(self)

    def document_frequency(self, term: str) -> int:
        span = self._vocab.get(term)
        return 0 if span is None else span[1] - span[0]


@dataclass(frozen=True)
class RunResult:
    """One query's ranked output."""

    query_id: str
    ranked: tuple[tuple[str, float], ...]
    tag: str = "zeqr"

    def __post_init__(self):
        object.__setattr__(self, "ranked", tuple(tuple(pair) for pair in self.ranked))
        seen: set[str] = set()
        previous = math.inf
        for doc_id, score in self.ranked:
            if doc_id in seen:
                raise ValueError(f"duplicate doc_id {doc_id!r} in ranking "
                                 f"for query {self.query_id!r}")
            seen.add(doc_id)
            if score > previous:
                raise ValueError(f"scores increase at doc {doc_id!r} "
                                 f"for query {self.query_id!r}")
            previous = score


def build_index(collection: list[Document], analyzer: Analyzer = DEFAULT_ANALYZER) -> InvertedIndex:
    """Index a collection. Doc ids must be unique."""
    if not collection:
        raise ValueError("collection is empty")
    seen: set[str] = set()
    for doc in collection:
        if doc.doc_id in seen:
            raise ValueError(f"duplicate doc_id {doc.doc_id!r} in collection")
        seen.add(doc.doc_id)

    doc_ids = [doc.doc_id for doc in collection]
    lengths = np.zeros(len(collection), dtype=np.int32)
    term_postings: dict[str, list[tuple[int, int]]] = {}
    for i, doc in enumerate(collection):
        terms = analyzer.terms(doc.body)
        lengths[i] = len(terms)
        for term, tf in Counter(terms).items():
            term_postings.setdefault(term, []).append((i, tf))

    total = sum(len(p) for p in term_postings.values())
    post_docs = np.empty(total, dtype=np.int32)
    post_tfs = np.empty(total, dtype=np.float64)
    vocab: dict[str, tuple[int, int]] = {}
    cursor = 0
    for term in sorted(term_postings):
        postings = term_postings[term]
        end = cursor + len(postings)
        post_docs[cursor:end] = [d for d, _ in postings]
        post_tfs[cursor:end] = [tf for _, tf in postings]
        vocab[term] = (cursor, end)
        cursor = end

    return InvertedIndex(
        doc_ids=doc_ids,
        doc_lengths=lengths,
        avg_doc_length=float(lengths.sum()) / len(collection),
        analyzer=analyzer,
        _vocab=vocab,
        _post_docs=post_docs,
        _post_tfs=post_tfs,
    )


def robertson_idf(num_docs: int, df: int) -> float:
    return math.log(1.0 + (num_docs - df + 0.5) / (df + 0.5))


def bm25_search(
    index: InvertedIndex,
    query: str,
    k: int,
    config: Config,
    query_id: str | None = None,
    tag: str = "zeqr",
) -> RunResult:
    """Rank the top-k documents for a query.

    Query terms go through the index's analyzer; each occurrence of a term
    contributes once. Only documents containing at least one query term
    are ranked. A query with no indexed terms yields an empty ranking.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if query_id is None:
        query_id = query
    terms = [t for t in index.analyzer.terms(query) if t in index._vocab]
    if not terms:
        return RunResult(query_id=query_id, ranked=(), tag=tag)

    k1 = config.bm25_k1
    b = config.bm25_b
    norms = k1 * (1.0 - b + b * index.doc_lengths / index.avg_doc_length)
    scores = np.zeros(index.num_docs, dtype=np.float64)
    touched: list[np.ndarray] = []
    for term in terms:
        start, end = index._vocab[term]
        idf = robertson_idf(index.num_docs, end - start)
        bm25_accumulate(index._post_docs[start:end], index._post_tfs[start:end],
                        norms, idf, k1, scores)
        touched.append(index._post_docs[start:end])

    candidates = np.unique(np.concatenate(touched))
    order = np.lexsort((index._doc_id_arr[candidates], -scores[candidates]))
    top = candidates[order[:k]]
    ranked = tuple((index.doc_ids[i], float(scores[i])) for i in top)
    return RunResult(query_id=query_id, ranked=ranked, tag=tag)


def external_search(
    endpoint: str,
    query: str,
    k: int,
    query_id: str | None = None,
    tag: str = "external",
    timeout: float = 30.0,
) -> RunResult:
    """Delegate ranking to a retriever behind the /search wire contract.

    POST {endpoint}/search with {"query", "k"}; the response is
    {"hits": [{"doc_id", "score"}, ...]} ranked best-first. The ranking is
    validated against the RunResult invariants before use.
    """
    import requests

    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    try:
        response = requests.post(f"{endpoint.rstrip('/')}/search",
                                 json={"query": query, "k": k}, timeout=timeout)
        response.raise_for_status()
        data = response.json()
    except (requests.ConnectionError, requests.Timeout, requests.HTTPError) as exc:
        raise RetrievalError(f"external retriever at {endpoint} failed: {exc}")
    except ValueError as exc:
        raise ProtocolError(f"non-JSON response from {endpoint}: {exc}")

    hits = data.get("hits") if isinstance(data, dict) else None
    if not isinstance(hits, list):
        raise ProtocolError(f"response from {endpoint} has no 'hits' list")
    if len(hits) > k:
        raise ProtocolError(f"{endpoint} returned {len(hits)} hits for k={k}")
    try:
        ranked = tuple((str(h["doc_id"]), float(h["score"])) for h in hits)
    except (KeyError, TypeError, ValueError) as exc:
        raise ProtocolError(f"malformed hit from {endpoint}: {exc}")
    try:
        return RunResult(query_id=query_id if query_id is not None else query,
                         ranked=ranked, tag=tag)
    except ValueError as exc:
        raise ProtocolError(f"invalid ranking from {endpoint}: {exc}")


def write_run(results: list[RunResult], path: str | Path) -> None:
    """Write TREC 6-column format: query_id Q0 doc_id rank score tag."""
    with Path(path).open("w", encoding="utf-8") as fh:
        for result in results:
            for rank, (doc_id, score) in enumerate(result.ranked, start=1):
                fh.write(f"{result.query_id} Q0 {doc_id} {rank} {score} {result.tag}\n")


def read_run(path: str | Path) -> list[RunResult]:
    """Parse a TREC run file back into RunResults, in file order."""
    path = Path(path)
    per_query: dict[str, list[tuple[str, float]]] = {}
    tags: dict[str, str] = {}
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            fields = line.split()
            if len(fields) != 6:
                raise ParseError(f"expected 6 fields, got {len(fields)}",
                                 path=str(path), line=lineno)
            query_id, _, doc_id, _, score_s, tag = fields
            try:
                score = float(score_s)
            except ValueError:
                raise ParseError(f"bad score {score_s!r}", path=str(path), line=lineno)
            per_query.setdefault(query_id, []).append((doc_id, score))
            tags[query_id] = tag
    results = []
    for query_id, ranked in per_query.items():
        try:
            results.append(RunResult(query_id=query_id, ranked=tuple(ranked),
                                     tag=tags[query_id]))
        except ValueError as exc:
            raise ParseError(str(exc), path=str(path))
    return results


def save_index(index: InvertedIndex, path: str | Path) -> None:
    """Persist to a single .npz artifact with a format-version header."""
    terms = list(index._vocab)
    starts = np.array([index._vocab[t][0] for t in terms], dtype=np.int64)
    ends = np.array([index._vocab[t][1] for t in terms], dtype=np.int64)
    meta = json.dumps({
        "format_version": INDEX_FORMAT_VERSION,
        "avg_doc_length": index.avg_doc_length,
        "analyzer": {"stem": index.analyzer.stem,
                     "remove_stopwords": index.analyzer.remove_stopwords},
    })
    np.savez_compressed(
        Path(path),
        meta=np.array(meta),
        doc_ids=np.asarray(index.doc_ids),
        doc_lengths=index.doc_lengths,
        terms=np.asarray(terms),
        starts=starts,
        ends=ends,
        post_docs=index._post_docs,
        post_tfs=index._post_tfs,
    )


def load_index(path: str | Path) -> InvertedIndex:
    path = Path(path)
    with np.load(path, allow_pickle=False) as data:
        try:
            meta = json.loads(str(data["meta"]))
        except (KeyError, ValueError):
            raise ParseError("missing or invalid index metadata", path=str(path))
        version = meta.get("format_version")
        if version != INDEX_FORMAT_VERSION:
            raise ParseError(
                f"unsupported index format version {version!r} "
                f"(expected {INDEX_FORMAT_VERSION})",
                path=str(path),
            )
        terms = [str(t) for t in data["terms"]]
        starts = data["starts"]
        ends = data["ends"]
        vocab = {t: (int(s), int(e)) for t, s, e in zip(terms, starts, ends)}
        analyzer = Analyzer(stem=bool(meta["analyzer"]["stem"]),
                            remove_stopwords=bool(meta["analyzer"]["remove_stopwords"]))
        return InvertedIndex(
            doc_ids=[str(d) for d in data["doc_ids"]],
            doc_lengths=data["doc_lengths"].astype(np.int32),
            avg_doc_length=float(meta["avg_doc_length"]),
            analyzer=analyzer,
            _vocab=vocab,
            _post_docs=data["post_docs"].astype(np.int32),
            _post_tfs=data["post_tfs"].astype(np.float64),
        )
