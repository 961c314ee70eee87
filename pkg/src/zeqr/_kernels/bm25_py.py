"""Pure-Python (numpy) fallback for the BM25 accumulation kernel."""


def bm25_accumulate(doc_indices, tfs, norms, idf, k1, scores):
    """scores[d] += idf * tf * (k1+1) / (tf + norms[d]) for each posting.

    Same contract as the compiled kernel; doc indices are unique within
    one call, so fancy-indexed += is safe.
    """
    n = norms[doc_indices]
    scores[doc_indices] += idf * tfs * (k1 + 1.0) / (tfs + n)
