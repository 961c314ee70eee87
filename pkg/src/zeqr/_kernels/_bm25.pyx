# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled BM25 score accumulation over one term's postings."""


def bm25_accumulate(const int[::1] doc_indices, const double[::1] tfs,
                    const double[::1] norms, double idf, double k1,
                    double[::1] scores):
    """scores[d] += idf * tf * (k1+1) / (tf + norms[d]) for each posting.

    norms holds the precomputed per-document length normalization
    k1 * (1 - b + b * len/avgdl). Doc indices are unique within one call.
    """
    cdef Py_ssize_t i, n = doc_indices.shape[0]
    cdef int d
    cdef double tf
    for i in range(n):
        d = doc_indices[i]
        tf = tfs[i]
        scores[d] += idf * tf * (k1 + 1.0) / (tf + norms[d])
