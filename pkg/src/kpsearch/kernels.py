"""Hot scoring loops: term-at-a-time posting accumulation.

Each kernel fuses the gather (document lengths), the per-posting score
contribution and the scatter-add into one pass. The numba-compiled versions
are used by default; set KPSEARCH_PURE_NUMPY=1 (or call use_backend) to
select the pure-numpy fallback. benchmarks/bench_scoring.py compares both.

Within one backend results are bit-reproducible. Across backends BM25 is
exact while QL may drift by an ulp in log1p, so cross-backend comparisons
should allow ~1e-12 relative tolerance.
"""

from __future__ import annotations

import os

import numpy as np

try:
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a hard dep, but stay usable
    HAS_NUMBA = False


def _bm25_term_numpy(scores, matched, ords, tfs, doc_lengths, weight, k1, b, avg_doc_len):
    norm = tfs + k1 * (1.0 - b + b * (doc_lengths[ords] / avg_doc_len))
    scores[ords] += weight * tfs * (k1 + 1.0) / norm
    matched[ords] = True


def _ql_term_numpy(scores, matched, ords, tfs, weight, mu_pc):
    scores[ords] += weight * np.log1p(tfs / mu_pc)
    matched[ords] = True


if HAS_NUMBA:

    @njit(cache=True, nogil=True)
    def _bm25_term_numba(scores, matched, ords, tfs, doc_lengths, weight, k1, b, avg_doc_len):
        for i in range(ords.shape[0]):
            o = ords[i]
            tf = tfs[i]
            norm = tf + k1 * (1.0 - b + b * (doc_lengths[o] / avg_doc_len))
            scores[o] += weight * tf * (k1 + 1.0) / norm
            matched[o] = True

    @njit(cache=True, nogil=True)
    def _ql_term_numba(scores, matched, ords, tfs, weight, mu_pc):
        for i in range(ords.shape[0]):
            o = ords[i]
            scores[o] += weight * np.log1p(tfs[i] / mu_pc)
            matched[o] = True


_BACKENDS = {
    "numpy": (_bm25_term_numpy, _ql_term_numpy),
}
if HAS_NUMBA:
    _BACKENDS["numba"] = (_bm25_term_numba, _ql_term_numba)

_DEFAULT = (
    "numpy"
    if os.environ.get("KPSEARCH_PURE_NUMPY", "") not in ("", "0") or not HAS_NUMBA
    else "numba"
)
_active = _DEFAULT


def use_backend(name: str) -> None:
    """Select 'numba' or 'numpy' for subsequent scoring calls."""
    if name not in _BACKENDS:
        raise ValueError(f"unknown kernel backend {name!r} (have {sorted(_BACKENDS)})")
    global _active
    _active = name


def active_backend() -> str:
    return _active


def bm25_accumulate(scores, matched, ords, tfs, doc_lengths, weight, k1, b, avg_doc_len):
    """scores[ords] += weight * BM25 term score; marks matched docs."""
    _BACKENDS[_active][0](scores, matched, ords, tfs, doc_lengths, weight, k1, b, avg_doc_len)


def ql_accumulate(scores, matched, ords, tfs, weight, mu_pc):
    """scores[ords] += weight * ln(1 + tf / (mu * p_c)); marks matched docs."""
    _BACKENDS[_active][1](scores, matched, ords, tfs, weight, mu_pc)
