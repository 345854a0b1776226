"""Pure-Python (numpy) scoring kernels, the fallback when the compiled
extension is unavailable. Same contracts as ``genqe._kernels``.

Ordinals within one postings list are unique, so fancy-index addition
is safe (no duplicate-index collisions).
"""

import numpy as np

NAME = "python"


def bm25plus_accumulate(acc, ordinals, tfs, doc_lengths, wq, idf, k1, b, delta, avdl):
    """acc[d] += wq * ((k1+1)tf / (k1(1-b+b*dl/avdl)+tf) + delta) * idf"""
    tf = tfs.astype(np.float64)
    dl = doc_lengths[ordinals].astype(np.float64)
    denom = k1 * (1.0 - b + b * (dl / avdl)) + tf
    wd = ((k1 + 1.0) * tf / denom + delta) * idf
    acc[ordinals] += wq * wd


def lm_dirichlet_accumulate(acc, ordinals, tfs, wq, mu, p_tc):
    """acc[d] += wq * log(1 + tf / (mu * p(t|C)))

    This is the matched-term correction over the per-document smoothing
    floor; the floor itself is added once per candidate document later.
    """
    tf = tfs.astype(np.float64)
    acc[ordinals] += wq * np.log1p(tf / (mu * p_tc))
