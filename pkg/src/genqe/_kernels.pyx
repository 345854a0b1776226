# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled scoring kernels: fused postings-accumulation loops.

Contracts mirror genqe._kernels_py; see that module for the formulas.
"""

from libc.math cimport log1p

NAME = "cython"


def bm25plus_accumulate(
    double[::1] acc,
    const int[::1] ordinals,
    const int[::1] tfs,
    const int[::1] doc_lengths,
    double wq,
    double idf,
    double k1,
    double b,
    double delta,
    double avdl,
):
    cdef Py_ssize_t i, n = ordinals.shape[0]
    cdef int d
    cdef double tf, denom, wd
    cdef double k1b = k1 * (1.0 - b)
    cdef double slope = k1 * b / avdl
    for i in range(n):
        d = ordinals[i]
        tf = tfs[i]
        denom = k1b + slope * doc_lengths[d] + tf
        wd = ((k1 + 1.0) * tf / denom + delta) * idf
        acc[d] += wq * wd


def lm_dirichlet_accumulate(
    double[::1] acc,
    const int[::1] ordinals,
    const int[::1] tfs,
    double wq,
    double mu,
    double p_tc,
):
    cdef Py_ssize_t i, n = ordinals.shape[0]
    cdef double inv = 1.0 / (mu * p_tc)
    for i in range(n):
        acc[ordinals[i]] += wq * log1p(tfs[i] * inv)
