# cython: boundscheck=False, wraparound=False, initializedcheck=False, cdivision=True
"""Compiled pool-scoring kernel: quadratic form p^T S_q p per pool query."""

from cython.parallel cimport prange


def pool_scores(const double[:, :, ::1] tensor,
                const Py_ssize_t[::1] pool,
                const double[::1] probs,
                double[::1] out):
    """Fill ``out[i]`` with the posterior-weighted similarity of pool[i].

    Returns the number of tensor entries read (len(pool) * m * m), counted
    as the loops execute.
    """
    cdef Py_ssize_t i, j, k, q
    cdef Py_ssize_t npool = pool.shape[0]
    cdef Py_ssize_t m = probs.shape[0]
    cdef double acc, rowacc
    cdef long long touched = 0
    with nogil:
        for i in range(npool):
            q = pool[i]
            acc = 0.0
            for j in range(m):
                rowacc = 0.0
                for k in range(m):
                    rowacc += probs[k] * tensor[q, j, k]
                acc += probs[j] * rowacc
                touched += m
            out[i] = acc
    return touched
