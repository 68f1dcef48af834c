# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled global alignment kernel; see _alignment_py for the contract."""

from libc.stdlib cimport free, malloc

BACKEND_NAME = "cython"


def align_stats(const unsigned char[::1] a, const unsigned char[::1] b):
    """Needleman-Wunsch (match=+1, mismatch=0, gap=-1) returning
    (score, matches, length) of the diagonal>up>left traceback path."""
    cdef Py_ssize_t m = a.shape[0]
    cdef Py_ssize_t n = b.shape[0]
    if m == 0 or n == 0:
        raise ValueError("sequences must be non-empty")
    cdef int *buf = <int *> malloc(6 * (n + 1) * sizeof(int))
    if buf == NULL:
        raise MemoryError()
    cdef int *h_prev = buf
    cdef int *m_prev = buf + (n + 1)
    cdef int *l_prev = buf + 2 * (n + 1)
    cdef int *h_cur = buf + 3 * (n + 1)
    cdef int *m_cur = buf + 4 * (n + 1)
    cdef int *l_cur = buf + 5 * (n + 1)
    cdef Py_ssize_t i, j
    cdef int match, best, mm, ll, cand
    cdef int *tmp
    cdef unsigned char ca
    cdef int score, matches, length
    with nogil:
        for j in range(n + 1):
            h_prev[j] = -<int> j
            m_prev[j] = 0
            l_prev[j] = <int> j
        for i in range(1, m + 1):
            ca = a[i - 1]
            h_cur[0] = -<int> i
            m_cur[0] = 0
            l_cur[0] = <int> i
            for j in range(1, n + 1):
                match = 1 if ca == b[j - 1] else 0
                best = h_prev[j - 1] + match
                mm = m_prev[j - 1] + match
                ll = l_prev[j - 1] + 1
                cand = h_prev[j] - 1
                if cand > best:
                    best = cand
                    mm = m_prev[j]
                    ll = l_prev[j] + 1
                cand = h_cur[j - 1] - 1
                if cand > best:
                    best = cand
                    mm = m_cur[j - 1]
                    ll = l_cur[j - 1] + 1
                h_cur[j] = best
                m_cur[j] = mm
                l_cur[j] = ll
            tmp = h_prev; h_prev = h_cur; h_cur = tmp
            tmp = m_prev; m_prev = m_cur; m_cur = tmp
            tmp = l_prev; l_prev = l_cur; l_cur = tmp
        score = h_prev[n]
        matches = m_prev[n]
        length = l_prev[n]
    free(buf)
    return score, matches, length
