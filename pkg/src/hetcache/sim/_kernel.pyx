# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled per-trial association scan.

Semantics match ``_kernel_py.load_slots``: a candidate user loads its
requested slot iff no POA caching that file strictly beats the serving
POA's average received power at the user's location.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport fabs, pow

cnp.import_array()


cdef inline double _tor_d2(double ax, double ay, double bx, double by,
                           double box, double half) noexcept nogil:
    cdef double dx = fabs(ax - bx)
    cdef double dy = fabs(ay - by)
    if dx > half:
        dx = box - dx
    if dy > half:
        dy = box - dy
    return dx * dx + dy * dy


def load_slots(const double[:, ::1] pos,
               const double[::1] power,
               const cnp.uint8_t[:, ::1] cache_cols,
               Py_ssize_t serving,
               const double[:, ::1] user_pos,
               const cnp.int64_t[::1] user_slot,
               double box,
               double alpha):
    """Per-slot flags: does any candidate user associate with the serving POA."""
    cdef Py_ssize_t n_poa = pos.shape[0]
    cdef Py_ssize_t n_slots = cache_cols.shape[1]
    cdef Py_ssize_t n_users = user_pos.shape[0]

    loaded_arr = np.zeros(n_slots, dtype=np.uint8)
    members_arr = np.empty((n_slots, n_poa), dtype=np.int64)
    counts_arr = np.zeros(n_slots, dtype=np.int64)
    cdef cnp.uint8_t[::1] loaded = loaded_arr
    cdef cnp.int64_t[:, ::1] members = members_arr
    cdef cnp.int64_t[::1] counts = counts_arr

    cdef double half = box / 2.0
    cdef double neg_exp = -alpha / 2.0
    cdef double x0 = pos[serving, 0]
    cdef double y0 = pos[serving, 1]
    cdef double p0 = power[serving]
    cdef Py_ssize_t p, s, u, i, m
    cdef Py_ssize_t remaining = n_slots
    cdef double ux, uy, w0
    cdef bint dominated

    if n_slots == 0 or n_users == 0:
        return loaded_arr

    with nogil:
        for p in range(n_poa):
            for s in range(n_slots):
                if cache_cols[p, s]:
                    members[s, counts[s]] = p
                    counts[s] += 1

        for u in range(n_users):
            s = user_slot[u]
            if loaded[s]:
                continue
            ux = user_pos[u, 0]
            uy = user_pos[u, 1]
            w0 = p0 * pow(_tor_d2(ux, uy, x0, y0, box, half), neg_exp)
            dominated = False
            for i in range(counts[s]):
                m = members[s, i]
                if m == serving:
                    continue
                if power[m] * pow(_tor_d2(ux, uy, pos[m, 0], pos[m, 1], box, half),
                                  neg_exp) > w0:
                    dominated = True
                    break
            if not dominated:
                loaded[s] = 1
                remaining -= 1
                if remaining == 0:
                    break

    return loaded_arr
