# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled packed-measure kernels; same contract as ``_pykernels``."""
import numpy as np
cimport numpy as cnp
from libc.stdint cimport int64_t, uint64_t

cnp.import_array()

BACKEND = "cython"


def products(int kind, L, R):
    cdef cnp.int64_t[:, ::1] Lv = np.ascontiguousarray(L, dtype=np.int64)
    cdef cnp.int64_t[:, ::1] Rv = np.ascontiguousarray(R, dtype=np.int64)
    if kind == 2:
        return _lamp_products(Lv, Rv)
    cdef Py_ssize_t n = Lv.shape[0], r = Rv.shape[0], w = Lv.shape[1]
    cdef Py_ssize_t i, j, k, row
    out = np.empty((n * r, w), dtype=np.int64)
    cdef cnp.int64_t[:, ::1] O = out
    if kind == 0:
        for i in range(n):
            for j in range(r):
                row = i * r + j
                for k in range(w):
                    O[row, k] = Lv[i, k] + Rv[j, k]
        return out
    if kind == 1:
        for i in range(n):
            for j in range(r):
                row = i * r + j
                O[row, 0] = Lv[i, 0] + Rv[j, 0]
                O[row, 1] = Lv[i, 1] + Rv[j, 1]
                O[row, 2] = Lv[i, 2] + Rv[j, 2] + Lv[i, 0] * Rv[j, 1]
        return out
    raise ValueError(f"unknown kind {kind}")


cdef _lamp_products(cnp.int64_t[:, ::1] L, cnp.int64_t[:, ::1] R):
    cdef Py_ssize_t n = L.shape[0], r = R.shape[0]
    cdef Py_ssize_t wl = L.shape[1] - 2, wr = R.shape[1] - 2
    cdef Py_ssize_t w = wl + wr
    out = np.zeros((n * r, 2 + w), dtype=np.int64)
    cdef cnp.int64_t[:, ::1] O = out
    cdef Py_ssize_t i, j, a, b, la, lb, k, row, maxlen = 0
    cdef int64_t shift, x, y
    for i in range(n):
        shift = L[i, 0]
        la = L[i, 1]
        for j in range(r):
            row = i * r + j
            lb = R[j, 1]
            O[row, 0] = shift + R[j, 0]
            a = 0
            b = 0
            k = 0
            # symmetric difference of two ascending lists
            while a < la and b < lb:
                x = L[i, 2 + a]
                y = R[j, 2 + b] + shift
                if x < y:
                    O[row, 2 + k] = x
                    k += 1
                    a += 1
                elif y < x:
                    O[row, 2 + k] = y
                    k += 1
                    b += 1
                else:
                    a += 1
                    b += 1
            while a < la:
                O[row, 2 + k] = L[i, 2 + a]
                k += 1
                a += 1
            while b < lb:
                O[row, 2 + k] = R[j, 2 + b] + shift
                k += 1
                b += 1
            O[row, 1] = k
            if k > maxlen:
                maxlen = k
    if maxlen < w:
        out = out[:, :2 + maxlen].copy()
    return out


cdef inline uint64_t _mix(uint64_t h, uint64_t v) nogil:
    h ^= v + <uint64_t>0x9E3779B97F4A7C15 + (h << 6) + (h >> 2)
    h ^= h >> 33
    h *= <uint64_t>0xFF51AFD7ED558CCD
    h ^= h >> 33
    return h


def merge(keys, mass):
    cdef cnp.int64_t[:, ::1] K = np.ascontiguousarray(keys, dtype=np.int64)
    cdef cnp.float64_t[::1] M = np.ascontiguousarray(mass, dtype=np.float64)
    cdef Py_ssize_t n = K.shape[0], w = K.shape[1]
    if n == 0:
        return np.asarray(K), np.asarray(M)
    hashes = np.empty(n, dtype=np.uint64)
    cdef cnp.uint64_t[::1] H = hashes
    cdef Py_ssize_t i, k, s, e, a, b, nu = 0
    cdef uint64_t h
    for i in range(n):
        h = <uint64_t>w
        for k in range(w):
            h = _mix(h, <uint64_t>K[i, k])
        H[i] = h
    order_arr = np.argsort(hashes, kind="stable")
    cdef cnp.int64_t[::1] order = order_arr.astype(np.int64)
    rep_arr = np.empty(n, dtype=np.int64)       # representative row per group
    sums_arr = np.empty(n, dtype=np.float64)
    owner_arr = np.full(n, -1, dtype=np.int64)  # group index per sorted slot
    cdef cnp.int64_t[::1] rep = rep_arr
    cdef cnp.float64_t[::1] sums = sums_arr
    cdef cnp.int64_t[::1] owner = owner_arr
    cdef bint same
    s = 0
    while s < n:
        e = s + 1
        while e < n and H[order[e]] == H[order[s]]:
            e += 1
        # group equal rows inside the hash run, preserving input order
        for a in range(s, e):
            if owner[a] >= 0:
                continue
            owner[a] = nu
            rep[nu] = order[a]
            sums[nu] = M[order[a]]
            for b in range(a + 1, e):
                if owner[b] >= 0:
                    continue
                same = True
                for k in range(w):
                    if K[order[a], k] != K[order[b], k]:
                        same = False
                        break
                if same:
                    owner[b] = nu
                    sums[nu] += M[order[b]]
            nu += 1
        s = e
    ukeys = np.asarray(K)[rep_arr[:nu]]
    umass = sums_arr[:nu]
    canon = np.lexsort(ukeys.T[::-1])
    return ukeys[canon], umass[canon]
