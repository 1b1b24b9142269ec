"""NumPy implementation of the packed-measure kernels.

Keys are int64 rows.  Layouts by group kind:

* 0, free abelian: ``[x_1, ..., x_d]``
* 1, Heisenberg: ``[a, b, c]``
* 2, lamplighter: ``[t, n_lamps, lamp_1, ..., lamp_W]``, lamps ascending,
  padded with zeros

Callers guarantee every coordinate sum fits in int64.
"""
import numpy as np

BACKEND = "numpy"

_SENT = np.iinfo(np.int64).max


def products(kind, L, R):
    """All products L[i] * R[j] in i-major order."""
    L = np.ascontiguousarray(L, dtype=np.int64)
    R = np.ascontiguousarray(R, dtype=np.int64)
    n, r = L.shape[0], R.shape[0]
    if kind == 0:
        return (L[:, None, :] + R[None, :, :]).reshape(n * r, L.shape[1])
    if kind == 1:
        out = (L[:, None, :] + R[None, :, :]).reshape(n * r, 3)
        out[:, 2] += (L[:, None, 0] * R[None, :, 1]).ravel()
        return out
    if kind == 2:
        return _lamp_products(L, R)
    raise ValueError(f"unknown kind {kind}")


def _lamp_products(L, R):
    n, r = L.shape[0], R.shape[0]
    wl, wr = L.shape[1] - 2, R.shape[1] - 2
    w = wl + wr
    t = (L[:, 0][:, None] + R[:, 0][None, :]).ravel()
    if w == 0:
        out = np.zeros((n * r, 2), dtype=np.int64)
        out[:, 0] = t
        return out
    left = L[:, 2:].copy()
    left[np.arange(wl)[None, :] >= L[:, 1][:, None]] = _SENT
    right = R[:, 2:]
    right_valid = np.arange(wr)[None, :] < R[:, 1][:, None]
    comb = np.empty((n, r, w), dtype=np.int64)
    comb[:, :, :wl] = left[:, None, :]
    shifted = right[None, :, :] + L[:, 0][:, None, None]
    comb[:, :, wl:] = np.where(right_valid[None, :, :], shifted, _SENT)
    comb = comb.reshape(n * r, w)
    comb.sort(axis=1)
    dup = (comb[:, 1:] == comb[:, :-1]) & (comb[:, 1:] != _SENT)
    kill = np.zeros_like(comb, dtype=bool)
    kill[:, 1:] |= dup
    kill[:, :-1] |= dup
    comb[kill] = _SENT
    comb.sort(axis=1)
    length = np.sum(comb != _SENT, axis=1)
    width = int(length.max()) if length.size else 0
    out = np.zeros((n * r, 2 + width), dtype=np.int64)
    out[:, 0] = t
    out[:, 1] = length
    body = comb[:, :width]
    out[:, 2:] = np.where(body == _SENT, 0, body)
    return out


def merge(keys, mass):
    """Combine equal rows; masses summed in input order; rows sorted lexicographically."""
    keys = np.ascontiguousarray(keys, dtype=np.int64)
    mass = np.ascontiguousarray(mass, dtype=np.float64)
    if keys.shape[0] == 0:
        return keys, mass
    order = np.lexsort(keys.T[::-1])
    sk = keys[order]
    boundary = np.empty(sk.shape[0], dtype=bool)
    boundary[0] = True
    np.any(sk[1:] != sk[:-1], axis=1, out=boundary[1:])
    gid = np.cumsum(boundary) - 1
    summed = np.bincount(gid, weights=mass[order])
    return sk[boundary], summed
