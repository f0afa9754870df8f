"""Octonion arithmetic and the cross products it induces on Im O.

Octonions are numpy arrays whose last axis has length 8, in the ordered basis
``1, i, j, k, e, ie, je, ke``.  Every function broadcasts over leading axes.
Quaternions are the first four components.
"""

from __future__ import annotations

import itertools
from functools import lru_cache

import numpy as np

BASIS_NAMES = ("1", "i", "j", "k", "e", "ie", "je", "ke")
IMAG_TOL = 1e-12


def basis(name: str) -> np.ndarray:
    out = np.zeros(8)
    out[BASIS_NAMES.index(name)] = 1.0
    return out


def from_imag(v) -> np.ndarray:
    """Embed a 7-vector of imaginary components."""
    v = np.asarray(v, dtype=float)
    return np.concatenate([np.zeros(v.shape[:-1] + (1,)), v], axis=-1)


def conj(x):
    x = np.asarray(x, dtype=float)
    return np.concatenate([x[..., :1], -x[..., 1:]], axis=-1)


def re(x):
    return np.asarray(x, dtype=float)[..., 0]


def im(x):
    x = np.asarray(x, dtype=float)
    return np.concatenate([np.zeros_like(x[..., :1]), x[..., 1:]], axis=-1)


def norm(x):
    return np.linalg.norm(x, axis=-1)


def inner(x, y):
    return np.sum(np.asarray(x, dtype=float) * np.asarray(y, dtype=float), axis=-1)


def qmul(p, q):
    """Hamilton product of quaternions (last axis length 4)."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    a1, b1, c1, d1 = np.moveaxis(p, -1, 0)
    a2, b2, c2, d2 = np.moveaxis(q, -1, 0)
    return np.stack(
        [
            a1 * a2 - b1 * b2 - c1 * c2 - d1 * d2,
            a1 * b2 + b1 * a2 + c1 * d2 - d1 * c2,
            a1 * c2 - b1 * d2 + c1 * a2 + d1 * b2,
            a1 * d2 + b1 * c2 - c1 * b2 + d1 * a2,
        ],
        axis=-1,
    )


def qconj(q):
    q = np.asarray(q, dtype=float)
    return np.concatenate([q[..., :1], -q[..., 1:]], axis=-1)


def mul(x, y):
    """Cayley-Dickson product ``(a,b)(c,d) = (ac - conj(d) b, d a + b conj(c))``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    a, b = x[..., :4], x[..., 4:]
    c, d = y[..., :4], y[..., 4:]
    return np.concatenate([qmul(a, c) - qmul(qconj(d), b), qmul(d, a) + qmul(b, qconj(c))], axis=-1)


def cross2(x, y):
    """``x × y = -1/2 (conj(x) y - conj(y) x)``."""
    return -0.5 * (mul(conj(x), y) - mul(conj(y), x))


def cross3(x, y, z):
    """``x × y × z = 1/2 (x (conj(y) z) - z (conj(y) x))``."""
    yb = conj(y)
    return 0.5 * (mul(x, mul(yb, z)) - mul(z, mul(yb, x)))


def _require_imaginary(*xs):
    for x in xs:
        if np.any(np.abs(re(x)) > IMAG_TOL):
            raise ValueError("associator arguments must be imaginary octonions")


def associator(u, v, w):
    """``[u,v,w] = (u × v) × w + <v,w> u - <u,w> v`` for imaginary arguments."""
    _require_imaginary(u, v, w)
    u, v, w = (np.asarray(t, dtype=float) for t in (u, v, w))
    return cross2(cross2(u, v), w) + inner(v, w)[..., None] * u - inner(u, w)[..., None] * v


def raw_associator(x, y, z):
    """``(x y) z - x (y z)``; twice :func:`associator` on imaginary arguments."""
    return mul(mul(x, y), z) - mul(x, mul(y, z))


def metric(u, v):
    """``g(u, v) = -Re(u v)``; equals the Euclidean product on Im O."""
    return -re(mul(u, v))


def phi_tensor() -> np.ndarray:
    """Dense 3-tensor ``g(u × v, w)`` on Im O in the coordinates (i, j, k, e, ie, je, ke)."""
    E = np.eye(7)
    U = from_imag(E)
    C = cross2(U[:, None, :], U[None, :, :])[..., 1:]  # (7, 7, 7)
    return C.copy()


@lru_cache(maxsize=None)
def _identification():
    from .models import phi0

    target = phi0().tensor()
    T = phi_tensor()
    perms = np.array(list(itertools.permutations(range(7))))
    signs = np.array(list(itertools.product((1.0, -1.0), repeat=7)))
    # S maps standard axis a to octonion axis perm[a] with sign s[a]; the
    # pulled-back tensor is s_a s_b s_c T[perm a, perm b, perm c].
    idx = np.array(sorted(i for i in itertools.combinations(range(7), 3) if target[i] != 0.0))
    tvals = target[tuple(idx.T)]
    for p in perms:
        base = T[p[idx[:, 0]], p[idx[:, 1]], p[idx[:, 2]]]
        if np.count_nonzero(base) != len(idx):
            continue
        prod = signs[:, idx[:, 0]] * signs[:, idx[:, 1]] * signs[:, idx[:, 2]]
        ok = np.all(prod * base == tvals, axis=1)
        if ok.any():
            s = signs[np.argmax(ok)]
            S = np.zeros((7, 7))
            S[p, np.arange(7)] = s
            full = np.einsum("ai,bj,ck,abc->ijk", S, S, S, T)
            if np.array_equal(full, target):
                return S
    raise RuntimeError("no signed permutation identifies the octonion 3-form with phi0")


def identification() -> np.ndarray:
    """Signed permutation ``S`` (7x7) with ``phi0(x, y, z) = g(Sx × Sy, Sz)``.

    ``S`` sends standard coordinates of R^7 to imaginary-octonion components.
    Found once by exhaustive search and cached.
    """
    return _identification().copy()
