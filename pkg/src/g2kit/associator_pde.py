"""The associator equation for graphs ``Im H -> H`` and its beta-modified form.

R^7 is identified with Im O through the coordinates
``(i, j, k, e, ie, je, ke)`` on axes 0..6.  A map ``f: U ⊂ Im H -> H`` has
graph frame ``u = i + f^1 e``, ``v = j + f^2 e``, ``w = k + f^3 e``, and the
graph is associative for ``psi0 + beta`` exactly when

    D(f) - σ(f) - 2 β̂_H(f) = 0,

with ``β̂ = 1/2 beta(u, v, w, ·)^♯`` (flat metric).
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import MatrixRankWarning, lsqr, spsolve

from . import octonion as O
from .exterior import Form, hodge_star, Metric
from .poly import Poly

DIM = 7
QUAT_UNITS = np.eye(4)[1:]  # i, j, k


def phi_octonion() -> Form:
    """``g(u × v, w)`` on Im O as a 3-form."""
    T = O.phi_tensor()
    return Form(DIM, 3, {idx: T[idx] for idx in itertools.combinations(range(DIM), 3) if T[idx] != 0.0})


def psi_octonion() -> Form:
    """``g([u, v, w], z)``.  The axis order (i, j, k, e, ie, je, ke) is negatively
    oriented for the octonion 3-form, so this is ``*phi`` for the opposite orientation."""
    return hodge_star(Metric.identity(DIM), -1, phi_octonion())


# grid state ----------------------------------------------------------------------

@dataclass
class GraphState:
    """Quaternion values ``f`` on a uniform ``m^3`` grid over ``[lo, hi]^3``.

    The outer ring of nodes holds Dirichlet data and is never modified.
    """

    f: np.ndarray
    lo: float = -0.5
    hi: float = 0.5

    def __post_init__(self):
        self.f = np.array(self.f, dtype=float)
        m = self.f.shape[0]
        if self.f.shape != (m, m, m, 4):
            raise ValueError("f must have shape (m, m, m, 4)")
        if m < 5:
            raise ValueError("need m >= 5 for interior stencils")

    @property
    def m(self):
        return self.f.shape[0]

    @property
    def h(self):
        return (self.hi - self.lo) / (self.m - 1)

    def coords(self):
        s = np.linspace(self.lo, self.hi, self.m)
        return np.stack(np.meshgrid(s, s, s, indexing="ij"), axis=-1)

    @classmethod
    def from_function(cls, m, fn, lo=-0.5, hi=0.5, interior=None):
        """Sample ``fn(x) -> (..., 4)`` everywhere; optionally overwrite the interior."""
        s = np.linspace(lo, hi, m)
        X = np.stack(np.meshgrid(s, s, s, indexing="ij"), axis=-1)
        f = np.array(fn(X), dtype=float)
        if interior is not None:
            f[1:-1, 1:-1, 1:-1] = interior
        return cls(f, lo, hi)

    def copy(self):
        return GraphState(self.f.copy(), self.lo, self.hi)

    def to_json(self):
        return {"lo": self.lo, "hi": self.hi, "m": self.m, "f": self.f.tolist()}

    @classmethod
    def from_json(cls, obj):
        return cls(np.array(obj["f"], dtype=float), obj.get("lo", -0.5), obj.get("hi", 0.5))


def first_derivatives(state: GraphState) -> np.ndarray:
    """Central differences at interior nodes, shape ``(3, m-2, m-2, m-2, 4)``."""
    f, h = state.f, state.h
    inner = slice(1, -1)
    out = []
    for a in range(3):
        hi = [inner] * 3
        lo = [inner] * 3
        hi[a] = slice(2, None)
        lo[a] = slice(None, -2)
        out.append((f[tuple(hi)] - f[tuple(lo)]) / (2 * h))
    return np.stack(out)


# operators -------------------------------------------------------------------------

def dirac_of_derivatives(F):
    """``D f = -f^1 i - f^2 j - f^3 k`` from derivatives ``F`` of shape (3, ..., 4)."""
    return -sum(O.qmul(F[a], QUAT_UNITS[a]) for a in range(3))


def dirac(state: GraphState) -> np.ndarray:
    return dirac_of_derivatives(first_derivatives(state))


def qcross3(x, y, z):
    """Three-fold cross product restricted to quaternions."""
    yb = O.qconj(y)
    return 0.5 * (O.qmul(x, O.qmul(yb, z)) - O.qmul(z, O.qmul(yb, x)))


def monge_ampere_of_derivatives(F):
    return qcross3(F[0], F[1], F[2])


def monge_ampere(state: GraphState) -> np.ndarray:
    return monge_ampere_of_derivatives(first_derivatives(state))


@dataclass(frozen=True)
class Perturbation:
    """A 4-form ``beta`` on R^7 with polynomial coefficients (octonion coordinates)."""

    beta: Form

    def __post_init__(self):
        if self.beta.dim != DIM or self.beta.degree != 4:
            raise ValueError("beta must be a 4-form on R^7")

    @classmethod
    def zero(cls):
        return cls(Form(DIM, 4))

    @property
    def vanishes_at_origin(self):
        """True when every coefficient has zero constant term (the O(r) condition)."""
        return all(
            (c.constant_term() if isinstance(c, Poly) else c) == 0.0 for c in self.beta.terms.values()
        )

    def coefficients(self, points):
        """``[(index, values at points)]`` for each term."""
        out = []
        for idx, c in self.beta.terms.items():
            val = c(points) if isinstance(c, Poly) else np.full(points.shape[:-1], float(c))
            out.append((idx, np.asarray(val, dtype=float)))
        return out

    def coefficient_derivatives(self, points, axis):
        out = []
        for idx, c in self.beta.terms.items():
            if isinstance(c, Poly):
                out.append((idx, np.asarray(c.deriv(axis)(points), dtype=float)))
        return out

    def magnitude(self, points):
        """Largest coefficient magnitude over ``points``."""
        vals = [np.abs(v).max() for _, v in self.coefficients(points)]
        return float(max(vals, default=0.0))


def contract3(terms, u, v, w):
    """``Σ A_I dx_I(u, v, w, ·)`` as covectors (..., 7) from per-term coefficient arrays."""
    out = np.zeros(np.broadcast_shapes(u.shape, v.shape, w.shape))
    U = np.stack(np.broadcast_arrays(u, v, w), axis=-1)  # (..., 7, 3)
    for idx, A in terms:
        for p, d in enumerate(idx):
            rest = [i for k, i in enumerate(idx) if k != p]
            out[..., d] += (-1) ** (p + 3) * A * np.linalg.det(U[..., rest, :])
    return out


def graph_frame(F):
    """Frame vectors ``(u, v, w)`` in R^7 from derivatives ``F`` (3, ..., 4)."""
    frames = []
    for a in range(3):
        x = np.zeros(F.shape[1:-1] + (DIM,))
        x[..., a] = 1.0
        x[..., 3:] = F[a]
        frames.append(x)
    return frames


def graph_points(state: GraphState) -> np.ndarray:
    X = state.coords()[1:-1, 1:-1, 1:-1]
    return np.concatenate([X, state.f[1:-1, 1:-1, 1:-1]], axis=-1)


def beta_hat(state: GraphState, pert: Perturbation, F=None) -> np.ndarray:
    """``β̂(u, v, w) = 1/2 beta(u, v, w, ·)`` at interior nodes, shape (..., 7)."""
    F = first_derivatives(state) if F is None else F
    u, v, w = graph_frame(F)
    return 0.5 * contract3(pert.coefficients(graph_points(state)), u, v, w)


def beta_hat_H(state: GraphState, pert: Perturbation, F=None) -> np.ndarray:
    return beta_hat(state, pert, F)[..., 3:]


def residual(state: GraphState, pert: Perturbation | None = None) -> np.ndarray:
    """``D(f) - σ(f) - 2 β̂_H(f)`` at interior nodes, shape (m-2, m-2, m-2, 4)."""
    F = first_derivatives(state)
    R = dirac_of_derivatives(F) - monge_ampere_of_derivatives(F)
    if pert is not None and pert.beta.terms:
        R = R - 2.0 * beta_hat_H(state, pert, F)
    return R


def frame_associator(state: GraphState, pert: Perturbation | None = None) -> np.ndarray:
    """``(psi0 + beta)(u, v, w, ·)`` on the discrete graph frames (an independent oracle)."""
    F = first_derivatives(state)
    u, v, w = graph_frame(F)
    psi = psi_octonion()
    terms = [(idx, np.full(u.shape[:-1], c)) for idx, c in psi.terms.items()]
    if pert is not None:
        terms += pert.coefficients(graph_points(state))
    return contract3(terms, u, v, w)


# Jacobian ----------------------------------------------------------------------------

def _pointwise_blocks(state: GraphState, pert: Perturbation | None):
    """Partial derivatives of the node residual.

    Returns ``M`` of shape (3, ..., 4, 4) with ``M[a] = ∂R/∂f^a`` and ``N`` of
    shape (..., 4, 4) with ``N = ∂R/∂f`` (through the coefficients of beta).
    """
    F = first_derivatives(state)
    shape = F.shape[1:-1]
    M = np.zeros((3,) + shape + (4, 4))
    N = np.zeros(shape + (4, 4))
    E4 = np.eye(4)
    for a in range(3):
        for c in range(4):
            e = np.broadcast_to(E4[c], shape + (4,))
            M[a, ..., :, c] = -O.qmul(e, QUAT_UNITS[a])
            args = [F[0], F[1], F[2]]
            args[a] = e
            M[a, ..., :, c] -= qcross3(*args)
    if pert is not None and pert.beta.terms:
        pts = graph_points(state)
        coeffs = pert.coefficients(pts)
        u, v, w = graph_frame(F)
        for a in range(3):
            for c in range(4):
                E = np.zeros(shape + (DIM,))
                E[..., 3 + c] = 1.0
                fr = [u, v, w]
                fr[a] = E
                M[a, ..., :, c] -= contract3(coeffs, *fr)[..., 3:]
        for c in range(4):
            dcoef = pert.coefficient_derivatives(pts, 3 + c)
            if dcoef:
                N[..., :, c] -= contract3(dcoef, u, v, w)[..., 3:]
    return M, N


def jacobian(state: GraphState, pert: Perturbation | None = None) -> sp.csr_matrix:
    """Sparse derivative of :func:`residual` with respect to the interior values.

    Unknowns and equations are ordered by interior node (C order) then
    quaternion component; assembly order is fixed so the matrix is
    reproducible bit for bit.
    """
    M, N = _pointwise_blocks(state, pert)
    n = state.m - 2
    h = state.h
    node = np.arange(n ** 3).reshape(n, n, n)
    rows, cols, vals = [], [], []
    comp_r, comp_c = np.meshgrid(np.arange(4), np.arange(4), indexing="ij")

    def add(block, src_nodes, dst_nodes):
        # block (..., 4, 4) for equation node src and unknown node dst
        r = (src_nodes[..., None, None] * 4 + comp_r).ravel()
        c = (dst_nodes[..., None, None] * 4 + comp_c).ravel()
        rows.append(r)
        cols.append(c)
        vals.append(block.ravel())

    add(N, node, node)
    for a in range(3):
        for step, sign in ((1, 1.0), (-1, -1.0)):
            src = [slice(None)] * 3
            dst = [slice(None)] * 3
            if step == 1:
                src[a], dst[a] = slice(None, -1), slice(1, None)
            else:
                src[a], dst[a] = slice(1, None), slice(None, -1)
            add(sign * M[a][tuple(src)] / (2 * h), node[tuple(src)], node[tuple(dst)])
    J = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(4 * n ** 3, 4 * n ** 3)
    )
    return J.tocsr()


# Newton ------------------------------------------------------------------------------

@dataclass
class NewtonResult:
    state: GraphState
    converged: bool
    trace: list = field(default_factory=list)  # (iteration, residual_inf, damping)
    message: str = ""

    def to_json(self):
        return {
            "converged": self.converged,
            "message": self.message,
            "iterations": len(self.trace) - 1 if self.trace else 0,
            "trace": [{"iter": i, "residual_inf": r, "damping": d} for i, r, d in self.trace],
        }


MIN_STEP = 2.0 ** -20


def _newton_step(J, r):
    """Solve ``J δ = -r``; fall back to the minimum-norm least-squares step when
    the factorization reports a singular matrix (central differences leave a
    checkerboard kernel when the interior count per axis is odd)."""
    with warnings.catch_warnings():
        warnings.simplefilter("error", MatrixRankWarning)
        try:
            delta = spsolve(J.tocsc(), -r)
            if np.all(np.isfinite(delta)):
                return delta
        except (MatrixRankWarning, RuntimeError):
            pass
    delta = lsqr(J, -r, atol=1e-15, btol=1e-15, iter_lim=20 * J.shape[0])[0]
    return delta if np.all(np.isfinite(delta)) else None


def newton_solve(
    f0: GraphState,
    pert: Perturbation | None = None,
    tol: float = 1e-10,
    max_iter: int = 30,
    damping: float = 0.5,
) -> NewtonResult:
    """Damped Newton on the interior values with backtracking on ``||R||_2``."""
    state = f0.copy()
    R = residual(state, pert)
    rinf = float(np.abs(R).max())
    trace = [(0, rinf, 1.0)]
    if rinf <= tol:
        return NewtonResult(state, True, trace, "initial state within tolerance")
    n = state.m - 2
    for it in range(1, max_iter + 1):
        delta = _newton_step(jacobian(state, pert), R.ravel())
        if delta is None:
            return NewtonResult(state, False, trace, "singular Jacobian")
        delta = delta.reshape(n, n, n, 4)
        r2 = float(np.linalg.norm(R))
        t = 1.0
        while True:
            trial = state.copy()
            trial.f[1:-1, 1:-1, 1:-1] += t * delta
            Rt = residual(trial, pert)
            if np.linalg.norm(Rt) < r2:
                break
            t *= damping
            if t < MIN_STEP:
                return NewtonResult(state, False, trace, "line search failed to reduce the residual")
        state, R = trial, Rt
        rinf = float(np.abs(R).max())
        trace.append((it, rinf, t))
        if rinf <= tol:
            return NewtonResult(state, True, trace, "converged")
    return NewtonResult(state, False, trace, f"no convergence after {max_iter} iterations")


# linearized operator --------------------------------------------------------------------

def apply_linearized(state: GraphState, pert: Perturbation | None, delta: np.ndarray) -> np.ndarray:
    """``-D(J_f δ)``, where ``J_f`` is the residual's linearization; ``δ`` vanishes on the boundary.

    Defined on nodes two steps from the boundary; at ``f = 0``, ``β = 0``
    this is the Laplacian with the wide (2h) stencil.
    """
    m = state.m
    full = np.zeros((m, m, m, 4))
    full[1:-1, 1:-1, 1:-1] = delta
    Jd = (jacobian(state, pert) @ delta.ravel()).reshape(m - 2, m - 2, m - 2, 4)
    inner = GraphState(np.pad(Jd, ((1, 1), (1, 1), (1, 1), (0, 0))), state.lo, state.hi)
    return -dirac(inner)[1:-1, 1:-1, 1:-1]


def principal_symbol(M_blocks: np.ndarray, xi) -> np.ndarray:
    """``S(ξ) = Σ ξ_a ξ_b R_{e_b} M_a`` for per-node blocks ``M[a]`` (4x4)."""
    xi = np.asarray(xi, dtype=float)
    S = 0.0
    for b in range(3):
        Rb = np.stack([O.qmul(np.eye(4)[c], QUAT_UNITS[b]) for c in range(4)], axis=-1)
        for a in range(3):
            S = S + xi[a] * xi[b] * (Rb @ M_blocks[a])
    return S


@dataclass(frozen=True)
class SymbolSweep:
    max_distance: float  # max ||S(ξ) - |ξ|^2 I|| over nodes and samples
    min_sym_eig: float
    max_df: float

    def to_json(self):
        return {"max_distance": self.max_distance, "min_sym_eig": self.min_sym_eig, "max_df": self.max_df}


def linearized_L(state: GraphState, pert: Perturbation | None = None, samples: int = 16, seed: int = 0):
    """Operator ``-D ∘ J_f`` and a principal-symbol report over random unit covectors."""
    M, _ = _pointwise_blocks(state, pert)
    rng = np.random.default_rng(seed)
    xis = rng.standard_normal((samples, 3))
    xis /= np.linalg.norm(xis, axis=1, keepdims=True)
    Mb = np.moveaxis(M.reshape(3, -1, 4, 4), 0, 0)
    dist, eig = 0.0, np.inf
    for xi in xis:
        S = principal_symbol(Mb, xi)
        dist = max(dist, float(np.linalg.norm(S - np.eye(4), ord=2, axis=(-2, -1)).max()))
        sym = 0.5 * (S + np.swapaxes(S, -1, -2))
        eig = min(eig, float(np.linalg.eigvalsh(sym).min()))
    F = first_derivatives(state)
    report = SymbolSweep(dist, eig, float(np.abs(F).max()))
    return (lambda delta: apply_linearized(state, pert, delta)), report


# fixtures ------------------------------------------------------------------------------

def associative_linear_map(rng, scale=0.3) -> np.ndarray:
    """A 4x3 matrix ``A`` whose graph ``{(x, A x)}`` is an associative 3-plane."""
    for _ in range(100):
        a1, a2 = scale * rng.standard_normal((2, 4))
        u = np.concatenate([[1.0, 0.0, 0.0], a1])
        v = np.concatenate([[0.0, 1.0, 0.0], a2])
        w = O.cross2(O.from_imag(u), O.from_imag(v))[1:]
        frame = np.stack([u, v, w], axis=1)  # 7 x 3
        T = frame[:3]
        if abs(np.linalg.det(T)) > 1e-3:
            return frame[3:] @ np.linalg.inv(T)
    raise RuntimeError("could not draw a graphical associative plane")


def holomorphic_curve_map(eps=0.2):
    """Exact solution ``R i × {(εz³, εz²)}``; ``z = x_j + i x_k``.

    Quaternion components are ``(e, ie, je, ke) = (Re εz³, Im εz³, Re εz², -Im εz²)``.
    """

    def fn(X):
        z = X[..., 1] + 1j * X[..., 2]
        F = eps * z ** 3
        G = eps * z ** 2
        return np.stack([F.real, F.imag, G.real, -G.imag], axis=-1)

    return fn


def closed_perturbation(scale=0.01) -> Perturbation:
    """``scale (x_0 dx_{0123} + x_3 dx_{0134})``: closed and vanishing at the origin."""
    x0 = Poly.var(DIM, 0)
    x3 = Poly.var(DIM, 3)
    return Perturbation(Form(DIM, 4, {(0, 1, 2, 3): scale * x0, (0, 1, 3, 4): scale * x3}))
