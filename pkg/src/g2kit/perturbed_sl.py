"""Perturbed special-Lagrangian equations on flat patches, their symbols, and
the graph-volume identities.

Geometry lives in a flat model: ``M = R^6`` carries constant-coefficient
forms ``(rho, tau)``, a 3-plane ``P`` is given by a frame, and the
cylinder ``R x M`` puts ``t`` on axis 0.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from . import g2 as g2mod
from .exterior import Form, Metric, hodge_star, interior, wedge
from .models import lift, psi_from_pair

DIM = 6
PAIRS = ((0, 1), (0, 2), (1, 2))  # tangent slots (v_i, v_j) of a 2-form on P


class PreconditionError(ValueError):
    """An input violates an operation's precondition."""

    def __init__(self, message, defect=None):
        super().__init__(message)
        self.defect = defect


# patches and multipliers -------------------------------------------------------

@dataclass(frozen=True)
class FlatPatch:
    """A flat 3-plane in R^6 sampled on an ``m^3`` grid.

    Nodes sit at ``base + L * sum_i s_i v_i``: ``s_i = k/m`` on a periodic
    patch (a 3-torus) and ``s_i = k/(m-1)`` otherwise.
    """

    frame: np.ndarray
    base: np.ndarray
    m: int
    periodic: bool = False
    length: float = 1.0
    metric: np.ndarray | None = None

    def __post_init__(self):
        F = np.array(self.frame, dtype=float)
        g = np.eye(DIM) if self.metric is None else np.array(self.metric, dtype=float)
        if F.shape != (3, DIM):
            raise ValueError("frame must be three vectors in R^6")
        if self.m < 3:
            raise ValueError("need m >= 3")
        if not np.allclose(F @ g @ F.T, np.eye(3), atol=1e-12, rtol=0):
            raise ValueError("frame must be orthonormal for the patch metric")
        object.__setattr__(self, "frame", F)
        object.__setattr__(self, "metric", g)
        object.__setattr__(self, "base", np.array(self.base, dtype=float))

    @property
    def h(self):
        return self.length / (self.m if self.periodic else self.m - 1)

    def params(self):
        s = np.arange(self.m) * self.h
        return np.stack(np.meshgrid(s, s, s, indexing="ij"), axis=-1)

    def nodes(self):
        return self.base + self.params() @ self.frame

    def normal_basis(self):
        """g-orthonormal basis of the normal space, Gram-Schmidt over coordinate axes."""
        g = self.metric
        basis = list(self.frame)
        normals = []
        for a in range(DIM):
            x = np.eye(DIM)[a]
            for b in basis:
                x = x - (b @ g @ x) * b
            nx = np.sqrt(x @ g @ x)
            if nx > 1e-8:
                x = x / nx
                basis.append(x)
                normals.append(x)
            if len(normals) == 3:
                break
        return np.array(normals)

    @property
    def volume(self):
        return self.length ** 3


@dataclass(frozen=True)
class MultiplierField:
    """Values of the multiplier ``lambda`` on the nodes of a patch."""

    patch: FlatPatch
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (self.patch.m,) * 3:
            raise ValueError("values must have shape (m, m, m)")
        if not np.all(np.isfinite(v)):
            raise ValueError("non-finite multiplier values")
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, patch, fn):
        """``fn`` maps patch parameters ``(..., 3)`` in physical units to values."""
        return cls(patch, fn(patch.params()))

    @classmethod
    def constant(cls, patch, c=0.0):
        return cls(patch, np.full((patch.m,) * 3, float(c)))

    def gradient(self):
        """``d lambda(v_i)`` per node, shape ``(m, m, m, 3)``; second order."""
        h = self.patch.h
        v = self.values
        if self.patch.periodic:
            comps = [(np.roll(v, -1, axis=a) - np.roll(v, 1, axis=a)) / (2 * h) for a in range(3)]
        else:
            comps = np.gradient(v, h, edge_order=2)
        return np.stack(comps, axis=-1)


# alpha_N -----------------------------------------------------------------------

@dataclass(frozen=True)
class NormalForm:
    """Conormal-valued form on ``P``: ``components[..., s, b]`` is the value on the
    ``s``-th increasing slot tuple of the tangent frame paired with normal ``b``."""

    degree: int
    components: np.ndarray
    normals: np.ndarray

    def norm(self):
        return float(np.sqrt(np.sum(self.components ** 2, axis=(-2, -1))).max(initial=0.0))


def restrict(alpha: Form, frame) -> np.ndarray:
    """Coefficients of ``ι*alpha`` on the increasing slot tuples of the frame."""
    k = alpha.degree
    if k > 3:
        return np.zeros(0)
    return np.array([alpha(*(frame[i] for i in idx)) for idx in itertools.combinations(range(3), k)])


def alpha_N(alpha: Form, patch: FlatPatch, tol: float = 1e-10) -> NormalForm:
    """``alpha_N(v_1, .., v_{k-1}) = alpha(v_1, .., v_{k-1}, ·)`` paired with the normals."""
    if alpha.dim != DIM:
        raise ValueError("alpha must live on R^6")
    k = alpha.degree
    if not 1 <= k <= 4:
        raise ValueError("need 1 <= degree <= 4")
    F = patch.frame
    pulled = restrict(alpha, F)
    defect = float(np.linalg.norm(pulled)) if pulled.size else 0.0
    if defect > tol:
        raise PreconditionError(f"pullback of the form does not vanish (norm {defect:.3e})", defect)
    N = patch.normal_basis()
    slots = list(itertools.combinations(range(3), k - 1))
    comps = np.array([[alpha(*(F[i] for i in s), n) for n in N] for s in slots])
    return NormalForm(k - 1, comps, N)


# perturbed SL residual -----------------------------------------------------------

@dataclass(frozen=True)
class SLResidual:
    r1: np.ndarray  # ι*rho on (v1, v2, v3) per node
    r2: np.ndarray  # (tau_N + dλ ^ rho_N)(v1, v2, v3) paired with normals, per node
    normals: np.ndarray

    @property
    def r1_max(self):
        return float(np.abs(self.r1).max())

    @property
    def r2_max(self):
        return float(np.linalg.norm(self.r2, axis=-1).max())

    @property
    def max(self):
        return max(self.r1_max, self.r2_max)


def _wedge_dl_rho(dl, rhoN):
    """``(dλ ^ rho_N)(v1, v2, v3)`` from ``dλ(v_i)`` (..., 3) and ``rho_N`` slots (3, nb)."""
    return (
        dl[..., 0, None] * rhoN[2]
        - dl[..., 1, None] * rhoN[1]
        + dl[..., 2, None] * rhoN[0]
    )


def sl_residual(lam: MultiplierField, patch: FlatPatch, rho: Form, tau: Form, strict: bool = True) -> SLResidual:
    """Residuals of ``ι*rho = 0`` and ``tau_N + dλ ^ rho_N = 0`` at every node.

    With ``strict`` a nonzero ``ι*rho`` raises :class:`PreconditionError`;
    otherwise ``rho_N`` is formed from the raw contraction.
    """
    F = patch.frame
    r1 = rho(*F)
    if strict and abs(r1) > 1e-10:
        raise PreconditionError(f"pullback of rho does not vanish ({r1:.3e})", abs(r1))
    N = patch.normal_basis()
    rhoN = np.array([[rho(F[i], F[j], n) for n in N] for i, j in PAIRS])
    tauN = np.array([tau(F[0], F[1], F[2], n) for n in N])
    dl = lam.gradient()
    r2 = tauN + _wedge_dl_rho(dl, rhoN)
    return SLResidual(np.full(dl.shape[:-1], r1), r2, N)


def graph_lift(lam: MultiplierField, patch: FlatPatch) -> np.ndarray:
    """Frames ``u_i = v_i + dλ(v_i) ∂_t`` of the lifted graph in R x M, shape (m, m, m, 3, 7)."""
    dl = lam.gradient()
    lifted = np.broadcast_to(np.concatenate([np.zeros((3, 1)), patch.frame], axis=1), dl.shape + (7,)).copy()
    lifted[..., 0] = dl
    return lifted


def graph_points(lam: MultiplierField, patch: FlatPatch) -> np.ndarray:
    return np.concatenate([lam.values[..., None], patch.nodes()], axis=-1)


def lifted_residual(lam: MultiplierField, patch: FlatPatch, rho: Form, tau: Form) -> np.ndarray:
    """Norm of ``psi(u1, u2, u3, ·)`` per node for ``psi = dt ^ rho + tau``."""
    psi = psi_from_pair(rho, tau)
    U = graph_lift(lam, patch)
    cov = np.einsum("abcd,...a,...b,...c->...d", psi.tensor(), U[..., 0, :], U[..., 1, :], U[..., 2, :])
    return np.linalg.norm(cov, axis=-1)


@dataclass(frozen=True)
class EquivalenceReport:
    sl_max: float
    assoc_max: float
    tol: float
    tol_lifted: float

    @property
    def sl_solution(self):
        return self.sl_max <= self.tol

    @property
    def assoc_solution(self):
        return self.assoc_max <= self.tol_lifted

    @property
    def consistent(self):
        return self.sl_solution == self.assoc_solution

    def to_json(self):
        return {
            "sl_max": self.sl_max,
            "assoc_max": self.assoc_max,
            "sl_solution": self.sl_solution,
            "assoc_solution": self.assoc_solution,
            "pass": self.consistent,
        }


# the lifted covector has |cov|^2 <= (1 + 3|dλ|^2 ...) times the SL residuals; C covers |dλ| <= 1
LIFT_CONSTANT = 4.0


def equivalence_check(lam, patch, rho, tau, tol: float = 1e-10) -> EquivalenceReport:
    sl = sl_residual(lam, patch, rho, tau, strict=False)
    lifted = lifted_residual(lam, patch, rho, tau)
    return EquivalenceReport(sl.max, float(lifted.max()), tol, LIFT_CONSTANT * tol)


# symbols -------------------------------------------------------------------------

def _tangent_covector(alpha3, frame, metric):
    """Covector on R^6 equal to ``alpha`` on the frame and zero on its g-normal space."""
    G = frame @ metric  # rows: g(v_i, ·)
    return alpha3 @ G


@dataclass(frozen=True)
class SymbolReport:
    matrix: np.ndarray
    det: float
    smin: float


def symbol_matrix(rho: Form, tau: Form, dlam, frame, alpha, metric=None, normals=None) -> SymbolReport:
    """4x4 matrix of ``(k, n) -> (α ^ ι*(n⌟rho), (α ^ (n⌟η))_N + k α ^ rho_N)``.

    ``η = tau + ℓ ^ rho`` with ``ℓ`` equal to ``dλ`` on ``P`` and zero on the
    normals.  Columns: ``k``, then the normal basis.  Rows: the coefficient
    on ``v1 v2 v3``, then the pairing with each normal.  ``alpha`` and
    ``dlam`` are given by their values on the frame.
    """
    alpha = np.asarray(alpha, dtype=float)
    if not np.any(alpha):
        raise ValueError("the symbol is defined for nonzero covectors")
    F = np.asarray(frame, dtype=float)
    g = np.eye(DIM) if metric is None else np.asarray(metric, dtype=float)
    if normals is None:
        normals = FlatPatch(F, np.zeros(DIM), 3, metric=g).normal_basis()
    a6 = Form(DIM, 1, dict(((i,), c) for i, c in enumerate(_tangent_covector(alpha, F, g))))
    l6 = Form(DIM, 1, dict(((i,), c) for i, c in enumerate(_tangent_covector(np.asarray(dlam, float), F, g))))
    eta = tau + wedge(l6, rho)
    S = np.zeros((4, 4))
    rhoN = np.array([[rho(F[i], F[j], n) for n in normals] for i, j in PAIRS])
    S[1:, 0] = _wedge_dl_rho(alpha, rhoN)
    for c, n in enumerate(normals, start=1):
        S[0, c] = wedge(a6, interior(n, rho))(*F)
        four = wedge(a6, interior(n, eta))
        S[1:, c] = [four(F[0], F[1], F[2], nb) for nb in normals]
    sv = np.linalg.svd(S, compute_uv=False)
    return SymbolReport(S, float(np.linalg.det(S)), float(sv[-1]))


def symbol_matrix_7d(rho: Form, tau: Form, dlam, frame, alpha, metric=None, normals=None) -> np.ndarray:
    """The same map read off ``σ_ψ(α)(V) = (α ^ (V⌟ψ))(u1, u2, u3, ·)`` in R x M.

    The output covector ``ξ`` is split as ``ξ = a (ℓ - dt) + Σ c_b n^b``;
    row 0 holds ``a = -ξ(∂_t)`` and rows 1..3 hold ``c_b = ξ(n_b)``.
    """
    F = np.asarray(frame, dtype=float)
    g = np.eye(DIM) if metric is None else np.asarray(metric, dtype=float)
    if normals is None:
        normals = FlatPatch(F, np.zeros(DIM), 3, metric=g).normal_basis()
    dlam = np.asarray(dlam, dtype=float)
    psi = psi_from_pair(rho, tau)
    U = np.concatenate([dlam[:, None], F], axis=1)
    a7 = lift(Form(DIM, 1, dict(((i,), c) for i, c in enumerate(_tangent_covector(np.asarray(alpha, float), F, g)))))
    inputs = [np.eye(7)[0]] + [np.concatenate([[0.0], n]) for n in normals]
    S = np.zeros((4, 4))
    for c, V in enumerate(inputs):
        four = wedge(a7, interior(V, psi))
        xi = four.covector(U[0], U[1], U[2])
        S[0, c] = -xi[0]
        S[1:, c] = [xi[1:] @ n for n in normals]
    return S


def dirac_symbol_check(st: g2mod.G2Structure, frame, alpha, n, tol: float = 1e-12):
    """Compare ``((α ^ (n⌟ψ))(e1, e2, e3, ·))^♯`` with ``α^♯ × n`` on an associative frame.

    Returns ``(passed, lhs, rhs)``.
    """
    F = np.asarray(frame, dtype=float)
    g = st.g
    res = g2mod.frame_residuals(F[None], st)[0]
    if res > 1e-9:
        raise PreconditionError("frame is not associative", res)
    alpha = np.asarray(alpha, dtype=float)
    a7 = Form(7, 1, {(i,): c for i, c in enumerate(alpha) if c != 0.0})
    cov = wedge(a7, interior(np.asarray(n, float), st.psi)).covector(*F) if a7.terms else np.zeros(7)
    lhs = np.linalg.solve(g, cov)
    rhs = st.cross(np.linalg.solve(g, alpha), np.asarray(n, float))
    return bool(np.abs(lhs - rhs).max() <= tol * max(1.0, np.abs(rhs).max())), lhs, rhs


# volume identities -------------------------------------------------------------

@dataclass(frozen=True)
class VolumeIdentity:
    wedge_density: np.ndarray
    expected: np.ndarray
    classical_density: np.ndarray

    @property
    def defect(self):
        return float(np.abs(self.wedge_density - self.expected).max())


def volume_identity_check(mu: MultiplierField) -> VolumeIdentity:
    """Expand ``(e^1 + μ_1 dμ) ^ (e^2 + μ_2 dμ) ^ (e^3 + μ_3 dμ)`` per node.

    Here ``e^i`` is the coframe of the orthonormal patch frame and
    ``μ_i = dμ(v_i)``.  The expansion is compared with ``1 + |dμ|^2``; the
    induced-metric density ``sqrt(det(I + dμ ⊗ dμ))`` is reported alongside.
    """
    grad = mu.gradient()
    flat = grad.reshape(-1, 3)
    dens = np.empty(len(flat))
    for k, d in enumerate(flat):
        dmu = Form(3, 1, {(i,): d[i] for i in range(3)})
        out = Form.scalar(3, 1.0)
        for i in range(3):
            out = wedge(out, Form.basis(3, (i,)) + d[i] * dmu)
        dens[k] = out.top_coefficient()
    sq = np.sum(grad ** 2, axis=-1)
    classical = np.sqrt(np.linalg.det(np.eye(3) + grad[..., :, None] * grad[..., None, :]))
    return VolumeIdentity(dens.reshape(sq.shape), 1.0 + sq, classical)


def hodge_gradient_identity(grad) -> float:
    """Defect of ``*dμ ^ dμ = |dμ|^2 vol`` on R^3 for a gradient vector."""
    d = Form(3, 1, {(i,): float(c) for i, c in enumerate(grad)})
    lhs = wedge(hodge_star(Metric.identity(3), 1, d), d).top_coefficient() if d.terms else 0.0
    return abs(lhs - float(np.dot(grad, grad)))


@dataclass(frozen=True)
class VolumeBound:
    lhs: float
    rhs: float
    pairing: float
    exact_term: float
    K: float
    quad_tol: float

    @property
    def passed(self):
        return self.lhs <= self.rhs + self.quad_tol

    @property
    def gap(self):
        return self.rhs - self.lhs

    def to_json(self):
        return {
            "volume_plus_energy": self.lhs,
            "K_times_pairing": self.rhs,
            "pairing": self.pairing,
            "exact_term": self.exact_term,
            "K": self.K,
            "gap": self.gap,
            "pass": self.passed,
        }


def volume_bound_check(rho_p: Form, omega_p: Form, mu: MultiplierField, K: float, quad_tol: float = 1e-10) -> VolumeBound:
    """Compare ``Vol(P) + ||dμ||^2`` with ``K ∫ ι*rho'`` on a periodic patch.

    Also returns ``∫ dμ ^ ι*omega'``, the exact term that integrates to zero.
    """
    patch = mu.patch
    if not patch.periodic:
        raise PreconditionError("the volume bound needs a closed (periodic) patch")
    F = patch.frame
    w = patch.h ** 3  # periodic rectangle rule
    grad = mu.gradient()
    energy = float(np.sum(grad ** 2) * w)
    lhs = patch.volume + energy
    pairing = float(rho_p(*F)) * patch.volume
    om = np.array([omega_p(F[i], F[j]) for i, j in PAIRS])
    # dμ ^ ι*omega' on (v1, v2, v3)
    dens = grad[..., 0] * om[2] - grad[..., 1] * om[1] + grad[..., 2] * om[0]
    exact = float(np.sum(dens) * w)
    return VolumeBound(lhs, K * pairing, pairing, exact, K, quad_tol)


# standard fixtures ----------------------------------------------------------------

def sl_frame():
    """Oriented frame of the y-plane, calibrated by the 3-form of the CY pair."""
    E = np.eye(DIM)
    return np.array([-E[1], E[3], E[5]])


def x_frame():
    E = np.eye(DIM)
    return np.array([E[0], E[2], E[4]])
