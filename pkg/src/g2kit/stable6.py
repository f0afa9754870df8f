"""Stable 2-, 3- and 4-forms on R^6: classification, volumes and Hitchin duals."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .exterior import Form, wedge, interior

DIM = 6
DEGENERACY_TOL = 1e-10
_VOL = tuple(range(DIM))


class Kind(str, Enum):
    STABLE2 = "Stable2"
    POSITIVE3 = "Positive3"
    NEGATIVE3 = "Negative3"
    STABLE4 = "Stable4"
    DEGENERATE = "Degenerate"


@dataclass(frozen=True)
class Classification6:
    kind: Kind
    volume_coeff: float
    witness: object = None
    invariant: float = 0.0  # tr(K^2) for 3-forms, top coefficient / Pfaffian otherwise

    @property
    def stable(self):
        return self.kind is not Kind.DEGENERATE


class NotPositiveError(ValueError):
    """A positive 3-form was required."""


class NoDualError(ValueError):
    """The form is degenerate, or stable but without a real dual of the requested type."""


def _check(form, degree):
    if form.dim != DIM or form.degree != degree:
        raise ValueError(f"expected a {degree}-form on R^6, got degree {form.degree} on R^{form.dim}")
    if not form.is_constant():
        raise ValueError("freeze polynomial coefficients with .at(point) first")


def _coeffs(form):
    return np.array(list(form.terms.values()), dtype=float)


def _form_scale(form):
    c = _coeffs(form)
    return float(np.linalg.norm(c)) if c.size else 0.0


def two_form_matrix(w: Form) -> np.ndarray:
    """Antisymmetric matrix ``W_ij = w(e_i, e_j)``."""
    return w.tensor()


def matrix_two_form(M) -> Form:
    M = np.asarray(M, dtype=float)
    n = M.shape[0]
    return Form(n, 2, {(i, j): M[i, j] for i, j in itertools.combinations(range(n), 2) if M[i, j] != 0.0})


# 2-forms -------------------------------------------------------------------

def classify_2form(w: Form, tol: float = DEGENERACY_TOL) -> Classification6:
    _check(w, 2)
    top = wedge(wedge(w, w), w).top_coefficient()
    vol = top / 6.0
    if abs(top) <= tol * max(_form_scale(w), 1e-300) ** 3 or w.is_zero():
        return Classification6(Kind.DEGENERATE, 0.0, _kernel_witness(two_form_matrix(w)), top)
    return Classification6(Kind.STABLE2, float(abs(vol)), None, top)


def _kernel_witness(M):
    """A unit vector in (or nearest to) the kernel of ``M``; prefers coordinate axes."""
    n = M.shape[0]
    scale = max(np.abs(M).max(), 1.0)
    for a in range(n):
        if np.all(np.abs(M[:, a]) <= 1e-12 * scale):
            e = np.zeros(n)
            e[a] = 1.0
            return e
    _, _, vt = np.linalg.svd(M)
    v = vt[-1]
    return v * np.sign(v[np.argmax(np.abs(v))])


# 3-forms -------------------------------------------------------------------

def five_form_vector(g: Form) -> np.ndarray:
    """Vector ``w`` with ``w ⌟ dx_{0..5} = g`` for a 5-form ``g`` on R^6."""
    w = np.zeros(DIM)
    for i in range(DIM):
        comp = tuple(a for a in range(DIM) if a != i)
        w[i] = (-1) ** i * g.terms.get(comp, 0.0)
    return w


def k_map(rho: Form) -> np.ndarray:
    """Matrix of ``v -> (v ⌟ rho) ^ rho`` read through ``Λ^5 ≅ R^6 ⊗ Λ^6``."""
    _check(rho, 3)
    A = np.zeros((DIM, DIM))
    for v in range(DIM):
        e = np.zeros(DIM)
        e[v] = 1.0
        A[:, v] = five_form_vector(wedge(interior(e, rho), rho))
    return A


def _trace_k2(rho):
    A = k_map(rho)
    return A, float(np.trace(A @ A))


def classify_3form(rho: Form, tol: float = DEGENERACY_TOL) -> Classification6:
    A, tr = _trace_k2(rho)
    if abs(tr) <= tol * _form_scale(rho) ** 4 or rho.is_zero():
        return Classification6(Kind.DEGENERATE, 0.0, None, tr)
    if tr < 0:
        return Classification6(Kind.POSITIVE3, float(VOLUME_CALIBRATION * np.sqrt(-tr / 6.0)), None, tr)
    return Classification6(Kind.NEGATIVE3, float(VOLUME_CALIBRATION * np.sqrt(tr / 6.0)), None, tr)


def almost_complex(rho: Form) -> np.ndarray:
    """``J = K / sqrt(-tr(K^2)/6)``, defined for positive 3-forms."""
    A, tr = _trace_k2(rho)
    if not (tr < 0 and abs(tr) > DEGENERACY_TOL * _form_scale(rho) ** 4):
        raise NotPositiveError(f"3-form is not positive (tr K^2 = {tr:.3e})")
    return A / np.sqrt(-tr / 6.0)


def apply_first_slot(rho: Form, M) -> Form:
    """The 3-form ``(u, v, w) -> rho(M u, v, w)`` (not alternating in general;
    returned as its alternating part, which is exact when the result is a 3-form)."""
    T = rho.tensor()
    S = np.einsum("ai,ajk->ijk", np.asarray(M, dtype=float), T)
    return Form(
        rho.dim,
        3,
        {idx: S[idx] for idx in itertools.combinations(range(rho.dim), 3) if S[idx] != 0.0},
    )


def hitchin_dual_3form(rho: Form) -> Form:
    """``rho_hat(u, v, w) = rho(J u, v, w)``."""
    J = almost_complex(rho)
    return _clean(apply_first_slot(rho, J))


def _clean(form, tol=1e-14):
    scale = max((abs(c) for c in form.terms.values()), default=0.0)
    return Form(form.dim, form.degree, {k: c for k, c in form.terms.items() if abs(c) > tol * scale})


# 4-forms -------------------------------------------------------------------

def four_form_bivector(tau: Form) -> np.ndarray:
    """Antisymmetric ``B`` with ``B_ij = coefficient of dx_ij ^ tau``."""
    _check(tau, 4)
    B = np.zeros((DIM, DIM))
    for i, j in itertools.combinations(range(DIM), 2):
        c = wedge(Form.basis(DIM, (i, j)), tau).top_coefficient()
        B[i, j], B[j, i] = c, -c
    return B


def _pfaffian6(B):
    s = 0.0
    # sum over perfect matchings of {0..5}
    for (a, b), (c, d), (e, f) in _MATCHINGS:
        _, sign = _perm_sign((a, b, c, d, e, f))
        s += sign * B[a, b] * B[c, d] * B[e, f]
    return s


def _perm_sign(p):
    from .exterior import sort_sign

    return sort_sign(p)


def _matchings(items):
    if not items:
        yield []
        return
    a = items[0]
    for k in range(1, len(items)):
        b = items[k]
        rest = items[1:k] + items[k + 1:]
        for m in _matchings(rest):
            yield [(a, b)] + m


_MATCHINGS = list(_matchings(list(range(DIM))))


def classify_4form(tau: Form, tol: float = DEGENERACY_TOL) -> Classification6:
    B = four_form_bivector(tau)
    pf = _pfaffian6(B)
    if abs(pf) <= tol * _form_scale(tau) ** 3 or tau.is_zero():
        return Classification6(Kind.DEGENERATE, 0.0, _kernel_witness(B), pf)
    return Classification6(Kind.STABLE4, float(np.sqrt(abs(pf))), None, pf)


def hitchin_dual_4form(tau: Form) -> Form:
    """The 2-form ``tau_hat`` with ``tau = 1/2 tau_hat^2`` and ``tau_hat^3 > 0``."""
    cls = classify_4form(tau)
    if not cls.stable:
        raise NoDualError("degenerate 4-form has no dual")
    W = matrix_two_form(np.linalg.inv(four_form_bivector(tau)))
    half_sq = 0.5 * wedge(W, W)
    # half_sq = kappa * tau; read kappa off the largest coefficient of tau
    key = max(tau.terms, key=lambda k: abs(tau.terms[k]))
    kappa = half_sq.coeff(key) / tau.terms[key]
    if kappa <= 0:
        raise NoDualError("4-form lies in the orbit of -1/2 w^2; no real 2-form squares to it")
    hat = W / np.sqrt(kappa)
    if wedge(wedge(hat, hat), hat).top_coefficient() < 0:
        hat = -hat
    return _clean(hat)


# SU(3) ---------------------------------------------------------------------

@dataclass(frozen=True)
class SU3Report:
    rho_ok: bool
    omega_ok: bool
    wedge_defect: Form
    volume_defect: float
    tol: float

    @property
    def verdict(self):
        return (
            self.rho_ok
            and self.omega_ok
            and self.wedge_defect.max_abs() <= self.tol
            and abs(self.volume_defect) <= self.tol
        )


def check_su3(rho: Form, omega: Form, tol: float = 1e-10) -> SU3Report:
    _check(rho, 3)
    _check(omega, 2)
    rho_ok = classify_3form(rho).kind is Kind.POSITIVE3
    omega_ok = classify_2form(omega).kind is Kind.STABLE2
    defect = wedge(omega, rho)
    if rho_ok:
        lhs = wedge(wedge(omega, omega), omega).top_coefficient() / 6.0
        rhs = wedge(rho, hitchin_dual_3form(rho)).top_coefficient() / 4.0
        vdef = lhs - rhs
    else:
        vdef = float("nan")
    return SU3Report(rho_ok, omega_ok, defect, vdef, tol)


def _calibrate():
    from .models import re_omega

    rho = re_omega()
    A = k_map(rho)
    raw = np.sqrt(-np.trace(A @ A) / 6.0)
    hat = apply_first_slot(rho, A / raw)
    return wedge(rho, hat).top_coefficient() / 4.0 / raw


# Multiplier turning sqrt(-tr K^2 / 6) into the volume (1/4) rho ^ rho_hat.
VOLUME_CALIBRATION = float(_calibrate())
