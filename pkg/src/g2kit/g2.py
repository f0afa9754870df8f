"""G2 structures on R^7: metric recovery, cylinder pairs, associative planes, taming."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import stable6
from .exterior import Form, Metric, hodge_star, interior, sort_sign, wedge
from .models import phi_from_pair, psi_from_pair

DIM = 7
DEFINITE_TOL = 1e-10
PLANE_TOL = 1e-12


class DegenerateStructure(ValueError):
    """The form does not define a G2 structure; carries a witness when available."""

    def __init__(self, message, witness=None, kind="degenerate"):
        super().__init__(message)
        self.witness = witness
        self.kind = kind


@dataclass(frozen=True)
class G2Structure:
    phi: Form
    metric: Metric
    orientation: int
    vol_coeff: float
    psi: Form

    @property
    def g(self):
        return self.metric.matrix

    def cross(self, u, v):
        """``u × v``: the g-dual of ``phi(u, v, ·)``; broadcasts over leading axes."""
        cov = np.einsum("abc,...a,...b->...c", _tensor(self.phi), u, v)
        return np.linalg.solve(self.g, cov[..., None])[..., 0] if cov.ndim > 1 else np.linalg.solve(self.g, cov)


def _tensor(form):
    return form.tensor()


def gram_b(phi: Form) -> np.ndarray:
    """``B_uv`` with ``(1/6)(u⌟phi)^(v⌟phi)^phi = B_uv dx_0..6`` on basis vectors."""
    if phi.dim != DIM or phi.degree != 3:
        raise ValueError("expected a 3-form on R^7")
    if not phi.is_constant():
        raise ValueError("freeze polynomial coefficients with .at(point) first")
    E = np.eye(DIM)
    contr = [interior(E[a], phi) for a in range(DIM)]
    B = np.zeros((DIM, DIM))
    for a in range(DIM):
        ap = wedge(contr[a], phi)
        for b in range(a, DIM):
            B[a, b] = B[b, a] = wedge(ap, contr[b]).top_coefficient() / 6.0
    return B


def _indefinite_witness(B, tol):
    s = 1.0 if np.trace(B) >= 0 else -1.0
    scale = max(np.abs(B).max(), 1e-300)
    for a in range(DIM):
        if s * B[a, a] <= tol * scale:
            e = np.zeros(DIM)
            e[a] = 1.0
            return e
    w, V = np.linalg.eigh(s * B)
    v = V[:, 0]
    return v * np.sign(v[np.argmax(np.abs(v))])


def metric_from_phi(phi: Form, tol: float = DEFINITE_TOL) -> G2Structure:
    """Metric, orientation and 4-form of a stable 3-form.

    ``g = B / sign(det B) |det B|^(1/9)``; the orientation is ``sign(det B)``.
    Raises :class:`DegenerateStructure` with a witness vector when ``B`` is
    not definite.
    """
    B = gram_b(phi)
    ev = np.linalg.eigvalsh(B)
    scale = max(np.abs(ev).max(), 1e-300)
    if not (np.all(ev > tol * scale) or np.all(ev < -tol * scale)):
        raise DegenerateStructure(
            "B is not definite; the 3-form is not a G2 form", _indefinite_witness(B, tol)
        )
    det = float(np.prod(ev))
    orient = 1 if det > 0 else -1
    g = orient * B / abs(det) ** (1.0 / 9.0)
    metric = Metric(g)
    vol = orient * float(np.sqrt(np.linalg.det(g)))
    psi = hodge_star(metric, orient, phi)
    return G2Structure(phi, metric, orient, vol, psi)


def _dual_trivector(psi: Form) -> Form:
    """Components of the trivector ``P`` with ``P ⌟ dx_0..6 = psi``, stored as a 3-form."""
    out = {}
    for idx, c in psi.terms.items():
        comp = tuple(i for i in range(DIM) if i not in idx)
        _, s = sort_sign(comp + idx)
        out[comp] = s * c
    return Form(DIM, 3, out)


def metric_from_psi(psi: Form, tol: float = DEFINITE_TOL) -> G2Structure:
    """Recover the G2 structure whose 4-form is ``psi``.

    The dual trivector of ``psi`` determines the inverse metric up to scale;
    the scale is fixed so that ``phi = *psi`` reproduces the same metric.
    Of the two orientations that work for a G2-type 4-form the reference
    orientation ``dx_0..6 > 0`` is used.  Forms in the orbit of ``-psi0``
    have no compatible 3-form and raise with ``kind="anti"``.
    """
    if psi.dim != DIM or psi.degree != 4:
        raise ValueError("expected a 4-form on R^7")
    if not psi.is_constant():
        raise ValueError("freeze polynomial coefficients with .at(point) first")
    Bt = gram_b(_dual_trivector(psi))
    ev = np.linalg.eigvalsh(Bt)
    scale = max(np.abs(ev).max(), 1e-300)
    if not (np.all(ev > tol * scale) or np.all(ev < -tol * scale)):
        raise DegenerateStructure("4-form is not stable", _indefinite_witness(Bt, tol))
    G = np.linalg.inv(Bt * np.sign(ev[0]))
    G = (G + G.T) / 2
    phi1 = hodge_star(Metric(G), 1, psi)
    try:
        s1 = metric_from_phi(phi1, tol)
    except DegenerateStructure as exc:
        raise DegenerateStructure("4-form is not of G2 type", exc.witness) from exc
    if s1.orientation < 0:
        raise DegenerateStructure("4-form lies in the orbit of -psi0", None, kind="anti")
    kappa = float(np.trace(s1.g @ np.linalg.inv(G)) / DIM)
    if not np.allclose(s1.g, kappa * G, rtol=1e-8, atol=1e-10 * np.abs(s1.g).max()):
        raise DegenerateStructure("4-form is not of G2 type")
    s = kappa ** 0.75
    phi = phi1 / np.sqrt(s)
    st = metric_from_phi(phi, tol)
    return G2Structure(phi, st.metric, st.orientation, st.vol_coeff, psi)


# cylinder pairs --------------------------------------------------------------

@dataclass
class StructureReport:
    kind: str
    g2_pair: bool
    su3: bool | None = None
    product_metric: bool | None = None
    metric: list | None = None
    orientation: int | None = None
    witness: list | None = None
    details: dict = field(default_factory=dict)

    def to_json(self):
        return {
            "kind": self.kind,
            "g2_pair": self.g2_pair,
            "su3": self.su3,
            "product_metric": self.product_metric,
            "metric": self.metric,
            "orientation": self.orientation,
            "witness": self.witness,
            "details": self.details,
        }


def _product_metric(g, tol=1e-10):
    return bool(np.all(np.abs(g[0, 1:]) <= tol * np.abs(g).max()))


def g2_pair_check(rho: Form, second: Form, tol: float = 1e-10) -> StructureReport:
    """Decide whether ``(rho, omega)`` or ``(rho, tau)`` on R^6 is a G2 pair."""
    if rho.dim != 6 or rho.degree != 3 or second.dim != 6 or second.degree not in (2, 4):
        raise ValueError("expected a 3-form and a 2- or 4-form on R^6")
    if second.degree == 2:
        total = phi_from_pair(rho, second)
        recover = metric_from_phi
        su3 = stable6.check_su3(rho, second, tol)
        su3_flag = su3.verdict
        details = {"wedge_defect_max": su3.wedge_defect.max_abs(), "volume_defect": su3.volume_defect}
    else:
        total = psi_from_pair(rho, second)
        recover = metric_from_psi
        su3_flag = None
        details = {}
    try:
        st = recover(total)
    except DegenerateStructure as exc:
        w = None if exc.witness is None else [float(x) for x in exc.witness]
        return StructureReport(exc.kind, False, su3_flag, None, witness=w, details=details)
    product = _product_metric(st.g)
    if second.degree == 4:
        try:
            omega = stable6.hitchin_dual_4form(second)
            su3_flag = stable6.check_su3(rho, omega, tol).verdict
        except stable6.NoDualError:
            su3_flag = False
    details["g_t_block"] = [float(x) for x in st.g[0, 1:]]
    return StructureReport(
        "G2",
        True,
        su3_flag,
        product,
        metric=st.g.tolist(),
        orientation=st.orientation,
        details=details,
    )


# associative planes ----------------------------------------------------------

@dataclass(frozen=True)
class Plane3:
    u: np.ndarray
    v: np.ndarray
    w: np.ndarray

    def frame(self):
        return np.stack([self.u, self.v, self.w])


def _gram_det(g, u, v, w):
    F = np.stack([u, v, w], axis=-2)
    return np.linalg.det(F @ g @ np.swapaxes(F, -1, -2))


def associative_residual(plane: Plane3, st: G2Structure, psi: Form | None = None):
    """Return ``(residual, phi_positive)`` where ``residual = g^{-1} psi(u, v, w, ·)``.

    ``psi`` defaults to the structure's own 4-form; a different 4-form may be
    supplied when testing against a perturbed structure with the same metric.
    """
    u, v, w = plane.u, plane.v, plane.w
    if _gram_det(st.g, u, v, w) <= PLANE_TOL:
        raise ValueError("degenerate plane")
    psi = st.psi if psi is None else psi
    cov = np.einsum("abcd,a,b,c->d", psi.tensor(), u, v, w)
    res = np.linalg.solve(st.g, cov)
    return res, bool(st.phi(u, v, w) > 0)


def is_associative(plane: Plane3, st: G2Structure, tol: float = 1e-9) -> bool:
    res, pos = associative_residual(plane, st)
    scale = np.prod([np.sqrt(st.metric.inner(x, x)) for x in (plane.u, plane.v, plane.w)])
    return bool(np.sqrt(st.metric.inner(res, res)) <= tol * scale and pos)


def _g_orthonormal_pair(rng, g, min_norm=1e-6, max_attempts=None):
    u = rng.standard_normal(DIM)
    v = rng.standard_normal(DIM)
    nu = np.sqrt(u @ g @ u)
    if nu < min_norm:
        return None
    u = u / nu
    v = v - (u @ g @ v) * u
    nv = np.sqrt(v @ g @ v)
    if nv < min_norm:
        return None
    return u, v / nv


def sample_frames(st: G2Structure, count: int, seed: int) -> np.ndarray:
    """Associative frames ``(u, v, u × v)`` as an array of shape ``(count, 3, 7)``.

    Sample ``n`` draws from ``default_rng([seed, n, attempt])`` so every
    sample is reproducible on its own, independent of evaluation order.
    """
    out = np.empty((count, 3, DIM))
    g = st.g
    for n in range(count):
        attempt = 0
        while True:
            pair = _g_orthonormal_pair(np.random.default_rng([seed, n, attempt]), g)
            if pair is not None:
                break
            attempt += 1
        out[n, 0], out[n, 1] = pair
    out[:, 2] = st.cross(out[:, 0], out[:, 1])
    return out


def frame_residuals(frames: np.ndarray, st: G2Structure) -> np.ndarray:
    """g-norms of ``g^{-1} psi(u, v, w, ·)`` for a batch of frames."""
    cov = np.einsum("abcd,na,nb,nc->nd", st.psi.tensor(), frames[:, 0], frames[:, 1], frames[:, 2])
    vec = np.linalg.solve(st.g, cov.T).T
    return np.sqrt(np.einsum("ni,ij,nj->n", vec, st.g, vec))


def sample_associative(st: G2Structure, count: int, seed: int, tol: float = 1e-9) -> list[Plane3]:
    if count == 0:
        return []
    frames = sample_frames(st, count, seed)
    res = frame_residuals(frames, st)
    bad = np.flatnonzero(res > tol)
    if bad.size:
        raise RuntimeError(f"{bad.size} sampled planes fail associativity (max residual {res.max():.3e})")
    return [Plane3(*f) for f in frames]


@dataclass(frozen=True)
class TamingEstimate:
    min_ratio: float
    argmin_plane: Plane3 | None
    samples: int
    seed: int

    @property
    def verdict(self):
        if self.samples == 0:
            return "no samples"
        return "refuted" if self.min_ratio <= 0 else "sampled evidence"

    @property
    def constant(self):
        """Sampled estimate of the taming constant ``K`` (``None`` when refuted)."""
        return 1.0 / self.min_ratio if self.min_ratio > 0 else None

    def to_json(self):
        p = self.argmin_plane
        return {
            "min_ratio": self.min_ratio,
            "K_estimate": self.constant,
            "verdict": self.verdict,
            "samples": self.samples,
            "seed": self.seed,
            "argmin_plane": None if p is None else [x.tolist() for x in (p.u, p.v, p.w)],
        }


def taming_estimate(phi_prime: Form, st: G2Structure, count: int, seed: int) -> TamingEstimate:
    """Minimum of ``phi'(u, v, w)`` over sampled g-orthonormal associative frames."""
    if phi_prime.dim != DIM or phi_prime.degree != 3:
        raise ValueError("expected a 3-form on R^7")
    if count == 0:
        return TamingEstimate(float("inf"), None, 0, seed)
    frames = sample_frames(st, count, seed)
    T = phi_prime.tensor()
    ratios = np.einsum("abc,na,nb,nc->n", T, frames[:, 0], frames[:, 1], frames[:, 2])
    k = int(np.argmin(ratios))
    return TamingEstimate(float(ratios[k]), Plane3(*frames[k]), count, seed)


def psi_structure(psi: Form) -> G2Structure:
    return metric_from_psi(psi)


__all__ = [
    "DegenerateStructure",
    "G2Structure",
    "Plane3",
    "StructureReport",
    "TamingEstimate",
    "associative_residual",
    "g2_pair_check",
    "gram_b",
    "is_associative",
    "metric_from_phi",
    "metric_from_psi",
    "sample_associative",
    "sample_frames",
    "taming_estimate",
]

