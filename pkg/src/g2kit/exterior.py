"""Sparse exterior algebra on R^n (n <= 8).

A :class:`Form` is a map from strictly increasing index tuples to
coefficients.  Coefficients are floats or :class:`~g2kit.poly.Poly`
objects in the ambient coordinates ``x_0 .. x_{n-1}``.  Axes are 0-based
internally; the text parser also accepts 1-based labels.
"""

from __future__ import annotations

import itertools
import re
import warnings
from dataclasses import dataclass, field
from math import comb
from types import MappingProxyType

import numpy as np

from .poly import Poly

MAX_DIM = 8


class FormParseError(ValueError):
    """Malformed form text or JSON."""


def sort_sign(indices):
    """Sort ``indices`` and return ``(sorted_tuple, sign)``; sign is 0 on a repeat."""
    idx = list(indices)
    if len(set(idx)) != len(idx):
        return tuple(sorted(idx)), 0
    sign = 1
    # insertion sort, counting transpositions
    for i in range(1, len(idx)):
        j = i
        while j > 0 and idx[j - 1] > idx[j]:
            idx[j - 1], idx[j] = idx[j], idx[j - 1]
            sign = -sign
            j -= 1
    return tuple(idx), sign


def _is_zero(c):
    return c.is_zero() if isinstance(c, Poly) else c == 0.0


def _simplify(c):
    if isinstance(c, Poly):
        return c.constant_term() if c.is_constant() else c
    return float(c)


class Form:
    """An alternating ``degree``-form on R^``dim`` with sparse coefficients."""

    __slots__ = ("dim", "degree", "_terms")

    def __init__(self, dim: int, degree: int, terms=None):
        if not 0 <= dim <= MAX_DIM:
            raise ValueError(f"dimension {dim} outside 0..{MAX_DIM}")
        if degree < 0:
            raise ValueError("negative degree")
        self.dim = dim
        self.degree = degree
        acc = {}
        for idx, c in (terms or {}).items():
            idx = tuple(int(i) for i in idx)
            if len(idx) != degree:
                raise ValueError(f"index {idx} does not have length {degree}")
            if any(i < 0 or i >= dim for i in idx):
                raise ValueError(f"index {idx} out of range for dimension {dim}")
            key, s = sort_sign(idx)
            if s == 0:
                continue
            acc[key] = acc.get(key, 0.0) + s * c
        self._terms = MappingProxyType(
            {k: _simplify(v) for k, v in sorted(acc.items()) if not _is_zero(v)}
        )

    @classmethod
    def zero(cls, dim, degree):
        return cls(dim, degree)

    @classmethod
    def scalar(cls, dim, value):
        return cls(dim, 0, {(): value})

    @classmethod
    def basis(cls, dim, idx, coeff=1.0):
        return cls(dim, len(idx), {tuple(idx): coeff})

    @property
    def terms(self):
        return self._terms

    def is_zero(self):
        return not self._terms

    def is_constant(self):
        return not any(isinstance(c, Poly) for c in self._terms.values())

    def coeff(self, idx):
        key, s = sort_sign(idx)
        if s == 0:
            return 0.0
        return s * self._terms.get(key, 0.0)

    def top_coefficient(self):
        """Coefficient of ``dx_0 ^ ... ^ dx_{n-1}`` (degree must equal dim)."""
        if self.degree != self.dim:
            raise ValueError("not a top-degree form")
        return self._terms.get(tuple(range(self.dim)), 0.0)

    def norm(self):
        """Euclidean norm of the constant coefficient vector."""
        return float(np.sqrt(sum(float(c) ** 2 for c in self.at_origin()._terms.values())))

    # arithmetic ---------------------------------------------------------
    def _check(self, other):
        if not isinstance(other, Form):
            return NotImplemented
        if (self.dim, self.degree) != (other.dim, other.degree):
            raise ValueError(
                f"cannot add forms of (dim, degree) {(self.dim, self.degree)} and {(other.dim, other.degree)}"
            )
        return other

    def __add__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        out = dict(self._terms)
        for k, v in other._terms.items():
            out[k] = out.get(k, 0.0) + v
        return Form(self.dim, self.degree, out)

    def __neg__(self):
        return Form(self.dim, self.degree, {k: -v for k, v in self._terms.items()})

    def __sub__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __mul__(self, s):
        if isinstance(s, Form):
            return NotImplemented
        return Form(self.dim, self.degree, {k: s * v for k, v in self._terms.items()})

    __rmul__ = __mul__

    def __truediv__(self, s):
        return self * (1.0 / s)

    def __xor__(self, other):
        return wedge(self, other)

    def __eq__(self, other):
        if not isinstance(other, Form):
            return NotImplemented
        return (self.dim, self.degree) == (other.dim, other.degree) and dict(self._terms) == dict(other._terms)

    def __hash__(self):
        return hash((self.dim, self.degree, tuple(self._terms.items())))

    def allclose(self, other, tol=1e-12):
        diff = self - other
        for c in diff._terms.values():
            if isinstance(c, Poly):
                if any(abs(v) > tol for v in c.terms.values()):
                    return False
            elif abs(c) > tol:
                return False
        return True

    def max_abs(self):
        return max((abs(float(c)) for c in self.at_origin()._terms.values()), default=0.0)

    # evaluation ---------------------------------------------------------
    def at(self, point) -> "Form":
        """Freeze polynomial coefficients at ``point`` (a vector of length dim)."""
        point = np.asarray(point, dtype=float)
        return Form(
            self.dim,
            self.degree,
            {k: (c(point) if isinstance(c, Poly) else c) for k, c in self._terms.items()},
        )

    def at_origin(self):
        return self.at(np.zeros(self.dim)) if not self.is_constant() else self

    def __call__(self, *vectors):
        """Evaluate on ``degree`` vectors; each may carry leading batch axes."""
        if len(vectors) != self.degree:
            raise ValueError(f"a {self.degree}-form takes {self.degree} vectors")
        if not self.is_constant():
            raise ValueError("evaluate polynomial forms with .at(point) first")
        if self.degree == 0:
            return self._terms.get((), 0.0)
        V = np.stack([np.asarray(v, dtype=float) for v in vectors], axis=-1)  # (..., n, p)
        if V.shape[-2] != self.dim:
            raise ValueError("vector length does not match ambient dimension")
        out = np.zeros(V.shape[:-2])
        for idx, c in self._terms.items():
            out = out + c * np.linalg.det(V[..., list(idx), :]) if self.degree > 1 else out + c * V[..., idx[0], 0]
        return out if out.ndim else float(out)

    def covector(self, *vectors):
        """Contract ``degree - 1`` vectors into the leading slots and return the
        remaining covector as components (shape ``(..., dim)``)."""
        if len(vectors) != self.degree - 1:
            raise ValueError(f"need {self.degree - 1} vectors")
        eye = np.eye(self.dim)
        lead = np.broadcast_shapes(*(np.shape(v)[:-1] for v in vectors)) if vectors else ()
        cols = []
        for a in range(self.dim):
            e = np.broadcast_to(eye[a], lead + (self.dim,))
            cols.append(self(*vectors, e))
        return np.stack([np.asarray(c) for c in cols], axis=-1)

    def tensor(self):
        """Dense antisymmetric coefficient array of shape ``(dim,)*degree``."""
        if not self.is_constant():
            raise ValueError("polynomial coefficients have no dense tensor")
        T = np.zeros((self.dim,) * self.degree)
        for idx, c in self._terms.items():
            for perm in itertools.permutations(range(self.degree)):
                _, s = sort_sign(perm)
                T[tuple(idx[p] for p in perm)] = s * c
        return T

    def __repr__(self):
        return f"Form(dim={self.dim}, degree={self.degree}, {render_form(self, base=0)})"


# core operations ----------------------------------------------------------

def wedge(a: Form, b: Form) -> Form:
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")
    degree = a.degree + b.degree
    if degree > a.dim:
        return Form(a.dim, degree)
    out = {}
    for ia, ca in a.terms.items():
        for ib, cb in b.terms.items():
            key, s = sort_sign(ia + ib)
            if s:
                out[key] = out.get(key, 0.0) + s * (ca * cb)
    return Form(a.dim, degree, out)


def interior(v, a: Form) -> Form:
    """Contraction ``v ⌟ a`` (insertion into the first slot)."""
    v = np.asarray(v, dtype=float)
    if v.shape != (a.dim,):
        raise ValueError(f"vector of length {a.dim} expected")
    if a.degree == 0:
        raise ValueError("cannot contract a 0-form")
    out = {}
    for idx, c in a.terms.items():
        for k, i in enumerate(idx):
            if v[i] != 0.0:
                key = idx[:k] + idx[k + 1:]
                out[key] = out.get(key, 0.0) + ((-1) ** k * v[i]) * c
    return Form(a.dim, a.degree - 1, out)


def exterior_derivative(a: Form) -> Form:
    out = {}
    for idx, c in a.terms.items():
        if not isinstance(c, Poly):
            continue
        for j in range(a.dim):
            dc = c.deriv(j)
            if dc.is_zero():
                continue
            key, s = sort_sign((j,) + idx)
            if s:
                out[key] = out.get(key, 0.0) + s * dc
    return Form(a.dim, a.degree + 1, out)


@dataclass(frozen=True)
class Metric:
    matrix: np.ndarray
    positive_definite: bool = field(init=False)

    def __post_init__(self):
        g = np.array(self.matrix, dtype=float)
        if g.ndim != 2 or g.shape[0] != g.shape[1]:
            raise ValueError("metric must be square")
        if not np.allclose(g, g.T, atol=1e-12, rtol=0):
            raise ValueError("metric must be symmetric")
        g.setflags(write=False)
        object.__setattr__(self, "matrix", g)
        try:
            np.linalg.cholesky(g)
            pd = True
        except np.linalg.LinAlgError:
            pd = False
        object.__setattr__(self, "positive_definite", pd)

    @property
    def dim(self):
        return self.matrix.shape[0]

    def inner(self, u, v):
        return np.einsum("...i,ij,...j->...", u, self.matrix, v)

    @classmethod
    def identity(cls, n):
        return cls(np.eye(n))


def _minor_gram(M, p):
    """Matrix of p x p minors ``det(M[I, J])`` over sorted index sets."""
    n = M.shape[0]
    idx = list(itertools.combinations(range(n), p))
    G = np.empty((len(idx), len(idx)))
    for a, I in enumerate(idx):
        for b, J in enumerate(idx):
            G[a, b] = np.linalg.det(M[np.ix_(I, J)]) if p else 1.0
    return idx, G


def hodge_star(g: Metric, orient: int, a: Form) -> Form:
    """Hodge star for the metric ``g`` and orientation ``orient`` (+1 means
    ``dx_0 ^ ... ^ dx_{n-1}`` is positive)."""
    if not isinstance(g, Metric):
        g = Metric(g)
    if g.dim != a.dim:
        raise ValueError("metric and form dimensions differ")
    if not g.positive_definite:
        raise ValueError("Hodge star needs a positive-definite metric")
    if orient not in (1, -1):
        raise ValueError("orientation must be +1 or -1")
    n, p = a.dim, a.degree
    ginv = np.linalg.inv(g.matrix)
    idx, G = _minor_gram(ginv, p)
    pos = {I: k for k, I in enumerate(idx)}
    vol = orient * np.sqrt(np.linalg.det(g.matrix))
    out = {}
    for I in idx:
        # raised component a^I = sum_K G[I, K] a_K
        raised = 0.0
        for K, c in a.terms.items():
            w = G[pos[I], pos[K]]
            if w != 0.0:
                raised = raised + w * c
        if _is_zero(raised) if isinstance(raised, Poly) else raised == 0.0:
            continue
        comp = tuple(i for i in range(n) if i not in I)
        _, s = sort_sign(I + comp)
        out[comp] = out.get(comp, 0.0) + (s * vol) * raised
    return Form(n, n - p, out)


# maps and pullback --------------------------------------------------------

class PolyMap:
    """Polynomial map R^domain_dim -> R^len(components)."""

    def __init__(self, components, domain_dim):
        self.domain_dim = int(domain_dim)
        self.components = tuple(
            c if isinstance(c, Poly) else Poly.constant(self.domain_dim, float(c)) for c in components
        )
        if any(c.nvars != self.domain_dim for c in self.components):
            raise ValueError("component polynomials must live on the domain")

    @property
    def codomain_dim(self):
        return len(self.components)

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        return np.stack([np.broadcast_to(c(y), y.shape[:-1]) for c in self.components], axis=-1)

    def differential(self):
        """Pullbacks of the coordinate 1-forms as domain 1-forms."""
        return [
            Form(self.domain_dim, 1, {(j,): c.deriv(j) for j in range(self.domain_dim)})
            for c in self.components
        ]


def affine_map(A, b=None) -> PolyMap:
    """``y -> A y + b`` with ``A`` of shape (codomain, domain)."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    m, n = A.shape
    b = np.zeros(m) if b is None else np.asarray(b, dtype=float)
    comps = []
    for i in range(m):
        p = Poly.constant(n, b[i])
        for j in range(n):
            if A[i, j] != 0.0:
                p = p + Poly.var(n, j, A[i, j])
        comps.append(p)
    return PolyMap(comps, n)


def graph_map(mu, domain_dim) -> PolyMap:
    """``x -> (mu(x), x)``: axis 0 of the codomain carries the graph height."""
    mu = mu if isinstance(mu, Poly) else Poly.constant(domain_dim, float(mu))
    return PolyMap([mu] + [Poly.var(domain_dim, j) for j in range(domain_dim)], domain_dim)


def compose(outer: PolyMap, inner: PolyMap) -> PolyMap:
    """``outer ∘ inner``."""
    if inner.codomain_dim != outer.domain_dim:
        raise ValueError("maps are not composable")
    return PolyMap([c.compose(inner.components) for c in outer.components], inner.domain_dim)


def pullback(m: PolyMap, a: Form) -> Form:
    if m.codomain_dim != a.dim:
        raise ValueError(f"map codomain dimension {m.codomain_dim} != form dimension {a.dim}")
    n = m.domain_dim
    dF = m.differential()
    out = Form(n, a.degree)
    for idx, c in a.terms.items():
        coeff = c.compose(m.components) if isinstance(c, Poly) else c
        piece = Form.scalar(n, coeff)
        for i in idx:
            piece = wedge(piece, dF[i])
        out = out + piece
    return out


# text and JSON ------------------------------------------------------------

_TERM = re.compile(
    r"^(?:(?P<coeff>(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*\*\s*)?"
    r"(?P<factors>(?:dx\d+|dt)(?:\s*\^\s*(?:dx\d+|dt))*)$"
)


_PIECE = re.compile(
    r"\s*(?P<sign>[+-])?\s*"
    r"(?P<body>(?:(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?\s*\*\s*)?"
    r"(?:dx\d+|dt)(?:\s*\^\s*(?:dx\d+|dt))*)\s*"
)


def _split_terms(text):
    s = text.strip()
    if not s:
        raise FormParseError("empty form")
    out, pos = [], 0
    while pos < len(s):
        m = _PIECE.match(s, pos)
        if not m or m.end() == pos:
            raise FormParseError(f"malformed form text near {s[pos:]!r}")
        if out and m.group("sign") is None:
            raise FormParseError(f"missing '+' or '-' before {m.group('body')!r}")
        out.append((-1 if m.group("sign") == "-" else 1, m.group("body")))
        pos = m.end()
    return out


def parse_form(text: str, dim: int | None = None, base: int | None = None) -> Form:
    """Parse ``"dx135 + dx632 - 2*dx254"`` style text.

    ``base`` is the label of the first axis: 1 for the x_1..x_n convention,
    0 when x_0 (alias ``dt``) is present.  By default ``base`` is 0 if a 0
    label or ``dt`` occurs and 1 otherwise; ``dim`` defaults to 7 for base 0
    and ``max(6, largest label)`` for base 1.  Repeated indices give a zero
    term and a warning.
    """
    pieces = _split_terms(text)
    parsed = []
    labels_seen = []
    for sign, body in pieces:
        body = re.sub(r"\s+", "", body)
        mt = _TERM.match(body)
        if not mt:
            raise FormParseError(f"malformed term {body!r}")
        coeff = float(mt.group("coeff")) if mt.group("coeff") else 1.0
        labels = []
        for fac in mt.group("factors").split("^"):
            labels.extend([0] if fac == "dt" else [int(ch) for ch in fac[2:]])
        parsed.append((sign * coeff, labels))
        labels_seen.extend(labels)
    degrees = {len(lab) for _, lab in parsed}
    if len(degrees) != 1:
        raise FormParseError(f"terms of mixed degree in {text!r}")
    if base is None:
        base = 0 if (0 in labels_seen or "dt" in text) else 1
    if base not in (0, 1):
        raise FormParseError("base must be 0 or 1")
    if dim is None:
        top = max(labels_seen, default=0)
        dim = max(7, top + 1) if base == 0 else max(6, top)
    terms = {}
    for c, labels in parsed:
        axes = [lab - base for lab in labels]
        if any(a < 0 or a >= dim for a in axes):
            raise FormParseError(f"axis label out of range in {labels} for dim {dim}, base {base}")
        key, s = sort_sign(axes)
        if s == 0:
            warnings.warn(f"repeated index in dx{''.join(map(str, labels))}; term is zero", stacklevel=2)
            continue
        terms[key] = terms.get(key, 0.0) + s * c
    return Form(dim, degrees.pop(), terms)


def _fmt_coeff(c):
    if isinstance(c, Poly):
        return f"({c!r})"
    c = float(c)
    if c == int(c) and abs(c) < 1e15:
        return "" if abs(c) == 1 else f"{abs(int(c))}*"
    return f"{abs(c)!r}*"


def render_form(a: Form, base: int = 1) -> str:
    if a.is_zero():
        return "0"
    parts = []
    for idx, c in a.terms.items():
        neg = not isinstance(c, Poly) and c < 0
        body = _fmt_coeff(c) + ("dx" + "".join(str(i + base) for i in idx) if idx else "1")
        if isinstance(c, Poly):
            body = f"{c!r}*" + ("dx" + "".join(str(i + base) for i in idx) if idx else "1")
        if body.endswith("*1"):
            body = body[:-2]
        parts.append(("- " if neg else "+ ") + body)
    s = " ".join(parts)
    return s[2:] if s.startswith("+ ") else "-" + s[1:]


def form_to_json(a: Form) -> dict:
    terms = []
    for idx, c in a.terms.items():
        terms.append({"idx": list(idx), "c": c.to_json() if isinstance(c, Poly) else float(c)})
    return {"dim": a.dim, "degree": a.degree, "terms": terms}


def form_from_json(obj) -> Form:
    """Inverse of :func:`form_to_json`.  An optional ``"base": 1`` key shifts
    1-based labels to axes."""
    try:
        dim, degree = int(obj["dim"]), int(obj["degree"])
        base = int(obj.get("base", 0))
        terms = {}
        for t in obj["terms"]:
            idx = tuple(int(i) - base for i in t["idx"])
            c = t["c"]
            c = Poly.from_json(c, dim) if isinstance(c, dict) else float(c)
            key, s = sort_sign(idx)
            if s:
                terms[key] = terms.get(key, 0.0) + s * c
        return Form(dim, degree, terms)
    except (KeyError, TypeError, ValueError) as exc:
        raise FormParseError(f"bad form JSON: {exc}") from exc


def num_components(n, p):
    return comb(n, p)
