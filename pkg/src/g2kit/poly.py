"""Dense multivariate polynomials used as form coefficients."""

from __future__ import annotations

from numbers import Real

import numpy as np

MAX_DEGREE = 6


class Poly:
    """Polynomial in ``nvars`` variables, stored as ``{exponents: coefficient}``.

    Instances are treated as immutable.  Total degree is capped at
    :data:`MAX_DEGREE`; products that exceed the cap raise ``ValueError``.
    """

    __slots__ = ("nvars", "_terms")

    def __init__(self, nvars: int, terms=None):
        self.nvars = int(nvars)
        clean = {}
        for exps, c in (terms or {}).items():
            exps = tuple(int(e) for e in exps)
            if len(exps) != self.nvars or min(exps, default=0) < 0:
                raise ValueError(f"bad exponent tuple {exps} for {nvars} variables")
            if sum(exps) > MAX_DEGREE:
                raise ValueError(f"total degree {sum(exps)} exceeds cap {MAX_DEGREE}")
            c = float(c)
            if c != 0.0:
                clean[exps] = clean.get(exps, 0.0) + c
        self._terms = {k: v for k, v in clean.items() if v != 0.0}

    # construction helpers
    @classmethod
    def constant(cls, nvars, value):
        return cls(nvars, {(0,) * nvars: value})

    @classmethod
    def var(cls, nvars, axis, coeff=1.0):
        exps = [0] * nvars
        exps[axis] = 1
        return cls(nvars, {tuple(exps): coeff})

    @property
    def terms(self):
        return dict(self._terms)

    def is_zero(self):
        return not self._terms

    def degree(self):
        return max((sum(e) for e in self._terms), default=0)

    def is_constant(self):
        return all(sum(e) == 0 for e in self._terms)

    def constant_term(self):
        return self._terms.get((0,) * self.nvars, 0.0)

    # arithmetic
    def _coerce(self, other):
        if isinstance(other, Poly):
            if other.nvars != self.nvars:
                raise ValueError("polynomials over different variable counts")
            return other
        if isinstance(other, (Real, np.floating, np.integer)):
            return Poly.constant(self.nvars, float(other))
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        out = dict(self._terms)
        for k, v in other._terms.items():
            out[k] = out.get(k, 0.0) + v
        return Poly(self.nvars, out)

    __radd__ = __add__

    def __neg__(self):
        return Poly(self.nvars, {k: -v for k, v in self._terms.items()})

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (Real, np.floating, np.integer)):
            s = float(other)
            return Poly(self.nvars, {k: s * v for k, v in self._terms.items()})
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        out = {}
        for ka, va in self._terms.items():
            for kb, vb in other._terms.items():
                k = tuple(a + b for a, b in zip(ka, kb))
                out[k] = out.get(k, 0.0) + va * vb
        return Poly(self.nvars, out)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        out = Poly.constant(self.nvars, 1.0)
        for _ in range(int(n)):
            out = out * self
        return out

    def __eq__(self, other):
        other = self._coerce(other) if not isinstance(other, Poly) else other
        if other is NotImplemented:
            return False
        return self.nvars == other.nvars and self._terms == other._terms

    def __hash__(self):
        return hash((self.nvars, tuple(sorted(self._terms.items()))))

    def allclose(self, other, tol=1e-12):
        diff = self - other
        return all(abs(v) <= tol for v in diff._terms.values())

    # calculus
    def deriv(self, axis: int) -> "Poly":
        out = {}
        for exps, c in self._terms.items():
            e = exps[axis]
            if e:
                k = list(exps)
                k[axis] -= 1
                out[tuple(k)] = out.get(tuple(k), 0.0) + e * c
        return Poly(self.nvars, out)

    def __call__(self, point):
        """Evaluate at ``point`` of shape ``(..., nvars)``; vectorised over leading axes."""
        x = np.asarray(point, dtype=float)
        if x.shape[-1] != self.nvars:
            raise ValueError(f"expected trailing dimension {self.nvars}, got {x.shape}")
        out = np.zeros(x.shape[:-1])
        for exps, c in self._terms.items():
            term = np.full(x.shape[:-1], c)
            for axis, e in enumerate(exps):
                if e:
                    term = term * x[..., axis] ** e
            out = out + term
        return out if out.ndim else float(out)

    def compose(self, components) -> "Poly":
        """Substitute variable ``k`` by ``components[k]`` (Polys or numbers)."""
        if len(components) != self.nvars:
            raise ValueError("need one component per variable")
        m = None
        for c in components:
            if isinstance(c, Poly):
                m = c.nvars
                break
        if m is None:
            return Poly.constant(0, float(self(np.array(components, dtype=float)))) if self.nvars else self
        comps = [c if isinstance(c, Poly) else Poly.constant(m, float(c)) for c in components]
        cache = {}

        def power(k, e):
            if (k, e) not in cache:
                cache[(k, e)] = comps[k] ** e
            return cache[(k, e)]

        out = Poly(m)
        for exps, c in self._terms.items():
            term = Poly.constant(m, c)
            for k, e in enumerate(exps):
                if e:
                    term = term * power(k, e)
            out = out + term
        return out

    def __repr__(self):
        if not self._terms:
            return "Poly(0)"
        parts = []
        for exps, c in sorted(self._terms.items()):
            mono = "*".join(f"x{k}^{e}" if e > 1 else f"x{k}" for k, e in enumerate(exps) if e)
            parts.append(f"{c:g}" + (f"*{mono}" if mono else ""))
        return "Poly(" + " + ".join(parts) + ")"

    def to_json(self):
        return {"poly": [{"exp": list(k), "c": v} for k, v in sorted(self._terms.items())]}

    @classmethod
    def from_json(cls, obj, nvars):
        return cls(nvars, {tuple(t["exp"]): t["c"] for t in obj["poly"]})
