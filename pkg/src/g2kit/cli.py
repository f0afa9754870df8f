"""Command-line interface: ``g2kit <verb> [options]``.

Every run prints a JSON report (``--json``) or a one-line summary, and
exits with 0 when all requested checks pass, 2 on parse errors, 3 on
violated preconditions and 4 on failed numeric checks.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from pathlib import Path

import numpy as np

from . import associator_pde as apde
from . import g2, models, perturbed_sl as psl, stable6
from .exterior import (
    Form,
    FormParseError,
    form_from_json,
    form_to_json,
    interior,
    parse_form,
    render_form,
    wedge,
)

EXIT_OK, EXIT_PARSE, EXIT_PRECONDITION, EXIT_NUMERIC = 0, 2, 3, 4

DEFAULTS = {
    "seed": 0,
    "samples": 10000,
    "tol": 1e-10,
    "grid": 9,
    "dim": None,
    "out": None,
    "json": False,
    "max_iter": 30,
    "sweep": 200,
}


class CliError(Exception):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


# input helpers ---------------------------------------------------------------------

def _load_json(path):
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise CliError(EXIT_PARSE, f"cannot read JSON from {path}: {exc}") from exc


def read_form(spec, dim=None) -> Form:
    """Form from text, from ``@file.json`` or from an already-decoded JSON object."""
    try:
        if isinstance(spec, dict):
            return form_from_json(spec)
        if isinstance(spec, str) and spec.startswith("@"):
            return form_from_json(_load_json(spec[1:]))
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            form = parse_form(spec, dim=dim)
        for w in caught:
            print(f"warning: {w.message}", file=sys.stderr)
        return form
    except FormParseError as exc:
        raise CliError(EXIT_PARSE, str(exc)) from exc


def read_vector(text, n):
    try:
        v = np.array([float(x) for x in text.replace(",", " ").split()])
    except ValueError as exc:
        raise CliError(EXIT_PARSE, f"bad vector {text!r}") from exc
    if v.shape != (n,):
        raise CliError(EXIT_PARSE, f"vector {text!r} must have {n} components")
    return v


def _floats(x):
    return np.asarray(x, dtype=float).tolist()


# verbs --------------------------------------------------------------------------------

def cmd_classify(opts):
    a = read_form(opts["form"], opts["dim"])
    out = {"form": form_to_json(a)}
    if a.dim == 6:
        fn = {2: stable6.classify_2form, 3: stable6.classify_3form, 4: stable6.classify_4form}.get(a.degree)
        if fn is None:
            raise CliError(EXIT_PRECONDITION, "R^6 classification covers degrees 2, 3, 4")
        c = fn(a)
        out.update(
            kind=c.kind.value,
            volume_coeff=float(c.volume_coeff),
            invariant=float(c.invariant),
            witness=None if c.witness is None else _floats(c.witness),
        )
        return out, True
    if a.dim == 7 and a.degree in (3, 4):
        try:
            st = g2.metric_from_phi(a) if a.degree == 3 else g2.metric_from_psi(a)
        except g2.DegenerateStructure as exc:
            out.update(kind=exc.kind, witness=None if exc.witness is None else _floats(exc.witness))
            return out, True
        out.update(kind="G2", metric=_floats(st.g), orientation=st.orientation, vol_coeff=st.vol_coeff)
        return out, True
    raise CliError(EXIT_PRECONDITION, "unsupported (dim, degree) for classification")


def cmd_dual(opts):
    a = read_form(opts["form"], opts["dim"])
    try:
        if a.dim == 6 and a.degree == 2:
            dual = 0.5 * wedge(a, a)
        elif a.dim == 6 and a.degree == 3:
            dual = stable6.hitchin_dual_3form(a)
        elif a.dim == 6 and a.degree == 4:
            dual = stable6.hitchin_dual_4form(a)
        elif a.dim == 7 and a.degree == 3:
            dual = g2.metric_from_phi(a).psi
        elif a.dim == 7 and a.degree == 4:
            dual = g2.metric_from_psi(a).phi
        else:
            raise CliError(EXIT_PRECONDITION, "no dual for this (dim, degree)")
    except (stable6.NotPositiveError, stable6.NoDualError, g2.DegenerateStructure) as exc:
        raise CliError(EXIT_PRECONDITION, str(exc)) from exc
    base = 1 if a.dim == 6 or (a.dim == 7 and "dt" not in str(opts["form"]) and "0" not in str(opts["form"])) else 0
    return {"form": form_to_json(a), "dual": form_to_json(dual), "dual_text": render_form(dual, base=base)}, True


def cmd_metric(opts):
    a = read_form(opts["form"], opts["dim"] or 7)
    if a.dim != 7 or a.degree not in (3, 4):
        raise CliError(EXIT_PRECONDITION, "metric needs a 3- or 4-form on R^7")
    try:
        st = g2.metric_from_phi(a) if a.degree == 3 else g2.metric_from_psi(a)
    except g2.DegenerateStructure as exc:
        return {"kind": exc.kind, "witness": None if exc.witness is None else _floats(exc.witness)}, False
    return {"kind": "G2", "metric": _floats(st.g), "orientation": st.orientation, "vol_coeff": st.vol_coeff}, True


def cmd_su3(opts):
    rho = read_form(opts["rho"], 6)
    omega = read_form(opts["omega"], 6)
    r = stable6.check_su3(rho, omega, opts["tol"])
    return {
        "rho_ok": r.rho_ok,
        "omega_ok": r.omega_ok,
        "wedge_defect": form_to_json(r.wedge_defect),
        "volume_defect": None if np.isnan(r.volume_defect) else r.volume_defect,
        "su3": r.verdict,
    }, r.verdict


def cmd_g2pair(opts):
    rho = read_form(opts["rho"], 6)
    second = read_form(opts["second"], 6)
    rep = g2.g2_pair_check(rho, second, opts["tol"])
    return rep.to_json(), rep.g2_pair


def _structure(opts):
    psi = models.psi0() if opts.get("psi") is None else read_form(opts["psi"], 7)
    try:
        return g2.metric_from_psi(psi)
    except g2.DegenerateStructure as exc:
        raise CliError(EXIT_PRECONDITION, f"4-form is not a G2 form: {exc}") from exc


def cmd_tame(opts):
    phi_p = read_form(opts["phi"], 7)
    st = _structure(opts)
    est = g2.taming_estimate(phi_p, st, opts["samples"], opts["seed"])
    return est.to_json(), est.verdict != "refuted"


def cmd_assoc(opts):
    phi = models.phi0() if opts.get("phi") is None else read_form(opts["phi"], 7)
    try:
        st = g2.metric_from_phi(phi)
    except g2.DegenerateStructure as exc:
        raise CliError(EXIT_PRECONDITION, str(exc)) from exc
    plane = g2.Plane3(*(read_vector(t, 7) for t in opts["vectors"]))
    try:
        res, pos = g2.associative_residual(plane, st)
    except ValueError as exc:
        raise CliError(EXIT_PRECONDITION, str(exc)) from exc
    ok = g2.is_associative(plane, st, opts["tol"])
    return {"residual": _floats(res), "phi_positive": pos, "associative": ok}, ok


def _pair(opts):
    if opts.get("pair"):
        obj = _load_json(opts["pair"])
        return read_form(obj["rho"], 6), read_form(obj["tau"], 6)
    return models.re_omega(), models.half_kahler_squared()


def _patch(opts, periodic=False):
    if opts.get("patch"):
        obj = _load_json(opts["patch"])
        try:
            return psl.FlatPatch(
                np.array(obj["frame"], float),
                np.array(obj.get("base", [0.0] * 6), float),
                int(obj.get("m", opts["grid"])),
                bool(obj.get("periodic", periodic)),
                float(obj.get("length", 1.0)),
            )
        except (KeyError, ValueError) as exc:
            raise CliError(EXIT_PARSE, f"bad patch: {exc}") from exc
    return psl.FlatPatch(psl.sl_frame(), np.zeros(6), opts["grid"], periodic)


def _multiplier(opts, patch):
    if not opts.get("lambda"):
        return psl.MultiplierField.constant(patch)
    obj = _load_json(opts["lambda"])
    if "values" in obj:
        return psl.MultiplierField(patch, np.array(obj["values"], float))
    grad = np.array(obj.get("linear", [0.0, 0.0, 0.0]), float)
    c = float(obj.get("constant", 0.0))
    return psl.MultiplierField.from_function(patch, lambda s: c + s @ grad)


def cmd_sl(opts):
    rho, tau = _pair(opts)
    patch = _patch(opts)
    lam = _multiplier(opts, patch)
    try:
        res = psl.sl_residual(lam, patch, rho, tau)
    except psl.PreconditionError as exc:
        raise CliError(EXIT_PRECONDITION, str(exc)) from exc
    eq = psl.equivalence_check(lam, patch, rho, tau, opts["tol"])
    out = {"r1_max": res.r1_max, "r2_max": res.r2_max, "equivalence": eq.to_json()}
    return out, res.max <= opts["tol"] and eq.consistent


def symbol_sweep(count, seed, rho=None, tau=None, frame=None):
    """Smallest singular value and dim-6/dim-7 mismatch over random covectors."""
    rho = models.re_omega() if rho is None else rho
    tau = models.half_kahler_squared() if tau is None else tau
    frame = psl.sl_frame() if frame is None else frame
    smin, mismatch = np.inf, 0.0
    for n in range(count):
        alpha = np.random.default_rng([seed, n]).standard_normal(3)
        alpha /= np.linalg.norm(alpha)
        rep = psl.symbol_matrix(rho, tau, np.zeros(3), frame, alpha)
        s7 = psl.symbol_matrix_7d(rho, tau, np.zeros(3), frame, alpha)
        smin = min(smin, rep.smin)
        mismatch = max(mismatch, float(np.abs(rep.matrix - s7).max()))
    return float(smin), mismatch


# On the flat model the symbol is |α| times an orthogonal matrix; the sweep
# measures a floor of 1 up to rounding.
SYMBOL_FLOOR = 1.0 - 1e-9


def cmd_symbol(opts):
    smin, mismatch = symbol_sweep(opts["sweep"], opts["seed"])
    ok = smin >= SYMBOL_FLOOR and mismatch <= 1e-12
    return {"min_singular_value": smin, "floor": SYMBOL_FLOOR, "dim6_dim7_max_diff": mismatch}, ok


def cmd_volume(opts):
    m = opts["grid"]
    patch = psl.FlatPatch(psl.sl_frame(), np.zeros(6), m, periodic=True)
    bump = psl.MultiplierField.from_function(
        patch, lambda s: 0.1 * np.sin(2 * np.pi * s[..., 0]) * np.cos(2 * np.pi * s[..., 1])
    )
    ident = psl.volume_identity_check(bump)
    hodge = max(psl.hodge_gradient_identity(gv) for gv in bump.gradient().reshape(-1, 3))
    st = g2.metric_from_psi(models.psi_from_pair(models.re_omega(), models.half_kahler_squared()))
    phi_p = st.phi
    est = g2.taming_estimate(phi_p, st, opts["samples"], opts["seed"])
    K = est.constant
    rho_p = Form(6, 3, {tuple(i - 1 for i in k): c for k, c in phi_p.terms.items() if 0 not in k})
    omega_p = Form(6, 2, {tuple(i - 1 for i in k[1:]): c for k, c in phi_p.terms.items() if k[0] == 0})
    bound = psl.volume_bound_check(rho_p, omega_p, psl.MultiplierField.constant(patch), K, opts["tol"])
    exact = psl.volume_bound_check(rho_p, omega_p, bump, K, opts["tol"]).exact_term
    out = {
        "bump_exact_term": exact,
        "wedge_identity_defect": ident.defect,
        "classical_density_max": float(ident.classical_density.max()),
        "wedge_density_max": float(ident.wedge_density.max()),
        "hodge_defect": hodge,
        "taming": est.to_json(),
        "bound": bound.to_json(),
    }
    ok = ident.defect <= 1e-10 and hodge <= 1e-10 and bound.passed and abs(exact) <= 1e-10
    return out, ok


def cmd_solve(opts):
    m = opts["grid"]
    pert = apde.Perturbation.zero()
    if opts.get("beta"):
        try:
            pert = apde.Perturbation(form_from_json(_load_json(opts["beta"])))
        except (FormParseError, ValueError) as exc:
            raise CliError(EXIT_PARSE, f"bad beta: {exc}") from exc
    if opts.get("boundary"):
        obj = _load_json(opts["boundary"])
        if "f" in obj:
            state = apde.GraphState.from_json(obj)
        else:
            A = np.array(obj["linear"], float)
            state = apde.GraphState.from_function(m, lambda X: X @ A.T, interior=0.0)
    else:
        A = apde.associative_linear_map(np.random.default_rng(opts["seed"]))
        state = apde.GraphState.from_function(m, lambda X: X @ A.T, interior=0.0)
    res = apde.newton_solve(state, pert, opts["tol"], opts["max_iter"])
    out = res.to_json()
    if opts.get("trace"):
        Path(opts["trace"]).write_text(json.dumps(out["trace"], sort_keys=True, indent=1))
    if opts.get("state_out"):
        Path(opts["state_out"]).write_text(json.dumps(res.state.to_json(), sort_keys=True))
    return out, res.converged


def cmd_paper(opts):
    rep = paper_examples()
    return rep, all(e["pass"] for e in rep["examples"])


# coordinate examples --------------------------------------------------------------------

def paper_examples(rho=None, omega_twisted=None, omega_std=None, K=0.1):
    """Re-run the coordinate computations of the cylinder examples.

    Fixtures can be overridden to confirm that a perturbed input fails the
    entry that depends on it.
    """
    rho = models.cylinder_rho() if rho is None else rho
    omt = models.twisted_omega() if omega_twisted is None else omega_twisted
    oms = models.kahler() if omega_std is None else omega_std
    examples = []

    def entry(name, expected, computed, passed):
        examples.append({"name": name, "expected": expected, "computed": computed, "pass": bool(passed)})

    expected = parse_form("dx63254 + dx25416 + dx41632")
    got = wedge(omt, rho)
    entry("twisted pair: omega ^ rho is nonzero", render_form(expected), render_form(got), got == expected)

    phi = models.phi_from_pair(rho, omt)
    e1 = np.eye(7)[1]
    c = interior(e1, phi)
    top = wedge(wedge(c, c), phi)
    entry("twisted pair: (d/dx1 ⌟ phi)^2 ^ phi vanishes", "0", render_form(top, base=0), top.is_zero())
    try:
        g2.metric_from_phi(phi)
        unstable, witness = False, None
    except g2.DegenerateStructure as exc:
        unstable, witness = True, exc.witness
    entry(
        "twisted pair: cylinder 3-form is unstable with witness d/dx1",
        [0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        None if witness is None else _floats(witness),
        unstable and witness is not None and np.array_equal(witness, e1),
    )

    pert = rho + K * parse_form("dx123", dim=6)
    expected = Form.basis(6, (0, 1, 2, 4, 5), K)
    got = wedge(pert, oms)
    entry(f"modified pair: (rho + {K} dx123) ^ omega", render_form(expected), render_form(got), got == expected)

    phi_p = models.phi_from_pair(pert, oms)
    try:
        st = g2.metric_from_phi(phi_p)
        g30 = float(st.g[3, 0])
        top = wedge(wedge(interior(np.eye(7)[3], phi_p), interior(np.eye(7)[0], phi_p)), phi_p).top_coefficient()
        identity = abs(top - 6 * g30 * st.vol_coeff) <= 1e-12
        entry("modified pair: stable with g(d/dx3, d/dx0) != 0", "nonzero", g30, g30 != 0.0 and identity)
    except g2.DegenerateStructure:
        entry("modified pair: stable with g(d/dx3, d/dx0) != 0", "nonzero", "unstable", False)
    return {"examples": examples}


# argument parsing ------------------------------------------------------------------------

VERBS = {
    "classify": cmd_classify,
    "dual": cmd_dual,
    "metric": cmd_metric,
    "su3-check": cmd_su3,
    "g2pair-check": cmd_g2pair,
    "tame-check": cmd_tame,
    "assoc-check": cmd_assoc,
    "sl-residual": cmd_sl,
    "symbol-check": cmd_symbol,
    "volume-check": cmd_volume,
    "solve-graph": cmd_solve,
    "paper-examples": cmd_paper,
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    S = argparse.SUPPRESS
    common.add_argument("--seed", type=int, default=S)
    common.add_argument("--samples", type=int, default=S)
    common.add_argument("--tol", type=float, default=S)
    common.add_argument("--grid", type=int, default=S)
    common.add_argument("--dim", type=int, default=S)
    common.add_argument("--out", default=S, help="write the JSON report here")
    common.add_argument("--json", action="store_true", default=S, help="print the full JSON report")
    common.add_argument("--config", default=S, help="JSON file with default options")

    p = argparse.ArgumentParser(prog="g2kit", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="verb", required=True)
    for verb in ("classify", "dual", "metric"):
        sp_ = sub.add_parser(verb, parents=[common])
        sp_.add_argument("form")
    sp_ = sub.add_parser("su3-check", parents=[common])
    sp_.add_argument("rho")
    sp_.add_argument("omega")
    sp_ = sub.add_parser("g2pair-check", parents=[common])
    sp_.add_argument("rho")
    sp_.add_argument("second")
    sp_ = sub.add_parser("tame-check", parents=[common])
    sp_.add_argument("phi")
    sp_.add_argument("--psi", default=S)
    sp_ = sub.add_parser("assoc-check", parents=[common])
    sp_.add_argument("vectors", nargs=3)
    sp_.add_argument("--phi", default=S)
    sp_ = sub.add_parser("sl-residual", parents=[common])
    sp_.add_argument("--pair", default=S)
    sp_.add_argument("--patch", default=S)
    sp_.add_argument("--lambda", dest="lambda", default=S)
    sp_ = sub.add_parser("symbol-check", parents=[common])
    sp_.add_argument("--sweep", type=int, default=S)
    sub.add_parser("volume-check", parents=[common])
    sp_ = sub.add_parser("solve-graph", parents=[common])
    sp_.add_argument("--beta", default=S)
    sp_.add_argument("--boundary", default=S)
    sp_.add_argument("--max-iter", dest="max_iter", type=int, default=S)
    sp_.add_argument("--trace", default=S)
    sp_.add_argument("--state-out", dest="state_out", default=S)
    sub.add_parser("paper-examples", parents=[common])
    return p


def resolve_options(ns) -> dict:
    given = vars(ns)
    opts = dict(DEFAULTS)
    if "config" in given:
        cfg = _load_json(given["config"])
        if not isinstance(cfg, dict):
            raise CliError(EXIT_PARSE, "config must be a JSON object")
        unknown = set(cfg) - set(DEFAULTS)
        if unknown:
            raise CliError(EXIT_PARSE, f"unknown config keys: {sorted(unknown)}")
        opts.update(cfg)
    opts.update({k: v for k, v in given.items() if k != "config"})
    return opts


def _summary(verb, ok, report):
    return f"{verb}: {'PASS' if ok else 'FAIL'}"


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_PARSE if exc.code else EXIT_OK
    try:
        opts = resolve_options(ns)
        report, ok = VERBS[opts["verb"]](opts)
        code = EXIT_OK if ok else EXIT_NUMERIC
    except CliError as exc:
        report, ok, code = {"error": str(exc)}, False, exc.code
        opts = dict(vars(ns))
    except (psl.PreconditionError, stable6.NotPositiveError, stable6.NoDualError) as exc:
        report, ok, code = {"error": str(exc)}, False, EXIT_PRECONDITION
        opts = dict(vars(ns))
    except ValueError as exc:
        report, ok, code = {"error": str(exc)}, False, EXIT_PRECONDITION
        opts = dict(vars(ns))
    doc = {"verb": opts.get("verb"), "options": opts, "pass": ok, "exit_code": code, "report": report}
    text = json.dumps(doc, sort_keys=True, indent=1, default=_json_default)
    if opts.get("out"):
        Path(opts["out"]).write_text(text + "\n")
    if opts.get("json"):
        print(text)
    else:
        print(_summary(opts.get("verb"), ok, report) if "error" not in report else f"error: {report['error']}")
    return code


def _json_default(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, np.bool_):
        return bool(x)
    raise TypeError(f"not serializable: {type(x)}")


if __name__ == "__main__":
    sys.exit(main())
