"""Command-line entry point.

Usage::

    nonscat <group> <action> [config.json] [--out DIR]
    nonscat recipe run <name> [--out DIR] [--fast]
    nonscat recipe list

Exit codes: 0 when every check passes, 1 when a check fails or a module
reports a construction error, 2 for an invalid configuration, 3 for any
other internal error.
"""
from __future__ import annotations

import argparse
import json
import sys
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from .errors import ConfigInvalid, NonScatError
from .recipes import RunReport, _fmt, _write, list_recipes, run_recipe

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG, EXIT_INTERNAL = 0, 1, 2, 3


def load_schema() -> dict:
    return json.loads(resources.files("nonscat").joinpath("schema/config.schema.json").read_text())


def validate_config(cfg) -> dict:
    """Validate ``cfg`` against the shipped schema; raises ``ConfigInvalid`` naming the failing path."""
    v = jsonschema.Draft202012Validator(load_schema())
    errors = sorted(v.iter_errors(cfg), key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        path = "config" + "".join(f"[{p!r}]" if isinstance(p, int) else f".{p}" for p in e.absolute_path)
        raise ConfigInvalid(f"{path}: {e.message}")
    return cfg


def load_config(path) -> dict:
    if path is None:
        return {}
    try:
        cfg = json.loads(Path(path).read_text())
    except OSError as e:
        raise ConfigInvalid(f"cannot read {path}: {e.strerror}") from e
    except json.JSONDecodeError as e:
        raise ConfigInvalid(f"{path}: not valid JSON ({e.msg} at line {e.lineno})") from e
    return validate_config(cfg)


def _need(cfg, *keys):
    missing = [k for k in keys if k not in cfg]
    if missing:
        raise ConfigInvalid(f"config: missing required key(s) {', '.join(missing)}")
    return [cfg[k] for k in keys]


def _build(kind, spec):
    """Construct a field, medium or domain, mapping malformed descriptions to ``ConfigInvalid``."""
    from .fields import field_from_dict
    from .geometry import domain_from_dict
    from .media import medium_from_dict

    fn = {"field": field_from_dict, "medium": medium_from_dict, "domain": domain_from_dict}[kind]
    try:
        return fn(spec)
    except (KeyError, TypeError, ValueError) as e:
        if isinstance(e, NonScatError) and not isinstance(e, ConfigInvalid):
            raise
        raise ConfigInvalid(f"config.{kind}: {e}") from e


def _field(cfg, key="field"):
    return _build("field", _need(cfg, key)[0])


def _samples(cfg):
    s = cfg.get("samples", {})
    t = cfg.get("tolerances", {})
    return dict(n_interior=s.get("interior", 10_000), n_boundary=s.get("boundary", 2000), seed=s.get("seed", 0),
                pde_tol=t.get("pde", 1e-6), bc_tol=t.get("bc", 1e-6))


def _axis(spec):
    a, b, n = spec
    return np.linspace(a, b, int(n))


# -- field -------------------------------------------------------------------


def field_eval(cfg, rep, out):
    from .fields import helmholtz_residual

    f = _field(cfg)
    pts = np.asarray(_need(cfg, "points")[0], dtype=float)
    v, g, H = f.jet(pts, strict=True)
    rows = [json.dumps(_fmt({"x": p[0], "y": p[1], "re": np.real(a), "im": np.imag(a),
                             "gx": np.real(gg[0]), "gy": np.real(gg[1])}), sort_keys=True)
            for p, a, gg in zip(pts, v, g)]
    _write(out, "values.jsonl", "\n".join(rows) + "\n", rep)
    res = float(np.max(np.abs(helmholtz_residual(f, pts))))
    scale = max(1.0, float(np.max(np.abs(v))) * f.k ** 2)
    rep.below("Helmholtz residual / scale", res / scale, 1e-8)


def field_grid(cfg, rep, out):
    from .fields import grid_csv

    f = _field(cfg)
    g = _need(cfg, "grid")[0]
    text = grid_csv(f, _axis(g["x"]), _axis(g["y"]))
    _write(out, "grid.csv", text, rep)
    rep.check("rows written", text.count("\n") - 1, True)


# -- nodal -------------------------------------------------------------------


def nodal_certify(cfg, rep, out):
    from .nodal import NEGATIVE, POSITIVE, certify_signs

    f = _field(cfg)
    window, h = _need(cfg, "window", "h")
    cert = certify_signs(f, window, h)
    _write(out, "signs.csv", cert.to_csv(), rep)
    rep.check("positive cells", cert.count(POSITIVE), True)
    rep.check("negative cells", cert.count(NEGATIVE), True)


def nodal_trace(cfg, rep, out):
    from .nodal import seed_on_segment, trace_fidelity, trace_nodal

    f = _field(cfg)
    if "seed" in cfg:
        seed = np.asarray(cfg["seed"], dtype=float)
    else:
        p0, p1 = _need(cfg, "segment")[0]
        seed = seed_on_segment(f, p0, p1)
    step = cfg.get("step", 1e-2)
    c = trace_nodal(f, seed, step, window=cfg.get("window"))
    _write(out, "curve.jsonl", c.to_jsonl(), rep)
    _write(out, "curve.svg", c.to_svg(), rep)
    rep.check("closed", c.closed, True)
    rep.below("max |v| on curve", trace_fidelity(f, c)[0], 1e-10)


def nodal_critical(cfg, rep, out):
    from .errors import CornerLawViolation
    from .nodal import corner_angle_check, find_critical_points

    f = _field(cfg)
    cps = find_critical_points(f, _need(cfg, "window")[0])
    rows = []
    for cp in cps:
        d = cp.to_dict()
        if cp.resolved and cp.order >= 2:
            try:
                chk = corner_angle_check(cp, f)
                d["corner_check"] = chk
                rep.below(f"lattice deviation at {np.round(cp.location, 6).tolist()}", chk["max_deviation"], 1e-6)
            except CornerLawViolation as e:
                rep.check(f"corner law at {np.round(cp.location, 6).tolist()}", str(e), False)
        rows.append(d)
    _write(out, "critical.json", json.dumps(_fmt(rows), sort_keys=True, indent=2), rep)
    rep.check("critical points", len(cps), True)


# -- flow --------------------------------------------------------------------


def flow_stationary(cfg, rep, out):
    from .flow import find_stationary

    f = _field(cfg)
    sps = find_stationary(f, _need(cfg, "window")[0])
    _write(out, "stationary.json", json.dumps(_fmt([s.to_dict() for s in sps]), sort_keys=True, indent=2), rep)
    rep.check("stationary points", len(sps), True)


def flow_trace(cfg, rep, out):
    from .flow import full_orbit, neumann_flux_check, orbit_monotone, trace_orbit

    f = _field(cfg)
    start = _need(cfg, "start")[0]
    d = cfg.get("direction", "full")
    o = full_orbit(f, start, window=cfg.get("window")) if d == "full" else trace_orbit(f, start, d, window=cfg.get("window"))
    _write(out, "orbit.jsonl", o.to_jsonl(f), rep)
    _write(out, "orbit.svg", o.to_curve().to_svg(), rep)
    rep.below("flux across orbit", neumann_flux_check(f, o), 1e-8)
    rep.check("v monotone along orbit", orbit_monotone(f, o), orbit_monotone(f, o), "true")


def flow_domain(cfg, rep, out):
    from .flow import assemble_neumann_domain, full_orbit

    f = _field(cfg)
    orbits = [full_orbit(f, p, window=cfg.get("window")) for p in _need(cfg, "orbit_points")[0]]
    dom = assemble_neumann_domain(orbits)
    _write(out, "domain.svg", dom.boundary.to_svg(), rep)
    info = {"area": dom.area, "apertures": dom.apertures, "cusps": len(dom.cusp_tags),
            "junctions": [{"point": p, "aperture": a} for p, a in dom.junctions]}
    _write(out, "domain.json", json.dumps(_fmt(info), sort_keys=True, indent=2), rep)
    rep.check("area", dom.area, dom.area > 0, "> 0")


# -- spectra -----------------------------------------------------------------


def spectra_cavity(cfg, rep, out):
    from .spectra import CavityProblem, verify_cavity_eigenpair

    f = _field(cfg)
    dom = _build("domain", _need(cfg, "domain")[0])
    bc, k = _need(cfg, "bc", "k")
    r = verify_cavity_eigenpair(CavityProblem(dom, bc, k), f, **_samples(cfg))
    _write(out, "eigenpair.json", r.to_json(), rep)
    rep.check("cavity eigenpair", r.to_dict(), r.verdict, "verdict true")


def spectra_itep(cfg, rep, out):
    from .spectra import itep_from_cavity, verify_itep

    k = _need(cfg, "k")[0]
    if "u" in cfg:
        u, v = _field(cfg, "u"), _field(cfg, "v")
        medium = _build("medium", _need(cfg, "medium")[0])
    else:
        bc, a = _need(cfg, "bc", "a")
        u, v = itep_from_cavity(_field(cfg), bc, a)
        from .media import constant_medium

        medium = constant_medium(_build("domain", _need(cfg, "domain")[0]), a)
    r = verify_itep(medium, k, u, v, **_samples(cfg))
    _write(out, "itep.json", r.to_json(), rep)
    rep.check("transmission pair", r.to_dict(), r.verdict, "verdict true")


def spectra_sector(cfg, rep, out):
    from .spectra import sector_verdict

    s = _need(cfg, "sector")[0]
    v = sector_verdict(s["alpha"], s.get("ell", 1.0), cfg.get("bc", "dirichlet"), s.get("count", 10))
    v = {**v, "entries": [e.to_dict() for e in v["entries"]]}
    _write(out, "sector.json", json.dumps(_fmt(v), sort_keys=True, indent=2), rep)
    rep.check("all extendable", v["all_extendable"], True)
    rep.check("any extendable", v["any_extendable"], True)


# -- media -------------------------------------------------------------------


def media_build(cfg, rep, out):
    med = _build("medium", _need(cfg, "medium")[0])
    _write(out, "medium.json", med.to_json(), rep)
    if "grid" in cfg:
        _write(out, "medium.csv", med.to_csv(_axis(cfg["grid"]["x"]), _axis(cfg["grid"]["y"])), rep)
    a = med.check_assumptions()
    rep.check("assumptions", a, a["ok"], "symmetric, elliptic, q > 0")


def media_check(cfg, rep, out):
    from .media import check_structural_identities

    med = _build("medium", _need(cfg, "medium")[0])
    if med.psi is None:
        raise ConfigInvalid("config.medium: structural identities need a transformation medium")
    s = check_structural_identities(med)
    _write(out, "identities.json", json.dumps(_fmt(s), sort_keys=True, indent=2), rep)
    rep.below("detLaw", s["detLaw"], 1e-10)
    rep.below("boundaryNu", s["boundaryNu"], 1e-8)


def media_examples(cfg, rep, out):
    from .media import build_explicit_example
    from .spectra import verify_itep

    ex_cfg = _need(cfg, "example")[0]
    try:
        ex = build_explicit_example(ex_cfg["name"], ex_cfg.get("params"))
    except (TypeError, ValueError) as e:
        if isinstance(e, NonScatError):
            raise
        raise ConfigInvalid(f"config.example: {e}") from e
    gens = ex_cfg.get("generator", 1)
    for g in gens if isinstance(gens, list) else [gens]:
        k, u, v = ex.generator(g)
        r = verify_itep(ex.medium, k, u, v, **_samples(cfg))
        rep.check(f"generator {g} at k={k:.12g}", r.to_dict(), r.verdict, "verdict true")


# -- scatter -----------------------------------------------------------------


def _solver_cfg(cfg, h):
    from .scatter import SolverConfig

    return SolverConfig(h=h, **cfg.get("solver", {}))


def scatter_solve(cfg, rep, out):
    from .scatter import assemble_and_solve

    med = _build("medium", _need(cfg, "medium")[0])
    ui = _field(cfg, "incident")
    k, h = _need(cfg, "k", "h")
    r = assemble_and_solve(med, ui, k, _solver_cfg(cfg, h))
    _write(out, "us.csv", r.field_csv(), rep)
    _write(out, "result.json", json.dumps(_fmt(r.to_dict()), sort_keys=True, indent=2), rep)
    lim = cfg.get("expect", {}).get("max_rel_scatter")
    if lim is None:
        rep.check("relScatter", r.rel_scatter, True)
    else:
        rep.below("relScatter", r.rel_scatter, lim)


def scatter_study(cfg, rep, out):
    from .scatter import refinement_study

    med = _build("medium", _need(cfg, "medium")[0])
    ui = _field(cfg, "incident")
    k, hs = _need(cfg, "k", "h_list")
    st = refinement_study(med, ui, k, hs, _solver_cfg(cfg, max(hs)))
    _write(out, "refinement.json", st.to_json(), rep)
    want = cfg.get("expect", {}).get("verdict")
    rep.check("verdict", st.verdict, want is None or st.verdict == want, want or "")


COMMANDS = {
    ("field", "eval"): field_eval, ("field", "grid"): field_grid,
    ("nodal", "certify"): nodal_certify, ("nodal", "trace"): nodal_trace, ("nodal", "critical"): nodal_critical,
    ("flow", "stationary"): flow_stationary, ("flow", "trace"): flow_trace, ("flow", "domain"): flow_domain,
    ("spectra", "cavity"): spectra_cavity, ("spectra", "itep"): spectra_itep, ("spectra", "sector"): spectra_sector,
    ("media", "build"): media_build, ("media", "check"): media_check, ("media", "examples"): media_examples,
    ("scatter", "solve"): scatter_solve, ("scatter", "study"): scatter_study,
}


def run(group: str, action: str, config=None, out=None) -> RunReport:
    """Run one subcommand on a config (path or dict) and return its report."""
    cfg = validate_config(config) if isinstance(config, dict) else load_config(config)
    rep = RunReport(f"{group} {action}", f"{group} {action}")
    COMMANDS[(group, action)](cfg, rep, out)
    _write(out, "report.json", rep.to_json(), rep)
    return rep


def _parser():
    p = argparse.ArgumentParser(prog="nonscat", description="Construct and certify non-scattering configurations.")
    sub = p.add_subparsers(dest="group", required=True)
    for group in sorted({g for g, _ in COMMANDS}):
        gp = sub.add_parser(group)
        gs = gp.add_subparsers(dest="action", required=True)
        for g, action in COMMANDS:
            if g == group:
                ap = gs.add_parser(action)
                ap.add_argument("config", nargs="?", help="JSON config file")
                ap.add_argument("--out", help="directory for artifacts")
    rp = sub.add_parser("recipe")
    rs = rp.add_subparsers(dest="action", required=True)
    rr = rs.add_parser("run")
    rr.add_argument("name")
    rr.add_argument("--out", help="directory for artifacts")
    rr.add_argument("--fast", action="store_true", help="coarser grids and fewer instances")
    rs.add_parser("list")
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.group == "recipe":
            if args.action == "list":
                for name, topic in list_recipes():
                    print(f"{name}\t{topic}")
                return EXIT_PASS
            try:
                rep = run_recipe(args.name, args.out, args.fast)
            except KeyError as e:
                raise ConfigInvalid(e.args[0]) from e
        else:
            rep = run(args.group, args.action, args.config, args.out)
    except ConfigInvalid as e:
        print(f"ConfigInvalid: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except NonScatError as e:
        print(f"{type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_FAIL
    except Exception as e:  # noqa: BLE001 - reported as an internal error
        print(f"internal error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_INTERNAL
    print(rep.to_json())
    return EXIT_PASS if rep.passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
