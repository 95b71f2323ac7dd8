"""
Experiment runner: ``jostkit <command> --config cfg.json --out dir``.

Each command validates its JSON config, runs, and writes one or more CSV
files (header row, 17 significant digits) plus ``manifest.json`` with the
config echo, every resolved parameter, the toolkit version and wall time.

Exit status: 0 on success, 2 on a config/schema problem, 3 on a numerical
failure (or a failed ``--verify`` check).
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from .errors import InvalidParameter, JostkitError, SchemaError

EXIT_OK, EXIT_SCHEMA, EXIT_NUMERICAL = 0, 2, 3

POS = {"type": "number", "exclusiveMinimum": 0}
NONNEG = {"type": "number", "minimum": 0}
NUMBER = {"type": "number"}
POS_LIST = {"type": "array", "items": POS, "minItems": 1}
RANGE = {
    "type": "object",
    "properties": {"start": NUMBER, "stop": NUMBER, "num": {"type": "integer", "minimum": 1}},
    "required": ["start", "stop", "num"],
    "additionalProperties": False,
}
SAMPLES = {"oneOf": [{"type": "array", "items": NUMBER, "minItems": 1}, RANGE]}
POTENTIAL = {"type": "object", "properties": {"kind": {"type": "string"}}, "required": ["kind"]}
BOX = {
    "type": "object",
    "properties": {
        "re_min": NUMBER,
        "re_max": NUMBER,
        "im_min": NUMBER,
        "im_max": NUMBER,
        "contour_points": {"type": "integer", "minimum": 8},
    },
    "required": ["re_min", "re_max", "im_min"],
    "additionalProperties": False,
}
CHI = {
    "type": "object",
    "properties": {"radius": POS, "inner": NONNEG, "amplitude": POS},
    "required": ["radius"],
    "additionalProperties": False,
}
WINDOW = {
    "type": "object",
    "properties": {"center": POS, "halfwidth": POS, "smoothing": POS},
    "required": ["center", "halfwidth"],
    "additionalProperties": False,
}
GRID = {
    "type": "object",
    "properties": {"L": POS, "dx": POS, "margin": NONNEG, "max_dx": POS, "kdx": POS},
    "additionalProperties": False,
}


def _schema(props, required):
    props = dict(props)
    props.setdefault("command", {"type": "string"})
    props.setdefault("grid", GRID)
    # informational; echoed in the manifest so norm scales can be read against it
    props.setdefault("trapping", {"enum": ["non-trapping", "barrier-top", "well-in-island"]})
    return {"type": "object", "properties": props, "required": required, "additionalProperties": False}


SCHEMAS = {
    "smatrix": _schema({"potential": POTENTIAL, "h_list": POS_LIST, "lambdas": SAMPLES}, ["potential", "h_list", "lambdas"]),
    "ssf": _schema({"potential": POTENTIAL, "h": POS, "lambdas": SAMPLES}, ["potential", "h", "lambdas"]),
    "weyl": _schema(
        {"potential": POTENTIAL, "h_list": POS_LIST, "lambdas": SAMPLES, "integrated": {"type": "boolean"}},
        ["potential", "lambdas"],
    ),
    "resonances": _schema({"potential": POTENTIAL, "h_list": POS_LIST, "box": BOX}, ["potential", "h_list", "box"]),
    "residues": _schema({"potential": POTENTIAL, "h": POS, "box": BOX, "chi": CHI}, ["potential", "h", "box", "chi"]),
    "classical": _schema(
        {
            "potential": POTENTIAL,
            "initial": {
                "type": "object",
                "properties": {"x": NUMBER, "xi": NUMBER},
                "required": ["x", "xi"],
                "additionalProperties": False,
            },
            "t": POS,
            "dt": POS,
            "stride": {"type": "integer", "minimum": 1},
        },
        ["potential", "initial", "t"],
    ),
    "homoclinic": _schema(
        {
            "potential": POTENTIAL,
            "h": POS,
            "halfwidth": POS,
            "num": {"type": "integer", "minimum": 5},
            "truncation": POS,
            "loop_phase": NUMBER,
            "peaks": {"type": "integer", "minimum": 1},
        },
        ["potential", "h"],
    ),
    "evolve": _schema(
        {
            "potential": POTENTIAL,
            "h": POS,
            "L_box": POS,
            "n_points": {"type": "integer", "minimum": 3},
            "max_kdx": POS,
            "window": WINDOW,
            "chi": CHI,
            "t_list": SAMPLES,
            "K": {"type": "integer", "minimum": 0},
            "box": BOX,
        },
        ["potential", "h", "L_box", "n_points", "window", "chi", "t_list"],
    ),
    "compare-resolvent": _schema(
        {
            "potential": POTENTIAL,
            "R_list": POS_LIST,
            "h_list": POS_LIST,
            "lambda": POS,
            "chi": CHI,
            "s": {"type": "number", "exclusiveMinimum": 0.5},
            "outer_factor": {"type": "number", "exclusiveMinimum": 1},
            "extent": POS,
        },
        ["potential", "R_list", "h_list", "lambda", "chi"],
    ),
    "compare-propagator": _schema(
        {
            "potential": POTENTIAL,
            "R_list": POS_LIST,
            "h_list": POS_LIST,
            "window": WINDOW,
            "chi": CHI,
            "t_list": SAMPLES,
            "n_points": {"type": "integer", "minimum": 3},
            "max_kdx": POS,
            "outer_factor": {"type": "number", "exclusiveMinimum": 1},
        },
        ["potential", "R_list", "h_list", "window", "chi", "t_list"],
    ),
    "inequalities": _schema(
        {
            "potential": POTENTIAL,
            "h_list": POS_LIST,
            "lambda": POS,
            "resonance_window": {"type": "array", "items": NUMBER, "minItems": 2, "maxItems": 2},
            "s": {"type": "number", "exclusiveMinimum": 0.5},
            "R0": POS,
            "extent": POS,
        },
        ["potential", "h_list"],
    ),
}


# -- config helpers ---------------------------------------------------------


def validate(command: str, cfg) -> None:
    """jsonschema validation; the first error becomes a SchemaError with a
    dotted field path."""
    validator = jsonschema.Draft202012Validator(SCHEMAS[command])
    errors = sorted(validator.iter_errors(cfg), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        path = ".".join(str(p) for p in err.absolute_path) or "<root>"
        raise SchemaError(path, err.message)
    from .potentials import from_config

    try:
        from_config(cfg["potential"])
    except (InvalidParameter, TypeError) as exc:
        raise SchemaError("potential", str(exc)) from None


def samples(spec) -> np.ndarray:
    if isinstance(spec, dict):
        return np.linspace(spec["start"], spec["stop"], spec["num"])
    return np.asarray(spec, dtype=float)


def _grid(cfg):
    from .schrodinger1d import GridSpec

    return GridSpec(**cfg["grid"]) if "grid" in cfg else None


def _potential(cfg):
    from .potentials import from_config

    return from_config(cfg["potential"])


def _chi(block):
    from .cutoff import CutoffSpec

    return CutoffSpec(block["radius"], block.get("inner", 0.0), block.get("amplitude", 1.0))


def _window(block):
    from .propagator import EnergyWindow

    return EnergyWindow(block["center"], block["halfwidth"], block.get("smoothing", 0.5))


def _box(block):
    from .resonances import GUARD, SearchBox

    return SearchBox(block["re_min"], block["re_max"], block["im_min"], block.get("im_max", GUARD), block.get("contour_points", 256))


def fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def _map(fn, items, jobs: int):
    """Ordered map; results come back in input order whatever ``jobs`` is."""
    items = list(items)
    if jobs <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


class Result:
    def __init__(self):
        self.files = []
        self.parameters = {}
        self.summary = {}
        self.checks = []

    def check(self, name, passed, value):
        self.checks.append({"name": name, "passed": bool(passed), "value": float(value)})


# -- cell workers (module level so they pickle) -----------------------------


def _smatrix_cell(args):
    from .scattering import refined_phase, smatrix, ssf_derivative

    cfg, h = args
    pot, grid = _potential(cfg), _grid(cfg)
    lams = np.sort(samples(cfg["lambdas"]))
    # the sample grid is coarse on the h scale, so the phase is tracked by bisection
    theta, _ = refined_phase(pot, lams, h, grid)
    rows = []
    for lam, th in zip(lams, theta):
        r = smatrix(pot, float(lam), h, grid)
        m = r.matrix
        deriv = ssf_derivative(pot, float(lam), h, grid=grid)
        entries = [v for z in m.ravel() for v in (z.real, z.imag)]
        rows.append([lam, h, *entries, th, deriv, abs(r.det), r.unitarity_defect()])
    return rows


def _resonance_cell(args):
    from .resonances import find_resonances

    cfg, h = args
    found = find_resonances(_potential(cfg), _box(cfg["box"]), h, _grid(cfg))
    found = sorted(found, key=lambda r: (-r.z.imag, r.z.real))
    return [[h, r.z.real, r.z.imag, -2 * r.z.imag, r.newton_residual, r.kind.value, r.multiplicity] for r in found]


def _compare_resolvent_cell(args):
    from .comparison import ComparisonRun, resolvent_difference

    cfg, R, h = args
    run = _comparison_run(cfg)
    return resolvent_difference(run, R, h)


def _compare_propagator_cell(args):
    from .comparison import propagator_difference
    from .propagator import MAX_KDX

    cfg, R, h = args
    run = _comparison_run(cfg)
    return propagator_difference(
        run, R, h, samples(cfg["t_list"]), cfg.get("n_points", 4096), max_kdx=cfg.get("max_kdx", MAX_KDX)
    )


def _comparison_run(cfg):
    from .comparison import ComparisonRun

    return ComparisonRun(
        base=_potential(cfg),
        R_list=tuple(cfg["R_list"]),
        h_list=tuple(cfg["h_list"]),
        lam=cfg.get("lambda", cfg["window"]["center"] if "window" in cfg else 1.0),
        chi=_chi(cfg["chi"]),
        weight_s=cfg.get("s", 1.0),
        outer_factor=cfg.get("outer_factor", 4.0),
        weight_extent=cfg.get("extent", 100.0),
        window=_window(cfg["window"]) if "window" in cfg else None,
    )


def _inequality_cell(args):
    from .comparison import weighted_inequalities
    from .resonances import lowest_resonance

    cfg, h = args
    pot = _potential(cfg)
    if "resonance_window" in cfg:
        res = lowest_resonance(pot, tuple(cfg["resonance_window"]), h, _grid(cfg))
        if res is None:
            raise InvalidParameter(f"no resonance in {cfg['resonance_window']} at h={h}")
        lam = res.z.real
    else:
        lam = cfg["lambda"]
    r = weighted_inequalities(pot, lam, h, cfg.get("s", 1.0), cfg.get("R0"), extent=cfg.get("extent", 100.0))
    return [
        h,
        lam,
        r.interior_norm,
        r.exterior_norm,
        r.interpolation_lhs,
        r.interpolation_rhs,
        r.interpolation_ratio,
        r.a17_ratio,
        r.cutoff_norm,
        r.equivalence_ratio,
    ]


# -- commands ---------------------------------------------------------------


def cmd_smatrix(cfg, out: Path, jobs: int, res: Result):
    blocks = _map(_smatrix_cell, [(cfg, h) for h in cfg["h_list"]], jobs)
    rows = [r for b in blocks for r in b]
    entries = [f"{part}S{a}{b}" for a in "01" for b in "01" for part in ("Re", "Im")]
    header = ["lambda", "h", *entries, "theta", "ssf_deriv", "abs_det", "unitarity_defect"]
    write_csv(out / "smatrix.csv", header, rows)
    res.files.append("smatrix.csv")
    worst = max(r[-1] for r in rows)
    res.check("unitarity |S*S - I| <= 1e-8", worst <= 1e-8, worst)
    worst_det = max(abs(r[-2] - 1) for r in rows)
    res.check("||det S| - 1| <= 1e-8", worst_det <= 1e-8, worst_det)


def cmd_ssf(cfg, out, jobs, res):
    from .scattering import phase_from_determinant, ssf_curve, unwrap_phase

    pot, h, grid = _potential(cfg), cfg["h"], _grid(cfg)
    lams = np.sort(samples(cfg["lambdas"]))
    theta = unwrap_phase(lams, phase_from_determinant(pot, lams, h, grid))
    deriv = ssf_curve(pot, lams, h, grid)
    write_csv(out / "ssf.csv", ["lambda", "theta", "ssf_deriv"], zip(lams, theta, deriv))
    res.files.append("ssf.csv")
    res.check("phase finite", np.all(np.isfinite(theta)), float(np.max(np.abs(theta))))


def cmd_weyl(cfg, out, jobs, res):
    from .scattering import integrated_ssf, weyl_leading

    pot = _potential(cfg)
    lams = samples(cfg["lambdas"])
    rows = []
    integrated = cfg.get("integrated", False)
    res.parameters["integrated"] = integrated
    for lam in lams:
        s0 = weyl_leading(pot, float(lam))
        if integrated:
            for h in cfg.get("h_list", []):
                s = integrated_ssf(pot, float(lam), h)
                rows.append([lam, h, s0, s, h * s])
        else:
            rows.append([lam, "", s0, "", ""])
    write_csv(out / "weyl.csv", ["lambda", "h", "weyl_leading", "integrated_ssf", "h_times_ssf"], rows)
    res.files.append("weyl.csv")


def cmd_resonances(cfg, out, jobs, res):
    blocks = _map(_resonance_cell, [(cfg, h) for h in cfg["h_list"]], jobs)
    rows = [r for b in blocks for r in b]
    write_csv(out / "resonances.csv", ["h", "Re_z", "Im_z", "width", "newton_residual", "kind", "multiplicity"], rows)
    res.files.append("resonances.csv")
    worst = max((r[4] for r in rows), default=0.0)
    res.check("newton residuals < 1e-6", worst < 1e-6, worst)


def cmd_residues(cfg, out, jobs, res):
    from .resonances import find_resonances, residue_projector

    pot, h, grid = _potential(cfg), cfg["h"], _grid(cfg)
    chi = _chi(cfg["chi"])
    rows = []
    for r in sorted(find_resonances(pot, _box(cfg["box"]), h, grid), key=lambda r: (-r.z.imag, r.z.real)):
        p = residue_projector(pot, r, chi, grid)
        dx = p.x[1] - p.x[0]
        norm = float(np.linalg.norm(p.weighted(chi, dx), 2))
        rows.append([h, r.z.real, r.z.imag, p.rank_defect, p.symmetry_defect(), norm])
    write_csv(out / "residues.csv", ["h", "Re_z", "Im_z", "rank_defect", "symmetry_defect", "weighted_norm"], rows)
    res.files.append("residues.csv")
    worst = max((r[3] for r in rows), default=0.0)
    res.check("projector rank defect <= 1e-8", worst <= 1e-8, worst)


def cmd_classical(cfg, out, jobs, res):
    from .classical import PhasePoint, hamiltonian, trajectory

    pot = _potential(cfg)
    p0 = PhasePoint(cfg["initial"]["x"], cfg["initial"]["xi"])
    dt, stride = cfg.get("dt", 1e-3), cfg.get("stride", 10)
    res.parameters.update(dt=dt, stride=stride)
    ts, xs, xis = trajectory(pot, p0, cfg["t"], dt, stride)
    energy = xis**2 + pot(xs)
    write_csv(out / "trajectory.csv", ["t", "x", "xi", "energy"], zip(ts, xs, xis, energy))
    res.files.append("trajectory.csv")
    drift = float(np.max(np.abs(energy - hamiltonian(pot, p0))))
    res.check("energy drift <= 1e-8", drift <= 1e-8, drift)


def cmd_homoclinic(cfg, out, jobs, res):
    from .classical import homoclinic_data
    from .potentials import truncate
    from .scattering import ssf_curve
    from .semiclassics import compare_peaks, ssf_homoclinic

    pot, h = _potential(cfg), cfg["h"]
    halfwidth, num = cfg.get("halfwidth", 5.0), cfg.get("num", 4001)
    radius, loop_phase = cfg.get("truncation", 6.0), cfg.get("loop_phase", 0.0)
    res.parameters.update(halfwidth=halfwidth, num=num, truncation=radius, loop_phase=loop_phase)
    hd = homoclinic_data(pot)
    with open(out / "homoclinic.json", "w") as fh:
        json.dump(hd.to_dict(), fh, indent=2, sort_keys=True, default=float)
    lams = hd.E0 + h * np.linspace(-halfwidth, halfwidth, num)
    # the window reaches below E0, where trapped resonances are far narrower
    # than the grid; refinement resolves their phase jumps
    numeric = ssf_curve(truncate(pot, radius), lams, h, _grid(cfg), refine=True)
    formula = ssf_homoclinic(hd, lams, h, loop_phase)
    write_csv(out / "overlay.csv", ["lambda", "sigma", "ssf_numerical", "ssf_formula"], zip(lams, (lams - hd.E0) / h, numeric, formula))
    res.files += ["homoclinic.json", "overlay.csv"]
    try:
        cmp = compare_peaks(lams, numeric, formula, hd.E0, hd.mu, h, count=cfg.get("peaks", 3))
        res.summary["peaks"] = {
            "spacing": cmp.spacing,
            "numeric": cmp.numeric_positions.tolist(),
            "formula": cmp.matched_formula.tolist(),
            "offsets": cmp.offsets.tolist(),
            "height_ratios": cmp.height_ratios.tolist(),
        }
    except JostkitError as exc:
        res.summary["peaks"] = {"error": str(exc)}


def cmd_evolve(cfg, out, jobs, res):
    from . import propagator as prop
    from .resonances import find_resonances

    pot, h = _potential(cfg), cfg["h"]
    phi, chi = _window(cfg["window"]), _chi(cfg["chi"])
    max_kdx, K = cfg.get("max_kdx", prop.MAX_KDX), cfg.get("K", 0)
    res.parameters.update(max_kdx=max_kdx, K=K)
    ts = samples(cfg["t_list"])
    ham = prop.build(pot, h, cfg["L_box"], cfg["n_points"], e_max=phi.support[1], max_kdx=max_kdx)
    prop.check_causality(ham, chi, phi.support[1], float(np.max(np.abs(ts))))
    sd = prop.diagonalize(ham, phi.support)
    terms = None
    if K > 0:
        if "box" not in cfg:
            raise SchemaError("box", "required when K > 0")
        found = sorted((r for r in find_resonances(pot, _box(cfg["box"]), h) if r.z.imag < 0), key=lambda r: -r.z.imag)
        _, terms = prop.expansion_terms(pot, found[:K], sd, chi)
        res.summary["resonances"] = [[r.z.real, r.z.imag] for r in found[:K]]
    rows = []
    for k in range(K + 1):
        errs = prop.resonance_expansion_error(sd, chi, phi, ts, k, h, terms=terms)
        rows += [[t, e, k, h] for t, e in zip(ts, errs)]
    write_csv(out / "evolve.csv", ["t", "error_norm", "K", "h"], rows)
    res.files.append("evolve.csv")
    u0 = np.cos(np.arange(ham.n_points) * 0.37) * chi(ham.x)
    u0 = prop.apply_filter(sd, phi, u0)
    drift = abs(np.linalg.norm(prop.evolve(sd, u0, float(ts[-1]), h)) - np.linalg.norm(u0)) / np.linalg.norm(u0)
    res.check("unitarity of evolve <= 1e-10", drift <= 1e-10, drift)


def cmd_compare_resolvent(cfg, out, jobs, res):
    from .comparison import superpoly_fit

    cells = [(cfg, R, h) for R in cfg["R_list"] for h in cfg["h_list"]]
    results = _map(_compare_resolvent_cell, cells, jobs)
    rows, fits = [], {}
    for R in cfg["R_list"]:
        mine = [r for r in results if r.R == R]
        try:
            fit = superpoly_fit([(r.h, r.ratio) for r in mine])
            fits[str(R)] = {"exponent": fit.exponent, "residual": fit.residual, "window_exponents": fit.window_exponents}
            p = fit.exponent
        except JostkitError as exc:
            fits[str(R)] = {"error": str(exc)}
            p = float("nan")
        for r in mine:
            rows.append([r.R, r.h, r.lam, r.diff_norm, r.q_weighted_norm, r.ratio, p])
    write_csv(out / "compare_resolvent.csv", ["R", "h", "lambda", "diff_norm", "q_weighted_norm", "ratio", "fit_exponent"], rows)
    res.files.append("compare_resolvent.csv")
    res.summary["fits"] = fits
    res.summary["outer_sensitivity"] = [[r.R, r.h, r.outer_sensitivity] for r in results]


def cmd_compare_propagator(cfg, out, jobs, res):
    cells = [(cfg, R, h) for R in cfg["R_list"] for h in cfg["h_list"]]
    results = _map(_compare_propagator_cell, cells, jobs)
    rows = [[d.R, d.h, t, v] for d in results for t, v in zip(d.t, d.values)]
    write_csv(out / "compare_propagator.csv", ["R", "h", "t", "diff_norm"], rows)
    res.files.append("compare_propagator.csv")
    res.summary["sup"] = [[d.R, d.h, d.sup, d.L_box] for d in results]


def cmd_inequalities(cfg, out, jobs, res):
    if "lambda" not in cfg and "resonance_window" not in cfg:
        raise SchemaError("lambda", "either 'lambda' or 'resonance_window' is required")
    rows = _map(_inequality_cell, [(cfg, h) for h in cfg["h_list"]], jobs)
    header = [
        "h",
        "lambda",
        "interior_norm",
        "exterior_norm",
        "interpolation_lhs",
        "interpolation_rhs",
        "interpolation_ratio",
        "a17_ratio",
        "cutoff_norm",
        "equivalence_ratio",
    ]
    write_csv(out / "inequalities.csv", header, rows)
    res.files.append("inequalities.csv")


COMMANDS = {
    "smatrix": cmd_smatrix,
    "ssf": cmd_ssf,
    "weyl": cmd_weyl,
    "resonances": cmd_resonances,
    "residues": cmd_residues,
    "classical": cmd_classical,
    "homoclinic": cmd_homoclinic,
    "evolve": cmd_evolve,
    "compare-resolvent": cmd_compare_resolvent,
    "compare-propagator": cmd_compare_propagator,
    "inequalities": cmd_inequalities,
}


def run(command: str, cfg: dict, out: Path, jobs: int = 1, verify: bool = False, config_path=None) -> int:
    """Validate, execute and write artifacts; returns the exit status."""
    start = time.perf_counter()
    validate(command, cfg)
    out.mkdir(parents=True, exist_ok=True)
    res = Result()
    COMMANDS[command](cfg, out, jobs, res)
    manifest = {
        "command": command,
        "config_file": str(config_path) if config_path else None,
        "config": cfg,
        "parameters": res.parameters,
        "version": __version__,
        "numpy": np.__version__,
        "outputs": res.files,
        "summary": res.summary,
        "wall_time_s": time.perf_counter() - start,
    }
    if verify:
        manifest["verify"] = res.checks
    with open(out / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True, default=float)
    if verify and not all(c["passed"] for c in res.checks):
        failed = [c["name"] for c in res.checks if not c["passed"]]
        raise VerifyFailure("verification failed: " + "; ".join(failed))
    return EXIT_OK


class VerifyFailure(JostkitError):
    pass


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="jostkit", description=__doc__.strip().splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, type=Path, help="JSON experiment config")
    parser.add_argument("--out", required=True, type=Path, help="output directory")
    parser.add_argument("--jobs", type=int, default=1, help="worker processes for sweep cells")
    parser.add_argument("--verify", action="store_true", help="check the command's invariants on the results")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        try:
            cfg = json.loads(args.config.read_text())
        except FileNotFoundError:
            raise SchemaError("--config", f"no such file {args.config}") from None
        except json.JSONDecodeError as exc:
            raise SchemaError("<root>", f"invalid JSON: {exc}") from None
        return run(args.command, cfg, args.out, max(1, args.jobs), args.verify, args.config)
    except SchemaError as exc:
        print(f"config error at {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except JostkitError as exc:
        print(f"numerical failure ({type(exc).__name__}): {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
