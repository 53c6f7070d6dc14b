"""Command-line front end.

    qcontrol morphing        photon click surface over (phi, alpha), CSV or JSON
    qcontrol delayed-choice  joint tables, visibilities, equivalence checks
    qcontrol hv-report       hidden-variable solution families (JSON)
    qcontrol chsh            quantum-controlled CHSH run (JSON)

Exit status is 0 when every internal check passes, 1 when a check fails (the
failing check names go to stderr) and 2 on usage errors.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import re
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import chsh as chsh_mod
from . import delayed_choice as dc
from . import hv_models as hv
from .core import StateVector, default_rng, sample_counts

OUT_DIR_ENV = "QCONTROL_OUT_DIR"
CSV_DIGITS = 15
SIGMA_BOUND = 5.0

DEFAULT_ALPHAS = tuple(k * math.pi / 8 for k in range(-4, 5))
DEFAULT_PHI_RANGE = (0.0, 2 * math.pi, math.pi / 64)

_ANGLE = re.compile(r"^\s*([+-]?\d*\.?\d*(?:e[+-]?\d+)?)\s*\*?\s*(pi)?\s*(?:/\s*(\d*\.?\d+))?\s*$", re.I)


def parse_angle(text: str) -> float:
    """Parse ``0.3``, ``pi/4``, ``-3pi/8``, ``2*pi`` and the like."""
    m = _ANGLE.match(text)
    if not m or not (m.group(1) or m.group(2)):
        raise argparse.ArgumentTypeError(f"cannot parse angle {text!r}")
    coef, has_pi, den = m.groups()
    if coef in ("", "+", "-"):
        if not has_pi:
            raise argparse.ArgumentTypeError(f"cannot parse angle {text!r}")
        coef = coef + "1"
    value = float(coef) * (math.pi if has_pi else 1.0)
    if den:
        value /= float(den)
    return value


def parse_range(text: str) -> tuple[float, float, float]:
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("range must be START:END:STEP")
    start, end, step = (parse_angle(p) for p in parts)
    if step <= 0 or end <= start:
        raise argparse.ArgumentTypeError(f"invalid range {text!r}: need END > START and STEP > 0")
    return start, end, step


@dataclass
class RunConfig:
    experiment: str
    phi: float | None = None
    phi_range: tuple | None = None
    alphas: tuple = ()
    seed: int = 0
    samples: int | None = None
    out: str | None = None
    fmt: str = "json"
    workers: int = 1
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.alphas:
            raise ValueError("alpha list must be nonempty")
        if self.phi_range is not None and self.phi_range[2] <= 0:
            raise ValueError("phi step must be positive")
        if self.samples is not None and self.samples < 1:
            raise ValueError("sample count must be >= 1")

    def phi_grid(self) -> np.ndarray:
        if self.phi_range is None:
            return np.array([self.phi if self.phi is not None else 0.0])
        start, end, step = self.phi_range
        n = math.ceil((end - start) / step - 1e-9)
        return start + step * np.arange(n)


def cell_rng(seed: int, *coords: int) -> np.random.Generator:
    """Independent stream per sweep cell, derived from the cell coordinates."""
    return default_rng(np.random.SeedSequence([seed, *coords]))


# ---------------------------------------------------------------- formatting

def fmt_float(x) -> str:
    return "" if x is None else f"{float(x):.{CSV_DIGITS}g}"


def write_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt_float(v) for v in row])
    return buf.getvalue()


def read_csv(text: str) -> tuple[list, list]:
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    rows = [[None if v == "" else float(v) for v in row] for row in reader]
    return header, rows


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    return obj


def dump_json(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=False) + "\n"


def emit(text: str, config: RunConfig, ext: str):
    target = config.out
    if target is None and os.environ.get(OUT_DIR_ENV):
        target = str(Path(os.environ[OUT_DIR_ENV]) / f"{config.experiment}.{ext}")
    if target is None or target == "-":
        sys.stdout.write(text)
        return
    path = Path(target)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    except OSError as exc:
        raise SystemExit(f"error: cannot write {path}: {exc}")


def finish(checks: dict) -> int:
    failed = [name for name, ok in checks.items() if not ok]
    for name in failed:
        print(f"check failed: {name}", file=sys.stderr)
    return 1 if failed else 0


# ---------------------------------------------------------------- commands

def _morph_cell(args):
    ia, ip, phi, alpha, seed, samples = args
    exact = float(dc.intensity(phi, alpha))
    if samples is None:
        return phi, alpha, exact, None
    counts = sample_counts(dc.qdc_state(phi, alpha), [dc.PHOTON], samples, cell_rng(seed, ia, ip))
    return phi, alpha, exact, counts[1] / samples


def cmd_morphing(config: RunConfig) -> int:
    phis = config.phi_grid()
    cells = [
        (ia, ip, float(phi), float(alpha), config.seed, config.samples)
        for ia, alpha in enumerate(config.alphas)
        for ip, phi in enumerate(phis)
    ]
    if config.workers > 1:
        with ThreadPoolExecutor(config.workers) as pool:
            rows = list(pool.map(_morph_cell, cells))  # map keeps grid order
    else:
        rows = [_morph_cell(c) for c in cells]

    checks = {}
    if config.samples is not None:
        n = config.samples
        worst = max(
            abs(emp - p) / max(math.sqrt(p * (1 - p) / n), 1e-300) if abs(emp - p) > 0 else 0.0
            for _, _, p, emp in rows
        )
        checks["monte_carlo_5sigma"] = worst <= SIGMA_BOUND
    header = ["phi", "alpha", "intensity"] + (["empirical"] if config.samples is not None else [])
    table = [r[:3] if config.samples is None else r for r in rows]
    if config.fmt == "csv":
        emit(write_csv(header, table), config, "csv")
    else:
        emit(dump_json({"config": asdict(config), "columns": header, "rows": table, "checks": checks}), config, "json")
    return finish(checks)


def cmd_delayed_choice(config: RunConfig) -> int:
    variant = config.options.get("variant", "standard")
    order = (dc.PHOTON, dc.ANCILLA) if config.options.get("order", "photon-first") == "photon-first" else (dc.ANCILLA, dc.PHOTON)
    n_points = config.options.get("grid_points", dc.DEFAULT_GRID_POINTS)
    phis = config.phi_grid()
    checks = {"deferred_measurement": True, "visibility": True}
    if variant == "entangled":
        checks["entangled_equivalence"] = True
    runs, pattern_rows = [], []
    for alpha in config.alphas:
        vis = dc.visibility_summary(alpha, n_points)
        vis_ok = abs(vis["unconditioned"] - vis["analytic"]) <= 1e-6
        if vis["wave_branch"] is not None:
            vis_ok &= abs(vis["wave_branch"] - 1.0) <= 1e-6
        if vis["particle_branch"] is not None:
            vis_ok &= abs(vis["particle_branch"]) <= 1e-6
        checks["visibility"] &= vis_ok
        points = []
        for phi in phis:
            rec = dc.standard_record(phi, alpha, order)
            checks["deferred_measurement"] &= rec.checks["deferred_measurement"]["ok"]
            entry = {"phi": float(phi), "record": rec.to_dict()}
            if variant == "entangled":
                ent = dc.entangled_variant(phi, alpha)
                checks["entangled_equivalence"] &= all(c["ok"] for c in ent.checks.values())
                entry["entangled"] = ent.to_dict()
            points.append(entry)
            cond = rec.conditionals
            pattern_rows.append((phi, alpha, dc.intensity(phi, alpha), cond[0], cond[1]))
        runs.append({"alpha": alpha, "visibility": vis, "points": points})
    if config.fmt == "csv":
        header = ["phi", "alpha", "unconditioned", "given_ancilla_0", "given_ancilla_1"]
        emit(write_csv(header, pattern_rows), config, "csv")
    else:
        emit(dump_json({"config": asdict(config), "runs": runs, "checks": checks}), config, "json")
    return finish(checks)


def hv_report(phi: float, alpha: float, classical: bool, allow_degenerate: bool, step: float, seed: int) -> tuple[dict, dict]:
    degenerate = hv.is_degenerate_bias(alpha)
    families = hv.enumerate_solution_families(phi, alpha, classical=classical, allow_degenerate=allow_degenerate, seed=seed)
    rng = np.random.default_rng(seed)
    soundness = max(
        float(np.max(np.abs(hv.residuals_array(f.sample(rng, 1000), phi, alpha)))) for f in families
    )
    points = hv.grid_oracle(phi, alpha, step=step, classical=classical)
    outside = points[~hv.in_any_family(points, families)] if len(points) else points
    n_consp = sum(f.interpretation == hv.CONSPIRATORIAL for f in families)
    report = {
        "phi": phi,
        "alpha": alpha,
        "cos2_alpha": math.cos(alpha) ** 2,
        "cos2_half_phi": math.cos(phi / 2) ** 2,
        "classical_constraint": classical,
        "degenerate_bias": degenerate,
        "families": [f.to_dict() for f in families],
        "n_families": len(families),
        "n_duality_restoring": len(families) - n_consp,
        "n_conspiratorial": n_consp,
        "residual_verification": {"samples_per_family": 1000, "max_abs_residual": soundness},
        "grid_oracle": {
            "step": step,
            "adequate_points": int(len(points)),
            "outside_families": int(len(outside)),
            "examples_outside": outside[:10].tolist(),
        },
    }
    consp = hv.HVModel.conspiratorial(phi, alpha)
    report["conspiratorial_signature"] = {
        "p_b0_particle_plus_p_b1_wave": consp.correlation_signature(),
        "p_b_given_particle": [consp.z, 1 - consp.z],
        "p_b_given_wave": [consp.v, 1 - consp.v],
        "lambda_independent_across_bias": hv.check_lambda_independence(
            hv.bias_setting_theory(phi, [alpha, alpha / 2])
        ),
    }
    checks = {
        "family_soundness": soundness < hv.RESIDUAL_TOL,
        "oracle_completeness": len(outside) == 0,
    }
    if not degenerate:
        if classical:
            checks["no_conspiratorial_family"] = n_consp == 0
        else:
            checks["single_conspiratorial_family"] = n_consp == 1
        ca = hv.classical_control_analysis(phi, alpha, seed=seed)
        report["classical_control"] = ca.to_dict()
        checks["classical_exclusion"] = not ca.conspiratorial_present and ca.lambda_independent
    return report, checks


def cmd_hv_report(config: RunConfig) -> int:
    phi = config.phi if config.phi is not None else math.pi / 3
    reports, checks = [], {}
    for alpha in config.alphas:
        if hv.is_degenerate_bias(alpha) and not config.options.get("allow_degenerate"):
            print(f"error: alpha={alpha!r} is degenerate (cos^2 alpha in {{0, 1}}); pass --allow-degenerate", file=sys.stderr)
            return 2
        rep, chk = hv_report(
            phi, alpha, config.options.get("classical", False), config.options.get("allow_degenerate", False),
            config.options.get("grid_step", 1 / 64), config.seed,
        )
        reports.append(rep)
        for k, v in chk.items():
            checks[k] = checks.get(k, True) and v
    emit(dump_json({"config": asdict(config), "reports": reports, "checks": checks}), config, "json")
    return finish(checks)


def cmd_chsh(config: RunConfig) -> int:
    opts = config.options
    a, a2, b, b2 = opts.get("settings") or chsh_mod.OPTIMAL_SETTINGS
    pair = None
    if opts.get("separable"):
        pair = StateVector.zeros(2)
    result = chsh_mod.quantum_controlled_chsh(a, a2, b, b2, opts.get("bias_a", math.pi / 4), opts.get("bias_b", math.pi / 4), pair)
    checks = {name: c["ok"] for name, c in result.checks.items()}
    out = {"config": asdict(config), "result": result.to_dict()}
    if result.S is None:
        out["undefined_branches"] = [k for k, v in result.to_dict()["correlators"].items() if v is None]
    else:
        checks["tsirelson_bound"] = abs(result.S) <= chsh_mod.TSIRELSON + 1e-9
        if opts.get("separable"):
            checks["separable_bound"] = abs(result.S) <= 2 + 1e-9
    n_random = opts.get("random", 0)
    if n_random:
        rng = default_rng(config.seed)
        worst = 0.0
        for _ in range(n_random):
            q = rng.uniform(-math.pi, math.pi, 4)
            r = chsh_mod.quantum_controlled_chsh(*q, pair=pair)
            worst = max(worst, r.checks["conditioning_equivalence"]["deviation"])
        out["random_quadruples"] = {"count": n_random, "max_conditioning_deviation": worst}
        checks["random_conditioning_equivalence"] = worst <= 1e-12
    out["checks"] = checks
    emit(dump_json(out), config, "json")
    return finish(checks)


COMMANDS = {
    "morphing": cmd_morphing,
    "delayed-choice": cmd_delayed_choice,
    "hv-report": cmd_hv_report,
    "chsh": cmd_chsh,
}


# ---------------------------------------------------------------- argument parsing

def _common(p: argparse.ArgumentParser, fmt_default: str):
    p.add_argument("--phi", type=parse_angle, help="single interferometer phase")
    p.add_argument("--phi-range", type=parse_range, metavar="START:END:STEP", help="phase sweep, END excluded")
    p.add_argument("--alpha", type=parse_angle, action="append", help="ancilla bias (repeatable)")
    p.add_argument("--degrees", action="store_true", help="read every angle in degrees")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--samples", type=int, help="Monte Carlo shots per cell")
    p.add_argument("--out", help=f"output path ('-' for stdout; default ${OUT_DIR_ENV}/<command>.<ext> or stdout)")
    p.add_argument("--format", choices=("csv", "json"), default=fmt_default, dest="fmt")
    p.add_argument("--workers", type=int, default=1)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qcontrol", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("morphing", help="wave-particle morphing surface")
    _common(p, "csv")

    p = sub.add_parser("delayed-choice", help="delayed-choice experiment report")
    _common(p, "json")
    p.add_argument("--variant", choices=("standard", "entangled"), default="standard")
    p.add_argument("--order", choices=("photon-first", "ancilla-first"), default="photon-first")
    p.add_argument("--grid-points", type=int, default=dc.DEFAULT_GRID_POINTS, help="phase grid for numeric visibility")

    p = sub.add_parser("hv-report", help="hidden-variable solution families")
    _common(p, "json")
    p.add_argument("--classical", action="store_true", help="impose v = z (spacelike-separated classical control)")
    p.add_argument("--allow-degenerate", action="store_true")
    p.add_argument("--grid-step", type=parse_angle, default=1 / 64, help="brute-force oracle spacing")

    p = sub.add_parser("chsh", help="quantum-controlled CHSH run")
    _common(p, "json")
    p.add_argument("--settings", type=parse_angle, nargs=4, metavar=("A", "A_PRIME", "B", "B_PRIME"))
    p.add_argument("--bias-a", type=parse_angle, default=math.pi / 4)
    p.add_argument("--bias-b", type=parse_angle, default=math.pi / 4)
    p.add_argument("--separable", action="store_true", help="use |00> instead of the Bell pair")
    p.add_argument("--random", type=int, default=0, help="also check N random setting quadruples")
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    conv = math.radians if args.degrees else (lambda x: x)
    angle = lambda x: None if x is None else conv(x)  # noqa: E731

    command = args.command
    if args.alpha:
        alphas = tuple(conv(a) for a in args.alpha)
    elif command == "morphing":
        alphas = DEFAULT_ALPHAS
    else:
        alphas = (math.pi / 4,)
    phi_range = tuple(conv(v) for v in args.phi_range) if args.phi_range else None
    if command in ("morphing",) and phi_range is None and args.phi is None:
        phi_range = DEFAULT_PHI_RANGE
    if command == "delayed-choice" and phi_range is None and args.phi is None:
        phi_range = (0.0, 2 * math.pi, math.pi / 8)
    options = {}
    if command == "delayed-choice":
        options = {"variant": args.variant, "order": args.order, "grid_points": args.grid_points}
    elif command == "hv-report":
        options = {"classical": args.classical, "allow_degenerate": args.allow_degenerate, "grid_step": args.grid_step}
    elif command == "chsh":
        options = {
            "settings": tuple(conv(s) for s in args.settings) if args.settings else None,
            "bias_a": conv(args.bias_a),
            "bias_b": conv(args.bias_b),
            "separable": args.separable,
            "random": args.random,
        }
    return RunConfig(
        experiment=command,
        phi=angle(args.phi),
        phi_range=phi_range,
        alphas=alphas,
        seed=args.seed,
        samples=args.samples,
        out=args.out,
        fmt=args.fmt,
        workers=args.workers,
        options=options,
    )


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = config_from_args(args)
    except ValueError as exc:
        parser.error(str(exc))
    return COMMANDS[config.experiment](config)


if __name__ == "__main__":
    sys.exit(main())
