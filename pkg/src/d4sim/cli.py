"""Command-line entry point.

Every subcommand emits a JSON payload (stable schema, sorted keys) to the
output path or stdout; reports are byte-identical for a fixed config and
seed. Optional ``--figures`` renders PNG summaries next to the JSON via
matplotlib; the data export never depends on it.

Exit codes: 0 success, 2 usage error, 3 resource limit, 4 internal
invariant violation. Failures print a machine-readable error JSON to
stderr.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Sequence

import numpy as np

from . import __version__
from . import modelops as mo
from . import experiments as ex
from .anyons import ANYONS, d4_dictionary, fuse, modular_data
from .engine import ResourceLimit
from .lattice import Color, ColoringImpossible, SizeTooSmall, build_torus
from .noise import NoiseModel
from .prep import PrepConfig, compile_prep, prepare, sector_admissible

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_RESOURCE = 3
EXIT_INTERNAL = 4

_BYTES_PER_AMP = {"c64": 8, "c128": 16}


class UsageError(ValueError):
    """Bad flag combination or malformed input file."""


# ------------------------------------------------------------- utilities


def _parse_size(text: str) -> tuple[int, int]:
    try:
        lx, ly = text.lower().split("x")
        return int(lx), int(ly)
    except ValueError:
        raise UsageError(f"size must look like 3x3, got {text!r}") from None


def _parse_sector(text: str) -> tuple[int, ...]:
    if len(text) != 6 or set(text) - set("+-"):
        raise UsageError(
            "sector must be six +/- characters in order "
            "RH GH BH RV GV BV")
    return tuple(+1 if ch == "+" else -1 for ch in text)


def _parse_forced(text: str) -> dict[int, int]:
    """'0:+,3:-' or 'all:+' -> {star: +-1}."""
    out: dict[int, int] = {}
    for item in text.split(","):
        try:
            star, sign = item.split(":")
            value = {"+": +1, "+1": +1, "-": -1, "-1": -1}[sign]
        except (ValueError, KeyError):
            raise UsageError(f"bad forced outcome {item!r}") from None
        if star == "all":
            return {"all": value}  # expanded once the torus is known
        out[int(star)] = value
    return out


def _available_ram() -> int | None:
    try:
        with open("/proc/meminfo") as fh:
            for line in fh:
                if line.startswith("MemAvailable:"):
                    return int(line.split()[1]) * 1024
    except OSError:
        pass
    return None


def _memory_guard(peak_qubits: int, precision: str) -> int:
    """Estimated bytes for a dense register; raises ResourceLimit if the
    machine clearly cannot hold it."""
    need = (1 << peak_qubits) * _BYTES_PER_AMP[precision]
    avail = _available_ram()
    if avail is not None and need > avail:
        raise ResourceLimit(
            f"dense register of {peak_qubits} qubits needs "
            f"{need / 2**30:.1f} GiB, {avail / 2**30:.1f} GiB available")
    return need


def _emit(payload: dict, args) -> None:
    text = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if getattr(args, "figures", False):
        _render_figures(payload, args)


def _figure_path(args, suffix: str) -> str:
    base = args.output or f"{args.command}.json"
    root, _ = os.path.splitext(base)
    return f"{root}-{suffix}.png"


def _render_figures(payload: dict, args) -> None:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    reports = payload.get("reports") or (
        [payload["report"]] if "report" in payload else [])
    for k, rep in enumerate(reports):
        if not rep.get("stars"):
            continue
        fig, axes = plt.subplots(1, 2, figsize=(8, 3))
        axes[0].bar(range(len(rep["stars"])), rep["stars"],
                    yerr=rep.get("star_errors"), color="tab:blue")
        axes[0].set_title("star expectations")
        axes[0].set_ylim(-1.1, 1.1)
        axes[1].bar(range(len(rep["triangles"])), rep["triangles"],
                    yerr=rep.get("triangle_errors"), color="tab:orange")
        axes[1].set_title("triangle expectations")
        axes[1].set_ylim(-1.1, 1.1)
        fig.tight_layout()
        suffix = "stabilizers" if len(reports) == 1 else f"stabilizers-{k}"
        fig.savefig(_figure_path(args, suffix), dpi=120)
        plt.close(fig)
    hist = payload.get("report", {}).get("logicals")
    if payload.get("report", {}).get("experiment") == "degeneracy_scan" and hist:
        fig, ax = plt.subplots(figsize=(9, 3))
        ax.bar(range(len(hist)), list(hist.values()))
        ax.set_xticks(range(len(hist)))
        ax.set_xticklabels(list(hist.keys()), rotation=90, fontsize=6)
        ax.set_title("sector histogram")
        fig.tight_layout()
        fig.savefig(_figure_path(args, "histogram"), dpi=120)
        plt.close(fig)


def _load_noise(args) -> NoiseModel | None:
    if not getattr(args, "noise", None):
        return None
    with open(args.noise) as fh:
        return NoiseModel.from_json(fh.read())


# ----------------------------------------------------------- subcommands


def _cmd_prepare(args) -> dict:
    torus = build_torus(*args.size)
    if args.dry_run:
        _, cost = compile_prep(torus, args.variant)
        dense = (1 << cost.peak_register) * _BYTES_PER_AMP[args.precision]
        return {"command": "prepare", "dry_run": True, **cost.to_dict(),
                "dense_bytes_estimate": dense}
    # the measurement-frame register holds one amplitude per ancilla pattern
    _memory_guard(torus.n_stars, args.precision)
    forced = None
    if args.force_ancilla_outcomes:
        forced = _parse_forced(args.force_ancilla_outcomes)
        if "all" in forced:
            forced = {s: forced["all"] for s in range(torus.n_stars)}
    noise = _load_noise(args)
    result = prepare(PrepConfig(
        torus=torus, variant=args.variant, sector=_parse_sector(args.sector),
        seed=args.seed, noise=noise, forced_outcomes=forced))
    signs = _parse_sector(args.sector)
    if result.plan.herald or result.state.norm() < 1e-12:
        report = ex.ExperimentReport("prepare", (torus.lx, torus.ly),
                                     seed=args.seed)
        report.scalars = {"herald": 1.0}
    else:
        report = ex._exact_report("prepare", torus, result.state, signs)
        report.seed = args.seed
        report.scalars["herald"] = 0.0
    if noise is not None:
        report.noise = noise.to_dict()
    return {
        "command": "prepare",
        "cost": result.cost.to_dict(),
        "ancilla_outcomes": result.record.bits,
        "herald": result.plan.herald,
        "report": report.to_dict(),
    }


def _cmd_stabilizers(args) -> dict:
    torus = build_torus(*args.size)
    signs = _parse_sector(args.sector)
    if not sector_admissible(signs):
        raise UsageError(f"sector {args.sector} is forbidden")
    state = ex._state_in_sector(torus, signs)
    report = ex._exact_report("stabilizers", torus, state, signs)
    if args.mode == "sampled":
        report = ex._sampled_report(report, signs, args.shots, args.seed)
    else:
        report.seed = args.seed
    return {"command": "stabilizers", "sector": args.sector,
            "report": report.to_dict()}


def _cmd_braid(args) -> dict:
    torus = build_torus(*args.size)
    if args.steps:
        with open(args.steps) as fh:
            doc = json.load(fh)
        seq = mo.BraidSequence(torus)
        for step in doc["steps"]:
            op = step["op"]
            color = Color[step["color"].upper()]
            if op == "loop":
                seq.loop(step["center_star"], step.get("start_dir", 0),
                         step.get("label", ""))
            elif op in ("create", "move", "annihilate"):
                getattr(seq, op)(color, step["t_i"], step["t_f"],
                                 step.get("label", ""))
            else:
                raise UsageError(f"unknown braid step op {op!r}")
    else:
        seq = mo.fusion_braid(torus)
    psi0 = mo.ground_state(torus)
    final, checkpoints = seq.run()
    overlap = complex(psi0.inner(final))
    snap = mo.snapshot(torus, final)
    return {
        "command": "braid",
        "steps": [s.label for s in seq.steps],
        "checkpoints": checkpoints,
        "final": snap,
        "fidelity_to_vacuum": abs(overlap) ** 2,
        "negative_stars": [i for i, v in enumerate(snap["stars"])
                           if v < -0.5],
    }


def _cmd_borromean(args) -> dict:
    torus = build_torus(*args.size)
    out: dict = {"command": "borromean", "variant": args.variant}
    if args.mode == "sampled":
        out["interferometry"] = mo.borromean_interferometry(
            torus, args.variant, shots=args.shots, seed=args.seed)
    else:
        amp = mo.borromean_phase(torus, args.variant)
        out["amplitude"] = [amp.real, amp.imag]
        out["phase_over_pi"] = float(np.angle(amp) / np.pi)
    return out


def _cmd_sectors(args) -> dict:
    torus = build_torus(*args.size)
    specs = ex.enumerate_sectors()
    if args.list:
        lines = [
            f"{s.label}  {'admissible' if s.admissible else 'forbidden'}"
            for s in specs
        ]
        return {"command": "sectors", "list": lines,
                "admissible": sum(s.admissible for s in specs),
                "forbidden": sum(not s.admissible for s in specs)}
    reports = ex.all_ground_states(torus, mode=args.mode, shots=args.shots,
                                   seed=args.seed)
    return {"command": "sectors",
            "reports": [r.to_dict() for r in reports]}


def _cmd_single_anyon(args) -> dict:
    torus = build_torus(*args.size)
    return {"command": "single-anyon",
            "report": ex.single_anyon(torus).to_dict()}


def _cmd_degeneracy_scan(args) -> dict:
    torus = build_torus(*args.size)
    rep = ex.degeneracy_scan(torus, n_trials=args.trials, seed=args.seed,
                             ensemble=args.ensemble)
    return {"command": "degeneracy-scan", "ensemble": args.ensemble,
            "report": rep.to_dict()}


def _cmd_fidelity_bound(args) -> dict:
    bounds = ex.fidelity_bounds(args.r, args.g, args.b, args.sites)
    return {"command": "fidelity-bound", "inputs": {
        "r": args.r, "g": args.g, "b": args.b, "sites": args.sites},
        "bounds": bounds}


def _cmd_anyon_table(args) -> dict:
    md = modular_data()
    rows = [{
        "name": row.anyon_name,
        "conjugacy_class": row.conjugacy_class,
        "centralizer": row.centralizer,
        "irrep": row.irrep,
        "dim": row.dim,
        "t": [row.t.real, row.t.imag],
    } for row in d4_dictionary()]
    return {
        "command": "anyon-table",
        "anyons": rows,
        "s_matrix": [[float(v.real) for v in line] for line in md.s],
        "t_diagonal": [[v.real, v.imag] for v in md.t],
        "dimensions": [int(d) for d in md.dims],
    }


def _cmd_selftest(args) -> dict:
    torus = build_torus(*args.size)
    checks: dict[str, bool] = {}

    def check(name: str, fn) -> None:
        try:
            checks[name] = bool(fn())
        except Exception:
            checks[name] = False

    psi0 = mo.ground_state(torus)
    snap = mo.snapshot(torus, psi0)
    check("ground-state-stabilizers", lambda: all(
        abs(v - 1.0) < 1e-10 for v in snap["stars"] + snap["triangles"]))
    check("commutators", lambda: mo.commutator_check(
        torus).max_subspace_residual < 1e-10)
    check("constraint", lambda: ex.constraint_check(torus).scalars[
        "violations"] == 0.0)
    check("sector-census", lambda: sum(
        s.admissible for s in ex.enumerate_sectors()) == 22)
    check("borromean-phase", lambda: abs(
        mo.borromean_phase(torus, "rgb") + 1.0) < 1e-9)
    check("borromean-trivial", lambda: all(
        abs(mo.borromean_phase(torus, v) - 1.0) < 1e-9 for v in ("rb", "gb")))
    check("modular-data", lambda: bool(
        np.allclose(modular_data().s @ modular_data().s, np.eye(22))))
    check("fusion-integrality", lambda: all(
        all(m >= 0 for m in fuse(a, b).values())
        for a in ANYONS for b in ANYONS))
    check("compiled-costs", lambda: compile_prep(torus, "compiled")[
        1].to_dict() == {"variant": "compiled", "two_qubit_gates": 78,
                         "peak_register": 30})

    def braid_charges():
        state, _ = mo.fusion_braid(torus).run()
        return len([v for v in mo.snapshot(torus, state)["stars"]
                    if v < -0.5]) == 2

    check("fusion-braid-charges", braid_charges)
    return {"command": "selftest", "checks": checks,
            "passed": all(checks.values())}


_COMMANDS = {
    "prepare": _cmd_prepare,
    "stabilizers": _cmd_stabilizers,
    "braid": _cmd_braid,
    "borromean": _cmd_borromean,
    "sectors": _cmd_sectors,
    "single-anyon": _cmd_single_anyon,
    "degeneracy-scan": _cmd_degeneracy_scan,
    "fidelity-bound": _cmd_fidelity_bound,
    "anyon-table": _cmd_anyon_table,
    "selftest": _cmd_selftest,
}


# ------------------------------------------------------------ arg parsing


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit(2) with plain text
        raise UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="d4sim", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--size", default=None, help="torus size, e.g. 3x3")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--mode", choices=("exact", "sampled"), default=None)
        p.add_argument("--shots", type=int, default=None)
        p.add_argument("--output", default=None, help="JSON output path")
        p.add_argument("--config", default=None,
                       help="JSON config file merged under flags")
        p.add_argument("--noise", default=None, help="noise model JSON file")
        p.add_argument("--threads", type=int, default=None)
        p.add_argument("--precision", choices=("c64", "c128"), default=None)
        p.add_argument("--figures", action="store_true", default=None,
                       help="also render matplotlib PNG summaries")

    p = sub.add_parser("prepare", help="run the preparation circuit")
    common(p)
    p.add_argument("--variant", choices=("naive", "compiled"), default=None)
    p.add_argument("--sector", default=None, help="six +/- signs")
    p.add_argument("--dry-run", action="store_true", default=None,
                   help="print the gate-count/register cost report only")
    p.add_argument("--force-ancilla-outcomes", default=None,
                   help="e.g. '0:+,3:-' or 'all:+'")

    p = sub.add_parser("stabilizers", help="stabilizer report for a sector")
    common(p)
    p.add_argument("--sector", default=None)

    p = sub.add_parser("braid", help="run a braid sequence")
    common(p)
    p.add_argument("--steps", default=None,
                   help="JSON braid spec; default: fusion-channel braid")

    p = sub.add_parser("borromean", help="three-loop braiding phase")
    common(p)
    p.add_argument("--variant", choices=mo.BORROMEAN_VARIANTS, default=None)

    p = sub.add_parser("sectors", help="ground-state sector reports")
    common(p)
    p.add_argument("--list", action="store_true", default=None,
                   help="one line per sector instead of full reports")

    p = sub.add_parser("single-anyon", help="isolated charge state report")
    common(p)

    p = sub.add_parser("degeneracy-scan", help="random-state sector histogram")
    common(p)
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--ensemble", choices=("basis", "haar"), default=None)

    p = sub.add_parser("fidelity-bound", help="bounds from projector values")
    common(p)
    p.add_argument("--r", type=float, default=None)
    p.add_argument("--g", type=float, default=None)
    p.add_argument("--b", type=float, default=None)
    p.add_argument("--sites", type=int, default=None)

    p = sub.add_parser("anyon-table", help="22-anyon dictionary and S/T data")
    common(p)

    p = sub.add_parser("selftest", help="exact-mode invariant suite")
    common(p)
    return parser


_DEFAULTS = {
    "size": "3x3", "seed": 0, "mode": "exact", "shots": 500,
    "sector": "++++++", "trials": 2200,
    "ensemble": "basis", "threads": 1, "precision": "c128",
    "sites": 27, "dry_run": False, "list": False, "figures": False,
}

_COMMAND_DEFAULTS = {
    "prepare": {"variant": "compiled"},
    "borromean": {"variant": "rgb"},
}


def _merge_config(args: argparse.Namespace) -> argparse.Namespace:
    """Fill unset flags from the config file, then from built-in defaults."""
    file_values = {}
    if args.config:
        try:
            with open(args.config) as fh:
                file_values = json.load(fh)
        except (OSError, json.JSONDecodeError) as e:
            raise UsageError(f"config file: {e}") from None
        if not isinstance(file_values, dict):
            raise UsageError("config file must hold a JSON object")
    defaults = {**_DEFAULTS, **_COMMAND_DEFAULTS.get(args.command, {})}
    for key, value in vars(args).items():
        if value is not None:
            continue
        name = key.replace("_", "-")
        if name in file_values:
            setattr(args, key, file_values[name])
        elif key in file_values:
            setattr(args, key, file_values[key])
        elif key in defaults:
            setattr(args, key, defaults[key])
    return args


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = _build_parser().parse_args(argv)
        args = _merge_config(args)
        if hasattr(args, "size"):
            args.size = _parse_size(args.size) if isinstance(
                args.size, str) else tuple(args.size)
        if getattr(args, "shots", 1) <= 0 or getattr(args, "trials", 1) <= 0:
            raise UsageError("shots/trials must be positive")
        payload = _COMMANDS[args.command](args)
        payload["schema"] = ex.SCHEMA_VERSION
        _emit(payload, args)
        if args.command == "selftest" and not payload["passed"]:
            return EXIT_INTERNAL
        return EXIT_OK
    except (ResourceLimit, MemoryError) as e:
        _fail(e, EXIT_RESOURCE)
        return EXIT_RESOURCE
    except (UsageError, ValueError, SizeTooSmall, ColoringImpossible,
            FileNotFoundError) as e:
        _fail(e, EXIT_USAGE)
        return EXIT_USAGE
    except Exception as e:  # engine/invariant failures
        _fail(e, EXIT_INTERNAL)
        return EXIT_INTERNAL


def _fail(exc: Exception, code: int) -> None:
    sys.stderr.write(json.dumps({
        "error": type(exc).__name__,
        "message": str(exc),
        "exit_code": code,
    }, sort_keys=True) + "\n")


if __name__ == "__main__":
    sys.exit(main())
