"""Command-line interface: fit, segment, compare, synth, replay.

Every command materializes all defaults, writes its outputs plus a
``manifest.json`` into ``--out-dir``, and is deterministic given the seed.
``replay`` re-runs a previous command from its manifest into a fresh
directory, producing bit-identical files.

Exit codes: 0 success, 1 usage error, 2 input error, 3 infeasible threshold.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .abc import AbcConfig, Bounds, run_abc
from .em import DegenerateModelError, EmConfig, em_fit, weighted_log_likelihood
from .histogram import (
    Histogram,
    PgmError,
    build_histogram,
    histogram_from_csv,
    histogram_to_csv,
    load_grayscale_image,
    write_pgm,
)
from .manifest import (
    ManifestError,
    RunManifest,
    digest_inputs,
    load_manifest,
    verify_inputs,
    write_manifest,
)
from .mixture import (
    MixtureModel,
    ObjectiveSpec,
    decode_candidate,
    model_from_dict,
    model_to_dict,
    objective_j,
    sort_classes,
)
from .thresholds import (
    InfeasibleThresholdError,
    compute_thresholds,
    labels_as_gray,
    render_labels,
    segment,
)
from .synth import SynthSpec, synth_histogram

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INPUT = 2
EXIT_INFEASIBLE = 3

DEFAULT_POP = 20
DEFAULT_ITERS = 200
DEFAULT_LIMIT = 100
DEFAULT_OMEGA = 1.0
DEFAULT_SEED = 0
DEFAULT_SLOT_BOUNDS = {
    "weight": [0.0, 1.0],
    "stddev": [0.5, 80.0],
    "mean": [0.0, 255.0],
}

K_MIN, K_MAX = 2, 8


class UsageError(Exception):
    """Bad flag combination or value; maps to exit code 1."""


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 by default; this tool reserves 2 for input errors
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _write_text(path: Path, text: str) -> None:
    path.write_text(text)


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _load_json_file(path) -> object:
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ValueError(f"cannot read JSON file {path}: {exc}") from None


def _load_input_histogram(path) -> Histogram:
    """PGM inputs are decoded and counted; CSV inputs are read directly."""
    p = Path(path)
    suffix = p.suffix.lower()
    if suffix in (".pgm", ".pnm"):
        return build_histogram(load_grayscale_image(p.read_bytes()))
    if suffix == ".csv":
        return histogram_from_csv(p.read_text())
    raise ValueError(f"unsupported input type {suffix!r} (expected .pgm or .csv)")


def _load_model_file(path) -> MixtureModel:
    data = _load_json_file(path)
    if not isinstance(data, dict):
        raise ValueError(f"model file {path} must hold a JSON object")
    return model_from_dict(data)


def _check_k(k: int) -> int:
    if not K_MIN <= k <= K_MAX:
        raise UsageError(f"--k must lie in [{K_MIN}, {K_MAX}], got {k}")
    return k


def _slot_bounds_from_file(path) -> dict:
    data = _load_json_file(path)
    if not isinstance(data, dict):
        raise ValueError(f"bounds file {path} must hold a JSON object")
    bounds = {key: list(DEFAULT_SLOT_BOUNDS[key]) for key in DEFAULT_SLOT_BOUNDS}
    for key, pair in data.items():
        if key not in bounds:
            raise ValueError(f"unknown bounds key {key!r} (expected weight/stddev/mean)")
        lo, hi = float(pair[0]), float(pair[1])
        bounds[key] = [lo, hi]
    return bounds


def _box_for_k(slot_bounds: dict, k: int) -> Bounds:
    """Expand per-slot (weight, stddev, mean) bounds into the 3K box."""
    lows, highs = [], []
    for _ in range(k):
        for key in ("weight", "stddev", "mean"):
            lo, hi = slot_bounds[key]
            lows.append(lo)
            highs.append(hi)
    return Bounds(np.array(lows), np.array(highs))


def _fit_histogram(hist: Histogram, k: int, *, seed, pop, iters, limit, omega,
                   slot_bounds):
    """Shared fit pipeline; returns (sorted model, best source, trace)."""
    spec = ObjectiveSpec(hist, k, omega)

    def objective(vector):
        return objective_j(decode_candidate(vector, k), spec)

    bounds = _box_for_k(slot_bounds, k)
    config = AbcConfig(population=pop, iterations=iters, limit=limit, seed=seed)
    best, trace = run_abc(objective, bounds, config)
    model = sort_classes(decode_candidate(best.position, k))
    return model, best, trace


def cmd_fit(input, k, out_dir, seed=DEFAULT_SEED, pop=DEFAULT_POP,
            iters=DEFAULT_ITERS, limit=DEFAULT_LIMIT, omega=DEFAULT_OMEGA,
            bounds=None, figures=True):
    """Fit a K-class mixture to an image or histogram input."""
    k = _check_k(k)
    slot_bounds = bounds or DEFAULT_SLOT_BOUNDS
    hist = _load_input_histogram(input)
    model, best, trace = _fit_histogram(
        hist, k, seed=seed, pop=pop, iters=iters, limit=limit, omega=omega,
        slot_bounds=slot_bounds,
    )

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "model.json", model_to_dict(model, objective=best.objective))
    _write_text(out / "trace.csv", trace.to_csv())
    _write_text(out / "histogram.csv", histogram_to_csv(hist))
    args = {"input": str(Path(input).resolve()), "k": k, "seed": seed, "pop": pop,
            "iters": iters, "limit": limit, "omega": omega,
            "bounds": slot_bounds, "figures": figures}
    write_manifest(RunManifest("fit", args, seed, digest_inputs([input]), __version__), out)
    if figures:
        from . import plots

        plots.save_fit_figure(hist, model, out / "fit.png")
        plots.save_convergence_figure(trace.best_j, out / "convergence.png")
    return {"model": model, "best_j": best.objective, "out_dir": out}


def cmd_segment(image, out_dir, model=None, k=3, seed=DEFAULT_SEED,
                pop=DEFAULT_POP, iters=DEFAULT_ITERS, limit=DEFAULT_LIMIT,
                omega=DEFAULT_OMEGA, bounds=None, figures=True):
    """Threshold and label an image, fitting a model first unless one is given."""
    slot_bounds = bounds or DEFAULT_SLOT_BOUNDS
    gray = load_grayscale_image(Path(image).read_bytes())
    hist = build_histogram(gray)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if model is not None:
        fitted = sort_classes(_load_model_file(model))
        final_j = None
    else:
        _check_k(k)
        fitted, best, trace = _fit_histogram(
            hist, k, seed=seed, pop=pop, iters=iters, limit=limit, omega=omega,
            slot_bounds=slot_bounds,
        )
        final_j = best.objective
        _write_json(out / "model.json", model_to_dict(fitted, objective=final_j))
        _write_text(out / "trace.csv", trace.to_csv())

    cuts = compute_thresholds(fitted)
    labeled = segment(gray, cuts)
    _write_json(out / "thresholds.json", cuts.to_dict())
    (out / "labels.pgm").write_bytes(write_pgm(labels_as_gray(labeled)))
    (out / "segmented.pgm").write_bytes(write_pgm(render_labels(labeled, fitted)))
    args = {"image": str(Path(image).resolve()),
            "model": str(Path(model).resolve()) if model is not None else None,
            "k": k, "seed": seed, "pop": pop, "iters": iters, "limit": limit,
            "omega": omega, "bounds": slot_bounds, "figures": figures}
    write_manifest(
        RunManifest("segment", args, seed, digest_inputs([image, model]), __version__),
        out,
    )
    if figures:
        from . import plots

        plots.save_threshold_figure(hist, fitted, cuts.cuts, out / "thresholds.png")
    return {"thresholds": cuts, "model": fitted, "final_j": final_j, "out_dir": out}


def cmd_compare(input, k, inits, out_dir, seed=DEFAULT_SEED, pop=DEFAULT_POP,
                iters=DEFAULT_ITERS, limit=DEFAULT_LIMIT, omega=DEFAULT_OMEGA,
                bounds=None, em_max_iters=1000, em_tolerance=1e-8, figures=True):
    """Fit with EM from each supplied initial condition and with the bee colony.

    The bee colony draws its own random starting population from the seed, so
    its rows are identical across initial conditions; the inits are still
    recorded for provenance.
    """
    k = _check_k(k)
    slot_bounds = bounds or DEFAULT_SLOT_BOUNDS
    hist = _load_input_histogram(input)
    init_data = _load_json_file(inits)
    if not isinstance(init_data, list) or not init_data:
        raise ValueError(f"inits file {inits} must hold a non-empty JSON list of models")
    init_models = [model_from_dict(d) for d in init_data]
    for idx, m in enumerate(init_models):
        if m.k != k:
            raise ValueError(f"initial condition {idx} has {m.k} classes, expected {k}")

    spec = ObjectiveSpec(hist, k, omega)
    em_config = EmConfig(max_iterations=em_max_iters, tolerance=em_tolerance)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    rows = []
    for idx, init in enumerate(init_models):
        em_result = em_fit(hist, k, init, em_config)
        em_model = sort_classes(em_result.model)
        em_j = objective_j(em_model, spec)
        rows.append({"method": "em", "init_id": idx, "final_J": em_j,
                     "log_likelihood": em_result.log_likelihood,
                     "iterations": em_result.iterations})
        _write_json(out / f"model_em_init{idx}.json", model_to_dict(em_model, em_j))

        abc_model, abc_best, _ = _fit_histogram(
            hist, k, seed=seed, pop=pop, iters=iters, limit=limit, omega=omega,
            slot_bounds=slot_bounds,
        )
        rows.append({"method": "abc", "init_id": idx, "final_J": abc_best.objective,
                     "log_likelihood": weighted_log_likelihood(abc_model, hist),
                     "iterations": iters})
        _write_json(out / f"model_abc_init{idx}.json",
                    model_to_dict(abc_model, abc_best.objective))

    lines = ["method,init_id,final_J,log_likelihood,iterations"]
    lines.extend(
        f"{r['method']},{r['init_id']},{r['final_J']!r},{r['log_likelihood']!r},{r['iterations']}"
        for r in rows
    )
    _write_text(out / "comparison.csv", "\n".join(lines) + "\n")
    args = {"input": str(Path(input).resolve()), "k": k,
            "inits": str(Path(inits).resolve()), "seed": seed, "pop": pop,
            "iters": iters, "limit": limit, "omega": omega, "bounds": slot_bounds,
            "em_max_iters": em_max_iters, "em_tolerance": em_tolerance,
            "figures": figures}
    write_manifest(
        RunManifest("compare", args, seed, digest_inputs([input, inits]), __version__),
        out,
    )
    if figures:
        from . import plots

        plots.save_comparison_figure(rows, out / "comparison.png")
    return {"rows": rows, "out_dir": out}


def cmd_synth(truth, out_dir, pixels=500000, noise="exact", seed=DEFAULT_SEED,
              figures=True):
    """Generate a histogram from a ground-truth model JSON."""
    truth_model = _load_model_file(truth)
    spec = SynthSpec(truth_model, pixels, noise,
                     seed if noise == "multinomial" else None)
    hist = synth_histogram(spec)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_text(out / "histogram.csv", histogram_to_csv(hist))
    args = {"truth": str(Path(truth).resolve()), "pixels": pixels, "noise": noise,
            "seed": seed, "figures": figures}
    write_manifest(RunManifest("synth", args, seed, digest_inputs([truth]), __version__), out)
    if figures:
        from . import plots

        plots.save_histogram_figure(hist, out / "histogram.png")
    return {"histogram": hist, "out_dir": out}


_COMMANDS = {
    "fit": cmd_fit,
    "segment": cmd_segment,
    "compare": cmd_compare,
    "synth": cmd_synth,
}


def cmd_replay(manifest, out_dir):
    """Re-run a recorded command into a new directory; inputs must be unchanged."""
    record = load_manifest(manifest)
    if record.command not in _COMMANDS:
        raise ManifestError(f"manifest names unknown command {record.command!r}")
    verify_inputs(record)
    return _COMMANDS[record.command](out_dir=out_dir, **record.args)


def _resolve_abc_settings(ns, k: int) -> dict:
    """Defaults, then the AbcConfig JSON file, then explicit flags."""
    resolved = {"pop": DEFAULT_POP, "iters": DEFAULT_ITERS,
                "limit": DEFAULT_LIMIT, "seed": DEFAULT_SEED}
    if getattr(ns, "abc_config", None):
        data = _load_json_file(ns.abc_config)
        if not isinstance(data, dict):
            raise ValueError(f"ABC config file {ns.abc_config} must hold a JSON object")
        key_map = {"population": "pop", "iterations": "iters",
                   "limit": "limit", "seed": "seed"}
        for key, value in data.items():
            if key == "dimension":
                if value != 3 * k:
                    raise UsageError(
                        f"ABC config dimension {value} does not match 3*k={3 * k}")
                continue
            if key not in key_map:
                raise ValueError(f"unknown ABC config key {key!r}")
            resolved[key_map[key]] = int(value)
    for flag in ("pop", "iters", "limit", "seed"):
        value = getattr(ns, flag, None)
        if value is not None:
            resolved[flag] = value
    return resolved


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="beeseg",
                     description="Histogram mixture fitting, thresholding and "
                                 "segmentation with a bee-colony optimizer.")
    parser.add_argument("--version", action="version", version=f"beeseg {__version__}")
    common = _Parser(add_help=False)
    common.add_argument("--out-dir", required=True, help="directory for all outputs")
    common.add_argument("--seed", type=int, default=None, help="RNG seed (default 0)")
    common.add_argument("--k", type=int, default=None,
                        help=f"number of classes, {K_MIN}..{K_MAX} (default 3)")
    common.add_argument("--pop", type=int, default=None,
                        help=f"food sources / bees per phase (default {DEFAULT_POP})")
    common.add_argument("--iters", type=int, default=None,
                        help=f"optimization cycles (default {DEFAULT_ITERS})")
    common.add_argument("--limit", type=int, default=None,
                        help=f"failures before a source is abandoned (default {DEFAULT_LIMIT})")
    common.add_argument("--omega", type=float, default=None,
                        help=f"weight-sum penalty factor (default {DEFAULT_OMEGA})")
    common.add_argument("--bounds-file", default=None,
                        help="JSON with per-slot bounds {weight|stddev|mean: [lo, hi]}")
    common.add_argument("--abc-config", default=None,
                        help="JSON with optimizer settings (population, iterations, limit, seed)")
    common.add_argument("--no-figures", dest="figures", action="store_false",
                        help="skip PNG report figures")

    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", parents=[common], help="fit a mixture to an image or histogram")
    p.add_argument("--input", required=True, help="grayscale PGM image or histogram CSV")

    p = sub.add_parser("segment", parents=[common],
                       help="threshold an image with a fitted or supplied model")
    p.add_argument("--image", required=True, help="grayscale PGM image")
    p.add_argument("--model", default=None, help="model JSON (skips fitting)")

    p = sub.add_parser("compare", parents=[common],
                       help="EM-vs-bee-colony comparison across initial conditions")
    p.add_argument("--input", required=True, help="grayscale PGM image or histogram CSV")
    p.add_argument("--inits", required=True, help="JSON list of initial-condition models")
    p.add_argument("--em-max-iters", type=int, default=1000)
    p.add_argument("--em-tolerance", type=float, default=1e-8)

    p = sub.add_parser("synth", parents=[common],
                       help="generate a histogram from a ground-truth model")
    p.add_argument("--truth", required=True, help="ground-truth model JSON")
    p.add_argument("--pixels", type=int, default=500000)
    p.add_argument("--noise", choices=["exact", "multinomial"], default="exact")

    p = sub.add_parser("replay", parents=[common],
                       help="re-run a recorded command from its manifest")
    p.add_argument("--manifest", required=True, help="manifest.json of a previous run")
    return parser


def _dispatch(ns) -> dict:
    if ns.command == "replay":
        return cmd_replay(ns.manifest, ns.out_dir)

    k = ns.k if ns.k is not None else 3
    omega = ns.omega if ns.omega is not None else DEFAULT_OMEGA
    slot_bounds = (_slot_bounds_from_file(ns.bounds_file)
                   if ns.bounds_file else dict(DEFAULT_SLOT_BOUNDS))
    abc_settings = _resolve_abc_settings(ns, k)

    if ns.command == "fit":
        return cmd_fit(ns.input, k, ns.out_dir, omega=omega, bounds=slot_bounds,
                       figures=ns.figures, **abc_settings)
    if ns.command == "segment":
        return cmd_segment(ns.image, ns.out_dir, model=ns.model, k=k, omega=omega,
                           bounds=slot_bounds, figures=ns.figures, **abc_settings)
    if ns.command == "compare":
        return cmd_compare(ns.input, k, ns.inits, ns.out_dir, omega=omega,
                           bounds=slot_bounds, em_max_iters=ns.em_max_iters,
                           em_tolerance=ns.em_tolerance, figures=ns.figures,
                           **abc_settings)
    if ns.command == "synth":
        seed = ns.seed if ns.seed is not None else DEFAULT_SEED
        return cmd_synth(ns.truth, ns.out_dir, pixels=ns.pixels, noise=ns.noise,
                         seed=seed, figures=ns.figures)
    raise UsageError(f"unknown command {ns.command!r}")


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    try:
        result = _dispatch(ns)
    except UsageError as exc:
        print(f"beeseg: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InfeasibleThresholdError as exc:
        print(f"beeseg: infeasible threshold: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (PgmError, ManifestError, DegenerateModelError, ValueError, OSError) as exc:
        print(f"beeseg: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT

    if "best_j" in result and result["best_j"] is not None:
        print(f"best objective: {result['best_j']:.6g}")
    if "thresholds" in result:
        cuts = ", ".join(f"{t:.3f}" for t in result["thresholds"].cuts)
        print(f"thresholds: [{cuts}]")
    if "rows" in result:
        for r in result["rows"]:
            print(f"{r['method']} init {r['init_id']}: J={r['final_J']:.6g} "
                  f"ll={r['log_likelihood']:.6f} iters={r['iterations']}")
    print(f"outputs written to {result['out_dir']}")
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
