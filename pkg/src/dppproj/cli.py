"""Command-line front end: ``dppproj {sample,curves,experiment,factorize,replay}``.

Every data-producing command takes a JSON config carrying ``"schema": 1``
and writes a ``manifest.json`` next to its outputs.  ``dppproj replay``
re-runs a manifest; CSV bodies are byte-identical for any ``--threads``.

Exit codes: 0 ok, 2 configuration, 3 sampler budget, 4 I/O.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict
from importlib import metadata
from pathlib import Path

import numpy as np

from .errors import BudgetExceeded, ConfigError, DPPError
from .kernels import Family, IndexSet, balanced_factorization, kernel_from_dict
from .patterns import PointPattern, project
from .quadrature import ExperimentConfig, run_experiment
from .sampler import DEFAULT_DELTA, SpectralSampler, sample_poisson
from .summaries import (
    SummaryCurve,
    empirical_ripley,
    pcf_projected,
    ripley_envelope,
    ripley_projected,
)

logger = logging.getLogger("dppproj")

SCHEMA = 1
EXIT_OK, EXIT_CONFIG, EXIT_BUDGET, EXIT_IO = 0, 2, 3, 4

SAMPLE_KEYS = {
    "schema": "must be 1",
    "kernel": "kernel description: family, d and rho/alpha/N/factors/trunc_eps",
    "replications": "number of patterns (default 1)",
    "delta": f"eigenvalue cut for index enumeration (default {DEFAULT_DELTA:g})",
}
CURVE_KEYS = {
    "schema": "must be 1",
    "kernel": "kernel description",
    "stat": "'pcf' or 'ripley'",
    "mode": "'analytic' (default), 'envelope' or 'empirical' (ripley only)",
    "iota_list": "projection sizes; coordinates 0..iota-1 are kept unless 'subsets' is given",
    "subsets": "explicit list of kept-coordinate lists (0-based); required for pcf of non-identical factors",
    "r_grid": "list of radii, or {start, stop, num}",
    "n_subsets": "envelope: number of random subsets (null enumerates up to 1000)",
    "center": "envelope: 'mean' (default) or 'median'",
    "replications": "empirical: number of patterns (default 100)",
    "delta": "empirical: enumeration cut",
}
EXPERIMENT_KEYS = {
    "schema": "must be 1",
    "d": "dimension (default 6)",
    "rho_list": "intensities (Dirichlet uses N = rho)",
    "iota_list": "projection sizes",
    "models": "subset of poisson, gaussian, dirichlet",
    "replications": "replications m >= 2",
    "subset_policy": "'random' or 'fixed'",
    "delta": "enumeration cut for the Gaussian sampler",
}


def _version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "0+unknown"


def _keys_epilog(keys: dict) -> str:
    return "config keys:\n" + "\n".join(f"  {k:<14} {v}" for k, v in keys.items())


# --------------------------------------------------------------------------
# config handling


def load_config(path, keys: dict) -> dict:
    text = Path(path).read_text()
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return check_config(cfg, keys)


def check_config(cfg, keys: dict) -> dict:
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    if cfg.get("schema") != SCHEMA:
        raise ConfigError(f"config needs \"schema\": {SCHEMA}")
    unknown = sorted(set(cfg) - set(keys))
    if unknown:
        raise ConfigError(f"unknown config keys {unknown}; accepted: {sorted(keys)}")
    return cfg


def _kernel(cfg: dict):
    if "kernel" not in cfg:
        raise ConfigError("missing 'kernel'")
    return kernel_from_dict(cfg["kernel"])


def _r_grid(spec) -> np.ndarray:
    if spec is None:
        return np.round(np.linspace(0.01, 0.10, 10), 12)
    if isinstance(spec, dict):
        if set(spec) != {"start", "stop", "num"}:
            raise ConfigError("r_grid object needs exactly start, stop, num")
        return np.linspace(spec["start"], spec["stop"], int(spec["num"]))
    return np.asarray(spec, dtype=float)


# --------------------------------------------------------------------------
# output


def _write(path: Path, text: str, outputs: list, root: Path):
    path.write_text(text)
    outputs.append(str(path.relative_to(root)))


def write_manifest(out: Path, command: str, cfg: dict, seed, outputs: list, started: float, threads: int):
    manifest = {
        "command": command,
        "config": cfg,
        "seed": seed,
        "version": _version(),
        "threads": threads,
        "outputs": outputs,
        "wall_clock_s": round(time.time() - started, 3),
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest


def curve_svg(curves: list[tuple[str, SummaryCurve]], title: str) -> str:
    """Minimal standalone line chart with axes and a legend."""
    w, h, pad = 640, 400, 50
    xs = np.concatenate([c.r_grid for _, c in curves])
    ys = np.concatenate([c.values for _, c in curves])
    x0, x1 = float(xs.min()), float(xs.max())
    y0, y1 = min(0.0, float(np.nanmin(ys))), max(1.0, float(np.nanmax(ys)))
    x1 = x1 if x1 > x0 else x0 + 1.0

    def px(x):
        return pad + (x - x0) / (x1 - x0) * (w - 2 * pad)

    def py(y):
        return h - pad - (y - y0) / (y1 - y0) * (h - 2 * pad)

    colours = ["#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02", "#a6761d", "#666666"]
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="12">',
        f'<rect width="{w}" height="{h}" fill="white"/>',
        f'<text x="{w / 2}" y="20" text-anchor="middle">{title}</text>',
        f'<line x1="{pad}" y1="{h - pad}" x2="{w - pad}" y2="{h - pad}" stroke="black"/>',
        f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{h - pad}" stroke="black"/>',
        f'<text x="{w / 2}" y="{h - 12}" text-anchor="middle">r</text>',
    ]
    for frac in (0.0, 0.5, 1.0):
        xv, yv = x0 + frac * (x1 - x0), y0 + frac * (y1 - y0)
        parts.append(f'<text x="{px(xv):.1f}" y="{h - pad + 16}" text-anchor="middle">{xv:.3g}</text>')
        parts.append(f'<text x="{pad - 6}" y="{py(yv) + 4:.1f}" text-anchor="end">{yv:.3g}</text>')
    for n, (label, c) in enumerate(curves):
        colour = colours[n % len(colours)]
        pts = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in zip(c.r_grid, c.values) if np.isfinite(y))
        parts.append(f'<polyline fill="none" stroke="{colour}" stroke-width="1.5" points="{pts}"/>')
        ly = pad + 16 * n
        parts.append(f'<line x1="{w - pad - 90}" y1="{ly}" x2="{w - pad - 70}" y2="{ly}" stroke="{colour}"/>')
        parts.append(f'<text x="{w - pad - 64}" y="{ly + 4}">{label}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


# --------------------------------------------------------------------------
# workers (module level so that process pools can pickle them)


_WORKER_SAMPLERS: dict = {}


def _draw(task) -> PointPattern:
    kernel_dict, delta, seed, rep = task
    seq = np.random.SeedSequence(seed, spawn_key=(rep,))
    k = kernel_from_dict(kernel_dict)
    if k.is_poisson:
        return sample_poisson(k.rho, k.d, seq)
    key = (json.dumps(kernel_dict, sort_keys=True), delta)
    if key not in _WORKER_SAMPLERS:
        _WORKER_SAMPLERS[key] = SpectralSampler(k, delta)
    return _WORKER_SAMPLERS[key].sample(seq)


def draw_patterns(kernel_dict: dict, delta: float, seed: int, reps: int, threads: int) -> list[PointPattern]:
    tasks = [(kernel_dict, delta, seed, rep) for rep in range(reps)]
    if threads <= 1 or reps <= 1:
        return [_draw(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(_draw, tasks, chunksize=max(1, reps // (4 * threads))))


# --------------------------------------------------------------------------
# commands


def cmd_sample(cfg: dict, seed: int, out: Path, threads: int) -> list:
    k = _kernel(cfg)
    reps = int(cfg.get("replications", 1))
    if reps < 1:
        raise ConfigError("replications must be positive")
    delta = float(cfg.get("delta", DEFAULT_DELTA))
    outputs: list = []
    for rep, p in enumerate(draw_patterns(cfg["kernel"], delta, seed, reps, threads)):
        stem = f"pattern_{rep:04d}"
        _write(out / f"{stem}.csv", p.to_csv(), outputs, out)
        side = {"seed": seed, "replication": rep, **p.meta}
        _write(out / f"{stem}.json", json.dumps(side, indent=2, sort_keys=True) + "\n", outputs, out)
    logger.info("wrote %d patterns of the %s model", reps, k.family.value)
    return outputs


def _pcf_curve(k, I: IndexSet, r: np.ndarray) -> np.ndarray:
    # displacement r along the first kept coordinate
    x = np.zeros((r.size, I.iota))
    y = x.copy()
    y[:, 0] = r
    return pcf_projected(k, I, x, y)


def cmd_curves(cfg: dict, seed: int, out: Path, threads: int, svg: bool) -> list:
    k = _kernel(cfg)
    stat = cfg.get("stat", "ripley")
    mode = cfg.get("mode", "analytic")
    if stat not in ("pcf", "ripley"):
        raise ConfigError("stat must be 'pcf' or 'ripley'")
    if mode not in ("analytic", "envelope", "empirical"):
        raise ConfigError("mode must be 'analytic', 'envelope' or 'empirical'")
    if stat == "pcf" and mode != "analytic":
        raise ConfigError("pcf curves are analytic only")
    r = _r_grid(cfg.get("r_grid"))
    identical = k.is_poisson or k.family in (Family.GAUSSIAN, Family.L1EXP)
    if "subsets" in cfg:
        subsets = [IndexSet.coerce(s, k.d) for s in cfg["subsets"]]
    else:
        if stat == "pcf" and not identical:
            raise ConfigError("pcf of a kernel with non-identical factors needs explicit 'subsets'")
        subsets = [IndexSet.coerce(range(i), k.d) for i in cfg.get("iota_list", [k.d])]
    outputs: list = []
    curves = []
    base = {"model": k.family.value, "stat": stat, "geometry": "torus"}
    if mode == "envelope":
        for iota in sorted({I.iota for I in subsets}, reverse=True):
            c = ripley_envelope(k, iota, cfg.get("n_subsets"), seed, r, cfg.get("center", "mean"))
            curves.append((f"iota={iota}", SummaryCurve(c.r_grid, c.values, c.se, c.band_lo, c.band_hi, {**base, **c.meta})))
    elif mode == "empirical":
        reps = int(cfg.get("replications", 100))
        pats = draw_patterns(cfg["kernel"], float(cfg.get("delta", DEFAULT_DELTA)), seed, reps, threads)
        for I in subsets:
            c = empirical_ripley([project(p, I) for p in pats], k.intensity(), r)
            meta = {**base, **c.meta, "I": list(I.indices)}
            curves.append((f"I={list(I.indices)}", SummaryCurve(c.r_grid, c.values, c.se, None, None, meta)))
    else:
        for I in subsets:
            vals = _pcf_curve(k, I, r) if stat == "pcf" else ripley_projected(k, I, r)
            meta = {**base, "estimator": "analytic", "I": list(I.indices), "iota": I.iota}
            curves.append((f"I={list(I.indices)}", SummaryCurve(r, vals, None, None, None, meta)))
    for n, (label, c) in enumerate(curves):
        _write(out / f"{stat}_{mode}_{n:02d}.csv", c.to_csv(), outputs, out)
    if svg:
        _write(out / f"{stat}_{mode}.svg", curve_svg(curves, f"{stat} ({k.family.value}, {mode})"), outputs, out)
    return outputs


EXPERIMENT_COLUMNS = ("model", "rho", "iota", "mean_estimate", "true_mu", "emp_var", "analytic_var", "se_var", "m", "seed")


def experiment_csv(rows) -> str:
    lines = [",".join(EXPERIMENT_COLUMNS)]
    for row in rows:
        vals = asdict(row)
        lines.append(",".join(v if isinstance(v, str) else format(v, ".17g") for v in (vals[c] for c in EXPERIMENT_COLUMNS)))
    return "\n".join(lines) + "\n"


def cmd_experiment(cfg: dict, seed: int, out: Path, threads: int) -> list:
    params = {k: v for k, v in cfg.items() if k != "schema"}
    try:
        ecfg = ExperimentConfig(seed=seed, **params)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
    res = run_experiment(ecfg, threads=threads)
    outputs: list = []
    _write(out / "experiment.csv", experiment_csv(res.rows), outputs, out)
    summary = {"config": ecfg.to_dict(), "meta": res.meta, "results": res.summary()}
    _write(out / "experiment.json", json.dumps(summary, indent=2, sort_keys=True) + "\n", outputs, out)
    return outputs


COMMANDS = {
    "sample": (SAMPLE_KEYS, lambda cfg, a, out: cmd_sample(cfg, a.seed, out, a.threads)),
    "curves": (CURVE_KEYS, lambda cfg, a, out: cmd_curves(cfg, a.seed, out, a.threads, a.svg)),
    "experiment": (EXPERIMENT_KEYS, lambda cfg, a, out: cmd_experiment(cfg, a.seed, out, a.threads)),
}


def _run(command: str, cfg: dict, args) -> int:
    keys, fn = COMMANDS[command]
    check_config(cfg, keys)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    started = time.time()
    outputs = fn(cfg, args, out)
    write_manifest(out, command, cfg, args.seed, outputs, started, args.threads)
    print(json.dumps({"command": command, "out": str(out), "outputs": len(outputs)}))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dppproj", description="Projected DPP sampling, summaries and experiments.")
    parser.add_argument("--version", action="version", version=_version())
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, keys):
        p.add_argument("config", help="JSON config file")
        p.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
        p.add_argument("--threads", type=int, default=1, help="worker processes (default 1)")
        p.add_argument("--out", default="out", help="output directory (default ./out)")
        p.epilog = _keys_epilog(keys)
        p.formatter_class = argparse.RawDescriptionHelpFormatter

    common(sub.add_parser("sample", help="draw DPP patterns"), SAMPLE_KEYS)
    p = sub.add_parser("curves", help="pcf or Ripley curves")
    common(p, CURVE_KEYS)
    p.add_argument("--svg", action="store_true", help="also write an SVG chart")
    common(sub.add_parser("experiment", help="Monte-Carlo integration experiment"), EXPERIMENT_KEYS)
    p = sub.add_parser("factorize", help="balanced factorization of N into d factors")
    p.add_argument("N", type=int)
    p.add_argument("d", type=int)
    p = sub.add_parser("replay", help="re-run the command recorded in a manifest")
    p.add_argument("manifest")
    p.add_argument("--out", default=None, help="output directory (default: the manifest's directory)")
    p.add_argument("--threads", type=int, default=None, help="override the recorded worker count")
    return parser


def main(argv=None) -> int:
    logging.basicConfig(
        level=getattr(logging, os.environ.get("DPPPROJ_LOG", "error").upper(), logging.ERROR),
        format="%(levelname)s %(name)s: %(message)s",
    )
    args = build_parser().parse_args(argv)
    try:
        if args.command == "factorize":
            print(json.dumps(balanced_factorization(args.N, args.d)))
            return EXIT_OK
        if args.command == "replay":
            path = Path(args.manifest)
            try:
                manifest = json.loads(path.read_text())
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
            if manifest.get("command") not in COMMANDS:
                raise ConfigError(f"manifest names unknown command {manifest.get('command')!r}")
            ns = argparse.Namespace(
                seed=manifest["seed"],
                threads=manifest.get("threads", 1) if args.threads is None else args.threads,
                out=args.out or str(path.parent),
                svg=any(o.endswith(".svg") for o in manifest.get("outputs", [])),
            )
            return _run(manifest["command"], manifest["config"], ns)
        cfg = load_config(args.config, COMMANDS[args.command][0])
        return _run(args.command, cfg, args)
    except BudgetExceeded as exc:
        print(f"dppproj: budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (DPPError, ValueError) as exc:
        print(f"dppproj: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"dppproj: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
