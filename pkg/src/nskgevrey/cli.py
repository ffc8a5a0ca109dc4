"""Command line: ``run``, ``report`` and ``list-presets``.

``NSKGEVREY_THREADS`` caps worker threads (FFTs, trial pools, numba).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import platform
import sys
import time
from importlib import metadata
from pathlib import Path

import numpy as np

from . import __version__
from . import nsk_solver as ns
from .config import ConfigError, config_hash, dump_config, parse_config
from .presets import PRESETS, Artifacts, check, check_dicts, get_preset, preset_table

MANIFEST = "manifest.json"


class ReportError(ValueError):
    """Missing or corrupt manifest."""


def _versions():
    out = {"python": platform.python_version(), "nskgevrey": __version__}
    for pkg in ("numpy", "scipy", "numba"):
        try:
            out[pkg] = metadata.version(pkg)
        except metadata.PackageNotFoundError:
            out[pkg] = None
    return out


def _hash_params(obj):
    return hashlib.sha256(json.dumps(obj, sort_keys=True, default=list).encode()).hexdigest()


def _run_config(path, seed):
    config = parse_config(path)
    if seed is not None:
        config = config.with_(seed=seed)
    art = Artifacts()
    traj = ns.run(config)
    art.text("trajectory.csv", traj.to_csv())
    art.text("config.toml", dump_config(config))
    mass = traj.column("mass")
    drift = float(np.max(np.abs(mass - mass[0])))
    checks = [
        check(9, "run healthy", float(traj.healthy), traj.healthy, "1"),
        check(9, "mean(a) drift", drift, drift <= 1e-13, "<= 1e-13"),
    ]
    extra = {}
    if not traj.healthy:
        row = traj.last_healthy_row
        extra["diverged"] = {"message": traj.message, "last_healthy": [[c, row[c]] for c in traj.COLUMNS]}
    info = {
        "kind": "config",
        "source": str(path),
        "config_hash": config_hash(config),
        "seed": config.seed,
        "x_p0": traj.x_p0,
    }
    return info, art, checks, extra


def _run_preset(preset_id, seed, size):
    preset = get_preset(preset_id)
    params = preset.params(size)
    art = Artifacts()
    checks = preset.runner(params, seed, art)
    info = {
        "kind": "preset",
        "preset": preset_id,
        "size": size,
        "params": json.loads(json.dumps(params, default=list)),
        "config_hash": _hash_params({"preset": preset_id, "params": params}),
        "seed": seed,
    }
    return info, art, checks, {}


def run_experiment(target, seed=None, out=None, size="default"):
    """Run a preset id or a TOML config; write artifacts and a manifest. Returns ``(exit_status, out_dir)``."""
    is_config = str(target).endswith(".toml") or Path(str(target)).is_file()
    if not is_config and target not in PRESETS:
        raise KeyError(f"unknown preset {target!r}; known: {', '.join(PRESETS)}")
    t0 = time.perf_counter()
    if is_config:
        info, art, checks, extra = _run_config(target, seed)
        name = Path(str(target)).stem
    else:
        info, art, checks, extra = _run_preset(target, 0 if seed is None else seed, size)
        name = target
    elapsed = time.perf_counter() - t0
    out_dir = Path(out) if out else Path("runs") / f"{name}-seed{info['seed']}"
    out_dir.mkdir(parents=True, exist_ok=True)
    files = {}
    for fname, content in sorted(art.files.items()):
        (out_dir / fname).write_text(content)
        files[fname] = hashlib.sha256(content.encode()).hexdigest()
    passed = all(c.passed for c in checks)
    manifest = {
        **info,
        "versions": _versions(),
        "status": "PASS" if passed else "FAIL",
        "checks": check_dicts(checks),
        "tables": art.tables,
        "files": files,
        "runtime_s": round(elapsed, 3),
        **extra,
    }
    (out_dir / MANIFEST).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return (0 if passed else 1), out_dir


def load_manifest(directory):
    path = Path(directory) / MANIFEST
    if not path.is_file():
        raise ReportError(f"no {MANIFEST} in {directory}")
    try:
        manifest = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ReportError(f"corrupt manifest {path}: {exc}") from None
    for key in ("status", "checks", "seed"):
        if key not in manifest:
            raise ReportError(f"corrupt manifest {path}: missing {key!r}")
    return manifest


def _fmt_cell(v):
    if isinstance(v, float):
        return f"{v:.5g}"
    return str(v)


def emit_report(directory):
    """One-page plain-text summary of a run directory."""
    m = load_manifest(directory)
    title = m.get("preset") or m.get("source", "run")
    lines = [f"{title}  seed={m['seed']}  size={m.get('size', '-')}  status={m['status']}", f"config hash {m.get('config_hash', '?')[:16]}"]
    if "x_p0" in m:
        lines.append(f"data smallness X_p,0 = {m['x_p0']:.6g}")
    lines.append("")
    for c in m["checks"]:
        tag = "PASS" if c["passed"] else "FAIL"
        lines.append(f"{tag}  [{c['criterion']:>2}] {c['name']}: {c['value']:.6g} (target {c['target']})")
    if "diverged" in m:
        div = m["diverged"]
        lines.append("")
        lines.append(div["message"] if div["message"].startswith("DIVERGED") else f"DIVERGED: {div['message']}")
        last = div.get("last_healthy") or []
        if last:
            lines.append("last healthy norms: " + ", ".join(f"{k}={_fmt_cell(v)}" for k, v in last))
    for name, tab in m.get("tables", {}).items():
        lines.append("")
        lines.append(name)
        widths = [max(len(str(h)), *(len(_fmt_cell(r[i])) for r in tab["rows"])) for i, h in enumerate(tab["header"])]
        lines.append("  ".join(str(h).ljust(w) for h, w in zip(tab["header"], widths)))
        for r in tab["rows"]:
            lines.append("  ".join(_fmt_cell(v).ljust(w) for v, w in zip(r, widths)))
    return "\n".join(lines) + "\n"


def _parser():
    ap = argparse.ArgumentParser(prog="nskgevrey", description="NSK Gevrey-class experiments")
    sub = ap.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run a preset or a TOML config")
    r.add_argument("target", help="preset id or path to a .toml config")
    r.add_argument("--seed", type=int, default=None)
    r.add_argument("--out", default=None, help="artifact directory")
    r.add_argument("--size", choices=("small", "default"), default="default")
    rep = sub.add_parser("report", help="summarise a run directory")
    rep.add_argument("directory")
    sub.add_parser("list-presets", help="list registered presets")
    return ap


def main(argv=None):
    args = _parser().parse_args(argv)
    if args.command == "list-presets":
        for pid, crit, desc in preset_table():
            print(f"{pid:20s} criteria {crit:8s} {desc}")
        return 0
    if args.command == "report":
        try:
            print(emit_report(args.directory), end="")
        except ReportError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
        return 0
    try:
        status, out_dir = run_experiment(args.target, args.seed, args.out, args.size)
    except (KeyError, ConfigError, FileNotFoundError) as exc:
        print(f"error: {exc.args[0] if exc.args else exc}", file=sys.stderr)
        return 2
    print(emit_report(out_dir), end="")
    print(f"artifacts: {out_dir}")
    return status


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
