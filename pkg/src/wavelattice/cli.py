"""Command-line entry point: ``wavelattice {simulate,verify,resonances,presets}``."""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from fractions import Fraction
from pathlib import Path

from .config import ConfigError, ModelConfig, parse_config, preset, preset_names
from .diagnostics import verify
from .integrator import StiffnessError, run
from .io import RunManifest, SeriesWriter, is_manifest, read_series, snapshot_json
from .lattice import LatticeError, canonical, enumerate_interactions

EXIT_OK, EXIT_FAILED_CHECK, EXIT_BAD_INPUT, EXIT_NUMERICS = 0, 1, 2, 3


def _load_config(args) -> tuple[ModelConfig, str | None]:
    if args.config and args.preset:
        raise ConfigError("--config", "give either --config or --preset, not both")
    name = None
    if args.config:
        text = Path(args.config).read_text()
        doc = json.loads(text)
        if is_manifest(doc):
            cfg = RunManifest.from_dict(doc).config
            name = doc.get("preset_name")
        else:
            cfg = parse_config(text)
    else:
        name = args.preset or "default"
        cfg = preset(name)
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, seed=args.seed)
    if getattr(args, "t_end", None) is not None:
        cfg = dataclasses.replace(cfg, t_end=args.t_end)
    cfg.validate()
    return cfg, name


def _say(args, msg: str) -> None:
    if not args.quiet:
        print(msg, file=sys.stderr)


def cmd_simulate(args) -> int:
    cfg, name = _load_config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest(cfg, cfg.seed, name, str(out))
    manifest_path = out / "manifest.json"
    manifest.status = "running"
    manifest.write(manifest_path)

    series_path = out / "series.csv"
    manifest.add("series_csv", series_path)
    with series_path.open("w", newline="") as fh:
        writer = SeriesWriter(fh)

        def on_record(rec):
            writer.write(rec)
            _say(args, f"t = {rec.t:.6g}")

        try:
            result = run(cfg, on_record=on_record)
        except StiffnessError as exc:
            manifest.status = f"failed: {exc}"
            manifest.write(manifest_path)
            print(f"error: {exc} (dt={exc.dt:g}, min amplitude={exc.min_amplitude:g})",
                  file=sys.stderr)
            return EXIT_NUMERICS

    snap_path = out / "snapshot.json"
    snap_path.write_text(snapshot_json(result.final) + "\n")
    manifest.add("snapshot_json", snap_path)

    verdict = verify(result.records, cfg)
    verdict["step_monitor"] = {
        "ok": result.monitor.worst_mass_increase <= 1e-12
        and result.monitor.max_phi_decrease <= 1e-12,
        "constants": {"steps": result.monitor.steps,
                      "worst_energy_defect": result.monitor.worst_energy_defect},
        "worst_violation": max(result.monitor.worst_mass_increase,
                               result.monitor.max_phi_decrease),
    }
    verdict_path = out / "verdict.json"
    verdict_path.write_text(json.dumps(verdict, indent=1, sort_keys=True) + "\n")
    manifest.add("verdict_json", verdict_path)
    manifest.status = "complete"
    manifest.write(manifest_path)
    _say(args, f"wrote {series_path}, {snap_path}, {verdict_path}")
    return EXIT_OK


def cmd_verify(args) -> int:
    target = Path(args.run)
    csv_path = target / "series.csv" if target.is_dir() else target
    if args.config or args.preset:
        cfg, _ = _load_config(args)
    else:
        manifest_path = csv_path.parent / "manifest.json"
        if not manifest_path.exists():
            raise ConfigError("--config", f"no manifest next to {csv_path}; pass --config or --preset")
        cfg = RunManifest.from_dict(json.loads(manifest_path.read_text())).config
    records = read_series(csv_path)
    if not records:
        raise ConfigError("run", f"{csv_path} holds no records")
    verdict = verify(records, cfg)
    text = json.dumps(verdict, indent=1, sort_keys=True)
    if args.out:
        Path(args.out).write_text(text + "\n")
    print(text)
    return EXIT_OK if all(v["ok"] for v in verdict.values()) else EXIT_FAILED_CHECK


def parse_radius(xi: int, text: str):
    """Accept ``m``, ``m/d`` with ``d`` a power of ``xi``, or ``m@eta`` for ``m * xi**-eta``."""
    if "@" in text:
        m, eta = text.split("@", 1)
        return canonical(xi, int(m), int(eta))
    value = Fraction(text)
    den, eta = value.denominator, 0
    while den % xi == 0:
        den //= xi
        eta += 1
    if den != 1:
        raise LatticeError(f"{text} is not a {xi}-adic radius")
    return canonical(xi, value.numerator, eta)


def _fmt_radius(r) -> str:
    return str(r.value)


def cmd_resonances(args) -> int:
    xi = args.xi
    target = parse_radius(xi, args.radius)
    if args.support:
        support = [parse_radius(xi, s) for s in args.support.split(",")]
    else:
        top = args.max_numerator
        support = sorted({canonical(xi, m, eta) for eta in range(args.max_level + 1)
                          for m in range(1, top + 1)})
    triples = enumerate_interactions(support, target)
    for tr in triples:
        op = "+" if tr.kind.value == "merge" else "-"
        lhs = (f"{_fmt_radius(tr.a)} + {_fmt_radius(tr.b)}" if op == "+"
               else f"{_fmt_radius(tr.b)} - {_fmt_radius(tr.a)}")
        print(f"{tr.kind.value:5s}  {lhs} = {_fmt_radius(tr.c)}")
    _say(args, f"{len(triples)} resonances feed {_fmt_radius(target)}")
    return EXIT_OK


def cmd_presets(args) -> int:
    if args.name:
        print(json.dumps(preset(args.name).to_dict(), indent=1))
    else:
        for name in preset_names():
            print(name)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wavelattice", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, with_t_end=True):
        p.add_argument("--config", metavar="PATH", help="JSON config document or run manifest")
        p.add_argument("--preset", metavar="NAME", help="named preset (see `presets`)")
        p.add_argument("--seed", type=int, help="override the random-band seed")
        if with_t_end:
            p.add_argument("--t-end", type=float, dest="t_end", help="override t_end")
        p.add_argument("--quiet", action="store_true", help="suppress progress output")

    p = sub.add_parser("simulate", help="run a simulation and write its outputs")
    common(p)
    p.add_argument("--out", metavar="DIR", default="run", help="output directory")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", help="replay the checks on a run's CSV")
    p.add_argument("run", help="run directory or series CSV")
    common(p, with_t_end=False)
    p.add_argument("--out", metavar="PATH", help="write the verdict JSON here")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("resonances", help="list resonant triples feeding a radius")
    p.add_argument("radius", help="target radius: m, m/d or m@eta")
    p.add_argument("--xi", type=int, default=3)
    p.add_argument("--support", help="comma-separated radii (default: a lattice box)")
    p.add_argument("--max-level", type=int, default=1)
    p.add_argument("--max-numerator", type=int, default=12)
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_resonances)

    p = sub.add_parser("presets", help="list presets or print one")
    p.add_argument("name", nargs="?")
    p.set_defaults(func=cmd_presets)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, LatticeError, KeyError, ValueError, OSError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"error: {msg}", file=sys.stderr)
        return EXIT_BAD_INPUT


if __name__ == "__main__":
    sys.exit(main())
