"""Command-line entry point: prepare datasets, run sweeps, write reports."""
from __future__ import annotations

import argparse
import csv
import logging
import math
import os
import sys
import time
from dataclasses import dataclass
from pathlib import Path

from . import datasets, harness, pde
from .formats import Format

log = logging.getLogger("ngafft")

SUBCOMMANDS = ("prepare", "heat", "poisson", "image", "audio", "all", "report")
EXPERIMENTS = ("heat", "poisson", "image", "audio")


@dataclass(frozen=True)
class CliConfig:
    subcommand: str
    out: Path
    data_dir: Path
    formats: str | None = None
    reduced: bool = False
    synthetic: bool = False
    workers: int = 1
    seed: int = 0
    alpha: float = pde.DEFAULT_ALPHA
    integrator: str = "forward_euler"
    nt_max: int | None = None
    nx: tuple[int, ...] | None = None
    sigma: tuple[float, ...] = harness.POISSON_SIGMA
    nx_max: int = 100
    samples: int | None = None
    include_64: bool = False
    svg: bool = True
    trust_on_first_use: bool = False

    def __post_init__(self):
        if self.subcommand == "prepare" and self.synthetic:
            raise ValueError("--synthetic uses generated data; there is nothing to prepare")
        if self.workers < 1:
            raise ValueError("--workers must be >= 1")

    @property
    def sample_limit(self) -> int | None:
        if self.reduced:
            return min(self.samples or harness.REDUCED_SAMPLES, harness.REDUCED_SAMPLES)
        return self.samples

    @property
    def heat_nt_max(self) -> int:
        if self.nt_max is not None:
            return self.nt_max
        return harness.REDUCED_NT_MAX if self.reduced else harness.HEAT_NT_MAX


def _int_list(text):
    return tuple(int(v) for v in text.split(",") if v.strip())


def _float_list(text):
    return tuple(float(v) for v in text.split(",") if v.strip())


def _positive(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _common_options(top_level: bool) -> argparse.ArgumentParser:
    """Shared flags; only the top level carries defaults so that values given
    before the subcommand are not overwritten by the subparser."""
    env = os.environ
    p = argparse.ArgumentParser(add_help=False)

    def add(*names, default=None, **kw):
        p.add_argument(*names, default=default if top_level else argparse.SUPPRESS, **kw)

    add("--out", type=Path, default=Path(env.get("NGAFFT_OUT_DIR", "results")),
        help="output directory (env NGAFFT_OUT_DIR; default results)")
    add("--data-dir", type=Path, default=Path(env.get("NGAFFT_DATA_DIR", "data")),
        help="dataset root holding image/ and audio/ (env NGAFFT_DATA_DIR; default data)")
    add("--formats", help="comma-separated format names (default: all; PDEs skip 64-bit)")
    add("--reduced", action="store_true", default=False, help="at most 50 images/clips, heat Nt up to 50")
    add("--synthetic", action="store_true", default=False, help="generated images/audio, no network")
    add("--workers", type=_positive, default=int(env.get("NGAFFT_WORKERS", os.cpu_count() or 1)),
        help="worker processes (env NGAFFT_WORKERS; default: CPU count)")
    add("--seed", type=int, default=0, help="seed for synthetic data")
    add("--alpha", type=float, default=pde.DEFAULT_ALPHA, help="heat diffusivity")
    add("--integrator", choices=pde.INTEGRATORS, default="forward_euler")
    add("--nt-max", type=_positive, help="heat: Nt = 1..NT_MAX")
    add("--nx", type=_int_list, help="heat: comma-separated Nx values")
    add("--sigma", type=_float_list, default=harness.POISSON_SIGMA, help="poisson: sigma values")
    add("--nx-max", type=_positive, default=100, help="poisson: Nx = 2..NX_MAX")
    add("--samples", type=_positive, help="image/audio: number of inputs")
    add("--include-64", action="store_true", default=False, help="also run 64-bit formats in PDE sweeps")
    add("--no-svg", dest="svg", action="store_false", default=True, help="skip SVG charts")
    add("--trust-on-first-use", action="store_true", default=False,
        help="prepare: accept and record digests of unpinned archives")
    add("-v", "--verbose", action="store_true", default=False)
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ngafft", description=__doc__, parents=[_common_options(True)])
    sub = parser.add_subparsers(dest="subcommand", required=True)
    helps = {
        "prepare": "download and verify the image and audio datasets",
        "heat": "heat-equation sweep",
        "poisson": "Poisson-equation sweep",
        "image": "image round-trip FFT",
        "audio": "audio STFT",
        "all": "every experiment, then the report",
        "report": "summarise existing CSVs and redraw SVGs",
    }
    sub_common = _common_options(False)
    for name in SUBCOMMANDS:
        sub.add_parser(name, parents=[sub_common], help=helps[name])
    return parser


def config_from_args(args) -> CliConfig:
    return CliConfig(
        subcommand=args.subcommand, out=args.out, data_dir=args.data_dir, formats=args.formats,
        reduced=args.reduced, synthetic=args.synthetic, workers=args.workers, seed=args.seed,
        alpha=args.alpha, integrator=args.integrator, nt_max=args.nt_max, nx=args.nx,
        sigma=args.sigma, nx_max=args.nx_max, samples=args.samples, include_64=args.include_64,
        svg=args.svg, trust_on_first_use=args.trust_on_first_use,
    )


def _formats(cfg: CliConfig, kind: str) -> tuple[Format, ...]:
    return harness.format_list(cfg.formats, kind, cfg.include_64)


def experiment_spec(cfg: CliConfig, kind: str) -> harness.ExperimentSpec:
    if kind == "heat":
        return harness.heat_spec(_formats(cfg, kind), nx=cfg.nx or harness.HEAT_NX, nt_max=cfg.heat_nt_max,
                                 alpha=cfg.alpha, integrator=cfg.integrator)
    if kind == "poisson":
        return harness.poisson_spec(_formats(cfg, kind), sigma=cfg.sigma, nx=range(2, cfg.nx_max + 1))
    if cfg.synthetic:
        sources = harness.synthetic_sources(kind, cfg.sample_limit or harness.REDUCED_SAMPLES, cfg.seed)
    else:
        root = cfg.data_dir / kind
        if not root.is_dir():
            raise FileNotFoundError(f"{root} does not exist; run `ngafft prepare` or pass --synthetic")
        sources = harness.file_sources(kind, root, cfg.sample_limit)
        if not sources:
            raise FileNotFoundError(f"no {kind} files under {root}")
    return harness.ExperimentSpec(kind, _formats(cfg, kind), samples=sources, seed=cfg.seed)


def write_runs(records, path: Path) -> None:
    """Every run with its key and status (the CSVs hold only the distributions)."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("experiment", "format", "key", "status", "error"))
        for r in records:
            key = ";".join(f"{k}={v}" for k, v in r.key)
            err = "inf" if math.isinf(r.error) else repr(r.error)
            w.writerow((r.kind, r.format, key, r.status, err))


def run_experiment(cfg: CliConfig, kind: str) -> list[harness.RunRecord]:
    spec = experiment_spec(cfg, kind)
    n = len(spec.points())
    print(f"{kind}: {n} grid points x {len(spec.formats)} formats, {cfg.workers} worker(s)", flush=True)
    t0 = time.perf_counter()
    records = harness.run(spec, workers=cfg.workers)
    harness.emit(records, cfg.out, svg=cfg.svg)
    write_runs(records, cfg.out / "runs" / f"{kind}.csv")
    print(f"{kind}: {len(records)} runs in {time.perf_counter() - t0:.1f} s", flush=True)
    for family, recs in harness.group_by_family(records).items():
        print(f"\n[{family}]")
        print(harness.summary_table(harness.build_ced(recs, family)))
    errors = [r for r in records if r.status != "ok"]
    for r in errors:
        log.error("%s %s %s failed: %s", r.kind, r.format, r.key, r.message)
    return records


def report(cfg: CliConfig) -> int:
    csv_dir = cfg.out / "csv"
    files = sorted(csv_dir.glob("*.csv")) if csv_dir.is_dir() else []
    if not files:
        print(f"error: no results in {csv_dir}; run an experiment first", file=sys.stderr)
        return 2
    for path in files:
        ceds = harness.read_csv(path)
        print(f"\n[{path.stem}]")
        print(harness.summary_table(ceds))
        if cfg.svg:
            svg = cfg.out / "svg" / f"{path.stem}.svg"
            svg.parent.mkdir(parents=True, exist_ok=True)
            svg.write_text(harness.svg_text(list(ceds.values()), path.stem), encoding="utf-8")
    return 0


def prepare(cfg: CliConfig) -> int:
    for manifest in datasets.read_manifest(root=cfg.data_dir).values():
        try:
            path = datasets.fetch(manifest, trust_on_first_use=cfg.trust_on_first_use)
        except datasets.DatasetError as exc:
            print(f"error: {manifest.name}: {exc}", file=sys.stderr)
            return 1
        print(f"{manifest.name}: ready in {path}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = config_from_args(args)
    except ValueError as exc:
        parser.error(str(exc))
    if cfg.subcommand == "prepare":
        return prepare(cfg)
    if cfg.subcommand == "report":
        return report(cfg)
    kinds = EXPERIMENTS if cfg.subcommand == "all" else (cfg.subcommand,)
    failed = False
    try:
        for kind in kinds:
            records = run_experiment(cfg, kind)
            failed |= any(r.status != "ok" for r in records)
    except (FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 1 if failed else 0
