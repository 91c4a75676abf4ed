"""Experiment sweeps, cumulative error distributions and their CSV/SVG output.

A sweep is a list of grid points (a PDE parameter pair, an image, an audio
clip).  Each point is one task: its reference result is computed once and
every format is run against it.  Tasks are independent, so they can go to a
process pool; records carry their keys and are sorted afterwards, which makes
the output independent of scheduling.
"""
from __future__ import annotations

import csv
import io
import logging
import math
import os
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from . import datasets, pde
from .experiments import StftParams, image_roundtrip, relative_error, stft
from .formats import ALL_FORMATS, Format, parse_format

log = logging.getLogger(__name__)

KINDS = ("heat", "poisson", "image", "audio")
HEAT_NX = (100, 1000, 5000, 10000)
HEAT_NT_MAX = 500
REDUCED_NT_MAX = 50
POISSON_SIGMA = (0.1, 0.2, 0.3, 0.4)
POISSON_NX = tuple(range(2, 101))
REDUCED_SAMPLES = 50

_FORMAT_RANK = {f.name: i for i, f in enumerate(ALL_FORMATS)}


def default_formats(kind: str, include_64: bool = False) -> tuple[Format, ...]:
    """Every format; PDE sweeps drop the 64-bit ones unless asked."""
    if kind in ("heat", "poisson") and not include_64:
        return tuple(f for f in ALL_FORMATS if f.width < 64)
    return tuple(ALL_FORMATS)


@dataclass(frozen=True)
class SampleSource:
    """Where an image/audio point comes from: a file, or a synthetic generator."""

    kind: str  # "image" or "audio"
    path: str | None = None
    seed: int = 0
    name: str = ""

    def load(self):
        if self.path is not None:
            loader = datasets.load_image if self.kind == "image" else datasets.load_audio
            return loader(self.path)
        if self.kind == "image":
            return datasets.synthetic_images(1, self.seed)[0]
        return datasets.synthetic_audio(1, self.seed)[0]

    @property
    def label(self) -> str:
        return self.name or (Path(self.path).name if self.path else f"synthetic-{self.seed:04d}")


@dataclass(frozen=True)
class ExperimentSpec:
    """A sweep: grid points of one experiment kind crossed with formats.

    heat: ``nx`` x ``nt``; poisson: ``sigma`` x ``nx``; image/audio: ``samples``.
    """

    kind: str
    formats: tuple[Format, ...]
    nx: tuple[int, ...] = ()
    nt: tuple[int, ...] = ()
    sigma: tuple[float, ...] = ()
    samples: tuple[SampleSource, ...] = ()
    alpha: float = pde.DEFAULT_ALPHA
    integrator: str = "forward_euler"
    stft: StftParams = field(default_factory=StftParams)
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown experiment kind {self.kind!r}")
        if not self.formats:
            raise ValueError("format list is empty")
        if not self.points():
            raise ValueError(f"{self.kind} sweep has an empty parameter grid")

    def points(self) -> list[tuple]:
        if self.kind == "heat":
            return [(("nx", nx), ("nt", nt)) for nx in self.nx for nt in self.nt]
        if self.kind == "poisson":
            return [(("sigma", s), ("nx", nx)) for s in self.sigma for nx in self.nx]
        return [(("sample", s.label),) for s in self.samples]


def heat_spec(formats=None, nx=HEAT_NX, nt_max=HEAT_NT_MAX, alpha=pde.DEFAULT_ALPHA,
              integrator="forward_euler", include_64=False) -> ExperimentSpec:
    return ExperimentSpec("heat", tuple(formats or default_formats("heat", include_64)),
                          nx=tuple(nx), nt=tuple(range(1, nt_max + 1)), alpha=alpha, integrator=integrator)


def poisson_spec(formats=None, sigma=POISSON_SIGMA, nx=POISSON_NX, include_64=False) -> ExperimentSpec:
    return ExperimentSpec("poisson", tuple(formats or default_formats("poisson", include_64)),
                          sigma=tuple(sigma), nx=tuple(nx))


def synthetic_sources(kind: str, count: int, seed: int = 0) -> tuple[SampleSource, ...]:
    return tuple(SampleSource(kind, seed=seed + i) for i in range(count))


def file_sources(kind: str, root, limit: int | None = None) -> tuple[SampleSource, ...]:
    """Files under ``root`` in filename order (decoding is deferred to the task)."""
    suffix = ".png" if kind == "image" else ".wav"
    files = datasets._sorted_files(Path(root), suffix)
    if limit is not None:
        files = files[:limit]
    return tuple(SampleSource(kind, path=str(p)) for p in files)


@dataclass(frozen=True)
class RunRecord:
    kind: str
    format: str
    key: tuple
    error: float  # finite >= 0, or math.inf for any non-finite output
    wall_time: float = 0.0
    status: str = "ok"  # "ok" or "error" (the run could not be carried out)
    message: str = ""

    @property
    def is_infinite(self) -> bool:
        return math.isinf(self.error)

    def sort_key(self):
        return (self.kind, self.key, _FORMAT_RANK.get(self.format, 99), self.format)


#: how many reference solutions this process has computed (test probe)
REFERENCE_EVALUATIONS = 0


def _reference(spec: ExperimentSpec, point: dict, sample):
    global REFERENCE_EVALUATIONS
    REFERENCE_EVALUATIONS += 1
    if spec.kind == "heat":
        return pde.solve_heat(_heat_problem(spec, point), None)
    if spec.kind == "poisson":
        return pde.solve_poisson(pde.PoissonProblem(point["nx"], point["sigma"]), None)
    if spec.kind == "image":
        return sample.planes
    return stft(sample, spec.stft, None)


def _heat_problem(spec, point):
    return pde.HeatProblem(point["nx"], point["nt"], spec.alpha, integrator=spec.integrator)


def _solve(spec: ExperimentSpec, point: dict, sample, fmt: Format):
    if spec.kind == "heat":
        return pde.solve_heat(_heat_problem(spec, point), fmt)
    if spec.kind == "poisson":
        return pde.solve_poisson(pde.PoissonProblem(point["nx"], point["sigma"]), fmt)
    if spec.kind == "image":
        return image_roundtrip(sample, fmt)
    return stft(sample, spec.stft, fmt)


def run_point(spec: ExperimentSpec, index: int) -> list[RunRecord]:
    """All formats at grid point ``index`` against one shared reference."""
    key = spec.points()[index]
    point = dict(key)
    sample = None
    try:
        if spec.kind in ("image", "audio"):
            sample = spec.samples[index].load()
        ref = _reference(spec, point, sample)
    except (datasets.DatasetError, ValueError) as exc:
        log.warning("%s %s skipped: %s", spec.kind, key, exc)
        return [RunRecord(spec.kind, f.name, key, math.inf, 0.0, "error", str(exc)) for f in spec.formats]
    records = []
    for fmt in spec.formats:
        t0 = time.perf_counter()
        err = relative_error(_solve(spec, point, sample, fmt), ref, fmt)
        records.append(RunRecord(spec.kind, fmt.name, key, float(err), time.perf_counter() - t0))
    return records


def _run_chunk(args):
    spec, indices = args
    return [r for i in indices for r in run_point(spec, i)]


def run(spec: ExperimentSpec, workers: int = 1) -> list[RunRecord]:
    """Every (grid point, format) run of ``spec``, sorted by key."""
    n = len(spec.points())
    if workers <= 1 or n == 1:
        records = [r for i in range(n) for r in run_point(spec, i)]
    else:
        # interleaved chunks balance cheap and expensive points across workers
        chunks = [(spec, list(range(w, n, workers))) for w in range(min(workers, n))]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = [r for part in pool.map(_run_chunk, chunks) for r in part]
    return sorted(records, key=RunRecord.sort_key)


# -- cumulative error distributions -------------------------------------------

@dataclass(frozen=True)
class CumulativeErrorDistribution:
    format: str
    experiment: str
    finite: tuple[float, ...] = ()
    infinite: int = 0

    def __post_init__(self):
        if list(self.finite) != sorted(self.finite):
            raise ValueError("finite errors must be sorted")

    @property
    def total(self) -> int:
        return len(self.finite) + self.infinite

    @property
    def infinite_fraction(self) -> float:
        return self.infinite / self.total if self.total else 0.0

    def median(self) -> float:
        """Median over all runs, non-finite runs counting as +inf."""
        if not self.total:
            return math.nan
        return statistics.median(list(self.finite) + [math.inf] * self.infinite)

    def median_finite(self) -> float:
        return statistics.median(self.finite) if self.finite else math.nan


def family_of(record: RunRecord) -> str:
    """The CSV a record belongs to: fixed parameters of its curve family."""
    if record.kind == "heat":
        return f"heat_nx{dict(record.key)['nx']}"
    if record.kind == "poisson":
        return f"poisson_sigma{dict(record.key)['sigma']:g}"
    return record.kind


def build_ced(records: Iterable[RunRecord], experiment: str = "") -> dict[str, CumulativeErrorDistribution]:
    """One distribution per format; runs with status "error" are not counted."""
    by_format: dict[str, list[float]] = {}
    for r in records:
        if r.status != "ok":
            continue
        by_format.setdefault(r.format, []).append(r.error)
    out = {}
    for name in sorted(by_format, key=lambda n: (_FORMAT_RANK.get(n, 99), n)):
        errs = by_format[name]
        finite = tuple(sorted(e for e in errs if not math.isinf(e)))
        out[name] = CumulativeErrorDistribution(name, experiment, finite, len(errs) - len(finite))
    return out


def group_by_family(records: Iterable[RunRecord]) -> dict[str, list[RunRecord]]:
    groups: dict[str, list[RunRecord]] = {}
    for r in records:
        groups.setdefault(family_of(r), []).append(r)
    # numeric order of the family parameter (heat_nx5000 before heat_nx10000)
    return dict(sorted(groups.items(), key=lambda kv: min(r.sort_key() for r in kv[1])))


# -- output -----------------------------------------------------------------

CSV_COLUMNS = ("experiment", "format", "rank", "cumulative_fraction", "error")


def csv_text(ceds: Sequence[CumulativeErrorDistribution]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for c in ceds:
        errors = [repr(e) for e in c.finite] + ["inf"] * c.infinite
        for rank, e in enumerate(errors, 1):
            w.writerow((c.experiment, c.format, rank, repr(rank / c.total), e))
    return buf.getvalue()


def write_csv(ceds: Sequence[CumulativeErrorDistribution], path) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(csv_text(ceds), encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc
    return path


def read_csv(path) -> dict[str, CumulativeErrorDistribution]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    grouped: dict[str, list[dict]] = {}
    for row in rows:
        grouped.setdefault(row["format"], []).append(row)
    out = {}
    for name, rs in grouped.items():
        rs.sort(key=lambda r: int(r["rank"]))
        finite = tuple(float(r["error"]) for r in rs if r["error"] != "inf")
        out[name] = CumulativeErrorDistribution(name, rs[0]["experiment"], finite, len(rs) - len(finite))
    return out


_PALETTE = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2",
            "#7f7f7f", "#bcbd22", "#17becf", "#393b79", "#637939", "#8c6d31", "#843c39")


def svg_text(ceds: Sequence[CumulativeErrorDistribution], title: str = "") -> str:
    """Step plot of cumulative fraction over log10(error), with an inf column."""
    W, H, left, right, top, bottom = 640, 400, 60, 150, 30, 40
    pw, ph = W - left - right, H - top - bottom
    finite = [e for c in ceds for e in c.finite if e > 0]
    lo = math.floor(math.log10(min(finite))) if finite else -16
    hi = math.ceil(math.log10(max(finite))) if finite else 0
    hi = max(hi, lo + 1)
    inf_x = left + pw + 20

    def xpos(e):
        if math.isinf(e):
            return inf_x
        if e <= 0:
            return left
        return left + pw * (math.log10(e) - lo) / (hi - lo)

    def ypos(frac):
        return top + ph * (1 - frac)

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="11">',
             f'<text x="{left}" y="18">{title}</text>',
             f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="#000"/>']
    for d in range(lo, hi + 1):
        x = xpos(10.0 ** d)
        parts.append(f'<text x="{x:.1f}" y="{H - bottom + 15}" text-anchor="middle">1e{d}</text>')
    parts.append(f'<text x="{inf_x}" y="{H - bottom + 15}" text-anchor="middle">&#8734;</text>')
    for f in (0, 0.5, 1):
        parts.append(f'<text x="{left - 5}" y="{ypos(f) + 4:.1f}" text-anchor="end">{f:g}</text>')
    for i, c in enumerate(ceds):
        if not c.total:
            continue
        colour = _PALETTE[i % len(_PALETTE)]
        errors = list(c.finite) + [math.inf] * c.infinite
        pts = [(xpos(errors[0]), ypos(0))]
        for rank, e in enumerate(errors, 1):
            x = xpos(e)
            pts += [(x, ypos((rank - 1) / c.total)), (x, ypos(rank / c.total))]
        path = " ".join(f"{x:.2f},{y:.2f}" for x, y in pts)
        parts.append(f'<polyline points="{path}" fill="none" stroke="{colour}"/>')
        ly = top + 12 * i + 10
        parts.append(f'<text x="{inf_x + 15}" y="{ly}" fill="{colour}">{c.format}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def emit(records: Sequence[RunRecord], out_dir, svg: bool = True) -> list[Path]:
    """Write <out>/csv/<family>.csv (and <out>/svg/<family>.svg) for every family."""
    out_dir = Path(out_dir)
    written = []
    for family, recs in group_by_family(records).items():
        ceds = list(build_ced(recs, family).values())
        written.append(write_csv(ceds, out_dir / "csv" / f"{family}.csv"))
        if svg:
            path = out_dir / "svg" / f"{family}.svg"
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(svg_text(ceds, family), encoding="utf-8")
            written.append(path)
    return written


def summary_table(ceds: dict[str, CumulativeErrorDistribution]) -> str:
    lines = [f"{'format':<10} {'runs':>5} {'median':>12} {'inf':>6}"]
    for c in ceds.values():
        med = c.median()
        med_s = "inf" if math.isinf(med) else f"{med:.4g}"
        lines.append(f"{c.format:<10} {c.total:>5} {med_s:>12} {c.infinite_fraction:>6.1%}")
    return "\n".join(lines)


def format_list(names: str | None, kind: str, include_64: bool = False) -> tuple[Format, ...]:
    if not names:
        return default_formats(kind, include_64)
    return tuple(parse_format(n.strip()) for n in names.split(",") if n.strip())


def cpu_count() -> int:
    return os.cpu_count() or 1
