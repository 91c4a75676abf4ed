import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from PIL import Image

from ngafft import harness
from ngafft.formats import ALL_FORMATS, E4M3, E5M2, FLOAT16, FLOAT64, POSIT8, POSIT16, TAKUM8
from ngafft.harness import (
    CumulativeErrorDistribution,
    ExperimentSpec,
    RunRecord,
    SampleSource,
    build_ced,
    csv_text,
    read_csv,
    run,
    write_csv,
)


def _records(errors, fmt="posit8", kind="heat"):
    return [RunRecord(kind, fmt, (("nx", 100), ("nt", i + 1)), e) for i, e in enumerate(errors)]


# -- distributions --------------------------------------------------------------

def test_build_ced_examples():
    ced = build_ced(_records([0.5, math.inf, 0.1]))["posit8"]
    assert ced.finite == (0.1, 0.5) and ced.infinite == 1 and ced.total == 3
    ced = build_ced(_records([math.inf] * 4))["posit8"]
    assert ced.finite == () and ced.infinite == ced.total == 4
    assert build_ced(_records([0.0]))["posit8"].finite == (0.0,)
    assert build_ced([]) == {}


def test_ced_requires_sorted_errors():
    with pytest.raises(ValueError):
        CumulativeErrorDistribution("posit8", "x", (0.5, 0.1))


def test_medians():
    ced = build_ced(_records([0.3, math.inf, 0.1, math.inf, math.inf]))["posit8"]
    assert ced.median() == math.inf and ced.median_finite() == pytest.approx(0.2)
    assert ced.infinite_fraction == 0.6


def test_error_runs_are_excluded_from_distributions():
    recs = _records([0.1, 0.2]) + [RunRecord("heat", "posit8", (("nx", 1),), math.inf, status="error")]
    assert build_ced(recs)["posit8"].total == 2


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.sampled_from(["posit8", "float16", "takum8"]),
                          st.floats(0, 1e10) | st.just(math.inf)), max_size=40))
def test_ced_partitions_records(pairs):
    recs = [RunRecord("image", f, (("sample", str(i)),), e) for i, (f, e) in enumerate(pairs)]
    ceds = build_ced(recs)
    assert sum(c.total for c in ceds.values()) == len(recs)
    for name, c in ceds.items():
        errs = [e for f, e in pairs if f == name]
        assert len(c.finite) + c.infinite == len(errs)
        assert list(c.finite) == sorted(e for e in errs if not math.isinf(e))


# -- CSV ------------------------------------------------------------------------

def test_csv_examples():
    assert csv_text([]) == "experiment,format,rank,cumulative_fraction,error\n"
    ced = CumulativeErrorDistribution("posit8", "heat_nx100", (0.1, 0.5), 1)
    rows = csv_text([ced]).splitlines()[1:]
    assert rows == ["heat_nx100,posit8,1,0.3333333333333333,0.1",
                    "heat_nx100,posit8,2,0.6666666666666666,0.5",
                    "heat_nx100,posit8,3,1.0,inf"]


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(st.sampled_from([f.name for f in ALL_FORMATS]),
                          st.floats(0, 1e300) | st.just(math.inf)), max_size=30))
def test_csv_round_trip(tmp_path_factory, pairs):
    recs = [RunRecord("audio", f, (("sample", str(i)),), e) for i, (f, e) in enumerate(pairs)]
    ceds = build_ced(recs, "audio")
    path = write_csv(list(ceds.values()), tmp_path_factory.mktemp("csv") / "audio.csv")
    assert read_csv(path) == ceds
    assert path.read_text() == csv_text(list(ceds.values()))


def test_csv_write_error_names_path(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    with pytest.raises(OSError, match="file"):
        write_csv([], blocker / "sub" / "x.csv")


def test_svg_is_deterministic_and_marks_infinity():
    ceds = list(build_ced(_records([0.5, math.inf, 1e-3]) + _records([1e-9], "takum8")).values())
    a, b = harness.svg_text(ceds, "t"), harness.svg_text(ceds, "t")
    assert a == b and a.startswith("<svg") and "&#8734;" in a and "takum8" in a
    assert "<svg" in harness.svg_text([], "empty")


# -- specs and sweeps --------------------------------------------------------------

def test_spec_validation_and_defaults():
    with pytest.raises(ValueError):
        ExperimentSpec("heat", (), nx=(10,), nt=(1,))
    with pytest.raises(ValueError):
        ExperimentSpec("heat", (POSIT8,), nx=(10,), nt=())
    with pytest.raises(ValueError):
        ExperimentSpec("wave", (POSIT8,))
    assert all(f.width < 64 for f in harness.default_formats("heat"))
    assert len(harness.default_formats("poisson", include_64=True)) == 14
    assert len(harness.default_formats("image")) == 14
    spec = harness.heat_spec()
    assert spec.nx == (100, 1000, 5000, 10000) and spec.nt == tuple(range(1, 501))
    spec = harness.poisson_spec()
    assert spec.sigma == (0.1, 0.2, 0.3, 0.4) and spec.nx == tuple(range(2, 101))


def test_heat_ofp8_sweep_is_all_infinite():
    spec = harness.heat_spec((E4M3, E5M2), nx=(100,), nt_max=50)
    records = run(spec)
    assert len(records) == 100
    assert all(r.status == "ok" and math.isinf(r.error) for r in records)


def test_zero_image_float64(tmp_path):
    Image.fromarray(np.zeros((4, 6, 3), dtype=np.uint8)).save(tmp_path / "zero.png")
    spec = ExperimentSpec("image", (FLOAT64,), samples=harness.file_sources("image", tmp_path))
    (rec,) = run(spec)
    assert rec.error == 0 and rec.key == (("sample", "zero.png"),)


def _small_specs():
    return [
        harness.heat_spec((POSIT8, FLOAT16, TAKUM8), nx=(20, 100), nt_max=4),
        harness.poisson_spec((POSIT16, E5M2), sigma=(0.1, 0.3), nx=range(2, 7)),
        ExperimentSpec("image", (POSIT16, FLOAT64), samples=harness.synthetic_sources("image", 2, seed=4)),
    ]


@pytest.mark.parametrize("index", [0, 1, 2])
def test_runs_are_deterministic_and_parallel_safe(index):
    spec = _small_specs()[index]
    serial = run(spec, workers=1)
    assert [(r.key, r.format, r.error) for r in serial] == [(r.key, r.format, r.error) for r in run(spec)]
    parallel = run(spec, workers=3)
    assert [(r.key, r.format, r.error, r.status) for r in serial] == \
           [(r.key, r.format, r.error, r.status) for r in parallel]


def test_permuting_formats_changes_nothing():
    spec = harness.poisson_spec((POSIT16, E5M2, TAKUM8), sigma=(0.2,), nx=range(2, 6))
    flipped = harness.poisson_spec((TAKUM8, POSIT16, E5M2), sigma=(0.2,), nx=range(2, 6))
    a = {(r.key, r.format): r.error for r in run(spec)}
    b = {(r.key, r.format): r.error for r in run(flipped)}
    assert a == b


def test_reference_is_computed_once_per_point():
    spec = harness.poisson_spec((POSIT8, POSIT16, FLOAT16), sigma=(0.1,), nx=range(2, 6))
    before = harness.REFERENCE_EVALUATIONS
    records = run(spec, workers=1)
    assert harness.REFERENCE_EVALUATIONS - before == len(spec.points()) == 4
    assert len(records) == 12


def test_undecodable_input_gives_error_records(tmp_path):
    (tmp_path / "bad.png").write_bytes(b"garbage")
    spec = ExperimentSpec("image", (POSIT8, FLOAT16), samples=harness.file_sources("image", tmp_path))
    records = run(spec)
    assert [r.status for r in records] == ["error", "error"]
    assert build_ced(records) == {}


def test_emit_writes_one_csv_per_family(tmp_path):
    records = run(harness.heat_spec((POSIT8,), nx=(8, 12), nt_max=2))
    written = harness.emit(records, tmp_path)
    names = sorted(p.relative_to(tmp_path).as_posix() for p in written)
    assert names == ["csv/heat_nx12.csv", "csv/heat_nx8.csv", "svg/heat_nx12.svg", "svg/heat_nx8.svg"]
    assert read_csv(tmp_path / "csv" / "heat_nx8.csv")["posit8"].total == 2


def test_sample_source_labels(tmp_path):
    assert SampleSource("audio", seed=7).label == "synthetic-0007"
    assert SampleSource("image", path=str(tmp_path / "x.png")).label == "x.png"
    clip = SampleSource("audio", seed=7).load()
    assert clip.samples.size > 2048
