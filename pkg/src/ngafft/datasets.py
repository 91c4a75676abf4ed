"""Dataset manifests, digest-checked downloads, file loaders and synthetic data."""
from __future__ import annotations

import contextlib
import fcntl
import hashlib
import logging
import os
import shutil
import tarfile
import urllib.error
import urllib.request
import wave
import zipfile
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterator

import numpy as np
from PIL import Image

from .experiments import AudioSample, ImageSample

log = logging.getLogger(__name__)

#: which local sub-directory each dataset extracts into
SUBDIRS = {"div2k_bicubic_x2": "image", "esc50": "audio"}
UNPINNED = "-"


class DatasetError(Exception):
    """A file could not be decoded; the run for it is skipped."""


class DigestMismatch(DatasetError):
    """A download does not match its pinned digest (never retried)."""


class FetchError(DatasetError):
    """Network failure; retrying later may succeed."""


@dataclass(frozen=True)
class Source:
    url: str
    sha256: str = UNPINNED

    @property
    def filename(self) -> str:
        return self.url.rstrip("/").rsplit("/", 1)[-1]


@dataclass(frozen=True)
class DatasetManifest:
    name: str
    sources: tuple[Source, ...] = ()
    root: Path = Path("data")
    limit: int | None = None

    def __post_init__(self):
        if self.limit is not None and self.limit < 1:
            raise ValueError("sample limit must be >= 1")

    @property
    def subdir(self) -> Path:
        return Path(self.root) / SUBDIRS.get(self.name, self.name)


def read_manifest(text: str | None = None, root: Path | str = "data") -> dict[str, DatasetManifest]:
    """Parse ``name url digest`` lines (default: the packaged manifest)."""
    if text is None:
        text = resources.files("ngafft").joinpath("data/manifest.txt").read_text()
    sources: dict[str, list[Source]] = {}
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 3:
            raise ValueError(f"bad manifest line: {line!r}")
        name, url, digest = parts
        sources.setdefault(name, []).append(Source(url, digest.lower()))
    return {n: DatasetManifest(n, tuple(s), Path(root)) for n, s in sources.items()}


def sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


@contextlib.contextmanager
def _single_flight(path: Path):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        fcntl.flock(fh, fcntl.LOCK_EX)
        try:
            yield
        finally:
            fcntl.flock(fh, fcntl.LOCK_UN)


def _download(url: str, dest: Path) -> None:
    tmp = dest.with_suffix(dest.suffix + ".part")
    try:
        with urllib.request.urlopen(url, timeout=60) as resp, open(tmp, "wb") as out:
            shutil.copyfileobj(resp, out)
    except (urllib.error.URLError, OSError) as exc:
        tmp.unlink(missing_ok=True)
        raise FetchError(f"download of {url} failed: {exc}") from exc
    tmp.replace(dest)


def _extract(archive: Path, into: Path) -> None:
    into.mkdir(parents=True, exist_ok=True)
    if zipfile.is_zipfile(archive):
        with zipfile.ZipFile(archive) as zf:
            zf.extractall(into)
    elif tarfile.is_tarfile(archive):
        with tarfile.open(archive) as tf:
            tf.extractall(into, filter="data")
    else:
        shutil.copy2(archive, into / archive.name)


def fetch(manifest: DatasetManifest, *, trust_on_first_use: bool = False) -> Path:
    """Download, verify and extract a dataset; returns its local directory.

    Idempotent: a completed dataset is recognised by its stamp file and
    returned without touching the network.  Sources without a pinned digest
    are refused unless ``trust_on_first_use`` is set, in which case the digest
    seen now is recorded next to the archive and enforced on every later fetch.
    """
    target = manifest.subdir
    stamp = target / ".fetched"
    downloads = Path(manifest.root) / "downloads"
    with _single_flight(Path(manifest.root) / f".{manifest.name}.lock"):
        if stamp.exists():
            return target
        recorded = []
        for src in manifest.sources:
            archive = downloads / src.filename
            trusted = archive.with_name(archive.name + ".sha256")
            expected = src.sha256
            if expected == UNPINNED and trusted.exists():
                expected = trusted.read_text().strip()
            if expected == UNPINNED and not trust_on_first_use:
                raise DigestMismatch(
                    f"{src.url} has no pinned digest; pin it in the manifest or pass trust_on_first_use")
            downloads.mkdir(parents=True, exist_ok=True)
            if not archive.exists():
                log.info("downloading %s", src.url)
                _download(src.url, archive)
            digest = sha256_file(archive)
            if expected != UNPINNED and digest != expected:
                raise DigestMismatch(f"{archive.name}: expected {expected}, got {digest}")
            if expected == UNPINNED:
                trusted.write_text(digest + "\n")
            _extract(archive, target)
            recorded.append(f"{src.url} {digest}")
        stamp.write_text("\n".join(recorded) + "\n")
    return target


# -- loaders ----------------------------------------------------------------

def load_image(path: Path | str) -> ImageSample:
    """8-bit RGB image; channel values are code/255 in [0, 1]."""
    try:
        with Image.open(path) as im:
            rgb = np.asarray(im.convert("RGB"), dtype=np.uint8)
    except (OSError, ValueError) as exc:
        raise DatasetError(f"cannot decode image {path}: {exc}") from exc
    return ImageSample(np.ascontiguousarray(rgb.transpose(2, 0, 1)), name=Path(path).name)


def load_audio(path: Path | str) -> AudioSample:
    """16-bit PCM mono WAV; samples are code/32768 in [-1, 1)."""
    try:
        with wave.open(str(path), "rb") as wf:
            if wf.getnchannels() != 1:
                raise DatasetError(f"{path}: expected mono, got {wf.getnchannels()} channels")
            if wf.getsampwidth() != 2 or wf.getcomptype() != "NONE":
                raise DatasetError(f"{path}: expected 16-bit PCM")
            rate = wf.getframerate()
            raw = wf.readframes(wf.getnframes())
    except (wave.Error, EOFError, OSError) as exc:
        raise DatasetError(f"cannot decode audio {path}: {exc}") from exc
    codes = np.frombuffer(raw, dtype="<i2")
    if codes.size == 0:
        raise DatasetError(f"{path}: no samples")
    # code / 2**15 is exact in float64
    return AudioSample(codes.astype(np.float64) / 32768.0, rate, name=Path(path).name)


def _sorted_files(root: Path, suffix: str) -> list[Path]:
    files = [p for p in Path(root).rglob(f"*{suffix}") if p.is_file()]
    return sorted(files, key=lambda p: (p.name, str(p)))


def _iter_loaded(files, loader, limit):
    count = 0
    for path in files:
        if limit is not None and count >= limit:
            return
        try:
            item = loader(path)
        except DatasetError as exc:
            log.warning("skipping %s: %s", path, exc)
            continue
        count += 1
        yield item


def iter_images(root: Path | str, limit: int | None = None) -> Iterator[ImageSample]:
    """PNG images under ``root`` in filename order, at most ``limit`` of them."""
    return _iter_loaded(_sorted_files(Path(root), ".png"), load_image, limit)


def iter_audio(root: Path | str, limit: int | None = None) -> Iterator[AudioSample]:
    """WAV clips under ``root`` in filename order, at most ``limit`` of them."""
    return _iter_loaded(_sorted_files(Path(root), ".wav"), load_audio, limit)


# -- synthetic data ----------------------------------------------------------

SYNTHETIC_KINDS = ("noise_image", "gradient_image", "chirp_audio", "tone_audio")


def _to_codes(values: np.ndarray) -> np.ndarray:
    return np.clip(np.rint(values * 255), 0, 255).astype(np.uint8)


def synthesize(kind: str, seed: int, size, **options):
    """Deterministic synthetic sample.

    Images take ``size = (width, height)``; audio takes a sample count.
    ``gradient_image`` ramps left to right with values j/(w-1) (exact when
    w-1 divides 255) and ignores the seed; ``tone_audio`` is a unit-amplitude
    sinusoid (``freq``, default 440 Hz); ``chirp_audio`` is a 16-bit PCM
    linear chirp with seed-dependent frequencies, amplitude and noise floor.
    """
    rate = options.get("sample_rate", 44100)
    if kind == "noise_image":
        w, h = size
        rng = np.random.default_rng(seed)
        return ImageSample(rng.integers(0, 256, (3, h, w), dtype=np.uint8), name=f"noise-{seed}")
    if kind == "gradient_image":
        w, h = size
        ramp = np.arange(w) / max(w - 1, 1)
        codes = np.broadcast_to(_to_codes(ramp), (3, h, w)).copy()
        return ImageSample(codes, name="gradient")
    if kind == "tone_audio":
        n = int(size)
        freq = options.get("freq", 440.0)
        return AudioSample(np.sin(2 * np.pi * freq * np.arange(n) / rate), rate, name=f"tone-{freq:g}")
    if kind == "chirp_audio":
        n = int(size)
        rng = np.random.default_rng(seed)
        f0, f1 = rng.uniform(50, 2000), rng.uniform(2000, 15000)
        amp = rng.uniform(0.2, 0.9)
        t = np.arange(n) / rate
        dur = n / rate
        x = amp * np.sin(2 * np.pi * (f0 * t + (f1 - f0) * t * t / (2 * dur)))
        x += rng.normal(0, 0.01, n)
        codes = np.clip(np.rint(x * 32768), -32768, 32767)
        return AudioSample(codes / 32768.0, rate, name=f"chirp-{seed}")
    raise ValueError(f"unknown synthetic kind {kind!r}; expected one of {SYNTHETIC_KINDS}")


#: synthetic stand-in sizes: 1/15 of a DIV2K image side, and four STFT frames
SYNTHETIC_IMAGE_SIZE = (68, 45)
SYNTHETIC_AUDIO_LENGTH = 5120


def synthetic_images(count: int, seed: int = 0, size=SYNTHETIC_IMAGE_SIZE) -> list[ImageSample]:
    """Noise-over-gradient images: the average of a seeded noise image and a ramp."""
    out = []
    grad = synthesize("gradient_image", 0, size).codes.astype(np.uint16)
    for i in range(count):
        noise = synthesize("noise_image", seed + i, size).codes.astype(np.uint16)
        g = grad if i % 2 == 0 else grad[:, :, ::-1]
        out.append(ImageSample(((noise + g) // 2).astype(np.uint8), name=f"synthetic-{seed + i:04d}"))
    return out


def synthetic_audio(count: int, seed: int = 0, length: int = SYNTHETIC_AUDIO_LENGTH) -> list[AudioSample]:
    return [synthesize("chirp_audio", seed + i, length) for i in range(count)]
