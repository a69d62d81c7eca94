"""Dataset files and synthetic data generation.

The on-disk format is a single little-endian binary file: a fixed magic,
version, endianness flag and kind byte, a kind-specific header (counts,
dims, labels, channel names, a layout-reference string), then the raw
float64 payload. Round trips are byte-exact and every parse error names the
byte offset it faulted at.

Synthetic data comes in two flavors: ready-made 4-D feature tensors where
each class plants an amplitude bump in chosen (band, grid-region,
time-window) cells over Gaussian noise, and raw multichannel signals where
the same signatures become band-limited sinusoids so the whole feature
pipeline can be exercised end to end.
"""

from __future__ import annotations

import csv
import struct
from dataclasses import dataclass

import numpy as np

from .features import DEFAULT_BANDS, RawRecording
from .layout import ElectrodeGrid, FeatureTensor4D, scatter_to_grid

__all__ = [
    "Signature",
    "SyntheticSpec",
    "default_spec",
    "write_dataset",
    "read_dataset",
    "write_raw_set",
    "read_raw_set",
    "read_kind",
    "generate_synthetic",
    "generate_synthetic_raw",
    "import_csv",
]

_MAGIC = b"PSTDATA\0"
_VERSION = 1
_LITTLE = 1
KIND_TENSOR4D = 1
KIND_RAW = 2


@dataclass(frozen=True)
class Signature:
    """One class activation: add ``amplitude`` to band ``band`` inside the
    half-open grid region rows [r0, r1) x cols [c0, c1) during time slices
    [t0, t1)."""

    band: int
    region: tuple[int, int, int, int]  # r0, r1, c0, c1
    window: tuple[int, int]  # t0, t1
    amplitude: float


@dataclass(frozen=True)
class SyntheticSpec:
    n_classes: int
    n_per_class: int
    t: int
    s: int
    v: int
    h: int
    signatures: tuple[tuple[Signature, ...], ...]  # one tuple per class
    noise_sigma: float
    seed: int
    min_separation_sigmas: float = 3.0
    sample_rate: float = 200.0

    def __post_init__(self):
        if self.n_classes < 1 or len(self.signatures) != self.n_classes:
            raise ValueError(
                f"{self.n_classes} classes but {len(self.signatures)} signature groups"
            )
        if self.n_per_class < 0:
            raise ValueError(f"n_per_class must be >= 0, got {self.n_per_class}")
        if self.noise_sigma < 0:
            raise ValueError(f"noise_sigma must be >= 0, got {self.noise_sigma}")
        for cls, group in enumerate(self.signatures):
            for sig in group:
                r0, r1, c0, c1 = sig.region
                t0, t1 = sig.window
                if not (0 <= sig.band < self.s):
                    raise ValueError(f"class {cls}: band {sig.band} outside {self.s} bands")
                if not (0 <= r0 < r1 <= self.v and 0 <= c0 < c1 <= self.h):
                    raise ValueError(f"class {cls}: region {sig.region} outside {self.v}x{self.h}")
                if not (0 <= t0 < t1 <= self.t):
                    raise ValueError(f"class {cls}: window {sig.window} outside {self.t} slices")
                if not np.isfinite(sig.amplitude):
                    raise ValueError(f"class {cls}: non-finite amplitude")


def default_spec(seed: int = 0) -> SyntheticSpec:
    """Three classes distinguished by mid/high-band bumps in distinct regions."""
    return SyntheticSpec(
        n_classes=3,
        n_per_class=30,
        t=9,
        s=5,
        v=8,
        h=9,
        signatures=(
            (Signature(band=2, region=(0, 4, 0, 5), window=(0, 9), amplitude=2.0),),
            (Signature(band=3, region=(4, 8, 4, 9), window=(0, 9), amplitude=2.0),),
            (Signature(band=4, region=(2, 6, 2, 7), window=(0, 9), amplitude=2.0),),
        ),
        noise_sigma=0.5,
        seed=seed,
    )


# ---------------------------------------------------------------------------
# binary serialization


class _Cursor:
    """Tracks a byte offset through a blob and names it in every error."""

    def __init__(self, blob: bytes, origin: str):
        self.blob = blob
        self.offset = 0
        self.origin = origin

    def take(self, n: int, what: str) -> bytes:
        if self.offset + n > len(self.blob):
            raise ValueError(
                f"{self.origin}: truncated reading {what}: need {n} bytes at offset "
                f"{self.offset}, file has {len(self.blob)}"
            )
        out = self.blob[self.offset : self.offset + n]
        self.offset += n
        return out

    def unpack(self, fmt: str, what: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt), what))

    def take_string(self, what: str) -> str:
        (n,) = self.unpack("<H", f"{what} length")
        return self.take(n, what).decode("utf-8")

    def take_floats(self, count: int, what: str) -> np.ndarray:
        raw = self.take(count * 8, what)
        return np.frombuffer(raw, dtype="<f8").copy()

    def done(self, what: str) -> None:
        if self.offset != len(self.blob):
            raise ValueError(
                f"{self.origin}: {len(self.blob) - self.offset} trailing bytes "
                f"after {what} at offset {self.offset}"
            )


def _pack_string(s: str) -> bytes:
    raw = s.encode("utf-8")
    if len(raw) > 0xFFFF:
        raise ValueError(f"string too long to serialize ({len(raw)} bytes)")
    return struct.pack("<H", len(raw)) + raw


def _header(kind: int) -> bytes:
    return _MAGIC + struct.pack("<IBB", _VERSION, _LITTLE, kind)


def _check_header(cur: _Cursor) -> int:
    magic = cur.take(len(_MAGIC), "magic")
    if magic != _MAGIC:
        raise ValueError(f"{cur.origin}: bad magic {magic!r} at offset 0")
    version, endian, kind = cur.unpack("<IBB", "version/endian/kind")
    if version != _VERSION:
        raise ValueError(
            f"{cur.origin}: unsupported version {version} at offset {len(_MAGIC)}"
        )
    if endian != _LITTLE:
        raise ValueError(f"{cur.origin}: unsupported byte order flag {endian}")
    return kind


def _check_labels(labels: np.ndarray, origin: str) -> None:
    if labels.size and labels.min() < 0:
        raise ValueError(f"{origin}: negative label {labels.min()}; samples must be labeled")


def write_dataset(path, samples, layout_ref: str = "") -> None:
    """Serialize labeled 4-D samples; all must share one (T,S,V,H) shape."""
    samples = list(samples)
    if not samples:
        raise ValueError("refusing to write an empty dataset")
    shape = samples[0].data.shape
    for i, s in enumerate(samples):
        if s.data.shape != shape:
            raise ValueError(f"sample {i} has shape {s.data.shape}, first sample has {shape}")
        if s.label < 0:
            raise ValueError(f"sample {i} is unlabeled (label {s.label})")
    labels = np.array([s.label for s in samples], dtype="<i4")
    with open(path, "wb") as fh:
        fh.write(_header(KIND_TENSOR4D))
        fh.write(struct.pack("<IIIII", len(samples), *shape))
        fh.write(labels.tobytes())
        fh.write(_pack_string(layout_ref))
        for s in samples:
            fh.write(np.ascontiguousarray(s.data, dtype="<f8").tobytes())


def read_dataset(path):
    """Inverse of write_dataset: returns (samples, layout_ref)."""
    with open(path, "rb") as fh:
        cur = _Cursor(fh.read(), str(path))
    kind = _check_header(cur)
    if kind != KIND_TENSOR4D:
        raise ValueError(f"{cur.origin}: kind {kind} is not a 4-D feature dataset")
    n, t, s, v, h = cur.unpack("<IIIII", "counts")
    labels = np.frombuffer(cur.take(4 * n, "labels"), dtype="<i4")
    _check_labels(labels, cur.origin)
    layout_ref = cur.take_string("layout reference")
    per = t * s * v * h
    samples = []
    for i in range(n):
        data = cur.take_floats(per, f"sample {i} payload").reshape(t, s, v, h)
        samples.append(FeatureTensor4D(data=data, label=int(labels[i])))
    cur.done("payload")
    return samples, layout_ref


def write_raw_set(path, recordings, labels, layout_ref: str = "") -> None:
    """Serialize raw recordings; all must share channels, length, and rate."""
    recordings = list(recordings)
    labels = np.asarray(labels, dtype="<i4")
    if not recordings:
        raise ValueError("refusing to write an empty recording set")
    if labels.shape != (len(recordings),):
        raise ValueError(f"{len(recordings)} recordings but labels shape {labels.shape}")
    first = recordings[0]
    for i, r in enumerate(recordings):
        if r.channels != first.channels:
            raise ValueError(f"recording {i} channel names differ from recording 0")
        if r.samples.shape != first.samples.shape:
            raise ValueError(
                f"recording {i} shape {r.samples.shape} differs from {first.samples.shape}"
            )
        if r.sample_rate != first.sample_rate:
            raise ValueError(f"recording {i} sample rate differs")
    c, n_samp = first.samples.shape
    with open(path, "wb") as fh:
        fh.write(_header(KIND_RAW))
        fh.write(struct.pack("<IIId", len(recordings), c, n_samp, first.sample_rate))
        fh.write(labels.tobytes())
        fh.write(struct.pack("<H", c))
        for name in first.channels:
            fh.write(_pack_string(name))
        fh.write(_pack_string(layout_ref))
        for r in recordings:
            fh.write(np.ascontiguousarray(r.samples, dtype="<f8").tobytes())


def read_raw_set(path):
    """Inverse of write_raw_set: returns (recordings, labels, layout_ref)."""
    with open(path, "rb") as fh:
        cur = _Cursor(fh.read(), str(path))
    kind = _check_header(cur)
    if kind != KIND_RAW:
        raise ValueError(f"{cur.origin}: kind {kind} is not a raw recording set")
    n, c, n_samp, rate = cur.unpack("<IIId", "counts")
    labels = np.frombuffer(cur.take(4 * n, "labels"), dtype="<i4")
    _check_labels(labels, cur.origin)
    (name_count,) = cur.unpack("<H", "channel name count")
    if name_count != c:
        raise ValueError(f"{cur.origin}: {name_count} channel names for {c} channels")
    names = tuple(cur.take_string(f"channel name {i}") for i in range(c))
    layout_ref = cur.take_string("layout reference")
    recordings = []
    for i in range(n):
        data = cur.take_floats(c * n_samp, f"recording {i} payload").reshape(c, n_samp)
        recordings.append(RawRecording(channels=names, samples=data, sample_rate=rate))
    cur.done("payload")
    return recordings, np.asarray(labels, dtype=np.int64), layout_ref


def read_kind(path) -> int:
    """Peek at a file's kind byte (KIND_TENSOR4D or KIND_RAW)."""
    with open(path, "rb") as fh:
        cur = _Cursor(fh.read(len(_MAGIC) + 6), str(path))
    return _check_header(cur)


# ---------------------------------------------------------------------------
# synthetic generation


def _class_means(spec: SyntheticSpec) -> np.ndarray:
    means = np.zeros((spec.n_classes, spec.t, spec.s, spec.v, spec.h))
    for cls, group in enumerate(spec.signatures):
        for sig in group:
            r0, r1, c0, c1 = sig.region
            t0, t1 = sig.window
            means[cls, t0:t1, sig.band, r0:r1, c0:c1] += sig.amplitude
    return means


def _check_separation(spec: SyntheticSpec, means: np.ndarray) -> None:
    if spec.min_separation_sigmas <= 0 or spec.n_classes < 2:
        return
    need = spec.min_separation_sigmas * spec.noise_sigma
    for i in range(spec.n_classes):
        cells = means[i] != 0
        if not cells.any():
            raise ValueError(f"class {i} has no signature cells to separate it")
        for j in range(spec.n_classes):
            if i == j:
                continue
            gap = np.abs(means[i] - means[j])[cells].max()
            if gap < need:
                raise ValueError(
                    f"classes {i} and {j} separated by {gap:.3g} in signature cells, "
                    f"below {spec.min_separation_sigmas} x sigma = {need:.3g}"
                )


def generate_synthetic(spec: SyntheticSpec):
    """Labeled 4-D samples: class mean plus N(0, sigma) noise per cell.

    Each sample draws from its own (seed, index) stream, so any sample is
    reproducible in isolation and generation order does not matter.
    """
    means = _class_means(spec)
    _check_separation(spec, means)
    samples = []
    index = 0
    for cls in range(spec.n_classes):
        for _ in range(spec.n_per_class):
            rng = np.random.default_rng([spec.seed, index])
            noise = rng.normal(0.0, spec.noise_sigma, size=means[cls].shape)
            samples.append(FeatureTensor4D(data=means[cls] + noise, label=cls))
            index += 1
    return samples


def generate_synthetic_raw(spec: SyntheticSpec, grid: ElectrodeGrid, bands=DEFAULT_BANDS):
    """Raw recordings whose band-limited bursts mirror the spec's signatures.

    Each signature becomes an in-band sinusoid (band-center carrier, random
    phase) on the channels inside its region during its window seconds, on
    top of white noise, so the feature pipeline recovers the contrasts.
    Returns (recordings, labels); slice lengths of 1 s are assumed.
    """
    if spec.v != grid.rows or spec.h != grid.cols:
        raise ValueError(
            f"spec grid {spec.v}x{spec.h} does not match layout {grid.rows}x{grid.cols}"
        )
    if spec.s > len(bands):
        raise ValueError(f"spec uses {spec.s} bands but only {len(bands)} are defined")
    rows, cols = grid.indices()
    n_samples_per_s = int(round(spec.sample_rate))
    n_total = spec.t * n_samples_per_s
    time = np.arange(n_total) / spec.sample_rate
    recordings = []
    labels = []
    index = 0
    for cls in range(spec.n_classes):
        for _ in range(spec.n_per_class):
            rng = np.random.default_rng([spec.seed, 500_000 + index])
            data = rng.normal(0.0, spec.noise_sigma, size=(grid.n_channels, n_total))
            for sig in spec.signatures[cls]:
                _, low, high = bands[sig.band]
                freq = 0.5 * (low + high)
                r0, r1, c0, c1 = sig.region
                t0, t1 = sig.window
                in_region = (rows >= r0) & (rows < r1) & (cols >= c0) & (cols < c1)
                gate = (time >= t0) & (time < t1)
                for ch in np.nonzero(in_region)[0]:
                    phase = rng.uniform(0.0, 2.0 * np.pi)
                    data[ch, gate] += sig.amplitude * np.sin(
                        2.0 * np.pi * freq * time[gate] + phase
                    )
            recordings.append(
                RawRecording(
                    channels=grid.channel_names,
                    samples=data,
                    sample_rate=spec.sample_rate,
                )
            )
            labels.append(cls)
            index += 1
    return recordings, np.array(labels, dtype=np.int64)


# ---------------------------------------------------------------------------
# CSV ingestion of pre-computed band features


def import_csv(path, grid: ElectrodeGrid):
    """Read pre-computed per-band features from CSV into 4-D samples.

    Expected header: ``sample,slice,channel,label`` then one column per
    band. One row per (sample, slice, channel); every sample must cover all
    grid channels for the same set of slices, and rows of one sample must
    agree on the label.
    """
    per_sample: dict[int, dict[tuple[int, str], list[float]]] = {}
    sample_labels: dict[int, int] = {}
    n_bands = None
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [c.strip() for c in header[:4]] != ["sample", "slice", "channel", "label"]:
            raise ValueError(
                f"{path}: header must start with 'sample,slice,channel,label', got {header}"
            )
        n_bands = len(header) - 4
        if n_bands < 1:
            raise ValueError(f"{path}: no band columns in header")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 4 + n_bands:
                raise ValueError(f"{path}:{lineno}: expected {4 + n_bands} fields, got {len(row)}")
            try:
                sample_id, slice_id, label = int(row[0]), int(row[1]), int(row[3])
                values = [float(x) for x in row[4:]]
            except ValueError:
                raise ValueError(f"{path}:{lineno}: malformed numeric field") from None
            channel = row[2].strip()
            if channel not in grid.placement:
                raise ValueError(f"{path}:{lineno}: unknown channel {channel!r}")
            prev = sample_labels.setdefault(sample_id, label)
            if prev != label:
                raise ValueError(
                    f"{path}:{lineno}: sample {sample_id} labeled both {prev} and {label}"
                )
            key = (slice_id, channel)
            rows_for = per_sample.setdefault(sample_id, {})
            if key in rows_for:
                raise ValueError(
                    f"{path}:{lineno}: duplicate row for sample {sample_id}, "
                    f"slice {slice_id}, channel {channel!r}"
                )
            rows_for[key] = values
    if not per_sample:
        raise ValueError(f"{path}: no data rows")
    samples = []
    for sample_id in sorted(per_sample):
        rows_for = per_sample[sample_id]
        slice_ids = sorted({k[0] for k in rows_for})
        if slice_ids != list(range(len(slice_ids))):
            raise ValueError(
                f"{path}: sample {sample_id} slices {slice_ids} are not 0..{len(slice_ids) - 1}"
            )
        data = np.empty((len(slice_ids), n_bands, grid.rows, grid.cols))
        for t in slice_ids:
            frame = np.empty((grid.n_channels, n_bands))
            for c, name in enumerate(grid.channel_names):
                if (t, name) not in rows_for:
                    raise ValueError(
                        f"{path}: sample {sample_id} slice {t} is missing channel {name!r}"
                    )
                frame[c] = rows_for[(t, name)]
            for s in range(n_bands):
                data[t, s] = scatter_to_grid(frame[:, s], grid)
        samples.append(FeatureTensor4D(data=data, label=sample_labels[sample_id]))
    return samples
