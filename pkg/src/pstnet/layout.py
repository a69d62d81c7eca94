"""Electrode grids and the 4-D (time, band, vertical, horizontal) layout.

Per-band channel vectors are scattered onto a V x H grid according to a
named placement map; stacking the grids for every band and time slice gives
the 4-D sample tensor the classifier consumes. The default map places the
62-channel cap on an 8 x 9 grid and ships as a data file; any layout in the
same format can be swapped in.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources

import numpy as np

from .features import DEFeatureFrame

__all__ = [
    "ElectrodeGrid",
    "FeatureTensor4D",
    "parse_layout",
    "load_layout",
    "default_grid",
    "scatter_to_grid",
    "gather_from_grid",
    "assemble_4d",
    "gather_frames",
    "collapse_to_3d",
    "standardize",
    "channel_order",
]

_STD_FLOOR = 1e-8


@dataclass(frozen=True)
class ElectrodeGrid:
    """Placement of C named channels on a rows x cols grid.

    ``placement`` maps channel name to (row, col); iteration order of
    ``channel_names`` defines the index each channel takes in value vectors.
    """

    rows: int
    cols: int
    placement: dict[str, tuple[int, int]]
    fill_value: float = 0.0

    def __post_init__(self):
        seen_cells = set()
        for name, (r, c) in self.placement.items():
            if not (0 <= r < self.rows and 0 <= c < self.cols):
                raise ValueError(
                    f"channel {name!r} placed at ({r}, {c}), outside {self.rows} x {self.cols}"
                )
            if (r, c) in seen_cells:
                raise ValueError(f"cell ({r}, {c}) assigned twice (second: {name!r})")
            seen_cells.add((r, c))
        if not self.placement:
            raise ValueError("grid has no channel placements")

    @property
    def channel_names(self) -> tuple[str, ...]:
        return tuple(self.placement)

    @property
    def n_channels(self) -> int:
        return len(self.placement)

    def indices(self) -> tuple[np.ndarray, np.ndarray]:
        """(row_idx, col_idx) arrays aligned with ``channel_names``."""
        rows = np.array([rc[0] for rc in self.placement.values()])
        cols = np.array([rc[1] for rc in self.placement.values()])
        return rows, cols


@dataclass(frozen=True)
class FeatureTensor4D:
    """One sample: ``data`` is (T, S, V, H); ``label`` is a class index, -1 if unlabeled."""

    data: np.ndarray
    label: int = -1

    def __post_init__(self):
        data = np.ascontiguousarray(self.data, dtype=np.float64)
        if data.ndim != 4:
            raise ValueError(f"sample tensor must be 4-D (T,S,V,H), got shape {data.shape}")
        if not np.isfinite(data).all():
            raise ValueError("sample tensor contains non-finite values")
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "label", int(self.label))


def parse_layout(text: str, fill_value: float = 0.0) -> ElectrodeGrid:
    """Parse `<name> <row> <col>` lines; `#` starts a comment.

    Grid extents are inferred as max index + 1 along each axis.
    """
    placement: dict[str, tuple[int, int]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 3:
            raise ValueError(f"layout line {lineno}: expected '<name> <row> <col>', got {raw!r}")
        name = parts[0]
        try:
            r, c = int(parts[1]), int(parts[2])
        except ValueError:
            raise ValueError(f"layout line {lineno}: row/col must be integers, got {raw!r}") from None
        if r < 0 or c < 0:
            raise ValueError(f"layout line {lineno}: negative index in {raw!r}")
        if name in placement:
            raise ValueError(f"layout line {lineno}: channel {name!r} listed twice")
        placement[name] = (r, c)
    if not placement:
        raise ValueError("layout file defines no channels")
    rows = max(rc[0] for rc in placement.values()) + 1
    cols = max(rc[1] for rc in placement.values()) + 1
    return ElectrodeGrid(rows=rows, cols=cols, placement=placement, fill_value=fill_value)


def load_layout(path, fill_value: float = 0.0) -> ElectrodeGrid:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_layout(fh.read(), fill_value=fill_value)


def default_grid(fill_value: float = 0.0) -> ElectrodeGrid:
    """The packaged 62-channel 8 x 9 cap layout."""
    text = resources.files("pstnet").joinpath("data/seed62_8x9.txt").read_text("utf-8")
    return parse_layout(text, fill_value=fill_value)


def scatter_to_grid(band_values, grid: ElectrodeGrid) -> np.ndarray:
    """Place ``band_values[i]`` at channel i's cell; other cells get fill_value."""
    band_values = np.asarray(band_values, dtype=np.float64)
    if band_values.shape != (grid.n_channels,):
        raise ValueError(
            f"got {band_values.shape[0] if band_values.ndim == 1 else band_values.shape} "
            f"values for {grid.n_channels} placed channels"
        )
    plane = np.full((grid.rows, grid.cols), grid.fill_value)
    rows, cols = grid.indices()
    plane[rows, cols] = band_values
    return plane


def gather_from_grid(plane, grid: ElectrodeGrid) -> np.ndarray:
    """Inverse of scatter_to_grid: read each channel's cell back out."""
    plane = np.asarray(plane, dtype=np.float64)
    if plane.shape != (grid.rows, grid.cols):
        raise ValueError(f"plane shape {plane.shape} does not match grid {grid.rows} x {grid.cols}")
    rows, cols = grid.indices()
    return plane[rows, cols].copy()


def assemble_4d(frames, grid: ElectrodeGrid, expected_t: int | None = None, label: int = -1) -> FeatureTensor4D:
    """Stack per-slice C x S frames into a (T, S, V, H) sample tensor."""
    frames = list(frames)
    if expected_t is not None and len(frames) != expected_t:
        raise ValueError(f"expected {expected_t} frames, got {len(frames)}")
    if not frames:
        raise ValueError("no frames to assemble")
    n_bands = frames[0].values.shape[1]
    data = np.empty((len(frames), n_bands, grid.rows, grid.cols))
    for t, frame in enumerate(frames):
        if frame.values.shape != (grid.n_channels, n_bands):
            raise ValueError(
                f"frame {t} has shape {frame.values.shape}, "
                f"expected ({grid.n_channels}, {n_bands})"
            )
        for s in range(n_bands):
            data[t, s] = scatter_to_grid(frame.values[:, s], grid)
    return FeatureTensor4D(data=data, label=label)


def gather_frames(sample: FeatureTensor4D, grid: ElectrodeGrid) -> list[np.ndarray]:
    """Recover the C x S frame of every time slice from a sample tensor."""
    t_len, n_bands = sample.data.shape[:2]
    frames = []
    for t in range(t_len):
        values = np.empty((grid.n_channels, n_bands))
        for s in range(n_bands):
            values[:, s] = gather_from_grid(sample.data[t, s], grid)
        frames.append(values)
    return frames


def collapse_to_3d(sample: FeatureTensor4D, mode: str, band: int | None = None) -> np.ndarray:
    """Drop one axis of the 4-D sample for lower-dimensional baselines.

    VHS averages out time giving (S,V,H); VHT keeps one band (``band``
    index) or averages bands giving (T,V,H); PST flattens the grid into a
    channel axis giving (T,S,V*H).
    """
    data = sample.data
    if mode == "VHS":
        return data.mean(axis=0)
    if mode == "VHT":
        if band is not None:
            if not 0 <= band < data.shape[1]:
                raise ValueError(f"band index {band} out of range for {data.shape[1]} bands")
            return data[:, band].copy()
        return data.mean(axis=1)
    if mode == "PST":
        t_len, n_bands, v, h = data.shape
        return data.reshape(t_len, n_bands, v * h).copy()
    raise ValueError(f"unknown collapse mode {mode!r}; expected VHS, VHT, or PST")


def standardize(data: np.ndarray) -> np.ndarray:
    """Zero-mean, unit-std over the whole tensor; std floored at 1e-8."""
    data = np.asarray(data, dtype=np.float64)
    std = max(float(data.std()), _STD_FLOOR)
    return (data - data.mean()) / std


def channel_order(grid: ElectrodeGrid, names) -> np.ndarray:
    """Index array reordering ``names``-ordered rows into grid channel order."""
    names = list(names)
    pos = {n: i for i, n in enumerate(names)}
    if len(pos) != len(names):
        raise ValueError("duplicate channel names in recording")
    missing = [n for n in grid.channel_names if n not in pos]
    extra = [n for n in names if n not in grid.placement]
    if missing or extra:
        raise ValueError(
            f"channel sets differ: {len(missing)} missing from recording "
            f"(first: {missing[:3]}), {len(extra)} absent from layout (first: {extra[:3]})"
        )
    return np.array([pos[n] for n in grid.channel_names])
