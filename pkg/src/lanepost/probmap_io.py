"""Dataset I/O: probability-map frames, ground-truth polylines, lane output records.

On-disk formats
---------------
Raw frames use a 16-byte header (magic ``RNLD``, u32 width, u32 height,
u32 channels, all little-endian) followed by channel-planar, row-major
little-endian float32 confidences. Gray8 frames are ordinary single-channel
8-bit images whose values map to confidence via v/255.

A frame manifest is a plain text file, one frame per line::

    # comment
    clip <name>              start a new clip (tracker state resets here)
    hints <0|1> [<0|1> ...]  per-channel active-lane hints for following frames
    <frame_id> <path> [<path> ...] [gt=<path>]

A single ``.raw``/``.bin`` path holds all channels of the frame; multiple
paths are single-channel Gray8 images assembled in order. Paths are relative
to the manifest file. Ground-truth files ending in ``.json`` are parsed as
the h-samples dialect, anything else as the lines-of-x-y-pairs dialect.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Sequence

import numpy as np
from PIL import Image

RAW_MAGIC = b"RNLD"
_RAW_HEADER = struct.Struct("<4sIII")


class DataFormatError(ValueError):
    """An on-disk artifact does not match its declared format."""


class ProbMapFormat(Enum):
    RAW_F32 = "rawf32"
    GRAY8_IMAGE = "gray8"


class GroundTruthFormat(Enum):
    LINES_TXT = "lines"
    H_SAMPLES_JSON = "hsamples"


@dataclass(frozen=True)
class ProbMapFrame:
    """Multi-channel confidence grid for one video frame.

    ``channels`` has shape (c, h, w) with every value in [0, 1]; each channel
    carries one candidate lane marking.
    """

    frame_id: int
    channels: np.ndarray

    def __post_init__(self):
        ch = np.asarray(self.channels, dtype=np.float32)
        if ch.ndim != 3 or ch.shape[0] < 1:
            raise DataFormatError("channels must be a (c, h, w) array with c >= 1")
        object.__setattr__(self, "channels", ch)
        lo, hi = float(ch.min()), float(ch.max())
        if not (np.isfinite(lo) and np.isfinite(hi)) or lo < 0.0 or hi > 1.0:
            raise DataFormatError("confidence value out of range [0, 1]")

    @property
    def num_channels(self) -> int:
        return self.channels.shape[0]

    @property
    def height(self) -> int:
        return self.channels.shape[1]

    @property
    def width(self) -> int:
        return self.channels.shape[2]


@dataclass(frozen=True)
class GroundTruthFrame:
    """Labelled lane polylines for one frame.

    Each lane is an (n, 2) float array of (x, y) points ordered bottom-to-top
    (strictly decreasing y). ``active_pair`` indexes the left/right markings
    of the active lane when known; ``None`` means every listed lane is an
    active-lane marking.
    """

    frame_id: int
    lanes: tuple[np.ndarray, ...]
    active_pair: tuple[int, int] | None = None

    def __post_init__(self):
        lanes = tuple(np.asarray(l, dtype=np.float64) for l in self.lanes)
        for lane in lanes:
            if lane.ndim != 2 or lane.shape[1] != 2 or lane.shape[0] < 2:
                raise DataFormatError("each lane needs at least 2 (x, y) points")
            if not np.all(np.diff(lane[:, 1]) < 0):
                raise DataFormatError("lane y-coordinates must strictly decrease")
        object.__setattr__(self, "lanes", lanes)
        if self.active_pair is not None:
            i, j = self.active_pair
            if not (0 <= i < len(lanes) and 0 <= j < len(lanes)):
                raise DataFormatError("active_pair indices out of range")

    def active_lanes(self) -> tuple[np.ndarray, ...]:
        if self.active_pair is None:
            return self.lanes
        return tuple(self.lanes[i] for i in self.active_pair)


def load_probmap(path: str | Path, fmt: ProbMapFormat, frame_id: int = 0) -> ProbMapFrame:
    """Load one frame from disk, mapping values into [0, 1]."""
    path = Path(path)
    if fmt is ProbMapFormat.RAW_F32:
        return _load_raw(path, frame_id)
    if fmt is ProbMapFormat.GRAY8_IMAGE:
        return ProbMapFrame(frame_id, _load_gray8(path)[None, :, :])
    raise ValueError(f"unknown probability-map format: {fmt!r}")


def _load_raw(path: Path, frame_id: int) -> ProbMapFrame:
    blob = path.read_bytes()
    if len(blob) < _RAW_HEADER.size:
        raise DataFormatError(f"{path}: malformed header (file too small)")
    magic, width, height, channels = _RAW_HEADER.unpack_from(blob)
    if magic != RAW_MAGIC:
        raise DataFormatError(f"{path}: malformed header (bad magic {magic!r})")
    if width == 0 or height == 0 or channels == 0:
        raise DataFormatError(f"{path}: malformed header (zero dimension)")
    expected = channels * height * width * 4
    payload = blob[_RAW_HEADER.size:]
    if len(payload) < expected:
        raise DataFormatError(f"{path}: truncated payload ({len(payload)} < {expected} bytes)")
    if len(payload) > expected:
        raise DataFormatError(f"{path}: trailing bytes after payload")
    data = np.frombuffer(payload, dtype="<f4").reshape(channels, height, width)
    if not np.isfinite(data).all() or data.min() < 0.0 or data.max() > 1.0:
        raise DataFormatError(f"{path}: confidence value out of range [0, 1]")
    return ProbMapFrame(frame_id, data.astype(np.float32))


def _load_gray8(path: Path) -> np.ndarray:
    with Image.open(path) as img:
        gray = img.convert("L")
        arr = np.asarray(gray, dtype=np.float32)
    return arr / 255.0


def write_probmap(frame: ProbMapFrame, path: str | Path) -> None:
    """Write a frame in the raw float32 format (bit-exact round trip)."""
    path = Path(path)
    header = _RAW_HEADER.pack(RAW_MAGIC, frame.width, frame.height, frame.num_channels)
    payload = np.ascontiguousarray(frame.channels, dtype="<f4").tobytes()
    path.write_bytes(header + payload)


def assemble_gray8_frame(paths: Sequence[str | Path], frame_id: int) -> ProbMapFrame:
    """Stack single-channel Gray8 images into one multi-channel frame."""
    grids = [_load_gray8(Path(p)) for p in paths]
    shapes = {g.shape for g in grids}
    if len(shapes) != 1:
        raise DataFormatError(f"dimension mismatch between channels: {sorted(shapes)}")
    return ProbMapFrame(frame_id, np.stack(grids, axis=0))


# ---------------------------------------------------------------------------
# Ground truth


def load_ground_truth(path: str | Path, fmt: GroundTruthFormat, frame_id: int = 0) -> GroundTruthFrame:
    path = Path(path)
    if fmt is GroundTruthFormat.LINES_TXT:
        lanes = _parse_lines_txt(path)
    elif fmt is GroundTruthFormat.H_SAMPLES_JSON:
        lanes = _parse_h_samples(path)
    else:
        raise ValueError(f"unknown ground-truth format: {fmt!r}")
    return GroundTruthFrame(frame_id, tuple(_normalize_lane(l, path) for l in lanes))


def _parse_lines_txt(path: Path) -> list[np.ndarray]:
    lanes = []
    for line in path.read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        tokens = [float(t) for t in line.split()]
        if len(tokens) % 2 != 0:
            raise DataFormatError(f"{path}: odd token count in lane line")
        pts = np.array(tokens, dtype=np.float64).reshape(-1, 2)
        if pts.shape[0] < 2:
            raise DataFormatError(f"{path}: lane with fewer than 2 points")
        lanes.append(pts)
    return lanes


def _parse_h_samples(path: Path) -> list[np.ndarray]:
    obj = json.loads(path.read_text())
    h_samples = obj.get("h_samples")
    raw_lanes = obj.get("lanes")
    if h_samples is None or raw_lanes is None:
        raise DataFormatError(f"{path}: missing 'lanes' or 'h_samples'")
    lanes = []
    for xs in raw_lanes:
        if len(xs) != len(h_samples):
            raise DataFormatError(f"{path}: lane length does not match h_samples")
        pts = [(float(x), float(y)) for x, y in zip(xs, h_samples) if x != -2]
        if not pts:
            continue  # placeholder slot, not a labelled lane
        if len(pts) < 2:
            raise DataFormatError(f"{path}: lane with fewer than 2 valid points")
        lanes.append(np.array(pts, dtype=np.float64))
    return lanes


def _normalize_lane(pts: np.ndarray, path: Path) -> np.ndarray:
    dy = np.diff(pts[:, 1])
    if np.all(dy > 0):
        pts = pts[::-1]
    elif not np.all(dy < 0):
        raise DataFormatError(f"{path}: non-monotonic y in lane after cleaning")
    return pts


# ---------------------------------------------------------------------------
# Lane output records


@dataclass(frozen=True)
class LaneRecord:
    """Finalized lane ready for emission: kind, parameters, sampled points.

    ``kind`` is "straight" or "curved". Straight lanes carry (beta0, beta1)
    of y = beta0 + beta1*x, or ``vertical_x`` for x = const lanes. Curved
    lanes carry their spline knots as (x, y, confidence) rows. ``samples``
    is an (n, 2) array of (x, y) points at fixed y rows.
    """

    lane_id: int
    kind: str
    samples: np.ndarray
    beta0: float | None = None
    beta1: float | None = None
    vertical_x: float | None = None
    knots: np.ndarray | None = None


def write_lane_output(records: Sequence[LaneRecord], path: str | Path) -> None:
    """Emit one structured-text record per lane; field order is fixed."""
    lines = ["# lane-output v1", f"lanes {len(records)}"]
    for rec in records:
        if rec.kind == "straight":
            if rec.vertical_x is not None:
                head = f"lane id={rec.lane_id} kind=straight vertical_x={rec.vertical_x:.6f}"
            else:
                head = (
                    f"lane id={rec.lane_id} kind=straight"
                    f" beta0={rec.beta0:.6f} beta1={rec.beta1:.6f}"
                )
            lines.append(head)
        elif rec.kind == "curved":
            knots = rec.knots if rec.knots is not None else np.empty((0, 3))
            lines.append(f"lane id={rec.lane_id} kind=curved knots={len(knots)}")
            for kx, ky, kc in knots:
                lines.append(f"knot {kx:.6f} {ky:.6f} {kc:.6f}")
        else:
            raise ValueError(f"unknown lane kind: {rec.kind!r}")
        lines.append(f"samples {len(rec.samples)}")
        for sx, sy in rec.samples:
            lines.append(f"{sx:.6f} {sy:.6f}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_lane_output(path: str | Path) -> list[LaneRecord]:
    """Parse a lane-output file back into records (golden-file round trips)."""
    lines = [l for l in Path(path).read_text().splitlines() if l.strip()]
    if not lines or lines[0] != "# lane-output v1":
        raise DataFormatError(f"{path}: not a lane-output file")
    if not lines[1].startswith("lanes "):
        raise DataFormatError(f"{path}: missing lane count")
    count = int(lines[1].split()[1])
    records: list[LaneRecord] = []
    i = 2
    for _ in range(count):
        fields = dict(tok.split("=", 1) for tok in lines[i].split()[1:])
        lane_id = int(fields["id"])
        kind = fields["kind"]
        beta0 = beta1 = vertical_x = None
        knots = None
        i += 1
        if kind == "straight":
            if "vertical_x" in fields:
                vertical_x = float(fields["vertical_x"])
            else:
                beta0, beta1 = float(fields["beta0"]), float(fields["beta1"])
        else:
            n_knots = int(fields["knots"])
            rows = []
            for _ in range(n_knots):
                rows.append([float(t) for t in lines[i].split()[1:]])
                i += 1
            knots = np.array(rows, dtype=np.float64).reshape(n_knots, 3)
        n_samples = int(lines[i].split()[1])
        i += 1
        samples = np.array(
            [[float(t) for t in lines[i + k].split()] for k in range(n_samples)],
            dtype=np.float64,
        ).reshape(n_samples, 2)
        i += n_samples
        records.append(
            LaneRecord(lane_id, kind, samples, beta0=beta0, beta1=beta1,
                       vertical_x=vertical_x, knots=knots)
        )
    return records


# ---------------------------------------------------------------------------
# Frame manifest


@dataclass(frozen=True)
class ManifestFrame:
    frame_id: int
    paths: tuple[Path, ...]
    gt_path: Path | None
    hints: tuple[bool, ...] | None


@dataclass(frozen=True)
class ManifestClip:
    name: str
    frames: tuple[ManifestFrame, ...]


def load_manifest(path: str | Path) -> list[ManifestClip]:
    path = Path(path)
    base = path.parent
    clips: list[ManifestClip] = []
    name = "clip0"
    frames: list[ManifestFrame] = []
    hints: tuple[bool, ...] | None = None

    def flush():
        nonlocal frames
        if frames:
            clips.append(ManifestClip(name, tuple(frames)))
            frames = []

    for raw in path.read_text().splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.split()
        if tokens[0] == "clip":
            flush()
            name = tokens[1] if len(tokens) > 1 else f"clip{len(clips)}"
            continue
        if tokens[0] == "hints":
            hints = tuple(t == "1" for t in tokens[1:])
            continue
        try:
            frame_id = int(tokens[0])
        except ValueError as exc:
            raise DataFormatError(f"{path}: bad manifest line {line!r}") from exc
        gt_path = None
        paths = []
        for tok in tokens[1:]:
            if tok.startswith("gt="):
                gt_path = base / tok[3:]
            else:
                paths.append(base / tok)
        if not paths:
            raise DataFormatError(f"{path}: frame {frame_id} lists no channel paths")
        frames.append(ManifestFrame(frame_id, tuple(paths), gt_path, hints))
    flush()
    if not clips:
        raise DataFormatError(f"{path}: empty manifest")
    return clips


def load_manifest_frame(entry: ManifestFrame) -> ProbMapFrame:
    """Materialize a manifest entry into a frame."""
    for p in entry.paths:
        if not p.exists():
            raise DataFormatError(f"missing frame file: {p}")
    if len(entry.paths) == 1 and entry.paths[0].suffix in (".raw", ".bin"):
        return load_probmap(entry.paths[0], ProbMapFormat.RAW_F32, entry.frame_id)
    return assemble_gray8_frame(entry.paths, entry.frame_id)


def load_manifest_gt(entry: ManifestFrame) -> GroundTruthFrame | None:
    if entry.gt_path is None:
        return None
    if not entry.gt_path.exists():
        raise DataFormatError(f"missing ground-truth file: {entry.gt_path}")
    fmt = (
        GroundTruthFormat.H_SAMPLES_JSON
        if entry.gt_path.suffix == ".json"
        else GroundTruthFormat.LINES_TXT
    )
    return load_ground_truth(entry.gt_path, fmt, entry.frame_id)
