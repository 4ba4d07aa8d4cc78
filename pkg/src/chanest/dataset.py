"""Dataset generation and the binary sample/prediction file formats.

A dataset directory holds manifest.json plus train.bin/val.bin. Sample files
start with an 8-byte magic, a little-endian uint32 format version, and a
little-endian uint32 sample count; each record is then float32 little-endian:
the LS pilot-grid input [n_pilot_sc, n_pilot_sym, 2], the label
[n_subcarriers, n_symbols, 2] (real/imag planes, row-major), the sample's SNR
in dB, and its Doppler in Hz. Prediction files use the same container with
label-shaped records only. Files are written to a .partial path and renamed
when complete, so an interrupted run never leaves a valid-looking dataset.
"""
from __future__ import annotations

import hashlib
import json
import math
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .estimators import ls_estimate
from .fading import freq_response, generate_realization
from .link import DmrsPattern, FrameConfig, build_slot, extract_pilots, transmit_receive_fd
from .profiles import ChannelSpec, PowerDelayProfile

__all__ = [
    "DATASET_MAGIC",
    "PREDICTIONS_MAGIC",
    "FORMAT_VERSION",
    "DatasetError",
    "Sample",
    "FileEntry",
    "DatasetManifest",
    "generate_dataset",
    "read_dataset",
    "read_sample_file",
    "write_predictions",
    "read_predictions",
]

DATASET_MAGIC = b"CHESTDS\x00"
PREDICTIONS_MAGIC = b"CHESTPR\x00"
FORMAT_VERSION = 1


class DatasetError(Exception):
    """Raised for format, digest, or consistency problems."""


@dataclass(frozen=True)
class Sample:
    input: np.ndarray  # [n_pilot_sc, n_pilot_sym, 2] float32
    label: np.ndarray  # [n_subcarriers, n_symbols, 2] float32
    snr_db: float
    doppler_hz: float


@dataclass(frozen=True)
class FileEntry:
    name: str
    split: str  # train | val
    count: int
    sha256: str


@dataclass(frozen=True)
class DatasetManifest:
    format_version: int
    frame: FrameConfig
    pattern: DmrsPattern
    channel: dict
    count: int
    snr_range_db: tuple[float, float]
    doppler_range_hz: tuple[float, float]
    base_seed: int
    val_fraction: float
    files: tuple[FileEntry, ...]

    def pdp(self) -> PowerDelayProfile:
        return PowerDelayProfile(
            tuple(self.channel["delays_ns"]),
            tuple(self.channel["gains_db"]),
            name=self.channel.get("name", ""),
        )

    def to_json(self) -> str:
        frame = self.frame.__dict__.copy()
        pattern = self.pattern.__dict__.copy()
        pattern["pilot_symbols"] = list(pattern["pilot_symbols"])
        pv = pattern.pop("pilot_value")
        pattern["pilot_value"] = [pv.real, pv.imag]
        payload = {
            "format_version": self.format_version,
            "frame": frame,
            "pattern": pattern,
            "channel": self.channel,
            "count": self.count,
            "snr_range_db": list(self.snr_range_db),
            "doppler_range_hz": list(self.doppler_range_hz),
            "base_seed": self.base_seed,
            "val_fraction": self.val_fraction,
            "files": [f.__dict__ for f in self.files],
        }
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"

    @staticmethod
    def from_json(text: str) -> "DatasetManifest":
        data = json.loads(text)
        pattern = data["pattern"].copy()
        pattern["pilot_symbols"] = tuple(pattern["pilot_symbols"])
        pattern["pilot_value"] = complex(*pattern["pilot_value"])
        return DatasetManifest(
            format_version=data["format_version"],
            frame=FrameConfig(**data["frame"]),
            pattern=DmrsPattern(**pattern),
            channel=data["channel"],
            count=data["count"],
            snr_range_db=tuple(data["snr_range_db"]),
            doppler_range_hz=tuple(data["doppler_range_hz"]),
            base_seed=data["base_seed"],
            val_fraction=data["val_fraction"],
            files=tuple(FileEntry(**f) for f in data["files"]),
        )


def _planes(a: np.ndarray) -> np.ndarray:
    return np.stack([a.real, a.imag], axis=-1).astype("<f4")


def _uniform(rng: np.random.Generator, lo: float, hi: float) -> float:
    # lo == hi (incl. +inf) means a fixed value, drawn from no randomness
    return float(lo) if lo == hi else float(rng.uniform(lo, hi))


def _make_sample(
    spec: ChannelSpec,
    pattern: DmrsPattern,
    frame: FrameConfig,
    base_seed: int,
    index: int,
    snr_range: tuple[float, float],
    doppler_range: tuple[float, float],
) -> Sample:
    rng = np.random.default_rng([base_seed, index])
    snr_db = _uniform(rng, *snr_range)
    doppler = _uniform(rng, *doppler_range)
    spec_i = replace(spec, max_doppler_hz=doppler)
    r = generate_realization(spec_i, rng, frame.symbol_times_s())
    h = freq_response(r, frame)
    x = build_slot(pattern, frame, seed=rng)
    y = transmit_receive_fd(x, h, snr_db, seed=rng)
    ls = ls_estimate(extract_pilots(y, pattern), pattern)
    return Sample(_planes(ls.values), _planes(h), snr_db, doppler)


class _RecordWriter:
    """Stream records into <path>.partial, then rename on success."""

    def __init__(self, path: Path, magic: bytes, count: int):
        self.path = path
        self.partial = path.with_name(path.name + ".partial")
        self._sha = hashlib.sha256()
        self._f = open(self.partial, "wb")
        self._write(magic + struct.pack("<II", FORMAT_VERSION, count))

    def _write(self, data: bytes) -> None:
        self._f.write(data)
        self._sha.update(data)

    def add(self, *arrays: bytes) -> None:
        for a in arrays:
            self._write(a)

    def finish(self) -> str:
        self._f.close()
        self.partial.rename(self.path)
        return self._sha.hexdigest()

    def abort(self) -> None:
        # leave the .partial marker behind for post-mortems
        self._f.close()


def generate_dataset(
    spec: ChannelSpec,
    pattern: DmrsPattern,
    frame: FrameConfig,
    count: int,
    snr_range_db: tuple[float, float],
    doppler_range_hz: tuple[float, float],
    base_seed: int,
    out_dir,
    val_fraction: float = 0.05,
    threads: int | None = None,
) -> DatasetManifest:
    """Generate `count` samples and write train/val files plus the manifest.

    Sample i is a pure function of (spec, pattern, frame, base_seed, i), so
    regeneration is byte-identical regardless of thread count. The leading
    count - floor(count * val_fraction) samples form the training split.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    if not 0 <= val_fraction < 1:
        raise ValueError("val_fraction must lie in [0, 1)")
    lo, hi = snr_range_db
    if lo > hi or math.isnan(lo):
        raise ValueError("invalid snr_range_db")
    dlo, dhi = doppler_range_hz
    if dlo > dhi or dlo < 0 or not math.isfinite(dhi):
        raise ValueError("invalid doppler_range_hz")
    pattern.validate_for(frame)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    n_val = int(count * val_fraction)
    n_train = count - n_val
    plan = [("train", "train.bin", 0, n_train)]
    if n_val:
        plan.append(("val", "val.bin", n_train, count))

    def make(i: int) -> Sample:
        return _make_sample(spec, pattern, frame, base_seed, i, snr_range_db, doppler_range_hz)

    entries = []
    for split, name, start, stop in plan:
        writer = _RecordWriter(out / name, DATASET_MAGIC, stop - start)
        try:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                for i, s in zip(range(start, stop), pool.map(make, range(start, stop))):
                    writer.add(
                        s.input.tobytes(),
                        s.label.tobytes(),
                        struct.pack("<ff", s.snr_db, s.doppler_hz),
                    )
        except BaseException:
            writer.abort()
            raise
        entries.append(FileEntry(name, split, stop - start, writer.finish()))

    manifest = DatasetManifest(
        format_version=FORMAT_VERSION,
        frame=frame,
        pattern=pattern,
        channel={
            "name": spec.pdp.name,
            "delays_ns": list(spec.pdp.delays_ns),
            "gains_db": list(spec.pdp.gains_db),
            "normalize_power": spec.normalize_power,
        },
        count=count,
        snr_range_db=(float(lo), float(hi)),
        doppler_range_hz=(float(dlo), float(dhi)),
        base_seed=base_seed,
        val_fraction=val_fraction,
        files=tuple(entries),
    )
    (out / "manifest.json").write_text(manifest.to_json())
    return manifest


def _sha256_of(path: Path) -> str:
    sha = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            sha.update(chunk)
    return sha.hexdigest()


def _read_header(f, magic: bytes, path) -> int:
    head = f.read(16)
    if len(head) != 16 or head[:8] != magic:
        raise DatasetError(f"{path}: bad magic, not a recognized file")
    version, count = struct.unpack("<II", head[8:])
    if version != FORMAT_VERSION:
        raise DatasetError(f"{path}: format version {version}, expected {FORMAT_VERSION}")
    return count


def read_sample_file(path, frame: FrameConfig, pattern: DmrsPattern):
    """Yield Samples from one binary file, checking header and length."""
    path = Path(path)
    n_sc = len(range(pattern.comb_offset, frame.n_subcarriers, pattern.comb_spacing))
    in_n = n_sc * pattern.n_pilot_symbols * 2
    lab_n = frame.n_subcarriers * frame.n_symbols * 2
    record = 4 * (in_n + lab_n + 2)
    with open(path, "rb") as f:
        count = _read_header(f, DATASET_MAGIC, path)
        body = f.read()
    if len(body) != count * record:
        raise DatasetError(f"{path}: truncated ({len(body)} bytes for {count} records)")
    for i in range(count):
        rec = np.frombuffer(body, dtype="<f4", count=in_n + lab_n + 2, offset=i * record)
        yield Sample(
            input=rec[:in_n].reshape(n_sc, pattern.n_pilot_symbols, 2),
            label=rec[in_n : in_n + lab_n].reshape(frame.n_subcarriers, frame.n_symbols, 2),
            snr_db=float(rec[-2]),
            doppler_hz=float(rec[-1]),
        )


def read_dataset(dataset_dir):
    """Verify digests, then return (manifest, sample iterator over all files)."""
    dataset_dir = Path(dataset_dir)
    manifest_path = dataset_dir / "manifest.json"
    if not manifest_path.is_file():
        raise DatasetError(f"no manifest.json in {dataset_dir}")
    manifest = DatasetManifest.from_json(manifest_path.read_text())
    if manifest.format_version != FORMAT_VERSION:
        raise DatasetError(
            f"manifest version {manifest.format_version}, expected {FORMAT_VERSION}"
        )
    for entry in manifest.files:
        path = dataset_dir / entry.name
        if not path.is_file():
            raise DatasetError(f"missing dataset file {entry.name}")
        digest = _sha256_of(path)
        if digest != entry.sha256:
            raise DatasetError(f"digest mismatch for {entry.name}")

    def samples():
        for entry in manifest.files:
            yield from read_sample_file(
                dataset_dir / entry.name, manifest.frame, manifest.pattern
            )

    return manifest, samples()


def write_predictions(path, predictions, count: int) -> str:
    """Write label-shaped float32 tensors; returns the file digest."""
    writer = _RecordWriter(Path(path), PREDICTIONS_MAGIC, count)
    written = 0
    try:
        for p in predictions:
            arr = np.ascontiguousarray(np.asarray(p, dtype="<f4"))
            writer.add(arr.tobytes())
            written += 1
    except BaseException:
        writer.abort()
        raise
    if written != count:
        writer.abort()
        raise DatasetError(f"expected {count} predictions, got {written}")
    return writer.finish()


def read_predictions(path, frame: FrameConfig):
    """Yield [n_subcarriers, n_symbols, 2] float32 tensors."""
    path = Path(path)
    lab_n = frame.n_subcarriers * frame.n_symbols * 2
    with open(path, "rb") as f:
        count = _read_header(f, PREDICTIONS_MAGIC, path)
        body = f.read()
    if len(body) != count * lab_n * 4:
        raise DatasetError(f"{path}: truncated ({len(body)} bytes for {count} records)")
    for i in range(count):
        rec = np.frombuffer(body, dtype="<f4", count=lab_n, offset=i * lab_n * 4)
        yield rec.reshape(frame.n_subcarriers, frame.n_symbols, 2)
