"""Monte Carlo evaluation: MSE vs SNR, generalization grids, and DS sweeps.

Per-realization seeds are derived from (base_seed, point key, index) where the
point key hashes the channel, SNR, and delay spread but not the estimator, so
different estimators see identical channel and noise draws and comparisons
are paired. Sums use math.fsum, which is exact and therefore independent of
reduction order.
"""
from __future__ import annotations

import csv
import hashlib
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataset import DatasetError, read_dataset, read_predictions
from .estimators import (
    CorrelationSet,
    analytic_correlations,
    ls_slot_estimate,
    mmse_slot_estimate,
    mse,
)
from .fading import freq_response, generate_realization, response_from_taps
from .link import (
    DEFAULT_FRAME,
    DEFAULT_PATTERN,
    DmrsPattern,
    FrameConfig,
    build_slot,
    quantized_delay_samples,
    transmit_receive_fd,
    transmit_receive_td,
)
from .profiles import ChannelSpec, PowerDelayProfile, cdl_profile, resolve_profile, scale_cdl

__all__ = [
    "EvalPoint",
    "Estimator",
    "get_estimator",
    "evaluate_point",
    "mse_vs_snr",
    "generalization_grid",
    "ds_sweep",
    "score_predictions",
    "emit_report",
    "read_report",
    "plot_report",
]

DEFAULT_DOPPLER_RANGE = (0.0, 97.0)


@dataclass(frozen=True)
class EvalPoint:
    estimator: str
    channel: str
    snr_db: float
    ds_ns: float | None
    n: int
    mse: float
    stderr: float


@dataclass(frozen=True)
class Estimator:
    """Named slot estimator: fn(y, snr_db, eval_pdp) -> H_hat."""

    id: str
    fn: object


_corr_cache: dict[tuple, CorrelationSet] = {}


def _correlations(pdp: PowerDelayProfile, pattern: DmrsPattern, frame: FrameConfig):
    key = (pdp, pattern, frame)
    if key not in _corr_cache:
        _corr_cache[key] = analytic_correlations(pdp, pattern, frame)
    return _corr_cache[key]


def get_estimator(estimator_id: str, pattern: DmrsPattern, frame: FrameConfig) -> Estimator:
    """Build an estimator from its id: "ls", "mmse", or "mmse:<channel>".

    Bare "mmse" is matched filtering (statistics of the channel under test);
    "mmse:<channel>" fixes the statistics to the named or file-based profile.
    """
    if estimator_id == "ls":
        return Estimator("ls", lambda y, snr_db, pdp: ls_slot_estimate(y, pattern, frame))
    if estimator_id == "mmse":
        return Estimator(
            "mmse",
            lambda y, snr_db, pdp: mmse_slot_estimate(
                y, pattern, frame, _correlations(pdp, pattern, frame), snr_db
            ),
        )
    if estimator_id.startswith("mmse:"):
        stats_pdp = resolve_profile(estimator_id[5:])
        return Estimator(
            estimator_id,
            lambda y, snr_db, pdp: mmse_slot_estimate(
                y, pattern, frame, _correlations(stats_pdp, pattern, frame), snr_db
            ),
        )
    raise ValueError(f"unknown estimator {estimator_id!r}; expected ls, mmse, or mmse:<channel>")


def _point_key(channel_id: str, snr_db: float, ds_ns: float | None) -> int:
    text = f"{channel_id}|{snr_db:.6g}|{'-' if ds_ns is None else format(ds_ns, '.6g')}"
    return int.from_bytes(hashlib.blake2s(text.encode(), digest_size=8).digest(), "little")


def _mean_stderr(values: list[float]) -> tuple[float, float]:
    n = len(values)
    mean = math.fsum(values) / n
    if n < 2:
        return mean, 0.0
    var = math.fsum((v - mean) ** 2 for v in values) / (n - 1)
    return mean, math.sqrt(var / n)


def evaluate_point(
    estimator: Estimator,
    pdp: PowerDelayProfile,
    channel_id: str,
    snr_db: float,
    n: int,
    base_seed: int,
    doppler_range: tuple[float, float] = DEFAULT_DOPPLER_RANGE,
    pattern: DmrsPattern = DEFAULT_PATTERN,
    frame: FrameConfig = DEFAULT_FRAME,
    ds_ns: float | None = None,
    use_td: bool = False,
    threads: int | None = None,
) -> EvalPoint:
    """Average the estimator's MSE over n independent slots at one point."""
    if n < 1:
        raise ValueError("n must be >= 1")
    key = _point_key(channel_id, snr_db, ds_ns)
    times = frame.symbol_times_s()
    dlo, dhi = doppler_range
    if use_td:
        delays_q_s = quantized_delay_samples(pdp.delays_ns, frame) / frame.sample_rate_hz

    def one(j: int) -> float:
        rng = np.random.default_rng([base_seed, key, j])
        doppler = float(dlo) if dlo == dhi else float(rng.uniform(dlo, dhi))
        spec = ChannelSpec(pdp, max_doppler_hz=doppler)
        r = generate_realization(spec, rng, times)
        x = build_slot(pattern, frame, seed=rng)
        if use_td:
            # ground truth uses the same sample-grid delays as the TD chain,
            # so the score measures estimation error and ISI, not rounding
            h = response_from_taps(r.tap_gains, delays_q_s, frame)
            y = transmit_receive_td(x, r, snr_db, frame, seed=rng)
        else:
            h = freq_response(r, frame)
            y = transmit_receive_fd(x, h, snr_db, seed=rng)
        return mse(estimator.fn(y, snr_db, pdp), h)

    if threads is not None and threads < 2:
        values = [one(j) for j in range(n)]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            values = list(pool.map(one, range(n)))
    mean, stderr = _mean_stderr(values)
    return EvalPoint(estimator.id, channel_id, snr_db, ds_ns, n, mean, stderr)


def _as_channel(item) -> tuple[str, PowerDelayProfile]:
    if isinstance(item, PowerDelayProfile):
        return item.name or "custom", item
    pdp = resolve_profile(item)
    return pdp.name or str(item), pdp


def mse_vs_snr(
    estimator_id: str,
    channels,
    snr_grid,
    n: int,
    base_seed: int,
    doppler_range: tuple[float, float] = DEFAULT_DOPPLER_RANGE,
    pattern: DmrsPattern = DEFAULT_PATTERN,
    frame: FrameConfig = DEFAULT_FRAME,
    threads: int | None = None,
) -> list[EvalPoint]:
    """Mean MSE per (channel, snr); Doppler drawn per slot from the range."""
    est = get_estimator(estimator_id, pattern, frame)
    out = []
    for item in channels:
        channel_id, pdp = _as_channel(item)
        for snr_db in snr_grid:
            out.append(
                evaluate_point(
                    est, pdp, channel_id, float(snr_db), n, base_seed,
                    doppler_range, pattern, frame, threads=threads,
                )
            )
    return out


def generalization_grid(
    train_channels,
    test_channels,
    snr_db: float,
    n: int,
    base_seed: int,
    family: str = "mmse",
    predictions_dir=None,
    datasets_dir=None,
    doppler_range: tuple[float, float] = DEFAULT_DOPPLER_RANGE,
    pattern: DmrsPattern = DEFAULT_PATTERN,
    frame: FrameConfig = DEFAULT_FRAME,
    threads: int | None = None,
) -> list[EvalPoint]:
    """Full train x test MSE matrix for one estimator family.

    family="mmse" parameterizes the filter with each train channel's
    statistics. family="predictions" scores externally produced files named
    <train>__<test>.bin (in predictions_dir) against the per-test-channel
    dataset directories <datasets_dir>/<test>.
    """
    out = []
    if family == "mmse":
        for train in train_channels:
            train_id, train_pdp = _as_channel(train)
            corr = _correlations(train_pdp, pattern, frame)
            est = Estimator(
                f"mmse:{train_id}",
                lambda y, snr_db, pdp, corr=corr: mmse_slot_estimate(
                    y, pattern, frame, corr, snr_db
                ),
            )
            for test in test_channels:
                test_id, pdp = _as_channel(test)
                out.append(
                    evaluate_point(
                        est, pdp, test_id, snr_db, n, base_seed,
                        doppler_range, pattern, frame, threads=threads,
                    )
                )
        return out
    if family == "predictions":
        if predictions_dir is None or datasets_dir is None:
            raise ValueError("predictions family needs predictions_dir and datasets_dir")
        for train in train_channels:
            for test in test_channels:
                pred = Path(predictions_dir) / f"{train}__{test}.bin"
                if not pred.is_file():
                    raise FileNotFoundError(f"missing prediction file for cell: {pred}")
                point = score_predictions(Path(datasets_dir) / str(test), pred)
                out.append(
                    EvalPoint(
                        f"predictions:{train}", str(test), point.snr_db,
                        point.ds_ns, point.n, point.mse, point.stderr,
                    )
                )
        return out
    raise ValueError(f"unknown family {family!r}")


def ds_sweep(
    estimator_id: str,
    cdl_names,
    ds_grid_ns,
    snr_db: float,
    n: int,
    base_seed: int,
    doppler_range: tuple[float, float] = DEFAULT_DOPPLER_RANGE,
    pattern: DmrsPattern = DEFAULT_PATTERN,
    frame: FrameConfig = DEFAULT_FRAME,
    threads: int | None = None,
) -> list[EvalPoint]:
    """Scale each CDL profile to each DS and evaluate via the time-domain path."""
    est = get_estimator(estimator_id, pattern, frame)
    out = []
    for name in cdl_names:
        profile = cdl_profile(name)
        for ds in ds_grid_ns:
            pdp = scale_cdl(profile, float(ds))
            out.append(
                evaluate_point(
                    est, pdp, profile.name, snr_db, n, base_seed, doppler_range,
                    pattern, frame, ds_ns=float(ds), use_td=True, threads=threads,
                )
            )
    return out


def score_predictions(dataset_dir, predictions_path) -> EvalPoint:
    """Score a predictions file against a dataset's labels (shared metric)."""
    manifest, samples = read_dataset(dataset_dir)
    preds = read_predictions(predictions_path, manifest.frame)
    values = []
    for sample, pred in zip(samples, preds, strict=True):
        h = sample.label[..., 0] + 1j * sample.label[..., 1]
        h_hat = pred[..., 0] + 1j * pred[..., 1]
        values.append(mse(h_hat, h))
    if not values:
        raise DatasetError("no samples to score")
    mean, stderr = _mean_stderr(values)
    lo, hi = manifest.snr_range_db
    return EvalPoint(
        f"predictions:{Path(predictions_path).stem}",
        manifest.channel.get("name") or "custom",
        (lo + hi) / 2.0,
        None,
        len(values),
        mean,
        stderr,
    )


_CSV_FIELDS = ("estimator", "channel", "snr_db", "ds_ns", "n", "mse", "stderr")


def emit_report(points, csv_path, svg_path=None) -> None:
    """Write the CSV table (and optionally an SVG plot) for a point list."""
    points = list(points)
    if not points:
        raise ValueError("empty table")
    with open(csv_path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(_CSV_FIELDS)
        for p in points:
            w.writerow(
                [
                    p.estimator,
                    p.channel,
                    repr(p.snr_db),
                    "" if p.ds_ns is None else repr(p.ds_ns),
                    p.n,
                    repr(p.mse),
                    repr(p.stderr),
                ]
            )
    if svg_path is not None:
        plot_report(points, svg_path)


def read_report(csv_path) -> list[EvalPoint]:
    out = []
    with open(csv_path, newline="") as f:
        for row in csv.DictReader(f):
            out.append(
                EvalPoint(
                    estimator=row["estimator"],
                    channel=row["channel"],
                    snr_db=float(row["snr_db"]),
                    ds_ns=float(row["ds_ns"]) if row["ds_ns"] else None,
                    n=int(row["n"]),
                    mse=float(row["mse"]),
                    stderr=float(row["stderr"]),
                )
            )
    return out


def plot_report(points, svg_path) -> None:
    """One log-MSE line per (estimator, channel) over SNR or delay spread."""
    from matplotlib import rc_context
    from matplotlib.backends.backend_svg import FigureCanvasSVG
    from matplotlib.figure import Figure

    points = list(points)
    use_ds = any(p.ds_ns is not None for p in points)
    series: dict[tuple[str, str], list] = {}
    for p in points:
        series.setdefault((p.estimator, p.channel), []).append(p)

    fig = Figure(figsize=(7, 5))
    ax = fig.add_subplot()
    for (est, chan), pts in series.items():
        pts = sorted(pts, key=lambda p: (p.ds_ns if use_ds else p.snr_db))
        xs = [p.ds_ns if use_ds else p.snr_db for p in pts]
        ax.plot(xs, [p.mse for p in pts], marker="o", label=f"{est} on {chan}")
    ax.set_xlabel("desired delay spread [ns]" if use_ds else "SNR [dB]")
    if use_ds:
        ax.set_xscale("log")
    ax.set_ylabel("MSE")
    ax.set_yscale("log")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=8)
    with rc_context({"svg.hashsalt": "chanest"}):
        FigureCanvasSVG(fig).print_svg(svg_path, metadata={"Date": None})
