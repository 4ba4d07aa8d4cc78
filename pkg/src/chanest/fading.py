"""Rayleigh tap-gain trajectories (sum of sinusoids) and the WSSUS response.

Each tap is an independent complex process built from N sinusoids per
quadrature. The arrival angles of the two quadratures are the midpoint-rule
angles rotated by -pi/(8N) and +pi/(8N) respectively; the combined set then
covers the midpoint rule at 2N points, which makes the ensemble complex
autocorrelation match J0(2 pi f_max tau) to machine precision while keeping
the quadratures uncorrelated. Phases are drawn uniformly per (tap, seed).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .profiles import ChannelSpec

if TYPE_CHECKING:
    from .link import FrameConfig

__all__ = [
    "N_SINUSOIDS",
    "ChannelRealization",
    "generate_realization",
    "freq_response",
    "response_from_taps",
]

N_SINUSOIDS = 20


@dataclass(frozen=True)
class ChannelRealization:
    """Per-symbol complex tap gains [n_taps, n_symbols] for one slot."""

    tap_gains: np.ndarray
    spec: ChannelSpec
    seed: object
    symbol_times_s: tuple[float, ...]


def generate_realization(spec: ChannelSpec, seed, symbol_times_s) -> ChannelRealization:
    """Draw one realization of all tap processes at the given sample times.

    `seed` is anything numpy's default_rng accepts (int, sequence of ints,
    SeedSequence, or an existing Generator).
    """
    times = np.atleast_1d(np.asarray(symbol_times_s, dtype=float))
    if times.size == 0:
        raise ValueError("symbol_times_s must be non-empty")
    diffs = np.diff(times)
    if np.any(diffs < 0):
        raise ValueError("symbol_times_s must be non-decreasing")
    pos = diffs[diffs > 0]
    if pos.size and spec.max_doppler_hz > 0.5 / pos.min():
        raise ValueError(
            "max_doppler_hz too high for per-symbol sampling "
            f"({spec.max_doppler_hz:g} Hz vs limit {0.5 / pos.min():g} Hz)"
        )

    rng = np.random.default_rng(seed)
    n = N_SINUSOIDS
    powers = spec.tap_powers()
    n_taps = powers.size

    phases = rng.uniform(0.0, 2.0 * np.pi, size=(n_taps, 2, n))
    base = (np.pi / (2 * n)) * (np.arange(1, n + 1) - 0.5)
    angles = base[None, :] + (np.pi / (8 * n)) * np.array([[-1.0], [1.0]])
    freqs = spec.max_doppler_hz * np.cos(angles)  # [2, n]

    arg = (
        2.0 * np.pi * freqs[None, :, :, None] * times[None, None, None, :]
        + phases[:, :, :, None]
    )
    comps = np.cos(arg).sum(axis=2) / np.sqrt(n)  # [n_taps, 2, T], variance 1/2 each
    gains = np.sqrt(powers)[:, None] * (comps[:, 0, :] + 1j * comps[:, 1, :])
    return ChannelRealization(gains, spec, seed, tuple(times))


def response_from_taps(tap_gains: np.ndarray, delays_s, frame: "FrameConfig") -> np.ndarray:
    """H(k, l) = sum_m g_m(l) exp(-2j pi k df tau_m) for bins k = 0..N_f-1."""
    delays_s = np.asarray(delays_s, dtype=float)
    k = np.arange(frame.n_subcarriers)
    phase = np.exp(-2j * np.pi * frame.subcarrier_spacing_hz * np.outer(k, delays_s))
    return phase @ tap_gains


def freq_response(realization: ChannelRealization, frame: "FrameConfig") -> np.ndarray:
    """Frequency-domain channel matrix [n_subcarriers, n_symbols]."""
    return response_from_taps(
        realization.tap_gains, realization.spec.pdp.delays_s(), frame
    )
