"""OFDM slot construction and the frequency- and time-domain link paths.

The frequency-domain path applies Y = H * X + W per resource element and is
exact whenever all tap delays fit inside the cyclic prefix. The time-domain
path runs the actual IFFT/CP/tapped-delay-line chain and therefore also
captures inter-symbol interference once delays exceed the CP.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

if TYPE_CHECKING:
    from .fading import ChannelRealization

__all__ = [
    "FrameConfig",
    "DmrsPattern",
    "DEFAULT_FRAME",
    "DEFAULT_PATTERN",
    "ALT_PATTERN",
    "build_slot",
    "transmit_receive_fd",
    "transmit_receive_td",
    "extract_pilots",
    "quantized_delay_samples",
    "save_grid",
    "load_grid",
]


@dataclass(frozen=True)
class FrameConfig:
    """Slot geometry and sampling parameters."""

    n_subcarriers: int = 72
    n_symbols: int = 14
    subcarrier_spacing_hz: float = 15_000.0
    fft_size: int = 128
    cp_samples: int = 9
    impl_delay_samples: int = 7
    carrier_hz: float = 2.1e9

    def __post_init__(self):
        if min(self.n_subcarriers, self.n_symbols, self.fft_size) <= 0:
            raise ValueError("grid dimensions must be positive")
        if self.subcarrier_spacing_hz <= 0 or self.carrier_hz <= 0:
            raise ValueError("frequencies must be positive")
        if self.cp_samples < 0 or self.impl_delay_samples < 0:
            raise ValueError("CP lengths must be non-negative")
        if self.n_subcarriers > self.fft_size:
            raise ValueError("n_subcarriers must not exceed fft_size")

    @property
    def sample_rate_hz(self) -> float:
        return self.fft_size * self.subcarrier_spacing_hz

    @property
    def cp_total_samples(self) -> int:
        # the implementation delay is part of the guard budget
        return self.cp_samples + self.impl_delay_samples

    @property
    def cp_duration_s(self) -> float:
        return self.cp_total_samples / self.sample_rate_hz

    @property
    def symbol_samples(self) -> int:
        return self.fft_size + self.cp_total_samples

    @property
    def symbol_duration_s(self) -> float:
        return self.symbol_samples / self.sample_rate_hz

    def symbol_times_s(self, n_symbols: int | None = None) -> np.ndarray:
        """Start times of the OFDM symbols in one slot."""
        n = self.n_symbols if n_symbols is None else n_symbols
        return np.arange(n) * self.symbol_duration_s


@dataclass(frozen=True)
class DmrsPattern:
    """Comb-type pilot layout: which symbols carry pilots and on which comb."""

    pilot_symbols: tuple[int, ...] = (2, 11)
    comb_offset: int = 0
    comb_spacing: int = 2
    pilot_value: complex = 1 + 1j

    def __post_init__(self):
        symbols = tuple(int(s) for s in self.pilot_symbols)
        object.__setattr__(self, "pilot_symbols", symbols)
        object.__setattr__(self, "pilot_value", complex(self.pilot_value))
        if len(symbols) == 0:
            raise ValueError("need at least one pilot symbol")
        if any(s < 0 for s in symbols) or any(
            b <= a for a, b in zip(symbols, symbols[1:])
        ):
            raise ValueError("pilot symbol indices must be non-negative and strictly increasing")
        if self.comb_spacing < 1 or not 0 <= self.comb_offset < self.comb_spacing:
            raise ValueError("comb_offset must lie in [0, comb_spacing)")
        if self.pilot_value == 0:
            raise ValueError("pilot_value must be nonzero")

    @property
    def n_pilot_symbols(self) -> int:
        return len(self.pilot_symbols)

    def pilot_subcarriers(self, frame: FrameConfig) -> np.ndarray:
        return np.arange(self.comb_offset, frame.n_subcarriers, self.comb_spacing)

    def validate_for(self, frame: FrameConfig) -> None:
        if self.pilot_symbols[-1] >= frame.n_symbols:
            raise ValueError(
                f"pilot symbol {self.pilot_symbols[-1]} outside slot of {frame.n_symbols} symbols"
            )


DEFAULT_FRAME = FrameConfig()
DEFAULT_PATTERN = DmrsPattern()
ALT_PATTERN = DmrsPattern(pilot_symbols=(2, 7, 11), comb_offset=1)

_INV_SQRT2 = 1.0 / math.sqrt(2.0)


def build_slot(pattern: DmrsPattern, frame: FrameConfig, seed=None, bits=None) -> np.ndarray:
    """Build the transmitted slot X [n_subcarriers, n_symbols].

    Data resource elements (all REs of non-pilot symbols) carry QPSK symbols
    (+-1 +- 1j)/sqrt(2), two bits per RE, consumed symbol-by-symbol along the
    subcarrier axis. Pilot symbols carry pattern.pilot_value on the comb and 0
    on the vacant subcarriers. Either explicit bits or a seed must be given.
    """
    pattern.validate_for(frame)
    pilot_set = set(pattern.pilot_symbols)
    data_symbols = [l for l in range(frame.n_symbols) if l not in pilot_set]
    n_data_re = frame.n_subcarriers * len(data_symbols)

    if bits is None:
        if seed is None:
            raise ValueError("either bits or a seed is required")
        bits = np.random.default_rng(seed).integers(0, 2, size=2 * n_data_re)
    else:
        bits = np.asarray(bits)
        if bits.size != 2 * n_data_re:
            raise ValueError(f"expected {2 * n_data_re} bits, got {bits.size}")

    b = bits.reshape(-1, 2)
    symbols = ((1.0 - 2.0 * b[:, 0]) + 1j * (1.0 - 2.0 * b[:, 1])) * _INV_SQRT2

    x = np.zeros((frame.n_subcarriers, frame.n_symbols), dtype=complex)
    if data_symbols:
        x[:, data_symbols] = symbols.reshape(len(data_symbols), frame.n_subcarriers).T
    x[pattern.comb_offset :: pattern.comb_spacing, list(pattern.pilot_symbols)] = (
        pattern.pilot_value
    )
    return x


def _noise_sigma2(snr_db: float) -> float:
    # SNR is referenced to unit data-symbol power; snr_db=inf disables noise
    if math.isnan(snr_db) or snr_db == -math.inf:
        raise ValueError("snr_db must be finite or +inf")
    return 10.0 ** (-snr_db / 10.0)


def _awgn(shape, sigma2: float, seed) -> np.ndarray:
    if sigma2 == 0.0:
        return np.zeros(shape, dtype=complex)
    rng = np.random.default_rng(seed)
    scale = math.sqrt(sigma2 / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def transmit_receive_fd(x: np.ndarray, h: np.ndarray, snr_db: float, seed=None) -> np.ndarray:
    """Per-RE channel multiplication plus white Gaussian noise."""
    x = np.asarray(x)
    h = np.asarray(h)
    if x.shape != h.shape:
        raise ValueError(f"shape mismatch: X {x.shape} vs H {h.shape}")
    return h * x + _awgn(x.shape, _noise_sigma2(snr_db), seed)


def quantized_delay_samples(delays_ns, frame: FrameConfig) -> np.ndarray:
    """Tap delays rounded to the nearest sample at the frame sample rate."""
    d = np.asarray(delays_ns, dtype=float) * 1e-9 * frame.sample_rate_hz
    return np.rint(d).astype(int)


def transmit_receive_td(
    x: np.ndarray,
    realization: "ChannelRealization",
    snr_db: float,
    frame: FrameConfig,
    seed=None,
) -> np.ndarray:
    """Run the slot through IFFT/CP, the tapped delay line, and the FFT.

    Subcarrier k maps to FFT bin k (the same uncentered convention as the
    frequency-domain path), so for delays inside the CP this agrees with
    transmit_receive_fd up to delay quantization. Tap gains are quasi-static
    per symbol and each symbol's echo tail is overlap-added into the stream,
    which is how CP violations turn into ISI here.
    """
    x = np.asarray(x)
    n_f, n_s = x.shape
    if n_f != frame.n_subcarriers or n_s != frame.n_symbols:
        raise ValueError(f"grid shape {x.shape} does not match frame config")
    gains = realization.tap_gains
    if gains.shape[1] != n_s:
        raise ValueError("realization does not cover every symbol in the slot")

    delays = quantized_delay_samples(realization.spec.pdp.delays_ns, frame)
    n_sym = frame.symbol_samples
    slot_samples = n_s * n_sym
    if delays.max() >= slot_samples:
        raise ValueError(
            f"tap delay of {delays.max()} samples exceeds the slot ({slot_samples} samples)"
        )

    cp = frame.cp_total_samples
    stream = np.zeros(slot_samples + int(delays.max()), dtype=complex)
    spectrum = np.zeros(frame.fft_size, dtype=complex)
    for l in range(n_s):
        spectrum[:n_f] = x[:, l]
        body = np.fft.ifft(spectrum)
        symbol = np.concatenate([body[frame.fft_size - cp :], body])
        start = l * n_sym
        for m, d in enumerate(delays):
            stream[start + d : start + d + n_sym] += gains[m, l] * symbol

    y = np.empty_like(x)
    for l in range(n_s):
        core = stream[l * n_sym + cp : l * n_sym + cp + frame.fft_size]
        y[:, l] = np.fft.fft(core)[:n_f]
    return y + _awgn(x.shape, _noise_sigma2(snr_db), seed)


def extract_pilots(y: np.ndarray, pattern: DmrsPattern) -> np.ndarray:
    """Pick the pilot REs out of a received grid -> [n_pilot_sc, n_pilot_sym]."""
    y = np.asarray(y)
    if pattern.pilot_symbols[-1] >= y.shape[1]:
        raise ValueError("pattern does not fit the grid")
    return y[pattern.comb_offset :: pattern.comb_spacing, list(pattern.pilot_symbols)]


def save_grid(path, grid: np.ndarray) -> None:
    """Dump a complex grid: one JSON header line, then little-endian complex64."""
    grid = np.asarray(grid)
    header = {"shape": list(grid.shape), "dtype": "complex64", "byteorder": "little", "order": "C"}
    with open(path, "wb") as f:
        f.write((json.dumps(header) + "\n").encode("ascii"))
        f.write(np.ascontiguousarray(grid.astype("<c8")).tobytes())


def load_grid(path) -> np.ndarray:
    with open(path, "rb") as f:
        header = json.loads(f.readline().decode("ascii"))
        if header.get("dtype") != "complex64":
            raise ValueError(f"unsupported grid dtype {header.get('dtype')!r}")
        data = np.frombuffer(f.read(), dtype="<c8")
    return data.reshape(header["shape"])
