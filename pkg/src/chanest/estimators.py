"""Pilot-based LS and MMSE channel estimation with bilinear interpolation.

The MMSE filter is R_HHp (R_HpHp + (sigma_N^2/sigma_X^2) I)^-1 applied to the
LS pilot estimate, one pilot symbol at a time; the correlation matrices come
from the WSSUS closed form sum_m P_m exp(-2j pi df (k - k') tau_m).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.linalg

from .link import DmrsPattern, FrameConfig, extract_pilots
from .profiles import PowerDelayProfile

__all__ = [
    "PilotEstimate",
    "CorrelationSet",
    "ls_estimate",
    "frequency_correlation",
    "analytic_correlations",
    "mmse_estimate",
    "bilinear_to_slot",
    "ls_slot_estimate",
    "mmse_slot_estimate",
    "mse",
]


@dataclass(frozen=True)
class PilotEstimate:
    """Raw per-pilot-RE channel estimate [n_pilot_sc, n_pilot_sym]."""

    values: np.ndarray
    pattern: DmrsPattern


@dataclass(frozen=True)
class CorrelationSet:
    """Channel correlations against the pilot subcarriers.

    r_hhp: [n_subcarriers, n_pilot_sc]; r_hphp: [n_pilot_sc, n_pilot_sc].
    Stationarity makes both identical for every pilot symbol.
    """

    r_hhp: np.ndarray
    r_hphp: np.ndarray


def ls_estimate(y_pilot: np.ndarray, pattern: DmrsPattern) -> PilotEstimate:
    """Element-wise division of the received pilots by the sent pilot value."""
    return PilotEstimate(np.asarray(y_pilot) / pattern.pilot_value, pattern)


def frequency_correlation(
    pdp: PowerDelayProfile, frame: FrameConfig, k_rows, k_cols
) -> np.ndarray:
    """E{H(k) H(k')*} between two sets of subcarrier indices."""
    dk = np.subtract.outer(np.asarray(k_rows, dtype=float), np.asarray(k_cols, dtype=float))
    phase = np.exp(
        -2j
        * np.pi
        * frame.subcarrier_spacing_hz
        * np.multiply.outer(dk, pdp.delays_s())
    )
    return phase @ pdp.linear_powers()


def analytic_correlations(
    pdp: PowerDelayProfile, pattern: DmrsPattern, frame: FrameConfig
) -> CorrelationSet:
    k_all = np.arange(frame.n_subcarriers)
    k_pilot = pattern.pilot_subcarriers(frame)
    r_hhp = frequency_correlation(pdp, frame, k_all, k_pilot)
    return CorrelationSet(r_hhp=r_hhp, r_hphp=r_hhp[k_pilot, :])


def mmse_estimate(ls: PilotEstimate, corr: CorrelationSet, snr_db: float) -> np.ndarray:
    """Apply the MMSE filter per pilot symbol -> [n_subcarriers, n_pilot_sym].

    The noise-to-signal ratio uses the true simulation SNR against unit
    data-symbol power. The inverse is a Hermitian solve; if that fails (e.g.
    a rank-deficient correlation at infinite SNR) a Tikhonov floor of
    1e-10 * trace/N is added before one retry.
    """
    if math.isnan(snr_db):
        raise ValueError("snr_db must not be NaN")
    ratio = 10.0 ** (-snr_db / 10.0)
    if math.isinf(ratio):
        return np.zeros((corr.r_hhp.shape[0], ls.values.shape[1]), dtype=complex)

    n = corr.r_hphp.shape[0]
    a = corr.r_hphp + ratio * np.eye(n)
    try:
        sol = scipy.linalg.solve(a, ls.values, assume_a="pos")
    except np.linalg.LinAlgError:
        floor = 1e-10 * np.trace(a).real / n
        a = a + floor * np.eye(n)
        try:
            sol = scipy.linalg.solve(a, ls.values, assume_a="pos")
        except np.linalg.LinAlgError as e:
            raise RuntimeError(
                f"MMSE solve failed even with regularization; cond={np.linalg.cond(a):.3e}"
            ) from e
    return corr.r_hhp @ sol


@lru_cache(maxsize=None)
def _axis_weights(src: tuple[int, ...], dst_len: int) -> np.ndarray:
    """Linear-interpolation matrix [dst_len, len(src)] with edge hold."""
    dst = np.arange(dst_len, dtype=float)
    src_arr = np.asarray(src, dtype=float)
    w = np.empty((dst_len, len(src)))
    for i in range(len(src)):
        basis = np.zeros(len(src))
        basis[i] = 1.0
        w[:, i] = np.interp(dst, src_arr, basis)
    return w


def bilinear_to_slot(
    values: np.ndarray, pattern: DmrsPattern, frame: FrameConfig
) -> np.ndarray:
    """Interpolate pilot-grid values to the full slot [n_subcarriers, n_symbols].

    Rows may span either the pilot subcarriers (LS input) or every subcarrier
    (MMSE output); columns are the pilot symbols. Interpolation is linear on
    each axis with constant extrapolation beyond the outermost pilots.
    """
    values = np.asarray(values)
    pilot_sc = pattern.pilot_subcarriers(frame)
    if values.shape[1] != pattern.n_pilot_symbols:
        raise ValueError("column count does not match the pilot symbols")
    if values.shape[0] == frame.n_subcarriers:
        full = values
    elif values.shape[0] == pilot_sc.size:
        full = _axis_weights(tuple(pilot_sc), frame.n_subcarriers) @ values
    else:
        raise ValueError(f"cannot interpret {values.shape[0]} rows for this pattern")
    t = _axis_weights(tuple(pattern.pilot_symbols), frame.n_symbols)
    return full @ t.T


def ls_slot_estimate(y: np.ndarray, pattern: DmrsPattern, frame: FrameConfig) -> np.ndarray:
    """LS on the pilots, then bilinear interpolation to the whole slot."""
    ls = ls_estimate(extract_pilots(y, pattern), pattern)
    return bilinear_to_slot(ls.values, pattern, frame)


def mmse_slot_estimate(
    y: np.ndarray,
    pattern: DmrsPattern,
    frame: FrameConfig,
    corr: CorrelationSet,
    snr_db: float,
) -> np.ndarray:
    """MMSE per pilot symbol, then time interpolation to the whole slot."""
    ls = ls_estimate(extract_pilots(y, pattern), pattern)
    return bilinear_to_slot(mmse_estimate(ls, corr, snr_db), pattern, frame)


def mse(h_hat: np.ndarray, h: np.ndarray) -> float:
    """Mean squared error (1/(N_f N_s)) sum |h_hat - h|^2."""
    h_hat = np.asarray(h_hat)
    h = np.asarray(h)
    if h_hat.shape != h.shape:
        raise ValueError(f"shape mismatch: {h_hat.shape} vs {h.shape}")
    d = h_hat - h
    return float(np.mean(d.real**2 + d.imag**2))
