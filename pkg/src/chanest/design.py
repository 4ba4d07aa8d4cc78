"""PDP envelope construction, the applicability predicate, and eigen analysis.

A designed profile "admits" a candidate when the candidate's piecewise-linear
dB envelope never rises above the designed envelope (plus a tolerance), its
maximum delay does not exceed the designed one, and it has no more taps. The
eigen view compares spectra of the frequency autocorrelation matrix R_HH.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .estimators import frequency_correlation
from .fading import generate_realization, response_from_taps
from .link import FrameConfig
from .profiles import ChannelSpec, PowerDelayProfile

__all__ = [
    "PdpEnvelope",
    "Violation",
    "ApplicabilityReport",
    "EigenSpectrum",
    "EigenComparison",
    "pdp_envelope",
    "is_applicable",
    "autocorrelation_matrix",
    "eigen_spectrum",
    "eigen_compare",
    "suggest_envelope",
]

# slack absorbing float round-off when envelopes touch at shared anchors
_ENVELOPE_EPS_DB = 1e-9


@dataclass(frozen=True)
class PdpEnvelope:
    """Piecewise-linear-in-dB envelope through the tap points of a profile."""

    anchors_ns: tuple[float, ...]
    anchors_db: tuple[float, ...]

    @property
    def domain_ns(self) -> tuple[float, float]:
        return (self.anchors_ns[0], self.anchors_ns[-1])

    def value_db(self, tau_ns):
        tau = np.asarray(tau_ns, dtype=float)
        lo, hi = self.domain_ns
        if np.any(tau < lo) or np.any(tau > hi):
            raise ValueError(f"delay outside envelope domain [{lo:g}, {hi:g}] ns")
        out = np.interp(tau, self.anchors_ns, self.anchors_db)
        return float(out) if np.isscalar(tau_ns) else out


def pdp_envelope(pdp: PowerDelayProfile) -> PdpEnvelope:
    return PdpEnvelope(pdp.delays_ns, pdp.gains_db)


@dataclass(frozen=True)
class Violation:
    kind: str  # envelope | max_delay | tap_count
    delay_ns: float | None
    margin: float  # worst dB overshoot, excess ns, or excess tap count


@dataclass(frozen=True)
class ApplicabilityReport:
    applicable: bool
    violations: tuple[Violation, ...]

    def as_dict(self) -> dict:
        return {
            "applicable": self.applicable,
            "violations": [
                {"kind": v.kind, "delay_ns": v.delay_ns, "margin": v.margin}
                for v in self.violations
            ],
        }


def _envelope_grid(candidate: PowerDelayProfile, designed: PowerDelayProfile) -> np.ndarray:
    """1 ns grid over the candidate's span plus both profiles' anchors."""
    cd = np.asarray(candidate.delays_ns, dtype=float)
    dd = np.asarray(designed.delays_ns, dtype=float)
    dense = np.arange(np.ceil(cd[0]), np.floor(cd[-1]) + 1.0)
    inside = dd[(dd >= cd[0]) & (dd <= cd[-1])]
    return np.unique(np.concatenate([dense, cd, inside]))


def is_applicable(
    candidate: PowerDelayProfile,
    designed: PowerDelayProfile,
    tol_db: float = 0.0,
    *,
    linear_power: bool = False,
) -> ApplicabilityReport:
    """Check envelope dominance plus the max-delay and tap-count conditions.

    The envelope comparison runs in the dB domain by default; with
    linear_power=True the envelopes are interpolated in linear power instead
    (tol_db still applies as a dB shift). Delay and tap-count checks carry no
    tolerance. Violations are reported per kind with their worst margin.
    """
    if tol_db < 0:
        raise ValueError("tol_db must be >= 0")
    violations: list[Violation] = []

    if candidate.max_delay_ns > designed.max_delay_ns:
        violations.append(
            Violation(
                "max_delay",
                candidate.max_delay_ns,
                candidate.max_delay_ns - designed.max_delay_ns,
            )
        )
    if candidate.n_taps > designed.n_taps:
        violations.append(Violation("tap_count", None, candidate.n_taps - designed.n_taps))

    if candidate.delays_ns[0] < designed.delays_ns[0] or (
        candidate.max_delay_ns > designed.max_delay_ns
    ):
        # candidate has taps where the designed envelope is not even defined
        off = (
            candidate.delays_ns[0]
            if candidate.delays_ns[0] < designed.delays_ns[0]
            else candidate.max_delay_ns
        )
        violations.append(Violation("envelope", off, math.inf))
    else:
        grid = _envelope_grid(candidate, designed)
        if linear_power:
            cand = np.interp(grid, candidate.delays_ns, 10.0 ** (np.asarray(candidate.gains_db) / 10.0))
            des = np.interp(grid, designed.delays_ns, 10.0 ** (np.asarray(designed.gains_db) / 10.0))
            with np.errstate(divide="ignore"):
                diff = 10.0 * np.log10(cand) - 10.0 * np.log10(des)
        else:
            cand = np.interp(grid, candidate.delays_ns, candidate.gains_db)
            des = np.interp(grid, designed.delays_ns, designed.gains_db)
            diff = cand - des
        worst = int(np.argmax(diff))
        if diff[worst] > tol_db + _ENVELOPE_EPS_DB:
            violations.append(Violation("envelope", float(grid[worst]), float(diff[worst] - tol_db)))

    return ApplicabilityReport(applicable=not violations, violations=tuple(violations))


def autocorrelation_matrix(
    pdp: PowerDelayProfile,
    frame: FrameConfig,
    mode: str = "analytic",
    n: int | None = None,
    seed=None,
) -> np.ndarray:
    """R_HH over all subcarriers: closed form, or averaged over n realizations."""
    if mode == "analytic":
        k = np.arange(frame.n_subcarriers)
        return frequency_correlation(pdp, frame, k, k)
    if mode == "empirical":
        if n is None or n < 1:
            raise ValueError("empirical mode needs n >= 1")
        spec = ChannelSpec(pdp)
        delays_s = pdp.delays_s()
        acc = np.zeros((frame.n_subcarriers, frame.n_subcarriers), dtype=complex)
        for i in range(n):
            r = generate_realization(spec, [0 if seed is None else seed, i], (0.0,))
            h = response_from_taps(r.tap_gains, delays_s, frame)[:, 0]
            acc += np.outer(h, h.conj())
        return acc / n
    raise ValueError(f"unknown mode {mode!r}")


@dataclass(frozen=True)
class EigenSpectrum:
    """Descending eigenvalues of an N_f x N_f autocorrelation matrix."""

    eigenvalues: tuple[float, ...]
    n: int

    @property
    def trace(self) -> float:
        return float(sum(self.eigenvalues))

    def rank(self, threshold_frac: float) -> int:
        cut = threshold_frac * self.trace
        return int(sum(1 for v in self.eigenvalues if v > cut))


def eigen_spectrum(r: np.ndarray) -> EigenSpectrum:
    """Eigen-decompose a Hermitian matrix, verifying the reconstruction."""
    r = np.asarray(r)
    scale = np.linalg.norm(r)
    if scale > 0 and np.linalg.norm(r - r.conj().T) > 1e-9 * scale:
        raise ValueError("matrix is not Hermitian within 1e-9 relative")
    w, u = np.linalg.eigh(r)
    if scale > 0:
        resid = np.linalg.norm(r - (u * w) @ u.conj().T) / scale
        if resid >= 1e-8:
            raise RuntimeError(f"eigendecomposition residual {resid:.3e} too large")
    w = w[::-1]
    if w.size and w[-1] < -1e-9 * max(w[0], 0.0):
        raise ValueError("matrix is not positive semi-definite")
    return EigenSpectrum(tuple(float(v) for v in w), n=r.shape[0])


@dataclass(frozen=True)
class EigenComparison:
    elementwise: tuple[bool, ...]
    rank_designed: int
    rank_candidate: int

    @property
    def rank_dominant(self) -> bool:
        return self.rank_designed >= self.rank_candidate


def eigen_compare(
    designed: EigenSpectrum,
    candidate: EigenSpectrum,
    count: int = 8,
    threshold_frac: float = 0.01,
) -> EigenComparison:
    """Element-wise dominance over the first `count` eigenvalues plus ranks."""
    if count > min(designed.n, candidate.n):
        raise ValueError("count exceeds spectrum length")
    elementwise = tuple(
        designed.eigenvalues[i] >= candidate.eigenvalues[i] for i in range(count)
    )
    return EigenComparison(
        elementwise=elementwise,
        rank_designed=designed.rank(threshold_frac),
        rank_candidate=candidate.rank(threshold_frac),
    )


def _crossings(a: PdpEnvelope, b: PdpEnvelope) -> list[float]:
    """Delays where two piecewise-linear envelopes cross inside their overlap."""
    lo = max(a.domain_ns[0], b.domain_ns[0])
    hi = min(a.domain_ns[1], b.domain_ns[1])
    if hi <= lo:
        return []
    brk = np.unique(
        np.concatenate(
            [
                np.asarray([lo, hi]),
                np.asarray([t for t in a.anchors_ns + b.anchors_ns if lo < t < hi]),
            ]
        )
    )
    out = []
    da = np.interp(brk, a.anchors_ns, a.anchors_db)
    db = np.interp(brk, b.anchors_ns, b.anchors_db)
    d = da - db
    for i in range(len(brk) - 1):
        if d[i] * d[i + 1] < 0:  # strict sign change inside the segment
            t = brk[i] + (brk[i + 1] - brk[i]) * d[i] / (d[i] - d[i + 1])
            out.append(float(t))
    return out


def suggest_envelope(
    profiles, margin_db: float = 0.0, extra_delay_ns: float = 0.0
) -> PowerDelayProfile:
    """Construct a profile whose envelope dominates every input.

    Anchors are the union of all input anchors plus pairwise crossing points,
    valued at the pointwise-dB maximum over the inputs plus margin_db, with a
    flat tail extending max delay by extra_delay_ns. By construction every
    input passes is_applicable against the result at tol 0.
    """
    profiles = list(profiles)
    if not profiles:
        raise ValueError("need at least one input profile")
    if extra_delay_ns < 0:
        raise ValueError("extra_delay_ns must be >= 0")
    envs = [pdp_envelope(p) for p in profiles]

    delays = set()
    for env in envs:
        delays.update(env.anchors_ns)
    for i in range(len(envs)):
        for j in range(i + 1, len(envs)):
            delays.update(_crossings(envs[i], envs[j]))

    anchors = []
    for t in sorted(delays):
        if anchors and t - anchors[-1] <= 1e-9:
            continue
        anchors.append(t)

    def upper(t: float) -> float:
        vals = [
            env.value_db(t) for env in envs if env.domain_ns[0] <= t <= env.domain_ns[1]
        ]
        return max(vals) + margin_db

    gains = [upper(t) for t in anchors]
    if extra_delay_ns > 0:
        anchors.append(anchors[-1] + extra_delay_ns)
        gains.append(gains[-1])
    return PowerDelayProfile(tuple(anchors), tuple(gains), name="suggested")
