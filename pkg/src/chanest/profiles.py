"""Power delay profiles: built-in catalog, CDL tables, delay scaling.

Delays are carried in nanoseconds and average tap gains in dB throughout;
conversion to linear power happens only at the point of use (fading engine
and analytics).
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path

import numpy as np

__all__ = [
    "PowerDelayProfile",
    "ChannelSpec",
    "CdlProfile",
    "BUILTIN_NAMES",
    "CDL_NAMES",
    "builtin_profile",
    "cdl_profile",
    "scale_cdl",
    "normalize_power",
    "load_profile",
    "save_profile",
    "resolve_profile",
]


@dataclass(frozen=True)
class PowerDelayProfile:
    """Ordered multipath tap table: (delay in ns, average gain in dB) pairs."""

    delays_ns: tuple[float, ...]
    gains_db: tuple[float, ...]
    name: str = ""

    def __post_init__(self):
        delays = tuple(float(d) for d in self.delays_ns)
        gains = tuple(float(g) for g in self.gains_db)
        object.__setattr__(self, "delays_ns", delays)
        object.__setattr__(self, "gains_db", gains)
        if len(delays) == 0:
            raise ValueError("profile needs at least one tap")
        if len(delays) != len(gains):
            raise ValueError("delays_ns and gains_db must have the same length")
        if not all(math.isfinite(v) for v in delays + gains):
            raise ValueError("delays and gains must be finite")
        if delays[0] < 0:
            raise ValueError("first delay must be >= 0")
        if any(b <= a for a, b in zip(delays, delays[1:])):
            raise ValueError("delays must be strictly increasing")

    @property
    def n_taps(self) -> int:
        return len(self.delays_ns)

    @property
    def max_delay_ns(self) -> float:
        return self.delays_ns[-1]

    def delays_s(self) -> np.ndarray:
        return np.asarray(self.delays_ns, dtype=float) * 1e-9

    def linear_powers(self) -> np.ndarray:
        return 10.0 ** (np.asarray(self.gains_db, dtype=float) / 10.0)

    def total_linear_power(self) -> float:
        return float(np.sum(self.linear_powers()))


@dataclass(frozen=True)
class ChannelSpec:
    """A profile plus the dynamics the fading engine needs."""

    pdp: PowerDelayProfile
    max_doppler_hz: float = 0.0
    normalize_power: bool = False

    def __post_init__(self):
        if not (math.isfinite(self.max_doppler_hz) and self.max_doppler_hz >= 0):
            raise ValueError("max_doppler_hz must be finite and >= 0")

    def tap_powers(self) -> np.ndarray:
        p = self.pdp.linear_powers()
        return p / p.sum() if self.normalize_power else p


@dataclass(frozen=True)
class CdlProfile:
    """Unitless clustered-delay-line table; scale with :func:`scale_cdl`."""

    name: str
    normalized_delays: tuple[float, ...]
    cluster_powers_db: tuple[float, ...]

    def __post_init__(self):
        delays = tuple(float(d) for d in self.normalized_delays)
        powers = tuple(float(p) for p in self.cluster_powers_db)
        object.__setattr__(self, "normalized_delays", delays)
        object.__setattr__(self, "cluster_powers_db", powers)
        if len(delays) == 0 or len(delays) != len(powers):
            raise ValueError("delay and power lists must be non-empty and equal length")
        if delays[0] != 0.0:
            raise ValueError("first normalized delay must be 0")
        if any(d < 0 for d in delays):
            raise ValueError("normalized delays must be non-negative")


# Table 1 catalog: Flat/TwoPath/DC1-3 are the customized channels; EPA/EVA/ETU
# are the standard extended TDL models; Designed is the envelope-dominant PDP.
_CATALOG: dict[str, tuple[tuple[float, ...], tuple[float, ...]]] = {
    "flat": ((0.0,), (0.0,)),
    "dc1": ((0, 50, 100, 200, 400), (0.0, -2, -4, -8, -16)),
    "dc2": ((0, 30, 200, 300, 500, 1500, 2500, 5000), (-7.0, 0, 0, -1, -2, -1, -1, -5.5)),
    "dc3": ((0, 50, 120, 200, 230, 500, 1600, 2300, 5000, 7000),
            (0.0, -1, -1, -1, -1, -1.5, -1.5, -1.5, -3, -5)),
    "twopath": ((50, 5000), (-3.0, -3.0)),
    "epa": ((0, 30, 70, 90, 110, 190, 410), (0.0, -1, -2, -3, -8, -17.2, -20.8)),
    "eva": ((0, 30, 150, 310, 370, 710, 1090, 1730, 2510),
            (0.0, -1.5, -1.4, -3.6, -0.6, -9.1, -7.0, -12.0, -16.9)),
    "etu": ((0, 50, 120, 200, 230, 500, 1600, 2300, 5000), (-1.0, -1, -1, 0, 0, 0, -3, -5, -7)),
    "designed": ((0, 30, 200, 300, 500, 1500, 2500, 5000, 7000, 9000),
                 (0.0, 0, 0, 0, 0, 0, -1, -1, -2, -4)),
}

BUILTIN_NAMES = tuple(_CATALOG)
CDL_NAMES = ("CDL-A", "CDL-B", "CDL-C")


def _canonical(name: str) -> str:
    return name.strip().lower().replace("-", "").replace("_", "").replace(" ", "")


def builtin_profile(name: str) -> PowerDelayProfile:
    """Return a catalog profile by name (case and separator insensitive)."""
    key = _canonical(name)
    if key not in _CATALOG:
        raise ValueError(
            f"unknown profile {name!r}; valid names: {', '.join(BUILTIN_NAMES)}"
        )
    delays, gains = _CATALOG[key]
    return PowerDelayProfile(delays, gains, name=key)


_cdl_cache: dict[str, CdlProfile] = {}


def cdl_profile(name: str) -> CdlProfile:
    """Load one of the embedded CDL-A/B/C tables."""
    key = _canonical(name)
    want = {"cdla": "CDL-A", "cdlb": "CDL-B", "cdlc": "CDL-C"}.get(key)
    if want is None:
        raise ValueError(f"unknown CDL profile {name!r}; valid names: {', '.join(CDL_NAMES)}")
    if want not in _cdl_cache:
        text = resources.files("chanest").joinpath("data/cdl_38901.json").read_text()
        data = json.loads(text)
        if data["format_version"] != 1:
            raise ValueError(f"unsupported CDL data version {data['format_version']}")
        entry = data["profiles"][want]
        _cdl_cache[want] = CdlProfile(
            want, tuple(entry["normalized_delays"]), tuple(entry["cluster_powers_db"])
        )
    return _cdl_cache[want]


def scale_cdl(profile: CdlProfile, ds_desired_ns: float) -> PowerDelayProfile:
    """Scale a CDL table to a desired delay spread.

    Each delay is exactly normalized_delay * ds_desired_ns; cluster powers are
    unchanged. Taps are sorted by scaled delay (the 38.901 tables are listed
    in cluster order, not delay order).
    """
    if not (math.isfinite(ds_desired_ns) and ds_desired_ns > 0):
        raise ValueError("ds_desired_ns must be positive")
    delays = np.asarray(profile.normalized_delays, dtype=float) * float(ds_desired_ns)
    order = np.argsort(delays, kind="stable")
    powers = np.asarray(profile.cluster_powers_db, dtype=float)[order]
    return PowerDelayProfile(
        tuple(delays[order]), tuple(powers), name=f"{profile.name.lower()}@{ds_desired_ns:g}ns"
    )


def normalize_power(pdp: PowerDelayProfile) -> PowerDelayProfile:
    """Rescale gains so the linear powers sum to 1; delays unchanged."""
    offset_db = 10.0 * math.log10(pdp.total_linear_power())
    return replace(pdp, gains_db=tuple(g - offset_db for g in pdp.gains_db))


def load_profile(path) -> PowerDelayProfile:
    """Read a profile from a JSON file {"name", "delays_ns", "gains_db"}."""
    with open(path) as f:
        data = json.load(f)
    try:
        return PowerDelayProfile(
            tuple(data["delays_ns"]), tuple(data["gains_db"]), name=str(data.get("name", ""))
        )
    except KeyError as e:
        raise ValueError(f"profile file {path} is missing key {e}") from None


def save_profile(pdp: PowerDelayProfile, path) -> None:
    payload = {"name": pdp.name, "delays_ns": list(pdp.delays_ns), "gains_db": list(pdp.gains_db)}
    Path(path).write_text(json.dumps(payload, indent=2) + "\n")


def resolve_profile(selector: str) -> PowerDelayProfile:
    """Accept a built-in profile name or a path to a profile JSON file."""
    if _canonical(selector) in _CATALOG:
        return builtin_profile(selector)
    if Path(selector).is_file():
        return load_profile(selector)
    raise ValueError(
        f"unknown channel {selector!r}: expected one of {', '.join(BUILTIN_NAMES)} "
        "or a path to a profile JSON file"
    )
