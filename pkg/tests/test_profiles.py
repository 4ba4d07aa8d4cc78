from __future__ import annotations

import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chanest.profiles import (
    BUILTIN_NAMES,
    ChannelSpec,
    PowerDelayProfile,
    builtin_profile,
    cdl_profile,
    load_profile,
    normalize_power,
    resolve_profile,
    save_profile,
    scale_cdl,
)


class TestPowerDelayProfile:
    def test_basic_properties(self):
        pdp = PowerDelayProfile((0.0, 100.0, 500.0), (0.0, -3.0, -6.0))
        assert pdp.n_taps == 3
        assert pdp.max_delay_ns == 500.0
        np.testing.assert_allclose(pdp.delays_s(), [0.0, 1e-7, 5e-7])

    def test_linear_powers(self):
        pdp = PowerDelayProfile((0.0, 100.0), (0.0, -3.0))
        np.testing.assert_allclose(pdp.linear_powers(), [1.0, 10 ** -0.3])
        assert pdp.total_linear_power() == pytest.approx(1.0 + 10 ** -0.3)

    def test_accepts_lists(self):
        pdp = PowerDelayProfile([0.0, 50.0], [0.0, -1.0])
        assert pdp.delays_ns == (0.0, 50.0)
        assert pdp.gains_db == (0.0, -1.0)

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            PowerDelayProfile((), ())

    def test_rejects_length_mismatch(self):
        with pytest.raises(ValueError):
            PowerDelayProfile((0.0, 1.0), (0.0,))

    def test_rejects_negative_first_delay(self):
        with pytest.raises(ValueError):
            PowerDelayProfile((-1.0, 5.0), (0.0, 0.0))

    def test_rejects_non_increasing_delays(self):
        with pytest.raises(ValueError):
            PowerDelayProfile((0.0, 5.0, 5.0), (0.0, 0.0, 0.0))
        with pytest.raises(ValueError):
            PowerDelayProfile((0.0, 5.0, 4.0), (0.0, 0.0, 0.0))

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            PowerDelayProfile((0.0, float("nan")), (0.0, 0.0))
        with pytest.raises(ValueError):
            PowerDelayProfile((0.0, 1.0), (0.0, float("inf")))

    def test_hashable(self):
        a = PowerDelayProfile((0.0, 10.0), (0.0, -1.0))
        b = PowerDelayProfile((0.0, 10.0), (0.0, -1.0))
        assert a == b
        assert hash(a) == hash(b)


class TestChannelSpec:
    def test_defaults(self):
        spec = ChannelSpec(builtin_profile("flat"))
        assert spec.max_doppler_hz == 0.0
        assert not spec.normalize_power

    def test_rejects_negative_doppler(self):
        with pytest.raises(ValueError):
            ChannelSpec(builtin_profile("flat"), max_doppler_hz=-1.0)

    def test_tap_powers_normalized(self):
        pdp = PowerDelayProfile((0.0, 100.0), (0.0, 0.0))
        spec = ChannelSpec(pdp, normalize_power=True)
        assert spec.tap_powers().sum() == pytest.approx(1.0)

    def test_tap_powers_unnormalized(self):
        pdp = PowerDelayProfile((0.0, 100.0), (0.0, 0.0))
        spec = ChannelSpec(pdp)
        assert spec.tap_powers().sum() == pytest.approx(2.0)


class TestBuiltinCatalog:
    def test_catalog_names(self):
        expected = {"flat", "dc1", "dc2", "dc3", "twopath", "epa", "eva", "etu", "designed"}
        assert set(BUILTIN_NAMES) == expected

    def test_name_canonicalization(self):
        assert builtin_profile("Two-Path") == builtin_profile("twopath")
        assert builtin_profile("DC 1") == builtin_profile("dc1")
        assert builtin_profile("EPA") == builtin_profile("epa")

    def test_unknown_name_lists_catalog(self):
        with pytest.raises(ValueError, match="flat"):
            builtin_profile("nonsense")

    def test_flat_is_single_tap(self):
        flat = builtin_profile("flat")
        assert flat.n_taps == 1
        assert flat.delays_ns == (0.0,)
        assert flat.gains_db == (0.0,)

    def test_epa_profile(self):
        epa = builtin_profile("epa")
        assert epa.delays_ns == (0.0, 30.0, 70.0, 90.0, 110.0, 190.0, 410.0)
        assert epa.gains_db == (0.0, -1.0, -2.0, -3.0, -8.0, -17.2, -20.8)

    def test_eva_profile(self):
        eva = builtin_profile("eva")
        assert eva.delays_ns == (0.0, 30.0, 150.0, 310.0, 370.0, 710.0, 1090.0, 1730.0, 2510.0)
        assert eva.gains_db == (0.0, -1.5, -1.4, -3.6, -0.6, -9.1, -7.0, -12.0, -16.9)

    def test_etu_profile(self):
        etu = builtin_profile("etu")
        assert etu.delays_ns == (0.0, 50.0, 120.0, 200.0, 230.0, 500.0, 1600.0, 2300.0, 5000.0)
        assert etu.gains_db == (-1.0, -1.0, -1.0, 0.0, 0.0, 0.0, -3.0, -5.0, -7.0)

    def test_designed_profile(self):
        d = builtin_profile("designed")
        assert d.delays_ns == (0.0, 30.0, 200.0, 300.0, 500.0, 1500.0, 2500.0, 5000.0, 7000.0, 9000.0)
        assert d.gains_db == (0.0, 0.0, 0.0, 0.0, 0.0, 0.0, -1.0, -1.0, -2.0, -4.0)
        # frozen reference: sum of linear tap powers of the designed profile
        assert d.total_linear_power() == pytest.approx(8.617720984482254, rel=0, abs=1e-12)

    def test_twopath_profile(self):
        tp = builtin_profile("twopath")
        assert tp.delays_ns == (50.0, 5000.0)
        assert tp.gains_db == (-3.0, -3.0)


class TestCdlProfiles:
    def test_cdl_a_table(self):
        cdl = cdl_profile("cdl-a")
        assert len(cdl.normalized_delays) == 23
        assert cdl.normalized_delays[0] == 0.0
        assert cdl.normalized_delays[1] == pytest.approx(0.3819)
        assert cdl.normalized_delays[-1] == pytest.approx(9.6586)
        assert cdl.cluster_powers_db[0] == -13.4

    def test_cdl_b_table(self):
        cdl = cdl_profile("cdl-b")
        assert len(cdl.normalized_delays) == 23
        assert cdl.cluster_powers_db[0] == 0.0
        assert cdl.normalized_delays[-1] == pytest.approx(4.7834)

    def test_cdl_c_table(self):
        cdl = cdl_profile("cdl-c")
        assert len(cdl.normalized_delays) == 24
        assert cdl.cluster_powers_db[5] == 0.0

    def test_unknown_cdl(self):
        with pytest.raises(ValueError):
            cdl_profile("cdl-z")

    def test_scale_is_exact_multiplication(self):
        cdl = cdl_profile("cdl-a")
        for ds in (20.0, 30.0, 1148.0, 30000.0):
            pdp = scale_cdl(cdl, ds)
            expect = np.sort(np.asarray(cdl.normalized_delays) * ds)
            assert np.array_equal(np.asarray(pdp.delays_ns), expect)

    def test_scale_spot_value(self):
        # second shortest CDL-A cluster sits at 0.3819 normalized delay
        pdp = scale_cdl(cdl_profile("cdl-a"), 1148.0)
        assert pdp.delays_ns[1] == 0.3819 * 1148.0

    def test_scale_preserves_power_pairing(self):
        cdl = cdl_profile("cdl-b")
        pdp = scale_cdl(cdl, 300.0)
        order = np.argsort(np.asarray(cdl.normalized_delays), kind="stable")
        np.testing.assert_array_equal(
            np.asarray(pdp.gains_db), np.asarray(cdl.cluster_powers_db)[order]
        )

    def test_scale_rejects_bad_ds(self):
        cdl = cdl_profile("cdl-a")
        with pytest.raises(ValueError):
            scale_cdl(cdl, 0.0)
        with pytest.raises(ValueError):
            scale_cdl(cdl, -5.0)

    def test_scaled_name_records_ds(self):
        pdp = scale_cdl(cdl_profile("cdl-a"), 300.0)
        assert pdp.name == "cdl-a@300ns"


class TestNormalizePower:
    def test_unit_total_power(self):
        pdp = builtin_profile("designed")
        n = normalize_power(pdp)
        assert n.total_linear_power() == pytest.approx(1.0, rel=1e-12)

    def test_equal_two_tap_split(self):
        pdp = PowerDelayProfile((0.0, 100.0), (0.0, 0.0))
        n = normalize_power(pdp)
        # each tap lands at -10*log10(2) dB
        np.testing.assert_allclose(n.gains_db, [-10 * math.log10(2.0)] * 2)
        assert n.gains_db[0] == pytest.approx(-3.0102999566398120)

    def test_preserves_delays(self):
        pdp = builtin_profile("etu")
        assert normalize_power(pdp).delays_ns == pdp.delays_ns

    @given(
        st.lists(
            st.floats(min_value=-30.0, max_value=10.0, allow_nan=False),
            min_size=1,
            max_size=12,
        )
    )
    @settings(max_examples=50, deadline=None)
    def test_idempotent(self, gains):
        delays = tuple(float(i) * 10.0 for i in range(len(gains)))
        pdp = PowerDelayProfile(delays, tuple(gains))
        once = normalize_power(pdp)
        twice = normalize_power(once)
        assert once.total_linear_power() == pytest.approx(1.0, rel=1e-9)
        np.testing.assert_allclose(twice.gains_db, once.gains_db, atol=1e-9)


class TestProfileIo:
    def test_round_trip(self, tmp_path):
        pdp = builtin_profile("eva")
        path = tmp_path / "eva.json"
        save_profile(pdp, path)
        loaded = load_profile(path)
        assert loaded.delays_ns == pdp.delays_ns
        assert loaded.gains_db == pdp.gains_db
        assert loaded.name == pdp.name

    def test_file_layout(self, tmp_path):
        pdp = PowerDelayProfile((0.0, 10.0), (0.0, -2.0), name="demo")
        path = tmp_path / "demo.json"
        save_profile(pdp, path)
        blob = json.loads(path.read_text())
        assert blob["name"] == "demo"
        assert blob["delays_ns"] == [0.0, 10.0]
        assert blob["gains_db"] == [0.0, -2.0]

    def test_load_rejects_missing_key(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"delays_ns": [0.0]}')
        with pytest.raises(ValueError):
            load_profile(path)

    def test_resolve_builtin_first(self):
        assert resolve_profile("epa") == builtin_profile("epa")

    def test_resolve_path(self, tmp_path):
        pdp = builtin_profile("dc2")
        path = tmp_path / "dc2.json"
        save_profile(pdp, path)
        assert resolve_profile(str(path)).delays_ns == pdp.delays_ns

    def test_resolve_unknown(self):
        with pytest.raises(ValueError):
            resolve_profile("no-such-profile-or-file.json")
