import dataclasses
import math

import numpy as np
import pytest

from mmwsim import association as assoc
from mmwsim import montecarlo as mc
from mmwsim.channel import LinkState
from mmwsim.config import BAND_28, BAND_73, BlockageParams, default_config

from oracles import naive_best_carrier_bs

INF = math.inf


def links_from_pathloss(*matrices):
    """Synthetic BackgroundLinks: one 28 GHz pathloss matrix per operator;
    +inf entries are outage."""
    states, pls = [], []
    for pl in matrices:
        pl = np.asarray(pl, dtype=float)
        st = np.where(np.isfinite(pl), LinkState.NLOS, LinkState.OUTAGE).astype(np.int8)
        states.append(st)
        pls.append({BAND_28: pl})
    return assoc.BackgroundLinks(states=states, pathloss_db=pls)


# --- phase 1 ------------------------------------------------------------------


def test_single_bs_takes_everyone():
    table = assoc.min_pathloss_association(links_from_pathloss([[100.0, 110.0, 120.0]]))
    assert np.array_equal(table.serving_bs[0], [0, 0, 0])


def test_min_pathloss_wins():
    pl = [[120.0, 100.0], [110.0, 130.0]]
    table = assoc.min_pathloss_association(links_from_pathloss(pl))
    assert np.array_equal(table.serving_bs[0], [1, 0])


def test_equal_pathloss_tie_lowest_bs_index():
    pl = [[100.0], [100.0], [100.0]]
    table = assoc.min_pathloss_association(links_from_pathloss(pl))
    assert table.serving_bs[0][0] == 0


def test_full_outage_ue_left_unassociated():
    pl = [[100.0, INF], [110.0, INF]]
    table = assoc.min_pathloss_association(links_from_pathloss(pl))
    assert table.serving_bs[0][1] == -1
    table = assoc.random_band_assignment(table, 0.5, np.random.default_rng(0))
    assert table.load[0].sum() == 1  # only the covered UE counts


def test_operator_without_bs():
    table = assoc.min_pathloss_association(links_from_pathloss(np.zeros((0, 4))))
    assert np.array_equal(table.serving_bs[0], [-1, -1, -1, -1])
    assert table.load[0].shape == (0, 2)


def test_unknown_rule_rejected():
    with pytest.raises(ValueError):
        assoc.min_pathloss_association(links_from_pathloss([[1.0]]), rule="5ghz")


def test_min_rule_uses_both_bands():
    pl28 = np.array([[100.0], [90.0]])
    pl73 = np.array([[80.0], [95.0]])
    links = assoc.BackgroundLinks(
        states=[np.full((2, 1), LinkState.LOS, dtype=np.int8)],
        pathloss_db=[{BAND_28: pl28, BAND_73: pl73}],
    )
    assert assoc.min_pathloss_association(links, rule=BAND_28).serving_bs[0][0] == 1
    assert assoc.min_pathloss_association(links, rule="min").serving_bs[0][0] == 0


def test_band_split_extremes():
    table = assoc.min_pathloss_association(links_from_pathloss([[100.0] * 6]))
    all28 = assoc.random_band_assignment(table, 1.0, np.random.default_rng(1))
    assert np.all(all28.carrier[0] == 0)
    all73 = assoc.random_band_assignment(table, 0.0, np.random.default_rng(1))
    assert np.all(all73.carrier[0] == 1)


def test_band_split_binomial_ci():
    n = 100_000
    table = assoc.min_pathloss_association(links_from_pathloss([[100.0] * n]))
    table = assoc.random_band_assignment(table, 0.5, np.random.default_rng(2))
    frac = np.mean(table.carrier[0] == 0)
    assert abs(frac - 0.5) < 3 * math.sqrt(0.25 / n)


def test_load_column_sums_match_assignments():
    rng = np.random.default_rng(3)
    pl = rng.uniform(90, 140, size=(5, 200))
    table = assoc.min_pathloss_association(links_from_pathloss(pl))
    table = assoc.random_band_assignment(table, 0.4, rng)
    for c in (0, 1):
        assert table.load[0][:, c].sum() == np.sum(table.carrier[0] == c)
    # per-BS bookkeeping
    for i in range(5):
        for c in (0, 1):
            n = np.sum((table.serving_bs[0] == i) & (table.carrier[0] == c))
            assert table.load[0][i, c] == n


# --- regimes and interferer sets ----------------------------------------------


def test_regime_bandwidths():
    band28 = default_config().band("28ghz")
    assert assoc.REGIMES["licensed"].bandwidth_hz(band28, 4) == 250e6
    assert assoc.REGIMES["pooled"].bandwidth_hz(band28, 4) == 1e9
    assert assoc.REGIMES["hybrid"].bandwidth_hz(band28, 4) == 250e6
    band73 = default_config().band("73ghz")
    assert assoc.REGIMES["hybrid"].bandwidth_hz(band73, 4) == 1e9


def test_unknown_regime_name():
    with pytest.raises(ValueError):
        assoc.regime_from_name("duopoly")


def test_regime_from_config_matches_hybrid_default():
    spec = assoc.regime_from_config(default_config())
    assert spec.mode(BAND_28) == "exclusive"
    assert spec.mode(BAND_73) == "pooled"


@pytest.fixture(scope="module")
def realization():
    config = dataclasses.replace(
        default_config(), bs_density=25.0, ue_density=40.0, seed=11
    )
    return mc.build_realization(config, 0)


def test_interferer_set_counts(realization):
    ref = realization.ref
    own = int(np.sum(ref.operator_of == ref.reference_operator))
    total = ref.n_bs
    serving = int(ref.band(BAND_28).own_candidates[0])
    excl = assoc.interferer_set(assoc.REGIMES["licensed"], BAND_28, 0, serving, ref)
    pool = assoc.interferer_set(assoc.REGIMES["pooled"], BAND_28, 0, serving, ref)
    assert len(excl) == own - 1
    assert len(pool) == total - 1
    assert serving not in excl and serving not in pool
    assert set(excl).issubset(set(pool))


def test_interferer_sets_coincide_for_single_operator():
    config = dataclasses.replace(
        default_config(), num_operators=1, bs_density=25.0, ue_density=40.0, seed=5
    )
    ref = mc.build_realization(config, 0).ref
    serving = int(ref.band(BAND_28).own_candidates[0])
    excl = assoc.interferer_set(assoc.REGIMES["licensed"], BAND_28, 0, serving, ref)
    pool = assoc.interferer_set(assoc.REGIMES["pooled"], BAND_28, 0, serving, ref)
    assert np.array_equal(excl, pool)


# --- SINR and throughput -------------------------------------------------------


def test_sinr_hand_link_budget():
    # no interferers, unit gain, PL 101.4 dB, 30 dBm, 250 MHz, -167 dBm/Hz
    config = default_config()
    signal = 10 ** ((30.0 - 101.4) / 10.0)
    noise = assoc.noise_power_mw(config, 250e6)
    got = assoc.sinr_linear(signal, 0.0, noise)
    expected = 10 ** ((30.0 - 101.4 + 167.0 - 10 * math.log10(2.5e8)) / 10.0)
    assert abs(got - expected) < 1e-9 * expected
    assert abs(got - 14.5) < 0.1


def test_sinr_vanishes_with_infinite_interference():
    assert assoc.sinr_linear(1.0, math.inf, 1e-9) == 0.0


def test_sinr_power_scale_invariance_without_noise():
    s, i = 2.5e-7, 4.0e-8
    assert assoc.sinr_linear(2 * s, 2 * i, 0.0) == assoc.sinr_linear(s, i, 0.0)


def test_sinr_outage_serving_raises(realization):
    ref = realization.ref
    outage = np.flatnonzero(ref.state == LinkState.OUTAGE)
    if outage.size == 0:
        pytest.skip("no outage link in this draw")
    with pytest.raises(ValueError):
        assoc.sinr(ref, int(outage[0]), BAND_28, assoc.REGIMES["pooled"], realization.config)


def test_throughput_values():
    assert assoc.throughput(250e6, 0, 15.0) == pytest.approx(1e9, rel=1e-12)
    assert assoc.throughput(250e6, 0, 0.0) == 0.0
    r1 = assoc.throughput(100e6, 1, 3.0)
    r3 = assoc.throughput(100e6, 3, 3.0)
    assert r3 == pytest.approx(r1 / 2, rel=1e-12)


def test_throughput_argument_errors():
    with pytest.raises(ValueError):
        assoc.throughput(0.0, 0, 1.0)
    with pytest.raises(ValueError):
        assoc.throughput(1e6, -1, 1.0)
    with pytest.raises(ValueError):
        assoc.throughput(1e6, 0, -0.5)


# --- phase 2 selection ----------------------------------------------------------


def test_candidate_metrics_regime_dominance(realization):
    # identical realization: exclusive SINR >= pooled SINR per candidate,
    # pooled bandwidth = M * exclusive bandwidth
    config = realization.config
    for band_name in (BAND_28, BAND_73):
        excl = assoc.candidate_metrics(realization.ref, band_name, assoc.REGIMES["licensed"], config)
        pool = assoc.candidate_metrics(realization.ref, band_name, assoc.REGIMES["pooled"], config)
        assert np.all(excl.sinr >= pool.sinr)
        assert pool.bandwidth_hz == config.num_operators * excl.bandwidth_hz


def test_outage_candidates_excluded(realization):
    ref = realization.ref
    for band in ref.bands:
        assert np.all(np.isfinite(band.pathloss_db[band.own_candidates]))
        assert np.all(band.rx_power_mw[ref.state == LinkState.OUTAGE] == 0.0)


def test_selection_matches_naive_oracle(realization):
    config = realization.config
    for regime_name in ("hybrid", "licensed", "pooled"):
        regime = assoc.REGIMES[regime_name]
        sel = assoc.best_carrier_bs(realization.ref, regime, config)
        carrier, bs, rate = naive_best_carrier_bs(realization.ref, regime, config)
        assert (sel.carrier, sel.bs_global) == (carrier, bs)
        assert sel.rate_bps == pytest.approx(rate, rel=1e-9)


def test_selection_invariant_to_rate_scaling(realization):
    # argmax over candidates is unchanged by a positive rescaling of rates
    config = realization.config
    regime = assoc.REGIMES["hybrid"]
    sel = assoc.best_carrier_bs(realization.ref, regime, config)
    per_band = [
        assoc.candidate_metrics(realization.ref, b.name, regime, config) for b in config.bands
    ]
    for scale in (1.0, 3.7, 1e-6):
        best = None
        for metrics in per_band:
            rates = metrics.rate_bps * scale
            if rates.size == 0:
                continue
            k = int(np.argmax(rates))
            if best is None or rates[k] > best[0]:
                best = (rates[k], metrics.band_name, int(metrics.candidates[k]))
        assert (best[1], best[2]) == (sel.carrier, sel.bs_global)


def test_selection_monotonic_in_serving_sinr(realization):
    # boosting the chosen candidate's own serving gain never unseats it
    config = realization.config
    regime = assoc.REGIMES["hybrid"]
    sel = assoc.best_carrier_bs(realization.ref, regime, config)
    band = realization.ref.band(sel.carrier)
    band.serving_gain[sel.bs_global] *= 2.0
    boosted = assoc.best_carrier_bs(realization.ref, regime, config)
    band.serving_gain[sel.bs_global] /= 2.0
    assert (boosted.carrier, boosted.bs_global) == (sel.carrier, sel.bs_global)
    assert boosted.rate_bps >= sel.rate_bps


def test_load_accounting_in_rate(realization):
    config = realization.config
    for regime_name in ("hybrid", "licensed", "pooled"):
        sel = assoc.best_carrier_bs(realization.ref, assoc.REGIMES[regime_name], config)
        band_idx = realization.ref.band_index(sel.carrier)
        op, local = sel.operator, sel.bs_local
        assert sel.load == realization.table.load[op][local, band_idx]
        expected = assoc.throughput(sel.bandwidth_hz, sel.load, sel.sinr)
        assert sel.rate_bps == pytest.approx(expected, rel=1e-12)


def test_all_outage_gives_null_selection():
    # blockage coefficients that put every link beyond a few mm in outage
    config = dataclasses.replace(
        default_config(),
        num_operators=1,
        bs_density=10.0,
        ue_density=10.0,
        blockage=BlockageParams(a_out=100.0, b_out=1e-9, a_los=0.0149),
        seed=3,
    )
    real = mc.build_realization(config, 0)
    sel = assoc.best_carrier_bs(real.ref, assoc.REGIMES["hybrid"], config)
    assert sel.carrier is None and sel.bs_global is None
    assert sel.rate_bps == 0.0


def test_dominant_band_selected():
    # 73 GHz transmit power cranked far above 28 GHz: selection must take 73
    base = default_config()
    bands = (
        dataclasses.replace(base.bands[0], tx_power_dbm=-100.0),
        dataclasses.replace(base.bands[1], tx_power_dbm=30.0),
    )
    config = dataclasses.replace(
        base, num_operators=1, bs_density=20.0, ue_density=10.0, bands=bands, seed=4
    )
    real = mc.build_realization(config, 0)
    assert real.ref.bands[0].own_candidates.size > 0
    sel = assoc.best_carrier_bs(real.ref, assoc.REGIMES["licensed"], config)
    assert sel.carrier == BAND_73


def test_sinr_scalar_consistent_with_metrics(realization):
    config = realization.config
    for regime_name in ("licensed", "pooled"):
        regime = assoc.REGIMES[regime_name]
        metrics = assoc.candidate_metrics(realization.ref, BAND_28, regime, config)
        for row, g in enumerate(metrics.candidates[:5]):
            scalar = assoc.sinr(realization.ref, int(g), BAND_28, regime, config)
            assert scalar == pytest.approx(metrics.sinr[row], rel=1e-9)
