"""Tests for scenario generation: channels, activation pattern, impairments, noise."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from ristensor.exceptions import IdentifiabilityError
from ristensor.scenario import (
    ChannelSet,
    ImpairmentConfig,
    ScenarioConfig,
    build_received,
    gen_activation,
    gen_channels,
    gen_impairments,
    generate_scenario,
)


def small_cfg(**overrides):
    base = dict(
        tx_antennas=4, rx_antennas=4, ris_elements=8, blocks_per_frame=8,
        frames=5, snr_db=np.inf, seed=0,
    )
    base.update(overrides)
    return ScenarioConfig(**base)


# ---------------------------------------------------------------------------
# configs
# ---------------------------------------------------------------------------


def test_config_rejects_k_below_n():
    with pytest.raises(IdentifiabilityError, match="K >= N"):
        small_cfg(blocks_per_frame=4, ris_elements=8)


def test_config_rejects_nonpositive_dims():
    with pytest.raises(ValueError):
        small_cfg(frames=0)


def test_impairment_config_validation():
    with pytest.raises(ValueError):
        ImpairmentConfig(probability=1.5)
    with pytest.raises(ValueError):
        ImpairmentConfig(mode="bogus")


@pytest.mark.parametrize(
    "n,rb,expected", [(8, 0.5, 4), (5, 0.5, 3), (8, 0.0, 0), (8, 1.0, 8), (10, 0.25, 3)]
)
def test_num_impaired_round_half_up(n, rb, expected):
    assert ImpairmentConfig(probability=rb).num_impaired(n) == expected


# ---------------------------------------------------------------------------
# gen_channels
# ---------------------------------------------------------------------------


def test_gen_channels_moments():
    cfg = small_cfg(tx_antennas=400, rx_antennas=1, ris_elements=250,
                    blocks_per_frame=250)
    ch = gen_channels(cfg, np.random.default_rng(7))
    h = ch.tx_ris  # 1e5 draws
    assert h.shape == (400, 250)
    assert np.mean(np.abs(h) ** 2) == pytest.approx(1.0, abs=0.02)
    assert np.var(h.real) == pytest.approx(0.5, abs=0.02)
    assert np.var(h.imag) == pytest.approx(0.5, abs=0.02)


def test_gen_channels_deterministic():
    cfg = small_cfg(seed=3)
    a = gen_channels(cfg, np.random.default_rng(3))
    b = gen_channels(cfg, np.random.default_rng(3))
    assert np.array_equal(a.tx_ris, b.tx_ris)
    assert np.array_equal(a.ris_rx, b.ris_rx)


# ---------------------------------------------------------------------------
# gen_activation
# ---------------------------------------------------------------------------


def test_activation_two_point_dft():
    cfg = small_cfg(ris_elements=2, blocks_per_frame=2)
    assert_allclose(gen_activation(cfg), [[1, 1], [1, -1]], atol=1e-14)


def test_activation_column_orthogonality():
    cfg = small_cfg(ris_elements=2, blocks_per_frame=4)
    s = gen_activation(cfg)
    assert_allclose(s.conj().T @ s, 4 * np.eye(2), atol=1e-12)


def test_activation_unit_modulus_and_gram():
    cfg = small_cfg(ris_elements=8, blocks_per_frame=16)
    s = gen_activation(cfg)
    assert_allclose(np.abs(s), np.ones_like(np.abs(s)), atol=1e-12)
    assert_allclose(s.conj().T @ s, 16 * np.eye(8), atol=1e-10)


# ---------------------------------------------------------------------------
# gen_impairments
# ---------------------------------------------------------------------------


def test_impairments_zero_probability_all_ones():
    cfg = small_cfg()
    e = gen_impairments(cfg, ImpairmentConfig(probability=0.0),
                        np.random.default_rng(0))
    assert np.array_equal(e, np.ones((5, 8)))


def test_impairments_full_blockage_all_zeros():
    cfg = small_cfg()
    e = gen_impairments(
        cfg, ImpairmentConfig(probability=1.0, mode="blockage-only"),
        np.random.default_rng(0),
    )
    assert np.array_equal(e, np.zeros((5, 8)))


def test_impairments_counts_per_row():
    cfg = small_cfg()
    e = gen_impairments(
        cfg, ImpairmentConfig(probability=0.5, mode="full"),
        np.random.default_rng(5),
    )
    for row in e:
        assert np.sum(row == 1.0) == 4
        assert np.sum(np.abs(row) < 1.0) == 4  # almost surely for U[0,1] draws


def test_impairments_magnitude_bound():
    cfg = small_cfg()
    for mode in ("full", "blockage-only", "phase-only", "ideal"):
        e = gen_impairments(
            cfg, ImpairmentConfig(probability=0.7, mode=mode),
            np.random.default_rng(9),
        )
        assert np.all(np.abs(e) <= 1.0 + 1e-12)


def test_impairments_phase_only_unit_magnitude():
    cfg = small_cfg()
    e = gen_impairments(
        cfg, ImpairmentConfig(probability=0.5, mode="phase-only"),
        np.random.default_rng(2),
    )
    assert_allclose(np.abs(e), np.ones_like(np.abs(e)), atol=1e-12)


def test_impairments_fixed_subset_when_not_redrawn():
    cfg = small_cfg(frames=6)
    e = gen_impairments(
        cfg, ImpairmentConfig(probability=0.5, mode="full", redraw_per_frame=False),
        np.random.default_rng(11),
    )
    masks = e != 1.0
    for p in range(1, 6):
        assert np.array_equal(masks[p], masks[0])
    # values still vary frame to frame
    assert not np.array_equal(e[0][masks[0]], e[1][masks[1]])


def test_impairments_redrawn_subset_varies():
    cfg = small_cfg(frames=8, ris_elements=16, blocks_per_frame=16)
    e = gen_impairments(
        cfg, ImpairmentConfig(probability=0.5, mode="blockage-only"),
        np.random.default_rng(13),
    )
    masks = e == 0.0
    assert any(not np.array_equal(masks[p], masks[0]) for p in range(1, 8))


# ---------------------------------------------------------------------------
# build_received
# ---------------------------------------------------------------------------


def test_received_noiseless_matches_quadruple_sum():
    cfg = small_cfg(tx_antennas=3, rx_antennas=2, ris_elements=2,
                    blocks_per_frame=3, frames=2, seed=21)
    scen = generate_scenario(cfg, ImpairmentConfig(probability=0.5))
    g, h = scen.channels.ris_rx, scen.channels.tx_ris
    s, e = scen.pattern, scen.impairments
    for l in range(2):
        for m in range(3):
            for k in range(3):
                for p in range(2):
                    expected = np.sum(g[l] * h[m] * s[k] * e[p])
                    assert abs(scen.received[l, m, k, p] - expected) <= 1e-12 * abs(
                        expected
                    ) + 1e-14


def test_received_all_ones_factors():
    cfg = small_cfg(tx_antennas=2, rx_antennas=2, ris_elements=1,
                    blocks_per_frame=2, frames=2)
    ch = ChannelSet(tx_ris=np.ones((2, 1), complex), ris_rx=np.ones((2, 1), complex))
    y = build_received(cfg, ch, np.ones((2, 1), complex), np.ones((2, 1), complex),
                       np.random.default_rng(0))
    assert_allclose(y, np.ones((2, 2, 2, 2)))


def test_received_noise_power_ratio():
    ratios = []
    for seed in range(100):
        cfg = small_cfg(snr_db=0.0, seed=seed)
        imp = ImpairmentConfig(probability=0.5)
        noisy = generate_scenario(cfg, imp).received
        clean = generate_scenario(
            small_cfg(snr_db=np.inf, seed=seed), imp
        ).received
        ratios.append(
            np.linalg.norm(noisy - clean) ** 2 / np.linalg.norm(clean) ** 2
        )
    assert np.mean(ratios) == pytest.approx(1.0, abs=0.05)


def test_received_slice_formula():
    cfg = small_cfg(tx_antennas=3, rx_antennas=4, ris_elements=2,
                    blocks_per_frame=5, frames=3, seed=31)
    scen = generate_scenario(cfg, ImpairmentConfig(probability=0.5))
    g, h = scen.channels.ris_rx, scen.channels.tx_ris
    for k in range(5):
        for p in range(3):
            slice_ = g @ np.diag(scen.impairments[p]) @ np.diag(scen.pattern[k]) @ h.T
            assert_allclose(scen.received[:, :, k, p], slice_, rtol=1e-12, atol=1e-13)


def test_received_dimension_mismatch():
    cfg = small_cfg()
    ch = ChannelSet(tx_ris=np.ones((4, 8), complex), ris_rx=np.ones((3, 8), complex))
    with pytest.raises(ValueError, match="ris_rx"):
        build_received(cfg, ch, gen_activation(cfg), np.ones((5, 8), complex),
                       np.random.default_rng(0))


def test_scenario_deterministic_bits():
    cfg = small_cfg(snr_db=10.0, seed=77)
    imp = ImpairmentConfig(probability=0.5)
    a = generate_scenario(cfg, imp)
    b = generate_scenario(cfg, imp)
    assert np.array_equal(a.received, b.received)
    assert np.array_equal(a.impairments, b.impairments)
