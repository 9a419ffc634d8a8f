"""Synthetic scenario generation for a RIS-assisted MIMO pilot phase.

One Monte Carlo realization consists of i.i.d. Rayleigh channels on both
hops, a truncated-DFT RIS activation schedule, a per-frame complex
imperfection matrix, and the noisy order-4 received-signal tensor
(rx antenna x tx antenna x block x frame). The pilot matrix is the identity,
so the symbol-period axis coincides with the tx-antenna axis and never
materializes separately.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import IdentifiabilityError
from .tensor_ops import parafac_tensor

__all__ = [
    "ScenarioConfig",
    "ImpairmentConfig",
    "ChannelSet",
    "Scenario",
    "IMPAIRMENT_MODES",
    "gen_channels",
    "gen_activation",
    "gen_impairments",
    "build_received",
    "generate_scenario",
]

IMPAIRMENT_MODES = ("full", "blockage-only", "phase-only", "ideal")


@dataclass(frozen=True)
class ScenarioConfig:
    """Dimensions and noise level of one link realization.

    tx_antennas/rx_antennas are the array sizes (M and L in the output
    tables), ris_elements the number of reflecting elements (N),
    blocks_per_frame the number of activation blocks (K, must be >= N for
    the pattern to be invertible) and frames the number of collected
    frames (P). ``snr_db = inf`` disables noise.
    """

    tx_antennas: int
    rx_antennas: int
    ris_elements: int
    blocks_per_frame: int
    frames: int
    snr_db: float = math.inf
    seed: int = 0

    def __post_init__(self):
        for name in ("tx_antennas", "rx_antennas", "ris_elements",
                     "blocks_per_frame", "frames"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.blocks_per_frame < self.ris_elements:
            raise IdentifiabilityError(
                f"blocks_per_frame K={self.blocks_per_frame} < ris_elements "
                f"N={self.ris_elements}; the activation pattern is invertible "
                "only when K >= N"
            )


@dataclass(frozen=True)
class ImpairmentConfig:
    """Statistics of the per-frame RIS element imperfections.

    ``probability`` is the fraction of elements impaired per frame;
    exactly round(N * probability) elements are hit. ``mode`` selects the
    perturbation: "full" draws amplitude U[0,1] and phase U[0,2pi],
    "blockage-only" zeroes the element, "phase-only" keeps unit amplitude
    with a random phase, "ideal" leaves every element untouched. When
    ``redraw_per_frame`` is false the impaired subset is fixed across
    frames (the drawn values still change frame to frame).
    """

    probability: float = 0.0
    mode: str = "full"
    redraw_per_frame: bool = True

    def __post_init__(self):
        if not 0.0 <= self.probability <= 1.0:
            raise ValueError("probability must lie in [0, 1]")
        if self.mode not in IMPAIRMENT_MODES:
            raise ValueError(f"mode must be one of {IMPAIRMENT_MODES}")

    def num_impaired(self, ris_elements: int) -> int:
        # round-half-up so probability 0.5 with N=5 impairs 3 elements
        return int(math.floor(ris_elements * self.probability + 0.5))


@dataclass(frozen=True)
class ChannelSet:
    """True factor matrices of one realization: tx-RIS (M x N), RIS-rx (L x N)."""

    tx_ris: np.ndarray
    ris_rx: np.ndarray


@dataclass(frozen=True)
class Scenario:
    """One full Monte Carlo realization plus its ground truth."""

    config: ScenarioConfig
    impairment: ImpairmentConfig
    channels: ChannelSet
    pattern: np.ndarray = field(repr=False)
    impairments: np.ndarray = field(repr=False)
    received: np.ndarray = field(repr=False)


def _crandn(rng, *shape) -> np.ndarray:
    """Circularly-symmetric complex Gaussian, zero mean, unit variance."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def gen_channels(cfg: ScenarioConfig, rng: np.random.Generator) -> ChannelSet:
    """Draw both hops as i.i.d. Rayleigh (unit-variance complex Gaussian)."""
    tx_ris = _crandn(rng, cfg.tx_antennas, cfg.ris_elements)
    ris_rx = _crandn(rng, cfg.rx_antennas, cfg.ris_elements)
    return ChannelSet(tx_ris=tx_ris, ris_rx=ris_rx)


def gen_activation(cfg: ScenarioConfig) -> np.ndarray:
    """Truncated-DFT activation schedule: first N columns of the K-point DFT.

    Unit-modulus entries with pattern^H pattern == K * I, so the
    pseudo-inverse used by the matched filter is conj(pattern) / K.
    """
    k = cfg.blocks_per_frame
    n = cfg.ris_elements
    if k < n:
        raise IdentifiabilityError(
            f"K={k} < N={n}: the DFT pattern needs K >= N for orthogonal columns"
        )
    grid = np.arange(k)[:, None] * np.arange(n)[None, :]
    return np.exp(-2j * np.pi * grid / k)


def gen_impairments(
    cfg: ScenarioConfig,
    imp: ImpairmentConfig,
    rng: np.random.Generator,
) -> np.ndarray:
    """Per-frame element perturbation matrix (frames x elements).

    Non-impaired entries are exactly 1; impaired entries have magnitude
    in [0, 1] according to the configured mode.
    """
    n = cfg.ris_elements
    e = np.ones((cfg.frames, n), dtype=complex)
    if imp.mode == "ideal":
        return e
    n_imp = imp.num_impaired(n)
    if n_imp == 0:
        return e
    subset = None
    for p in range(cfg.frames):
        if subset is None or imp.redraw_per_frame:
            subset = rng.choice(n, size=n_imp, replace=False)
        if imp.mode == "blockage-only":
            e[p, subset] = 0.0
            continue
        theta = rng.uniform(0.0, 2.0 * np.pi, size=n_imp)
        if imp.mode == "phase-only":
            e[p, subset] = np.exp(1j * theta)
        else:  # full
            alpha = rng.uniform(0.0, 1.0, size=n_imp)
            e[p, subset] = alpha * np.exp(1j * theta)
    return e


def build_received(
    cfg: ScenarioConfig,
    channels: ChannelSet,
    pattern: np.ndarray,
    impairments: np.ndarray,
    rng: np.random.Generator,
) -> np.ndarray:
    """Noisy received tensor of shape (L, M, K, P).

    The noiseless part is the CP tensor with factors (ris_rx, tx_ris,
    pattern, impairments); its (k, p) frontal slice is
    ``ris_rx @ diag(impairments[p] * pattern[k]) @ tx_ris.T``. Noise is
    i.i.d. complex Gaussian scaled per realization so that the expected
    noise energy over the whole tensor is ``10**(-snr_db/10)`` times the
    noiseless energy.
    """
    l, m = cfg.rx_antennas, cfg.tx_antennas
    k, p = cfg.blocks_per_frame, cfg.frames
    if channels.ris_rx.shape != (l, cfg.ris_elements):
        raise ValueError(f"ris_rx channel must have shape {(l, cfg.ris_elements)}")
    if channels.tx_ris.shape != (m, cfg.ris_elements):
        raise ValueError(f"tx_ris channel must have shape {(m, cfg.ris_elements)}")
    if pattern.shape != (k, cfg.ris_elements):
        raise ValueError(f"pattern must have shape {(k, cfg.ris_elements)}")
    if impairments.shape != (p, cfg.ris_elements):
        raise ValueError(f"impairments must have shape {(p, cfg.ris_elements)}")

    noiseless = parafac_tensor(
        [channels.ris_rx, channels.tx_ris, pattern, impairments]
    )
    if math.isinf(cfg.snr_db):
        return noiseless
    signal_energy = np.linalg.norm(noiseless) ** 2
    noise_var = signal_energy * 10.0 ** (-cfg.snr_db / 10.0) / noiseless.size
    noise = np.sqrt(noise_var) * _crandn(rng, *noiseless.shape)
    return noiseless + noise


def generate_scenario(cfg: ScenarioConfig, imp: ImpairmentConfig) -> Scenario:
    """Generate one seeded realization (channels, pattern, impairments, tensor).

    The random stream is consumed in a fixed order (channels, impairments,
    noise) so identical configs produce bit-identical scenarios.
    """
    rng = np.random.default_rng(cfg.seed)
    channels = gen_channels(cfg, rng)
    pattern = gen_activation(cfg)
    impairments = gen_impairments(cfg, imp, rng)
    received = build_received(cfg, channels, pattern, impairments, rng)
    return Scenario(
        config=cfg,
        impairment=imp,
        channels=channels,
        pattern=pattern,
        impairments=impairments,
        received=received,
    )
