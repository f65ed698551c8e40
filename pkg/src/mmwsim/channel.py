"""Link-level channel generation: blockage state, pathloss, clusters.

Each BS-UE pair is classified once as LoS, NLoS or outage from distance-
dependent probabilities; the state is shared by both carriers of the link.
Long-term pathloss adds log-normal shadowing (drawn independently per
carrier) on top of a per-state power law.  Small-scale structure is a set
of scattering clusters, each with 1..10 sub-paths carrying normalized
power fractions, i.i.d. phases and Gaussian-spread angles around uniform
cluster centers.

The simulation evaluates a single narrowband snapshot: sub-path fading
reduces to sqrt(power)*exp(j*phase) with a uniform phase, which preserves
the narrowband distribution of the channel matrix without a mobility or
delay-spread model.

Batched variants (``*_batch``) generate many links with one vectorized
draw sequence; the scalar operations delegate to them with n = 1, so there
is a single sampling code path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from . import antenna
from .config import BandConfig, BlockageParams

# Links shorter than this are clamped before the pathloss power law; the
# log-distance fit is not meaningful at (and diverges towards) zero range.
MIN_LINK_DISTANCE_M = 1.0

OUTAGE_PATHLOSS_DB = math.inf

MAX_SUBPATHS_PER_CLUSTER = 10
SUBPATH_EXTRA_EXPONENT_MAX = 0.6  # V ~ U[0, 0.6] in the power-spread law
CLUSTER_ELEVATION_MAX_RAD = np.pi / 4  # cluster centers uniform in +/- 45 deg


class LinkState(IntEnum):
    LOS = 0
    NLOS = 1
    OUTAGE = 2


@dataclass(frozen=True)
class SubPath:
    """One micro-path of a scattering cluster."""

    power_fraction: float
    phase: float
    aoa_az: float
    aoa_el: float
    aod_az: float
    aod_el: float


@dataclass(frozen=True)
class Cluster:
    subpaths: tuple[SubPath, ...]


@dataclass(frozen=True)
class ClusterSet:
    """All clusters of one link at one carrier; power fractions sum to 1."""

    clusters: tuple[Cluster, ...]

    def subpath_arrays(self) -> dict[str, np.ndarray]:
        """Flat per-subpath arrays in (cluster, sub-path) order."""
        subs = [s for c in self.clusters for s in c.subpaths]
        return {
            "power": np.array([s.power_fraction for s in subs]),
            "phase": np.array([s.phase for s in subs]),
            "aoa_az": np.array([s.aoa_az for s in subs]),
            "aoa_el": np.array([s.aoa_el for s in subs]),
            "aod_az": np.array([s.aod_az for s in subs]),
            "aod_el": np.array([s.aod_el for s in subs]),
        }


# --- blockage state ---------------------------------------------------------


def state_probabilities(d, params: BlockageParams):
    """(p_out, p_los, p_nlos) at distance d (meters; scalar or array).

    p_out  = max(0, 1 - exp(-a_out*d + b_out))
    p_los  = (1 - p_out) * exp(-a_los*d)
    p_nlos = 1 - p_out - p_los   (exact complement by construction)
    """
    d = np.asarray(d, dtype=float)
    p_out = np.maximum(0.0, 1.0 - np.exp(-params.a_out * d + params.b_out))
    p_los = (1.0 - p_out) * np.exp(-params.a_los * d)
    p_nlos = 1.0 - p_out - p_los
    if d.ndim == 0:
        return float(p_out), float(p_los), float(p_nlos)
    return p_out, p_los, p_nlos


def draw_link_states_batch(
    d: np.ndarray, rng: np.random.Generator, params: BlockageParams
) -> np.ndarray:
    """Categorical state draw per link; one uniform per link, thresholds in
    (outage, LoS, NLoS) order.  Drawn once per BS-UE pair and reused for
    both carriers."""
    d = np.asarray(d, dtype=float)
    p_out, p_los, _ = state_probabilities(d, params)
    u = rng.random(d.shape)
    states = np.full(d.shape, LinkState.NLOS, dtype=np.int8)
    states[u < p_out + p_los] = LinkState.LOS
    states[u < p_out] = LinkState.OUTAGE
    return states


def draw_link_state(d: float, rng: np.random.Generator, params: BlockageParams) -> LinkState:
    """Single-link state draw (see draw_link_states_batch)."""
    return LinkState(int(draw_link_states_batch(np.asarray([d], dtype=float), rng, params)[0]))


# --- long-term pathloss -----------------------------------------------------


def _pathloss_tables(band: BandConfig) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    pl = band.pathloss
    alpha = np.array([pl.alpha_los, pl.alpha_nlos])
    beta = np.array([pl.beta_los, pl.beta_nlos])
    sigma = np.array([pl.sigma_los, pl.sigma_nlos])
    return alpha, beta, sigma


def pathloss_db_batch(
    d: np.ndarray, states: np.ndarray, band: BandConfig, rng: np.random.Generator
) -> np.ndarray:
    """Pathloss in dB for many links of one carrier; +inf where in outage.

    One shadowing normal is consumed per link regardless of state, so the
    draw sequence depends only on the link count.
    """
    d = np.maximum(np.asarray(d, dtype=float), MIN_LINK_DISTANCE_M)
    states = np.asarray(states)
    xi = rng.standard_normal(d.shape)
    out = np.full(d.shape, OUTAGE_PATHLOSS_DB)
    alpha, beta, sigma = _pathloss_tables(band)
    for state, row in ((LinkState.LOS, 0), (LinkState.NLOS, 1)):
        mask = states == state
        if np.any(mask):
            out[mask] = (
                alpha[row]
                + beta[row] * 10.0 * np.log10(d[mask])
                + sigma[row] * xi[mask]
            )
    return out


def pathloss_db(
    d: float, state: LinkState, band: BandConfig, rng: np.random.Generator
) -> float:
    """Single-link pathloss alpha + beta*10*log10(d) + N(0, sigma^2) in dB.

    Outage links have no finite pathloss; callers must use the infinite
    sentinel instead of calling this.
    """
    if state == LinkState.OUTAGE:
        raise ValueError("outage links have no finite pathloss; use the +inf sentinel")
    if d <= 0:
        raise ValueError("distance must be > 0")
    return float(pathloss_db_batch(np.asarray([d]), np.asarray([state]), band, rng)[0])


# --- cluster / sub-path sampling --------------------------------------------


@dataclass
class PathBatch:
    """Flat sub-path arrays for a batch of links, ordered link-major then
    (cluster, sub-path); powers are normalized to sum to 1 per link."""

    n_links: int
    link_of: np.ndarray  # (P,) link index per sub-path
    cluster_of: np.ndarray  # (P,) cluster index within the link
    subpath_of: np.ndarray  # (P,) sub-path index within the cluster
    power: np.ndarray  # (P,) normalized power fractions
    phase: np.ndarray  # (P,) radians
    aoa_az: np.ndarray
    aoa_el: np.ndarray
    aod_az: np.ndarray
    aod_el: np.ndarray

    @property
    def link_starts(self) -> np.ndarray:
        """Start offset of each link's contiguous sub-path segment."""
        counts = np.bincount(self.link_of, minlength=self.n_links)
        starts = np.zeros(self.n_links, dtype=np.int64)
        np.cumsum(counts[:-1], out=starts[1:])
        return starts

    def strongest_path_index(self) -> np.ndarray:
        """Flat index of each link's strongest sub-path; ties resolve to the
        lowest (cluster, sub-path) index via first occurrence."""
        starts = self.link_starts
        seg_max = np.maximum.reduceat(self.power, starts)
        is_max = self.power == seg_max[self.link_of]
        idx = np.where(is_max, np.arange(self.power.size), self.power.size)
        return np.minimum.reduceat(idx, starts)


def sample_cluster_batch(
    band: BandConfig, n_links: int, rng: np.random.Generator
) -> PathBatch:
    """Cluster/sub-path draw for ``n_links`` links of one carrier.

    Per link: K = max(1, Poisson(cluster_mean)) clusters; per cluster:
    L ~ UniformInt{1..10} sub-paths, U ~ U[0,1], Z ~ N(0, zeta^2) and
    uniform central angles (azimuths in [0, 2pi), elevations in +/- pi/4);
    per sub-path: V ~ U[0, 0.6], a uniform phase and Gaussian angle offsets
    around the cluster center.  Raw powers U^(r_tau-1)*10^(-0.1*Z+V)/L are
    normalized to unit sum per link.
    """
    k = np.maximum(1, rng.poisson(band.cluster_mean, size=n_links))
    n_clusters = int(k.sum())
    cluster_link = np.repeat(np.arange(n_links), k)

    length = rng.integers(1, MAX_SUBPATHS_PER_CLUSTER + 1, size=n_clusters)
    u = rng.random(n_clusters)
    z = rng.normal(0.0, band.zeta_db, size=n_clusters)
    c_aoa_az = rng.uniform(0.0, 2.0 * np.pi, size=n_clusters)
    c_aoa_el = rng.uniform(-CLUSTER_ELEVATION_MAX_RAD, CLUSTER_ELEVATION_MAX_RAD, size=n_clusters)
    c_aod_az = rng.uniform(0.0, 2.0 * np.pi, size=n_clusters)
    c_aod_el = rng.uniform(-CLUSTER_ELEVATION_MAX_RAD, CLUSTER_ELEVATION_MAX_RAD, size=n_clusters)

    n_paths = int(length.sum())
    path_cluster = np.repeat(np.arange(n_clusters), length)
    v = rng.uniform(0.0, SUBPATH_EXTRA_EXPONENT_MAX, size=n_paths)
    phase = rng.uniform(0.0, 2.0 * np.pi, size=n_paths)
    spread = math.radians(band.angle_spread_deg)
    offsets = rng.normal(0.0, spread, size=(4, n_paths)) if spread > 0 else np.zeros((4, n_paths))

    raw = u[path_cluster] ** (band.r_tau - 1.0) * 10.0 ** (-0.1 * z[path_cluster] + v)
    raw /= length[path_cluster]
    link_of = cluster_link[path_cluster]
    path_counts = np.bincount(link_of, minlength=n_links)
    link_starts = np.zeros(n_links, dtype=np.int64)
    np.cumsum(path_counts[:-1], out=link_starts[1:])
    totals = np.add.reduceat(raw, link_starts) if n_paths else np.zeros(n_links)
    power = raw / totals[link_of]

    cluster_starts = np.zeros(n_clusters, dtype=np.int64)
    np.cumsum(length[:-1], out=cluster_starts[1:])
    subpath_of = np.arange(n_paths) - cluster_starts[path_cluster]
    first_cluster = np.zeros(n_links, dtype=np.int64)
    np.cumsum(k[:-1], out=first_cluster[1:])
    cluster_of = path_cluster - first_cluster[link_of]

    return PathBatch(
        n_links=n_links,
        link_of=link_of,
        cluster_of=cluster_of,
        subpath_of=subpath_of,
        power=power,
        phase=phase,
        aoa_az=c_aoa_az[path_cluster] + offsets[0],
        aoa_el=c_aoa_el[path_cluster] + offsets[1],
        aod_az=c_aod_az[path_cluster] + offsets[2],
        aod_el=c_aod_el[path_cluster] + offsets[3],
    )


def sample_clusters(band: BandConfig, rng: np.random.Generator) -> ClusterSet:
    """Cluster set for a single link (delegates to the batch sampler)."""
    batch = sample_cluster_batch(band, 1, rng)
    return cluster_set_from_batch(batch, 0)


def cluster_set_from_batch(batch: PathBatch, link: int) -> ClusterSet:
    """Materialize one link of a PathBatch as a nested ClusterSet."""
    sel = np.flatnonzero(batch.link_of == link)
    clusters: list[Cluster] = []
    for cluster_idx in np.unique(batch.cluster_of[sel]):
        rows = sel[batch.cluster_of[sel] == cluster_idx]
        subs = tuple(
            SubPath(
                power_fraction=float(batch.power[i]),
                phase=float(batch.phase[i]),
                aoa_az=float(batch.aoa_az[i]),
                aoa_el=float(batch.aoa_el[i]),
                aod_az=float(batch.aod_az[i]),
                aod_el=float(batch.aod_el[i]),
            )
            for i in rows
        )
        clusters.append(Cluster(subpaths=subs))
    return ClusterSet(clusters=tuple(clusters))


# --- channel matrix ---------------------------------------------------------


def channel_matrix(clusters: ClusterSet, band: BandConfig) -> np.ndarray:
    """n_rx x n_tx narrowband channel matrix

        H = sum_paths sqrt(P)*exp(j*phase) * a_rx(aoa) a_tx(aod)^H

    built from unnormalized spatial signatures, so a conjugate-matched
    unit-norm beam pair on a single-path channel realizes the full
    n_tx*n_rx gain and E[||H||_F^2] = n_tx*n_rx.
    """
    rx_geom = antenna.UpaGeometry.from_element_count(band.n_rx)
    tx_geom = antenna.UpaGeometry.from_element_count(band.n_tx)
    arrays = clusters.subpath_arrays()
    g = np.sqrt(arrays["power"]) * np.exp(1j * arrays["phase"])
    a_rx = antenna.spatial_signature(rx_geom, arrays["aoa_az"], arrays["aoa_el"])  # (n_rx, P)
    a_tx = antenna.spatial_signature(tx_geom, arrays["aod_az"], arrays["aod_el"])  # (n_tx, P)
    return (a_rx * g) @ a_tx.conj().T
