"""Two-phase user association, spectrum regimes, SINR and rate evaluation.

Phase 1 attaches every background UE to the same-operator BS with the
minimum pathloss (28 GHz realization by default; switchable), then assigns
it one carrier at random (28 GHz with probability ``p28``).  Phase 2
exhaustively evaluates the reference UE's throughput over every
own-operator BS and both carriers under the active licensing regime and
picks the argmax.

Regime semantics: an ``exclusive`` band gives each operator an orthogonal
1/M slice of the band and only same-operator interference; a ``pooled``
band gives every operator the whole band and interference from all
operators' BSs.

Beam model: the serving link uses a conjugate-matched beam pair pointed at
its strongest sub-path.  Every other BS transmits with a beam steered at
one uniformly chosen UE it serves on that carrier (a random direction if
it serves none), and its gain into the reference UE goes through the full
interferer-to-reference channel matrix with the reference receive beam
held on the candidate serving BS.  The reference UE itself never
contributes interference (downlink only).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import antenna, channel
from .channel import LinkState, PathBatch
from .config import BAND_28, BAND_73, BandConfig, LICENSING_EXCLUSIVE, LICENSING_POOLED, ScenarioConfig
from .deployment import Deployment

ASSOCIATION_RULES = (BAND_28, BAND_73, "min")


# --- regimes -----------------------------------------------------------------


@dataclass(frozen=True)
class RegimeSpec:
    """Licensing mode per band plus the per-operator bandwidth it implies."""

    name: str
    band_modes: tuple[tuple[str, str], ...]  # ((band name, mode), ...)

    def mode(self, band_name: str) -> str:
        for name, mode in self.band_modes:
            if name == band_name:
                return mode
        raise KeyError(band_name)

    def bandwidth_hz(self, band: BandConfig, num_operators: int) -> float:
        """Exclusive: an orthogonal 1/M slice; pooled: the entire band."""
        if self.mode(band.name) == LICENSING_EXCLUSIVE:
            return band.total_bandwidth / num_operators
        return band.total_bandwidth


REGIMES = {
    "hybrid": RegimeSpec(
        "hybrid", ((BAND_28, LICENSING_EXCLUSIVE), (BAND_73, LICENSING_POOLED))
    ),
    "licensed": RegimeSpec(
        "licensed", ((BAND_28, LICENSING_EXCLUSIVE), (BAND_73, LICENSING_EXCLUSIVE))
    ),
    "pooled": RegimeSpec(
        "pooled", ((BAND_28, LICENSING_POOLED), (BAND_73, LICENSING_POOLED))
    ),
}

REGIME_NAMES = ("hybrid", "licensed", "pooled")


def regime_from_name(name: str) -> RegimeSpec:
    try:
        return REGIMES[name]
    except KeyError:
        raise ValueError(f"unknown regime {name!r}; expected one of {REGIME_NAMES}") from None


def regime_from_config(config: ScenarioConfig) -> RegimeSpec:
    """The scenario's native per-band licensing assignment."""
    return RegimeSpec("config", tuple((b.name, b.licensing) for b in config.bands))


# --- phase 1: background association -----------------------------------------


@dataclass
class BackgroundLinks:
    """Same-operator BS-UE link budgets used by phase-1 association.

    Per operator: an (I_m, J_m) state matrix (shared by both carriers) and
    one (I_m, J_m) pathloss matrix per carrier required by the association
    rule (+inf where in outage).
    """

    states: list[np.ndarray]
    pathloss_db: list[dict[str, np.ndarray]]


def build_background_links(
    deployment: Deployment,
    config: ScenarioConfig,
    rng: np.random.Generator,
    rule: str = BAND_28,
) -> BackgroundLinks:
    """Draw states and per-carrier pathloss for all same-operator pairs.

    Draw order (fixed): per operator, states first, then pathloss per
    needed carrier in config band order.
    """
    if rule not in ASSOCIATION_RULES:
        raise ValueError(f"unknown association rule {rule!r}; expected one of {ASSOCIATION_RULES}")
    needed = [b for b in config.bands if rule == "min" or b.name == rule]
    states_all: list[np.ndarray] = []
    pl_all: list[dict[str, np.ndarray]] = []
    for m in range(deployment.num_operators):
        bs = deployment.bs[m]
        ue = deployment.ue[m]
        d = np.hypot(bs[:, 0:1] - ue[None, :, 0], bs[:, 1:2] - ue[None, :, 1])
        states = channel.draw_link_states_batch(d, rng, config.blockage)
        pl = {
            band.name: channel.pathloss_db_batch(d, states, band, rng) for band in needed
        }
        states_all.append(states)
        pl_all.append(pl)
    return BackgroundLinks(states=states_all, pathloss_db=pl_all)


@dataclass
class AssociationTable:
    """Serving BS and carrier per background UE plus per-(BS, carrier) load.

    ``serving_bs[m][j]`` is -1 while UE j of operator m is unassociated
    (in outage to every own-operator BS); ``carrier[m][j]`` is -1 until the
    random band split has run.  ``load[m]`` has shape (I_m, 2), one column
    per carrier in config band order.
    """

    serving_bs: list[np.ndarray]
    carrier: list[np.ndarray]
    load: list[np.ndarray]

    def associated_count(self) -> int:
        return int(sum((sb >= 0).sum() for sb in self.serving_bs))

    def total_load(self) -> int:
        return int(sum(l.sum() for l in self.load))


def min_pathloss_association(links: BackgroundLinks, rule: str = BAND_28) -> AssociationTable:
    """Attach each UE to the same-operator BS with minimum pathloss.

    The comparison uses the 28 GHz pathloss realization by default
    (``rule`` may select the 73 GHz one or the per-link minimum over both).
    Ties resolve to the lowest BS index; UEs in outage to every
    own-operator BS stay unassociated and never enter the load counts.
    """
    if rule not in ASSOCIATION_RULES:
        raise ValueError(f"unknown association rule {rule!r}; expected one of {ASSOCIATION_RULES}")
    serving: list[np.ndarray] = []
    carrier: list[np.ndarray] = []
    load: list[np.ndarray] = []
    for m in range(len(links.states)):
        pl_by_band = links.pathloss_db[m]
        if rule == "min":
            key = np.minimum.reduce(list(pl_by_band.values()))
        else:
            key = pl_by_band[rule]
        n_bs, n_ue = key.shape
        if n_bs == 0:
            best = np.full(n_ue, -1, dtype=np.int64)
        else:
            best = np.argmin(key, axis=0).astype(np.int64)
            best[~np.isfinite(key.min(axis=0))] = -1
        serving.append(best)
        carrier.append(np.full(n_ue, -1, dtype=np.int64))
        load.append(np.zeros((n_bs, 2), dtype=np.int64))
    return AssociationTable(serving_bs=serving, carrier=carrier, load=load)


def random_band_assignment(
    table: AssociationTable, p28: float, rng: np.random.Generator
) -> AssociationTable:
    """Assign each associated UE the 28 GHz carrier with probability ``p28``
    (else 73 GHz) and rebuild the load counters.

    One uniform is consumed per UE (associated or not) so the draw
    sequence depends only on the UE counts.
    """
    serving = [sb.copy() for sb in table.serving_bs]
    carriers: list[np.ndarray] = []
    loads: list[np.ndarray] = []
    for m, sb in enumerate(serving):
        u = rng.random(sb.shape[0])
        c = np.where(u < p28, 0, 1).astype(np.int64)
        c[sb < 0] = -1
        load = np.zeros_like(table.load[m])
        ok = sb >= 0
        np.add.at(load, (sb[ok], c[ok]), 1)
        carriers.append(c)
        loads.append(load)
    return AssociationTable(serving_bs=serving, carrier=carriers, load=loads)


# --- phase 2: reference-UE link set ------------------------------------------


@dataclass
class BandLinks:
    """Everything needed to evaluate SINR at one carrier: per-BS pathloss,
    received power, serving-aligned gains/beams, interferer beams folded
    into per-link effective vectors, and background load."""

    band: BandConfig
    tx_geometry: antenna.UpaGeometry
    rx_geometry: antenna.UpaGeometry
    pathloss_db: np.ndarray  # (n_bs,), +inf at outage
    rx_power_mw: np.ndarray  # (n_bs,), tx power / pathloss; exactly 0 at outage
    serving_gain: np.ndarray  # (n_bs,), |w_rx^T H w_tx|^2 with matched beams
    rx_beams: np.ndarray  # (n_bs, n_rx), aligned receive beams (zero rows at outage)
    interference_vec: np.ndarray  # (n_bs, n_rx), H_k w_tx_k per interferer k
    load: np.ndarray  # (n_bs,), background UEs on this carrier
    live: np.ndarray  # global indices of non-outage links
    own_candidates: np.ndarray  # global indices of live own-operator BSs
    own_gain: np.ndarray  # (n_cand, n_bs) interferer gain into each candidate's beam
    paths: PathBatch  # sub-paths of live links (live-local link indices)
    aligned_aoa_az: np.ndarray
    aligned_aoa_el: np.ndarray
    aligned_aod_az: np.ndarray
    aligned_aod_el: np.ndarray
    interferer_az: np.ndarray  # (n_bs,) transmit-beam direction of each BS
    interferer_el: np.ndarray


@dataclass
class ReferenceLinkSet:
    """Links from every BS (all operators) to the reference UE."""

    reference_operator: int
    num_operators: int
    operator_of: np.ndarray  # (n_bs,)
    local_of: np.ndarray  # (n_bs,) BS index within its operator
    distance_m: np.ndarray  # (n_bs,)
    state: np.ndarray  # (n_bs,) shared by both carriers
    bands: tuple[BandLinks, ...]

    @property
    def n_bs(self) -> int:
        return self.operator_of.shape[0]

    def band_index(self, name: str) -> int:
        for i, b in enumerate(self.bands):
            if b.band.name == name:
                return i
        raise KeyError(name)

    def band(self, name: str) -> BandLinks:
        return self.bands[self.band_index(name)]


def _interferer_directions(
    deployment: Deployment,
    table: AssociationTable,
    band_idx: int,
    coords: np.ndarray,
    operator_of: np.ndarray,
    local_of: np.ndarray,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray]:
    """Transmit-beam direction per BS: the geometric azimuth towards one
    uniformly chosen UE it serves on this carrier (elevation 0; the layout
    is planar), or a random direction if it serves none.

    Consumes one choice uniform plus one random (az, el) pair per BS.
    """
    n_bs = coords.shape[0]
    u_choice = rng.random(n_bs)
    az_rand = rng.uniform(0.0, 2.0 * np.pi, n_bs)
    el_rand = rng.uniform(
        -channel.CLUSTER_ELEVATION_MAX_RAD, channel.CLUSTER_ELEVATION_MAX_RAD, n_bs
    )
    az = az_rand.copy()
    el = el_rand.copy()
    for m in range(deployment.num_operators):
        sb = table.serving_bs[m]
        served = (sb >= 0) & (table.carrier[m] == band_idx)
        ue_idx = np.flatnonzero(served)
        if ue_idx.size == 0:
            continue
        order = ue_idx[np.argsort(sb[ue_idx], kind="stable")]
        counts = np.bincount(sb[ue_idx], minlength=table.load[m].shape[0])
        starts = np.zeros_like(counts)
        np.cumsum(counts[:-1], out=starts[1:])
        rows = np.flatnonzero(operator_of == m)
        local = local_of[rows]
        has = counts[local] > 0
        g = rows[has]
        li = local[has]
        picks = order[starts[li] + (u_choice[g] * counts[li]).astype(np.int64)]
        ue_xy = deployment.ue[m][picks]
        az[g] = np.arctan2(ue_xy[:, 1] - coords[g, 1], ue_xy[:, 0] - coords[g, 0])
        el[g] = 0.0
    return az, el


def build_reference_links(
    deployment: Deployment,
    config: ScenarioConfig,
    table: AssociationTable,
    rng: np.random.Generator,
) -> ReferenceLinkSet:
    """Generate states, pathloss, clusters, beams and gain precomputations
    for every BS-to-reference-UE link.

    Draw order (fixed): one state draw for all links, then per carrier in
    config band order: pathloss, cluster batch (non-outage links only),
    interferer-beam choices.
    """
    coords, operator_of, local_of = deployment.bs_stacked()
    ref = deployment.reference_ue
    dist = np.hypot(coords[:, 0] - ref.x, coords[:, 1] - ref.y)
    n_bs = coords.shape[0]
    states = channel.draw_link_states_batch(dist, rng, config.blockage)
    own_mask = operator_of == deployment.reference_operator

    band_links: list[BandLinks] = []
    for band_idx, band in enumerate(config.bands):
        rx_geom = antenna.UpaGeometry.from_element_count(band.n_rx)
        tx_geom = antenna.UpaGeometry.from_element_count(band.n_tx)
        sqrt_n = math.sqrt(rx_geom.n * tx_geom.n)

        pl = channel.pathloss_db_batch(dist, states, band, rng)
        live = np.flatnonzero(states != LinkState.OUTAGE)
        batch = channel.sample_cluster_batch(band, live.size, rng)
        az_int, el_int = _interferer_directions(
            deployment, table, band_idx, coords, operator_of, local_of, rng
        )

        aligned_aoa_az = np.full(n_bs, np.nan)
        aligned_aoa_el = np.full(n_bs, np.nan)
        aligned_aod_az = np.full(n_bs, np.nan)
        aligned_aod_el = np.full(n_bs, np.nan)
        serving_gain = np.zeros(n_bs)
        rx_beams = np.zeros((n_bs, rx_geom.n), dtype=complex)
        v_interf = np.zeros((n_bs, rx_geom.n), dtype=complex)

        if live.size:
            strongest = batch.strongest_path_index()
            aligned_aoa_az[live] = batch.aoa_az[strongest]
            aligned_aoa_el[live] = batch.aoa_el[strongest]
            aligned_aod_az[live] = batch.aod_az[strongest]
            aligned_aod_el[live] = batch.aod_el[strongest]

            g = np.sqrt(batch.power) * np.exp(1j * batch.phase)
            link_glob = live[batch.link_of]
            # matched-beam amplitude: w_rx^T a_rx(p) * a_tx(p)^H w_tx, closed form
            inner_rx = antenna.signature_inner(
                rx_geom,
                aligned_aoa_az[link_glob],
                aligned_aoa_el[link_glob],
                batch.aoa_az,
                batch.aoa_el,
            )
            inner_tx = antenna.signature_inner(
                tx_geom,
                batch.aod_az,
                batch.aod_el,
                aligned_aod_az[link_glob],
                aligned_aod_el[link_glob],
            )
            amp = np.add.reduceat(g * inner_rx * inner_tx, batch.link_starts) / sqrt_n
            serving_gain[live] = np.abs(amp) ** 2

            rx_beams[live] = (
                np.conj(
                    antenna.spatial_signature(rx_geom, aligned_aoa_az[live], aligned_aoa_el[live])
                ).T
                / math.sqrt(rx_geom.n)
            )

            # interferer beam folded into per-link vectors: v_k = H_k w_tx_k
            beta = antenna.signature_inner(
                tx_geom, batch.aod_az, batch.aod_el, az_int[link_glob], el_int[link_glob]
            ) / math.sqrt(tx_geom.n)
            a_rx = antenna.spatial_signature(rx_geom, batch.aoa_az, batch.aoa_el)
            contrib = (a_rx * (g * beta)).T  # (P, n_rx)
            v_interf[live] = np.add.reduceat(contrib, batch.link_starts, axis=0)

        own_candidates = live[own_mask[live]] if live.size else np.zeros(0, dtype=np.int64)
        own_gain = (
            np.abs(rx_beams[own_candidates] @ v_interf.T) ** 2
            if own_candidates.size
            else np.zeros((0, n_bs))
        )

        load = np.zeros(n_bs, dtype=np.int64)
        for m in range(deployment.num_operators):
            rows = np.flatnonzero(operator_of == m)
            if rows.size:
                load[rows] = table.load[m][local_of[rows], band_idx]

        band_links.append(
            BandLinks(
                band=band,
                tx_geometry=tx_geom,
                rx_geometry=rx_geom,
                pathloss_db=pl,
                rx_power_mw=10.0 ** ((band.tx_power_dbm - pl) / 10.0),
                serving_gain=serving_gain,
                rx_beams=rx_beams,
                interference_vec=v_interf,
                load=load,
                live=live,
                own_candidates=own_candidates,
                own_gain=own_gain,
                paths=batch,
                aligned_aoa_az=aligned_aoa_az,
                aligned_aoa_el=aligned_aoa_el,
                aligned_aod_az=aligned_aod_az,
                aligned_aod_el=aligned_aod_el,
                interferer_az=az_int,
                interferer_el=el_int,
            )
        )

    return ReferenceLinkSet(
        reference_operator=deployment.reference_operator,
        num_operators=deployment.num_operators,
        operator_of=operator_of,
        local_of=local_of,
        distance_m=dist,
        state=states,
        bands=tuple(band_links),
    )


# --- SINR, throughput, selection ---------------------------------------------


def noise_power_mw(config: ScenarioConfig, bandwidth_hz: float) -> float:
    """Thermal noise (incl. receiver noise figure) over a bandwidth, mW."""
    return 10.0 ** ((config.noise_psd_dbm_hz + config.noise_figure_db) / 10.0) * bandwidth_hz


def sinr_linear(
    signal_power_mw: float, interference_mw: float, noise_mw: float
) -> float:
    """Plain link-budget ratio; the building block of the SINR evaluation."""
    return signal_power_mw / (interference_mw + noise_mw)


def interferer_set(
    regime: RegimeSpec, band_name: str, serving_operator: int, serving_bs: int, ref: ReferenceLinkSet
) -> np.ndarray:
    """Global indices of interfering BSs for a serving (operator, BS) pair:
    same-operator BSs on an exclusive band, all operators' BSs on a pooled
    band, always excluding the serving BS.  Outage members stay in the set
    but contribute exactly zero power."""
    idx = np.arange(ref.n_bs)
    if regime.mode(band_name) == LICENSING_EXCLUSIVE:
        mask = ref.operator_of == serving_operator
    else:
        mask = np.ones(ref.n_bs, dtype=bool)
    mask[serving_bs] = False
    return idx[mask]


def sinr(
    ref: ReferenceLinkSet,
    serving_bs: int,
    band_name: str,
    regime: RegimeSpec,
    config: ScenarioConfig,
) -> float:
    """Instantaneous SINR of the reference UE served by ``serving_bs`` on one
    carrier: matched-beam received power over misaligned-beam interference
    from the regime's interferer set plus bandwidth-scaled noise."""
    links = ref.band(band_name)
    if ref.state[serving_bs] == LinkState.OUTAGE:
        raise ValueError(f"serving link {serving_bs} is in outage; filter candidates first")
    w_rx = links.rx_beams[serving_bs]
    gains = np.abs(links.interference_vec @ w_rx) ** 2
    others = interferer_set(regime, band_name, int(ref.operator_of[serving_bs]), serving_bs, ref)
    interference = float((links.rx_power_mw[others] * gains[others]).sum())
    signal = float(links.rx_power_mw[serving_bs] * links.serving_gain[serving_bs])
    bw = regime.bandwidth_hz(links.band, config.num_operators)
    return sinr_linear(signal, interference, noise_power_mw(config, bw))


def throughput(bandwidth_hz: float, n_loaded: int, sinr_value: float) -> float:
    """Round-robin full-buffer share of the Shannon rate, bits/s:
    bandwidth / (1 + n_loaded) * log2(1 + sinr)."""
    if bandwidth_hz <= 0:
        raise ValueError("bandwidth must be > 0")
    if n_loaded < 0 or sinr_value < 0:
        raise ValueError("load and SINR must be >= 0")
    return bandwidth_hz / (1.0 + n_loaded) * math.log2(1.0 + sinr_value)


@dataclass
class CandidateMetrics:
    """Vector metrics for every live own-operator candidate at one carrier."""

    band_name: str
    bandwidth_hz: float
    candidates: np.ndarray  # global BS indices
    sinr: np.ndarray
    rate_bps: np.ndarray
    load: np.ndarray


def candidate_metrics(
    ref: ReferenceLinkSet, band_name: str, regime: RegimeSpec, config: ScenarioConfig
) -> CandidateMetrics:
    """Evaluate SINR and rate for all candidates of one carrier at once."""
    links = ref.band(band_name)
    cand = links.own_candidates
    bw = regime.bandwidth_hz(links.band, config.num_operators)
    if cand.size == 0:
        empty = np.zeros(0)
        return CandidateMetrics(band_name, bw, cand, empty, empty, np.zeros(0, dtype=np.int64))
    power_gain = links.own_gain * links.rx_power_mw[None, :]
    rows = np.arange(cand.size)
    self_term = power_gain[rows, cand]
    if regime.mode(band_name) == LICENSING_EXCLUSIVE:
        own = ref.operator_of == ref.reference_operator
        interference = power_gain[:, own].sum(axis=1) - self_term
    else:
        interference = power_gain.sum(axis=1) - self_term
    signal = links.rx_power_mw[cand] * links.serving_gain[cand]
    noise = noise_power_mw(config, bw)
    s = signal / (interference + noise)
    load = links.load[cand]
    rate = bw / (1.0 + load) * np.log2(1.0 + s)
    return CandidateMetrics(band_name, bw, cand, s, rate, load)


@dataclass(frozen=True)
class Selection:
    """Phase-2 outcome for the reference UE; carrier is None when every
    candidate link is in outage (null assignment, zero rate)."""

    carrier: str | None
    operator: int
    bs_global: int | None
    bs_local: int | None
    rate_bps: float
    sinr: float
    bandwidth_hz: float
    load: int


def best_carrier_bs(
    ref: ReferenceLinkSet, regime: RegimeSpec, config: ScenarioConfig
) -> Selection:
    """Exhaustive throughput maximization over own-operator BSs x carriers.

    Ties resolve to the lower carrier frequency, then the lower BS index
    (bands are evaluated in config order, candidates in index order, and
    only a strictly larger rate replaces the incumbent).
    """
    best: Selection | None = None
    for band in config.bands:
        metrics = candidate_metrics(ref, band.name, regime, config)
        if metrics.candidates.size == 0:
            continue
        k = int(np.argmax(metrics.rate_bps))
        rate = float(metrics.rate_bps[k])
        if best is None or rate > best.rate_bps:
            g = int(metrics.candidates[k])
            best = Selection(
                carrier=band.name,
                operator=ref.reference_operator,
                bs_global=g,
                bs_local=int(ref.local_of[g]),
                rate_bps=rate,
                sinr=float(metrics.sinr[k]),
                bandwidth_hz=metrics.bandwidth_hz,
                load=int(metrics.load[k]),
            )
    if best is None:
        return Selection(
            carrier=None,
            operator=ref.reference_operator,
            bs_global=None,
            bs_local=None,
            rate_bps=0.0,
            sinr=0.0,
            bandwidth_hz=0.0,
            load=0,
        )
    return best
