"""Seeded Monte Carlo campaigns: iterate, sweep, reduce to percentiles.

Every iteration owns a private random stream derived from
``SeedSequence(seed, spawn_key=(iteration,))``, so results are a pure
function of (config, iteration index) no matter how iterations are
scheduled across workers.  One realization (geometry, channels, phase-1
association, interferer beams) is shared by all regimes of an iteration --
regimes differ only in interferer sets and bandwidths -- which gives
paired common-random-number samples for the regime comparisons.  Campaign
sweeps derive one sub-seed per (antenna case, density) cell, so cells are
statistically independent while regimes stay paired.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from multiprocessing import Pool

import numpy as np

from . import association, deployment as deployment_mod
from .association import ReferenceLinkSet, RegimeSpec, regime_from_name
from .config import ScenarioConfig, apply_antenna_case
from .deployment import Deployment

DEFAULT_DENSITY_GRID = (30.0, 60.0, 120.0)
DEFAULT_CASES = ("i", "ii")
PERCENTILE_LABELS = (("p5", 0.05), ("p50", 0.50))


@dataclass(frozen=True)
class IterationResult:
    """Reference-user outcome of one iteration under one regime."""

    regime: str
    density: float
    iteration: int
    seed: int
    rate_bps: float
    carrier: str | None
    bs_operator: int
    bs_index: int | None
    sinr_db: float
    bandwidth_hz: float
    load: int


@dataclass
class Realization:
    """One sampled network state, shared by every regime of an iteration."""

    config: ScenarioConfig
    iteration: int
    deployment: Deployment
    table: association.AssociationTable
    ref: ReferenceLinkSet


def iteration_streams(config: ScenarioConfig, iteration: int) -> list[np.random.SeedSequence]:
    """The four per-iteration sub-streams, in pipeline order: deployment,
    background link budgets, band assignment, reference links."""
    root = np.random.SeedSequence(config.seed, spawn_key=(iteration,))
    return root.spawn(4)


def build_realization(config: ScenarioConfig, iteration: int) -> Realization:
    """Deploy, draw channels, run phase-1 association and precompute the
    reference-UE link set, all from streams keyed by (seed, iteration)."""
    s_deploy, s_background, s_assoc, s_ref = iteration_streams(config, iteration)
    dep = deployment_mod.build_deployment(config, np.random.default_rng(s_deploy))
    background = association.build_background_links(
        dep, config, np.random.default_rng(s_background)
    )
    table = association.min_pathloss_association(background)
    table = association.random_band_assignment(table, config.p28, np.random.default_rng(s_assoc))
    ref = association.build_reference_links(dep, config, table, np.random.default_rng(s_ref))
    return Realization(config=config, iteration=iteration, deployment=dep, table=table, ref=ref)


def evaluate_regime(realization: Realization, regime: str | RegimeSpec) -> IterationResult:
    """Phase-2 selection and rate of the reference UE under one regime."""
    spec = regime_from_name(regime) if isinstance(regime, str) else regime
    sel = association.best_carrier_bs(realization.ref, spec, realization.config)
    sinr_db = 10.0 * math.log10(sel.sinr) if sel.sinr > 0 else -math.inf
    return IterationResult(
        regime=spec.name,
        density=realization.config.bs_density,
        iteration=realization.iteration,
        seed=realization.config.seed,
        rate_bps=sel.rate_bps,
        carrier=sel.carrier,
        bs_operator=sel.operator,
        bs_index=sel.bs_local,
        sinr_db=sinr_db,
        bandwidth_hz=sel.bandwidth_hz,
        load=sel.load,
    )


def run_iteration(config: ScenarioConfig, regime: str | RegimeSpec, iteration: int) -> IterationResult:
    """Full pipeline for one (iteration, regime); bit-identical on repeat."""
    return evaluate_regime(build_realization(config, iteration), regime)


# --- campaign ----------------------------------------------------------------


def percentile(samples, q: float) -> float:
    """Linear-interpolated order statistic; q=0 gives the min, q=1 the max."""
    a = np.asarray(samples, dtype=float)
    if a.size == 0:
        raise ValueError("percentile of empty sample set")
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"quantile fraction must be in [0, 1], got {q}")
    return float(np.quantile(a, q, method="linear"))


@dataclass(frozen=True)
class CellStats:
    """Percentile summary of one (antenna case, regime, density) cell."""

    case: str
    regime: str
    density: float
    samples: int
    p5: float
    p50: float
    mean: float


@dataclass
class CampaignStats:
    """All cell summaries of a sweep plus the raw throughput samples
    (sample vectors are index-aligned across regimes of a cell)."""

    seed: int
    iterations: int
    rows: list[CellStats]
    samples: dict[tuple[str, str, float], np.ndarray]
    results: dict[tuple[str, str, float], list[IterationResult]] | None = None


def cell_seed(campaign_seed: int, case_index: int, density_index: int) -> int:
    """Deterministic per-(case, density) sub-seed; regimes intentionally
    share it so they see identical realizations."""
    ss = np.random.SeedSequence(campaign_seed, spawn_key=(case_index, density_index))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _iteration_task(args: tuple[ScenarioConfig, int, tuple[str, ...]]) -> list[IterationResult]:
    config, iteration, regime_names = args
    realization = build_realization(config, iteration)
    return [evaluate_regime(realization, name) for name in regime_names]


def run_campaign(
    config: ScenarioConfig,
    density_grid=DEFAULT_DENSITY_GRID,
    regimes=association.REGIME_NAMES,
    cases=("i",),
    jobs: int = 1,
    keep_results: bool = False,
) -> CampaignStats:
    """Sweep (case, density) cells, running ``config.iterations`` paired
    iterations per cell and reducing each regime's samples to 5th/50th
    percentiles and mean.

    Results are merged in deterministic (case, density, iteration) order,
    so serial and parallel runs produce identical statistics.
    """
    density_grid = [float(d) for d in density_grid]
    regime_names = tuple(regime_from_name(r).name if isinstance(r, str) else r.name for r in regimes)
    if not density_grid or not regime_names or not cases:
        raise ValueError("density_grid, regimes and cases must be non-empty")

    samples: dict[tuple[str, str, float], np.ndarray] = {}
    results: dict[tuple[str, str, float], list[IterationResult]] = {}
    for case_index, case in enumerate(cases):
        # the pseudo-case "config" keeps the scenario's own antenna counts
        case_config = config if case == "config" else apply_antenna_case(config, case)
        for density_index, density in enumerate(density_grid):
            cell_config = dataclasses.replace(
                case_config,
                bs_density=density,
                seed=cell_seed(config.seed, case_index, density_index),
            )
            tasks = [(cell_config, i, regime_names) for i in range(config.iterations)]
            if jobs > 1:
                with Pool(processes=jobs) as pool:
                    per_iteration = pool.map(_iteration_task, tasks, chunksize=8)
            else:
                per_iteration = [_iteration_task(t) for t in tasks]
            for r_idx, regime in enumerate(regime_names):
                key = (case, regime, density)
                cell_results = [row[r_idx] for row in per_iteration]
                samples[key] = np.array([r.rate_bps for r in cell_results])
                if keep_results:
                    results[key] = cell_results

    rows = [
        CellStats(
            case=case,
            regime=regime,
            density=density,
            samples=samples[(case, regime, density)].size,
            p5=percentile(samples[(case, regime, density)], 0.05),
            p50=percentile(samples[(case, regime, density)], 0.50),
            mean=float(samples[(case, regime, density)].mean()),
        )
        for case in cases
        for regime in regime_names
        for density in density_grid
    ]
    return CampaignStats(
        seed=config.seed,
        iterations=config.iterations,
        rows=rows,
        samples=samples,
        results=results if keep_results else None,
    )
