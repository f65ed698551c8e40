"""Random network geometry: per-operator PPP layouts plus the reference UE.

Base stations and users of every operator are placed by independent
Poisson point processes over a square area (an unplanned deployment).  A
deterministic reference UE sits at the exact area center; it is additional
to the sampled points, belongs to operator 0 and is the only user whose
throughput is evaluated.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import ScenarioConfig

REFERENCE_OPERATOR = 0


@dataclass(frozen=True)
class Point:
    x: float
    y: float


@dataclass
class Deployment:
    """Per-operator BS/UE coordinate arrays (shape (n, 2)) and the reference
    UE at the area center."""

    area_side: float
    bs: list[np.ndarray]
    ue: list[np.ndarray]
    reference_ue: Point
    reference_operator: int = REFERENCE_OPERATOR

    @property
    def num_operators(self) -> int:
        return len(self.bs)

    @property
    def total_bs(self) -> int:
        return sum(len(b) for b in self.bs)

    def bs_stacked(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """All BSs operator-major: (coords (n, 2), operator index, local index)."""
        coords = np.concatenate([b.reshape(-1, 2) for b in self.bs], axis=0)
        operator_of = np.concatenate(
            [np.full(len(b), m, dtype=np.int64) for m, b in enumerate(self.bs)]
        )
        local_of = np.concatenate([np.arange(len(b), dtype=np.int64) for b in self.bs])
        return coords, operator_of, local_of


def sample_ppp(density_per_km2: float, area_side: float, rng: np.random.Generator) -> np.ndarray:
    """One PPP realization over the square: a Poisson(density * area) count
    of i.i.d. uniform points, returned as an (n, 2) coordinate array (n may
    be 0)."""
    if density_per_km2 < 0:
        raise ValueError("density must be >= 0")
    mean = density_per_km2 * (area_side / 1000.0) ** 2
    n = int(rng.poisson(mean)) if mean > 0 else 0
    return rng.uniform(0.0, area_side, size=(n, 2))


def build_deployment(config: ScenarioConfig, rng: np.random.Generator) -> Deployment:
    """Independent PPP draws per operator (BSs first, then UEs), plus the
    center reference UE."""
    bs = []
    ue = []
    for _ in range(config.num_operators):
        bs.append(sample_ppp(config.bs_density, config.area_side, rng))
        ue.append(sample_ppp(config.ue_density, config.area_side, rng))
    center = Point(config.area_side / 2.0, config.area_side / 2.0)
    return Deployment(area_side=config.area_side, bs=bs, ue=ue, reference_ue=center)


def deployment_rows(deployment: Deployment) -> list[tuple[int, str, float, float]]:
    """(operator, role, x, y) rows for the debug CSV dump."""
    rows: list[tuple[int, str, float, float]] = []
    for m in range(deployment.num_operators):
        for x, y in deployment.bs[m]:
            rows.append((m, "bs", float(x), float(y)))
        for x, y in deployment.ue[m]:
            rows.append((m, "ue", float(x), float(y)))
    ref = deployment.reference_ue
    rows.append((deployment.reference_operator, "reference_ue", ref.x, ref.y))
    return rows
