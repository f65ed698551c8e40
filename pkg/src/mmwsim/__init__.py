"""Monte Carlo simulator for multi-operator mmWave cellular downlink.

Simulates unplanned (PPP) deployments of several mobile operators sharing
two mmWave carriers (28 and 73 GHz) under three spectrum-access regimes:

* ``licensed`` -- each operator holds an orthogonal slice of both bands,
* ``pooled``   -- every operator transmits in the full band at both carriers,
* ``hybrid``   -- exclusive access at 28 GHz, pooled access at 73 GHz,

and measures the throughput distribution of a reference user at the area
center under per-user carrier/cell selection.
"""

from .config import (
    BandConfig,
    BlockageParams,
    ConfigError,
    ConfigValidationError,
    PathlossParams,
    ScenarioConfig,
    default_config,
    load_scenario,
    preset,
    serialize,
    validate,
)
from .antenna import (
    UpaGeometry,
    align_to_strongest_path,
    beamforming_gain,
    max_aligned_gain_db,
    steering_vector,
)
from .channel import (
    LinkState,
    channel_matrix,
    draw_link_state,
    pathloss_db,
    sample_clusters,
    state_probabilities,
)
from .deployment import Deployment, Point, build_deployment, sample_ppp
from .association import (
    REGIME_NAMES,
    AssociationTable,
    RegimeSpec,
    best_carrier_bs,
    interferer_set,
    min_pathloss_association,
    random_band_assignment,
    sinr,
    throughput,
)
from .montecarlo import (
    CampaignStats,
    IterationResult,
    percentile,
    run_campaign,
    run_iteration,
)

__version__ = "0.1.0"
