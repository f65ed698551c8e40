"""Scenario configuration: types, defaults, file parsing and validation.

A scenario is described by a flat, line-oriented ``key = value`` text file
with dotted key paths (diff-friendly, zero-dependency parsing), e.g.::

    # four operators, medium density
    num_operators = 4
    bs_density = 60
    bands.73ghz.n_tx = 256
    bands.73ghz.n_rx = 64

Blank lines and ``#`` comments (full-line or trailing) are ignored.  Every
key has a documented default, so the empty file is a valid scenario.  The
full key table lives in the README.

Provenance note: the default pathloss fits (alpha/beta/sigma per band and
link state), cluster statistics (cluster_mean, r_tau, zeta) and blockage
coefficients follow published dense-urban 28/73 GHz measurement models.
They are external-reference values, not constants of this project; treat
them as placeholders and override them for other environments.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import Iterable

BAND_28 = "28ghz"
BAND_73 = "73ghz"

LICENSING_EXCLUSIVE = "exclusive"
LICENSING_POOLED = "pooled"
_LICENSING_VALUES = (LICENSING_EXCLUSIVE, LICENSING_POOLED)


class ConfigError(ValueError):
    """Scenario file could not be parsed.  ``errors`` lists one message per
    offending line, each naming the line number and key."""

    def __init__(self, errors: Iterable[str]):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


class ConfigValidationError(ConfigError):
    """Parsed scenario violates one or more invariants.  ``errors`` holds
    the full list of violations, each prefixed with the field path."""


@dataclass(frozen=True)
class PathlossParams:
    """Distance-power-law pathloss fit, PL(d) = alpha + beta*10*log10(d) + xi,
    with xi ~ N(0, sigma^2), separately for LoS and NLoS links."""

    alpha_los: float
    beta_los: float
    sigma_los: float
    alpha_nlos: float
    beta_nlos: float
    sigma_nlos: float


@dataclass(frozen=True)
class BlockageParams:
    """Coefficients of the distance-dependent LoS/NLoS/outage probabilities:
    p_out(d) = max(0, 1 - exp(-a_out*d + b_out)), p_los = (1-p_out)*exp(-a_los*d).
    """

    a_out: float  # 1/m
    b_out: float  # unitless
    a_los: float  # 1/m


@dataclass(frozen=True)
class BandConfig:
    """Per-carrier parameters (antenna counts, power, channel statistics)."""

    name: str
    carrier_frequency: float  # Hz
    total_bandwidth: float  # Hz, before any per-operator split
    licensing: str  # "exclusive" or "pooled" (scenario default; regimes may override)
    n_tx: int  # BS array elements, must be a perfect square (square UPA)
    n_rx: int  # UE array elements, must be a perfect square
    tx_power_dbm: float  # per carrier, at the array input
    pathloss: PathlossParams
    cluster_mean: float  # mean of the Poisson cluster count (>= 1 enforced at draw)
    r_tau: float  # power-spread decay exponent
    zeta_db: float  # per-cluster shadowing std in the power-spread law
    angle_spread_deg: float = 10.0  # sub-path Gaussian offset around cluster angles


@dataclass(frozen=True)
class ScenarioConfig:
    """Full scenario parameterization; immutable once validated, safe to
    share read-only across parallel workers."""

    num_operators: int
    bs_density: float  # BS per km^2 per operator
    ue_density: float  # UE per km^2 per operator
    area_side: float  # meters
    p28: float  # probability a background UE is assigned the 28 GHz carrier
    iterations: int
    noise_psd_dbm_hz: float
    noise_figure_db: float
    seed: int
    blockage: BlockageParams
    bands: tuple[BandConfig, BandConfig]  # (28 GHz, 73 GHz)

    @property
    def area_km2(self) -> float:
        return (self.area_side / 1000.0) ** 2

    def band(self, name: str) -> BandConfig:
        for b in self.bands:
            if b.name == name:
                return b
        raise KeyError(name)


def default_config() -> ScenarioConfig:
    """All-defaults scenario (antenna case i: 64/16 elements at both bands)."""
    return ScenarioConfig(
        num_operators=4,
        bs_density=60.0,
        ue_density=100.0,
        area_side=1000.0,
        p28=0.5,
        iterations=500,
        noise_psd_dbm_hz=-174.0,
        noise_figure_db=7.0,
        seed=1,
        blockage=BlockageParams(a_out=0.0334, b_out=5.2, a_los=0.0149),
        bands=(
            BandConfig(
                name=BAND_28,
                carrier_frequency=28e9,
                total_bandwidth=1e9,
                licensing=LICENSING_EXCLUSIVE,
                n_tx=64,
                n_rx=16,
                tx_power_dbm=30.0,
                pathloss=PathlossParams(61.4, 2.0, 5.8, 72.0, 2.92, 8.7),
                cluster_mean=1.8,
                r_tau=2.8,
                zeta_db=4.0,
            ),
            BandConfig(
                name=BAND_73,
                carrier_frequency=73e9,
                total_bandwidth=1e9,
                licensing=LICENSING_POOLED,
                n_tx=64,
                n_rx=16,
                tx_power_dbm=30.0,
                pathloss=PathlossParams(69.8, 2.0, 5.8, 86.6, 2.45, 8.0),
                cluster_mean=1.9,
                r_tau=3.0,
                zeta_db=4.0,
            ),
        ),
    )


ANTENNA_CASES = {
    # case i: both carriers use 64 BS / 16 UE elements.
    "i": {BAND_28: (64, 16), BAND_73: (64, 16)},
    # case ii: the 73 GHz arrays are doubled per dimension (256 BS / 64 UE).
    "ii": {BAND_28: (64, 16), BAND_73: (256, 64)},
}


def apply_antenna_case(config: ScenarioConfig, case: str) -> ScenarioConfig:
    """Return a copy of ``config`` with the antenna counts of the named case."""
    if case not in ANTENNA_CASES:
        raise ValueError(f"unknown antenna case {case!r}; expected one of {sorted(ANTENNA_CASES)}")
    new_bands = []
    for band in config.bands:
        n_tx, n_rx = ANTENNA_CASES[case][band.name]
        new_bands.append(dataclasses.replace(band, n_tx=n_tx, n_rx=n_rx))
    return dataclasses.replace(config, bands=tuple(new_bands))


def preset(name: str) -> ScenarioConfig:
    """Named scenario presets: ``case-i`` and ``case-ii``."""
    if name == "case-i":
        return apply_antenna_case(default_config(), "i")
    if name == "case-ii":
        return apply_antenna_case(default_config(), "ii")
    raise ValueError(f"unknown preset {name!r}; expected 'case-i' or 'case-ii'")


# --- flat key <-> config mapping -------------------------------------------

_SCALAR_KEYS = {
    # key: (attribute, type)
    "num_operators": int,
    "bs_density": float,
    "ue_density": float,
    "area_side": float,
    "p28": float,
    "iterations": int,
    "seed": int,
    "noise_psd": float,
    "noise_figure": float,
}

_SCALAR_ATTRS = {
    "num_operators": "num_operators",
    "bs_density": "bs_density",
    "ue_density": "ue_density",
    "area_side": "area_side",
    "p28": "p28",
    "iterations": "iterations",
    "seed": "seed",
    "noise_psd": "noise_psd_dbm_hz",
    "noise_figure": "noise_figure_db",
}

_BLOCKAGE_KEYS = ("a_out", "b_out", "a_los")

_BAND_KEYS = {
    "carrier_frequency": ("carrier_frequency", float),
    "total_bandwidth": ("total_bandwidth", float),
    "licensing": ("licensing", str),
    "n_tx": ("n_tx", int),
    "n_rx": ("n_rx", int),
    "tx_power": ("tx_power_dbm", float),
    "cluster_mean": ("cluster_mean", float),
    "r_tau": ("r_tau", float),
    "zeta": ("zeta_db", float),
    "angle_spread_deg": ("angle_spread_deg", float),
}

_PATHLOSS_KEYS = ("alpha_los", "beta_los", "sigma_los", "alpha_nlos", "beta_nlos", "sigma_nlos")


def _flatten(config: ScenarioConfig) -> dict[str, object]:
    """Config -> ordered flat dict of dotted keys (the file schema)."""
    flat: dict[str, object] = {}
    for key, attr in _SCALAR_ATTRS.items():
        flat[key] = getattr(config, attr)
    for key in _BLOCKAGE_KEYS:
        flat[f"blockage.{key}"] = getattr(config.blockage, key)
    for band in config.bands:
        prefix = f"bands.{band.name}"
        for key, (attr, _) in _BAND_KEYS.items():
            flat[f"{prefix}.{key}"] = getattr(band, attr)
        for key in _PATHLOSS_KEYS:
            flat[f"{prefix}.pathloss.{key}"] = getattr(band.pathloss, key)
    return flat


def _build(flat: dict[str, object]) -> ScenarioConfig:
    """Flat dict (all keys present) -> ScenarioConfig."""
    blockage = BlockageParams(*(flat[f"blockage.{k}"] for k in _BLOCKAGE_KEYS))
    bands = []
    for name in (BAND_28, BAND_73):
        prefix = f"bands.{name}"
        kwargs = {attr: flat[f"{prefix}.{key}"] for key, (attr, _) in _BAND_KEYS.items()}
        kwargs["pathloss"] = PathlossParams(*(flat[f"{prefix}.pathloss.{k}"] for k in _PATHLOSS_KEYS))
        bands.append(BandConfig(name=name, **kwargs))
    scalars = {attr: flat[key] for key, attr in _SCALAR_ATTRS.items()}
    return ScenarioConfig(blockage=blockage, bands=(bands[0], bands[1]), **scalars)


def _key_type(key: str) -> type | None:
    if key in _SCALAR_KEYS:
        return _SCALAR_KEYS[key]
    parts = key.split(".")
    if parts[0] == "blockage" and len(parts) == 2 and parts[1] in _BLOCKAGE_KEYS:
        return float
    if parts[0] == "bands" and len(parts) >= 3 and parts[1] in (BAND_28, BAND_73):
        if len(parts) == 3 and parts[2] in _BAND_KEYS:
            return _BAND_KEYS[parts[2]][1]
        if len(parts) == 4 and parts[2] == "pathloss" and parts[3] in _PATHLOSS_KEYS:
            return float
    return None


def _parse_value(raw: str, typ: type, key: str, lineno: int, errors: list[str]):
    try:
        if typ is int:
            return int(raw)
        if typ is float:
            return float(raw)
        return raw
    except ValueError:
        errors.append(f"line {lineno}: key '{key}': cannot parse {raw!r} as {typ.__name__}")
        return None


def loads(text: str) -> ScenarioConfig:
    """Parse scenario text; unknown keys and malformed lines are collected
    into a single ConfigError naming line and key.  The result is validated."""
    flat = _flatten(default_config())
    errors: list[str] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            errors.append(f"line {lineno}: expected 'key = value', got {stripped!r}")
            continue
        key, raw = (part.strip() for part in stripped.split("=", 1))
        typ = _key_type(key)
        if typ is None:
            errors.append(f"line {lineno}: unknown key '{key}'")
            continue
        value = _parse_value(raw, typ, key, lineno, errors)
        if value is not None:
            flat[key] = value
    if errors:
        raise ConfigError(errors)
    return validate(_build(flat))


def load_scenario(path: str) -> ScenarioConfig:
    """Load, default-fill and validate a scenario file."""
    with open(path, "r", encoding="utf-8") as fh:
        return loads(fh.read())


def serialize(config: ScenarioConfig) -> str:
    """Canonical text form; ``loads(serialize(c))`` equals ``c`` exactly
    (floats are written with full round-trip precision)."""
    lines = []
    for key, value in _flatten(config).items():
        lines.append(f"{key} = {value!r}" if isinstance(value, float) else f"{key} = {value}")
    return "\n".join(lines) + "\n"


# --- validation -------------------------------------------------------------


def _is_square(n: int) -> bool:
    r = math.isqrt(n)
    return r * r == n


def validation_errors(config: ScenarioConfig) -> list[str]:
    """All invariant violations, one message per field."""
    errs: list[str] = []

    def check(ok: bool, msg: str):
        if not ok:
            errs.append(msg)

    check(config.num_operators >= 1, "num_operators must be >= 1")
    check(config.bs_density > 0, "bs_density must be > 0")
    check(config.ue_density > 0, "ue_density must be > 0")
    check(config.area_side > 0, "area_side must be > 0")
    check(0.0 <= config.p28 <= 1.0, "p28 must be in [0, 1]")
    check(config.iterations >= 1, "iterations must be >= 1")
    check(0 <= config.seed < 2**64, "seed must be a 64-bit unsigned integer")
    check(math.isfinite(config.noise_psd_dbm_hz), "noise_psd must be finite")
    check(math.isfinite(config.noise_figure_db), "noise_figure must be finite")
    check(config.blockage.a_out > 0, "blockage.a_out must be > 0")
    check(math.isfinite(config.blockage.b_out), "blockage.b_out must be finite")
    check(config.blockage.a_los > 0, "blockage.a_los must be > 0")

    names = [b.name for b in config.bands]
    check(names == [BAND_28, BAND_73], f"bands must be exactly ({BAND_28}, {BAND_73})")
    for band in config.bands:
        p = f"bands.{band.name}"
        check(band.carrier_frequency > 0, f"{p}.carrier_frequency must be > 0")
        check(band.total_bandwidth > 0, f"{p}.total_bandwidth must be > 0")
        check(
            band.licensing in _LICENSING_VALUES,
            f"{p}.licensing must be one of {_LICENSING_VALUES}",
        )
        for attr in ("n_tx", "n_rx"):
            n = getattr(band, attr)
            check(
                n >= 1 and _is_square(n),
                f"{p}.{attr} must be a perfect square (square UPA), got {n}",
            )
        check(math.isfinite(band.tx_power_dbm), f"{p}.tx_power must be finite")
        check(band.cluster_mean > 0, f"{p}.cluster_mean must be > 0")
        check(band.r_tau > 0, f"{p}.r_tau must be > 0")
        check(band.zeta_db >= 0, f"{p}.zeta must be >= 0")
        check(band.angle_spread_deg >= 0, f"{p}.angle_spread_deg must be >= 0")
        pl = band.pathloss
        for k in _PATHLOSS_KEYS:
            check(math.isfinite(getattr(pl, k)), f"{p}.pathloss.{k} must be finite")
        check(pl.sigma_los >= 0, f"{p}.pathloss.sigma_los must be >= 0")
        check(pl.sigma_nlos >= 0, f"{p}.pathloss.sigma_nlos must be >= 0")
    return errs


def validate(config: ScenarioConfig) -> ScenarioConfig:
    """Return ``config`` unchanged if every invariant holds; otherwise raise
    ConfigValidationError carrying the full violation list."""
    errs = validation_errors(config)
    if errs:
        raise ConfigValidationError(errs)
    return config
