"""Uniform planar array responses, beamforming vectors and gains.

Axis convention (fixed and used consistently everywhere): the array is a
rows x cols grid; element (r, c) of a response pointed at azimuth ``az``
(horizontal angle from the array normal) and elevation ``el`` (vertical
angle from the horizon) carries the phase

    phi(r, c) = -2*pi*spacing * (r*sin(el) + c*cos(el)*sin(az)),

with elements flattened row-major (index = r*cols + c) and ``spacing`` in
wavelengths (0.5 by default).

Two scalings of the same phase profile are used:

* ``spatial_signature`` -- unit-modulus entries, norm sqrt(n); these build
  channel matrices, so a conjugate-matched beam pair realizes the full
  n_tx*n_rx array gain.
* ``steering_vector``   -- signature / sqrt(n), unit norm; these are the
  beamforming vectors.

The link gain is |w_rx^T H w_tx|^2 (plain transpose on the receive beam);
receive beams are therefore conjugated at construction so that a matched
pair gives a real, maximal gain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

if TYPE_CHECKING:  # channel imports antenna at runtime; keep this one lazy
    from .channel import ClusterSet

DEFAULT_SPACING = 0.5


@dataclass(frozen=True)
class UpaGeometry:
    """rows x cols planar array with element spacing in wavelengths."""

    rows: int
    cols: int
    spacing: float = DEFAULT_SPACING

    @property
    def n(self) -> int:
        return self.rows * self.cols

    @classmethod
    def from_element_count(cls, n: int, spacing: float = DEFAULT_SPACING) -> "UpaGeometry":
        """Square factorization of a perfect-square element count."""
        side = math.isqrt(n)
        if side * side != n:
            raise ValueError(f"element count {n} is not a perfect square; no square UPA exists")
        return cls(rows=side, cols=side, spacing=spacing)


def _phase_components(geometry: UpaGeometry, azimuth, elevation):
    """Per-axis phase coordinates: v = sin(el) along rows, u = cos(el)*sin(az)
    along columns."""
    az = np.asarray(azimuth, dtype=float)
    el = np.asarray(elevation, dtype=float)
    return np.sin(el), np.cos(el) * np.sin(az)


def spatial_signature(geometry: UpaGeometry, azimuth, elevation) -> np.ndarray:
    """Unnormalized array response(s), shape (n,) for scalar angles or
    (n, k) for length-k angle arrays.  Entries have unit modulus."""
    v, u = _phase_components(geometry, azimuth, elevation)
    scalar = v.ndim == 0
    v = np.atleast_1d(v)
    u = np.atleast_1d(u)
    r = np.arange(geometry.rows)
    c = np.arange(geometry.cols)
    # e^{-j*2*pi*spacing*(r*v)} and e^{-j*2*pi*spacing*(c*u)}, combined row-major
    row_part = np.exp(-2j * np.pi * geometry.spacing * np.outer(r, v))  # (rows, k)
    col_part = np.exp(-2j * np.pi * geometry.spacing * np.outer(c, u))  # (cols, k)
    sig = (row_part[:, None, :] * col_part[None, :, :]).reshape(geometry.n, -1)
    return sig[:, 0] if scalar else sig


def steering_vector(geometry: UpaGeometry, azimuth: float, elevation: float) -> np.ndarray:
    """Unit-norm beamforming vector pointed at (azimuth, elevation)."""
    return spatial_signature(geometry, azimuth, elevation) / math.sqrt(geometry.n)


def _ramp_sum(n: int, theta: np.ndarray) -> np.ndarray:
    """sum_{k=0}^{n-1} e^{-j*k*theta}, numerically safe at theta = 2*pi*m."""
    theta = np.asarray(theta, dtype=float)
    half = theta / 2.0
    m = np.round(half / np.pi)
    delta = half - m * np.pi  # |delta| <= pi/2, sin(half) = sin(delta)*(-1)^m
    num = np.sin(n * half)
    den = np.sin(half)
    small = np.abs(delta) < 1e-9
    ratio = np.where(small, float(n), num / np.where(small, 1.0, den))
    return ratio * np.exp(-0.5j * (n - 1) * theta)


def signature_inner(
    geometry: UpaGeometry, azimuth_a, elevation_a, azimuth_b, elevation_b
) -> np.ndarray:
    """Closed-form inner product a(A)^H a(B) of two spatial signatures.

    Separates into a product of two geometric sums (one per array axis),
    which keeps per-path gain evaluation O(1) in the element count.
    Broadcasts over angle arrays.
    """
    va, ua = _phase_components(geometry, azimuth_a, elevation_a)
    vb, ub = _phase_components(geometry, azimuth_b, elevation_b)
    two_pi_d = 2.0 * np.pi * geometry.spacing
    rows = _ramp_sum(geometry.rows, two_pi_d * (vb - va))
    cols = _ramp_sum(geometry.cols, two_pi_d * (ub - ua))
    return rows * cols


def beamforming_gain(H: np.ndarray, w_tx: np.ndarray, w_rx: np.ndarray) -> float:
    """Link power gain |w_rx^T H w_tx|^2 for an n_rx x n_tx channel matrix."""
    H = np.asarray(H)
    w_tx = np.asarray(w_tx)
    w_rx = np.asarray(w_rx)
    if H.ndim != 2 or w_rx.shape != (H.shape[0],) or w_tx.shape != (H.shape[1],):
        raise ValueError(
            f"dimension mismatch: H is {H.shape}, w_rx is {w_rx.shape}, w_tx is {w_tx.shape}"
        )
    return float(np.abs(w_rx @ H @ w_tx) ** 2)


def max_aligned_gain_db(n_tx: int, n_rx: int) -> float:
    """Peak gain of a perfectly aligned beam pair: 10*log10(n_tx*n_rx)."""
    if n_tx < 1 or n_rx < 1:
        raise ValueError("antenna counts must be >= 1")
    return 10.0 * math.log10(n_tx * n_rx)


def align_to_strongest_path(
    clusters: ClusterSet, tx_geometry: UpaGeometry, rx_geometry: UpaGeometry
) -> tuple[np.ndarray, np.ndarray]:
    """Beam pair (w_tx, w_rx) pointed at the sub-path with the largest power
    fraction; ties go to the lowest (cluster, sub-path) index.

    The transmit beam is the steering vector at the departure angles; the
    receive beam is the conjugated steering vector at the arrival angles,
    so the matched pair yields a real positive amplitude.
    """
    best = None
    best_power = -1.0
    for cluster in clusters.clusters:
        for sub in cluster.subpaths:
            if sub.power_fraction > best_power:
                best_power = sub.power_fraction
                best = sub
    if best is None:
        raise ValueError("empty cluster set")
    w_tx = steering_vector(tx_geometry, best.aod_az, best.aod_el)
    w_rx = np.conj(steering_vector(rx_geometry, best.aoa_az, best.aoa_el))
    return w_tx, w_rx
