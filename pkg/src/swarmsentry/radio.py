"""Log-distance path loss and the position-consistency check on received power.

The second verification stage compares the power actually measured at the
receiver against the power the path-loss model predicts for the distance the
packet *claims* (via its GPS fields).  A forged or replayed position shows up
as a residual between the two.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .packet import GpsFixQ

EARTH_RADIUS_M = 6_371_000.0


@dataclass(frozen=True, slots=True)
class PathLossModel:
    """Log-distance propagation model with a tolerance band for verification.

    ``rssi0`` is the power at the 1 m reference distance; ``d_min`` floors the
    distance before the logarithm so co-located nodes stay finite.  The default
    tolerance is three shadowing sigmas, bounding an honest drone's per-packet
    false-fail rate below 0.3%.
    """

    rssi0: float = -40.0
    exponent_n: float = 2.0
    shadow_sigma: float = 2.0
    tolerance_delta: float = 6.0
    d_min: float = 1.0

    def __post_init__(self) -> None:
        if self.exponent_n <= 0:
            raise ValueError(f"exponent_n must be > 0, got {self.exponent_n}")
        if self.shadow_sigma < 0:
            raise ValueError(f"shadow_sigma must be >= 0, got {self.shadow_sigma}")
        if self.tolerance_delta <= 0:
            raise ValueError(f"tolerance_delta must be > 0, got {self.tolerance_delta}")
        if self.d_min < 1.0:
            raise ValueError(f"d_min must be >= 1 m, got {self.d_min}")


@dataclass(frozen=True, slots=True)
class ObserverPose:
    """Where a verifying node sits."""

    fix: GpsFixQ


def haversine_m(lat1: float, lon1: float, lat2: float, lon2: float) -> float:
    """Great-circle ground distance in meters on a spherical Earth."""
    phi1 = math.radians(lat1)
    phi2 = math.radians(lat2)
    dphi = math.radians(lat2 - lat1)
    dlam = math.radians(lon2 - lon1)
    a = math.sin(dphi / 2.0) ** 2 + math.cos(phi1) * math.cos(phi2) * math.sin(dlam / 2.0) ** 2
    return EARTH_RADIUS_M * 2.0 * math.asin(math.sqrt(a))


def geodesic_distance(a: GpsFixQ, b: GpsFixQ) -> float:
    """3-D separation: great-circle ground distance combined with altitude."""
    ground = haversine_m(a.lat_deg, a.lon_deg, b.lat_deg, b.lon_deg)
    return math.hypot(ground, float(a.alt_q - b.alt_q))


def expected_rssi(distance_m: float, model: PathLossModel) -> float:
    """Predicted received power (dBm) at a given distance."""
    d = max(distance_m, model.d_min)
    return model.rssi0 - 10.0 * model.exponent_n * math.log10(d)


def rssi_consistent(
    measured_dbm: float,
    claimed_fix: GpsFixQ,
    observer: ObserverPose,
    model: PathLossModel,
) -> tuple[bool, float]:
    """Check measured power against the claimed position.

    Returns ``(ok, residual)`` where ``residual = measured - expected`` at the
    claimed distance and ``ok`` iff ``|residual| <= tolerance_delta``
    (boundary inclusive).
    """
    predicted = expected_rssi(geodesic_distance(claimed_fix, observer.fix), model)
    residual = measured_dbm - predicted
    return abs(residual) <= model.tolerance_delta, residual
