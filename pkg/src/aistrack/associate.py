"""Nearest-prediction track association via haversine distance.

Each fleet model is rolled forward to the observation time; the observation is
assigned to the vessel whose predicted position is closest on the great
circle, or declared a new track when the minimum distance exceeds tau.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import TimeBeforeTraining
from .ingest import AisMessage
from .lstm import roll_step
from .preprocess import unscale

EARTH_RADIUS_KM = 6371.0

NEW_TRACK = "NEW"


@dataclass(frozen=True)
class GeoPoint:
    lat: float
    lon: float


@dataclass
class AssociationDecision:
    object_id: int
    observed: GeoPoint
    observation_time: int
    distances_km: dict[str, float]
    assigned: str  # vessel_id or NEW_TRACK
    winning_distance_km: float


def haversine(p: GeoPoint, q: GeoPoint, r: float = EARTH_RADIUS_KM) -> float:
    """Great-circle distance in km (radius r) between two lat/lon points."""
    phi1, phi2 = math.radians(p.lat), math.radians(q.lat)
    dphi = phi2 - phi1
    dlam = math.radians(q.lon - p.lon)
    a = math.sin(dphi / 2) ** 2 + math.cos(phi1) * math.cos(phi2) * math.sin(dlam / 2) ** 2
    return 2 * r * math.asin(min(1.0, math.sqrt(a)))


@dataclass
class RolloutState:
    """Incrementally advanced prediction state for one vessel model."""

    window: np.ndarray  # (m, k) scaled
    steps_done: int = 0
    last_pred_scaled: np.ndarray | None = None

    def advance_to(self, bundle, steps: int) -> np.ndarray:
        """Advance the rollout to `steps` total steps past train end."""
        while self.steps_done < steps:
            self.last_pred_scaled, self.window = roll_step(bundle.network, self.window)
            self.steps_done += 1
        return self.last_pred_scaled


def predict_positions(bundles, target_time: float, states: dict | None = None) -> dict[str, GeoPoint]:
    """Roll every bundle forward to target_time and unscale the predictions.

    steps = round((target_time - train_end_time) / period), minimum 1.
    Pass the same `states` dict across calls with non-decreasing target times
    to advance rollouts incrementally instead of recomputing from scratch.
    """
    out: dict[str, GeoPoint] = {}
    for bundle in bundles:
        if target_time <= bundle.train_end_time:
            raise TimeBeforeTraining(
                f"vessel {bundle.vessel_id}: target {target_time} <= train end {bundle.train_end_time}"
            )
        steps = max(1, round((target_time - bundle.train_end_time) / bundle.period))
        if states is not None:
            state = states.setdefault(
                bundle.vessel_id, RolloutState(window=bundle.last_training_window.copy())
            )
        else:
            state = RolloutState(window=bundle.last_training_window.copy())
        scaled = state.advance_to(bundle, steps)
        lat, lon = unscale(scaled, bundle.scaler)
        out[bundle.vessel_id] = GeoPoint(lat=float(lat), lon=float(lon))
    return out


def associate(
    observation: AisMessage,
    predictions: dict[str, GeoPoint],
    tau: float = math.inf,
    radius_km: float = EARTH_RADIUS_KM,
) -> AssociationDecision:
    """Assign the observation to the nearest predicted track, or NEW if the
    minimum distance exceeds tau. Ties go to the smallest vessel_id."""
    if not predictions:
        raise ValueError("predictions must be non-empty")
    obs = GeoPoint(lat=observation.lat, lon=observation.lon)
    distances = {
        vid: haversine(obs, point, radius_km) for vid, point in sorted(predictions.items())
    }
    best_vid = min(distances, key=lambda vid: (distances[vid], vid))
    best = distances[best_vid]
    assigned = best_vid if best <= tau else NEW_TRACK
    return AssociationDecision(
        object_id=observation.object_id,
        observed=obs,
        observation_time=observation.t,
        distances_km=distances,
        assigned=assigned,
        winning_distance_km=best,
    )


def associate_batch(
    observations: list[AisMessage],
    bundles,
    tau: float = math.inf,
    radius_km: float = EARTH_RADIUS_KM,
) -> list[AssociationDecision]:
    """Associate time-ordered observations, advancing predictions incrementally.

    No exclusivity constraint: many observations may map to one track."""
    if any(b.t > a.t for a, b in zip(observations[1:], observations)):
        raise ValueError("observations must be sorted by timestamp")
    states: dict[str, RolloutState] = {}
    decisions = []
    for obs in observations:
        preds = predict_positions(bundles, obs.t, states=states)
        decisions.append(associate(obs, preds, tau=tau, radius_km=radius_km))
    return decisions


def decisions_to_csv(decisions: list[AssociationDecision], vessel_ids: list[str]) -> str:
    """CSV export: OBJECT_ID, ASSIGNED_VID, WINNING_DISTANCE_KM, DIST_<vid>..."""
    vids = sorted(vessel_ids)
    header = ["OBJECT_ID", "ASSIGNED_VID", "WINNING_DISTANCE_KM"] + [f"DIST_{v}" for v in vids]
    lines = [",".join(header)]
    for d in decisions:
        row = [str(d.object_id), d.assigned, f"{d.winning_distance_km!r}"]
        row += [f"{d.distances_km[v]!r}" for v in vids]
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def decisions_from_csv(text: str) -> list[tuple[int, str]]:
    """Read back (object_id, assigned_vid) pairs from a decisions CSV."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    out = []
    for ln in lines[1:]:
        parts = ln.split(",")
        out.append((int(parts[0]), parts[1]))
    return out
