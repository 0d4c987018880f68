"""Per-vessel model orchestration: split, train, persist, reload.

One LstmNetwork is trained per vessel. Each vessel draws a derived seed
(root seed XOR a digest of its id) so fleet results do not depend on
training order or scheduling.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ChecksumMismatch, MissingFile, SplitTooLarge, TrackTooShort, VersionMismatch
from .lstm import (
    AdamState,
    LstmLayerParams,
    LstmNetwork,
    TrainConfig,
    init_network,
    train_epoch,
)
from .preprocess import RegularTrack, ScalerParams, fit_scaler, make_windows, scale

log = logging.getLogger(__name__)

MODEL_FORMAT_VERSION = 1


@dataclass
class FleetConfig:
    min_points: int = 500
    period: float = 5.0
    window_size: int = 10
    test_len: int = 108  # held-out suffix length per vessel
    hidden: int = 32
    n_layers: int = 3
    dropout_rate: float = 0.2
    residual: bool = True
    train: TrainConfig = field(default_factory=TrainConfig)


@dataclass
class ModelBundle:
    vessel_id: str
    network: LstmNetwork
    scaler: ScalerParams
    window_size: int
    period: float
    last_training_window: np.ndarray  # (m, k) scaled
    train_end_time: float  # epoch seconds of the last training sample


def split(series: RegularTrack, w: int) -> tuple[np.ndarray, np.ndarray]:
    """Chronological split: train prefix of n-w rows, test suffix of w rows."""
    n = len(series)
    if w >= n:
        raise SplitTooLarge(f"test length {w} >= series length {n}")
    if w < 1:
        raise ValueError("test length must be >= 1")
    return series.features[: n - w], series.features[n - w :]


def vessel_seed(root_seed: int, vessel_id: str) -> int:
    digest = hashlib.sha256(vessel_id.encode()).digest()
    return (root_seed ^ int.from_bytes(digest[:8], "big")) & (2**64 - 1)


def train_vessel(series: RegularTrack, cfg: FleetConfig) -> tuple[ModelBundle, list[float]]:
    """Train one vessel's model on the series' training prefix.

    Returns the bundle and the per-epoch loss history."""
    n = len(series)
    m = cfg.window_size
    w = cfg.test_len
    train_len = n - w
    if train_len <= m:
        raise TrackTooShort(
            f"vessel {series.vessel_id}: {n} samples leave train_len {train_len} <= window {m}"
        )
    scaler = fit_scaler(series, train_len)
    scaled_train = scale(series.features[:train_len], scaler)
    windows = make_windows(scaled_train, m, train_len)
    seed = vessel_seed(cfg.train.rng_seed, series.vessel_id)
    rng = np.random.default_rng(seed)
    net = init_network(
        k=series.features.shape[1],
        hidden=cfg.hidden,
        n_layers=cfg.n_layers,
        dropout_rate=cfg.dropout_rate,
        residual=cfg.residual,
        rng=rng,
    )
    opt = AdamState.for_network(net)
    history = []
    for _ in range(cfg.train.epochs):
        history.append(train_epoch(net, windows.inputs, windows.targets, cfg.train, rng, opt))
    bundle = ModelBundle(
        vessel_id=series.vessel_id,
        network=net,
        scaler=scaler,
        window_size=m,
        period=series.period,
        last_training_window=scaled_train[train_len - m :].copy(),
        train_end_time=series.time_of(train_len - 1),
    )
    return bundle, history


def train_fleet(
    tracks: list[RegularTrack], cfg: FleetConfig, lenient: bool = False
) -> tuple[list[ModelBundle], dict[str, list[float]]]:
    """Train one model per track; results ordered by vessel_id."""
    bundles = []
    histories: dict[str, list[float]] = {}
    for series in sorted(tracks, key=lambda s: s.vessel_id):
        try:
            bundle, history = train_vessel(series, cfg)
        except TrackTooShort:
            if not lenient:
                raise
            log.warning("skipping vessel %s: track too short", series.vessel_id)
            continue
        bundles.append(bundle)
        histories[series.vessel_id] = history
    return bundles, histories


# --- persistence ---------------------------------------------------------


def _network_to_dict(net: LstmNetwork) -> dict:
    return {
        "k": net.input_dim,
        "hidden": net.hidden,
        "n_layers": len(net.layers),
        "out_dim": net.out_dim,
        "dropout_rate": net.dropout_rate,
        "residual": net.residual,
        "layers": [
            {"W": l.W.ravel().tolist(), "U": l.U.ravel().tolist(), "b": l.b.tolist()}
            for l in net.layers
        ],
        "dense_W": net.dense_W.ravel().tolist(),
        "dense_b": net.dense_b.tolist(),
    }


def _network_from_dict(d: dict) -> LstmNetwork:
    h = d["hidden"]
    layers = []
    for li, ld in enumerate(d["layers"]):
        d_in = d["k"] if li == 0 else h
        layers.append(
            LstmLayerParams(
                W=np.array(ld["W"]).reshape(4 * h, d_in),
                U=np.array(ld["U"]).reshape(4 * h, h),
                b=np.array(ld["b"]),
            )
        )
    return LstmNetwork(
        layers=layers,
        dense_W=np.array(d["dense_W"]).reshape(d["out_dim"], h),
        dense_b=np.array(d["dense_b"]),
        dropout_rate=d["dropout_rate"],
        residual=d["residual"],
    )


def bundle_to_json(bundle: ModelBundle, cfg: FleetConfig | None = None) -> str:
    doc = {
        "format_version": MODEL_FORMAT_VERSION,
        "vessel_id": bundle.vessel_id,
        "window_size": bundle.window_size,
        "period": bundle.period,
        "train_end_time": bundle.train_end_time,
        "scaler": {"min": bundle.scaler.min.tolist(), "max": bundle.scaler.max.tolist()},
        "last_training_window": bundle.last_training_window.tolist(),
        "network": _network_to_dict(bundle.network),
    }
    if cfg is not None:
        doc["train_config"] = {
            "learning_rate": cfg.train.learning_rate,
            "batch_size": cfg.train.batch_size,
            "epochs": cfg.train.epochs,
            "rng_seed": cfg.train.rng_seed,
        }
    return json.dumps(doc, sort_keys=True, indent=1)


def bundle_from_json(text: str) -> ModelBundle:
    doc = json.loads(text)
    if doc.get("format_version") != MODEL_FORMAT_VERSION:
        raise VersionMismatch(f"model format {doc.get('format_version')}, expected {MODEL_FORMAT_VERSION}")
    return ModelBundle(
        vessel_id=doc["vessel_id"],
        network=_network_from_dict(doc["network"]),
        scaler=ScalerParams(min=np.array(doc["scaler"]["min"]), max=np.array(doc["scaler"]["max"])),
        window_size=doc["window_size"],
        period=doc["period"],
        last_training_window=np.array(doc["last_training_window"]),
        train_end_time=doc["train_end_time"],
    )


def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def save_fleet(
    bundles: list[ModelBundle],
    directory: str | Path,
    cfg: FleetConfig | None = None,
    histories: dict[str, list[float]] | None = None,
    extra_meta: dict | None = None,
) -> Path:
    """Write model_<vid>.json per vessel plus a checksummed manifest.json.
    Returns the manifest path."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    entries = []
    for bundle in sorted(bundles, key=lambda b: b.vessel_id):
        name = f"model_{bundle.vessel_id}.json"
        data = bundle_to_json(bundle, cfg).encode()
        (directory / name).write_bytes(data)
        entries.append({"file": name, "vessel_id": bundle.vessel_id, "sha256": _sha256(data)})
    manifest = {"format_version": MODEL_FORMAT_VERSION, "models": entries}
    if extra_meta:
        manifest["meta"] = extra_meta
    path = directory / "manifest.json"
    path.write_text(json.dumps(manifest, sort_keys=True, indent=1))
    if histories is not None:
        (directory / "train_report.json").write_text(
            json.dumps({"epoch_loss": histories}, sort_keys=True, indent=1)
        )
    return path


def load_fleet(directory: str | Path) -> list[ModelBundle]:
    """Read a model directory back, verifying checksums."""
    directory = Path(directory)
    manifest_path = directory / "manifest.json"
    if not manifest_path.exists():
        raise MissingFile(str(manifest_path))
    manifest = json.loads(manifest_path.read_text())
    if manifest.get("format_version") != MODEL_FORMAT_VERSION:
        raise VersionMismatch(f"manifest format {manifest.get('format_version')}")
    bundles = []
    for entry in manifest["models"]:
        path = directory / entry["file"]
        if not path.exists():
            raise MissingFile(str(path))
        data = path.read_bytes()
        if _sha256(data) != entry["sha256"]:
            raise ChecksumMismatch(f"{path} checksum does not match manifest")
        bundles.append(bundle_from_json(data.decode()))
    return bundles
