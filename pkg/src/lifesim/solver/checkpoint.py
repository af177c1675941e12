"""Versioned checkpoint files for trained networks.

Plain pickle of numpy arrays with a schema version and a config hash; pickle
(unlike zip containers) carries no timestamps, so identical runs write
byte-identical files.
"""

from __future__ import annotations

import hashlib
import json
import pickle
from dataclasses import asdict
from pathlib import Path

from ..errors import ConfigError
from .actor_critic import TrainConfig
from .network import PolicyValueNet

FORMAT_VERSION = 1


def config_hash(config: TrainConfig) -> str:
    blob = json.dumps(asdict(config), sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def save_checkpoint(path: str | Path, net: PolicyValueNet, config: TrainConfig,
                    extra: dict | None = None) -> None:
    payload = {
        "format": FORMAT_VERSION,
        "obs_dim": net.obs_dim,
        "n_actions": net.n_actions,
        "hidden": net.hidden,
        "weights": net.parameters(),
        "config": asdict(config),
        "config_hash": config_hash(config),
        "extra": extra or {},
    }
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as f:
        pickle.dump(payload, f, protocol=4)


def load_checkpoint(path: str | Path) -> tuple[PolicyValueNet, dict]:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"checkpoint not found: {path}")
    with open(path, "rb") as f:
        payload = pickle.load(f)
    if payload.get("format") != FORMAT_VERSION:
        raise ConfigError(f"incompatible checkpoint format in {path}")
    net = PolicyValueNet(payload["obs_dim"], payload["n_actions"], tuple(payload["hidden"]), seed=0)
    net.set_parameters(payload["weights"])
    return net, payload
