import os
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from devchain.errors import InvalidConfig

DEVCHAIN_CONFIG = os.environ.get("DEVCHAIN_CONFIG", "network.yaml")
DEVCHAIN_DATA_DIR = os.environ.get("DEVCHAIN_DATA_DIR")
DEVCHAIN_KEY = os.environ.get("DEVCHAIN_KEY")
DEVCHAIN_ENDPOINT = os.environ.get("DEVCHAIN_ENDPOINT")
DEVCHAIN_STORE = os.environ.get("DEVCHAIN_STORE", ".devchain")

rpc_timeout = float(os.environ.get("DEVCHAIN_RPC_TIMEOUT", 10))
submit_retries = int(os.environ.get("DEVCHAIN_SUBMIT_RETRIES", 5))
submit_backoff = float(os.environ.get("DEVCHAIN_SUBMIT_BACKOFF", 0.2))
castore_max_bytes = int(os.environ.get("DEVCHAIN_CASTORE_MAX_BYTES", 0))

# GATEWAY
gateway_peer_endpoint = os.environ.get("DEVCHAIN_GATEWAY_ENDPOINT", "127.0.0.1:7051")
gateway_port = int(os.environ.get("DEVCHAIN_GATEWAY_PORT", 5001))
flask_debug = bool(int(os.environ.get("FLASK_DEBUG", 0)))

# ORDERING DEFAULTS
default_max_batch_size = 500
default_max_batch_wait_ms = 250
default_queue_capacity = 10_000

DAY_MS = 24 * 60 * 60 * 1000


@dataclass(frozen=True)
class OrgConfig:
    name: str
    host: str
    rpc_port: int

    @property
    def endpoint(self) -> str:
        return f"{self.host}:{self.rpc_port}"


@dataclass(frozen=True)
class OrdererConfig:
    host: str
    port: int
    key_file: str

    @property
    def endpoint(self) -> str:
        return f"{self.host}:{self.port}"


@dataclass(frozen=True)
class PolicyConfig:
    max_batch_size: int = default_max_batch_size
    max_batch_wait_ms: int = default_max_batch_wait_ms
    queue_capacity: int = default_queue_capacity


@dataclass
class NetworkConfig:
    orgs: list[OrgConfig]
    orderer: OrdererConfig
    policy: PolicyConfig = field(default_factory=PolicyConfig)
    time_scale_divisor: int = 1
    identities: list[dict] = field(default_factory=list)
    allocations: dict[str, int] = field(default_factory=dict)
    data_dir: str = "data"
    base_dir: Path = field(default_factory=Path.cwd)

    def org(self, name: str) -> OrgConfig:
        for org in self.orgs:
            if org.name == name:
                return org
        raise InvalidConfig(f"Organization {name} is not part of the network config")

    def resolve(self, path: str) -> Path:
        """Paths in the config file are relative to the file itself."""
        p = Path(path)
        return p if p.is_absolute() else self.base_dir / p

    @property
    def data_path(self) -> Path:
        if DEVCHAIN_DATA_DIR:
            return Path(DEVCHAIN_DATA_DIR)
        return self.resolve(self.data_dir)

    def genesis_document(self, orderer_public_key_hex: str) -> dict:
        return {
            "allocations": dict(sorted(self.allocations.items())),
            "identities": sorted(self.identities, key=lambda i: i["member_id"]),
            "orderer": orderer_public_key_hex,
            "orgs": [org.name for org in self.orgs],
            "time_scale_divisor": self.time_scale_divisor,
        }

    def validate(self):
        if not self.orgs:
            raise InvalidConfig("Network config needs at least one organization")

        endpoints = [org.endpoint for org in self.orgs] + [self.orderer.endpoint]
        if len(set(endpoints)) != len(endpoints):
            raise InvalidConfig(f"Endpoints must be unique: {endpoints}")

        names = [org.name for org in self.orgs]
        if len(set(names)) != len(names):
            raise InvalidConfig(f"Organization names must be unique: {names}")

        if self.time_scale_divisor < 1:
            raise InvalidConfig("time_scale_divisor must be >= 1")

        if self.policy.max_batch_size < 1 or self.policy.max_batch_wait_ms < 1:
            raise InvalidConfig("Batch size and batch wait must be >= 1")

        for member_id, cents in self.allocations.items():
            if not isinstance(cents, int) or cents < 0:
                raise InvalidConfig(f"Allocation for {member_id} must be non-negative cents")

        return self


def load_yaml(path) -> dict:
    with open(path) as file:
        content = yaml.safe_load(file)
    if content is None:
        return {}
    if not isinstance(content, dict):
        raise InvalidConfig(f"{path} does not contain a mapping")
    return content


def network_config_from_dict(content: dict, base_dir: Path | None = None) -> NetworkConfig:
    try:
        orgs = [
            OrgConfig(name=o["name"], host=o.get("host", "127.0.0.1"), rpc_port=int(o["rpc_port"]))
            for o in content["orgs"]
        ]
        o = content["orderer"]
        orderer = OrdererConfig(
            host=o.get("host", "127.0.0.1"), port=int(o["port"]), key_file=o["key_file"]
        )
        policy = PolicyConfig(**content.get("policy", {}))
    except (KeyError, TypeError, ValueError) as e:
        raise InvalidConfig(f"Network config is incomplete: {e}")

    return NetworkConfig(
        orgs=orgs,
        orderer=orderer,
        policy=policy,
        time_scale_divisor=int(content.get("time_scale_divisor", 1)),
        identities=list(content.get("identities", [])),
        allocations={k: int(v) for k, v in content.get("allocations", {}).items()},
        data_dir=content.get("data_dir", "data"),
        base_dir=base_dir or Path.cwd(),
    ).validate()


def load_network_config(path=None) -> NetworkConfig:
    path = Path(path or DEVCHAIN_CONFIG)
    if not path.exists():
        raise InvalidConfig(f"Network config {path} not found")
    return network_config_from_dict(load_yaml(path), base_dir=path.parent.resolve())
