"""``key=value`` configuration files shared by the simulator, bench and resolver.

Blank lines and ``#`` comments are ignored. Simulator keys::

    airtime_ms rx1_delay_ms rx2_delay_ms rx2_len_ms poll_delay_ms
    delivery_window enforce_duty_cycle
    dns http base decomp        # constant:v | uniform:lo,hi | empirical:path
    seed n scenario

Resolver keys::

    resolver=host:port registry=http://... zone=schc.example.
    ttl capacity rule_id_width dns_failure_policy=serve-stale|fail-closed
    dns_timeout retries
"""

from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigError
from .latency import parse_distribution
from .resolver import DEFAULT_CACHE_TTL_S, DEFAULT_CAPACITY, FAIL_CLOSED, SERVE_STALE
from .sim import ClassATimingModel, LatencyModel

SIM_KEYS = {"airtime_ms", "rx1_delay_ms", "rx2_delay_ms", "rx2_len_ms", "poll_delay_ms",
            "delivery_window", "enforce_duty_cycle", "dns", "http", "base", "decomp",
            "seed", "n", "scenario"}
RESOLVER_KEYS = {"resolver", "registry", "zone", "ttl", "capacity", "rule_id_width",
                 "dns_failure_policy", "dns_timeout", "retries"}


def parse_kv(text, where="<config>"):
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"{where}:{lineno}: expected key=value")
        key = key.strip()
        if key in out:
            raise ConfigError(f"{where}:{lineno}: duplicate key {key!r}")
        out[key] = value.strip()
    return out


def read_kv(path):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_kv(text, str(path))


def _float(values, key):
    try:
        return float(values[key])
    except ValueError:
        raise ConfigError(f"{key} must be a number, got {values[key]!r}") from None


def _int(values, key, lo=None):
    try:
        v = int(values[key])
    except ValueError:
        raise ConfigError(f"{key} must be an integer, got {values[key]!r}") from None
    if lo is not None and v < lo:
        raise ConfigError(f"{key} must be >= {lo}, got {v}")
    return v


def _bool(values, key):
    v = values[key].lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"{key} must be a boolean, got {values[key]!r}")


@dataclass(frozen=True)
class SimConfig:
    model: ClassATimingModel
    latency: LatencyModel
    seed: int = 0
    n: int = None
    scenario: int = None


def sim_config(values, base_dir=None):
    """Build a SimConfig from parsed key/values (unknown keys are an error)."""
    unknown = set(values) - SIM_KEYS - RESOLVER_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    model_args = {}
    for key in ("airtime_ms", "rx1_delay_ms", "rx2_delay_ms", "rx2_len_ms", "poll_delay_ms"):
        if key in values:
            model_args[key] = _float(values, key)
    if "delivery_window" in values:
        model_args["delivery_window"] = values["delivery_window"]
    if "enforce_duty_cycle" in values:
        model_args["enforce_duty_cycle"] = _bool(values, "enforce_duty_cycle")
    model = ClassATimingModel(**model_args)

    latency_args = {}
    for key, attr in (("dns", "dns"), ("http", "http"), ("base", "base_processing"),
                      ("decomp", "decompression")):
        if key in values:
            latency_args[attr] = parse_distribution(values[key], base_dir)
    latency = LatencyModel(**latency_args)

    seed = _int(values, "seed") if "seed" in values else 0
    n = _int(values, "n", lo=1) if "n" in values else None
    scenario = _int(values, "scenario") if "scenario" in values else None
    if scenario is not None and scenario not in (1, 2, 3, 4):
        raise ConfigError(f"scenario must be 1-4, got {scenario}")
    return SimConfig(model, latency, seed, n, scenario)


def load_sim_config(path=None, overrides=None):
    values = read_kv(path) if path else {}
    values.update(overrides or {})
    return sim_config(values, Path(path).parent if path else None)


@dataclass(frozen=True)
class ResolverConfig:
    resolver: tuple = ("127.0.0.1", 53)
    registry: str = None
    zone: str = "schc.example."
    ttl: float = DEFAULT_CACHE_TTL_S
    capacity: int = DEFAULT_CAPACITY
    rule_id_width: int = 8
    dns_failure_policy: str = SERVE_STALE
    dns_timeout: float = 2.0
    retries: int = 0


def parse_hostport(text, default_port=None):
    host, sep, port = text.rpartition(":")
    if not sep:
        if default_port is None:
            raise ConfigError(f"expected host:port, got {text!r}")
        return text, default_port
    host = host.strip("[]")
    if not port.isdigit() or not 0 <= int(port) < 65536:
        raise ConfigError(f"bad port in {text!r}")
    return host, int(port)


def resolver_config(values):
    unknown = set(values) - RESOLVER_KEYS - SIM_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    args = {}
    if "resolver" in values:
        args["resolver"] = parse_hostport(values["resolver"], 53)
    if "registry" in values:
        args["registry"] = values["registry"]
    if "zone" in values:
        args["zone"] = values["zone"]
    if "ttl" in values:
        args["ttl"] = _float(values, "ttl")
    if "capacity" in values:
        args["capacity"] = _int(values, "capacity", lo=1)
    if "rule_id_width" in values:
        args["rule_id_width"] = _int(values, "rule_id_width", lo=1)
    if "dns_failure_policy" in values:
        policy = values["dns_failure_policy"]
        if policy not in (SERVE_STALE, FAIL_CLOSED):
            raise ConfigError(f"dns_failure_policy must be {SERVE_STALE} or {FAIL_CLOSED}")
        args["dns_failure_policy"] = policy
    if "dns_timeout" in values:
        args["dns_timeout"] = _float(values, "dns_timeout")
    if "retries" in values:
        args["retries"] = _int(values, "retries", lo=0)
    return ResolverConfig(**args)
