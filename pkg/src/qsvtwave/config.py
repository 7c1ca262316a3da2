"""Run configuration: a flat JSON object mapped onto :class:`RunConfig`.

Every key is optional except ``n_x`` and ``Lx_kx0``.  Unknown keys are
rejected so that typos surface as configuration errors.  The config hash
stamped into output files is the SHA-256 of the canonical JSON dump.
"""

import dataclasses
import hashlib
import json
from dataclasses import dataclass

from .errors import ConfigError

VERSION = "0.1.0"

REQUIRED = ("n_x", "Lx_kx0")


@dataclass
class RunConfig:
    n_x: int
    Lx_kx0: float
    eps0: float = 1.0
    eps1: float = 1.0
    # QSVT solve; kappa_qsvt <= 0 means kappa_factor / s_min(A / nu)
    kappa_qsvt: float = 0.0
    kappa_factor: float = 1.5
    eps_qsvt: float = 1e-4
    oracle: str = "dilation"
    method: str = "average"
    # measurement
    half: str = "right"
    n_y: int = 6
    shots: int = 0
    seed: int = None
    source: str = "classical"
    k_B: int = 2
    N_EB: int = 4
    N_hw: int = 1
    mu: float = 0.15
    beta_sc: float = 1.0
    x_c: float = 0.0
    filter: str = "qsvt"
    two_gaussians: bool = False
    # scans
    axis: str = "kappa"
    kappas: tuple = (5.0, 10.0, 20.0, 40.0)
    epses: tuple = (1e-2, 1e-3, 1e-4, 1e-5, 1e-6)
    n_x_values: tuple = (3, 4, 5, 6)
    workers: int = 1
    plots: bool = True
    out: str = "out"

    def validate(self):
        def need(cond, msg):
            if not cond:
                raise ConfigError(msg)

        need(isinstance(self.n_x, int) and 2 <= self.n_x <= 10, "n_x must be an integer in [2, 10]")
        need(self.Lx_kx0 > 0, "Lx_kx0 must be positive")
        need(self.eps0 > 0 and self.eps1 > 0, "permittivities must be positive")
        need(self.kappa_qsvt >= 0, "kappa_qsvt must be non-negative")
        need(self.kappa_factor > 0, "kappa_factor must be positive")
        need(0 < self.eps_qsvt < 1, "eps_qsvt must lie in (0, 1)")
        need(self.oracle in ("dilation", "structured"), "oracle must be dilation or structured")
        need(self.method in ("average", "hadamard"), "method must be average or hadamard")
        need(self.half in ("full", "left", "right"), "half must be full, left or right")
        need(isinstance(self.n_y, int) and 1 <= self.n_y <= 12, "n_y must be an integer in [1, 12]")
        need(isinstance(self.shots, int) and self.shots >= 0, "shots must be a non-negative integer")
        need(self.shots == 0 or self.seed is not None, "seed is mandatory when shots > 0")
        need(self.source in ("classical", "qsvt"), "source must be classical or qsvt")
        need(self.N_EB >= 1 and self.N_hw >= 0 and self.k_B >= 0, "invalid power window")
        need(self.mu > 0, "mu must be positive")
        need(0 < self.beta_sc <= 1, "beta_sc must lie in (0, 1]")
        need(self.filter in ("qsvt", "exact"), "filter must be qsvt or exact")
        need(self.axis in ("kappa", "eps", "nx"), "axis must be kappa, eps or nx")
        need(len(self.kappas) >= 1 and all(k >= 1 for k in self.kappas), "kappas must be >= 1")
        need(len(self.epses) >= 1 and all(0 < e < 1 for e in self.epses), "epses must lie in (0, 1)")
        need(all(2 <= n <= 10 for n in self.n_x_values), "n_x_values must lie in [2, 10]")
        need(self.workers >= 1, "workers must be positive")
        return self

    def as_dict(self):
        d = dataclasses.asdict(self)
        for k, v in d.items():
            if isinstance(v, tuple):
                d[k] = list(v)
        return d

    def digest(self):
        """SHA-256 of the canonical JSON form, ignoring the output directory."""
        d = self.as_dict()
        d.pop("out")
        blob = json.dumps(d, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def header(self, command):
        return [f"qsvtwave {VERSION}", f"command={command}", f"config_sha256={self.digest()}"]


_FIELDS = {f.name: f for f in dataclasses.fields(RunConfig)}


def _coerce(name, value):
    default = _FIELDS[name].default
    if name == "seed":
        if value is None:
            return None
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError("seed must be an integer")
        return value
    if name in REQUIRED:
        kind = int if name == "n_x" else float
    elif isinstance(default, tuple):
        if not isinstance(value, (list, tuple)):
            raise ConfigError(f"{name} must be a list")
        elem = int if name == "n_x_values" else float
        try:
            return tuple(elem(v) for v in value)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{name}: {exc}") from None
    else:
        kind = type(default)
    if kind is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{name} must be true or false")
        return value
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{name} must be an integer")
        return value
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{name} must be a number")
        return float(value)
    if not isinstance(value, str):
        raise ConfigError(f"{name} must be a string")
    return value


def config_from_dict(data):
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    unknown = sorted(set(data) - set(_FIELDS))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    missing = [k for k in REQUIRED if k not in data]
    if missing:
        raise ConfigError(f"missing config keys: {', '.join(missing)}")
    kwargs = {k: _coerce(k, v) for k, v in data.items()}
    return RunConfig(**kwargs).validate()


def load_config(path):
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    return config_from_dict(data)
