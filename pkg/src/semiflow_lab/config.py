"""Scenario configuration: a versioned JSON document with every default materialised."""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import ConfigError

SCHEMA_VERSION = 1

DEFAULTS: dict = {
    "schema_version": SCHEMA_VERSION,
    "model": {"name": "doubling"},
    "roof": {"name": "cosine", "base": 2.5, "amplitude": 0.5, "frequency": 1},
    "numerics": {
        "N": 64,
        "h_u": 0.0078125,
        "interp_order": 6,
        "delta": 0.0,
        "eta": 0.5,
        "eps": None,
        "tau_per_unit": 64,
        "laplace_dt": 0.03125,
    },
    "identities": {
        "l_at_times": [0.7, 3.4, 10.1],
        "convolution_times": [2.5, 7.0],
        "renewal_s": [[0.5, 0.0], [0.5, 5.0]],
        "random_count": 20,
        "renewal_count": 3,
        "ibp_s": [1.0, 2.0],
        "ibp_m": 3,
        "point_count": 400,
    },
    "spectrum": {"slope_h": 1e-4},
    "probe": {"a": 0.0, "b": [10.0, 50.0, 100.0], "n_max": 30, "samples": 16, "n_burn": 5},
    "transform": {"s": [[0.5, 0.0]], "t_max": 40.0},
    "invert": {"a": 0.5, "b_max": 200.0, "db": None, "t": [5.0], "shifted_a": None},
    "decay": {"t_start": 0.0, "t_stop": 40.0, "t_step": 1.0, "window": [5.0, 40.0], "step": 1.0,
              "commutation_t": 5.0},
    "correlation": {"t": [0.0, 2.0, 5.0, 10.0], "samples": 200000, "w_profile": "cos"},
    "observable": {"margin": 0.25, "profile": "mixed", "flow_profile": "bump", "mean_zero": True,
                   "order": 4},
    "seed": 0,
}


def _merge(base: dict, over: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, val in over.items():
        where = f"{path}.{key}" if path else key
        if key not in base:
            raise ConfigError(where, "unknown field")
        if isinstance(base[key], dict) and key not in ("model", "roof"):
            if not isinstance(val, dict):
                raise ConfigError(where, "expected an object")
            out[key] = _merge(base[key], val, where)
        else:
            out[key] = copy.deepcopy(val)
    return out


@dataclass
class Scenario:
    """Fully resolved scenario; ``data`` is the echo written into reports."""

    data: dict
    source: str = "<defaults>"

    def __getitem__(self, key):
        return self.data[key]

    @property
    def numerics(self) -> dict:
        return self.data["numerics"]

    @property
    def seed(self) -> int:
        return int(self.data["seed"])

    def echo(self) -> dict:
        return copy.deepcopy(self.data)

    def with_seed(self, seed: int | None) -> "Scenario":
        if seed is None:
            return self
        data = copy.deepcopy(self.data)
        data["seed"] = int(seed)
        return validate(data, self.source)

    # builders

    def build(self):
        """``(model, base grid, roof, suspension grid)`` for this scenario."""
        from .base import BaseGrid
        from .models import build_model
        from .roof import build_roof
        from .suspension import SuspensionGrid

        model = build_model(self.data["model"])
        roof = build_roof(self.data["roof"], model)
        num = self.numerics
        base = BaseGrid(model, num["N"])
        grid = SuspensionGrid(base, roof, h=num["h_u"], order=num["interp_order"])
        return model, base, roof, grid

    def observable_spec(self):
        from .suspension import ObservableSpec

        return ObservableSpec(**self.data["observable"])


def _finite_partition(model_spec: dict) -> bool:
    return model_spec.get("name") in ("doubling", "linear")


def validate(data: dict, source: str = "<dict>") -> Scenario:
    """Merge over defaults and check validity windows (field-precise errors)."""
    if not isinstance(data, dict):
        raise ConfigError("", "top level must be an object")
    version = data.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigError("schema_version", f"unsupported version {version} (expected {SCHEMA_VERSION})")
    merged = _merge(DEFAULTS, data)
    num = merged["numerics"]
    for key in ("N", "interp_order", "tau_per_unit"):
        if not isinstance(num[key], int) or num[key] < 2:
            raise ConfigError(f"numerics.{key}", "must be an integer >= 2")
    h = num["h_u"]
    if not isinstance(h, (int, float)) or h <= 0 or abs(round(1 / h) * h - 1) > 1e-12:
        raise ConfigError("numerics.h_u", "must be positive with 1/h_u an integer")
    eta = num["eta"]
    if not isinstance(eta, (int, float)) or not 0.0 < eta < 1.0:
        raise ConfigError("numerics.eta", f"Hölder exponent must lie in (0, 1), got {eta}")
    delta = num["delta"]
    if not isinstance(delta, (int, float)) or delta < 0:
        raise ConfigError("numerics.delta", f"weight exponent must be >= 0, got {delta}")
    finite = _finite_partition(merged["model"])
    eps = num["eps"]
    if eps is None:
        eps = 0.1 if (finite and delta == 0) else min(delta / 2, 0.1)
        num["eps"] = eps
    if not isinstance(eps, (int, float)) or eps < 0:
        raise ConfigError("numerics.eps", f"strip half-width must be >= 0, got {eps}")
    if not (finite and delta == 0) and delta <= eps:
        raise ConfigError("numerics.delta",
                          f"need delta > eps (got delta={delta}, eps={eps}); delta = 0 is allowed "
                          "only for finite partitions with bounded roof")
    obs = merged["observable"]
    r = obs["margin"]
    if not isinstance(r, (int, float)) or not 0.0 < r < 1.0:
        raise ConfigError("observable.margin", f"support margin r must lie in (0, 1), got {r}")
    if not isinstance(obs["order"], int) or obs["order"] < 1:
        raise ConfigError("observable.order", "derivative stack order must be an integer >= 1")
    seed = merged["seed"]
    if not isinstance(seed, int) or not 0 <= seed < 2 ** 64:
        raise ConfigError("seed", "must be an unsigned 64-bit integer")
    win = merged["decay"]["window"]
    if len(win) != 2 or not win[0] < win[1]:
        raise ConfigError("decay.window", "must be [start, stop] with start < stop")
    inv = merged["invert"]
    if inv["b_max"] < 50:
        raise ConfigError("invert.b_max", "must be at least 50")
    try:
        from .models import build_model
        from .roof import build_roof

        model = build_model(merged["model"])
        roof = build_roof(merged["roof"], model)
    except (ValueError, TypeError, KeyError) as exc:
        raise ConfigError("model/roof", str(exc)) from None
    y = np.linspace(model.edges[0], model.edges[-1], 4097)
    inf_phi = float(np.min(roof(y)))
    if inf_phi < 2.0 - 1e-12:
        raise ConfigError("roof", f"roof infimum must be >= 2, got {inf_phi:.6g}")
    return Scenario(merged, source)


def load(path: str | Path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError("", f"cannot read {path}: {exc}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("", f"invalid JSON at line {exc.lineno}: {exc.msg}") from None
    return validate(data, str(path))


def reference_path() -> Path:
    return Path(str(resources.files("semiflow_lab") / "scenarios" / "reference.json"))


def reference() -> Scenario:
    return load(reference_path())
