"""``key = value`` run configuration.

One assignment per line, lists comma-separated, ``#`` starts a comment.
Every key is optional; omitted keys take the defaults below. The default
output directory can be set with the ``QFE_OUTPUT_DIR`` environment
variable.

==========================  ==============================  =================
key                         meaning                         default
==========================  ==============================  =================
response                    linear | sigmoid | sinusoid |   sigmoid
                            sampled
response_params             family coefficients             family defaults
response_file               CSV ``x,phi[,vis]`` (sampled)   (none)
vis                         constant visibility             0.95
domain                      x_min, x_max in volts           0, 3
probes                      noon2 and/or single             noon2, single
n_resources                 resource budgets N_r            800, 1900
n_points                    acquired fiducial points M      100
n_s_values                  subset sizes, each in [2, M]    2 ... 100 ladder
methods                     nearest and/or linear           nearest, linear
reference_n_s               reference grid size             500
reference_n_resources       reference budget per point      60000
reference_probe             probe used for the reference    noon2
reference_mode              full | crb | exact              full
mc_reps                     Monte-Carlo repetitions         500
mode                        full | crb | exact              full
seed                        master seed                     0
resource_convention         per_shot | per_resource         per_shot
n_phi, n_v                  posterior grid resolution       512, 256
workers                     campaign worker threads         1
output_dir                  output directory                $QFE_OUTPUT_DIR or
                                                            qfe_output
==========================  ==============================  =================
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable

from .campaign import MODES, CampaignConfig, default_n_s_values
from .errors import ConfigError, DataError
from .functions import InterpolationMethod
from .measurement import RESOURCE_CONVENTIONS, ProbeModel
from .simulate import DEFAULT_DOMAIN, DEFAULT_VISIBILITY, FAMILY_PARAMS, Family, ResponseModel

OUTPUT_ENV = "QFE_OUTPUT_DIR"


def _int(text: str) -> int:
    return int(text)


def _float(text: str) -> float:
    return float(text)


def _list(cast):
    def parse(text: str):
        items = [t.strip() for t in text.split(",")]
        if any(not t for t in items):
            raise ValueError("empty list element")
        return [cast(t) for t in items]

    return parse


def _choice(options):
    def parse(text: str):
        if text not in options:
            raise ValueError(f"expected one of {', '.join(options)}")
        return text

    return parse


def _probe(text: str) -> str:
    return ProbeModel.from_name(text).name


def _method(text: str) -> str:
    return InterpolationMethod.from_name(text).value


def _str(text: str) -> str:
    if not text:
        raise ValueError("empty value")
    return text


# key -> (parser, default or factory)
SCHEMA: dict[str, tuple[Callable[[str], Any], Any]] = {
    "response": (_choice([f.value for f in Family]), "sigmoid"),
    "response_params": (_list(_float), None),
    "response_file": (_str, None),
    "vis": (_float, None),
    "domain": (_list(_float), list(DEFAULT_DOMAIN)),
    "probes": (_list(_probe), ["noon2", "single"]),
    "n_resources": (_list(_int), [800, 1900]),
    "n_points": (_int, 100),
    "n_s_values": (_list(_int), None),
    "methods": (_list(_method), ["nearest", "linear"]),
    "reference_n_s": (_int, 500),
    "reference_n_resources": (_int, 60000),
    "reference_probe": (_probe, "noon2"),
    "reference_mode": (_choice(MODES), "full"),
    "mc_reps": (_int, 500),
    "mode": (_choice(MODES), "full"),
    "seed": (_int, 0),
    "resource_convention": (_choice(RESOURCE_CONVENTIONS), "per_shot"),
    "n_phi": (_int, 512),
    "n_v": (_int, 256),
    "workers": (_int, 1),
    "output_dir": (_str, None),
}


@dataclass(frozen=True)
class RunConfig:
    """Parsed configuration: every key of :data:`SCHEMA` with its value."""

    values: dict
    base_dir: str = "."

    def __getitem__(self, key):
        return self.values[key]

    @property
    def output_dir(self) -> Path:
        out = self.values["output_dir"] or os.environ.get(OUTPUT_ENV) or "qfe_output"
        return Path(out)

    @property
    def workers(self) -> int:
        return self.values["workers"]

    def response(self) -> ResponseModel:
        v = self.values
        domain = tuple(v["domain"])
        if v["response_file"] is not None:
            from .io import read_response_csv

            path = Path(v["response_file"])
            if not path.is_absolute():
                path = Path(self.base_dir) / path
            return read_response_csv(path, domain=domain, visibility=v["vis"])
        vis = DEFAULT_VISIBILITY if v["vis"] is None else v["vis"]
        params = tuple(v["response_params"] or ())
        return ResponseModel(Family(v["response"]), params, visibility=vis, domain=domain)

    def campaign(self) -> CampaignConfig:
        v = self.values
        return CampaignConfig(
            response=self.response(),
            probes=tuple(ProbeModel.from_name(p) for p in v["probes"]),
            n_resources_list=tuple(v["n_resources"]),
            n_points=v["n_points"],
            n_s_values=tuple(v["n_s_values"]) if v["n_s_values"] is not None else None,
            methods=tuple(InterpolationMethod(m) for m in v["methods"]),
            reference_n_s=v["reference_n_s"],
            reference_n_resources=v["reference_n_resources"],
            reference_probe=ProbeModel.from_name(v["reference_probe"]),
            reference_mode=v["reference_mode"],
            mc_reps=v["mc_reps"],
            mode=v["mode"],
            seed=v["seed"],
            resource_convention=v["resource_convention"],
            n_phi=v["n_phi"],
            n_v=v["n_v"],
        )

    def to_text(self) -> str:
        """Serialise every key; ``parse_config(to_text())`` reproduces this config."""
        lines = []
        for key in SCHEMA:
            val = self.values[key]
            if val is None:
                continue
            if isinstance(val, list):
                text = ", ".join(_scalar(x) for x in val)
            else:
                text = _scalar(val)
            lines.append(f"{key} = {text}")
        return "\n".join(lines) + "\n"


def _scalar(x) -> str:
    return repr(x) if isinstance(x, float) else str(x)


def parse_config(text: str, base_dir: str | os.PathLike = ".") -> RunConfig:
    """Parse and validate configuration text.

    Raises :class:`ConfigError` naming the key and line on unknown or
    duplicate keys, malformed values and constraint violations.
    """
    seen: dict[str, int] = {}
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("expected 'key = value'", line=lineno)
        key, _, val = (part.strip() for part in line.partition("="))
        if key not in SCHEMA:
            raise ConfigError("unknown key", key=key, line=lineno)
        if key in seen:
            raise ConfigError(f"duplicate key (first set on line {seen[key]})", key=key, line=lineno)
        seen[key] = lineno
        parser, _ = SCHEMA[key]
        try:
            values[key] = parser(val)
        except (ValueError, DataError) as exc:
            raise ConfigError(f"invalid value '{val}': {exc}", key=key, line=lineno) from None

    for key, (_, default) in SCHEMA.items():
        values.setdefault(key, list(default) if isinstance(default, list) else default)

    def fail(key, msg):
        raise ConfigError(msg, key=key, line=seen.get(key))

    m = values["n_points"]
    if m < 2:
        fail("n_points", "n_points must be >= 2")
    if values["n_s_values"] is None:
        values["n_s_values"] = list(default_n_s_values(m))
    for n_s in values["n_s_values"]:
        if n_s > m:
            fail("n_s_values", f"n_s exceeds acquired points ({n_s} > {m})")
        if n_s < 2:
            fail("n_s_values", f"n_s must be >= 2, got {n_s}")
    if values["mc_reps"] < 2:
        fail("mc_reps", "mc_reps must be >= 2")
    for key in ("reference_n_s", "reference_n_resources", "n_phi", "n_v", "workers"):
        if values[key] < 1:
            fail(key, f"{key} must be positive")
    if any(n < 1 for n in values["n_resources"]):
        fail("n_resources", "resource budgets must be positive")
    if values["n_phi"] < 16 or values["n_v"] < 16:
        fail("n_phi" if values["n_phi"] < 16 else "n_v", "grid resolution must be at least 16")
    if values["seed"] < 0:
        fail("seed", "seed must be nonnegative")
    if len(values["domain"]) != 2 or not values["domain"][1] > values["domain"][0]:
        fail("domain", "domain must be 'x_min, x_max' with x_max > x_min")
    if values["vis"] is not None and not 0.0 <= values["vis"] <= 1.0:
        fail("vis", "visibility must lie in [0, 1]")
    if values["response"] == "sampled" and values["response_file"] is None:
        fail("response", "sampled response needs response_file")
    if values["response_file"] is not None:
        if "response" in seen and values["response"] != "sampled":
            fail("response_file", "response_file requires response = sampled")
        values["response"] = "sampled"
    if values["response_params"] is not None and values["response"] != "sampled":
        names, _ = FAMILY_PARAMS[Family(values["response"])]
        if len(values["response_params"]) != len(names):
            fail("response_params", f"{values['response']} takes {len(names)} parameters ({', '.join(names)})")

    config = RunConfig(values, str(base_dir))
    try:
        config.campaign()
    except (DataError, OSError) as exc:
        raise ConfigError(str(exc)) from None
    return config


def load_config(path) -> tuple[RunConfig, str]:
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    return parse_config(text, base_dir=path.parent), text
