from pathlib import Path
from typing import Literal

from pydantic import BaseModel, Field, TypeAdapter, ValidationError, model_validator

from ltbridge.bridge.mixing_laws import MixingLaw
from ltbridge.common.config import ALPHA, DT, N_PATHS, WORKERS
from ltbridge.common.errors import ConfigError

SUITES = ("core", "bridge", "decomposition", "reversal", "independence", "survival", "semigroup", "entrance", "numerics", "all")

# horizons used when --horizon is not given
DEFAULT_HORIZONS = {"killed_bm": 2.0, "ou": 5.0, "sq_bessel": 5.0, "bessel3": 2.0, "custom": 1.0}


class ExperimentConfig(BaseModel):
    """Settings of one CLI command; flags override the environment defaults."""

    spec: Path | None = None
    y: float | None = None
    x0: float | None = None
    a: float | None = Field(default=None, ge=0)
    g: MixingLaw | None = None
    n: int = Field(default=N_PATHS, gt=0)
    dt: float = Field(default=DT, gt=0)
    eps: float | None = Field(default=None, gt=0)
    horizon: float | None = Field(default=None, gt=0)
    seed: int = Field(ge=0)
    out: Path | None = None
    launcher: Literal["exact", "offset"] = "exact"
    alpha: float = Field(default=ALPHA, gt=0, lt=1)
    suite: Literal[SUITES] = "core"
    scale: Literal["desk", "quick"] = "desk"
    workers: int = Field(default=WORKERS, gt=0)
    paths: bool = False
    bridge_correction: bool = False

    @model_validator(mode="after")
    def _exclusive_target(self):
        if self.a is not None and self.g is not None:
            raise ValueError("--a and --g are exclusive")
        return self


_LAW = TypeAdapter(MixingLaw)


def parse_law(text: str) -> MixingLaw:
    """``kind`` or ``kind:key=value,key=value``, e.g. ``gamma:shape=2,rate=1``."""
    kind, _, rest = text.partition(":")
    fields: dict = {"kind": kind.strip()}
    for item in filter(None, (part.strip() for part in rest.split(","))):
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"Invalid law parameter {item!r} in {text!r}")
        try:
            fields[key.strip()] = float(value)
        except ValueError:
            raise ConfigError(f"Invalid number {value!r} in {text!r}")
    try:
        return _LAW.validate_python(fields)
    except ValidationError as e:
        raise ConfigError(f"Invalid mixing law {text!r}: {e.errors()[0]['msg']}")
