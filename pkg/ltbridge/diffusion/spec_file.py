from dataclasses import replace
from pathlib import Path
from typing import Literal

from pydantic import BaseModel, Field, ValidationError, model_validator

from ltbridge.common.errors import InvalidSpecError
from ltbridge.common.spec_guard import load_lenient_json
from ltbridge.diffusion.diffusion_spec import BUILTINS, DiffusionSpec, builtin, custom


class TransformEntry(BaseModel):
    kind: Literal["recurrent", "bessel_low", "bessel_high", "cond_exit_low", "cond_exit_high"]
    y: float


class SpecFile(BaseModel):
    """On-disk description of a diffusion: a builtin name with parameters, or custom coefficients."""

    model: str = Field(description="builtin model name or 'custom'")
    params: dict[str, float] = Field(default_factory=dict)
    l: float | None = Field(default=None, description="left endpoint (custom only)")
    r: float | None = Field(default=None, description="right endpoint (custom only)")
    anchor: float | None = None
    drift: str | None = Field(default=None, description="numpy expression in x (custom only)")
    sigma: str | None = Field(default=None, description="numpy expression in x (custom only)")
    transform: TransformEntry | None = None

    @model_validator(mode="after")
    def check_model(self) -> "SpecFile":
        if self.model == "custom":
            missing = [name for name in ("l", "r", "drift", "sigma") if getattr(self, name) is None]
            if missing:
                raise ValueError(f"custom model needs {missing}")
        elif self.model not in BUILTINS:
            raise ValueError(f"unknown model {self.model!r}; expected one of {sorted(BUILTINS)} or 'custom'")
        return self

    def to_spec(self) -> DiffusionSpec:
        if self.model == "custom":
            return custom(self.l, self.r, self.drift, self.sigma, anchor=self.anchor, params=self.params)
        spec = builtin(self.model, **self.params)
        if self.anchor is not None:
            spec = replace(spec, anchor=self.anchor).validate()
        return spec


def parse_spec(text: str) -> SpecFile:
    try:
        return SpecFile.model_validate(load_lenient_json(text))
    except ValidationError as e:
        raise InvalidSpecError(f"malformed spec file: {e.errors()[0]['msg']}")


def load_spec_file(path: str | Path) -> SpecFile:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise InvalidSpecError(f"cannot read spec file {path}: {e}")
    return parse_spec(text)
