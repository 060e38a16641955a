from typing import Annotated, Literal, Union

import numpy as np
from pydantic import BaseModel, Field, model_validator
from scipy import stats


class ExponentialLaw(BaseModel):
    kind: Literal["exponential"] = "exponential"
    rate: float = Field(gt=0)

    def ppf(self, u: np.ndarray) -> np.ndarray:
        return -np.log1p(-np.asarray(u, dtype=float)) / self.rate

    def mean(self) -> float:
        return 1.0 / self.rate


class PointLaw(BaseModel):
    kind: Literal["point"] = "point"
    a: float = Field(ge=0)

    def ppf(self, u: np.ndarray) -> np.ndarray:
        return np.full(np.shape(u), self.a)

    def mean(self) -> float:
        return self.a


class UniformLaw(BaseModel):
    kind: Literal["uniform"] = "uniform"
    lo: float = Field(ge=0)
    hi: float

    @model_validator(mode="after")
    def _ordered(self):
        if not self.hi > self.lo:
            raise ValueError(f"Invalid uniform law on [{self.lo}, {self.hi}]")
        return self

    def ppf(self, u: np.ndarray) -> np.ndarray:
        return self.lo + (self.hi - self.lo) * np.asarray(u, dtype=float)

    def mean(self) -> float:
        return 0.5 * (self.lo + self.hi)


class GammaLaw(BaseModel):
    kind: Literal["gamma"] = "gamma"
    shape: float = Field(gt=0)
    rate: float = Field(gt=0)

    def ppf(self, u: np.ndarray) -> np.ndarray:
        return stats.gamma.ppf(np.asarray(u, dtype=float), self.shape, scale=1.0 / self.rate)

    def mean(self) -> float:
        return self.shape / self.rate


# laws of the local-time level of a randomized bridge, sampled by inverse CDF
MixingLaw = Annotated[Union[ExponentialLaw, PointLaw, UniformLaw, GammaLaw], Field(discriminator="kind")]
