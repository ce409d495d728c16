"""
Stationary kernel expressions for scalar (time) inputs.

Base kernels SE, RQ and SP combine through Sum and Product nodes. The tree is a
pydantic model so it round-trips through JSON, e.g.

    {"kind": "product", "factors": [
        {"kind": "rq", "sigma": {"value": 1.0, "trainable": false}, ...},
        {"kind": "sp", "period": {"value": 24.0, "trainable": false}, ...}]}
"""

from pathlib import Path
from typing import Annotated, Literal, Union

import numpy as np
from pydantic import BaseModel, Field, TypeAdapter, ValidationError

from utils.errors import ConfigError, KernelError


class Hyper(BaseModel):
    """One positive hyperparameter; frozen ones are excluded from fitting."""
    value: float = Field(gt=0)
    trainable: bool = True


def _hyper(value: float, trainable: bool = True) -> Hyper:
    return Hyper(value=value, trainable=trainable)


class SEKernel(BaseModel):
    kind: Literal["se"] = "se"
    sigma: Hyper = Field(default_factory=lambda: _hyper(1.0))
    lengthscale: Hyper = Field(default_factory=lambda: _hyper(1.0))

    def evaluate(self, d: np.ndarray) -> np.ndarray:
        ell = self.lengthscale.value
        return np.square(self.sigma.value) * np.exp(-d * d / (2.0 * ell * ell))

    def hypers(self) -> list[Hyper]:
        return [self.sigma, self.lengthscale]


class RQKernel(BaseModel):
    kind: Literal["rq"] = "rq"
    sigma: Hyper = Field(default_factory=lambda: _hyper(1.0))
    alpha: Hyper = Field(default_factory=lambda: _hyper(1.0))
    lengthscale: Hyper = Field(default_factory=lambda: _hyper(1.0))

    def evaluate(self, d: np.ndarray) -> np.ndarray:
        a, ell = self.alpha.value, self.lengthscale.value
        return np.square(self.sigma.value) * (1.0 + d * d / (2.0 * a * ell * ell)) ** (-a)

    def hypers(self) -> list[Hyper]:
        return [self.sigma, self.alpha, self.lengthscale]


class SPKernel(BaseModel):
    kind: Literal["sp"] = "sp"
    sigma: Hyper = Field(default_factory=lambda: _hyper(1.0))
    period: Hyper = Field(default_factory=lambda: _hyper(24.0, trainable=False))
    lengthscale: Hyper = Field(default_factory=lambda: _hyper(1.0))

    def evaluate(self, d: np.ndarray) -> np.ndarray:
        ell = self.lengthscale.value
        s = np.sin(np.pi * d / self.period.value)
        return np.square(self.sigma.value) * np.exp(-2.0 * s * s / (ell * ell))

    def hypers(self) -> list[Hyper]:
        return [self.sigma, self.period, self.lengthscale]


class SumKernel(BaseModel):
    kind: Literal["sum"] = "sum"
    terms: list["KernelExpr"] = Field(min_length=1)

    def evaluate(self, d: np.ndarray) -> np.ndarray:
        out = self.terms[0].evaluate(d)
        for term in self.terms[1:]:
            out = out + term.evaluate(d)
        return out

    def hypers(self) -> list[Hyper]:
        return [h for term in self.terms for h in term.hypers()]


class ProductKernel(BaseModel):
    kind: Literal["product"] = "product"
    factors: list["KernelExpr"] = Field(min_length=1)

    def evaluate(self, d: np.ndarray) -> np.ndarray:
        out = self.factors[0].evaluate(d)
        for factor in self.factors[1:]:
            out = out * factor.evaluate(d)
        return out

    def hypers(self) -> list[Hyper]:
        return [h for factor in self.factors for h in factor.hypers()]


KernelExpr = Annotated[
    Union[SEKernel, RQKernel, SPKernel, SumKernel, ProductKernel],
    Field(discriminator="kind"),
]
SumKernel.model_rebuild()
ProductKernel.model_rebuild()

_adapter: TypeAdapter = TypeAdapter(KernelExpr)


def kernel_matrix(k: KernelExpr, xa: np.ndarray, xb: np.ndarray) -> np.ndarray:
    """Cross-covariance matrix k(xa_i, xb_j) using d = |xa_i - xb_j|."""
    xa = np.asarray(xa, dtype=float).reshape(-1)
    xb = np.asarray(xb, dtype=float).reshape(-1)
    try:
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            out = k.evaluate(np.abs(xa[:, None] - xb[None, :]))
    except OverflowError as e:
        raise KernelError(f"kernel overflowed: {e}") from e
    if not np.all(np.isfinite(out)):
        raise KernelError("kernel produced non-finite values; check hyperparameters")
    return out


def kernel_eval(k: KernelExpr, x: float, x_hat: float) -> float:
    return float(kernel_matrix(k, np.array([x]), np.array([x_hat]))[0, 0])


def trainable(k: KernelExpr) -> list[Hyper]:
    return [h for h in k.hypers() if h.trainable]


def get_params(k: KernelExpr) -> np.ndarray:
    return np.array([h.value for h in trainable(k)], dtype=float)


def with_params(k: KernelExpr, values) -> KernelExpr:
    """Copy of `k` with trainable hyperparameters replaced in tree order."""
    clone = k.model_copy(deep=True)
    slots = trainable(clone)
    values = np.asarray(values, dtype=float).reshape(-1)
    if len(values) != len(slots):
        raise KernelError(f"expected {len(slots)} trainable values, got {len(values)}")
    for hyper, value in zip(slots, values):
        if not np.isfinite(value) or value <= 0:
            raise KernelError(f"hyperparameter must be positive and finite, got {value}")
        hyper.value = float(value)
    return clone


def se_kernel(sigma: float = 1.0, lengthscale: float = 1.0, train_sigma: bool = True) -> SEKernel:
    return SEKernel(sigma=_hyper(sigma, train_sigma), lengthscale=_hyper(lengthscale))


def rq_kernel(sigma: float = 1.0, alpha: float = 1.0, lengthscale: float = 1.0,
              train_sigma: bool = True) -> RQKernel:
    return RQKernel(sigma=_hyper(sigma, train_sigma), alpha=_hyper(alpha), lengthscale=_hyper(lengthscale))


def sp_kernel(sigma: float = 1.0, period: float = 24.0, lengthscale: float = 1.0,
              train_sigma: bool = True) -> SPKernel:
    return SPKernel(sigma=_hyper(sigma, train_sigma), period=_hyper(period, False), lengthscale=_hyper(lengthscale))


def default_kernel(period: float = 24.0) -> ProductKernel:
    """Quasi-periodic RQ x SP with unit amplitude and the period frozen."""
    return ProductKernel(factors=[
        rq_kernel(sigma=1.0, alpha=1.0, lengthscale=10.0, train_sigma=False),
        sp_kernel(sigma=1.0, period=period, lengthscale=1.0, train_sigma=False),
    ])


def base_kernels(period: float = 24.0) -> dict[str, KernelExpr]:
    """The single-family kernels the composite is compared against."""
    return {
        "SE": se_kernel(sigma=1.0, lengthscale=10.0, train_sigma=False),
        "RQ": rq_kernel(sigma=1.0, alpha=1.0, lengthscale=10.0, train_sigma=False),
        "SP": sp_kernel(sigma=1.0, period=period, lengthscale=1.0, train_sigma=False),
        "RQxSP": default_kernel(period),
    }


def parse_kernel(text: str) -> KernelExpr:
    try:
        return _adapter.validate_json(text)
    except ValidationError as e:
        first = e.errors()[0]
        field = ".".join(str(p) for p in first["loc"])
        raise ConfigError(first["msg"], field=field or "kernel") from e


def load_kernel(path: str | Path) -> KernelExpr:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"kernel file not found: {path}", field="kernel")
    return parse_kernel(path.read_text(encoding="utf-8"))


def dump_kernel(k: KernelExpr) -> str:
    return _adapter.dump_json(k, indent=2).decode("utf-8")
