"""Named initial-condition families with seeded perturbations."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .grid import Domain, Field


class ICName(str, enum.Enum):
    CONSTANT = "constant"
    GAUSSIAN_BUMP = "gaussian_bump"
    TWO_BUMPS = "two_bumps"
    CHECKERBOARD = "checkerboard"


@dataclass(frozen=True)
class ICSpec:
    name: ICName = ICName.CONSTANT
    amplitude: float = 1.0
    width: float = 0.1

    def __post_init__(self):
        object.__setattr__(self, "name", ICName(self.name))
        if self.amplitude < 0.0:
            raise ValueError(f"amplitude must be nonnegative, got {self.amplitude}")
        if not self.width > 0.0:
            raise ValueError(f"width must be positive, got {self.width}")


def _gaussian(domain: Domain, centers: tuple[float, ...], width: float) -> np.ndarray:
    grids = domain.meshgrid()
    r2 = sum((g - c) ** 2 for g, c in zip(grids, centers))
    return np.exp(-r2 / (2.0 * width**2))


def build_ic(spec: ICSpec, domain: Domain,
             rng: np.random.Generator | None = None,
             perturbation: float = 0.0) -> tuple[Field, Field]:
    """Build (u0, v0) for a named family; v0 starts equal to u0.

    With a generator and a positive perturbation level each field is
    scaled pointwise by (1 + perturbation * xi), xi uniform on [0, 1),
    which keeps the data nonnegative.
    """
    a = spec.amplitude
    if spec.name is ICName.CONSTANT:
        u = np.full(domain.shape, a)
    elif spec.name is ICName.GAUSSIAN_BUMP:
        center = tuple(L / 2.0 for L in domain.lengths)
        u = a * _gaussian(domain, center, spec.width)
    elif spec.name is ICName.TWO_BUMPS:
        lo = tuple(L / 3.0 for L in domain.lengths)
        hi = tuple(2.0 * L / 3.0 for L in domain.lengths)
        u = a * (_gaussian(domain, lo, spec.width) + _gaussian(domain, hi, spec.width))
    elif spec.name is ICName.CHECKERBOARD:
        idx = np.indices(domain.shape).sum(axis=0)
        u = a * (1.0 + 0.5 * np.where(idx % 2 == 0, 1.0, -1.0))
    else:  # pragma: no cover - enum is closed
        raise ValueError(f"unknown initial condition {spec.name}")
    v = u.copy()
    if rng is not None and perturbation > 0.0:
        u = u * (1.0 + perturbation * rng.random(domain.shape))
        v = v * (1.0 + perturbation * rng.random(domain.shape))
    return Field(u, domain), Field(v, domain)
