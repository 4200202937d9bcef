"""Uniform cell-centered grids and the flux-form spatial operators.

All operators enforce zero flux through every boundary face (mirror ghost
cells), work in flux form so that the discrete integral of their output
telescopes to zero, and vanish identically on constant fields.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class GridShapeError(ValueError):
    """A field does not live on the domain it was combined with."""


@dataclass(frozen=True)
class Domain:
    """Axis-aligned box partitioned into uniform cells.

    ``lengths`` and ``cells`` are per-axis; spatial dimension is their
    common length and must be 1 or 2. Spacing is ``length / cells`` per
    axis. At least 3 cells per axis so every interior stencil exists.
    """

    lengths: tuple[float, ...]
    cells: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "lengths", tuple(float(x) for x in self.lengths))
        object.__setattr__(self, "cells", tuple(int(n) for n in self.cells))
        if len(self.lengths) != len(self.cells):
            raise ValueError("lengths and cells must have one entry per axis")
        if self.dim not in (1, 2):
            raise ValueError(f"dimension must be 1 or 2, got {self.dim}")
        if any(n < 3 for n in self.cells):
            raise ValueError(f"every axis needs at least 3 cells, got {self.cells}")
        if any(not (L > 0.0) or not math.isfinite(L) for L in self.lengths):
            raise ValueError(f"every length must be positive and finite, got {self.lengths}")
        object.__setattr__(self, "_spacing",
                           tuple(L / n for L, n in zip(self.lengths, self.cells)))

    @property
    def dim(self) -> int:
        return len(self.cells)

    @property
    def spacing(self) -> tuple[float, ...]:
        return self._spacing

    @property
    def shape(self) -> tuple[int, ...]:
        return self.cells

    @property
    def n_cells(self) -> int:
        return int(np.prod(self.cells))

    @property
    def measure(self) -> float:
        """Total measure of the box."""
        return float(np.prod(self.lengths))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    def centers(self, axis: int) -> np.ndarray:
        """Cell-center coordinates along one axis."""
        h = self.spacing[axis]
        return (np.arange(self.cells[axis]) + 0.5) * h

    def meshgrid(self) -> tuple[np.ndarray, ...]:
        """Cell-center coordinate arrays, one per axis, each of grid shape."""
        axes = [self.centers(k) for k in range(self.dim)]
        return tuple(np.meshgrid(*axes, indexing="ij"))


@dataclass(frozen=True)
class Field:
    """One scalar value per cell of a :class:`Domain` (row-major layout)."""

    values: np.ndarray
    domain: Domain

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.shape != self.domain.shape:
            raise GridShapeError(
                f"field shape {vals.shape} does not match domain cells {self.domain.shape}"
            )
        object.__setattr__(self, "values", vals)

    @classmethod
    def constant(cls, domain: Domain, value: float) -> "Field":
        return cls(np.full(domain.shape, float(value)), domain)

    @classmethod
    def _wrap(cls, values: np.ndarray, domain: Domain) -> "Field":
        """Construct without re-validating; callers guarantee the shape."""
        self = object.__new__(cls)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "domain", domain)
        return self

    @classmethod
    def from_function(cls, domain: Domain, fn) -> "Field":
        """Sample ``fn(*coords)`` at cell centers."""
        return cls(np.asarray(fn(*domain.meshgrid()), dtype=np.float64), domain)

    def copy(self) -> "Field":
        return Field(self.values.copy(), self.domain)

    @property
    def sup(self) -> float:
        return float(np.max(np.abs(self.values)))


def _check_on(f: Field, d: Domain) -> None:
    if f.domain != d:
        raise GridShapeError("field does not live on the given domain")


def _face_pad(flux: np.ndarray, axis: int) -> np.ndarray:
    """Append zero boundary-face fluxes on both ends of one axis."""
    shape = list(flux.shape)
    shape[axis] += 2
    out = np.zeros(shape)
    idx = [slice(None)] * flux.ndim
    idx[axis] = slice(1, -1)
    out[tuple(idx)] = flux
    return out


def laplacian_neumann(f: Field, d: Domain) -> Field:
    """Second-difference Laplacian with mirror ghost cells (zero-flux walls).

    Computed in flux form: interior face gradients, zero at boundary faces,
    then the per-cell flux difference. Constants map to exactly zero and the
    discrete integral of the result telescopes to zero.
    """
    _check_on(f, d)
    out = np.zeros(d.shape)
    for axis, h in enumerate(d.spacing):
        grad = _axis_diff(f.values, axis) / h
        out += _axis_diff(_face_pad(grad, axis), axis) / h
    return Field._wrap(out, d)


def diffusive_divergence(u: Field, params, d: Domain) -> Field:
    """Flux-form divergence of phi(u) * grad(u) with zero boundary flux.

    The face diffusivity is phi evaluated at the arithmetic mean of the two
    adjacent cell values. ``params`` supplies the diffusivity family (see
    :func:`kellerscope.model.phi`).
    """
    from .model import phi  # local import: model builds on grid

    _check_on(u, d)
    if np.min(u.values) < 0.0:
        raise ValueError("diffusive_divergence requires a nonnegative density")
    out = np.zeros(d.shape)
    vals = u.values
    for axis, h in enumerate(d.spacing):
        left = _axis_slice(vals, axis, slice(None, -1))
        right = _axis_slice(vals, axis, slice(1, None))
        face_phi = phi(0.5 * (left + right), params)
        flux = face_phi * (right - left) / h
        out += _axis_diff(_face_pad(flux, axis), axis) / h
    return Field._wrap(out, d)


def chemotactic_divergence(u: Field, v: Field, chi: float, d: Domain) -> Field:
    """Flux-form divergence of chi * u * grad(v), donor-cell upwinding.

    The face velocity is chi times the two-point gradient of v; the advected
    density is taken from the cell the velocity points away from. A face with
    exactly zero velocity carries zero flux. Boundary faces carry zero flux.

    Note the orientation: this returns the divergence itself, so with v
    increasing to the right the first cell's entry is positive. The evolution
    equation subtracts this term, which is what moves mass up the v-gradient.
    """
    _check_on(u, d)
    _check_on(v, d)
    if not chi > 0.0:
        raise ValueError(f"chi must be positive, got {chi}")
    out = np.zeros(d.shape)
    for axis, h in enumerate(d.spacing):
        v_left = _axis_slice(v.values, axis, slice(None, -1))
        v_right = _axis_slice(v.values, axis, slice(1, None))
        w = chi * (v_right - v_left) / h
        u_left = _axis_slice(u.values, axis, slice(None, -1))
        u_right = _axis_slice(u.values, axis, slice(1, None))
        donor = np.where(w > 0.0, u_left, u_right)
        flux = w * donor
        out += _axis_diff(_face_pad(flux, axis), axis) / h
    return Field._wrap(out, d)


def integrate(f: Field, d: Domain) -> float:
    """Midpoint-rule integral: sum of cell values times cell volume."""
    _check_on(f, d)
    return float(np.sum(f.values)) * d.cell_volume


def _axis_slice(a: np.ndarray, axis: int, sl: slice) -> np.ndarray:
    idx = [slice(None)] * a.ndim
    idx[axis] = sl
    return a[tuple(idx)]


def _axis_diff(a: np.ndarray, axis: int) -> np.ndarray:
    """Adjacent difference along one axis (np.diff without the dispatch)."""
    if axis == 0:
        return a[1:] - a[:-1]
    return a[:, 1:] - a[:, :-1]
