"""Uniform 1D nuclear and 2D electronic grids.

The electronic grid is restricted to ranges symmetric about the origin and its
axes are built by mirroring a half axis, so x[i] == -x[-1-i] holds bitwise.
The symmetry metrics rely on that exactness.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def _n_points(vmin: float, vmax: float, step: float) -> int:
    if not (np.isfinite(vmin) and np.isfinite(vmax) and np.isfinite(step)):
        raise ValueError("grid bounds and spacing must be finite")
    if vmax <= vmin:
        raise ValueError(f"upper bound {vmax} must exceed lower bound {vmin}")
    if step <= 0.0:
        raise ValueError(f"grid spacing must be positive, got {step}")
    return int(round((vmax - vmin) / step)) + 1


@dataclass(frozen=True, eq=False)
class NuclearGrid:
    """Equidistant internuclear-distance grid (bohr)."""

    q_min: float
    q_max: float
    dq: float
    n_points: int
    points: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        if self.n_points < 3:
            raise ValueError(
                f"nuclear grid needs at least 3 points, got {self.n_points}"
            )
        pts = np.linspace(self.q_min, self.q_max, self.n_points)
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @classmethod
    def from_spacing(cls, q_min: float, q_max: float, dq: float) -> "NuclearGrid":
        n = _n_points(q_min, q_max, dq)
        # store the effective spacing implied by the endpoints
        return cls(q_min, q_max, (q_max - q_min) / (n - 1), n)

    def matches(self, other: "NuclearGrid", rtol: float = 1e-12) -> bool:
        return (
            self.n_points == other.n_points
            and abs(self.q_min - other.q_min) <= rtol * max(1.0, abs(self.q_min))
            and abs(self.q_max - other.q_max) <= rtol * max(1.0, abs(self.q_max))
        )


def _mirrored_axis(step: float, n: int) -> np.ndarray:
    # offsets from the centre; exact negation pairs by construction
    k = np.arange(n, dtype=float) - (n - 1) / 2.0
    return step * k


@dataclass(frozen=True, eq=False)
class ElectronicGrid:
    """Plane of electronic observation points at y = 0 (bohr).

    Ranges must be symmetric about 0 in both x and z.
    """

    x_min: float
    x_max: float
    dx: float
    z_min: float
    z_max: float
    dz: float
    x: np.ndarray = field(repr=False, default=None)
    z: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        for lo, hi, name in ((self.x_min, self.x_max, "x"), (self.z_min, self.z_max, "z")):
            if abs(lo + hi) > 1e-9 * max(1.0, abs(hi)):
                raise ValueError(
                    f"{name} range must be symmetric about 0, got [{lo}, {hi}]"
                )
        nx = _n_points(self.x_min, self.x_max, self.dx)
        nz = _n_points(self.z_min, self.z_max, self.dz)
        x = _mirrored_axis((self.x_max - self.x_min) / (nx - 1), nx)
        z = _mirrored_axis((self.z_max - self.z_min) / (nz - 1), nz)
        x.setflags(write=False)
        z.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "z", z)

    @property
    def nx(self) -> int:
        return self.x.size

    @property
    def nz(self) -> int:
        return self.z.size

    @property
    def cell_area(self) -> float:
        return self.dx * self.dz

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nx, self.nz)

    def zero_index_x(self) -> int:
        idx = np.flatnonzero(self.x == 0.0)
        if idx.size != 1:
            raise ValueError("grid has no x = 0 line (even point count)")
        return int(idx[0])

    def zero_index_z(self) -> int:
        idx = np.flatnonzero(self.z == 0.0)
        if idx.size != 1:
            raise ValueError("grid has no z = 0 line (even point count)")
        return int(idx[0])

    def matches(self, other: "ElectronicGrid") -> bool:
        return self.shape == other.shape and np.array_equal(self.x, other.x) and np.array_equal(self.z, other.z)
