"""Square-lattice geometry and field containers.

A grid is an ``n_cells x n_cells`` array of vertices with physical spacing
``spacing``; vertex (i, j) sits at ``origin + (i*spacing, j*spacing)`` with
axis 0 = x, axis 1 = y.  The outermost vertex ring carries the zero Dirichlet
boundary.  Statistics are only trusted on the unpadded interior, a box
``padding_cells`` vertices in from the ring.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

FLD_MAGIC = b"LFPPFLD1"
FLD_VERSION = 1


class GridError(ValueError):
    """Invalid grid geometry or a query outside its resolvable range."""


@dataclass(frozen=True)
class GridSpec:
    """Geometry of one simulation grid.

    n_cells: vertices per side (>= 4).
    spacing: physical lattice step.
    origin: physical coordinate of vertex (0, 0).
    padding_cells: buffer ring excluded from statistics; defaults to n_cells // 8.
    """

    n_cells: int
    spacing: float
    origin: tuple[float, float] = (0.0, 0.0)
    padding_cells: int = -1

    def __post_init__(self):
        if self.n_cells < 4:
            raise GridError(f"n_cells={self.n_cells} below minimum 4")
        if not np.isfinite(self.spacing) or self.spacing <= 0:
            raise GridError(f"spacing must be positive and finite, got {self.spacing}")
        pad = self.padding_cells
        if pad < 0:
            pad = self.n_cells // 8
            object.__setattr__(self, "padding_cells", pad)
        if pad >= self.n_cells / 4:
            raise GridError(f"padding_cells={pad} must be < n_cells/4")

    @property
    def extent(self) -> float:
        return self.n_cells * self.spacing

    @property
    def center(self) -> tuple[float, float]:
        half = (self.n_cells - 1) * self.spacing / 2
        return (self.origin[0] + half, self.origin[1] + half)

    def axis_coords(self) -> np.ndarray:
        return self.origin[0] + self.spacing * np.arange(self.n_cells)

    def unpadded_box(self) -> tuple[float, float, float, float]:
        """(xmin, ymin, xmax, ymax) of the statistics-grade interior."""
        p = self.padding_cells
        lo = p * self.spacing
        hi = (self.n_cells - 1 - p) * self.spacing
        return (self.origin[0] + lo, self.origin[1] + lo,
                self.origin[0] + hi, self.origin[1] + hi)

    def contains_point(self, p: tuple[float, float], margin: float = 0.0) -> bool:
        x0, y0, x1, y1 = self.unpadded_box()
        return (x0 + margin <= p[0] <= x1 - margin) and (y0 + margin <= p[1] <= y1 - margin)

    def contains_circle(self, center: tuple[float, float], radius: float) -> bool:
        return self.contains_point(center, margin=radius)

    def nearest_vertex(self, p: tuple[float, float]) -> tuple[int, int]:
        i = int(round((p[0] - self.origin[0]) / self.spacing))
        j = int(round((p[1] - self.origin[1]) / self.spacing))
        if not (0 <= i < self.n_cells and 0 <= j < self.n_cells):
            raise GridError(f"point {p} outside grid")
        return i, j

    def vertex_xy(self, i: int, j: int) -> tuple[float, float]:
        return (self.origin[0] + i * self.spacing, self.origin[1] + j * self.spacing)


@dataclass
class FieldGrid:
    """One realization of the zero-boundary discrete field."""

    spec: GridSpec
    values: np.ndarray
    seed: int
    boundary_condition: str = "zero"

    def __post_init__(self):
        v = self.values
        n = self.spec.n_cells
        if v.shape != (n, n):
            raise GridError(f"values shape {v.shape} != ({n}, {n})")
        if not np.all(np.isfinite(v)):
            raise GridError("field values must be finite")
        ring = np.concatenate([v[0, :], v[-1, :], v[:, 0], v[:, -1]])
        if np.any(ring != 0.0):
            raise GridError("boundary ring must be exactly zero")

    def shifted(self, c: float) -> "FieldGrid":
        """Interior shifted by c; the Dirichlet ring stays pinned at zero."""
        v = self.values.copy()
        v[1:-1, 1:-1] += c
        return FieldGrid(self.spec, v, self.seed, self.boundary_condition)


@dataclass
class CircleAverageSeries:
    """Circle averages h_{e^{-t}}(z) on a descending radius grid.

    base_value is the average at the largest radius; recentered() subtracts it,
    giving the discrete stand-in for h_{e^{-t}}(z) - h_{r_max}(z).
    """

    center: tuple[float, float]
    radii: np.ndarray
    averages: np.ndarray
    base_value: float = field(default=0.0)

    def __post_init__(self):
        if len(self.radii) != len(self.averages):
            raise GridError("radii and averages length mismatch")
        if len(self.radii) > 1 and not np.all(np.diff(self.radii) < 0):
            raise GridError("radii must be strictly decreasing")

    def recentered(self) -> np.ndarray:
        return self.averages - self.base_value


def save_field(path, fld: FieldGrid) -> None:
    """Write the binary field format: LFPPFLD1 header + row-major f64 LE."""
    spec = fld.spec
    header = FLD_MAGIC + struct.pack(
        "<IId2dIQ",
        FLD_VERSION,
        spec.n_cells,
        spec.spacing,
        spec.origin[0],
        spec.origin[1],
        spec.padding_cells,
        fld.seed & (2**64 - 1),
    )
    with open(path, "wb") as f:
        f.write(header)
        f.write(fld.values.astype("<f8").tobytes(order="C"))


def load_field(path) -> FieldGrid:
    with open(path, "rb") as f:
        magic = f.read(8)
        if magic != FLD_MAGIC:
            raise GridError(f"bad magic {magic!r}")
        version, n = struct.unpack("<II", f.read(8))
        if version != FLD_VERSION:
            raise GridError(f"unsupported field file version {version}")
        spacing, ox, oy = struct.unpack("<3d", f.read(24))
        padding, seed = struct.unpack("<IQ", f.read(12))
        values = np.frombuffer(f.read(8 * n * n), dtype="<f8").reshape(n, n).copy()
    spec = GridSpec(n_cells=n, spacing=spacing, origin=(ox, oy), padding_cells=padding)
    return FieldGrid(spec, values, seed)
