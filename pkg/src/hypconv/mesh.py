"""Uniform periodic 1D meshes shared by all spatial discretizations."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class UniformMesh:
    """Uniform mesh on a periodic interval [x_lo, x_hi].

    Cell j occupies [edges[j], edges[j+1]] and has center centers[j].
    Point-value (finite difference) states live on the cell vertices
    ``vertices[j] = x_lo + j*dx``; with a fixed domain these stay nested
    under mesh doubling, which cell centers do not.
    """

    n_cells: int
    x_lo: float
    x_hi: float
    dx: float = field(init=False)
    edges: np.ndarray = field(init=False, repr=False)
    centers: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.n_cells < 1:
            raise ValueError(f"n_cells must be positive, got {self.n_cells}")
        if not self.x_hi > self.x_lo:
            raise ValueError(f"empty domain [{self.x_lo}, {self.x_hi}]")
        dx = (self.x_hi - self.x_lo) / self.n_cells
        edges = self.x_lo + dx * np.arange(self.n_cells + 1)
        object.__setattr__(self, "dx", dx)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "centers", 0.5 * (edges[:-1] + edges[1:]))

    @property
    def vertices(self) -> np.ndarray:
        """The n_cells left edges; the point set used by FD states."""
        return self.edges[:-1]

    @property
    def length(self) -> float:
        return self.x_hi - self.x_lo

    def same_domain(self, other: "UniformMesh", rtol: float = 1e-12) -> bool:
        scale = max(abs(self.x_lo), abs(self.x_hi), 1.0)
        return (
            abs(self.x_lo - other.x_lo) <= rtol * scale
            and abs(self.x_hi - other.x_hi) <= rtol * scale
        )


def build_mesh(n_cells: int, domain: tuple[float, float] = (0.0, 1.0)) -> UniformMesh:
    """Construct a uniform periodic mesh for the solvers.

    Requires n_cells >= 4 so third-order upwind and the parabolic
    reconstruction always have stencil support.  Meshes used purely as
    restriction targets may be built directly via UniformMesh.
    """
    if n_cells < 4:
        raise ValueError(
            f"solver meshes need n_cells >= 4 for stencil support, got {n_cells}"
        )
    return UniformMesh(int(n_cells), float(domain[0]), float(domain[1]))


def wrap_index(j, n_cells: int):
    """Resolve any integer index onto the periodic range [0, n_cells).

    Works elementwise on integer arrays as well.
    """
    return j % n_cells


@dataclass
class StateField:
    """Discrete state attached to a mesh.

    kind is "point_values" (data on mesh.vertices) or "cell_averages"
    (data is the per-cell mean); it is fixed for the lifetime of a run.
    """

    kind: str
    data: np.ndarray
    mesh: UniformMesh
    time: float = 0.0

    KINDS = ("point_values", "cell_averages")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown state kind {self.kind!r}")
        self.data = np.asarray(self.data, dtype=float)
        if self.data.shape != (self.mesh.n_cells,):
            raise ValueError(
                f"state has {self.data.shape} values for {self.mesh.n_cells} cells"
            )

    def with_data(self, data: np.ndarray, time: float) -> "StateField":
        return StateField(self.kind, data, self.mesh, time)
