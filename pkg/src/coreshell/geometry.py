"""Core-shell domains and interface-aligned one-dimensional meshes.

A core-shell domain is either the interval ``[0, R]`` or a radially
symmetric ball of radius ``R`` reduced to its radial coordinate.  An
interior interface at ``0 < gamma < R`` splits the domain into a core
(``x < gamma``, diffusivity ``b1``) and a shell (``x > gamma``, ``b2``).
The radial reduction carries the volume weight ``r**(N-1)``.

Meshes are piecewise uniform on each side of the interface so that the
interface coordinate is a node bit-for-bit and no element straddles the
material jump.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

GEOMETRY_KINDS = ("interval", "radial")


@dataclass(frozen=True)
class CoreShellGeometry:
    """An interval or radially symmetric ball split into core and shell."""

    kind: str
    dimension: int
    interface: float
    outer_extent: float

    def __post_init__(self):
        if self.kind not in GEOMETRY_KINDS:
            raise ValueError(f"unknown geometry kind {self.kind!r}")
        if self.kind == "interval" and self.dimension != 1:
            raise ValueError("interval geometry requires dimension 1")
        if self.kind == "radial" and self.dimension not in (2, 3):
            raise ValueError("radial geometry requires dimension 2 or 3")
        if not self.outer_extent > 0:
            raise ValueError("outer_extent must be positive")
        if not 0 < self.interface < self.outer_extent:
            raise ValueError(
                f"interface must lie strictly inside (0, {self.outer_extent}), "
                f"got {self.interface}"
            )

    @property
    def weight_exponent(self) -> int:
        """Exponent of the volume weight r**(N-1)."""
        return self.dimension - 1

    @property
    def dirichlet_left(self) -> bool:
        """True when the left endpoint carries a Dirichlet condition.

        The radial form gets a natural (zero-flux) condition at r = 0 from
        symmetry instead.
        """
        return self.kind == "interval"

    @property
    def measure(self) -> float:
        """Weighted measure of the domain, integral of r**(N-1) over [0, R]."""
        return self.outer_extent**self.dimension / self.dimension


def build_geometry(kind: str, dimension: int, interface: float,
                   outer_extent: float) -> CoreShellGeometry:
    """Validate and return a core-shell geometry."""
    return CoreShellGeometry(kind=kind, dimension=int(dimension),
                             interface=float(interface),
                             outer_extent=float(outer_extent))


@dataclass(frozen=True)
class Mesh:
    """Interface-aligned nodes on [0, R], piecewise uniform per subdomain."""

    geometry: CoreShellGeometry
    nodes: np.ndarray
    interface_index: int

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        nodes.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        if nodes.ndim != 1 or nodes.size < 3:
            raise ValueError("mesh needs at least two elements")
        if not np.all(np.diff(nodes) > 0):
            raise ValueError("mesh nodes must be strictly increasing")
        if not 0 < self.interface_index < nodes.size - 1:
            raise ValueError("interface node must be interior")
        if nodes[self.interface_index] != self.geometry.interface:
            raise ValueError("node at interface_index must equal the interface "
                             "coordinate exactly")

    @property
    def interface_position(self) -> float:
        return float(self.nodes[self.interface_index])

    @property
    def weight_exponent(self) -> int:
        return self.geometry.weight_exponent

    @property
    def dirichlet_left(self) -> bool:
        return self.geometry.dirichlet_left

    @property
    def num_nodes(self) -> int:
        return self.nodes.size

    @property
    def num_elements(self) -> int:
        return self.nodes.size - 1

    @property
    def free(self) -> slice:
        """Slice of the node array holding the unconstrained values."""
        return slice(1 if self.dirichlet_left else 0, self.num_nodes - 1)

    @property
    def num_free(self) -> int:
        return self.num_nodes - 1 - (1 if self.dirichlet_left else 0)

    @property
    def element_sizes(self) -> np.ndarray:
        return np.diff(self.nodes)

    @property
    def max_spacing(self) -> float:
        return float(self.element_sizes.max())


def _subdivisions(length: float, target_spacing: float) -> int:
    # Tiny tolerance keeps exact divisions (e.g. 0.5/0.25) from rounding up.
    return max(1, math.ceil(length / target_spacing - 1e-12))


def build_mesh(geometry: CoreShellGeometry, target_spacing: float) -> Mesh:
    """Mesh the geometry with element size <= target_spacing.

    Each subdomain is subdivided uniformly, so the interface coordinate is a
    node exactly (``np.linspace`` pins both endpoints).
    """
    if not target_spacing > 0:
        raise ValueError("target_spacing must be positive")
    gamma = geometry.interface
    outer = geometry.outer_extent
    n_core = _subdivisions(gamma, target_spacing)
    n_shell = _subdivisions(outer - gamma, target_spacing)
    left = np.linspace(0.0, gamma, n_core + 1)
    right = np.linspace(gamma, outer, n_shell + 1)
    nodes = np.concatenate([left, right[1:]])
    return Mesh(geometry=geometry, nodes=nodes, interface_index=n_core)


def refine(mesh: Mesh) -> Mesh:
    """Bisect every element; the input nodes survive unchanged."""
    nodes = mesh.nodes
    out = np.empty(2 * nodes.size - 1)
    out[::2] = nodes
    out[1::2] = 0.5 * (nodes[:-1] + nodes[1:])
    return Mesh(geometry=mesh.geometry, nodes=out,
                interface_index=2 * mesh.interface_index)
