"""Discrete operators for the discontinuous-diffusivity problem.

Linear elements on an interface-aligned mesh give a symmetric tridiagonal
stiffness/mass pair: the stiffness realizes the diffusivity-weighted energy
form ``a(u, v) = int b u' v' w dr`` (with volume weight ``w = r**(N-1)``)
and the mass realizes the weighted L2 inner product.  On top of the pair
this module provides the generalized eigenbasis (mass-orthonormal), the
spectral projections, discrete norms, the strong-form application
``A u = M^{-1} K u``, and the elliptic solve ``A^{-1}``.

Discrete fields are plain float arrays over all mesh nodes with the
Dirichlet entries pinned to zero; source-type data (reaction values) may be
nonzero at constrained nodes and enters through full mass rows.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve_banded, cholesky_banded, eigh

from .geometry import Mesh

_GAUSS_X, _GAUSS_W = np.polynomial.legendre.leggauss(5)
# Reference hat functions on [-1, 1]; exact to polynomial degree 9, which
# covers the cubic diffusivity ramp times the r**2 weight.
_PHI_A = 0.5 * (1.0 - _GAUSS_X)
_PHI_B = 0.5 * (1.0 + _GAUSS_X)

NORM_KINDS = ("H", "V", "V_semi", "DA")


class SymTridiag:
    """Symmetric tridiagonal matrix stored as diagonal and off-diagonal."""

    __slots__ = ("diag", "off")

    def __init__(self, diag: np.ndarray, off: np.ndarray):
        self.diag = np.asarray(diag, dtype=float)
        self.off = np.asarray(off, dtype=float)
        if self.off.size != self.diag.size - 1:
            raise ValueError("off-diagonal must be one shorter than diagonal")

    @property
    def size(self) -> int:
        return self.diag.size

    def matvec(self, x: np.ndarray) -> np.ndarray:
        if x.shape[-1] != self.size:
            raise ValueError(f"vector of length {x.shape[-1]} does not conform "
                             f"to matrix of size {self.size}")
        y = self.diag * x
        y[..., :-1] += self.off * x[..., 1:]
        y[..., 1:] += self.off * x[..., :-1]
        return y

    def quadratic(self, x: np.ndarray) -> float:
        """x^T A x without forming the matvec result twice."""
        return float(x @ self.matvec(x))

    def slice(self, sl: slice) -> "SymTridiag":
        diag = self.diag[sl]
        start = sl.start or 0
        return SymTridiag(diag, self.off[start:start + diag.size - 1])

    def to_dense(self) -> np.ndarray:
        out = np.diag(self.diag)
        idx = np.arange(self.size - 1)
        out[idx, idx + 1] = self.off
        out[idx + 1, idx] = self.off
        return out

    def row_sums(self) -> np.ndarray:
        y = self.diag.copy()
        y[:-1] += self.off
        y[1:] += self.off
        return y

    def cholesky(self) -> "TridiagCholesky":
        return TridiagCholesky(self)


class TridiagCholesky:
    """Banded Cholesky factorization of an SPD symmetric tridiagonal matrix."""

    __slots__ = ("_cb",)

    def __init__(self, matrix: SymTridiag):
        ab = np.zeros((2, matrix.size))
        ab[0, 1:] = matrix.off
        ab[1, :] = matrix.diag
        try:
            self._cb = cholesky_banded(ab, lower=False)
        except np.linalg.LinAlgError as exc:
            raise np.linalg.LinAlgError(
                "matrix is not positive definite (assembly bug?)") from exc

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        return cho_solve_banded((self._cb, False), rhs)


def _smoothstep(t: np.ndarray) -> np.ndarray:
    t = np.clip(t, 0.0, 1.0)
    return t * t * (3.0 - 2.0 * t)


@dataclass(frozen=True)
class DiffusionField:
    """Piecewise-constant diffusivity, optionally smoothed over a ramp.

    With ``regularization_width = 0`` the value jumps from ``b1`` on the
    closed core to ``b2`` on the open shell.  A positive width ``eps``
    replaces the jump by a monotone C^1 cubic ramp on
    ``[gamma - eps/2, gamma + eps/2]``.
    """

    b1: float
    b2: float
    regularization_width: float = 0.0

    def __post_init__(self):
        if not (self.b1 > 0 and self.b2 > 0):
            raise ValueError("diffusivities must be positive")
        if self.regularization_width < 0:
            raise ValueError("regularization width must be non-negative")

    @property
    def b_min(self) -> float:
        return min(self.b1, self.b2)

    @property
    def b_max(self) -> float:
        return max(self.b1, self.b2)

    def profile(self, x: np.ndarray, interface: float) -> np.ndarray:
        """Diffusivity values at coordinates x for a given interface."""
        x = np.asarray(x, dtype=float)
        eps = self.regularization_width
        if eps == 0.0:
            return np.where(x <= interface, self.b1, self.b2)
        ramp = _smoothstep((x - (interface - 0.5 * eps)) / eps)
        return self.b1 + (self.b2 - self.b1) * ramp


@dataclass(frozen=True)
class DiffractionOperator:
    """Assembled stiffness/mass pair plus cached free-node factorizations.

    ``stiffness`` and ``mass`` span all nodes (so that source data with
    nonzero boundary values integrates correctly and full stiffness rows sum
    to zero); solves restrict to the unconstrained nodes.
    ``grad_stiffness`` is the unit-diffusivity stiffness used for the plain
    gradient seminorm.
    """

    mesh: Mesh
    diffusion: DiffusionField
    stiffness: SymTridiag
    mass: SymTridiag
    grad_stiffness: SymTridiag
    stiffness_free: SymTridiag
    mass_free: SymTridiag
    stiffness_chol: TridiagCholesky
    mass_chol: TridiagCholesky

    @property
    def num_free(self) -> int:
        return self.mesh.num_free

    def zero_field(self) -> np.ndarray:
        return np.zeros(self.mesh.num_nodes)

    def embed(self, free_values: np.ndarray) -> np.ndarray:
        """Full nodal field from free-node values, Dirichlet entries zero."""
        out = np.zeros(self.mesh.num_nodes)
        out[self.mesh.free] = free_values
        return out


def assemble(mesh: Mesh, diffusion: DiffusionField) -> DiffractionOperator:
    """Assemble the weighted stiffness/mass pair for linear elements.

    Per-element integrals use a fixed five-point Gauss rule, exact for the
    piecewise-constant diffusivity and the polynomial volume weight (the
    quadrature points of an element never touch the interface because the
    interface is a node).
    """
    if not 0 < mesh.interface_index < mesh.num_nodes - 1:
        raise ValueError("mesh has no interior interface node")
    nodes = mesh.nodes
    h = np.diff(nodes)
    gamma = mesh.interface_position
    p = mesh.weight_exponent

    # Quadrature points per element, shape (elements, 5).
    mid = 0.5 * (nodes[:-1] + nodes[1:])
    pts = mid[:, None] + 0.5 * h[:, None] * _GAUSS_X[None, :]
    weight = pts**p if p else np.ones_like(pts)
    wq = 0.5 * h[:, None] * _GAUSS_W[None, :]

    b_q = diffusion.profile(pts, gamma)
    stiff_coef = (b_q * weight * wq).sum(axis=1) / h**2
    grad_coef = (weight * wq).sum(axis=1) / h**2
    m_aa = (_PHI_A * _PHI_A * weight * wq).sum(axis=1)
    m_ab = (_PHI_A * _PHI_B * weight * wq).sum(axis=1)
    m_bb = (_PHI_B * _PHI_B * weight * wq).sum(axis=1)

    n = mesh.num_nodes
    stiffness = _scatter(n, stiff_coef, stiff_coef, -stiff_coef)
    grad = _scatter(n, grad_coef, grad_coef, -grad_coef)
    mass = _scatter(n, m_aa, m_bb, m_ab)

    free = mesh.free
    stiffness_free = stiffness.slice(free)
    mass_free = mass.slice(free)
    return DiffractionOperator(
        mesh=mesh,
        diffusion=diffusion,
        stiffness=stiffness,
        mass=mass,
        grad_stiffness=grad,
        stiffness_free=stiffness_free,
        mass_free=mass_free,
        stiffness_chol=stiffness_free.cholesky(),
        mass_chol=mass_free.cholesky(),
    )


def _scatter(n: int, k_aa: np.ndarray, k_bb: np.ndarray,
             k_ab: np.ndarray) -> SymTridiag:
    diag = np.zeros(n)
    diag[:-1] += k_aa
    diag[1:] += k_bb
    return SymTridiag(diag, k_ab.copy())


def bilinear_form(op: DiffractionOperator, u: np.ndarray,
                  v: np.ndarray) -> float:
    """Energy form u^T K v with the diffusivity-weighted stiffness."""
    return float(u @ op.stiffness.matvec(np.asarray(v, dtype=float)))


def inner_h(op: DiffractionOperator, u: np.ndarray, v: np.ndarray) -> float:
    """Weighted L2 inner product u^T M v over all nodes."""
    return float(u @ op.mass.matvec(np.asarray(v, dtype=float)))


def norm(op: DiffractionOperator, u: np.ndarray, kind: str = "H") -> float:
    """Discrete norm of a conforming field.

    ``H`` is the weighted L2 norm, ``V_semi`` the plain gradient seminorm
    (unit-diffusivity stiffness), ``V`` their Pythagorean sum, and ``DA``
    the L2 norm of the strong application ``M^{-1} K u``.
    """
    u = np.asarray(u, dtype=float)
    if kind == "H":
        return float(np.sqrt(max(op.mass.quadratic(u), 0.0)))
    if kind == "V_semi":
        return float(np.sqrt(max(op.grad_stiffness.quadratic(u), 0.0)))
    if kind == "V":
        sq = op.mass.quadratic(u) + op.grad_stiffness.quadratic(u)
        return float(np.sqrt(max(sq, 0.0)))
    if kind == "DA":
        return norm(op, apply_operator(op, u), "H")
    raise ValueError(f"unknown norm kind {kind!r}; expected one of {NORM_KINDS}")


def apply_operator(op: DiffractionOperator, u: np.ndarray) -> np.ndarray:
    """Strong-form application A u = M^{-1} K u on the free nodes."""
    ku = op.stiffness.matvec(np.asarray(u, dtype=float))
    return op.embed(op.mass_chol.solve(ku[op.mesh.free]))


def solve_elliptic(op: DiffractionOperator, rhs: np.ndarray) -> np.ndarray:
    """Solve K u = M rhs on the free nodes; realizes A^{-1}.

    ``rhs`` is source data and may be nonzero at constrained nodes; its
    boundary values enter through the full mass rows.
    """
    load = op.mass.matvec(np.asarray(rhs, dtype=float))
    return op.embed(op.stiffness_chol.solve(load[op.mesh.free]))


@dataclass(frozen=True)
class EigenBasis:
    """Leading eigenpairs of K w = lambda M w, mass-orthonormal.

    Eigenvectors are stored as full nodal fields (columns), each scaled so
    its first nonzero entry is positive; eigenvalues ascend.
    """

    operator: DiffractionOperator
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def size(self) -> int:
        return self.eigenvalues.size


def eigenbasis(op: DiffractionOperator, n: int) -> EigenBasis:
    """First n eigenpairs of the generalized symmetric problem.

    The mass factorization reduces the pencil to a symmetric standard
    problem solved densely; fine at the tridiagonal sizes used here.
    """
    nfree = op.num_free
    if not 1 <= n <= nfree:
        raise ValueError(f"need 1 <= n <= {nfree} free nodes, got {n}")
    # Cholesky of the mass doubles as the SPD check demanded of assembly.
    op.mass_free.cholesky()
    k_dense = op.stiffness_free.to_dense()
    m_dense = op.mass_free.to_dense()
    if n < nfree:
        vals, vecs = eigh(k_dense, m_dense, subset_by_index=(0, n - 1))
    else:
        vals, vecs = eigh(k_dense, m_dense)
    fields = np.zeros((op.mesh.num_nodes, n))
    fields[op.mesh.free, :] = vecs
    _fix_signs(fields)
    fields.setflags(write=False)
    vals = vals.copy()
    vals.setflags(write=False)
    return EigenBasis(operator=op, eigenvalues=vals, eigenvectors=fields)


def _fix_signs(fields: np.ndarray) -> None:
    scale = np.abs(fields).max(axis=0)
    for j in range(fields.shape[1]):
        col = fields[:, j]
        nz = np.nonzero(np.abs(col) > 1e-12 * scale[j])[0]
        if nz.size and col[nz[0]] < 0:
            fields[:, j] = -col


def project(basis: EigenBasis, u: np.ndarray, n: int | None = None) -> np.ndarray:
    """Coefficients (u, w_j)_H against the first n basis fields."""
    if n is None:
        n = basis.size
    if not 0 <= n <= basis.size:
        raise ValueError(f"need 0 <= n <= {basis.size}, got {n}")
    mu = basis.operator.mass.matvec(np.asarray(u, dtype=float))
    return basis.eigenvectors[:, :n].T @ mu


def reconstruct(basis: EigenBasis, coeffs: np.ndarray) -> np.ndarray:
    """Nodal field from modal coefficients."""
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.size > basis.size:
        raise ValueError("more coefficients than basis fields")
    return basis.eigenvectors[:, :coeffs.size] @ coeffs
