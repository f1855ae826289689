"""Time integration and stationary states.

Two structurally different integrators advance the same semidiscrete
problem ``du/dt + A u = f(u)``:

* ``galerkin_solve`` works on modal coefficients in the eigenbasis of the
  diffusion operator, projecting the freshly evaluated nodal reaction onto
  the retained modes every step (no modal closure).
* ``fem_solve`` is a nodal method-of-lines oracle,
  ``(M + dt K) u_next = M (u + dt f(u))``.

Both default to the IMEX Euler step: implicit in the diffusion (which is
stiff and unconditionally stable this way) and explicit in the bounded
reaction.  The modal solver additionally offers an exponential Euler step
that is exact for vanishing reaction.

``stationary_solve`` finds roots of ``K u = M f(u)`` by damped Newton.

Every step records the squared H norm, plain gradient seminorm, V norm,
strong-form norm, the pairing ``(u, f(u))``, the energy form ``a(u, u)``,
and the squared H norm of the reaction as applied by the scheme; the energy
audits in :mod:`coreshell.analysis` consume these.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_banded

from .operators import DiffractionOperator, EigenBasis, SymTridiag, eigenbasis
from .reactions import ReactionTerm, apply_f, reaction_slope

SCHEMES = ("imex_euler", "exponential_euler")
INITIAL_KINDS = ("zero", "mode", "table")


class SolverError(RuntimeError):
    """Raised when integration produces non-finite state."""


class ConvergenceError(RuntimeError):
    """Raised when Newton iteration fails to reach tolerance."""


@dataclass(frozen=True)
class InitialCondition:
    """Initial state: zero, a single eigenmode, or a nodal table."""

    kind: str = "zero"
    mode: int = 1
    values: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in INITIAL_KINDS:
            raise ValueError(f"unknown initial kind {self.kind!r}")
        if self.kind == "mode" and self.mode < 1:
            raise ValueError("mode index must be >= 1")
        if self.kind == "table":
            if self.values is None:
                raise ValueError("table initial condition needs values")
            vals = np.asarray(self.values, dtype=float)
            vals.setflags(write=False)
            object.__setattr__(self, "values", vals)


@dataclass(frozen=True)
class SolveConfig:
    t_final: float
    dt: float
    modes: int = 1
    scheme: str = "imex_euler"
    initial: InitialCondition = field(default_factory=InitialCondition)

    def __post_init__(self):
        if not self.t_final > 0:
            raise ValueError("t_final must be positive")
        if not 0 < self.dt <= self.t_final:
            raise ValueError("need 0 < dt <= t_final")
        steps = round(self.t_final / self.dt)
        if steps < 1 or abs(steps * self.dt - self.t_final) > 1e-9 * self.t_final:
            raise ValueError("dt must divide t_final")
        if self.modes < 1:
            raise ValueError("modes must be >= 1")
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}")

    @property
    def num_steps(self) -> int:
        return round(self.t_final / self.dt)


def resolve_initial(op: DiffractionOperator, initial: InitialCondition,
                    basis: EigenBasis | None = None) -> np.ndarray:
    """Nodal initial field with Dirichlet entries pinned to zero."""
    n = op.mesh.num_nodes
    if initial.kind == "zero":
        return np.zeros(n)
    if initial.kind == "mode":
        j = initial.mode
        if basis is None or basis.size < j:
            basis = eigenbasis(op, j)
        return basis.eigenvectors[:, j - 1].copy()
    vals = np.asarray(initial.values, dtype=float)
    if vals.size != n:
        raise ValueError(f"initial table has {vals.size} values, mesh has "
                         f"{n} nodes")
    u = vals.copy()
    if op.mesh.dirichlet_left:
        u[0] = 0.0
    u[-1] = 0.0
    return u


@dataclass
class Trajectory:
    """Time series of states and the per-step norm records.

    ``states`` rows are modal coefficients for the spectral solver and
    nodal fields for the FEM solver.  ``reaction_norm_sq`` is the squared
    H norm of the reaction as the scheme applies it (projected onto the
    retained modes, or onto the unconstrained nodal space).
    """

    kind: str
    times: np.ndarray
    states: np.ndarray
    h_norm_sq: np.ndarray
    grad_norm_sq: np.ndarray
    v_norm_sq: np.ndarray
    da_norm_sq: np.ndarray
    u_f_inner: np.ndarray
    a_form: np.ndarray
    reaction_norm_sq: np.ndarray
    operator: DiffractionOperator
    basis: EigenBasis | None
    scheme: str
    dt: float

    @property
    def num_samples(self) -> int:
        return self.times.size

    def field(self, i: int) -> np.ndarray:
        """Nodal field at sample i (reconstructed for modal states)."""
        if self.kind == "galerkin":
            return self.basis.eigenvectors[:, :self.states.shape[1]] @ self.states[i]
        return self.states[i].copy()

    def final_field(self) -> np.ndarray:
        return self.field(self.num_samples - 1)


class _Recorder:
    __slots__ = ("tr", "_i")

    def __init__(self, kind, op, basis, config, state_width):
        m = config.num_steps
        z = lambda: np.zeros(m + 1)
        self.tr = Trajectory(
            kind=kind,
            times=np.arange(m + 1) * config.dt,
            states=np.zeros((m + 1, state_width)),
            h_norm_sq=z(), grad_norm_sq=z(), v_norm_sq=z(), da_norm_sq=z(),
            u_f_inner=z(), a_form=z(), reaction_norm_sq=z(),
            operator=op, basis=basis, scheme=config.scheme, dt=config.dt)
        self._i = 0

    def push(self, state, h, grad, da, uf, aform, rxn):
        i = self._i
        t = self.tr
        t.states[i] = state
        t.h_norm_sq[i] = h
        t.grad_norm_sq[i] = grad
        t.v_norm_sq[i] = h + grad
        t.da_norm_sq[i] = da
        t.u_f_inner[i] = uf
        t.a_form[i] = aform
        t.reaction_norm_sq[i] = rxn
        self._i = i + 1


def _check_finite(values: np.ndarray, t: float, step: int) -> None:
    if not np.all(np.isfinite(values)):
        raise SolverError(
            f"non-finite state at t = {t:g} (step {step}); the implicit "
            "diffusion step is unconditionally stable, so suspect dt too "
            "large for the explicit reaction part or bad input data")


def galerkin_solve(basis: EigenBasis, term: ReactionTerm,
                   config: SolveConfig) -> Trajectory:
    """Advance the modal system truncated to ``config.modes`` modes.

    IMEX Euler divides each coefficient by ``1 + dt * lambda_j`` after the
    explicit reaction contribution; exponential Euler applies the exact
    decay factor and its phi-function weight instead.  The reaction
    coefficients are recomputed every step by reconstructing the nodal
    field, applying the consumption law nodewise, and projecting back.
    """
    n = config.modes
    if n > basis.size:
        raise ValueError(f"config asks for {n} modes, basis holds {basis.size}")
    op = basis.operator
    lam = basis.eigenvalues[:n]
    vecs = basis.eigenvectors[:, :n]
    mass = op.mass
    grad_stiff = op.grad_stiffness
    dt = config.dt

    if config.scheme == "imex_euler":
        denom = 1.0 + dt * lam
    else:
        decay = np.exp(-dt * lam)
        phi = (1.0 - decay) / lam

    u0 = resolve_initial(op, config.initial, basis)
    _check_finite(u0, 0.0, 0)
    coeff = vecs.T @ mass.matvec(u0)

    rec = _Recorder("galerkin", op, basis, config, n)
    for step in range(config.num_steps + 1):
        u = vecs @ coeff
        f = apply_f(term, u)
        mf = mass.matvec(f)
        fc = vecs.T @ mf
        rec.push(coeff,
                 h=coeff @ coeff,
                 grad=u @ grad_stiff.matvec(u),
                 da=(lam * lam * coeff) @ coeff,
                 uf=u @ mf,
                 aform=(lam * coeff) @ coeff,
                 rxn=fc @ fc)
        if step == config.num_steps:
            break
        if config.scheme == "imex_euler":
            coeff = (coeff + dt * fc) / denom
        else:
            coeff = decay * coeff + phi * fc
        _check_finite(coeff, (step + 1) * dt, step + 1)
    return rec.tr


def fem_solve(op: DiffractionOperator, term: ReactionTerm,
              config: SolveConfig) -> Trajectory:
    """Nodal method-of-lines oracle, IMEX Euler only.

    One banded Cholesky of ``M + dt K`` is reused for every step; the
    ``modes`` field of the config is ignored.
    """
    if config.scheme != "imex_euler":
        raise ValueError("fem_solve supports only the imex_euler scheme")
    mesh = op.mesh
    free = mesh.free
    dt = config.dt
    step_matrix = SymTridiag(op.mass_free.diag + dt * op.stiffness_free.diag,
                             op.mass_free.off + dt * op.stiffness_free.off)
    step_chol = step_matrix.cholesky()

    u = resolve_initial(op, config.initial)
    _check_finite(u, 0.0, 0)

    rec = _Recorder("fem", op, None, config, mesh.num_nodes)
    for step in range(config.num_steps + 1):
        f = apply_f(term, u)
        mf = op.mass.matvec(f)
        mu = op.mass.matvec(u)
        ku_free = op.stiffness.matvec(u)[free]
        au_free = op.mass_chol.solve(ku_free)
        proj_f = op.mass_chol.solve(mf[free])
        rec.push(u,
                 h=u @ mu,
                 grad=u @ op.grad_stiffness.matvec(u),
                 da=ku_free @ au_free,
                 uf=u @ mf,
                 aform=u @ op.stiffness.matvec(u),
                 rxn=mf[free] @ proj_f)
        if step == config.num_steps:
            break
        rhs = (mu + dt * mf)[free]
        u = op.embed(step_chol.solve(rhs))
        _check_finite(u, (step + 1) * dt, step + 1)
    return rec.tr


@dataclass(frozen=True)
class StationaryResult:
    field: np.ndarray
    iterations: int
    residual: float


def newton_stationary(op: DiffractionOperator, term: ReactionTerm,
                      initial_guess: np.ndarray, tol: float = 1e-10,
                      max_iterations: int = 50) -> StationaryResult:
    """Damped Newton for the stationary balance ``K u = M f(u)``.

    Convergence is measured on the H norm of the strong-form residual field
    ``M^{-1}(K u - M f(u))``; steps halve while the residual would grow.
    """
    mesh = op.mesh
    free = mesh.free
    u = np.asarray(initial_guess, dtype=float).copy()
    if mesh.dirichlet_left:
        u[0] = 0.0
    u[-1] = 0.0

    def residual(state):
        r = op.stiffness.matvec(state)[free] - op.mass.matvec(apply_f(term, state))[free]
        return r, float(np.sqrt(max(r @ op.mass_chol.solve(r), 0.0)))

    r_alg, r_norm = residual(u)
    iterations = 0
    while r_norm >= tol:
        if iterations >= max_iterations:
            raise ConvergenceError(
                f"Newton did not reach residual {tol:g} in {max_iterations} "
                f"iterations (last residual {r_norm:.3e})")
        iterations += 1
        delta = solve_banded((1, 1), _jacobian_bands(op, term, u), -r_alg)
        step = 1.0
        while True:
            candidate = u.copy()
            candidate[free] += step * delta
            cand_alg, cand_norm = residual(candidate)
            if cand_norm < r_norm or step <= 2.0**-30:
                break
            step *= 0.5
        u, r_alg, r_norm = candidate, cand_alg, cand_norm
        if not np.isfinite(r_norm):
            raise ConvergenceError("Newton residual became non-finite")
    return StationaryResult(field=u, iterations=iterations, residual=r_norm)


def stationary_solve(op: DiffractionOperator, term: ReactionTerm,
                     initial_guess: np.ndarray) -> np.ndarray:
    """Stationary state from damped Newton; see :func:`newton_stationary`."""
    return newton_stationary(op, term, initial_guess).field


def _jacobian_bands(op, term, u):
    """Banded form of K - M diag(f'(u)) on the free block.

    Right-multiplying the mass by a diagonal scales its columns, so the
    result is tridiagonal but no longer symmetric.
    """
    free = op.mesh.free
    slope = reaction_slope(term, u)[free]
    k = op.stiffness_free
    m = op.mass_free
    nf = k.size
    ab = np.zeros((3, nf))
    ab[1, :] = k.diag - m.diag * slope
    ab[0, 1:] = k.off - m.off * slope[1:]     # superdiagonal, column scaled
    ab[2, :-1] = k.off - m.off * slope[:-1]   # subdiagonal
    return ab
