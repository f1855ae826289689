"""Certification of the a priori energy estimates and the solver studies.

The audits work on the per-step norm records of a trajectory and state the
inequalities in signed-margin form (bound minus attained quantity), so a
healthy run shows non-negative margins:

* weak margins: ``K t + h0/2`` versus ``h(t)/2 + b_min * integral of the
  gradient seminorm``;
* sup margin: ``2 gamma`` versus the supremum of the squared H norm, with
  ``gamma = K T + h0/2``;
* integral margin: ``gamma / b_min`` versus the accumulated gradient
  seminorm;
* strong margin: ``a(u0, u0) + integral of the applied-reaction norm``
  versus ``a(u(T), u(T))``.

Time integrals are Riemann sums matched to the IMEX split: the dissipation
(gradient) term is summed at the end of each step, where the implicit
diffusion update evaluates it, and the reaction terms at the start, where
the explicit update evaluates them.  With that matching the discrete
inequalities telescope exactly for the IMEX scheme when the reaction
vanishes; the nonlinear coupling contributes at most O(dt), which the
reported tolerance covers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import CoreShellGeometry, build_mesh
from .operators import (DiffractionOperator, DiffusionField, EigenBasis,
                        assemble, eigenbasis)
from .reactions import (ReactionTerm, certify_admissibility, certify_lipschitz)
from .solvers import (InitialCondition, SolveConfig, Trajectory, fem_solve,
                      galerkin_solve, newton_stationary)


@dataclass(frozen=True)
class EnergyReport:
    """Signed margins for the energy inequalities along one trajectory."""

    k_bound: float
    gamma: float
    sup_bound: float
    integral_bound: float
    weak_margins: np.ndarray
    worst_weak_margin: float
    sup_margin: float
    integral_margin: float
    strong_margin: float
    condition_margin: float
    tol: float
    passed: bool


def energy_report(trajectory: Trajectory, term: ReactionTerm,
                  op: DiffractionOperator | None = None) -> EnergyReport:
    """Audit the weak and strong energy estimates on a computed trajectory.

    The pass tolerance is ``C * dt`` with ``C`` estimated from the recorded
    norm magnitudes (first-order scheme slack); a failing margin is a report
    outcome, not an error.
    """
    if op is None:
        op = trajectory.operator
    k_bound = certify_admissibility(term, op.mesh.geometry)
    b_min = op.diffusion.b_min
    dt = trajectory.dt
    times = trajectory.times
    h = trajectory.h_norm_sq
    t_final = float(times[-1])

    gamma = k_bound * t_final + 0.5 * h[0]
    # End-of-step sum for the dissipation, matching the implicit update.
    dissipation = np.concatenate(
        [[0.0], dt * np.cumsum(trajectory.grad_norm_sq[1:])])
    weak_margins = k_bound * times + 0.5 * h[0] - 0.5 * h - b_min * dissipation
    sup_bound = 2.0 * gamma
    integral_bound = gamma / b_min
    sup_margin = sup_bound - float(h.max())
    integral_margin = integral_bound - float(dissipation[-1])
    # Start-of-step sum for the reaction, matching the explicit update.
    reaction_integral = dt * float(trajectory.reaction_norm_sq[:-1].sum())
    strong_margin = (trajectory.a_form[0] + reaction_integral
                     - trajectory.a_form[-1])
    condition_margin = k_bound - float(trajectory.u_f_inner.max())

    max_da = float(np.sqrt(trajectory.da_norm_sq.max()))
    slack_scale = max(2.0, 1.0 / b_min) * t_final * k_bound * (max_da + k_bound)
    tol = slack_scale * dt

    worst_weak = float(weak_margins.min())
    passed = (worst_weak >= -tol and sup_margin >= -tol
              and integral_margin >= -tol and strong_margin >= -tol
              and condition_margin >= 0.0)
    return EnergyReport(
        k_bound=k_bound, gamma=gamma, sup_bound=sup_bound,
        integral_bound=integral_bound, weak_margins=weak_margins,
        worst_weak_margin=worst_weak, sup_margin=sup_margin,
        integral_margin=integral_margin, strong_margin=strong_margin,
        condition_margin=condition_margin, tol=tol, passed=passed)


def flux_jump(op: DiffractionOperator, u: np.ndarray) -> float:
    """One-sided diffusive flux jump b1 u'(left) - b2 u'(right) at the
    interface node.

    Uses only the two elements adjacent to the interface, so the input need
    not satisfy the boundary conditions; the result is exactly linear in u.
    """
    k = op.mesh.interface_index
    r = op.mesh.nodes
    left = (u[k] - u[k - 1]) / (r[k] - r[k - 1])
    right = (u[k + 1] - u[k]) / (r[k + 1] - r[k])
    return float(op.diffusion.b1 * left - op.diffusion.b2 * right)


@dataclass(frozen=True)
class DependenceReport:
    """Continuous-dependence audit for one pair of initial states."""

    times: np.ndarray
    h_distance: np.ndarray
    v_distance_sq: np.ndarray
    h_bound: np.ndarray
    v_bound_sq: np.ndarray
    lipschitz: float
    prefactor: float
    worst_h_ratio: float
    worst_v_ratio: float
    passed: bool


_RATIO_SLACK = 1e-9  # roundoff allowance at the t = 0 equality


def dependence_check(op: DiffractionOperator, term: ReactionTerm,
                     u0: np.ndarray, v0: np.ndarray, config: SolveConfig,
                     basis: EigenBasis | None = None) -> DependenceReport:
    """Integrate two initial states identically and audit the growth bounds.

    The H distance is checked against ``|w(0)|_H exp(L t)`` and the squared
    V distance against ``(b_max/b_min) |w(0)|_V^2 exp(L^2 t / b_min)``; the
    prefactor and exponent swap roles with the diffusivities automatically
    when the shell is stiffer than the core.
    """
    if basis is None or basis.size < config.modes:
        basis = eigenbasis(op, config.modes)
    lip = certify_lipschitz(term)
    tr_u = _solve_from(basis, term, config, u0)
    tr_v = _solve_from(basis, term, config, v0)

    dc = tr_u.states - tr_v.states
    h_dist = np.sqrt((dc * dc).sum(axis=1))
    fields = dc @ basis.eigenvectors[:, :config.modes].T
    grad_sq = (fields * op.grad_stiffness.matvec(fields)).sum(axis=1)
    v_dist_sq = h_dist**2 + grad_sq

    times = tr_u.times
    b_min, b_max = op.diffusion.b_min, op.diffusion.b_max
    prefactor = b_max / b_min
    h_bound = h_dist[0] * np.exp(lip * times)
    v_bound_sq = prefactor * v_dist_sq[0] * np.exp(lip**2 * times / b_min)

    worst_h = _worst_ratio(h_dist, h_bound)
    worst_v = _worst_ratio(v_dist_sq, v_bound_sq)
    return DependenceReport(
        times=times, h_distance=h_dist, v_distance_sq=v_dist_sq,
        h_bound=h_bound, v_bound_sq=v_bound_sq, lipschitz=lip,
        prefactor=prefactor, worst_h_ratio=worst_h, worst_v_ratio=worst_v,
        passed=worst_h <= 1.0 + _RATIO_SLACK and worst_v <= 1.0 + _RATIO_SLACK)


def _solve_from(basis, term, config, field):
    cfg = SolveConfig(t_final=config.t_final, dt=config.dt,
                      modes=config.modes, scheme=config.scheme,
                      initial=InitialCondition(kind="table", values=field))
    return galerkin_solve(basis, term, cfg)


def _worst_ratio(values, bounds):
    if bounds[0] == 0.0:
        # Identical initial states: the difference must stay identically zero.
        return 0.0 if float(np.abs(values).max()) == 0.0 else np.inf
    return float((values / bounds).max())


@dataclass(frozen=True)
class ConvergenceTable:
    """Final-time spectral-truncation errors against the nodal oracle."""

    mode_counts: np.ndarray
    errors: np.ndarray
    reference_norm: float


def galerkin_convergence(op: DiffractionOperator, term: ReactionTerm,
                         config: SolveConfig, mode_counts,
                         basis: EigenBasis | None = None) -> ConvergenceTable:
    """Relative final-time H error of the modal solver per truncation level.

    The reference is the nodal method-of-lines solve on the same mesh and
    step size; both discretizations coincide algebraically at full
    truncation, so the last error of a full sweep sits at roundoff level.
    """
    counts = np.asarray(sorted(mode_counts), dtype=int)
    if counts[0] < 1 or counts[-1] > op.num_free:
        raise ValueError("mode counts must lie in [1, num_free]")
    if basis is None or basis.size < counts[-1]:
        basis = eigenbasis(op, int(counts[-1]))
    reference = fem_solve(op, term, config).final_field()
    ref_norm = _h_norm(op, reference)
    errors = np.empty(counts.size)
    for i, n in enumerate(counts):
        cfg = SolveConfig(t_final=config.t_final, dt=config.dt, modes=int(n),
                          scheme=config.scheme, initial=config.initial)
        final = galerkin_solve(basis, term, cfg).final_field()
        errors[i] = _h_norm(op, final - reference) / ref_norm
    return ConvergenceTable(mode_counts=counts, errors=errors,
                            reference_norm=ref_norm)


def _h_norm(op, field):
    return float(np.sqrt(max(op.mass.quadratic(field), 0.0)))


@dataclass(frozen=True)
class RegularizationTable:
    """Sharp-versus-ramped comparison per regularization width."""

    widths: np.ndarray
    discrepancies: np.ndarray
    second_difference_max: np.ndarray


def regularization_study(geometry: CoreShellGeometry,
                         diffusion: DiffusionField, term: ReactionTerm,
                         config: SolveConfig, widths,
                         target_spacing: float | None = None) -> RegularizationTable:
    """Replace the diffusivity jump by shrinking smooth ramps and compare.

    For each width the study records the space-time H discrepancy against
    the sharp-interface solution on the same fixed mesh, and a regularity
    monitor: the largest interface-adjacent second difference over the whole
    trajectory.  The mesh must resolve the smallest ramp with at least eight
    elements.
    """
    widths = np.asarray(sorted(widths, reverse=True), dtype=float)
    if widths.size == 0 or widths[-1] <= 0:
        raise ValueError("widths must be positive")
    if target_spacing is None:
        target_spacing = float(widths[-1]) / 8.0
    mesh = build_mesh(geometry, target_spacing)
    if mesh.max_spacing > widths[-1] / 8.0 + 1e-12:
        raise ValueError(
            f"mesh spacing {mesh.max_spacing:g} is too coarse for "
            f"regularization width {widths[-1]:g} (need >= 8 elements in "
            "the ramp)")
    for eps in widths:
        if not (0.0 < geometry.interface - 0.5 * eps
                and geometry.interface + 0.5 * eps < geometry.outer_extent):
            raise ValueError(f"ramp of width {eps:g} does not fit inside the "
                             "domain")

    sharp = DiffusionField(diffusion.b1, diffusion.b2)
    reference = fem_solve(assemble(mesh, sharp), term, config)

    window = _interface_window(mesh, float(widths[0]))
    dt = config.dt
    discrepancies = np.empty(widths.size)
    monitors = np.empty(widths.size)
    for i, eps in enumerate(widths):
        ramped = DiffusionField(diffusion.b1, diffusion.b2,
                                regularization_width=float(eps))
        op_eps = assemble(mesh, ramped)
        tr = fem_solve(op_eps, term, config)
        diff = tr.states - reference.states
        sq = (diff * op_eps.mass.matvec(diff)).sum(axis=1)
        discrepancies[i] = np.sqrt(dt * float(sq[1:].sum()))
        monitors[i] = _second_difference_max(mesh, tr.states, window)
    return RegularizationTable(widths=widths, discrepancies=discrepancies,
                               second_difference_max=monitors)


def _interface_window(mesh, half_span):
    r = mesh.nodes
    gamma = mesh.interface_position
    idx = np.nonzero(np.abs(r - gamma) <= 0.5 * half_span + 1e-12)[0]
    return idx[(idx >= 1) & (idx <= r.size - 2)]


def _second_difference_max(mesh, states, window) -> float:
    r = mesh.nodes
    hl = r[window] - r[window - 1]
    hr = r[window + 1] - r[window]
    slopes = ((states[:, window + 1] - states[:, window]) / hr
              - (states[:, window] - states[:, window - 1]) / hl)
    second = slopes / (0.5 * (hl + hr))
    return float(np.abs(second).max())


@dataclass(frozen=True)
class FluxStudy:
    """Interface flux jumps of stationary states under mesh refinement."""

    element_counts: np.ndarray
    jumps: np.ndarray
    observed_order: float


def flux_refinement_study(geometry: CoreShellGeometry,
                          diffusion: DiffusionField, term: ReactionTerm,
                          element_counts) -> FluxStudy:
    """Stationary flux-jump decay across uniform refinements.

    The observed order is the least-squares slope of log |jump| against
    log h; first-order decay reflects the consistent-mass load carried by
    the interface node.
    """
    counts = np.asarray(sorted(element_counts), dtype=int)
    jumps = np.empty(counts.size)
    for i, elements in enumerate(counts):
        mesh = build_mesh(geometry, geometry.outer_extent / int(elements))
        op = assemble(mesh, diffusion)
        state = newton_stationary(op, term, op.zero_field()).field
        jumps[i] = abs(flux_jump(op, state))
    log_h = -np.log(counts.astype(float))
    slope = np.polyfit(log_h, np.log(jumps), 1)[0]
    return FluxStudy(element_counts=counts, jumps=jumps,
                     observed_order=float(slope))
