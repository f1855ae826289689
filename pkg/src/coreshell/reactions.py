"""Consumption nonlinearities and their certified constants.

A reaction term is built from a pointwise consumption law ``g`` that is
bounded, non-negative, and zero for non-positive concentrations; the term
applied to the transformed unknown is ``f(u) = g(c0 - u)``, where ``c0`` is
the boundary concentration.  Besides evaluation, the module certifies the
admissibility constant ``K`` that bounds both ``(u, f(u))`` and the L2 norm
of ``f``, and the pointwise Lipschitz constant ``L`` of ``g``.

Kinds:

* ``zero`` — no consumption.
* ``michaelis_menten`` — saturating kinetics ``v_max * v / (k_m + v)``.
* ``substrate_inhibition`` — Haldane kinetics
  ``v_max * k_m * v / (k_m**2 + v**2)``; rises to ``v_max / 2`` at
  ``v = k_m`` and falls beyond, so it is deliberately non-monotone.
* ``tabulated`` — piecewise-linear table of (concentration, rate) samples
  with a caller-declared Lipschitz constant.
* ``constant_source`` — a state-independent source ``f == s`` for linear
  test problems only; it is exempt from the consumption-law constraints and
  admits no finite ``K``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import CoreShellGeometry

REACTION_KINDS = ("zero", "constant_source", "michaelis_menten",
                  "substrate_inhibition", "tabulated")


@dataclass(frozen=True)
class ReactionTerm:
    kind: str
    v_max: float = 0.0
    k_m: float = 1.0
    c0: float = 1.0
    source: float = 0.0
    table_v: np.ndarray | None = None
    table_g: np.ndarray | None = None
    declared_lipschitz: float | None = None

    def __post_init__(self):
        if self.kind not in REACTION_KINDS:
            raise ValueError(f"unknown reaction kind {self.kind!r}")
        if self.kind in ("michaelis_menten", "substrate_inhibition"):
            if self.v_max < 0:
                raise ValueError("v_max must be non-negative")
            if not self.k_m > 0:
                raise ValueError("k_m must be positive")
        if not self.c0 > 0:
            raise ValueError("c0 must be positive")
        if self.kind == "tabulated":
            v = np.asarray(self.table_v, dtype=float)
            g = np.asarray(self.table_g, dtype=float)
            if v.ndim != 1 or v.shape != g.shape or v.size < 2:
                raise ValueError("table needs matching 1-d arrays of >= 2 points")
            if not (v[0] == 0.0 and np.all(np.diff(v) > 0)):
                raise ValueError("table concentrations must ascend from 0")
            if g[0] != 0.0 or np.any(g < 0):
                raise ValueError("table rates must be non-negative with g(0) = 0")
            v.setflags(write=False)
            g.setflags(write=False)
            object.__setattr__(self, "table_v", v)
            object.__setattr__(self, "table_g", g)

    @property
    def rate_bound(self) -> float:
        """Supremum of the consumption law g."""
        if self.kind in ("michaelis_menten", "substrate_inhibition"):
            return self.v_max
        if self.kind == "tabulated":
            return float(self.table_g.max())
        if self.kind == "constant_source":
            return abs(self.source)
        return 0.0


def zero_term(c0: float = 1.0) -> ReactionTerm:
    return ReactionTerm(kind="zero", c0=c0)


def constant_source(s: float, c0: float = 1.0) -> ReactionTerm:
    return ReactionTerm(kind="constant_source", source=s, c0=c0)


def michaelis_menten(v_max: float, k_m: float, c0: float = 1.0) -> ReactionTerm:
    return ReactionTerm(kind="michaelis_menten", v_max=v_max, k_m=k_m, c0=c0)


def substrate_inhibition(v_max: float, k_m: float, c0: float = 1.0) -> ReactionTerm:
    return ReactionTerm(kind="substrate_inhibition", v_max=v_max, k_m=k_m, c0=c0)


def tabulated(table_v, table_g, c0: float = 1.0,
              declared_lipschitz: float | None = None) -> ReactionTerm:
    return ReactionTerm(kind="tabulated", table_v=table_v, table_g=table_g,
                        c0=c0, declared_lipschitz=declared_lipschitz)


def evaluate_g(term: ReactionTerm, v):
    """Pointwise consumption rate at concentration v (scalar or array)."""
    v = np.asarray(v, dtype=float)
    vv = np.maximum(v, 0.0)
    if term.kind == "zero":
        out = np.zeros_like(vv)
    elif term.kind == "constant_source":
        # State-independent source; not a consumption law.
        out = np.full_like(vv, term.source)
    elif term.kind == "michaelis_menten":
        out = term.v_max * vv / (term.k_m + vv)
    elif term.kind == "substrate_inhibition":
        out = term.v_max * term.k_m * vv / (term.k_m**2 + vv**2)
    else:
        out = np.interp(vv, term.table_v, term.table_g)
    return out if out.ndim else float(out)


def consumption_slope(term: ReactionTerm, v):
    """Pointwise derivative of g, with 0 chosen at the kink v = 0."""
    v = np.asarray(v, dtype=float)
    vv = np.maximum(v, 0.0)
    if term.kind == "michaelis_menten":
        slope = term.v_max * term.k_m / (term.k_m + vv) ** 2
    elif term.kind == "substrate_inhibition":
        km2 = term.k_m**2
        slope = term.v_max * term.k_m * (km2 - vv**2) / (km2 + vv**2) ** 2
    elif term.kind == "tabulated":
        seg = np.clip(np.searchsorted(term.table_v, vv, side="right") - 1,
                      0, term.table_v.size - 2)
        dv = np.diff(term.table_v)
        dg = np.diff(term.table_g)
        slope = np.where(vv >= term.table_v[-1], 0.0, dg[seg] / dv[seg])
    else:
        slope = np.zeros_like(vv)
    out = np.where(v > 0, slope, 0.0)
    return out if out.ndim else float(out)


def apply_f(term: ReactionTerm, u: np.ndarray, /) -> np.ndarray:
    """Nodewise reaction f(u) = g(c0 - u); a constant source ignores u."""
    u = np.asarray(u, dtype=float)
    if term.kind == "constant_source":
        return np.full_like(u, term.source)
    return evaluate_g(term, term.c0 - u)


def reaction_slope(term: ReactionTerm, u: np.ndarray) -> np.ndarray:
    """Nodewise derivative of f(u) = g(c0 - u) with respect to u."""
    u = np.asarray(u, dtype=float)
    if term.kind == "constant_source":
        return np.zeros_like(u)
    return -consumption_slope(term, term.c0 - u)


def certify_admissibility(term: ReactionTerm,
                          geometry: CoreShellGeometry) -> float:
    """Constant K bounding both (u, f(u)) and the L2 norm of f(u).

    Since g vanishes for non-positive concentrations, f(u) = g(c0 - u) is
    positive only where u < c0, so u * f(u) <= c0 * rate_bound pointwise and
    the integral is at most c0 * rate_bound * |domain|; the norm bound is
    rate_bound * sqrt(|domain|).
    """
    if term.kind == "constant_source":
        raise ValueError(
            "constant source is inadmissible: (u, s) is unbounded over L2 "
            "fields, so no finite K exists; use it in linear test modes only")
    bound = term.rate_bound
    if bound == 0.0:
        return float(np.finfo(float).tiny)
    measure = geometry.measure
    return max(term.c0 * bound * measure, bound * np.sqrt(measure))


def certify_lipschitz(term: ReactionTerm) -> float:
    """Pointwise Lipschitz constant of g (equals that of f on fields).

    For both saturating and Haldane kinetics the steepest slope sits at
    v = 0+, giving v_max / k_m.
    """
    if term.kind in ("michaelis_menten", "substrate_inhibition"):
        return term.v_max / term.k_m
    if term.kind == "tabulated":
        if term.declared_lipschitz is None:
            raise ValueError("tabulated term carries no declared Lipschitz "
                             "constant")
        return float(term.declared_lipschitz)
    return 0.0
