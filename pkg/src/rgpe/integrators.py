"""Exponential time integrators for the rotating-frame equation.

A method descriptor is ``<outer>+<inner>``: the outer scheme is a
commutator-free exponential integrator built on Gauss collocation nodes
(cf2, cf4, cf4af, cf6af) or the modified four-exponential sixth-order
scheme (bbk); the inner scheme is the splitting used to realize each stage
exponential (strang, rkn74, rkn116).  Each cf stage j applies

    exp(-i h (b_j K + P_j + b_j theta |phi|^2)),
    P_j = sum_k a_jk W(., t0 + c_k h),   b_j = sum_k a_jk,

with K = -Laplacian/2.  The bbk scheme replaces the outer stages by two
pointwise phases (its stage-1/4 kinetic weights sum to zero) carrying a
gradient correction, plus two half-step stage exponentials.
"""

import hashlib
import math
from dataclasses import dataclass, field as dataclass_field

from . import _tables
from .model import TrapOnGrid
from .spectral import Field, transform_pairs
from .splitting import SPLITTINGS, apply_splitting, potential_flow, \
    splitting_pairs

__all__ = ["METHODS", "method_order", "pairs_per_step", "method_checksum",
           "make_stepper", "evolve", "EvolveResult", "DivergenceError"]

_CF_TABLES = {
    "cf2": (_tables.CF2_A, _tables.GAUSS1_NODES, 2),
    "cf4": (_tables.CF4_A, _tables.GAUSS2_NODES, 4),
    "cf4af": (_tables.CF4AF_A, _tables.GAUSS3_NODES, 4),
    "cf6af": (_tables.CF6AF_A, _tables.GAUSS3_NODES, 6),
}
_SPLIT_ORDER = {"strang": 2, "rkn74": 4, "rkn116": 6}

METHODS = ("cf2+strang", "cf4+rkn74", "cf4af+rkn74", "cf6af+rkn116",
           "bbk+strang", "bbk+rkn74", "bbk+rkn116")


def _parse(method):
    outer, sep, inner = method.partition("+")
    if not sep or inner not in SPLITTINGS or \
            (outer != "bbk" and outer not in _CF_TABLES):
        raise ValueError(f"unknown method {method!r}; "
                         f"available: {', '.join(METHODS)}")
    return outer, inner


def method_order(method):
    """Nominal global convergence order: the weaker of the two parts."""
    outer, inner = _parse(method)
    outer_order = 6 if outer == "bbk" else _CF_TABLES[outer][2]
    return min(outer_order, _SPLIT_ORDER[inner])


def pairs_per_step(method):
    """Exact number of transform pairs one step costs."""
    outer, inner = _parse(method)
    stages = 2 if outer == "bbk" else len(_CF_TABLES[outer][0])
    return stages * len(splitting_pairs(inner)[0])


def method_checksum(method):
    """Short digest of every coefficient the method runs on."""
    outer, inner = _parse(method)
    if outer == "bbk":
        data = (_tables.GAUSS3_NODES, _tables.BBK_A1, _tables.BBK_A2,
                (_tables.BBK_WTILDE_COEF,))
    else:
        table, nodes, _ = _CF_TABLES[outer]
        data = (nodes,) + tuple(table)
    data = data + splitting_pairs(inner)
    blob = repr([[float(v) for v in row] for row in data]).encode()
    return hashlib.sha256(blob).hexdigest()[:12]


def make_stepper(method, trap_grid, theta):
    """Return step(values, t, h) -> values advancing one step from time t."""
    outer, inner = _parse(method)
    pairs = splitting_pairs(inner)
    grid = trap_grid.grid
    theta = float(theta)

    if outer == "bbk":
        nodes = _tables.GAUSS3_NODES
        a1, a2 = _tables.BBK_A1, _tables.BBK_A2
        a1r, a2r = a1[::-1], a2[::-1]
        wt = _tables.BBK_WTILDE_COEF

        def step(values, t, h):
            times = [t + c * h for c in nodes]
            corr = (wt * h * h) * trap_grid.gradient_difference_sq(times[2],
                                                                   times[0])
            values = potential_flow(values, h,
                                    trap_grid.combination(a1, times) + corr)
            values = apply_splitting(grid, values, pairs, 0.5 * h,
                                     trap_grid.combination(a2, times),
                                     1.0, theta)
            values = apply_splitting(grid, values, pairs, 0.5 * h,
                                     trap_grid.combination(a2r, times),
                                     1.0, theta)
            values = potential_flow(values, h,
                                    trap_grid.combination(a1r, times) + corr)
            return values

        return step

    table, nodes, _ = _CF_TABLES[outer]
    rows = [(row, math.fsum(row)) for row in table]

    def step(values, t, h):
        times = [t + c * h for c in nodes]
        for row, b in rows:
            P = trap_grid.combination(row, times)
            values = apply_splitting(grid, values, pairs, h, P, b, b * theta)
        return values

    return step


class DivergenceError(RuntimeError):
    """The propagation blew up (non-finite or norm growth beyond reason)."""

    def __init__(self, message, time=None, norm=None):
        super().__init__(message)
        self.time = time
        self.norm = norm
        self.snapshots = []  # whatever was recorded before the abort


@dataclass
class EvolveResult:
    field: Field
    n_steps: int
    step_size: float
    norm_initial: float
    norm_final: float
    transform_pairs: int
    snapshots: list = dataclass_field(default_factory=list)

    @property
    def norm_drift(self):
        return abs(self.norm_final - self.norm_initial)


def evolve(start, trap, theta, method, t_final, n_steps, snapshot_times=(),
           check_every=16):
    """Propagate a Field to t_final in n_steps fixed steps of one method.

    Snapshot times must fall on step boundaries (the stepper has no dense
    output); a copy of the state is recorded at each.  Norm blow-up or
    non-finite values raise :class:`DivergenceError`.
    """
    if n_steps < 1:
        raise ValueError("n_steps must be positive")
    if start.frame != "rotating":
        raise ValueError("the steppers act in the rotating frame; "
                         "map the field before evolving")
    grid = start.grid
    t0 = start.time
    h = (float(t_final) - t0) / n_steps
    if h == 0:
        raise ValueError("t_final coincides with the field's current time")

    snap_at = {}
    for ts in snapshot_times:
        idx = round((float(ts) - t0) / h)
        if not (0 <= idx <= n_steps) or abs(t0 + idx * h - float(ts)) > \
                1e-9 * max(1.0, abs(h) * n_steps):
            raise ValueError(f"snapshot time {ts} does not lie on a step "
                             f"boundary of step size {h}")
        snap_at.setdefault(idx, float(ts))

    trap_grid = TrapOnGrid(trap, grid)
    stepper = make_stepper(method, trap_grid, theta)
    values = start.values.copy()
    norm0 = grid.l2_norm(values)
    pairs_before = transform_pairs.thread_count

    snapshots = []
    if 0 in snap_at:
        snapshots.append(Field(grid, values.copy(), t0, start.frame))
    for n in range(1, n_steps + 1):
        values = stepper(values, t0 + (n - 1) * h, h)
        if n % check_every == 0 or n == n_steps or n in snap_at:
            norm = grid.l2_norm(values)
            if not math.isfinite(norm) or norm > 10.0 * max(norm0, 1e-300):
                err = DivergenceError(
                    f"{method} diverged at t = {t0 + n * h:.6g} "
                    f"(norm {norm:.3e}, initial {norm0:.3e})",
                    time=t0 + n * h, norm=norm)
                err.snapshots = snapshots
                raise err
        if n in snap_at:
            snapshots.append(Field(grid, values.copy(), t0 + n * h,
                                   start.frame))

    final = Field(grid, values, t0 + n_steps * h, start.frame)
    return EvolveResult(field=final, n_steps=n_steps, step_size=h,
                        norm_initial=norm0, norm_final=final.norm(),
                        transform_pairs=transform_pairs.thread_count
                        - pairs_before,
                        snapshots=snapshots)
