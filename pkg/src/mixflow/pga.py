"""Path generation-assignment outer loop.

Alternates k-shortest-path generation on current per-class link costs with
a loose inner equilibrium solve until the total cost stabilizes, then runs
one final solve at the tight gap. Flows on existing paths carry over
between outer iterations; newly generated paths start empty and pick up
flow through the swap direction.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, replace

import numpy as np

from . import costs as cost_model
from .network import VEHICLE_CLASSES
from .paths import PathSet, merge_path_sets, yen_k_shortest
from .solver import Assignment, SolveResult, solve_assignment


@dataclass(frozen=True)
class PgaConfig:
    k: int = 10                   # paths generated per (OD, class) per round
    outer_tol: float = 0.01       # |relative total-cost change| stop threshold
    inner_gap: float = 0.1        # loose gap for per-round solves
    final_gap: float = None       # tight gap; None falls back to solver config
    max_outer: int = 20

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be at least 1")
        if self.outer_tol <= 0:
            raise ValueError("outer_tol must be positive")
        if self.inner_gap <= 0:
            raise ValueError("inner_gap must be positive")
        if self.max_outer < 1:
            raise ValueError("max_outer must be at least 1")
        if self.final_gap is not None and not 0 < self.final_gap <= self.inner_gap:
            raise ValueError("expected 0 < final_gap <= inner_gap")


@dataclass
class OuterRow:
    m: int
    new_paths: int
    total_cost: float
    error: float
    inner_iters: int
    seconds: float


@dataclass
class PgaResult:
    solve: SolveResult
    path_set: PathSet
    outer: list
    outer_converged: bool

    @property
    def flow(self):
        return self.solve.flow


def _generate(network, path_set, link_costs_by_class, k):
    """Yen per (OD, class) with positive demand; returns (merged, new count)."""
    generated = PathSet()
    for od_index, od in enumerate(network.od_pairs):
        for cls in VEHICLE_CLASSES:
            if od.demand(cls) <= 0:
                continue
            for path in yen_k_shortest(network, link_costs_by_class[cls],
                                       od.origin, od.destination, k):
                generated.add(od_index, cls, path)
    return merge_path_sets(path_set, generated)


def _carry_over(assignment, flows_by_key):
    """Align stored flows to a merged path set; all-new groups start uniform."""
    flows = np.zeros(assignment.n_paths)
    for g in assignment.groups:
        stored = flows_by_key.get((g.od_index, g.vehicle_class), {})
        vals = np.array([stored.get(p.key, 0.0) for p in g.paths])
        if vals.sum() <= 0:
            vals = np.full(len(g.paths), g.demand / len(g.paths))
        flows[g.start:g.stop] = vals
    return flows


def _store(result):
    return {(g.od_index, g.vehicle_class): {p.key: float(f) for p, f in zip(g.paths, g.flows)}
            for g in result.groups}


def pga_solve(network, params, pga_config, solver_config):
    """Run generation/assignment rounds, then the final tight solve."""
    path_set = PathSet()
    flows_by_key = {}
    free_state = cost_model.evaluate_links(
        network, np.zeros(network.n_links), np.zeros(network.n_links), params)
    class_costs = {cls: free_state.cost(cls) for cls in VEHICLE_CLASSES}
    inner_config = replace(solver_config, gap_tol=pga_config.inner_gap)
    outer = []
    prev_total = None
    outer_converged = False
    result = None
    for m in range(1, pga_config.max_outer + 1):
        tick = time.perf_counter()
        path_set, new_count = _generate(network, path_set, class_costs, pga_config.k)
        assignment = Assignment(network, path_set, params)
        result = solve_assignment(assignment, inner_config,
                                  initial_flows=_carry_over(assignment, flows_by_key))
        flows_by_key = _store(result)
        total = result.total_cost
        error = float("inf") if prev_total is None else (total - prev_total) / total
        outer.append(OuterRow(m, new_count, total, error,
                              result.iterations, time.perf_counter() - tick))
        link_state = cost_model.evaluate_links(network, result.flow.x_rv,
                                               result.flow.x_av, params)
        class_costs = {cls: link_state.cost(cls) for cls in VEHICLE_CLASSES}
        prev_total = total
        if m >= 2 and abs(error) <= pga_config.outer_tol:
            outer_converged = True
            break
    final_gap = pga_config.final_gap
    final_config = solver_config if final_gap is None else replace(solver_config, gap_tol=final_gap)
    assignment = Assignment(network, path_set, params)
    final = solve_assignment(assignment, final_config,
                             initial_flows=_carry_over(assignment, flows_by_key))
    return PgaResult(solve=final, path_set=path_set, outer=outer,
                     outer_converged=outer_converged)
