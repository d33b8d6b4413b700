"""Turns a validated ScenarioFile into the runtime objects the engine needs."""
import logging
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np

from ftcbf.api.barriers.expressions import expression_barrier
from ftcbf.api.barriers.functions import DEFAULT_EPSILON, ConnectivityBarrier, QuadraticBarrier
from ftcbf.api.barriers.geometry import QuadraticRegion, StackedState
from ftcbf.api.barriers.propositions import AtomicProposition, Workspace
from ftcbf.api.constraints.dynamics import ControlAffineDynamics
from ftcbf.api.constraints.rows import FtcbfParams
from ftcbf.api.task.problems import InducedProblemSpec, LassoSequence, ReachabilityProblem, induce_problem
from ftcbf.models.scenario import ConnectivitySpec, ScenarioFile

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Scenario:
    name: str
    workspace: Workspace
    regions: Dict[str, QuadraticRegion]
    dynamics: ControlAffineDynamics
    initial_state: StackedState
    lasso: LassoSequence
    problems: Dict[str, ReachabilityProblem]
    params: FtcbfParams
    bounds: Optional[Tuple[Tuple[float, float], ...]] = None
    workspace_bounds: Optional[Tuple[Tuple[float, float], ...]] = None


def build_scenario(model: ScenarioFile) -> Scenario:
    n_agents, dim = model.agents.count, model.agents.dimension
    default_eps = model.params.epsilon or DEFAULT_EPSILON

    regions = {r.id: QuadraticRegion(np.array(r.center), r.shape_matrix()) for r in model.regions}
    region_eps = {r.id: r.epsilon or default_eps for r in model.regions}

    globals_ = {spec.id: spec for spec in model.global_constraints}
    global_eps = {spec.id: spec.epsilon or default_eps for spec in model.global_constraints}

    propositions = []
    for prop in model.propositions:
        if prop.region is not None:
            barrier = QuadraticBarrier(prop.id, prop.agent, regions[prop.region])
            eps = region_eps[prop.region]
        else:
            spec = globals_[prop.global_]
            if isinstance(spec, ConnectivitySpec):
                barrier = ConnectivityBarrier(prop.id, spec.pair, spec.delta1, spec.delta2, spec.axis)
            else:
                barrier = expression_barrier(prop.id, spec.expression, spec.gradient, n_agents, dim, spec.bounded_above)
            eps = global_eps[prop.global_]
        propositions.append(AtomicProposition(prop.id, barrier, eps))
    workspace = Workspace(n_agents, dim, propositions)

    problems = {}
    for spec in model.problems:
        induced = InducedProblemSpec(
            frozenset(spec.a1_true),
            frozenset(spec.a1_false),
            frozenset(spec.a2_true),
            frozenset(spec.a2_false),
            spec.label,
        )
        problems[spec.label] = induce_problem(induced, workspace, model.params.alpha)

    lasso = LassoSequence(
        tuple(problems[label] for label in model.lasso.prefix),
        tuple(problems[label] for label in model.lasso.suffix),
        model.ltl_comment,
    )
    limit = model.sim.control_limit
    bounds = tuple((-limit, limit) for _ in range(n_agents * dim)) if limit else None
    logger.debug("Built scenario '%s': %d propositions, %d problems", model.name, len(propositions), len(problems))
    return Scenario(
        name=model.name,
        workspace=workspace,
        regions=regions,
        dynamics=ControlAffineDynamics.single_integrator(n_agents, dim),
        initial_state=StackedState(np.array(model.agents.initial_positions, dtype=float)),
        lasso=lasso,
        problems=problems,
        params=FtcbfParams(model.params.gamma, model.params.rho),
        bounds=bounds,
        workspace_bounds=tuple(tuple(b) for b in model.workspace.bounds) if model.workspace else None,
    )
