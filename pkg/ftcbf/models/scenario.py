import json
from pathlib import Path
from typing import Annotated, Any, Dict, List, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from ftcbf.core.errors import ScenarioValidationError


class _Model(BaseModel):
    model_config = ConfigDict(extra="forbid")


class AgentsSpec(_Model):
    count: int = Field(ge=1)
    dimension: int = Field(ge=1)
    initial_positions: List[List[float]]

    @model_validator(mode="after")
    def _positions_match(self) -> "AgentsSpec":
        if len(self.initial_positions) != self.count:
            raise ValueError(f"{len(self.initial_positions)} initial positions given for {self.count} agents")
        for position in self.initial_positions:
            if len(position) != self.dimension:
                raise ValueError(f"initial position {position} does not have {self.dimension} coordinates")
        return self


class RegionSpec(_Model):
    id: str
    center: List[float]
    shape: List[float]  # row-major n x n
    epsilon: Optional[float] = Field(default=None, gt=0)

    def shape_matrix(self) -> np.ndarray:
        n = len(self.center)
        return np.array(self.shape, dtype=float).reshape(n, n)


class ConnectivitySpec(_Model):
    id: str
    kind: Literal["connectivity"] = "connectivity"
    pair: Tuple[int, int]
    delta1: float
    delta2: float
    axis: int = Field(default=0, ge=0)
    epsilon: Optional[float] = Field(default=None, gt=0)


class CustomConstraintSpec(_Model):
    id: str
    kind: Literal["custom"] = "custom"
    expression: str
    gradient: List[str]
    bounded_above: Optional[float] = Field(default=None, gt=0)
    epsilon: Optional[float] = Field(default=None, gt=0)


GlobalConstraintSpec = Annotated[Union[ConnectivitySpec, CustomConstraintSpec], Field(discriminator="kind")]


class PropositionSpec(_Model):
    """Binds a proposition to a region (for one agent) or to a global constraint."""

    id: str
    region: Optional[str] = None
    agent: Optional[int] = Field(default=None, ge=0)
    global_: Optional[str] = Field(default=None, alias="global")

    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    @model_validator(mode="after")
    def _one_binding(self) -> "PropositionSpec":
        if (self.region is None) == (self.global_ is None):
            raise ValueError("a proposition binds exactly one of 'region' or 'global'")
        if self.region is not None and self.agent is None:
            raise ValueError("a region proposition needs an 'agent' index")
        return self


class ProblemSpec(_Model):
    label: str
    a1_true: List[str] = []
    a1_false: List[str] = []
    a2_true: List[str] = []
    a2_false: List[str] = []


class LassoSpec(_Model):
    prefix: List[str] = []
    suffix: List[str] = Field(min_length=1)


class ParamsSpec(_Model):
    gamma: float = Field(default=1.0, gt=0)
    rho: float = Field(default=0.5, ge=0, lt=1)
    epsilon: float = Field(default=0.05, gt=0)
    alpha: Dict[str, float] = {}


class SimSpec(_Model):
    dt: float = Field(default=0.01, gt=0)
    max_time: float = Field(default=100.0, gt=0)
    suffix_cycles_target: int = Field(default=2, ge=1)
    goal_switch_margin: float = Field(default=0.0, ge=0)
    control_limit: Optional[float] = Field(default=None, gt=0)


class WorkspaceSpec(_Model):
    bounds: List[Tuple[float, float]]


class ScenarioFile(_Model):
    name: str = "scenario"
    ltl_comment: str = ""
    agents: AgentsSpec
    workspace: Optional[WorkspaceSpec] = None
    regions: List[RegionSpec] = []
    global_constraints: List[GlobalConstraintSpec] = []
    propositions: List[PropositionSpec]
    problems: List[ProblemSpec]
    lasso: LassoSpec
    params: ParamsSpec = ParamsSpec()
    sim: SimSpec = SimSpec()

    def with_overrides(self, **overrides: Any) -> "ScenarioFile":
        """Copy with CLI overrides applied (None values are ignored)."""
        params = {k: v for k, v in overrides.items() if k in ("gamma", "rho", "epsilon") and v is not None}
        sim = {k: v for k, v in overrides.items() if k in SimSpec.model_fields and v is not None}
        data = self.to_dict()
        data["params"].update(params)
        data["sim"].update(sim)
        return parse_scenario(data)

    def to_dict(self) -> Dict[str, Any]:
        return self.model_dump(mode="json", by_alias=True, exclude_none=True)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _pointer(loc: Tuple[Any, ...]) -> str:
    return "/" + "/".join(str(part).replace("~", "~0").replace("/", "~1") for part in loc) if loc else "/"


def reference_problems(scenario: ScenarioFile) -> List[Dict[str, str]]:
    """Checks pydantic cannot express: id resolution, matrix shapes, positive definiteness."""
    problems = []

    def report(pointer: str, message: str):
        problems.append({"pointer": pointer, "message": message})

    n = scenario.agents.dimension
    region_ids = set()
    for i, region in enumerate(scenario.regions):
        if region.id in region_ids:
            report(f"/regions/{i}/id", f"duplicate region id '{region.id}'")
        region_ids.add(region.id)
        if len(region.center) != n:
            report(f"/regions/{i}/center", f"center must have {n} coordinates")
            continue
        if len(region.shape) != n * n:
            report(f"/regions/{i}/shape", f"shape must list {n * n} entries (row-major {n}x{n})")
            continue
        matrix = region.shape_matrix()
        if np.max(np.abs(matrix - matrix.T)) > 1e-12:
            report(f"/regions/{i}/shape", "shape matrix is not symmetric")
        elif np.linalg.eigvalsh(matrix).min() <= 0:
            report(f"/regions/{i}/shape", "shape matrix is not positive definite")

    global_ids = set()
    for i, constraint in enumerate(scenario.global_constraints):
        global_ids.add(constraint.id)
        if isinstance(constraint, ConnectivitySpec):
            for k, agent in enumerate(constraint.pair):
                if not 0 <= agent < scenario.agents.count:
                    report(f"/global_constraints/{i}/pair/{k}", f"agent index {agent} out of range")
            if constraint.pair[0] == constraint.pair[1]:
                report(f"/global_constraints/{i}/pair", "pair must name two distinct agents")
            if constraint.axis >= n:
                report(f"/global_constraints/{i}/axis", f"axis must be < {n}")
        elif len(constraint.gradient) != scenario.agents.count * n:
            report(f"/global_constraints/{i}/gradient", f"gradient must list {scenario.agents.count * n} expressions")

    prop_ids = set()
    for i, prop in enumerate(scenario.propositions):
        if prop.id in prop_ids:
            report(f"/propositions/{i}/id", f"duplicate proposition id '{prop.id}'")
        prop_ids.add(prop.id)
        if prop.region is not None and prop.region not in region_ids:
            report(f"/propositions/{i}/region", f"unknown region '{prop.region}'")
        if prop.agent is not None and prop.agent >= scenario.agents.count:
            report(f"/propositions/{i}/agent", f"agent index {prop.agent} out of range")
        if prop.global_ is not None and prop.global_ not in global_ids:
            report(f"/propositions/{i}/global", f"unknown global constraint '{prop.global_}'")

    labels = set()
    for i, problem in enumerate(scenario.problems):
        labels.add(problem.label)
        for field_name in ("a1_true", "a1_false", "a2_true", "a2_false"):
            for k, prop_id in enumerate(getattr(problem, field_name)):
                if prop_id not in prop_ids:
                    report(f"/problems/{i}/{field_name}/{k}", f"unknown proposition '{prop_id}'")

    for phase in ("prefix", "suffix"):
        for k, label in enumerate(getattr(scenario.lasso, phase)):
            if label not in labels:
                report(f"/lasso/{phase}/{k}", f"unknown problem '{label}'")

    for prop_id in scenario.params.alpha:
        if prop_id not in prop_ids:
            report(f"/params/alpha/{prop_id}", f"unknown proposition '{prop_id}'")
        elif not scenario.params.alpha[prop_id] > 0:
            report(f"/params/alpha/{prop_id}", "weight must be > 0")

    if scenario.sim.dt > scenario.sim.max_time:
        report("/sim/dt", "dt must not exceed max_time")
    return problems


def parse_scenario(data: Dict[str, Any]) -> ScenarioFile:
    try:
        scenario = ScenarioFile.model_validate(data)
    except ValidationError as e:
        raise ScenarioValidationError(
            [{"pointer": _pointer(err["loc"]), "message": err["msg"]} for err in e.errors()]
        ) from e
    problems = reference_problems(scenario)
    if problems:
        raise ScenarioValidationError(problems)
    return scenario


def load_scenario(path: Union[str, Path]) -> ScenarioFile:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ScenarioValidationError([{"pointer": "/", "message": f"scenario file not found: {path}"}]) from None
    except json.JSONDecodeError as e:
        raise ScenarioValidationError([{"pointer": "/", "message": f"not valid JSON: {e}"}]) from e
    return parse_scenario(data)
