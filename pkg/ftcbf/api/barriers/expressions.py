"""Barriers written as math expressions in scenario files.

Expressions run inside an asteval interpreter with numpy available as `np`.
The flat stacked state is bound to `x` and agent i's position to `p<i>`.
"""
import logging
from typing import List, Optional, Sequence

import numpy as np
from asteval import Interpreter

from ftcbf.api.barriers.functions import CustomBarrier
from ftcbf.core.errors import BarrierEvaluationError, ParameterError

logger = logging.getLogger(__name__)

FORBIDDEN_PATTERNS = ("import", "__", "open(", "exec", "eval", "lambda", "getattr", "globals", "locals")


def validate_expression(text: str) -> bool:
    """Reject anything that looks like more than arithmetic on the state."""
    lowered = text.lower()
    return bool(text.strip()) and not any(pattern in lowered for pattern in FORBIDDEN_PATTERNS)


class ExpressionEvaluator:
    """Compiles a list of expressions once and evaluates them against a state vector."""

    def __init__(self, expressions: Sequence[str], n_agents: int, dim: int):
        for text in expressions:
            if not validate_expression(text):
                raise ParameterError(f"expression is empty or contains forbidden patterns: {text!r}")
        self.n_agents = n_agents
        self.dim = dim
        self.expressions = list(expressions)
        self._interp = Interpreter(minimal=True)
        self._interp.symtable["np"] = np
        self._nodes = []
        for text in self.expressions:
            try:
                node = self._interp.parse(text)
            except Exception as e:
                self._interp.error = []
                raise ParameterError(f"could not parse expression {text!r}: {e}") from e
            self._raise_errors(text)
            self._nodes.append(node)

    def _raise_errors(self, text: str) -> None:
        if self._interp.error:
            messages = [": ".join(err.get_error()) for err in self._interp.error]
            self._interp.error = []
            raise BarrierEvaluationError(f"could not evaluate {text!r}", {"messages": messages})

    def evaluate(self, flat: np.ndarray) -> List[float]:
        flat = np.asarray(flat, dtype=float)
        self._interp.symtable["x"] = flat
        for i in range(self.n_agents):
            self._interp.symtable[f"p{i}"] = flat[i * self.dim:(i + 1) * self.dim]
        values = []
        for text, node in zip(self.expressions, self._nodes):
            result = self._interp.run(node, expr=text, with_raise=False)
            self._raise_errors(text)
            value = float(result)
            if not np.isfinite(value):
                raise BarrierEvaluationError(f"expression {text!r} is not finite at the current state")
            values.append(value)
        return values


def expression_barrier(
    barrier_id: str,
    expression: str,
    gradient: Sequence[str],
    n_agents: int,
    dim: int,
    bounded_above: Optional[float] = None,
) -> CustomBarrier:
    """CustomBarrier whose value and gradient come from scenario expressions."""
    if len(gradient) != n_agents * dim:
        raise ParameterError(
            f"barrier '{barrier_id}' lists {len(gradient)} gradient expressions, state has {n_agents * dim} coordinates"
        )
    value_eval = ExpressionEvaluator([expression], n_agents, dim)
    gradient_eval = ExpressionEvaluator(gradient, n_agents, dim)
    logger.debug("Compiled expression barrier '%s': %s", barrier_id, expression)
    return CustomBarrier(
        barrier_id,
        lambda flat: value_eval.evaluate(flat)[0],
        lambda flat: np.array(gradient_eval.evaluate(flat)),
        bounded_above,
    )
