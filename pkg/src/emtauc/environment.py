"""Two-task optimization environment with exact evaluation-cost accounting.

The cheap task scores candidates on a class-stratified subsample at rate s,
the expensive task on the full training data. One cheap evaluation costs 1
budget unit; one expensive evaluation costs 1/s^2 units. The ledger tracks
spending in integer micro-units of 1/p^2 cheap units (s = p/q in lowest
terms), so accounting is exact for any rational rate.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum
from fractions import Fraction

import numpy as np

from .data import Dataset, DatasetView, as_rate, stratified_sample
from .evaluation import (
    auc_metric,
    hardness_scores,
    objective,
    objective_batch,
    select_hardest,
)


class TaskId(IntEnum):
    CHEAP = 0
    EXPENSIVE = 1


class BudgetExhaustedError(RuntimeError):
    """Charging was attempted after the ledger reported exhaustion."""


class CostLedger:
    """Exact budget accounting for per-task evaluation charges.

    ``charge`` may push ``spent`` past the budget once (the crossing
    evaluation completes and is recorded); any further charge raises.
    """

    __slots__ = ("_budget", "_den", "_units", "_spent_units", "_budget_units", "evals")

    def __init__(self, budget, s) -> None:
        rate = as_rate(s, "sampling rate")
        if isinstance(budget, float):
            budget = Fraction(str(budget))
        else:
            budget = Fraction(budget)
        if budget <= 0:
            raise ValueError(f"budget must be positive, got {budget}")
        p, q = rate.numerator, rate.denominator
        self._budget = budget
        self._den = p * p
        self._units = {TaskId.CHEAP: p * p, TaskId.EXPENSIVE: q * q}
        self._budget_units = budget * self._den
        self._spent_units = 0
        self.evals = {TaskId.CHEAP: 0, TaskId.EXPENSIVE: 0}

    @property
    def budget(self) -> Fraction:
        return self._budget

    @property
    def spent(self) -> Fraction:
        return Fraction(self._spent_units, self._den)

    @property
    def remaining(self) -> Fraction:
        return self._budget - self.spent

    @property
    def exhausted(self) -> bool:
        return self._spent_units >= self._budget_units

    def cost_per_eval(self, task_id: TaskId) -> Fraction:
        return Fraction(self._units[TaskId(task_id)], self._den)

    def charge(self, task_id: TaskId) -> Fraction:
        """Record one evaluation on ``task_id``; returns the (possibly
        negative) remaining budget."""
        if self.exhausted:
            raise BudgetExhaustedError(
                f"budget exhausted: spent {self.spent} of {self._budget}"
            )
        task_id = TaskId(task_id)
        self._spent_units += self._units[task_id]
        self.evals[task_id] += 1
        return self.remaining


class TaskSpec:
    """One optimization task: a data view, the regularizer, and its price."""

    __slots__ = ("task_id", "view", "lam", "cost_per_eval")

    def __init__(self, task_id: TaskId, view: DatasetView, lam: float, cost_per_eval: Fraction) -> None:
        self.task_id = TaskId(task_id)
        self.view = view
        self.lam = float(lam)
        self.cost_per_eval = cost_per_eval

    def objective(self, w) -> float:
        return objective(w, self.view, self.lam)

    def objective_batch(self, W) -> np.ndarray:
        return objective_batch(W, self.view, self.lam)

    def auc(self, w) -> float:
        return auc_metric(w, self.view)


@dataclass(frozen=True)
class AdjustmentEvent:
    generation: int
    view_fingerprint: str


class Environment:
    """Shared state for one run: both tasks, the ledger, and the archive of
    the best expensive-task solution seen so far."""

    def __init__(self, dataset: Dataset, s, lam: float, delta, budget, seed) -> None:
        rate = as_rate(s, "sampling rate")
        if delta is not None and (not isinstance(delta, int) or isinstance(delta, bool) or delta < 1):
            raise ValueError(f"delta must be a positive integer or None, got {delta!r}")
        self.dataset = dataset
        self.s = rate
        self.lam = float(lam)
        self.delta = delta
        self.ledger = CostLedger(budget, rate)
        cheap_view = stratified_sample(dataset, rate, seed)
        self.tasks = {
            TaskId.CHEAP: TaskSpec(
                TaskId.CHEAP, cheap_view, self.lam, self.ledger.cost_per_eval(TaskId.CHEAP)
            ),
            TaskId.EXPENSIVE: TaskSpec(
                TaskId.EXPENSIVE,
                dataset.full_view(),
                self.lam,
                self.ledger.cost_per_eval(TaskId.EXPENSIVE),
            ),
        }
        self._best_w: np.ndarray | None = None
        self._best_obj: float = np.inf
        self.adjustment_log: list[AdjustmentEvent] = []

    @property
    def best_expensive_weights(self) -> np.ndarray | None:
        return self._best_w

    @property
    def best_expensive_objective(self) -> float | None:
        return None if self._best_w is None else self._best_obj

    def record_expensive(self, w: np.ndarray, obj: float) -> None:
        """Archive a charged expensive-task evaluation; strict improvement
        wins, so ties keep the earlier solution."""
        if obj < self._best_obj:
            self._best_obj = float(obj)
            self._best_w = np.array(w, dtype=np.float64, copy=True)

    def adjust_cheap_task(self, w_expensive, generation: int) -> DatasetView:
        """Replace the cheap view with the hardest instances under the given
        weights. View size per class is unchanged."""
        scores = hardness_scores(w_expensive, self.dataset)
        new_view = select_hardest(scores, self.dataset, self.s)
        old = self.tasks[TaskId.CHEAP].view
        assert new_view.t_pos == old.t_pos and new_view.t_neg == old.t_neg
        self.tasks[TaskId.CHEAP].view = new_view
        self.adjustment_log.append(
            AdjustmentEvent(generation=generation, view_fingerprint=new_view.fingerprint())
        )
        return new_view


def build_environment(
    dataset: Dataset,
    s="0.1",
    lam: float = 0.125,
    delta: int | None = 30,
    budget=101000,
    seed=None,
) -> Environment:
    """Construct the cheap/expensive task pair over one training dataset.

    ``seed`` drives the initial stratified subsample and accepts anything
    ``numpy.random.default_rng`` does.
    """
    return Environment(dataset, s, lam, delta, budget, seed)
