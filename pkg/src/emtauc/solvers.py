"""Evolutionary solvers over a shared [0, 1]^D random-key space.

Three solvers share one variation pipeline (SBX crossover followed by
polynomial mutation) and one decode rule w = 2*keys - 1:

* ``run_single_task_ga``: (mu+lambda) GA on one task.
* ``run_mfea``: one unified population, implicit transfer through
  assortative mating controlled by a fixed random-mating probability.
* ``run_emea``: one population per task, explicit transfer every G
  generations through a learned linear map between the tasks' sorted
  populations.

All random draws happen in the serial orchestration path; objective
batches are pure and may be evaluated concurrently without changing any
result. Ledger charges are applied serially in population-index order, the
evaluation that crosses the budget completes and is recorded, and the run
then stops.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .environment import Environment, CostLedger, TaskId, TaskSpec

SOLVER_KINDS = ("single_task_ga", "mfea", "emea")
_DEFAULT_POP = {"single_task_ga": 10, "mfea": 20, "emea": 10}


@dataclass(frozen=True)
class SolverConfig:
    """Algorithmic knobs shared by all solvers.

    ``pop_size`` of None picks the solver's default (20 for mfea, else 10).
    ``pm_prob`` of None resolves to 1/dim at run time. ``seed`` accepts
    anything ``numpy.random.default_rng`` does.
    """

    kind: str
    pop_size: int | None = None
    rmp: float = 0.3
    transfer_interval: int = 5
    transfer_count: int = 2
    sbx_eta: float = 15.0
    pm_eta: float = 15.0
    pm_prob: float | None = None
    seed: object = None

    def __post_init__(self) -> None:
        if self.kind not in SOLVER_KINDS:
            raise ValueError(f"unknown solver kind {self.kind!r}; expected one of {SOLVER_KINDS}")
        if self.pop_size is not None and (
            not isinstance(self.pop_size, int) or isinstance(self.pop_size, bool) or self.pop_size < 2
        ):
            raise ValueError(f"pop_size must be an integer >= 2, got {self.pop_size!r}")
        if not 0.0 <= self.rmp <= 1.0:
            raise ValueError(f"rmp must lie in [0, 1], got {self.rmp!r}")
        if not isinstance(self.transfer_interval, int) or isinstance(self.transfer_interval, bool) or self.transfer_interval < 1:
            raise ValueError(f"transfer_interval must be an integer >= 1, got {self.transfer_interval!r}")
        if not isinstance(self.transfer_count, int) or isinstance(self.transfer_count, bool) or self.transfer_count < 0:
            raise ValueError(f"transfer_count must be an integer >= 0, got {self.transfer_count!r}")
        if not self.sbx_eta > 0 or not self.pm_eta > 0:
            raise ValueError("distribution indices must be positive")
        if self.pm_prob is not None and not 0.0 <= self.pm_prob <= 1.0:
            raise ValueError(f"pm_prob must lie in [0, 1], got {self.pm_prob!r}")

    def resolved_pop_size(self) -> int:
        return self.pop_size if self.pop_size is not None else _DEFAULT_POP[self.kind]


def decode_weights(keys) -> np.ndarray:
    """Map random keys in [0, 1] to weights in [-1, 1]: w = 2*keys - 1."""
    return 2.0 * np.asarray(keys, dtype=np.float64) - 1.0


def sbx_crossover(p1, p2, eta: float, rng) -> tuple[np.ndarray, np.ndarray]:
    """Simulated binary crossover, children clamped to [0, 1].

    Identical parents produce bit-identical children.
    """
    p1 = np.asarray(p1, dtype=np.float64)
    p2 = np.asarray(p2, dtype=np.float64)
    u = rng.random(p1.shape)
    beta = np.where(
        u <= 0.5,
        (2.0 * u) ** (1.0 / (eta + 1.0)),
        (0.5 / (1.0 - u)) ** (1.0 / (eta + 1.0)),
    )
    mean = 0.5 * (p1 + p2)
    spread = 0.5 * beta * (p1 - p2)
    c1 = np.clip(mean + spread, 0.0, 1.0)
    c2 = np.clip(mean - spread, 0.0, 1.0)
    return c1, c2


def pm_mutation(genome, eta: float, prob: float, rng) -> np.ndarray:
    """Polynomial mutation per gene with probability ``prob``, in [0, 1].

    Draws two uniforms per gene regardless of the mask so the stream
    advance is independent of outcomes.
    """
    g = np.asarray(genome, dtype=np.float64)
    mask = rng.random(g.shape) < prob
    u = rng.random(g.shape)
    toward_zero = (2.0 * u) ** (1.0 / (eta + 1.0)) - 1.0
    toward_one = 1.0 - (2.0 * (1.0 - u)) ** (1.0 / (eta + 1.0))
    child = g.copy()
    low = mask & (u <= 0.5)
    high = mask & (u > 0.5)
    child = np.where(low, g + toward_zero * g, child)
    child = np.where(high, g + toward_one * (1.0 - g), child)
    return np.clip(child, 0.0, 1.0)


@dataclass(frozen=True)
class TransferMap:
    """Linear map between two tasks' key spaces; application clamps."""

    matrix: np.ndarray

    def apply(self, genomes) -> np.ndarray:
        G = np.atleast_2d(np.asarray(genomes, dtype=np.float64))
        return np.clip(G @ self.matrix.T, 0.0, 1.0)


def fit_transfer_map(P, Q, epsilon: float = 1e-6) -> TransferMap:
    """Ridge-regularized least squares map M minimizing ||M P - Q||_F.

    ``P`` and ``Q`` hold one genome per column, sorted by their own task
    objective (best first). Only the first min(m_P, m_Q) columns are used.
    M = Q P^T (P P^T + epsilon I)^{-1}.
    """
    P = np.asarray(P, dtype=np.float64)
    Q = np.asarray(Q, dtype=np.float64)
    if P.ndim != 2 or Q.ndim != 2:
        raise ValueError("P and Q must be 2-D (dim x m) matrices")
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    m = min(P.shape[1], Q.shape[1])
    if m == 0:
        raise ValueError("P and Q need at least one column")
    P = P[:, :m]
    Q = Q[:, :m]
    A = P @ P.T
    A[np.diag_indices_from(A)] += epsilon
    M = np.linalg.solve(A, P @ Q.T).T
    return TransferMap(matrix=M)


@dataclass(frozen=True)
class TracePoint:
    """One convergence sample; costs are exact Fractions."""

    generation: int
    cumulative_cost: Fraction
    best_objective_expensive: float | None
    best_auc_expensive: float | None
    best_objective_cheap: float | None
    adjust_event: bool


@dataclass
class Population:
    """Unified-population state: one row per individual."""

    genomes: np.ndarray
    factorial_costs: np.ndarray
    factorial_ranks: np.ndarray
    skills: np.ndarray
    scalar_fitness: np.ndarray


@dataclass
class TaskPopulation:
    """Single-task population state."""

    genomes: np.ndarray
    objectives: np.ndarray


@dataclass
class RunResult:
    kind: str
    best_weights: np.ndarray | None
    best_objective: float | None
    trace: list[TracePoint]
    state: object


def _eval_batch(task: TaskSpec, keys: np.ndarray, jobs: int) -> np.ndarray:
    """Decode and evaluate a batch of genomes on one task.

    With jobs > 1 the batch is split across a thread pool; results are
    bit-identical to the serial path because the kernel treats every row
    independently.
    """
    W = decode_weights(np.atleast_2d(keys))
    if jobs <= 1 or W.shape[0] < 2:
        return task.objective_batch(W)
    parts = np.array_split(np.arange(W.shape[0]), min(jobs, W.shape[0]))
    with ThreadPoolExecutor(max_workers=len(parts)) as pool:
        futures = [pool.submit(task.objective_batch, W[p]) for p in parts]
        return np.concatenate([f.result() for f in futures])


def _population_stats(costs: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Factorial ranks, skill factors, and scalar fitness from a cost table.

    ``costs`` is (m, 2) with inf marking unevaluated entries. Ranks are
    1-based per task (unevaluated rank last, ties keep index order); the
    skill factor is the argmin rank among evaluated tasks (lower task id on
    ties) and scalar fitness is 1/rank on the skill task.
    """
    m = costs.shape[0]
    ranks = np.empty((m, 2), dtype=np.int64)
    for tid in (0, 1):
        order = np.argsort(costs[:, tid], kind="stable")
        ranks[order, tid] = np.arange(1, m + 1)
    masked = ranks.astype(np.float64)
    masked[~np.isfinite(costs)] = np.inf
    skills = np.argmin(masked, axis=1).astype(np.int64)
    best_rank = masked[np.arange(m), skills]
    fitness = np.where(np.isfinite(best_rank), 1.0 / best_rank, 0.0)
    return ranks, skills, fitness


def _finite_min(values: np.ndarray) -> float | None:
    finite = values[np.isfinite(values)]
    return float(finite.min()) if finite.size else None


def _archive_trace_point(
    env: Environment, generation: int, best_cheap: float | None, adjust_event: bool = False
) -> TracePoint:
    obj = env.best_expensive_objective
    if obj is None:
        best_obj, best_auc = None, None
    else:
        w = env.best_expensive_weights
        best_obj = obj
        best_auc = 1.0 - (obj - 0.5 * env.lam * float(w @ w))
    return TracePoint(
        generation=generation,
        cumulative_cost=env.ledger.spent,
        best_objective_expensive=best_obj,
        best_auc_expensive=best_auc,
        best_objective_cheap=best_cheap,
        adjust_event=adjust_event,
    )


def _tournament(rng, objectives: np.ndarray) -> int:
    i, j = rng.integers(objectives.shape[0], size=2)
    return int(i) if objectives[i] <= objectives[j] else int(j)


def _ga_offspring(genomes: np.ndarray, objectives: np.ndarray, config: SolverConfig, pm_prob: float, rng) -> np.ndarray:
    n = genomes.shape[0]
    children = np.empty_like(genomes)
    k = 0
    while k + 1 < n:
        a = _tournament(rng, objectives)
        b = _tournament(rng, objectives)
        c1, c2 = sbx_crossover(genomes[a], genomes[b], config.sbx_eta, rng)
        children[k] = pm_mutation(c1, config.pm_eta, pm_prob, rng)
        children[k + 1] = pm_mutation(c2, config.pm_eta, pm_prob, rng)
        k += 2
    if k < n:
        a = _tournament(rng, objectives)
        children[k] = pm_mutation(genomes[a], config.pm_eta, pm_prob, rng)
    return children


def run_single_task_ga(
    task: TaskSpec,
    ledger: CostLedger,
    config: SolverConfig,
    env: Environment | None = None,
    jobs: int = 1,
) -> RunResult:
    """(mu+lambda) GA: binary-tournament parents, SBX+PM children, elitist
    truncation by objective. Passing ``env`` keeps its expensive-task
    archive up to date when this task is the expensive one.
    """
    rng = np.random.default_rng(config.seed)
    n = config.resolved_pop_size()
    dim = task.view.base.dim
    pm_prob = config.pm_prob if config.pm_prob is not None else 1.0 / dim

    genomes = rng.random((n, dim))
    objectives = np.full(n, np.inf)
    best_w: np.ndarray | None = None
    best_obj = np.inf

    def note(keys_row: np.ndarray, value: float) -> None:
        nonlocal best_w, best_obj
        if env is not None and task.task_id == TaskId.EXPENSIVE:
            env.record_expensive(decode_weights(keys_row), value)
        if value < best_obj:
            best_obj = float(value)
            best_w = decode_weights(keys_row)

    values = _eval_batch(task, genomes, jobs)
    interrupted = False
    for i in range(n):
        if ledger.exhausted:
            interrupted = True
            break
        ledger.charge(task.task_id)
        objectives[i] = values[i]
        note(genomes[i], values[i])

    trace = [_ga_trace_point(task, ledger, best_w, best_obj, 0)]
    t = 1
    while not interrupted and not ledger.exhausted:
        children = _ga_offspring(genomes, objectives, config, pm_prob, rng)
        values = _eval_batch(task, children, jobs)
        kept = n
        for i in range(n):
            if ledger.exhausted:
                kept = i
                break
            ledger.charge(task.task_id)
            note(children[i], values[i])
        pool_g = np.vstack([genomes, children[:kept]])
        pool_o = np.concatenate([objectives, values[:kept]])
        order = np.argsort(pool_o, kind="stable")[:n]
        genomes = pool_g[order]
        objectives = pool_o[order]
        trace.append(_ga_trace_point(task, ledger, best_w, best_obj, t))
        t += 1

    return RunResult(
        kind="single_task_ga",
        best_weights=best_w,
        best_objective=None if best_w is None else best_obj,
        trace=trace,
        state=TaskPopulation(genomes=genomes, objectives=objectives),
    )


def _ga_trace_point(
    task: TaskSpec, ledger: CostLedger, best_w: np.ndarray | None, best_obj: float, generation: int
) -> TracePoint:
    if best_w is None:
        obj = auc = None
    else:
        obj = best_obj
        auc = 1.0 - (best_obj - 0.5 * task.lam * float(best_w @ best_w))
    expensive = task.task_id == TaskId.EXPENSIVE
    return TracePoint(
        generation=generation,
        cumulative_cost=ledger.spent,
        best_objective_expensive=obj if expensive else None,
        best_auc_expensive=auc if expensive else None,
        best_objective_cheap=None if expensive else obj,
        adjust_event=False,
    )


def _mfea_offspring(
    genomes: np.ndarray, skills: np.ndarray, config: SolverConfig, pm_prob: float, rng
) -> tuple[np.ndarray, np.ndarray]:
    """Assortative mating with selective imitation.

    Parents are paired by a random permutation. Same-skill pairs always
    cross; cross-skill pairs cross with probability rmp, otherwise each
    parent mutates alone and passes its skill on. Crossover children
    inherit either parent's skill with equal probability.
    """
    n = genomes.shape[0]
    child_genomes = np.empty_like(genomes)
    child_skills = np.empty(n, dtype=np.int64)
    perm = rng.permutation(n)
    k = 0
    while k + 1 < n:
        a, b = perm[k], perm[k + 1]
        if skills[a] == skills[b] or rng.random() < config.rmp:
            c1, c2 = sbx_crossover(genomes[a], genomes[b], config.sbx_eta, rng)
            child_genomes[k] = pm_mutation(c1, config.pm_eta, pm_prob, rng)
            child_genomes[k + 1] = pm_mutation(c2, config.pm_eta, pm_prob, rng)
            child_skills[k] = skills[a] if rng.random() < 0.5 else skills[b]
            child_skills[k + 1] = skills[a] if rng.random() < 0.5 else skills[b]
        else:
            child_genomes[k] = pm_mutation(genomes[a], config.pm_eta, pm_prob, rng)
            child_genomes[k + 1] = pm_mutation(genomes[b], config.pm_eta, pm_prob, rng)
            child_skills[k] = skills[a]
            child_skills[k + 1] = skills[b]
        k += 2
    if k < n:
        a = perm[k]
        child_genomes[k] = pm_mutation(genomes[a], config.pm_eta, pm_prob, rng)
        child_skills[k] = skills[a]
    return child_genomes, child_skills


def run_mfea(env: Environment, config: SolverConfig, jobs: int = 1) -> RunResult:
    """Multifactorial EA over both tasks with a fixed random-mating
    probability and periodic cheap-task adjustment.

    The initial population is evaluated on both tasks (charged); offspring
    are evaluated only on their skill task. Every ``env.delta`` generations
    the cheap view is rebuilt from the archived best expensive weights, all
    cheap objectives are invalidated, and the CHEAP-skilled cohort is
    re-evaluated at one cheap unit each.
    """
    rng = np.random.default_rng(config.seed)
    n = config.resolved_pop_size()
    dim = env.dataset.dim
    pm_prob = config.pm_prob if config.pm_prob is not None else 1.0 / dim
    ledger = env.ledger
    cheap = TaskId.CHEAP.value

    genomes = rng.random((n, dim))
    costs = np.full((n, 2), np.inf)
    interrupted = False
    for tid in (TaskId.CHEAP, TaskId.EXPENSIVE):
        values = _eval_batch(env.tasks[tid], genomes, jobs)
        for i in range(n):
            if ledger.exhausted:
                interrupted = True
                break
            ledger.charge(tid)
            costs[i, tid.value] = values[i]
            if tid == TaskId.EXPENSIVE:
                env.record_expensive(decode_weights(genomes[i]), values[i])
        if interrupted:
            break

    ranks, skills, fitness = _population_stats(costs)
    trace = [_archive_trace_point(env, 0, _finite_min(costs[:, cheap]))]

    t = 1
    while not interrupted and not ledger.exhausted:
        adjust_event = False
        if env.delta is not None and t % env.delta == 0 and env.best_expensive_weights is not None:
            env.adjust_cheap_task(env.best_expensive_weights, generation=t)
            adjust_event = True
            costs[:, cheap] = np.inf
            refresh = np.flatnonzero(skills == cheap)
            if refresh.size:
                values = _eval_batch(env.tasks[TaskId.CHEAP], genomes[refresh], jobs)
                for pos, i in enumerate(refresh):
                    if ledger.exhausted:
                        interrupted = True
                        break
                    ledger.charge(TaskId.CHEAP)
                    costs[i, cheap] = values[pos]
            ranks, skills, fitness = _population_stats(costs)
            if interrupted or ledger.exhausted:
                trace.append(_archive_trace_point(env, t, _finite_min(costs[:, cheap]), True))
                break

        child_genomes, child_skills = _mfea_offspring(genomes, skills, config, pm_prob, rng)
        child_values = np.empty(n, dtype=np.float64)
        for tid in (TaskId.CHEAP, TaskId.EXPENSIVE):
            group = np.flatnonzero(child_skills == tid.value)
            if group.size:
                child_values[group] = _eval_batch(env.tasks[tid], child_genomes[group], jobs)

        child_costs = np.full((n, 2), np.inf)
        kept = n
        for i in range(n):
            if ledger.exhausted:
                kept = i
                break
            tid = TaskId(int(child_skills[i]))
            ledger.charge(tid)
            child_costs[i, tid.value] = child_values[i]
            if tid == TaskId.EXPENSIVE:
                env.record_expensive(decode_weights(child_genomes[i]), child_values[i])

        pool_genomes = np.vstack([genomes, child_genomes[:kept]])
        pool_costs = np.vstack([costs, child_costs[:kept]])
        _, _, pool_fitness = _population_stats(pool_costs)
        order = np.argsort(-pool_fitness, kind="stable")[:n]
        genomes = pool_genomes[order]
        costs = pool_costs[order]
        ranks, skills, fitness = _population_stats(costs)

        trace.append(_archive_trace_point(env, t, _finite_min(costs[:, cheap]), adjust_event))
        t += 1

    return RunResult(
        kind="mfea",
        best_weights=env.best_expensive_weights,
        best_objective=env.best_expensive_objective,
        trace=trace,
        state=Population(
            genomes=genomes,
            factorial_costs=costs,
            factorial_ranks=ranks,
            skills=skills,
            scalar_fitness=fitness,
        ),
    )


def run_emea(env: Environment, config: SolverConfig, jobs: int = 1) -> RunResult:
    """Two per-task GA populations with explicit transfer.

    Every ``transfer_interval`` generations a linear map is fit between the
    objective-sorted populations in both directions; each task's top
    ``transfer_count`` individuals are mapped into the other task, evaluated
    there (charged), and overwrite that population's current worst members.
    Cheap-task adjustment refreshes the whole cheap population.
    """
    rng = np.random.default_rng(config.seed)
    n = config.resolved_pop_size()
    dim = env.dataset.dim
    pm_prob = config.pm_prob if config.pm_prob is not None else 1.0 / dim
    ledger = env.ledger
    task_ids = (TaskId.CHEAP, TaskId.EXPENSIVE)

    genomes = [rng.random((n, dim)), rng.random((n, dim))]
    objectives = [np.full(n, np.inf), np.full(n, np.inf)]
    interrupted = False
    for tid in task_ids:
        values = _eval_batch(env.tasks[tid], genomes[tid.value], jobs)
        for i in range(n):
            if ledger.exhausted:
                interrupted = True
                break
            ledger.charge(tid)
            objectives[tid.value][i] = values[i]
            if tid == TaskId.EXPENSIVE:
                env.record_expensive(decode_weights(genomes[tid.value][i]), values[i])
        if interrupted:
            break

    trace = [_archive_trace_point(env, 0, _finite_min(objectives[0]))]

    t = 1
    while not interrupted and not ledger.exhausted:
        adjust_event = False
        if env.delta is not None and t % env.delta == 0 and env.best_expensive_weights is not None:
            env.adjust_cheap_task(env.best_expensive_weights, generation=t)
            adjust_event = True
            values = _eval_batch(env.tasks[TaskId.CHEAP], genomes[0], jobs)
            objectives[0][:] = np.inf
            for i in range(n):
                if ledger.exhausted:
                    interrupted = True
                    break
                ledger.charge(TaskId.CHEAP)
                objectives[0][i] = values[i]
            if interrupted or ledger.exhausted:
                trace.append(_archive_trace_point(env, t, _finite_min(objectives[0]), True))
                break

        for tid in task_ids:
            children = _ga_offspring(genomes[tid.value], objectives[tid.value], config, pm_prob, rng)
            values = _eval_batch(env.tasks[tid], children, jobs)
            kept = n
            for i in range(n):
                if ledger.exhausted:
                    kept = i
                    interrupted = True
                    break
                ledger.charge(tid)
                if tid == TaskId.EXPENSIVE:
                    env.record_expensive(decode_weights(children[i]), values[i])
            pool_g = np.vstack([genomes[tid.value], children[:kept]])
            pool_o = np.concatenate([objectives[tid.value], values[:kept]])
            order = np.argsort(pool_o, kind="stable")[:n]
            genomes[tid.value] = pool_g[order]
            objectives[tid.value] = pool_o[order]
            if interrupted:
                break

        if (
            not interrupted
            and not ledger.exhausted
            and config.transfer_count > 0
            and t % config.transfer_interval == 0
        ):
            count = min(config.transfer_count, n)
            orders = [np.argsort(objectives[0], kind="stable"), np.argsort(objectives[1], kind="stable")]
            sorted_pops = [genomes[0][orders[0]].T, genomes[1][orders[1]].T]
            top_genomes = [sorted_pops[0][:, :count].T.copy(), sorted_pops[1][:, :count].T.copy()]
            for target in (0, 1):
                source = 1 - target
                mapping = fit_transfer_map(sorted_pops[source], sorted_pops[target])
                candidates = mapping.apply(top_genomes[source])
                values = _eval_batch(env.tasks[task_ids[target]], candidates, jobs)
                worst_first = np.argsort(objectives[target], kind="stable")[::-1]
                for k in range(candidates.shape[0]):
                    if ledger.exhausted:
                        interrupted = True
                        break
                    ledger.charge(task_ids[target])
                    slot = worst_first[k]
                    genomes[target][slot] = candidates[k]
                    objectives[target][slot] = values[k]
                    if target == 1:
                        env.record_expensive(decode_weights(candidates[k]), values[k])
                if interrupted:
                    break

        trace.append(_archive_trace_point(env, t, _finite_min(objectives[0]), adjust_event))
        if interrupted or ledger.exhausted:
            break
        t += 1

    return RunResult(
        kind="emea",
        best_weights=env.best_expensive_weights,
        best_objective=env.best_expensive_objective,
        trace=trace,
        state={
            TaskId.CHEAP: TaskPopulation(genomes=genomes[0], objectives=objectives[0]),
            TaskId.EXPENSIVE: TaskPopulation(genomes=genomes[1], objectives=objectives[1]),
        },
    )


def dispatch_solver(env: Environment, config: SolverConfig, jobs: int = 1) -> RunResult:
    """Run the configured solver against an environment.

    The single-task baseline optimizes the expensive task directly at the
    same budget so comparisons are cost-fair.
    """
    if config.kind == "single_task_ga":
        return run_single_task_ga(env.tasks[TaskId.EXPENSIVE], env.ledger, config, env=env, jobs=jobs)
    if config.kind == "mfea":
        return run_mfea(env, config, jobs=jobs)
    if config.kind == "emea":
        return run_emea(env, config, jobs=jobs)
    raise ValueError(f"unknown solver kind {config.kind!r}")
