"""Lock-step multi-task execution, task relatedness, fragment transfer.

Every registered task advances exactly one learning iteration per step
(round-robin, which realizes the barrier contract single-threadedly).
Task-to-task relatedness is estimated from observed-list overlap: the
relatedness of task a to task b is the fraction of OL_a's total fragment
fitness carried by fragments shared with OL_b.  It is asymmetric by
construction.

Transfer follows a stochastic filter: a relatedness threshold is drawn
per query, sources below it are skipped, and each candidate fragment
from a surviving source must itself look applicable (its source fitness,
scaled against the shared fragments' mean, times the source relatedness
must clear the same threshold).  Survivors enter a roulette wheel with
an adjusted vote that rescales their source fitness by how well the
shared fragments perform on the target.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .features import FeatureModule, FeatureParams, ObservedList
from .fragments import CodeFragment, FragmentError
from .problems import ProblemSpec, index_to_bits
from .spaces import BooleanSpace, DEFAULT_TABLE_LIMIT, RowSpace
from .xcs import XcsParams, XcsSystem

R_THRES_FLOOR = 0.1


# -- relatedness arithmetic ----------------------------------------------------


def relatedness(source_ol: ObservedList, target_ol: ObservedList) -> float:
    """Fitness share of the source OL covered by fragments the target
    also observes; 0 when the source carries no fitness at all."""
    source = source_ol.owner
    total = 0.0
    shared = 0.0
    for record in source_ol.records():
        f = record.fitness_for(source)
        total += f
        if record.key in target_ol:
            shared += f
    if total <= 0.0:
        return 0.0
    return shared / total


def shared_fitness_sums(source_ol: ObservedList, target_ol: ObservedList) -> tuple[float, float, int]:
    """(sum of source fitness, sum of target fitness, count) over the
    fragments common to both OLs."""
    source = source_ol.owner
    target = target_ol.owner
    sum_source = 0.0
    sum_target = 0.0
    count = 0
    for record in source_ol.records():
        if record.key in target_ol:
            sum_source += record.fitness_for(source)
            sum_target += record.fitness_for(target)
            count += 1
    return sum_source, sum_target, count


def fragment_relatedness(record, source_ol: ObservedList, target_ol: ObservedList,
                         rel: float | None = None,
                         literal_filter: bool = False) -> float:
    """Expected applicability of one source fragment to the target task.

    Scales the source-to-target relatedness by the fragment's fitness
    relative to the mean source fitness of the shared fragments; with
    ``literal_filter`` the mean is taken over target fitness instead
    (an alternative reading kept behind a switch).
    """
    if rel is None:
        rel = relatedness(source_ol, target_ol)
    sum_source, sum_target, count = shared_fitness_sums(source_ol, target_ol)
    reference = sum_target if literal_filter else sum_source
    if count == 0 or reference <= 0.0:
        return 0.0
    mean_shared = reference / count
    return (record.fitness_for(source_ol.owner) / mean_shared) * rel


def adjusted_vote(record, source_ol: ObservedList, target_ol: ObservedList,
                  rel: float | None = None) -> float:
    """Roulette weight of a transferred fragment in the target task."""
    if rel is None:
        rel = relatedness(source_ol, target_ol)
    sum_source, sum_target, _ = shared_fitness_sums(source_ol, target_ol)
    if sum_source <= 0.0:
        return 0.0
    return record.fitness_for(source_ol.owner) * (sum_target / sum_source) * rel


def draw_threshold(rng) -> float:
    return max(R_THRES_FLOOR, rng.uniform(0.0, 1.0))


# -- coordinator ---------------------------------------------------------------


@dataclass
class CoordinatorParams:
    relatedness_interval: int = 100    # matrix recomputation cadence, iterations
    transfer_enabled: bool = True
    literal_transfer_filter: bool = False
    accuracy_interval: int = 50        # sampling cadence, exploration trials
    ol_interval: int = 500             # OL snapshot cadence, iterations


class TaskRuntime:
    """One task: a learning system plus its own instance stream."""

    def __init__(self, task_id: int, name: str, system: XcsSystem,
                 problem: ProblemSpec | None = None,
                 labels: np.ndarray | None = None,
                 stream_rng: random.Random | None = None):
        self.task_id = task_id
        self.name = name
        self.system = system
        self.problem = problem
        self.labels = labels
        self.stream_rng = stream_rng

    def next_instance(self, shared_state=None):
        """Sample one labeled state from the task's own stream."""
        space = self.system.space
        if space.tabled:
            state = space.sample_index(self.stream_rng)
            return state, int(self.labels[state])
        bits = index_to_bits(self.stream_rng.getrandbits(space.arity), space.arity)
        return bits, self.problem.oracle(bits)


class BroadcastRuntime(TaskRuntime):
    """One task of a one-vs-rest decomposition: every task sees the same
    broadcast row each iteration, labeled by its own class view."""

    def next_instance(self, shared_state=None):
        return shared_state, int(self.labels[shared_state])


@dataclass
class MetricsBundle:
    """Everything a run reports, as plain rows ready for CSV export."""

    task_names: dict[int, str]
    accuracy_rows: list[tuple[int, int, float, float]] = field(default_factory=list)
    relatedness_rows: list[tuple[int, int, int, float]] = field(default_factory=list)
    ol_rows: list[tuple[int, int, int, str, float]] = field(default_factory=list)
    final_matrix: dict[tuple[int, int], float] = field(default_factory=dict)
    final_ols: dict[int, list[tuple[str, float]]] = field(default_factory=dict)
    population_rows: dict[int, list[dict]] = field(default_factory=dict)
    exploration_trials: int = 0
    iterations: int = 0
    no_match_exploits: dict[int, int] = field(default_factory=dict)

    def accuracy_series(self, task: int) -> list[tuple[int, float]]:
        return [(t, acc) for tid, t, acc, _ in self.accuracy_rows if tid == task]

    def generality_series(self, task: int) -> list[tuple[int, float]]:
        return [(t, g) for tid, t, _, g in self.accuracy_rows if tid == task]

    def relatedness_series(self, source: int, target: int) -> list[tuple[int, float]]:
        return [
            (it, value)
            for it, src, dst, value in self.relatedness_rows
            if src == source and dst == target
        ]

    def final_accuracy(self, task: int) -> float:
        series = self.accuracy_series(task)
        return series[-1][1] if series else 0.0


def trials_to_threshold(series: Sequence[tuple[int, float]], threshold: float) -> int | None:
    """First sampled exploration-trial count reaching the accuracy
    threshold, or None when never reached."""
    for trials, accuracy in series:
        if accuracy >= threshold:
            return trials
    return None


class MultiTaskCoordinator:
    """Runs all task systems in lock-step and brokers fragment transfer."""

    def __init__(self, features: FeatureModule, params: CoordinatorParams,
                 transfer_rng: random.Random):
        self.features = features
        self.params = params
        self.rng = transfer_rng
        self.tasks: list[TaskRuntime] = []
        self.iteration = 0
        self.explore_count = 0
        self.matrix: dict[tuple[int, int], float] = {}
        self._broadcast_rng: random.Random | None = None
        self._broadcast_indices: list[int] = []
        if params.transfer_enabled:
            features.external_provider = self.provide_external

    def add_task(self, runtime: TaskRuntime) -> None:
        self.tasks.append(runtime)

    def set_broadcast(self, rng: random.Random, indices: Sequence[int]) -> None:
        """Draw one shared row per iteration from ``indices`` (training
        stream for one-vs-rest runs)."""
        self._broadcast_rng = rng
        self._broadcast_indices = list(indices)

    # -- transfer --------------------------------------------------------------

    def provide_external(self, target: int):
        return self.select_external_cf(target, self.rng)

    def select_external_cf(self, target: int, rng=None,
                           r_thres: float | None = None
                           ) -> tuple[CodeFragment, float] | None:
        """One externally sourced fragment with its adjusted vote, or None."""
        if len(self.tasks) < 2:
            return None
        if rng is None:
            rng = self.rng
        if r_thres is None:
            r_thres = draw_threshold(rng)
        target_ol = self.features.observed[target]
        target_arity = self.features.arities[target]
        literal = self.params.literal_transfer_filter
        candidates: list[tuple[CodeFragment, float]] = []
        for runtime in self.tasks:
            source = runtime.task_id
            if source == target:
                continue
            source_ol = self.features.observed[source]
            rel = relatedness(source_ol, target_ol)
            if rel < r_thres:
                continue
            sum_source, sum_target, count = shared_fitness_sums(source_ol, target_ol)
            reference = sum_target if literal else sum_source
            if count == 0 or reference <= 0.0:
                continue
            mean_shared = reference / count
            vote_ratio = (sum_target / sum_source) if sum_source > 0.0 else 0.0
            for record in source_ol.ranked():
                if record.key in target_ol:
                    continue
                if record.fragment.max_leaf >= target_arity:
                    continue  # not evaluable on the target's inputs
                f_source = record.fitness_for(source)
                if (f_source / mean_shared) * rel < r_thres:
                    continue
                candidates.append((record.fragment, f_source * vote_ratio * rel))
        if not candidates:
            return None
        total = sum(vote for _, vote in candidates)
        if total <= 0.0:
            return candidates[rng.randrange(len(candidates))]
        pick = rng.random() * total
        acc = 0.0
        for cf, vote in candidates:
            acc += vote
            if pick < acc:
                return cf, vote
        return candidates[-1]

    # -- relatedness matrix ------------------------------------------------------

    def recompute_matrix(self) -> dict[tuple[int, int], float]:
        matrix = {}
        for a in self.tasks:
            ol_a = self.features.observed[a.task_id]
            for b in self.tasks:
                ol_b = self.features.observed[b.task_id]
                matrix[(a.task_id, b.task_id)] = relatedness(ol_a, ol_b)
        self.matrix = matrix
        return matrix

    # -- execution ----------------------------------------------------------------

    def step(self, metrics: MetricsBundle | None = None) -> None:
        """Advance every task by one iteration, then sample metrics."""
        explore = self.iteration % 2 == 0
        shared_state = None
        if self._broadcast_rng is not None:
            shared_state = self._broadcast_indices[
                self._broadcast_rng.randrange(len(self._broadcast_indices))
            ]
        for runtime in self.tasks:
            state, label = runtime.next_instance(shared_state)
            try:
                runtime.system.run_trial(state, label, explore)
            except FragmentError as exc:
                raise RuntimeError(
                    f"task {runtime.task_id} ({runtime.name}) failed structurally "
                    f"at iteration {self.iteration}: {exc}"
                ) from exc
        self.iteration += 1
        if explore:
            self.explore_count += 1
        if metrics is None:
            return
        p = self.params
        if explore and self.explore_count % p.accuracy_interval == 0:
            for runtime in self.tasks:
                metrics.accuracy_rows.append((
                    runtime.task_id,
                    self.explore_count,
                    runtime.system.moving_accuracy(),
                    runtime.system.moving_generality_rate(),
                ))
        if self.iteration % p.relatedness_interval == 0:
            matrix = self.recompute_matrix()
            for (src, dst), value in sorted(matrix.items()):
                if src != dst:
                    metrics.relatedness_rows.append((self.iteration, src, dst, value))
        if self.iteration % p.ol_interval == 0:
            for runtime in self.tasks:
                snapshot = self.features.ol_snapshot(runtime.task_id)
                for rank, (key, fitness) in enumerate(snapshot):
                    metrics.ol_rows.append((self.iteration, runtime.task_id, rank, key, fitness))

    def run(self, exploration_trials: int) -> MetricsBundle:
        """Alternate explore/exploit until the exploration budget is spent."""
        metrics = MetricsBundle({rt.task_id: rt.name for rt in self.tasks})
        total_iterations = 2 * exploration_trials
        for _ in range(total_iterations):
            self.step(metrics)
        metrics.exploration_trials = self.explore_count
        metrics.iterations = self.iteration
        metrics.final_matrix = self.recompute_matrix()
        for runtime in self.tasks:
            metrics.final_ols[runtime.task_id] = self.features.ol_snapshot(runtime.task_id)
            metrics.population_rows[runtime.task_id] = runtime.system.population.snapshot()
            metrics.no_match_exploits[runtime.task_id] = runtime.system.no_match_exploits
        return metrics


# -- builders ------------------------------------------------------------------


def derive_seeds(seed: int, count: int) -> list[int]:
    """Fixed-order child seeds for one master seed."""
    base = random.Random(("mtlcs", seed).__repr__())
    return [base.getrandbits(63) for _ in range(count)]


def build_boolean_coordinator(
    problems: Sequence[ProblemSpec],
    seed: int,
    xcs_params: XcsParams,
    feature_params: FeatureParams | None = None,
    coord_params: CoordinatorParams | None = None,
    table_limit: int = DEFAULT_TABLE_LIMIT,
) -> MultiTaskCoordinator:
    """One coordinator with an independent instance stream per problem."""
    coord_params = coord_params or CoordinatorParams()
    features = FeatureModule(feature_params or FeatureParams())
    seeds = derive_seeds(seed, 1 + 2 * len(problems))
    coordinator = MultiTaskCoordinator(features, coord_params, random.Random(seeds[0]))
    for task_id, problem in enumerate(problems):
        space = BooleanSpace(problem.arity, table_limit)
        system = XcsSystem(task_id, space, xcs_params, features,
                           random.Random(seeds[1 + 2 * task_id]))
        labels = space.label_table(problem.oracle) if space.tabled else None
        coordinator.add_task(TaskRuntime(
            task_id, problem.name, system,
            problem=problem,
            labels=labels,
            stream_rng=random.Random(seeds[2 + 2 * task_id]),
        ))
    return coordinator


def build_broadcast_coordinator(
    space: RowSpace,
    label_views: Sequence[np.ndarray],
    names: Sequence[str],
    seed: int,
    xcs_params: XcsParams,
    feature_params: FeatureParams | None = None,
    coord_params: CoordinatorParams | None = None,
    train_indices: Sequence[int] | None = None,
) -> MultiTaskCoordinator:
    """One coordinator where every task sees the same row each iteration
    with its own binary label (one-vs-rest decomposition)."""
    coord_params = coord_params or CoordinatorParams()
    features = FeatureModule(feature_params or FeatureParams())
    seeds = derive_seeds(seed, 2 + len(label_views))
    coordinator = MultiTaskCoordinator(features, coord_params, random.Random(seeds[0]))
    indices = list(train_indices) if train_indices is not None else list(range(space.size))
    coordinator.set_broadcast(random.Random(seeds[1]), indices)
    for task_id, (labels, name) in enumerate(zip(label_views, names)):
        system = XcsSystem(task_id, space, xcs_params, features,
                           random.Random(seeds[2 + task_id]))
        coordinator.add_task(BroadcastRuntime(task_id, name, system, labels=labels))
    return coordinator
