"""Accuracy-based classifier system with fragment conditions.

One :class:`XcsSystem` learns one binary task online.  A rule's condition
is a conjunction of code fragments (all must evaluate to 1; an empty
condition matches everything).  Fitness follows the usual accuracy-based
scheme; rule discovery is a niche genetic algorithm; new fragments come
from a feature module (see :mod:`mtlcs.features`) instead of being built
by hand.

The population keeps numpy mirrors of per-classifier scalars so the two
whole-population operations that run every trial (match-counter updates
and deletion votes) stay vectorized.  The mirrors are written through
:meth:`RulePopulation.sync`; classifier objects remain the source of
truth for everything except the match counters, which live only in the
population arrays.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .fragments import CodeFragment
from .spaces import StateSpace, condition_mask, mask_to_bytes

EFFICIENCY_SHARE = 0.8  # action-set members within this share of the best
                        # fitness-per-leaf count as "efficient"


@dataclass
class XcsParams:
    """Learning parameters (defaults are the standard configuration)."""

    population_size: int = 500
    learning_rate: float = 0.2           # beta
    error_threshold: float = 10.0        # epsilon_0, payoff range 1000
    accuracy_coeff: float = 0.1          # alpha
    accuracy_power: float = 5.0          # nu
    ga_threshold: float = 25.0           # theta_GA
    crossover_rate: float = 0.2          # chi
    mutation_rate: float = 0.9           # mu
    deletion_threshold: int = 20         # theta_del
    deletion_fitness_fraction: float = 0.1
    subsumption_threshold: int = 50      # theta_sub
    spec_probability: float = 0.25       # p_spec per covering slot
    initial_prediction: float = 10.0
    initial_error: float = 0.0
    initial_fitness: float = 0.01
    offspring_fitness_reduction: float = 0.1
    reward: float = 1000.0
    cover_retries: int = 10
    ga_selection: str = "roulette"       # or "tournament"
    tournament_fraction: float = 0.4
    do_ga_subsumption: bool = True
    do_action_set_subsumption: bool = True
    accuracy_window: int = 100

    def max_condition_length(self, arity: int) -> int:
        return 2 * arity


class Classifier:
    """One macroclassifier: fragment-conjunction condition plus action."""

    __slots__ = (
        "condition", "action", "prediction", "error", "fitness",
        "numerosity", "experience", "action_set_size", "ga_time",
        "complexity", "condition_keys", "key_set", "match_mask", "slot",
    )

    def __init__(self, condition: Sequence[CodeFragment], action: int, *,
                 prediction: float, error: float, fitness: float,
                 numerosity: int = 1, experience: int = 0,
                 action_set_size: float = 1.0, ga_time: float = 0.0):
        ordered = tuple(sorted(condition, key=lambda cf: cf.key))
        self.condition = ordered
        self.action = action
        self.prediction = prediction
        self.error = error
        self.fitness = fitness
        self.numerosity = numerosity
        self.experience = experience
        self.action_set_size = action_set_size
        self.ga_time = ga_time
        self.complexity = sum(cf.complexity for cf in ordered)
        self.condition_keys = tuple(cf.key for cf in ordered)
        self.key_set = frozenset(self.condition_keys)
        self.match_mask = None
        self.slot = -1

    @property
    def f_rate(self) -> float:
        return self.fitness / max(self.complexity, 1)

    @property
    def identity(self) -> tuple:
        return (self.condition_keys, self.action)

    def matches(self, bits: Sequence[int]) -> bool:
        return all(cf.evaluate(bits) == 1 for cf in self.condition)

    def render_condition(self) -> str:
        return " & ".join(self.condition_keys)

    def __repr__(self):
        cond = self.render_condition() or "<always>"
        return f"Classifier({cond} => {self.action}, F={self.fitness:.3f}, n={self.numerosity})"


def subsumes(general: Classifier, specific: Classifier, params: XcsParams) -> bool:
    """Whether ``general`` may absorb ``specific``.

    Requires experience above the subsumption threshold, accuracy, equal
    actions, and a strictly smaller condition key set (a subset condition
    matches a superset of states under all-must-match semantics).
    """
    return (
        general.experience > params.subsumption_threshold
        and general.error < params.error_threshold
        and general.action == specific.action
        and general.key_set < specific.key_set
    )


def efficient_classifiers(action_set: Sequence[Classifier]) -> list[Classifier]:
    """Members whose fitness-per-leaf is within 80% of the set's best."""
    if not action_set:
        return []
    best = max(cl.f_rate for cl in action_set)
    threshold = EFFICIENCY_SHARE * best
    return [cl for cl in action_set if cl.f_rate >= threshold]


def prediction_array(matched: Iterable[Classifier]) -> dict[int, tuple[float, float]]:
    """Per action: (fitness-weighted mean prediction, total fitness weight)."""
    sums: dict[int, list[float]] = {}
    for cl in matched:
        acc = sums.setdefault(cl.action, [0.0, 0.0])
        acc[0] += cl.prediction * cl.fitness
        acc[1] += cl.fitness
    return {
        action: ((wp / w if w > 0 else 0.0), w)
        for action, (wp, w) in sums.items()
    }


def class_probability(matched: Sequence[Classifier]) -> float:
    """Fitness-weighted probability of action 1 over a match set.

    Degenerate cases: a single represented action gets probability 1;
    an all-zero weighted sum (or empty set) yields 0.5.
    """
    actions = {cl.action for cl in matched}
    if not actions:
        return 0.5
    if len(actions) == 1:
        return 1.0 if actions == {1} else 0.0
    positive = sum(cl.prediction * cl.fitness for cl in matched if cl.action == 1)
    total = sum(cl.prediction * cl.fitness for cl in matched)
    if total <= 0.0:
        return 0.5
    return positive / total


class RulePopulation:
    """Macroclassifier store with vectorized match and deletion support."""

    _GROWTH = 256

    def __init__(self, params: XcsParams, space: StateSpace):
        self.params = params
        self.space = space
        self.tabled = space.tabled
        self.numerosity_sum = 0
        self._by_identity: dict[tuple, Classifier] = {}
        self._slots: list[Classifier | None] = []
        self._free: list[int] = []
        self._high = 0
        capacity = params.population_size + self._GROWTH
        self._live = np.zeros(capacity, dtype=np.uint8)
        self._fitness = np.zeros(capacity, dtype=np.float64)
        self._numerosity = np.zeros(capacity, dtype=np.float64)
        self._as_size = np.zeros(capacity, dtype=np.float64)
        self._experience = np.zeros(capacity, dtype=np.float64)
        self._matches = np.zeros(capacity, dtype=np.int64)
        self._no_matches = np.zeros(capacity, dtype=np.int64)
        if self.tabled:
            self._nbytes = (space.size + 7) // 8
            self._rows = np.zeros((capacity, self._nbytes), dtype=np.uint8)
        else:
            self._rows = None

    def __len__(self):
        return len(self._by_identity)

    def __iter__(self):
        return iter(self._by_identity.values())

    # -- slot bookkeeping ------------------------------------------------

    def _allocate(self, cl: Classifier) -> int:
        if self._free:
            slot = self._free.pop()
            self._slots[slot] = cl
        else:
            slot = self._high
            self._high += 1
            if self._high > len(self._live):
                self._grow()
            self._slots.append(cl)
        return slot

    def _grow(self):
        extra = self._GROWTH
        for name in ("_live", "_fitness", "_numerosity", "_as_size",
                     "_experience", "_matches", "_no_matches"):
            old = getattr(self, name)
            grown = np.zeros(len(old) + extra, dtype=old.dtype)
            grown[: len(old)] = old
            setattr(self, name, grown)
        if self._rows is not None:
            grown = np.zeros((self._rows.shape[0] + extra, self._nbytes), dtype=np.uint8)
            grown[: self._rows.shape[0]] = self._rows
            self._rows = grown

    def sync(self, cl: Classifier) -> None:
        """Write a classifier's hot scalars into the vectorized mirrors."""
        s = cl.slot
        self._fitness[s] = cl.fitness
        self._numerosity[s] = cl.numerosity
        self._as_size[s] = cl.action_set_size
        self._experience[s] = cl.experience

    # -- insertion / removal ---------------------------------------------

    def insert(self, cl: Classifier) -> Classifier:
        """Insert, merging numerosity into an identical existing rule."""
        existing = self._by_identity.get(cl.identity)
        if existing is not None:
            existing.numerosity += cl.numerosity
            self.numerosity_sum += cl.numerosity
            self._numerosity[existing.slot] = existing.numerosity
            return existing
        slot = self._allocate(cl)
        cl.slot = slot
        self._by_identity[cl.identity] = cl
        self.numerosity_sum += cl.numerosity
        self._live[slot] = 1
        self._matches[slot] = 0
        self._no_matches[slot] = 0
        self.sync(cl)
        if self.tabled:
            cl.match_mask = condition_mask(self.space, cl.condition)
            self._rows[slot] = mask_to_bytes(cl.match_mask, self.space.size)
        return cl

    def remove(self, cl: Classifier) -> None:
        del self._by_identity[cl.identity]
        self.numerosity_sum -= cl.numerosity
        slot = cl.slot
        self._live[slot] = 0
        self._slots[slot] = None
        self._free.append(slot)
        cl.slot = -1

    # -- matching ---------------------------------------------------------

    def _match_bits(self, state) -> np.ndarray:
        n = self._high
        if self.tabled:
            col = self._rows[:n, state >> 3]
            bits = (col >> (state & 7)) & 1
            return bits & self._live[:n]
        bits = np.zeros(n, dtype=np.uint8)
        memo: dict[str, int] = {}
        for slot in np.flatnonzero(self._live[:n]):
            cl = self._slots[slot]
            if all(_memo_eval(cf, state, memo) for cf in cl.condition):
                bits[slot] = 1
        return bits

    def match_and_count(self, state) -> list[Classifier]:
        """Match set for a state, updating every rule's match counters."""
        n = self._high
        bits = self._match_bits(state)
        self._matches[:n] += bits
        self._no_matches[:n] += self._live[:n] - bits
        return [self._slots[s] for s in np.flatnonzero(bits)]

    def match_only(self, state) -> list[Classifier]:
        """Match set without touching the counters (evaluation path)."""
        return [self._slots[s] for s in np.flatnonzero(self._match_bits(state))]

    def update_generality(self, state) -> None:
        """Counter-only pass (exhaustive sweeps in tests and tools)."""
        n = self._high
        bits = self._match_bits(state)
        self._matches[:n] += bits
        self._no_matches[:n] += self._live[:n] - bits

    def generality(self, cl: Classifier) -> float:
        m = int(self._matches[cl.slot])
        nm = int(self._no_matches[cl.slot])
        total = m + nm
        return m / total if total else 0.0

    def match_counts(self, cl: Classifier) -> tuple[int, int]:
        return int(self._matches[cl.slot]), int(self._no_matches[cl.slot])

    # -- deletion ----------------------------------------------------------

    def mean_fitness(self) -> float:
        n = self._high
        live = self._live[:n].astype(bool)
        total_num = self._numerosity[:n][live].sum()
        if total_num <= 0:
            return 0.0
        return float(self._fitness[:n][live].sum() / total_num)

    def deletion_votes(self) -> np.ndarray:
        """Roulette vote per slot (0 for dead slots)."""
        n = self._high
        live = self._live[:n].astype(bool)
        num = self._numerosity[:n]
        votes = np.where(live, self._as_size[:n] * num, 0.0)
        mean_fit = self.mean_fitness()
        if mean_fit > 0:
            micro = self._fitness[:n] / np.maximum(num, 1.0)
            boost = (
                live
                & (self._experience[:n] > self.params.deletion_threshold)
                & (micro < self.params.deletion_fitness_fraction * mean_fit)
            )
            votes[boost] *= mean_fit / micro[boost]
        return votes

    def delete_one(self, rng) -> Classifier:
        """Remove one microclassifier chosen by deletion-vote roulette."""
        votes = self.deletion_votes()
        total = votes.sum()
        if total > 0:
            target = rng.random() * total
            slot = int(np.searchsorted(np.cumsum(votes), target, side="right"))
        else:
            live = np.flatnonzero(self._live[: self._high])
            slot = int(live[rng.randrange(len(live))])
        cl = self._slots[slot]
        cl.numerosity -= 1
        self.numerosity_sum -= 1
        if cl.numerosity == 0:
            del self._by_identity[cl.identity]
            self._live[slot] = 0
            self._slots[slot] = None
            self._free.append(slot)
            cl.slot = -1
        else:
            self._numerosity[slot] = cl.numerosity
        return cl

    def enforce_capacity(self, rng) -> int:
        removed = 0
        while self.numerosity_sum > self.params.population_size:
            self.delete_one(rng)
            removed += 1
        return removed

    # -- export -------------------------------------------------------------

    def snapshot(self) -> list[dict]:
        rows = []
        for cl in sorted(self, key=lambda c: (-c.numerosity, c.condition_keys, c.action)):
            rows.append({
                "condition": cl.render_condition(),
                "action": cl.action,
                "prediction": cl.prediction,
                "error": cl.error,
                "fitness": cl.fitness,
                "numerosity": cl.numerosity,
                "experience": cl.experience,
                "complexity": cl.complexity,
                "generality": self.generality(cl),
            })
        return rows


def _memo_eval(cf: CodeFragment, bits, memo: dict[str, int]) -> int:
    value = memo.get(cf.key)
    if value is not None:
        return value
    if cf.op is None:
        value = 1 if bits[cf.index] else 0
    elif cf.op == "NOT":
        value = 1 - _memo_eval(cf.children[0], bits, memo)
    else:
        a = _memo_eval(cf.children[0], bits, memo)
        b = _memo_eval(cf.children[1], bits, memo)
        if cf.op == "AND":
            value = a & b
        elif cf.op == "OR":
            value = a | b
        elif cf.op == "XOR":
            value = a ^ b
        else:
            value = 1 - (a & b)
    memo[cf.key] = value
    return value


class XcsSystem:
    """One online learner bound to one task and one state space."""

    def __init__(self, task_id: int, space: StateSpace, params: XcsParams,
                 features, rng):
        self.task_id = task_id
        self.space = space
        self.params = params
        self.features = features
        self.rng = rng
        self.population = RulePopulation(params, space)
        self.max_condition_length = params.max_condition_length(space.arity)
        self.explore_count = 0
        self.exploit_count = 0
        self.iteration = 0
        self.no_match_exploits = 0
        self._window: list[int] = []
        self._window_sum = 0
        self._grate_window: list[float] = []
        self._grate_sum = 0.0
        features.register_task(task_id, space.arity, self.max_condition_length)

    # -- fragment helpers ---------------------------------------------------

    def _fragment_value(self, cf: CodeFragment, state) -> int:
        if self.population.tabled:
            return (self.space.table(cf) >> state) & 1
        return cf.evaluate(state)

    def _matching_fragment(self, state, exclude: set[str]) -> CodeFragment | None:
        """Request a fragment that evaluates to 1 on the state.

        A non-matching candidate is negated; candidates colliding with
        ``exclude`` (or not fitting the task arity) are re-requested a
        bounded number of times.
        """
        for _ in range(self.params.cover_retries):
            cf = self.features.request_cf(self.task_id, self.rng)
            if cf.max_leaf >= self.space.arity:
                continue
            if self._fragment_value(cf, state) == 0:
                cf = self.features.register_fragment(self.task_id, cf, negated=True)
            if cf.key not in exclude:
                return cf
        return None

    # -- covering -------------------------------------------------------------

    def cover(self, state, action: int) -> Classifier:
        """Build a fresh rule matching the state for a missing action."""
        condition: list[CodeFragment] = []
        keys: set[str] = set()
        for _ in range(self.max_condition_length):
            if self.rng.random() < self.params.spec_probability:
                cf = self._matching_fragment(state, keys)
                if cf is not None:
                    condition.append(cf)
                    keys.add(cf.key)
        return Classifier(
            condition,
            action,
            prediction=self.params.initial_prediction,
            error=self.params.initial_error,
            fitness=self.params.initial_fitness,
            ga_time=float(self.explore_count),
        )

    def _ensure_actions(self, state, matched: list[Classifier]) -> list[Classifier]:
        for _ in range(64):
            present = {cl.action for cl in matched}
            missing = [a for a in (0, 1) if a not in present]
            if not missing:
                return matched
            for action in missing:
                self.population.insert(self.cover(state, action))
            self.population.enforce_capacity(self.rng)
            matched = self.population.match_only(state)
        raise RuntimeError("covering failed to stabilise the match set")

    # -- parameter updates -----------------------------------------------------

    def update_action_set(self, action_set: list[Classifier], reward: float) -> list[Classifier]:
        """Reinforce an action set; returns the members surviving subsumption."""
        p = self.params
        beta = p.learning_rate
        set_numerosity = float(sum(cl.numerosity for cl in action_set))
        for cl in action_set:
            cl.experience += 1
            rate = 1.0 / cl.experience if cl.experience < 1.0 / beta else beta
            # error first, against the pre-update prediction
            cl.error += rate * (abs(reward - cl.prediction) - cl.error)
            cl.prediction += rate * (reward - cl.prediction)
            cl.action_set_size += rate * (set_numerosity - cl.action_set_size)
        total_accuracy = 0.0
        accuracies = []
        for cl in action_set:
            if cl.error < p.error_threshold:
                kappa = 1.0
            else:
                kappa = p.accuracy_coeff * (cl.error / p.error_threshold) ** (-p.accuracy_power)
            accuracies.append(kappa)
            total_accuracy += kappa * cl.numerosity
        for cl, kappa in zip(action_set, accuracies):
            cl.fitness += beta * (kappa * cl.numerosity / total_accuracy - cl.fitness)
        for cl in action_set:
            self.population.sync(cl)
        if p.do_action_set_subsumption and len(action_set) > 1:
            action_set = self._subsume_action_set(action_set)
        return action_set

    def _subsume_action_set(self, action_set: list[Classifier]) -> list[Classifier]:
        p = self.params
        candidates = [
            cl for cl in action_set
            if cl.experience > p.subsumption_threshold and cl.error < p.error_threshold
        ]
        if not candidates:
            return action_set
        general = min(candidates, key=lambda cl: (len(cl.condition), cl.condition_keys))
        survivors = []
        for cl in action_set:
            if cl is not general and general.key_set < cl.key_set:
                absorbed = cl.numerosity
                self.population.remove(cl)
                general.numerosity += absorbed
                self.population.numerosity_sum += absorbed  # micros moved, not deleted
                self.population.sync(general)
            else:
                survivors.append(cl)
        return survivors

    # -- genetic algorithm --------------------------------------------------------

    def _select_parent(self, action_set: list[Classifier]) -> Classifier:
        p = self.params
        if p.ga_selection == "tournament":
            size = max(1, round(p.tournament_fraction * len(action_set)))
            best = None
            for _ in range(size):
                cl = action_set[self.rng.randrange(len(action_set))]
                if best is None or cl.fitness > best.fitness:
                    best = cl
            return best
        total = sum(cl.fitness for cl in action_set)
        if total <= 0:
            return action_set[self.rng.randrange(len(action_set))]
        target = self.rng.random() * total
        acc = 0.0
        for cl in action_set:
            acc += cl.fitness
            if target < acc:
                return cl
        return action_set[-1]

    def _crossover(self, cond_a: list[CodeFragment], cond_b: list[CodeFragment]):
        width = max(len(cond_a), len(cond_b))
        a: list[CodeFragment | None] = cond_a + [None] * (width - len(cond_a))
        b: list[CodeFragment | None] = cond_b + [None] * (width - len(cond_b))
        for i in range(width):
            if self.rng.random() < 0.5:
                a[i], b[i] = b[i], a[i]
        return _dedupe(a), _dedupe(b)

    def _mutate(self, condition: list[CodeFragment], state) -> None:
        choices = []
        if len(condition) < self.max_condition_length:
            choices.append("add")
        if condition:
            choices.extend(("remove", "replace"))
        if not choices:
            return
        edit = choices[self.rng.randrange(len(choices))]
        if edit == "remove":
            condition.pop(self.rng.randrange(len(condition)))
            return
        keys = {cf.key for cf in condition}
        if edit == "add":
            cf = self._matching_fragment(state, keys)
            if cf is not None:
                condition.append(cf)
            return
        victim = self.rng.randrange(len(condition))
        cf = self._matching_fragment(state, keys)
        if cf is not None:
            condition[victim] = cf

    def run_ga(self, action_set: list[Classifier], state) -> None:
        """Niche GA: fitness-proportionate parents, slot-wise crossover,
        single-edit mutation that preserves matching the current state."""
        if not action_set:
            return
        p = self.params
        set_num = sum(cl.numerosity for cl in action_set)
        mean_stamp = sum(cl.ga_time * cl.numerosity for cl in action_set) / set_num
        if self.explore_count - mean_stamp <= p.ga_threshold:
            return
        for cl in action_set:
            cl.ga_time = float(self.explore_count)
        parent_a = self._select_parent(action_set)
        parent_b = self._select_parent(action_set)
        cond_a = list(parent_a.condition)
        cond_b = list(parent_b.condition)
        if self.rng.random() < p.crossover_rate:
            cond_a, cond_b = self._crossover(cond_a, cond_b)
        mean_prediction = (parent_a.prediction + parent_b.prediction) / 2
        mean_error = (parent_a.error + parent_b.error) / 2
        mean_fitness = (parent_a.fitness + parent_b.fitness) / 2
        mean_as = (parent_a.action_set_size + parent_b.action_set_size) / 2
        for condition in (cond_a, cond_b):
            if self.rng.random() < p.mutation_rate:
                self._mutate(condition, state)
            child = Classifier(
                condition,
                parent_a.action,
                prediction=mean_prediction,
                error=mean_error,
                fitness=p.offspring_fitness_reduction * mean_fitness,
                action_set_size=mean_as,
                ga_time=float(self.explore_count),
            )
            if p.do_ga_subsumption and subsumes(parent_a, child, p):
                parent_a.numerosity += 1
                self.population.numerosity_sum += 1
                self.population.sync(parent_a)
            elif p.do_ga_subsumption and subsumes(parent_b, child, p):
                parent_b.numerosity += 1
                self.population.numerosity_sum += 1
                self.population.sync(parent_b)
            else:
                self.population.insert(child)
        self.population.enforce_capacity(self.rng)

    # -- trials ------------------------------------------------------------------

    def run_trial(self, state, label: int, explore: bool) -> tuple[int, bool]:
        """One learning iteration; returns (chosen action, correctness)."""
        matched = self.population.match_and_count(state)
        if explore:
            matched = self._ensure_actions(state, matched)
            action = self.rng.randrange(2)
            action_set = [cl for cl in matched if cl.action == action]
            reward = self.params.reward if action == label else 0.0
            survivors = self.update_action_set(action_set, reward)
            self.features.update_from_action_set(self.task_id, survivors, self.iteration)
            self._record_generality_rate(survivors)
            self.run_ga(survivors, state)
            self.explore_count += 1
            correct = action == label
        else:
            if matched:
                action = self.exploit_action(matched)
            else:
                action = self.rng.randrange(2)
                self.no_match_exploits += 1
            correct = action == label
            self._record_accuracy(correct)
            self.exploit_count += 1
        self.iteration += 1
        return action, correct

    def exploit_action(self, matched: list[Classifier]) -> int:
        array = prediction_array(matched)
        best = max(value for value, _ in array.values())
        winners = [a for a, (value, _) in array.items() if value >= best]
        if len(winners) == 1:
            return winners[0]
        return winners[self.rng.randrange(len(winners))]

    def _record_accuracy(self, correct: bool) -> None:
        window = self.params.accuracy_window
        self._window.append(1 if correct else 0)
        self._window_sum += self._window[-1]
        if len(self._window) > window:
            self._window_sum -= self._window.pop(0)

    def _record_generality_rate(self, action_set: list[Classifier]) -> None:
        values = [
            self.population.generality(cl) / max(cl.complexity, 1)
            for cl in efficient_classifiers(action_set)
            if cl.error == 0.0
        ]
        if not values:
            return
        window = self.params.accuracy_window
        mean = sum(values) / len(values)
        self._grate_window.append(mean)
        self._grate_sum += mean
        if len(self._grate_window) > window:
            self._grate_sum -= self._grate_window.pop(0)

    def moving_accuracy(self) -> float:
        if not self._window:
            return 0.0
        return self._window_sum / len(self._window)

    def moving_generality_rate(self) -> float:
        if not self._grate_window:
            return float("nan")
        return self._grate_sum / len(self._grate_window)

    def match_set(self, state) -> list[Classifier]:
        return self.population.match_only(state)

    def predict_probability(self, state) -> tuple[float, bool]:
        """P(action 1) for a state plus an empty-match-set flag."""
        matched = self.population.match_only(state)
        if not matched:
            return 0.5, True
        return class_probability(matched), False


def _dedupe(condition: Iterable[CodeFragment | None]) -> list[CodeFragment]:
    seen: set[str] = set()
    out: list[CodeFragment] = []
    for cf in condition:
        if cf is not None and cf.key not in seen:
            seen.add(cf.key)
            out.append(cf)
    return out
