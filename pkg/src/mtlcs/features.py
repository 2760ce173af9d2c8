"""Online feature generation: shared fragment records and observed lists.

All learning tasks share one fragment registry keyed by canonical key, so
structurally equal fragments discovered in different tasks resolve to a
single record carrying a per-task fitness map.  A fragment's fitness for
a task is the best fitness-per-leaf achieved by any of that task's rules
containing it (tracked as a running max with optional staleness decay).

Each task additionally owns a bounded Observed List (OL) of its
highest-fitness fragments, seeded with the base attribute fragments.
Rule construction draws fragments from here: either a fresh combination
of OL members or an existing member picked by roulette wheel, optionally
competing against one externally transferred fragment supplied by the
multi-task coordinator.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

from .fragments import CodeFragment, OPERATORS, build, leaf, negate


@dataclass
class CfRecord:
    """Registry entry for one canonical fragment."""

    fragment: CodeFragment
    fitness: dict[int, float] = field(default_factory=dict)
    created_by: int = -1
    created_at: int = 0

    @property
    def key(self) -> str:
        return self.fragment.key

    def fitness_for(self, task: int) -> float:
        return self.fitness.get(task, 0.0)


class SharedCfPopulation:
    """Canonical-key-unique store of fragment records, shared by all tasks."""

    def __init__(self):
        self._records: dict[str, CfRecord] = {}

    def __len__(self):
        return len(self._records)

    def __contains__(self, key: str):
        return key in self._records

    def get(self, key: str) -> CfRecord | None:
        return self._records.get(key)

    def register(self, cf: CodeFragment, task: int, iteration: int) -> CfRecord:
        """Return the record for ``cf``, creating it on first sight."""
        record = self._records.get(cf.key)
        if record is None:
            record = CfRecord(cf, created_by=task, created_at=iteration)
            self._records[cf.key] = record
        return record


class ObservedList:
    """Bounded per-task list of the task's best fragments."""

    def __init__(self, owner: int, capacity: int):
        self.owner = owner
        self.capacity = capacity
        self._members: dict[str, CfRecord] = {}

    def __len__(self):
        return len(self._members)

    def __contains__(self, key: str):
        return key in self._members

    def records(self) -> list[CfRecord]:
        return list(self._members.values())

    def keys(self) -> set[str]:
        return set(self._members)

    def ranked(self) -> list[CfRecord]:
        """Members by descending owner fitness, ties by canonical key."""
        return sorted(
            self._members.values(),
            key=lambda r: (-r.fitness_for(self.owner), r.key),
        )

    def offer(self, record: CfRecord) -> bool:
        """Admission rule: fill free space, else displace the weakest
        member only when the candidate beats its fitness."""
        if record.key in self._members:
            return True
        if len(self._members) < self.capacity:
            self._members[record.key] = record
            return True
        weakest = min(
            self._members.values(),
            key=lambda r: (r.fitness_for(self.owner), r.key),
        )
        if record.fitness_for(self.owner) > weakest.fitness_for(self.owner):
            del self._members[weakest.key]
            self._members[record.key] = record
            return True
        return False

    def minimum_fitness(self) -> float:
        if not self._members:
            return 0.0
        return min(r.fitness_for(self.owner) for r in self._members.values())


@dataclass
class FeatureParams:
    observed_list_capacity: int = 50     # comfortably above every base-set size used
    generate_probability: float = 0.5    # fresh combination vs roulette reuse
    fitness_decay: float = 0.001         # staleness decay applied on touch
    generate_retries: int = 10
    # base fragments start with this fitness so the reuse roulette can
    # never freeze an attribute out before it is first witnessed
    base_fitness: float = 0.01


# provider(task, features) -> (fragment, adjusted vote) | None
ExternalProvider = Callable[[int], "tuple[CodeFragment, float] | None"]


class FeatureModule:
    """Serves fragment requests and keeps fragment fitness up to date."""

    def __init__(self, params: FeatureParams | None = None):
        self.params = params or FeatureParams()
        self.registry = SharedCfPopulation()
        self.observed: dict[int, ObservedList] = {}
        self.base_fragments: dict[int, list[CodeFragment]] = {}
        self.leaf_caps: dict[int, int] = {}
        self.arities: dict[int, int] = {}
        self.external_provider: ExternalProvider | None = None

    # -- task lifecycle -----------------------------------------------------

    def register_task(self, task: int, arity: int, leaf_cap: int) -> None:
        """Create the task's OL, seeded with the base attribute fragments."""
        if task in self.observed:
            return
        ol = ObservedList(task, self.params.observed_list_capacity)
        base = [leaf(k) for k in range(arity)]
        for cf in base:
            record = self.registry.register(cf, task, 0)
            record.fitness[task] = max(record.fitness_for(task), self.params.base_fitness)
            ol.offer(record)
        self.observed[task] = ol
        self.base_fragments[task] = base
        self.leaf_caps[task] = leaf_cap
        self.arities[task] = arity

    def observed_list(self, task: int) -> ObservedList:
        return self.observed[task]

    def register_fragment(self, task: int, cf: CodeFragment, *,
                          negated: bool = False, iteration: int = 0) -> CodeFragment:
        """Register a fragment (or its negation) built outside the module."""
        if negated:
            cf = negate(cf)
        return self.registry.register(cf, task, iteration).fragment

    # -- requests -------------------------------------------------------------

    def request_cf(self, task: int, rng, state=None) -> CodeFragment:
        """A fragment for rule construction: generated or reused.

        The reuse branch runs a roulette over the task's OL votes plus at
        most one external candidate with its transfer-adjusted vote; a
        zero-vote pool falls back to a uniform pick among OL members.
        """
        if rng.random() < self.params.generate_probability:
            return self.generate_cf(task, rng)
        ol = self.observed[task]
        pool: list[tuple[CodeFragment, float]] = [
            (record.fragment, record.fitness_for(task)) for record in ol.ranked()
        ]
        locals_count = len(pool)
        if self.external_provider is not None:
            external = self.external_provider(task)
            if external is not None:
                pool.append(external)
        total = sum(vote for _, vote in pool)
        if total <= 0.0:
            return pool[rng.randrange(locals_count)][0]
        target = rng.random() * total
        acc = 0.0
        for cf, vote in pool:
            acc += vote
            if target < acc:
                return cf
        return pool[-1][0]

    def _roulette_member(self, ol: ObservedList, rng,
                         exclude: str | None = None) -> CfRecord:
        members = [r for r in ol.ranked() if r.key != exclude]
        total = sum(r.fitness_for(ol.owner) for r in members)
        if total <= 0.0:
            return members[rng.randrange(len(members))]
        target = rng.random() * total
        acc = 0.0
        for record in members:
            acc += record.fitness_for(ol.owner)
            if target < acc:
                return record
        return members[-1]

    def generate_cf(self, task: int, rng) -> CodeFragment:
        """Grow a fresh fragment from OL members under one random operator.

        Oversized results (leaf count beyond the task cap) are rejected
        and regrown a bounded number of times before falling back to a
        base fragment.
        """
        ol = self.observed[task]
        cap = self.leaf_caps[task]
        for _ in range(self.params.generate_retries):
            op = OPERATORS[rng.randrange(len(OPERATORS))]
            if op == "NOT":
                cf = negate(self._roulette_member(ol, rng).fragment)
            else:
                first = self._roulette_member(ol, rng)
                exclude = first.key if len(ol) > 1 else None
                second = self._roulette_member(ol, rng, exclude=exclude)
                cf = build(op, first.fragment, second.fragment)
            if cf.complexity <= cap:
                return self.registry.register(cf, task, 0).fragment
        base = self.base_fragments[task]
        return base[rng.randrange(len(base))]

    # -- learning feedback -----------------------------------------------------

    def update_from_action_set(self, task: int, action_set: Sequence, iteration: int) -> None:
        """Refresh fragment fitness from the efficient rules of an action
        set, then offer the touched fragments to the task's OL."""
        from .xcs import efficient_classifiers

        ol = self.observed[task]
        decay = 1.0 - self.params.fitness_decay
        for cl in efficient_classifiers(action_set):
            rate = cl.f_rate
            for cf in cl.condition:
                record = self.registry.register(cf, task, iteration)
                current = record.fitness.get(task, 0.0)
                record.fitness[task] = max(current * decay, rate)
                ol.offer(record)

    # -- export -------------------------------------------------------------------

    def ol_snapshot(self, task: int) -> list[tuple[str, float]]:
        ol = self.observed[task]
        return [(r.key, r.fitness_for(task)) for r in ol.ranked()]
