"""State spaces and cached fragment truth tables.

A state space indexes the inputs a task can see: either the full boolean
cube {0,1}**arity, or (for tabular data) the finite set of dataset rows.
For indexable spaces every fragment gets a truth table packed into a
Python int (bit i = fragment value on state i); tables compose
bottom-up with bitwise operators and are memoized per space, so rule
matching reduces to one bit test per classifier.

Spaces over more than ``table_limit`` attributes skip tables entirely
and callers fall back to recursive evaluation.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .fragments import CodeFragment

DEFAULT_TABLE_LIMIT = 16


class BooleanSpace:
    """The full cube over ``arity`` boolean attributes."""

    def __init__(self, arity: int, table_limit: int = DEFAULT_TABLE_LIMIT):
        self.arity = arity
        self.tabled = arity <= table_limit
        self.size = (1 << arity) if self.tabled else None
        self._tables: dict[str, int] = {}
        if self.tabled:
            self.full_mask = (1 << self.size) - 1
            self._leaf_masks = [self._leaf_mask(k) for k in range(arity)]
        else:
            self.full_mask = None

    def _leaf_mask(self, k: int) -> int:
        # periodic pattern: bit i set iff (i >> k) & 1
        half = 1 << k
        unit = ((1 << half) - 1) << half
        reps = self.size // (2 * half)
        multiplier = ((1 << (reps * 2 * half)) - 1) // ((1 << (2 * half)) - 1)
        return unit * multiplier

    def bits(self, index: int) -> tuple[int, ...]:
        return tuple((index >> k) & 1 for k in range(self.arity))

    def sample_index(self, rng) -> int:
        return rng.getrandbits(self.arity)

    def table(self, cf: CodeFragment) -> int:
        """Truth table of ``cf`` over this space, as a packed int."""
        cached = self._tables.get(cf.key)
        if cached is not None:
            return cached
        if cf.op is None:
            if cf.index >= self.arity:
                from .fragments import FragmentArityError

                raise FragmentArityError(
                    f"leaf D{cf.index} out of range for arity {self.arity}"
                )
            value = self._leaf_masks[cf.index]
        elif cf.op == "NOT":
            value = self.full_mask ^ self.table(cf.children[0])
        else:
            a = self.table(cf.children[0])
            b = self.table(cf.children[1])
            if cf.op == "AND":
                value = a & b
            elif cf.op == "OR":
                value = a | b
            elif cf.op == "XOR":
                value = a ^ b
            else:  # NAND
                value = self.full_mask ^ (a & b)
        self._tables[cf.key] = value
        return value

    def label_table(self, oracle) -> np.ndarray:
        """Vector of oracle labels over all indexed states."""
        out = np.empty(self.size, dtype=np.uint8)
        for index in range(self.size):
            out[index] = oracle(self.bits(index))
        return out


class RowSpace:
    """A finite universe of tabular rows (encoded as bit tuples)."""

    def __init__(self, rows: Sequence[tuple[int, ...]]):
        if not rows:
            raise ValueError("row space needs at least one row")
        self.rows = [tuple(r) for r in rows]
        self.arity = len(self.rows[0])
        if any(len(r) != self.arity for r in self.rows):
            raise ValueError("all rows must share one arity")
        self.tabled = True
        self.size = len(self.rows)
        self.full_mask = (1 << self.size) - 1
        self._tables: dict[str, int] = {}
        self._leaf_masks = [
            sum((1 << i) for i, row in enumerate(self.rows) if row[k])
            for k in range(self.arity)
        ]

    def bits(self, index: int) -> tuple[int, ...]:
        return self.rows[index]

    def sample_index(self, rng) -> int:
        return rng.randrange(self.size)

    def table(self, cf: CodeFragment) -> int:
        cached = self._tables.get(cf.key)
        if cached is not None:
            return cached
        if cf.op is None:
            if cf.index >= self.arity:
                from .fragments import FragmentArityError

                raise FragmentArityError(
                    f"leaf D{cf.index} out of range for arity {self.arity}"
                )
            value = self._leaf_masks[cf.index]
        elif cf.op == "NOT":
            value = self.full_mask ^ self.table(cf.children[0])
        else:
            a = self.table(cf.children[0])
            b = self.table(cf.children[1])
            if cf.op == "AND":
                value = a & b
            elif cf.op == "OR":
                value = a | b
            elif cf.op == "XOR":
                value = a ^ b
            else:  # NAND
                value = self.full_mask ^ (a & b)
        self._tables[cf.key] = value
        return value


StateSpace = BooleanSpace | RowSpace


def condition_mask(space: StateSpace, condition: Sequence[CodeFragment]) -> int:
    """Match mask of a conjunction of fragments (full mask when empty)."""
    mask = space.full_mask
    for cf in condition:
        mask &= space.table(cf)
    return mask


def mask_to_bytes(mask: int, size: int) -> np.ndarray:
    nbytes = (size + 7) // 8
    return np.frombuffer(mask.to_bytes(nbytes, "little"), dtype=np.uint8).copy()
