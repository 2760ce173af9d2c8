"""Tree-structured boolean features (code fragments).

A code fragment is an immutable binary tree whose internal nodes are
boolean operators and whose leaves are input-attribute indices (rendered
``D0``, ``D1``, ...).  Fragments are the unit of constructed knowledge:
rule conditions are conjunctions of fragments, and fragments are what get
shared between learning tasks.

Trees are canonicalized at construction time: the two children of every
commutative operator are ordered lexicographically by their canonical
keys.  Canonicalization is purely structural; no semantic rewriting
(associativity, De Morgan, double negation) is performed, so two
fragments with equal keys always evaluate identically but the converse
does not hold.
"""

from __future__ import annotations

from typing import Callable, Iterator, Sequence

UNARY_OPS = ("NOT",)
BINARY_OPS = ("AND", "OR", "NAND", "XOR")
OPERATORS = ("AND", "OR", "NOT", "NAND", "XOR")

_BINARY_FN: dict[str, Callable[[int, int], int]] = {
    "AND": lambda a, b: a & b,
    "OR": lambda a, b: a | b,
    "NAND": lambda a, b: 1 - (a & b),
    "XOR": lambda a, b: a ^ b,
}


class FragmentError(ValueError):
    """Structurally invalid fragment or fragment text."""


class FragmentArityError(FragmentError):
    """A leaf index is out of range for the input it is evaluated on."""


class CodeFragment:
    """Immutable canonical boolean expression tree.

    Use :func:`leaf`, :func:`combine` and :func:`negate` (or
    :func:`parse`) to build instances; the constructor is internal.
    """

    __slots__ = ("op", "children", "index", "key", "complexity", "max_leaf", "_hash")

    op: str | None
    children: tuple["CodeFragment", ...]
    index: int | None

    def __init__(self, op, children, index, key, complexity, max_leaf):
        object.__setattr__(self, "op", op)
        object.__setattr__(self, "children", children)
        object.__setattr__(self, "index", index)
        object.__setattr__(self, "key", key)
        object.__setattr__(self, "complexity", complexity)
        object.__setattr__(self, "max_leaf", max_leaf)
        object.__setattr__(self, "_hash", hash(key))

    def __setattr__(self, name, value):
        raise AttributeError("CodeFragment is immutable")

    def is_leaf(self) -> bool:
        return self.op is None

    def evaluate(self, bits: Sequence[int]) -> int:
        """Recursively evaluate the tree on a bit vector.

        Raises :class:`FragmentArityError` when a leaf index does not fit
        the input length.
        """
        if self.op is None:
            if self.index >= len(bits):
                raise FragmentArityError(
                    f"leaf D{self.index} out of range for arity {len(bits)}"
                )
            return 1 if bits[self.index] else 0
        if self.op == "NOT":
            return 1 - self.children[0].evaluate(bits)
        a = self.children[0].evaluate(bits)
        b = self.children[1].evaluate(bits)
        return _BINARY_FN[self.op](a, b)

    def leaves(self) -> Iterator[int]:
        """Yield every leaf index, with repetition."""
        if self.op is None:
            yield self.index
        else:
            for child in self.children:
                yield from child.leaves()

    def __eq__(self, other):
        return isinstance(other, CodeFragment) and self.key == other.key

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return f"CodeFragment({self.key!r})"

    def __str__(self):
        return self.key


def leaf(index: int) -> CodeFragment:
    """Base fragment: a single attribute leaf, complexity 1."""
    if index < 0:
        raise FragmentError(f"leaf index must be non-negative, got {index}")
    key = f"D{index}"
    return CodeFragment(None, (), index, key, 1, index)


def negate(child: CodeFragment) -> CodeFragment:
    # constructor invariant: double negation never appears in a tree
    if child.op == "NOT":
        return child.children[0]
    key = f"NOT({child.key})"
    return CodeFragment("NOT", (child,), None, key, child.complexity, child.max_leaf)


def combine(op: str, left: CodeFragment, right: CodeFragment) -> CodeFragment:
    """Join two fragments under a binary operator, in canonical child order."""
    if op == "NOT":
        raise FragmentError("NOT takes exactly one child; use negate()")
    if op not in _BINARY_FN:
        raise FragmentError(f"unknown operator {op!r}")
    if right.key < left.key:
        left, right = right, left
    key = f"{op}({left.key},{right.key})"
    return CodeFragment(
        op,
        (left, right),
        None,
        key,
        left.complexity + right.complexity,
        max(left.max_leaf, right.max_leaf),
    )


def build(op: str, *children: CodeFragment) -> CodeFragment:
    """Operator-name dispatch used by generators and the parser."""
    if op == "NOT":
        if len(children) != 1:
            raise FragmentError("NOT takes exactly one child")
        return negate(children[0])
    if len(children) != 2:
        raise FragmentError(f"{op} takes exactly two children")
    return combine(op, children[0], children[1])


def render(cf: CodeFragment) -> str:
    """Canonical text form, e.g. ``AND(D0,NOT(D5))``."""
    return cf.key


def parse(text: str) -> CodeFragment:
    """Parse the text grammar ``NAME(child,child)`` with leaves ``D<k>``.

    Inverse of :func:`render` up to canonical child ordering.
    """
    pos = 0
    n = len(text)

    def error(msg: str) -> FragmentError:
        return FragmentError(f"parse error at position {pos}: {msg} in {text!r}")

    def parse_node() -> CodeFragment:
        nonlocal pos
        start = pos
        while pos < n and (text[pos].isalnum() or text[pos] == "_"):
            pos += 1
        name = text[start:pos]
        if not name:
            raise error("expected a node name")
        if pos < n and text[pos] == "(":
            if name not in OPERATORS:
                raise error(f"unknown operator {name!r}")
            pos += 1
            children = [parse_node()]
            while pos < n and text[pos] == ",":
                pos += 1
                children.append(parse_node())
            if pos >= n or text[pos] != ")":
                raise error("expected ')'")
            pos += 1
            return build(name, *children)
        if name.startswith("D") and name[1:].isdigit():
            return leaf(int(name[1:]))
        raise error(f"expected leaf D<k>, got {name!r}")

    node = parse_node()
    stripped = text.strip()
    if pos != len(text) and text[pos:].strip():
        raise FragmentError(f"trailing text after fragment in {stripped!r}")
    return node


def random_fragment(rng, arity: int, max_leaves: int = 8, grow_probability: float = 0.6) -> CodeFragment:
    """Grow a random tree over the first ``arity`` attributes (test/tooling helper)."""
    if max_leaves <= 1 or rng.random() > grow_probability:
        return leaf(rng.randrange(arity))
    op = OPERATORS[rng.randrange(len(OPERATORS))]
    if op == "NOT":
        return negate(random_fragment(rng, arity, max_leaves, grow_probability * 0.8))
    split = rng.randrange(1, max_leaves)
    a = random_fragment(rng, arity, split, grow_probability * 0.8)
    b = random_fragment(rng, arity, max_leaves - split, grow_probability * 0.8)
    return combine(op, a, b)
