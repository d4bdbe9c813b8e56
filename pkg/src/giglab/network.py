"""Boolean automata networks: local functions, subset updates, unstable sets.

Configurations are plain ``int`` words: bit ``i`` holds the state of node ``i``.
When rendered as text, node 0 is the leftmost character, so ``"100"`` means
``x_0 = 1, x_1 = 0, x_2 = 0``.
"""

from __future__ import annotations

import json
import os
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

MAX_ARITY = 20
TRAJECTORY_GUARD = 24
GIG_GUARD = 16

NAMED_FUNCTIONS = ("id", "neg", "and", "or", "nand", "nor")


class StateSpaceGuard(RuntimeError):
    """Raised when an exhaustive operation would exceed its node-count guard."""


def guard_limit(default: int) -> int:
    """Return the guard for an exhaustive operation, honouring ``GIGLAB_MAX_N``."""
    env = os.environ.get("GIGLAB_MAX_N")
    if env:
        return int(env)
    return default


def check_guard(n: int, default: int, force: bool = False, what: str = "operation") -> None:
    limit = guard_limit(default)
    if not force and n > limit:
        raise StateSpaceGuard(
            f"{what} on n={n} exceeds the guard n<={limit}; pass force=True or set GIGLAB_MAX_N"
        )


# --------------------------------------------------------------------------
# configuration helpers


def config_to_str(x: int, n: int) -> str:
    return "".join("1" if (x >> i) & 1 else "0" for i in range(n))


def config_from_str(s: str) -> int:
    s = s.strip()
    if not s or set(s) - {"0", "1"}:
        raise ValueError(f"not a binary configuration string: {s!r}")
    return sum(1 << i for i, c in enumerate(s) if c == "1")


def config_from_bits(bits: Sequence[int]) -> int:
    return sum((1 << i) for i, b in enumerate(bits) if b)


def config_to_bits(x: int, n: int) -> tuple[int, ...]:
    return tuple((x >> i) & 1 for i in range(n))


def complement(x: int, n: int) -> int:
    """Flip every bit of a configuration of size ``n``."""
    return x ^ ((1 << n) - 1)


def popcount(x: int) -> int:
    return bin(x).count("1")


def config_sort_key(x: int, n: int) -> str:
    # lexicographic on the rendered string (node 0 first)
    return config_to_str(x, n)


# --------------------------------------------------------------------------
# validation errors


@dataclass(frozen=True)
class Violation:
    node: int
    message: str

    kind = "violation"

    def __str__(self) -> str:
        return f"{self.kind}(node={self.node}): {self.message}"


@dataclass(frozen=True)
class NonMonotone(Violation):
    input: int = -1
    kind = "NonMonotone"


@dataclass(frozen=True)
class VacuousArc(Violation):
    input: int = -1
    kind = "VacuousArc"


@dataclass(frozen=True)
class ArityMismatch(Violation):
    kind = "ArityMismatch"


class NetworkValidationError(ValueError):
    def __init__(self, violations: list[Violation]):
        self.violations = violations
        super().__init__("; ".join(str(v) for v in violations))


# --------------------------------------------------------------------------
# local functions


@dataclass(frozen=True)
class LocalFunction:
    """Truth table over the in-neighbours, lowest node index = least significant bit."""

    table: tuple[int, ...]

    @property
    def arity(self) -> int:
        return len(self.table).bit_length() - 1

    def __call__(self, index: int) -> int:
        return self.table[index]

    @classmethod
    def named(cls, name: str, arity: int) -> "LocalFunction":
        size = 1 << arity
        if name == "id":
            if arity != 1:
                raise ValueError("'id' takes exactly one input")
            return cls((0, 1))
        if name == "neg":
            if arity != 1:
                raise ValueError("'neg' takes exactly one input")
            return cls((1, 0))
        full = size - 1
        if name == "and":
            table = [int(k == full) for k in range(size)]
        elif name == "or":
            table = [int(k != 0) for k in range(size)]
        elif name == "nand":
            table = [int(k != full) for k in range(size)]
        elif name == "nor":
            table = [int(k == 0) for k in range(size)]
        else:
            raise ValueError(f"unknown function name {name!r}; expected one of {NAMED_FUNCTIONS}")
        return cls(tuple(table))


def input_sign(table: Sequence[int], position: int) -> int | None:
    """Sign of the dependence of ``table`` on input ``position``.

    Returns ``+1`` (non-decreasing), ``-1`` (non-increasing), ``0`` (vacuous) or
    ``None`` when the function is not monotone in that input.
    """
    up = down = False
    bit = 1 << position
    for k in range(len(table)):
        if k & bit:
            continue
        lo, hi = table[k], table[k | bit]
        if hi > lo:
            up = True
        elif hi < lo:
            down = True
    if up and down:
        return None
    if up:
        return 1
    if down:
        return -1
    return 0


# --------------------------------------------------------------------------
# networks


@dataclass(frozen=True)
class Network:
    """A Boolean automata network with validated, sign-definite local functions.

    Build instances through :func:`validate_network` (or the helpers that call
    it) so that ``arc_signs`` is derived rather than trusted.
    """

    n: int
    in_neighbors: tuple[tuple[int, ...], ...]
    functions: tuple[LocalFunction, ...]
    node_names: tuple[str, ...] = ()
    arc_signs: dict[tuple[int, int], int] = field(default_factory=dict, compare=False, hash=False)

    @property
    def arcs(self) -> list[tuple[int, int]]:
        return [(i, j) for j in range(self.n) for i in self.in_neighbors[j]]

    def eval_local(self, j: int, x: int) -> int:
        """State node ``j`` takes when updated from configuration ``x``."""
        idx = 0
        for k, i in enumerate(self.in_neighbors[j]):
            idx |= ((x >> i) & 1) << k
        return self.functions[j].table[idx]

    def apply_subset(self, x: int, subset: Iterable[int] | int) -> int:
        """``F^P(x)``: update the nodes of ``P`` synchronously from ``x``."""
        mask = subset if isinstance(subset, int) else sum(1 << i for i in set(subset))
        y = x
        for j in range(self.n):
            if (mask >> j) & 1:
                y = (y & ~(1 << j)) | (self.eval_local(j, x) << j)
        return y

    def apply_parallel(self, x: int) -> int:
        return int(self.parallel_map[x]) if self.n <= GIG_GUARD else self.apply_subset(x, (1 << self.n) - 1)

    def iterate_parallel(self, x: int, k: int) -> int:
        if k < 0:
            raise ValueError("k must be non-negative")
        for _ in range(k):
            x = self.apply_parallel(x)
        return x

    def unstable_set(self, x: int) -> frozenset[int]:
        """``U(x)``: nodes whose state differs from their local function output."""
        return frozenset(j for j in range(self.n) if (x >> j) & 1 != self.eval_local(j, x))

    def unstable_mask(self, x: int) -> int:
        return sum(1 << j for j in self.unstable_set(x))

    def potential(self, x: int) -> int:
        """``u(x) = |U(x)|``."""
        return len(self.unstable_set(x))

    @cached_property
    def parallel_map(self) -> np.ndarray:
        """``F(x)`` for every configuration, as an array indexed by ``x``."""
        check_guard(self.n, TRAJECTORY_GUARD, what="parallel map")
        xs = np.arange(1 << self.n, dtype=np.int64)
        out = np.zeros_like(xs)
        for j in range(self.n):
            idx = np.zeros_like(xs)
            for k, i in enumerate(self.in_neighbors[j]):
                idx |= ((xs >> i) & 1) << k
            table = np.asarray(self.functions[j].table, dtype=np.int64)
            out |= table[idx] << j
        out.setflags(write=False)
        return out

    @cached_property
    def unstable_masks(self) -> np.ndarray:
        """Bitmask of ``U(x)`` for every configuration."""
        xs = np.arange(1 << self.n, dtype=np.int64)
        masks = xs ^ self.parallel_map
        masks.setflags(write=False)
        return masks

    @cached_property
    def potentials(self) -> np.ndarray:
        """``u(x)`` for every configuration."""
        m = self.unstable_masks
        u = np.zeros(m.shape, dtype=np.int64)
        for j in range(self.n):
            u += (m >> j) & 1
        u.setflags(write=False)
        return u

    def fixed_points(self) -> list[int]:
        return [int(x) for x in np.flatnonzero(self.unstable_masks == 0)]

    def describe(self) -> dict:
        return {
            "n": self.n,
            "arcs": [
                {"src": i, "dst": j, "sign": "+" if self.arc_signs[(i, j)] > 0 else "-"}
                for (i, j) in self.arcs
            ],
        }


def validate_network(
    n: int,
    in_neighbors: Sequence[Sequence[int]],
    tables: Sequence[Sequence[int]],
    node_names: Sequence[str] | None = None,
) -> Network:
    """Check a raw description and derive arc signs.

    In-neighbour lists are sorted ascending so that table indices follow the
    node-index order. Raises :class:`NetworkValidationError` carrying every
    violation found. Nodes without inputs (constant sources) are accepted with a
    warning.
    """
    violations: list[Violation] = []
    if len(in_neighbors) != n or len(tables) != n:
        raise NetworkValidationError(
            [ArityMismatch(-1, f"expected {n} nodes, got {len(in_neighbors)} input lists and {len(tables)} tables")]
        )
    neigh: list[tuple[int, ...]] = []
    funcs: list[LocalFunction] = []
    signs: dict[tuple[int, int], int] = {}
    for j in range(n):
        inputs = list(in_neighbors[j])
        if len(set(inputs)) != len(inputs) or any(not 0 <= i < n for i in inputs):
            violations.append(ArityMismatch(j, f"invalid in-neighbour list {inputs}"))
            neigh.append(())
            funcs.append(LocalFunction((0,)))
            continue
        if len(inputs) > MAX_ARITY:
            violations.append(ArityMismatch(j, f"arity {len(inputs)} exceeds {MAX_ARITY}"))
            neigh.append(())
            funcs.append(LocalFunction((0,)))
            continue
        order = sorted(range(len(inputs)), key=lambda k: inputs[k])
        table = [int(b) for b in tables[j]]
        if len(table) != 1 << len(inputs):
            violations.append(
                ArityMismatch(j, f"table length {len(table)} != 2^{len(inputs)}")
            )
            neigh.append(tuple(sorted(inputs)))
            funcs.append(LocalFunction((0,) * (1 << len(inputs))))
            continue
        if any(b not in (0, 1) for b in table):
            violations.append(ArityMismatch(j, "table entries must be 0 or 1"))
        if order != list(range(len(inputs))):
            # permute table so that input k of the sorted list is bit k
            perm = []
            for idx in range(len(table)):
                orig = 0
                for new_pos, old_pos in enumerate(order):
                    if (idx >> new_pos) & 1:
                        orig |= 1 << old_pos
                perm.append(table[orig])
            table = perm
            inputs = sorted(inputs)
        if not inputs:
            warnings.warn(f"node {j} has a constant local function", stacklevel=2)
        for k, i in enumerate(inputs):
            sign = input_sign(table, k)
            if sign is None:
                violations.append(NonMonotone(j, f"not monotone in input {i}", input=i))
            elif sign == 0:
                violations.append(VacuousArc(j, f"output does not depend on input {i}", input=i))
            else:
                signs[(i, j)] = sign
        neigh.append(tuple(inputs))
        funcs.append(LocalFunction(tuple(table)))
    if violations:
        raise NetworkValidationError(violations)
    names = tuple(node_names) if node_names else tuple(str(i) for i in range(n))
    return Network(n, tuple(neigh), tuple(funcs), names, signs)


def network_from_dict(doc: dict) -> Network:
    """Build a network from the file-format mapping (``n`` and ``nodes``)."""
    n = int(doc["n"])
    nodes = doc["nodes"]
    if len(nodes) != n:
        raise NetworkValidationError([ArityMismatch(-1, f"n={n} but {len(nodes)} nodes listed")])
    by_id = {int(node["id"]): node for node in nodes}
    if sorted(by_id) != list(range(n)):
        raise NetworkValidationError([ArityMismatch(-1, "node ids must be 0..n-1")])
    inputs, tables, names = [], [], []
    for j in range(n):
        node = by_id[j]
        ins = [int(i) for i in node.get("inputs", [])]
        if "table" in node:
            table = list(node["table"])
        else:
            fn = node.get("function")
            if fn is None:
                raise NetworkValidationError([ArityMismatch(j, "node needs 'function' or 'table'")])
            try:
                table = list(LocalFunction.named(fn, len(ins)).table)
            except ValueError as exc:
                raise NetworkValidationError([ArityMismatch(j, str(exc))]) from None
        inputs.append(ins)
        tables.append(table)
        names.append(str(node.get("name", j)))
    return validate_network(n, inputs, tables, names)


def load_network(path: str | Path) -> Network:
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if path.suffix in (".yaml", ".yml"):
        import yaml

        doc = yaml.safe_load(text)
    else:
        doc = json.loads(text)
    return network_from_dict(doc)


def network_to_dict(net: Network) -> dict:
    return {
        "n": net.n,
        "nodes": [
            {
                "id": j,
                "name": net.node_names[j] if net.node_names else str(j),
                "inputs": list(net.in_neighbors[j]),
                "table": list(net.functions[j].table),
            }
            for j in range(net.n)
        ],
    }


def random_network(n: int, rng: np.random.Generator, max_inputs: int = 3) -> Network:
    """Draw a random valid network from signed threshold functions.

    Every node gets 1..``max_inputs`` distinct in-neighbours (self-loops
    allowed). Draws that produce a vacuous input are retried.
    """
    inputs: list[list[int]] = []
    tables: list[list[int]] = []
    for _ in range(n):
        while True:
            k = int(rng.integers(1, min(n, max_inputs) + 1))
            ins = sorted(int(i) for i in rng.choice(n, size=k, replace=False))
            signs = rng.choice([-1, 1], size=k)
            weights = rng.integers(1, 4, size=k)
            threshold = int(rng.integers(1, int(weights.sum()) + 1))
            table = []
            for idx in range(1 << k):
                lits = [((idx >> b) & 1) if signs[b] > 0 else 1 - ((idx >> b) & 1) for b in range(k)]
                table.append(int(sum(w * v for w, v in zip(weights, lits)) >= threshold))
            if all(input_sign(table, b) not in (0, None) for b in range(k)):
                break
        inputs.append(ins)
        tables.append(table)
    return validate_network(n, inputs, tables)
