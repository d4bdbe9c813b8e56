"""Block-sequential update schedules, trajectories and attractors."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import Iterator, Literal, Sequence

import numpy as np

from giglab.network import (
    TRAJECTORY_GUARD,
    Network,
    StateSpaceGuard,
    check_guard,
    config_to_str,
    guard_limit,
)

Observation = Literal["macro", "block"]

SCHEDULE_ENUM_GUARD = 8


class ScheduleError(ValueError):
    pass


class GapInDates(ScheduleError):
    pass


class MinNotZero(ScheduleError):
    pass


class LengthMismatch(ScheduleError):
    pass


@dataclass(frozen=True)
class UpdateSchedule:
    """Update dates per node; nodes sharing a date form a synchronous block."""

    dates: tuple[int, ...]

    @property
    def n(self) -> int:
        return len(self.dates)

    @cached_property
    def blocks(self) -> tuple[tuple[int, ...], ...]:
        m = max(self.dates, default=-1)
        return tuple(tuple(i for i, d in enumerate(self.dates) if d == k) for k in range(m + 1))

    @cached_property
    def block_masks(self) -> tuple[int, ...]:
        return tuple(sum(1 << i for i in b) for b in self.blocks)

    @property
    def is_parallel(self) -> bool:
        return len(self.blocks) == 1

    @property
    def is_sequential(self) -> bool:
        return len(self.blocks) == self.n

    @property
    def is_aligned_sequential(self) -> bool:
        """Sequential, and the block order follows the node order up to rotation."""
        if not self.is_sequential:
            return False
        order = [b[0] for b in self.blocks]
        start = order[0]
        return all(order[k] == (start + k) % self.n for k in range(self.n))

    @classmethod
    def from_blocks(cls, blocks: Sequence[Sequence[int]], n: int | None = None) -> "UpdateSchedule":
        size = n if n is not None else sum(len(b) for b in blocks)
        dates = [-1] * size
        for k, block in enumerate(blocks):
            if not block:
                raise GapInDates(f"block {k} is empty")
            for i in block:
                if not 0 <= i < size:
                    raise LengthMismatch(f"node {i} outside 0..{size - 1}")
                if dates[i] != -1:
                    raise ScheduleError(f"node {i} appears in more than one block")
                dates[i] = k
        if -1 in dates:
            raise ScheduleError(f"node {dates.index(-1)} is never updated")
        return cls(tuple(dates))

    def literal(self) -> str:
        return ";".join(",".join(str(i) for i in b) for b in self.blocks)

    def __str__(self) -> str:
        return "[" + ", ".join("{" + ",".join(map(str, b)) + "}" for b in self.blocks) + "]"


def validate_schedule(dates: Sequence[int], n: int) -> UpdateSchedule:
    if len(dates) != n:
        raise LengthMismatch(f"{len(dates)} dates for {n} nodes")
    dates = tuple(int(d) for d in dates)
    if n == 0:
        return UpdateSchedule(())
    if min(dates) != 0:
        raise MinNotZero(f"smallest date is {min(dates)}, expected 0")
    used = set(dates)
    missing = [d for d in range(max(dates) + 1) if d not in used]
    if missing:
        raise GapInDates(f"dates {missing} are never used")
    return UpdateSchedule(dates)


def parallel(n: int) -> UpdateSchedule:
    return UpdateSchedule((0,) * n)


def aligned_sequential(n: int, start: int = 0) -> UpdateSchedule:
    return UpdateSchedule(tuple((i - start) % n for i in range(n)))


def parse_schedule(text: str, n: int) -> UpdateSchedule:
    """Parse ``*`` (parallel), ``seq`` (0,1,..,n-1) or ``0,2;1`` block literals."""
    text = text.strip()
    if text == "*":
        return parallel(n)
    if text == "seq":
        return aligned_sequential(n)
    blocks = []
    for part in text.split(";"):
        part = part.strip()
        if not part:
            raise GapInDates(f"empty block in schedule literal {text!r}")
        blocks.append([int(tok) for tok in part.split(",")])
    sched = UpdateSchedule.from_blocks(blocks, n)
    return validate_schedule(sched.dates, n)


# --------------------------------------------------------------------------
# dynamics


def macro_step(net: Network, x: int, s: UpdateSchedule) -> int:
    """Apply each block in turn, each reading the configuration left by the previous one."""
    for mask in s.block_masks:
        x = net.apply_subset(x, mask)
    return x


def macro_map(net: Network, s: UpdateSchedule) -> np.ndarray:
    """Macro-step image of every configuration, vectorised over the state space."""
    fmap = net.parallel_map
    y = np.arange(1 << net.n, dtype=np.int64)
    for mask in s.block_masks:
        y = (y & ~mask) | (fmap[y] & mask)
    return y


def block_maps(net: Network, s: UpdateSchedule) -> list[np.ndarray]:
    fmap = net.parallel_map
    xs = np.arange(1 << net.n, dtype=np.int64)
    return [(xs & ~mask) | (fmap[xs] & mask) for mask in s.block_masks]


@dataclass(frozen=True)
class Attractor:
    cycle: tuple[int, ...]
    n: int
    observation: str = "macro"
    basin_size: int | None = None

    @property
    def period(self) -> int:
        return len(self.cycle)

    @property
    def kind(self) -> str:
        return "fixed-point" if self.period == 1 else "limit-cycle"

    @property
    def key(self) -> tuple[int, ...]:
        return self.cycle

    def with_basin(self, size: int) -> "Attractor":
        return Attractor(self.cycle, self.n, self.observation, size)

    def render(self) -> list[str]:
        return [config_to_str(x, self.n) for x in self.cycle]

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "period": self.period, "cycle": self.render()}
        if self.basin_size is not None:
            d["basin_size"] = self.basin_size
        return d


def canonical_cycle(seq: Sequence[int], n: int) -> tuple[int, ...]:
    """Reduce a periodic sequence to its minimal period, then rotate so it is
    lexicographically smallest (configurations compared as rendered strings)."""
    seq = list(seq)
    L = len(seq)
    for d in range(1, L + 1):
        if L % d == 0 and all(seq[t] == seq[t % d] for t in range(L)):
            seq = seq[:d]
            break
    rendered = [config_to_str(x, n) for x in seq]
    best = min(range(len(seq)), key=lambda r: rendered[r:] + rendered[:r])
    return tuple(seq[best:] + seq[:best])


def find_attractor(
    net: Network,
    x0: int,
    s: UpdateSchedule,
    observation: Observation = "macro",
    force: bool = False,
) -> tuple[int, Attractor]:
    """Iterate from ``x0`` until a state repeats.

    Returns ``(transient_length, attractor)``. The transient is counted in
    macro-steps for macro observation and in block updates for block
    observation.
    """
    check_guard(net.n, TRAJECTORY_GUARD, force, "trajectory scan")
    if observation == "macro":
        seen: dict[int, int] = {}
        traj: list[int] = []
        x = x0
        while x not in seen:
            seen[x] = len(traj)
            traj.append(x)
            x = macro_step(net, x, s)
        start = seen[x]
        return start, Attractor(canonical_cycle(traj[start:], net.n), net.n, "macro")
    if observation == "block":
        masks = s.block_masks
        seen2: dict[tuple[int, int], int] = {}
        traj = []
        x, phase = x0, 0
        while (x, phase) not in seen2:
            seen2[(x, phase)] = len(traj)
            x = net.apply_subset(x, masks[phase])
            phase = (phase + 1) % len(masks)
            traj.append(x)
        start = seen2[(x, phase)]
        return start, Attractor(canonical_cycle(traj[start:], net.n), net.n, "block")
    raise ValueError(f"unknown observation mode {observation!r}")


def _functional_cycles(succ: np.ndarray) -> tuple[list[list[int]], np.ndarray]:
    """Cycles of a functional graph and, for every node, the index of the cycle it reaches."""
    size = len(succ)
    succ_list = succ.tolist()
    label = [-1] * size
    state = [0] * size  # 0 unseen, 1 on current path, 2 done
    cycles: list[list[int]] = []
    for start in range(size):
        if state[start]:
            continue
        path = []
        v = start
        while state[v] == 0:
            state[v] = 1
            path.append(v)
            v = succ_list[v]
        if state[v] == 1:
            cycles.append(path[path.index(v):])
            target = len(cycles) - 1
        else:
            target = label[v]
        for w in path:
            label[w] = target
            state[w] = 2
    return cycles, np.asarray(label, dtype=np.int64)


def enumerate_attractors(
    net: Network,
    s: UpdateSchedule,
    observation: Observation = "macro",
    force: bool = False,
) -> list[Attractor]:
    """All attractors reached from the 2^n initial configurations, with basin sizes.

    Block observation treats (configuration, next block) as the state, starting
    every run at block 0; the basin counts initial configurations.
    """
    check_guard(net.n, TRAJECTORY_GUARD, force, "attractor enumeration")
    size = 1 << net.n
    if observation == "macro":
        succ = macro_map(net, s)
        cycles, label = _functional_cycles(succ)
        basins = np.bincount(label, minlength=len(cycles))
        merged: dict[tuple[int, ...], int] = {}
        for cid, cyc in enumerate(cycles):
            key = canonical_cycle(cyc, net.n)
            merged[key] = merged.get(key, 0) + int(basins[cid])
    elif observation == "block":
        maps = block_maps(net, s)
        m = len(maps)
        # state index = phase * size + x, phase = index of the next block to apply
        succ = np.empty(m * size, dtype=np.int64)
        for phase, fmap in enumerate(maps):
            succ[phase * size:(phase + 1) * size] = ((phase + 1) % m) * size + fmap
        cycles, label = _functional_cycles(succ)
        basins = np.bincount(label[:size], minlength=len(cycles))
        merged = {}
        for cid, cyc in enumerate(cycles):
            # record the configuration after each block update
            cfgs = [int(succ[v] % size) for v in cyc]
            key = canonical_cycle(cfgs, net.n)
            merged[key] = merged.get(key, 0) + int(basins[cid])
    else:
        raise ValueError(f"unknown observation mode {observation!r}")
    out = [Attractor(k, net.n, observation, b) for k, b in merged.items()]
    out.sort(key=lambda a: (a.period, [config_to_str(x, net.n) for x in a.cycle]))
    return out


# --------------------------------------------------------------------------
# counting and enumeration


@lru_cache(maxsize=None)
def count_block_sequential(n: int) -> int:
    """Number of ordered partitions of an n-set into nonempty blocks."""
    if n < 0:
        raise ValueError("n must be non-negative")
    if n == 0:
        return 1
    return sum(math.comb(n, k) * count_block_sequential(k) for k in range(n))


@lru_cache(maxsize=None)
def count_surjections(n: int, k: int) -> int:
    if n < 0 or k < 0:
        raise ValueError("n and k must be non-negative")
    if n == 0:
        return 1 if k == 0 else 0
    if k == 0:
        return 0
    return k * (count_surjections(n - 1, k - 1) + count_surjections(n - 1, k))


def count_rotation_classes(n: int) -> int:
    """Block-sequential schedules up to cyclic rotation of the block list."""
    if n < 1:
        raise ValueError("n must be at least 1")
    total = sum(Fraction(count_surjections(n, k), k) for k in range(1, n + 1))
    if total.denominator != 1:
        raise ArithmeticError(f"non-integral rotation class count {total}")
    return int(total)


def enumerate_schedules(n: int, force: bool = False) -> Iterator[UpdateSchedule]:
    """Yield every block-sequential schedule of ``n`` nodes exactly once."""
    if not force and n > guard_limit(SCHEDULE_ENUM_GUARD):
        raise StateSpaceGuard(f"schedule enumeration for n={n} exceeds guard {SCHEDULE_ENUM_GUARD}")

    def rec(remaining: tuple[int, ...]) -> Iterator[list[tuple[int, ...]]]:
        if not remaining:
            yield []
            return
        for r in range(1, len(remaining) + 1):
            for first in itertools.combinations(remaining, r):
                rest = tuple(i for i in remaining if i not in first)
                for tail in rec(rest):
                    yield [first, *tail]

    for blocks in rec(tuple(range(n))):
        yield UpdateSchedule.from_blocks(blocks, n)


def canonicalize_rotation(s: UpdateSchedule) -> UpdateSchedule:
    """Smallest cyclic rotation of the block list (blocks as sorted index tuples)."""
    blocks = list(s.blocks)
    m = len(blocks)
    best = min((blocks[r:] + blocks[:r] for r in range(max(m, 1))), key=tuple)
    return UpdateSchedule.from_blocks(best, s.n)
