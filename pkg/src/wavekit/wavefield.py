"""Forward-wavefield management: in-memory, on-disk, and optimal checkpointing.

All three strategies present the same contract to the adjoint sweep: fields
are saved once per forward step in increasing order, then retrieved in
strictly decreasing order.  The checkpoint strategy keeps at most ``s``
two-level snapshots alive and re-advances from the nearest one, following a
plan whose total advance count is provably minimal for the slot budget.

A plan is expressed over "positions" 0..ns-1, position t meaning the
propagation state right after forward step t.  Position 0 is snapshotted
into an anchor slot that counts against ``s``; with that convention
``ns <= s+1`` needs no recomputation and ``s >= ns`` behaves exactly like
the memory strategy.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np

__all__ = [
    "Advance",
    "Snapshot",
    "Restore",
    "Reverse",
    "Discard",
    "CheckpointPlan",
    "plan_checkpoints",
    "optimal_advance_count",
    "slots_from_budget",
    "WavefieldStore",
    "MemoryWavefieldStore",
    "DiskWavefieldStore",
    "CheckpointWavefieldStore",
    "make_store",
    "StoreError",
]


class StoreError(RuntimeError):
    """Lifecycle or ordering violation in a wavefield store."""


class Advance(NamedTuple):
    start: int
    stop: int


class Snapshot(NamedTuple):
    step: int
    slot: int


class Restore(NamedTuple):
    slot: int


class Reverse(NamedTuple):
    step: int


class Discard(NamedTuple):
    slot: int


@dataclass(frozen=True)
class CheckpointPlan:
    """Action schedule for one adjoint sweep under a snapshot budget."""

    ns: int
    slots: int
    actions: tuple

    @property
    def total_advances(self) -> int:
        return sum(a.stop - a.start for a in self.actions if isinstance(a, Advance))

    @property
    def first_reverse_index(self) -> int:
        for i, a in enumerate(self.actions):
            if isinstance(a, Reverse):
                return i
        return len(self.actions)

    def forward_snapshots(self) -> dict[int, int]:
        """step -> slot for snapshots taken during the initial forward sweep."""
        cut = self.first_reverse_index
        return {a.step: a.slot for a in self.actions[:cut] if isinstance(a, Snapshot)}


def _advance_table(ns: int, slots: int) -> np.ndarray:
    """W[n, s] = minimal total advances to reverse n steps with s slots,
    the segment-start state occupying one of them."""
    inf = np.inf
    w = np.full((ns + 1, slots + 1), inf)
    w[0, :] = 0.0
    w[1, :] = 0.0
    if slots >= 1:
        n = np.arange(ns + 1, dtype=np.float64)
        w[:, 1] = n * (n - 1) / 2.0
    for s in range(2, slots + 1):
        for n in range(2, ns + 1):
            ks = np.arange(1, n)
            w[n, s] = (ks + w[n - ks, s - 1] + w[ks, s]).min()
    return w


_TABLE_CACHE: dict[tuple[int, int], np.ndarray] = {}


def _table(ns: int, slots: int) -> np.ndarray:
    key = (ns, slots)
    if key not in _TABLE_CACHE:
        if len(_TABLE_CACHE) > 32:
            _TABLE_CACHE.clear()
        _TABLE_CACHE[key] = _advance_table(ns, slots)
    return _TABLE_CACHE[key]


def optimal_advance_count(ns: int, slots: int) -> int:
    """Minimal total advances (initial sweep included) for ns steps, s slots."""
    if ns == 1:
        return 0
    if slots < 1:
        raise ValueError("checkpointing needs at least one slot for ns > 1")
    return int(_table(ns, slots)[ns, slots])


def plan_checkpoints(ns: int, slots: int) -> CheckpointPlan:
    """Build the minimal-recomputation schedule for ns steps and s slots."""
    if ns < 1:
        raise ValueError("ns must be >= 1")
    if slots < 0:
        raise ValueError("slots must be nonnegative")
    if ns == 1:
        actions = [Reverse(0)] if slots == 0 else [Snapshot(0, 0), Reverse(0)]
        return CheckpointPlan(ns=ns, slots=slots, actions=tuple(actions))
    if slots < 1:
        raise ValueError("checkpointing needs at least one slot for ns > 1")

    w = _table(ns, slots)
    actions: list = [Snapshot(0, 0)]
    free = list(range(slots - 1, 0, -1))  # pop() hands out the lowest id first
    live = 0

    def best_k(n: int, s: int) -> int:
        ks = np.arange(1, n)
        return int(ks[np.argmin(ks + w[n - ks, s - 1] + w[ks, s])])

    def segment(base: int, n: int, anchor: int) -> None:
        nonlocal live
        if n == 1:
            if live != base:
                actions.append(Restore(anchor))
                live = base
            actions.append(Reverse(base))
            return
        if not free:
            for t in range(n - 1, -1, -1):
                if live != base + t:
                    if live != base:
                        actions.append(Restore(anchor))
                        live = base
                    if t > 0:
                        actions.append(Advance(base, base + t))
                        live = base + t
                actions.append(Reverse(base + t))
            return
        k = best_k(n, 1 + len(free))
        if live != base:
            actions.append(Restore(anchor))
            live = base
        actions.append(Advance(base, base + k))
        live = base + k
        slot = free.pop()
        actions.append(Snapshot(base + k, slot))
        segment(base + k, n - k, slot)
        actions.append(Discard(slot))
        free.append(slot)
        segment(base, k, anchor)

    segment(0, ns, 0)
    return CheckpointPlan(ns=ns, slots=slots, actions=tuple(actions))


def slots_from_budget(check_mem: float, mem_budget_bytes: int, field_bytes: int) -> int:
    """Snapshot capacity from the memory fraction granted to checkpoint buffers."""
    if check_mem <= 0 or mem_budget_bytes <= 0 or field_bytes <= 0:
        raise ValueError("budget inputs must be positive")
    slots = int(check_mem * mem_budget_bytes / field_bytes)
    if slots < 1:
        warnings.warn(f"one checkpoint buffer ({field_bytes} bytes) exceeds the "
                      f"memory budget {check_mem} * {mem_budget_bytes}; using 1 slot",
                      RuntimeWarning, stacklevel=2)
        return 1
    return slots


class WavefieldStore:
    """Common bookkeeping: monotone saves, strictly decreasing retrieves."""

    mode = "none"

    def __init__(self, ns: int):
        self.ns = ns
        self._next_save = 0
        self._last_retrieved: int | None = None
        self._closed = False

    def _check_save(self, t: int) -> None:
        if self._closed:
            raise StoreError("save after end_shot")
        if t != self._next_save:
            raise StoreError(f"saves must arrive in order: expected {self._next_save}, got {t}")
        self._next_save += 1

    def _check_retrieve(self, t: int) -> None:
        if self._closed:
            raise StoreError("retrieve after end_shot")
        if not 0 <= t < self.ns:
            raise StoreError(f"step {t} outside 0..{self.ns - 1}")
        if self._last_retrieved is not None and t >= self._last_retrieved:
            raise StoreError(f"retrieves must be strictly decreasing: "
                             f"{t} after {self._last_retrieved}")
        self._last_retrieved = t

    def save_wavefield(self, t: int, field: np.ndarray, prev: np.ndarray | None = None) -> None:
        raise NotImplementedError

    def retrieve_wavefield(self, t: int, stepper=None) -> np.ndarray:
        raise NotImplementedError

    def end_shot(self) -> None:
        self._closed = True

    def reset(self, ns: int | None = None) -> None:
        """Make the store reusable for the next shot."""
        self.ns = self.ns if ns is None else ns
        self._next_save = 0
        self._last_retrieved = None
        self._closed = False


class MemoryWavefieldStore(WavefieldStore):
    """Every forward field copied to RAM; retrieval hands back views."""

    mode = "memory"

    def __init__(self, ns: int):
        super().__init__(ns)
        self._fields: list[np.ndarray | None] = [None] * ns

    def save_wavefield(self, t, field, prev=None):
        self._check_save(t)
        self._fields[t] = field.copy()

    def retrieve_wavefield(self, t, stepper=None):
        self._check_retrieve(t)
        field = self._fields[t]
        if field is None:
            raise StoreError(f"step {t} was never saved")
        return field

    def end_shot(self):
        super().end_shot()
        self._fields = []

    def reset(self, ns=None):
        super().reset(ns)
        self._fields = [None] * self.ns


class DiskWavefieldStore(WavefieldStore):
    """Fields appended to a per-shot scratch file of raw little-endian f8."""

    mode = "disk"

    def __init__(self, ns: int, scratch_dir, shot_id: int):
        super().__init__(ns)
        self.shot_id = shot_id
        self.path = Path(scratch_dir) / f"shot_{shot_id}.wf"
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = open(self.path, "wb+")
        self._shape: tuple[int, ...] | None = None
        self._nbytes = 0

    def save_wavefield(self, t, field, prev=None):
        self._check_save(t)
        if self._shape is None:
            self._shape = field.shape
            self._nbytes = field.size * 8
        self._fh.seek(t * self._nbytes)
        self._fh.write(np.ascontiguousarray(field, dtype="<f8").tobytes())
        self._fh.flush()

    def retrieve_wavefield(self, t, stepper=None):
        self._check_retrieve(t)
        if t >= self._next_save:
            raise StoreError(f"step {t} was never saved")
        self._fh.seek(t * self._nbytes)
        raw = self._fh.read(self._nbytes)
        if len(raw) != self._nbytes:
            raise StoreError(f"short read from {self.path}")
        return np.frombuffer(raw, dtype="<f8").reshape(self._shape).copy()

    def end_shot(self):
        super().end_shot()
        self._fh.close()
        try:
            self.path.unlink()
        except OSError as exc:  # deletion failure is not fatal
            warnings.warn(f"could not remove scratch file {self.path}: {exc}",
                          RuntimeWarning, stacklevel=2)

    def reset(self, ns=None):
        super().reset(ns)
        self._fh = open(self.path, "wb+")
        self._shape = None


class CheckpointWavefieldStore(WavefieldStore):
    """Bounded snapshot slots plus recomputation, per the optimal plan.

    Snapshots keep both time levels so a restart reproduces the forward
    arithmetic bit for bit.  Retrieval needs a ``stepper(prev, curr,
    t_from, t_to)`` capability that re-advances the pair in place, applying
    the same source terms as the original sweep.
    """

    mode = "checkpoint"

    def __init__(self, ns: int, slots: int, *, verbose_path=None):
        super().__init__(ns)
        self.slots = slots
        self.plan = plan_checkpoints(ns, slots)
        self.verbose_path = Path(verbose_path) if verbose_path else None
        self._forward_snaps = self.plan.forward_snapshots()
        self._snaps: dict[int, tuple[np.ndarray, np.ndarray, int]] = {}
        self._live: tuple[np.ndarray, np.ndarray] | None = None
        self._live_pos = -1
        self._cursor = self.plan.first_reverse_index
        self.re_advances = 0
        self.max_live_snapshots = 0

    def _hold(self, slot: int, prev: np.ndarray, curr: np.ndarray, step: int) -> None:
        if slot not in self._snaps and len(self._snaps) >= self.slots:
            raise StoreError("snapshot budget exceeded (plan bug)")
        self._snaps[slot] = (prev.copy(), curr.copy(), step)
        self.max_live_snapshots = max(self.max_live_snapshots, len(self._snaps))
        if self.verbose_path is not None:
            with open(self.verbose_path, "ab") as fh:
                fh.write(np.ascontiguousarray(prev, dtype="<f8").tobytes())
                fh.write(np.ascontiguousarray(curr, dtype="<f8").tobytes())

    def save_wavefield(self, t, field, prev=None):
        self._check_save(t)
        if prev is None:
            raise StoreError("checkpoint store needs the previous time level on save")
        if t in self._forward_snaps:
            self._hold(self._forward_snaps[t], prev, field, t)
        if t == self.ns - 1:
            self._live = (prev.copy(), field.copy())
            self._live_pos = t

    def retrieve_wavefield(self, t, stepper=None):
        self._check_retrieve(t)
        if self._live is None:
            raise StoreError("forward sweep incomplete: nothing to retrieve")
        actions = self.plan.actions
        while self._cursor < len(actions):
            act = actions[self._cursor]
            self._cursor += 1
            if isinstance(act, Restore):
                prev, curr, step = self._snaps[act.slot]
                self._live = (prev.copy(), curr.copy())
                self._live_pos = step
            elif isinstance(act, Advance):
                if act.start != self._live_pos:
                    raise StoreError(f"plan advance from {act.start} but live at {self._live_pos}")
                if stepper is None:
                    raise StoreError("checkpoint retrieval needs a replay stepper")
                prev, curr = stepper(self._live[0], self._live[1], act.start, act.stop)
                self._live = (prev, curr)
                self._live_pos = act.stop
                self.re_advances += act.stop - act.start
            elif isinstance(act, Snapshot):
                if act.step != self._live_pos:
                    raise StoreError(f"plan snapshot of {act.step} but live at {self._live_pos}")
                self._hold(act.slot, self._live[0], self._live[1], act.step)
            elif isinstance(act, Discard):
                del self._snaps[act.slot]
            else:  # Reverse
                if act.step != t:
                    raise StoreError(f"plan reverses {act.step} but {t} was requested")
                if self._live_pos != t:
                    raise StoreError(f"live state at {self._live_pos}, cannot deliver {t}")
                return self._live[1].copy()
        raise StoreError(f"plan exhausted before step {t} was delivered")

    def end_shot(self):
        super().end_shot()
        self._snaps = {}
        self._live = None

    def reset(self, ns=None):
        if ns is not None and ns != self.ns:
            self.plan = plan_checkpoints(ns, self.slots)
        super().reset(ns)
        self._forward_snaps = self.plan.forward_snapshots()
        self._snaps = {}
        self._live = None
        self._live_pos = -1
        self._cursor = self.plan.first_reverse_index
        self.re_advances = 0


def make_store(mode: str, ns: int, *, scratch_dir=None, shot_id: int = 0,
               slots: int = 1, verbose_path=None) -> WavefieldStore:
    if mode == "memory":
        return MemoryWavefieldStore(ns)
    if mode == "disk":
        if scratch_dir is None:
            raise ValueError("disk store needs a scratch directory")
        return DiskWavefieldStore(ns, scratch_dir, shot_id)
    if mode == "checkpoint":
        return CheckpointWavefieldStore(ns, slots, verbose_path=verbose_path)
    raise ValueError(f"unknown wavefield store mode {mode!r}")
