"""Shot distribution across an in-process worker pool.

Two modes: ``static`` hands each worker a contiguous block up front;
``ctws`` starts from the same blocks but lets an idle worker steal the back
half of a loaded peer's deque, arbitrated by a single token that circulates
the worker ring from the requester.  Either way every shot is returned
exactly once.
"""

from __future__ import annotations

import threading
from collections import deque
from dataclasses import dataclass, field

__all__ = ["ShotSchedule", "static_assign", "next_shot", "run_pool", "PoolError"]


class PoolError(RuntimeError):
    """A worker raised; carries the shot id that failed."""

    def __init__(self, shot_id, cause):
        super().__init__(f"shot {shot_id} failed: {cause!r}")
        self.shot_id = shot_id
        self.cause = cause


def static_assign(shot_ids, n_workers: int) -> list[list[int]]:
    """Contiguous blocks whose sizes differ by at most one, by worker index."""
    shot_ids = list(shot_ids)
    if n_workers < 1:
        raise ValueError("n_workers must be >= 1")
    n = len(shot_ids)
    base, extra = divmod(n, n_workers)
    blocks = []
    start = 0
    for w in range(n_workers):
        size = base + (1 if w < extra else 0)
        blocks.append(shot_ids[start:start + size])
        start += size
    return blocks


@dataclass
class ShotSchedule:
    """Mutable distribution state shared by the workers of one run."""

    n_shots: int
    n_workers: int
    mode: str = "static"
    deques: list = field(default_factory=list)
    token_holder: int = -1
    token_in_flight: bool = False
    steals: int = 0
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    @classmethod
    def create(cls, shot_ids, n_workers: int, mode: str = "static") -> "ShotSchedule":
        if mode not in ("static", "ctws"):
            raise ValueError(f"unknown scheduling mode {mode!r}")
        shot_ids = list(shot_ids)
        sched = cls(n_shots=len(shot_ids), n_workers=n_workers, mode=mode)
        sched.deques = [deque(block) for block in static_assign(shot_ids, n_workers)]
        return sched

    def remaining(self) -> int:
        with self._lock:
            return sum(len(d) for d in self.deques)


def _steal(sched: ShotSchedule, worker: int) -> bool:
    """Circulate the token from the requester; first victim holding more
    than one shot yields the back half of its deque.  Caller holds the lock."""
    sched.token_in_flight = True
    sched.token_holder = worker
    try:
        for hop in range(1, sched.n_workers):
            victim = (worker + hop) % sched.n_workers
            v = sched.deques[victim]
            if len(v) > 1:
                keep = (len(v) + 1) // 2
                items = list(v)
                sched.deques[victim] = deque(items[:keep])
                sched.deques[worker].extend(items[keep:])
                sched.steals += 1
                return True
        return False
    finally:
        sched.token_in_flight = False
        sched.token_holder = -1


def next_shot(sched: ShotSchedule, worker: int):
    """Next shot id for this worker, or None when it is exhausted."""
    if not 0 <= worker < sched.n_workers:
        raise ValueError(f"worker {worker} out of range")
    with sched._lock:
        own = sched.deques[worker]
        if own:
            return own.popleft()
        if sched.mode == "static":
            return None
        if _steal(sched, worker):
            return sched.deques[worker].popleft()
        return None


def run_pool(shot_ids, n_workers: int, mode: str, work) -> dict:
    """Execute ``work(shot_id)`` for every shot on a thread pool.

    Results are keyed by shot id.  The first failure cancels any shots not
    yet started and is re-raised as :class:`PoolError`; ``work`` must be
    deterministic per shot so results do not depend on mode or worker count.
    """
    sched = ShotSchedule.create(shot_ids, n_workers, mode)
    results: dict = {}
    failure: list[PoolError] = []
    cancel = threading.Event()
    lock = threading.Lock()

    def run_worker(w: int) -> None:
        while not cancel.is_set():
            sid = next_shot(sched, w)
            if sid is None:
                return
            try:
                value = work(sid)
            except Exception as exc:  # noqa: BLE001 - reported to the caller
                with lock:
                    if not failure:
                        failure.append(PoolError(sid, exc))
                cancel.set()
                return
            with lock:
                if sid in results:
                    raise AssertionError(f"shot {sid} executed twice")
                results[sid] = value

    threads = [threading.Thread(target=run_worker, args=(w,), name=f"shot-worker-{w}")
               for w in range(n_workers)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    if failure:
        raise failure[0]
    return results
