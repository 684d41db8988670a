"""Logical processes and the two schedulers that run them.

Every runtime component (actor, monitor, coordinator, registry) is a
:class:`Process` that owns its state and talks to others only through
``cast`` (asynchronous) and ``call`` (request/reply). Two schedulers honour
the same contract:

* :class:`SimScheduler` is single-threaded and seeded. At each step it picks
  a ready mailbox with its own RNG, so a (program, seed) pair always yields
  the same interleaving. A ``call`` runs the callee's handler directly; a
  call into a process that is already on the call stack would deadlock in a
  real system and raises :class:`CallTimeout` instead.
* :class:`LiveScheduler` runs one thread per process and implements calls
  with futures and a wall-clock timeout.

Both count every message by kind, which the benchmark uses for accounting.
"""

from __future__ import annotations

import heapq
import itertools
import logging
import queue
import random
import threading
import time
from collections import Counter, defaultdict, deque
from concurrent.futures import Future
from concurrent.futures import TimeoutError as FutureTimeout
from dataclasses import dataclass
from typing import Any, Callable, Optional

log = logging.getLogger(__name__)

Pid = int


class Unreachable(Exception):
    """The target process is dead, or died while handling the request."""

    def __init__(self, pid: Pid, reason: Any = None):
        super().__init__(f"process {pid} is unreachable ({reason})")
        self.pid = pid
        self.reason = reason


class CallTimeout(Unreachable):
    """A synchronous call got no reply in time."""


@dataclass(frozen=True)
class Down:
    """Sent to watchers when a process terminates."""

    pid: Pid
    reason: Any


class Process:
    """Base class for anything the schedulers run."""

    pid: Pid = -1
    sched: Scheduler
    # Crashes in critical processes are re-raised by a strict simulator.
    critical = True

    @property
    def name(self) -> str:
        return f"{type(self).__name__}<{self.pid}>"

    def started(self) -> None:
        """Runs in the spawner's context right after the pid is assigned."""

    def handle(self, msg: Any) -> None:
        raise NotImplementedError(f"{self.name} does not accept casts")

    def handle_call(self, req: Any) -> Any:
        raise NotImplementedError(f"{self.name} does not accept calls")

    def exited(self, reason: Any) -> None:
        """Hook run once when the process terminates."""


class Scheduler:
    """Operations shared by both schedulers."""

    def __init__(self) -> None:
        self.procs: dict[Pid, Process] = {}
        self.counts: Counter[str] = Counter()
        self.exit_reasons: dict[Pid, Any] = {}
        self._watchers: dict[Pid, set[Pid]] = defaultdict(set)
        self._links: dict[Pid, set[Pid]] = defaultdict(set)
        self._pids = itertools.count(1)
        self.crash_hook: Optional[Callable[[Pid, BaseException], None]] = None

    # Overridden by subclasses.
    def spawn(self, proc: Process) -> Pid: ...
    def cast(self, to: Pid, msg: Any, kind: str = "control") -> None: ...
    def call(self, to: Pid, req: Any, kind: str = "control",
             timeout: Optional[float] = None) -> Any: ...
    def current(self) -> Optional[Pid]: ...
    def is_alive(self, pid: Pid) -> bool: ...
    def now(self) -> float: ...
    def send_after(self, delay: float, to: Pid, msg: Any) -> None: ...
    def _mark_dead(self, pid: Pid) -> bool: ...

    def _register(self, proc: Process) -> Pid:
        pid = next(self._pids)
        proc.pid = pid
        proc.sched = self
        self.procs[pid] = proc
        return pid

    def watch(self, watcher: Pid, target: Pid) -> None:
        """Deliver ``Down`` to ``watcher`` once ``target`` terminates."""
        if self.is_alive(target):
            self._watchers[target].add(watcher)
        else:
            self.cast(watcher, Down(target, self.exit_reasons.get(target, "noproc")), "down")

    def unwatch(self, watcher: Pid, target: Pid) -> None:
        self._watchers[target].discard(watcher)

    def link(self, a: Pid, b: Pid) -> None:
        """Terminate each of ``a`` and ``b`` when the other terminates."""
        self._links[a].add(b)
        self._links[b].add(a)

    def kill(self, pid: Pid, reason: Any = "killed") -> None:
        if not self._mark_dead(pid):
            return
        self.exit_reasons[pid] = reason
        proc = self.procs[pid]
        try:
            proc.exited(reason)
        except Exception:  # pragma: no cover - exit hooks must not mask the kill
            log.exception("exit hook of %s failed", proc.name)
        for w in sorted(self._watchers.pop(pid, ())):
            self.cast(w, Down(pid, reason), "down")
        for other in sorted(self._links.pop(pid, ())):
            self._links[other].discard(pid)
            self.kill(other, ("linked", pid))

    def _crashed(self, pid: Pid, exc: BaseException) -> None:
        if self.crash_hook is not None:
            self.crash_hook(pid, exc)
        self.kill(pid, ("crash", repr(exc)))

    def message_count(self, *kinds: str) -> int:
        if not kinds:
            return sum(self.counts.values())
        return sum(self.counts[k] for k in kinds)


class SimScheduler(Scheduler):
    """Deterministic single-threaded scheduler driven by a seed.

    Logical time advances by one per delivered message; timers fire once the
    clock reaches them, and an idle system jumps straight to the next timer.
    """

    def __init__(self, seed: int = 0, strict: bool = False):
        super().__init__()
        self.rng = random.Random(seed)
        self.strict = strict
        self._mail: dict[Pid, deque] = {}
        self._stack: list[Pid] = []
        self._clock = 0
        self._timers: list[tuple[int, int, Pid, Any]] = []
        self._seq = itertools.count()

    def spawn(self, proc: Process) -> Pid:
        pid = self._register(proc)
        self._mail[pid] = deque()
        self._invoke(pid, proc.started)
        return pid

    def is_alive(self, pid: Pid) -> bool:
        return pid in self._mail

    def _mark_dead(self, pid: Pid) -> bool:
        return self._mail.pop(pid, None) is not None

    def current(self) -> Optional[Pid]:
        return self._stack[-1] if self._stack else None

    def now(self) -> int:
        return self._clock

    def cast(self, to: Pid, msg: Any, kind: str = "control") -> None:
        self.counts[kind] += 1
        box = self._mail.get(to)
        if box is not None:
            box.append(msg)

    def call(self, to: Pid, req: Any, kind: str = "control",
             timeout: Optional[float] = None) -> Any:
        self.counts[kind] += 1
        if not self.is_alive(to):
            raise Unreachable(to, self.exit_reasons.get(to, "noproc"))
        if to in self._stack:
            raise CallTimeout(to, "busy")
        proc = self.procs[to]
        try:
            reply = self._invoke(to, proc.handle_call, req)
        except Exception as exc:
            if self.strict and proc.critical:
                raise
            self._crashed(to, exc)
            raise Unreachable(to, ("crash", repr(exc))) from exc
        self.counts[kind] += 1
        return reply

    def send_after(self, delay: float, to: Pid, msg: Any) -> None:
        heapq.heappush(self._timers, (self._clock + int(delay), next(self._seq), to, msg))

    def _invoke(self, pid: Pid, fn: Callable, *args):
        self._stack.append(pid)
        try:
            return fn(*args)
        finally:
            self._stack.pop()

    def _fire_timers(self) -> None:
        while self._timers and self._timers[0][0] <= self._clock:
            _, _, to, msg = heapq.heappop(self._timers)
            self.cast(to, msg, "timer")

    def step(self) -> bool:
        """Deliver one message; False when nothing is left to do."""
        self._fire_timers()
        ready = [pid for pid, box in self._mail.items() if box]
        if not ready:
            if not self._timers:
                return False
            self._clock = max(self._clock, self._timers[0][0])
            return True
        pid = self.rng.choice(sorted(ready))
        msg = self._mail[pid].popleft()
        self._clock += 1
        proc = self.procs[pid]
        try:
            self._invoke(pid, proc.handle, msg)
        except Exception as exc:
            if self.strict and proc.critical:
                raise
            log.debug("%s crashed: %r", proc.name, exc)
            self._crashed(pid, exc)
        return True

    def run(self, max_steps: int = 1_000_000) -> int:
        """Run until idle (pending timers included); return steps taken."""
        n = 0
        while n < max_steps and self.step():
            n += 1
        return n

    def run_until_idle(self, max_steps: int = 1_000_000) -> int:
        """Run until no mailbox holds a message; timers are left pending."""
        n = 0
        while n < max_steps:
            self._fire_timers()
            if not any(self._mail.values()):
                break
            self.step()
            n += 1
        return n

    def advance(self, ticks: int) -> None:
        """Move logical time forward, firing timers due in the window."""
        self._clock += int(ticks)
        self._fire_timers()


class _CallRequest:
    __slots__ = ("req", "future")

    def __init__(self, req: Any):
        self.req = req
        self.future: Future = Future()


_STOP = object()


class LiveScheduler(Scheduler):
    """Multi-threaded scheduler: one daemon thread and mailbox per process."""

    def __init__(self, call_timeout: float = 5.0):
        super().__init__()
        self.call_timeout = call_timeout
        self._queues: dict[Pid, queue.SimpleQueue] = {}
        self._threads: dict[Pid, threading.Thread] = {}
        self._pending: dict[Pid, set[Future]] = defaultdict(set)
        self._lock = threading.RLock()
        self._local = threading.local()
        self._inflight = 0
        self._idle = threading.Condition(self._lock)
        self._t0 = time.monotonic()

    def spawn(self, proc: Process) -> Pid:
        with self._lock:
            pid = self._register(proc)
            self._queues[pid] = queue.SimpleQueue()
        t = threading.Thread(target=self._loop, args=(pid,), name=proc.name, daemon=True)
        self._threads[pid] = t
        prev = getattr(self._local, "pid", None)
        self._local.pid = pid
        try:
            proc.started()
        finally:
            self._local.pid = prev
        t.start()
        return pid

    def is_alive(self, pid: Pid) -> bool:
        return pid in self._queues

    def _mark_dead(self, pid: Pid) -> bool:
        with self._lock:
            q = self._queues.pop(pid, None)
            if q is None:
                return False
            pending = self._pending.pop(pid, set())
        for fut in pending:
            if not fut.done():
                fut.set_exception(Unreachable(pid, "terminated"))
        q.put(_STOP)
        return True

    def current(self) -> Optional[Pid]:
        return getattr(self._local, "pid", None)

    def now(self) -> float:
        return round((time.monotonic() - self._t0) * 1000.0, 3)

    def _put(self, to: Pid, item: Any) -> bool:
        with self._lock:
            q = self._queues.get(to)
            if q is None:
                return False
            self._inflight += 1
            q.put(item)
            return True

    def cast(self, to: Pid, msg: Any, kind: str = "control") -> None:
        with self._lock:
            self.counts[kind] += 1
        self._put(to, msg)

    def call(self, to: Pid, req: Any, kind: str = "control",
             timeout: Optional[float] = None) -> Any:
        with self._lock:
            self.counts[kind] += 1
        if to == self.current():
            raise CallTimeout(to, "self-call")
        item = _CallRequest(req)
        with self._lock:
            if to not in self._queues:
                raise Unreachable(to, self.exit_reasons.get(to, "noproc"))
            self._pending[to].add(item.future)
        self._put(to, item)
        try:
            reply = item.future.result(timeout if timeout is not None else self.call_timeout)
        except FutureTimeout:
            raise CallTimeout(to, "timeout") from None
        finally:
            with self._lock:
                self._pending[to].discard(item.future)
        with self._lock:
            self.counts[kind] += 1
        return reply

    def send_after(self, delay: float, to: Pid, msg: Any) -> None:
        timer = threading.Timer(delay / 1000.0, self.cast, args=(to, msg, "timer"))
        timer.daemon = True
        timer.start()

    def _done_one(self) -> None:
        with self._lock:
            self._inflight -= 1
            if self._inflight == 0:
                self._idle.notify_all()

    def _loop(self, pid: Pid) -> None:
        self._local.pid = pid
        proc = self.procs[pid]
        with self._lock:
            q = self._queues.get(pid)
        while q is not None:
            item = q.get()
            if item is _STOP:
                break
            if not self.is_alive(pid):
                self._discard(pid, item)
                continue
            try:
                if isinstance(item, _CallRequest):
                    try:
                        reply = proc.handle_call(item.req)
                    except Exception as exc:
                        if not item.future.done():
                            item.future.set_exception(Unreachable(pid, ("crash", repr(exc))))
                        self._crashed(pid, exc)
                    else:
                        if not item.future.done():
                            item.future.set_result(reply)
                else:
                    try:
                        proc.handle(item)
                    except Exception as exc:
                        log.debug("%s crashed: %r", proc.name, exc)
                        self._crashed(pid, exc)
            finally:
                self._done_one()
        # Drain anything that raced in after the stop marker.
        while q is not None:
            try:
                item = q.get_nowait()
            except queue.Empty:
                break
            if item is not _STOP:
                self._discard(pid, item)

    def _discard(self, pid: Pid, item: Any) -> None:
        if isinstance(item, _CallRequest) and not item.future.done():
            item.future.set_exception(Unreachable(pid, "terminated"))
        self._done_one()

    def wait_idle(self, timeout: float = 10.0) -> bool:
        """Block until no message is queued or being handled."""
        deadline = time.monotonic() + timeout
        with self._idle:
            while self._inflight > 0:
                left = deadline - time.monotonic()
                if left <= 0:
                    return False
                self._idle.wait(left)
        return True

    def shutdown(self) -> None:
        for pid in list(self._queues):
            self.kill(pid, "shutdown")
