"""PingPong overhead benchmark.

Variants:

* ``full``: monitored send with synchronous local and remote checks.
* ``noSyncErrors``: the same checks, but as casts, so errors are not
  reported back to the sender.
* ``noMonitoring``: monitor processes still route messages, but check nothing.
* ``unmonitored``: two bare processes casting to each other.

Timing starts once the session is established. Message counts come from the
scheduler's per-kind counters, restricted to the kinds that carry session
traffic.
"""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass
from importlib.resources import files
from typing import Optional

from ..actors import LiveScheduler, Process, Scheduler, SimScheduler
from ..runtime import SessionActor, become, end_conversation, register_conversation, send
from ..runtime import start_conversation, system_start

VARIANTS = ("full", "noSyncErrors", "noMonitoring", "unmonitored")
MONITORING = {"full": "full", "noSyncErrors": "async", "noMonitoring": "off"}
TRAFFIC_KINDS = ("check", "queue", "commit", "deliver", "route", "forward", "plain")
CHECK_KINDS = ("check", "queue")


@dataclass(frozen=True)
class BenchReport:
    variant: str
    iterations: int
    mean_per_iteration_ms: float
    messages_per_iteration: float
    check_messages: int
    scheduler: str

    def record(self) -> str:
        return (f"bench variant={self.variant} scheduler={self.scheduler} "
                f"iters={self.iterations} mean_ms={self.mean_per_iteration_ms:.6f} "
                f"msgs_per_iter={self.messages_per_iteration:g} "
                f"check_msgs={self.check_messages}")


def format_table(reports: list[BenchReport]) -> str:
    head = f"{'variant':<14}{'sched':<7}{'iters':>8}{'ms/iter':>12}{'msgs/iter':>11}{'checks':>9}"
    rows = [f"{r.variant:<14}{r.scheduler:<7}{r.iterations:>8}"
            f"{r.mean_per_iteration_ms:>12.4f}{r.messages_per_iteration:>11g}"
            f"{r.check_messages:>9}" for r in reports]
    return "\n".join([head, "-" * len(head), *rows])


class _Done:
    def __init__(self) -> None:
        self.event = threading.Event()
        self.finished_at: Optional[float] = None

    def set(self) -> None:
        self.finished_at = time.perf_counter()
        self.event.set()


class Pinger(SessionActor):
    def __init__(self, iterations: int, done: _Done):
        self.iterations = iterations
        self.done = done

    def on_init(self, args, init_key):
        start_conversation(init_key, "PingPong", "A")
        return {"key": init_key, "n": 0}

    def on_established(self, protocol, role, sid, conv_key, st):
        register_conversation(conv_key, "pingpong")
        return st

    def on_info(self, message, st):
        become(st["key"], "pingpong", "A", "go", [])
        return st

    def on_become(self, protocol, role, op, args, conv_key, st):
        send(conv_key, ["B"], "ping")
        return st

    def on_message(self, protocol, role, sid, sender, label, payload, st, conv_key):
        st["n"] += 1
        if st["n"] < self.iterations:
            send(conv_key, ["B"], "ping")
        else:
            self.done.set()
            end_conversation(conv_key, "done")
        return st


class Ponger(SessionActor):
    def on_message(self, protocol, role, sid, sender, label, payload, st, conv_key):
        send(conv_key, ["A"], "pong")
        return st


class _PlainPinger(Process):
    critical = False

    def __init__(self, iterations: int, done: _Done):
        self.iterations = iterations
        self.done = done
        self.peer = -1
        self.n = 0

    def handle(self, msg) -> None:
        if msg == "go" or msg == "pong":
            if msg == "pong":
                self.n += 1
                if self.n >= self.iterations:
                    self.done.set()
                    return
            self.sched.cast(self.peer, ("ping", self.pid), "plain")


class _PlainPonger(Process):
    critical = False

    def handle(self, msg) -> None:
        _, sender = msg
        self.sched.cast(sender, "pong", "plain")


def _make_scheduler(scheduler: str, seed: int) -> Scheduler:
    if scheduler == "sim":
        return SimScheduler(seed)
    if scheduler == "live":
        return LiveScheduler()
    raise ValueError(f"unknown scheduler {scheduler!r}")


def _wait(sched: Scheduler, done: _Done, timeout: float) -> None:
    if isinstance(sched, SimScheduler):
        while not done.event.is_set() and sched.step():
            pass
    elif not done.event.wait(timeout):
        raise TimeoutError("benchmark did not finish in time")


def bench_pingpong(variant: str, iterations: int, scheduler: str = "live", seed: int = 0,
                   timeout: float = 300.0) -> BenchReport:
    """Run ``iterations`` ping/pong rounds and report time and message counts."""
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}")
    if iterations <= 0:
        raise ValueError("iterations must be positive")
    sched = _make_scheduler(scheduler, seed)
    done = _Done()
    try:
        if variant == "unmonitored":
            pinger = _PlainPinger(iterations, done)
            pinger.peer = sched.spawn(_PlainPonger())
            a = sched.spawn(pinger)
            before = sched.counts.copy()
            start = time.perf_counter()
            sched.cast(a, "go", "input")
        else:
            src = files("sessmon.corpus").joinpath("pingpong.scr").read_text()
            rt = system_start(src, "pinger PingPong A\nponger PingPong B\n",
                              behaviors={"pinger": Pinger(iterations, done), "ponger": Ponger},
                              scheduler=sched, monitoring=MONITORING[variant])
            rt.spawn_actor("ponger")
            a = rt.spawn_actor("pinger")
            if isinstance(sched, SimScheduler):
                sched.run()
            elif not sched.wait_idle(timeout):
                raise TimeoutError("session setup did not finish")
            if not rt.trace.select(kind="established"):
                raise RuntimeError("PingPong session was not established")
            before = sched.counts.copy()
            start = time.perf_counter()
            rt.inject(a, "go")
        _wait(sched, done, timeout)
        elapsed = (done.finished_at or time.perf_counter()) - start
        diff = sched.counts - before
    finally:
        if isinstance(sched, LiveScheduler):
            sched.shutdown()
    traffic = sum(diff[k] for k in TRAFFIC_KINDS)
    return BenchReport(variant, iterations, elapsed * 1000.0 / iterations,
                       traffic / iterations, sum(diff[k] for k in CHECK_KINDS), scheduler)
