"""The two schedulers: casts, calls, failures, timers and determinism."""

from __future__ import annotations

import pytest

from sessmon.actors import (
    CallTimeout,
    Down,
    LiveScheduler,
    Process,
    SimScheduler,
    Unreachable,
)


class Recorder(Process):
    def __init__(self, log):
        self.log = log

    def handle(self, msg):
        if msg == "boom":
            raise RuntimeError("boom")
        self.log.append((self.pid, msg))

    def handle_call(self, req):
        if req == "boom":
            raise RuntimeError("boom")
        return ("echo", req)


class Caller(Process):
    """Calls ``target`` on every cast; records the reply or the error."""

    def __init__(self, target, log):
        self.target = target
        self.log = log

    def handle(self, msg):
        try:
            self.log.append(self.sched.call(self.target, msg))
        except Unreachable as exc:
            self.log.append(type(exc).__name__)

    def handle_call(self, req):
        return self.sched.call(self.target, req)


class TestSimScheduler:
    def test_cast_and_run(self):
        log = []
        s = SimScheduler(1)
        a = s.spawn(Recorder(log))
        s.cast(a, "x")
        s.cast(a, "y")
        assert s.run() == 2
        assert log == [(a, "x"), (a, "y")]
        assert s.now() == 2

    def test_call_counts_request_and_reply(self):
        s = SimScheduler()
        a = s.spawn(Recorder([]))
        assert s.call(a, "hi", "check") == ("echo", "hi")
        assert s.counts["check"] == 2

    def test_call_to_dead_process(self):
        s = SimScheduler()
        a = s.spawn(Recorder([]))
        s.kill(a, "gone")
        with pytest.raises(Unreachable) as info:
            s.call(a, "hi")
        assert info.value.reason == "gone"

    def test_call_into_busy_process_times_out(self):
        log = []
        s = SimScheduler()
        holder = {}

        class Back(Process):
            def handle_call(self, req):
                try:
                    return self.sched.call(holder["a"], req)
                except CallTimeout as exc:
                    return f"timeout: {exc.reason}"

        b = s.spawn(Back())
        a = s.spawn(Caller(b, log))
        holder["a"] = a
        s.cast(a, "ping")
        s.run()
        assert log == ["timeout: busy"]
        assert s.is_alive(a)
        assert issubclass(CallTimeout, Unreachable)

    def test_crash_in_call_kills_callee(self):
        log = []
        s = SimScheduler()
        a = s.spawn(Recorder([]))
        c = s.spawn(Caller(a, log))
        s.cast(c, "boom")
        s.run()
        assert log == ["Unreachable"]
        assert not s.is_alive(a)

    def test_watch_and_link(self):
        log = []
        s = SimScheduler()
        w = s.spawn(Recorder(log))
        a = s.spawn(Recorder([]))
        b = s.spawn(Recorder([]))
        s.watch(w, a)
        s.link(a, b)
        s.kill(a)
        s.run()
        assert not s.is_alive(b)
        assert s.exit_reasons[b] == ("linked", a)
        assert log == [(w, Down(a, "killed"))]

    def test_watch_dead_process_notifies_at_once(self):
        log = []
        s = SimScheduler()
        w = s.spawn(Recorder(log))
        a = s.spawn(Recorder([]))
        s.kill(a, "bye")
        s.watch(w, a)
        s.run()
        assert log == [(w, Down(a, "bye"))]

    def test_two_deaths_two_notifications_in_order(self):
        log = []
        s = SimScheduler(3)
        w = s.spawn(Recorder(log))
        a = s.spawn(Recorder([]))
        b = s.spawn(Recorder([]))
        s.watch(w, a)
        s.watch(w, b)
        s.kill(b)
        s.kill(a)
        s.run()
        assert [m.pid for _, m in log] == [b, a]

    def test_crash_hook_and_strict_mode(self):
        seen = []
        s = SimScheduler()
        s.crash_hook = lambda pid, exc: seen.append((pid, str(exc)))
        a = s.spawn(Recorder([]))
        s.cast(a, "boom")
        s.run()
        assert seen == [(a, "boom")]
        strict = SimScheduler(strict=True)
        b = strict.spawn(Recorder([]))
        strict.cast(b, "boom")
        with pytest.raises(RuntimeError):
            strict.run()

    def test_timers(self):
        log = []
        s = SimScheduler()
        a = s.spawn(Recorder(log))
        s.send_after(10, a, "late")
        s.run_until_idle()
        assert log == []
        s.advance(10)
        s.run_until_idle()
        assert log == [(a, "late")]
        s.send_after(5, a, "idle-jump")
        s.run()
        assert log[-1] == (a, "idle-jump")

    @pytest.mark.parametrize("seed", [0, 7, 42])
    def test_seed_fixes_interleaving(self, seed):
        def run():
            log = []
            s = SimScheduler(seed)
            pids = [s.spawn(Recorder(log)) for _ in range(4)]
            for i in range(20):
                s.cast(pids[i % 4], i)
            s.run()
            return log

        assert run() == run()

    def test_different_seeds_interleave_differently(self):
        def run(seed):
            log = []
            s = SimScheduler(seed)
            pids = [s.spawn(Recorder(log)) for _ in range(4)]
            for i in range(20):
                s.cast(pids[i % 4], i)
            s.run()
            return log

        assert len({tuple(run(seed)) for seed in range(6)}) > 1

    def test_message_count(self):
        s = SimScheduler()
        a = s.spawn(Recorder([]))
        s.cast(a, 1, "x")
        s.cast(a, 2, "y")
        assert s.message_count() == 2
        assert s.message_count("x") == 1


class TestLiveScheduler:
    def test_cast_call_and_idle(self):
        log = []
        s = LiveScheduler(call_timeout=2.0)
        try:
            a = s.spawn(Recorder(log))
            for i in range(5):
                s.cast(a, i)
            assert s.call(a, "q") == ("echo", "q")
            assert s.wait_idle(2.0)
            assert [m for _, m in log] == [0, 1, 2, 3, 4]
        finally:
            s.shutdown()

    def test_call_to_dead(self):
        s = LiveScheduler(call_timeout=1.0)
        try:
            a = s.spawn(Recorder([]))
            s.kill(a)
            with pytest.raises(Unreachable):
                s.call(a, "x")
        finally:
            s.shutdown()

    def test_crash_during_call(self):
        s = LiveScheduler(call_timeout=1.0)
        try:
            a = s.spawn(Recorder([]))
            with pytest.raises(Unreachable):
                s.call(a, "boom")
            assert s.wait_idle(1.0)
            assert not s.is_alive(a)
        finally:
            s.shutdown()

    def test_watch(self):
        log = []
        s = LiveScheduler()
        try:
            w = s.spawn(Recorder(log))
            a = s.spawn(Recorder([]))
            s.watch(w, a)
            s.kill(a, "x")
            assert s.wait_idle(2.0)
            assert log == [(w, Down(a, "x"))]
        finally:
            s.shutdown()
