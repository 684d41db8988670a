"""Applications, scenarios, the benchmark, random runs and the command line."""

from __future__ import annotations

import pytest

from sessmon.harness import chat, dns
from sessmon.harness.bench import bench_pingpong, format_table
from sessmon.harness.cli import main
from sessmon.harness.randomchat import check_lifecycle, random_chat_run
from sessmon.harness.scenario import (
    ScenarioError,
    corpus_scenarios,
    load_scenario,
    parse_scenario,
    run_scenario,
)
from sessmon.trace import TraceRecord


class TestScenarios:
    @pytest.mark.parametrize("path", corpus_scenarios(), ids=lambda p: p.stem)
    def test_corpus_scenario_passes(self, path):
        result = run_scenario(load_scenario(path))
        assert result.failures == []
        assert result.ok

    def test_ten_scenarios_shipped(self):
        assert len(corpus_scenarios()) == 10

    def test_failed_expectation_is_reported(self):
        scn = parse_scenario("name t\napp chat\nspawn mgr mse_chat_room_manager\nrun\n"
                             "expect kind=on_message label=nothingLikeThis\n")
        result = run_scenario(scn)
        assert not result.ok
        assert "line 5" in result.failures[0]

    def test_unknown_verb(self):
        with pytest.raises(ScenarioError):
            parse_scenario("name t\napp chat\njump around\n")

    def test_unknown_app(self):
        with pytest.raises(ScenarioError):
            parse_scenario("name t\napp mail\n")

    def test_same_seed_same_trace(self):
        path = next(p for p in corpus_scenarios() if p.stem == "chat_happy")
        first = run_scenario(load_scenario(path), seed=5).trace_text
        second = run_scenario(load_scenario(path), seed=5).trace_text
        assert first == second


class TestApps:
    def test_chat_round_trip(self):
        rt = chat.start(seed=1)
        rt.spawn_actor("mse_chat_room_manager")
        rt.spawn_actor("mse_chat_logger")
        alice = rt.spawn_actor("mse_chat_client", ["alice"])
        bob = rt.spawn_actor("mse_chat_client", ["bob"])
        for pid, cmd in ((alice, "CREATE:lobby"), (alice, "JOIN:lobby"),
                         (bob, "JOIN:lobby"), (alice, "CHAT:hi")):
            rt.inject(pid, cmd)
            rt.run()
        said = [r for r in rt.trace.select(kind="on_message") if r.label == "incomingChatMessage"]
        assert said
        assert not rt.trace.select(kind="violation")

    def test_parse_command(self):
        assert chat.parse_command("JOIN:lobby") == ("JOIN", "lobby")
        assert chat.parse_command("LIST") == ("LIST", "")

    def test_nearest_zone(self):
        assert dns.nearest_zone("www.example.com", ["com", "example.com"]) == "example.com"
        assert dns.nearest_zone("nothing.org", ["com"]) is None


class TestBench:
    @pytest.mark.parametrize("variant,per_iter,checks", [
        ("full", 12, 8), ("noSyncErrors", 8, 4), ("noMonitoring", 6, 0), ("unmonitored", 2, 0)])
    def test_message_counts_under_sim(self, variant, per_iter, checks):
        report = bench_pingpong(variant, 4, scheduler="sim")
        assert report.messages_per_iteration == per_iter
        assert report.check_messages == checks * 4

    def test_bad_arguments(self):
        with pytest.raises(ValueError):
            bench_pingpong("fastest", 1, scheduler="sim")
        with pytest.raises(ValueError):
            bench_pingpong("full", 0, scheduler="sim")

    def test_table(self):
        table = format_table([bench_pingpong("unmonitored", 2, scheduler="sim")])
        assert table.splitlines()[0].startswith("variant")
        assert "unmonitored" in table


class TestRandomChat:
    @pytest.mark.parametrize("seed", range(5))
    def test_lifecycle_holds(self, seed):
        run = random_chat_run(seed)
        assert run.lifecycle.ok, run.lifecycle.violations

    def test_replay_is_identical(self):
        assert random_chat_run(3).runtime.trace.text() == random_chat_run(3).runtime.trace.text()

    def test_checker_flags_missing_end(self):
        recs = [TraceRecord(0, 1, "on_join", "R@4"), TraceRecord(1, 1, "on_established", "R@4")]
        report = check_lifecycle(recs)
        assert not report.ok
        assert report.violations == ["session 1 R@4: JE"]


class TestCli:
    def test_validate_ok(self, capsys):
        assert main(["validate", "chat.scr"]) == 0
        assert "ok" in capsys.readouterr().out

    def test_validate_bad_file(self, tmp_path, capsys):
        bad = tmp_path / "bad.scr"
        bad.write_text("global protocol P(role A, role B) { x() from A to C; }")
        assert main(["validate", str(bad)]) == 1
        assert "C" in capsys.readouterr().err

    def test_missing_file(self):
        assert main(["parse", "no_such_file.scr"]) == 2

    def test_parse_prints_module(self, capsys):
        assert main(["parse", "pingpong.scr"]) == 0
        assert "global protocol PingPong" in capsys.readouterr().out

    def test_project(self, capsys):
        assert main(["project", "twobuyer.scr", "--protocol", "TwoBuyer", "--role", "B"]) == 0
        assert "quote" in capsys.readouterr().out

    def test_project_unknown_role(self):
        assert main(["project", "chat.scr", "--protocol", "ChatServer",
                     "--role", "NoSuchRole"]) != 0

    def test_project_unknown_protocol(self):
        assert main(["project", "chat.scr", "--protocol", "Nope", "--role", "A"]) != 0

    def test_monitor_reach_and_dot(self, tmp_path, capsys):
        out = tmp_path / "b.dot"
        assert main(["monitor", "twobuyer.scr", "--protocol", "TwoBuyer", "--role", "B",
                     "--reach", "--dot", str(out)]) == 0
        text = capsys.readouterr().out
        assert "reach 0: [A, C]" in text and "reach 4: []" in text
        assert out.read_text().startswith("digraph")

    def test_monitor_dot_hub(self, tmp_path):
        out = tmp_path / "c.dot"
        assert main(["monitor", "chat.scr", "--protocol", "ChatServer", "--role",
                     "RoomRegistry", "--dot", str(out)]) == 0
        receives = [line for line in out.read_text().splitlines()
                    if "->" in line and "?" in line and line.strip().startswith("s0 ")]
        assert len(receives) == 3

    def test_simulate(self, capsys):
        assert main(["simulate", "chat_happy.scn"]) == 0
        captured = capsys.readouterr()
        assert captured.out
        assert "ok" in captured.err

    def test_simulate_trace_file(self, tmp_path):
        out = tmp_path / "t.log"
        assert main(["simulate", "dns_known.scn", "--seed", "2", "--trace", str(out)]) == 0
        assert out.read_text()

    def test_bench(self, capsys):
        assert main(["bench", "pingpong", "--variant", "full", "--iters", "3",
                     "--scheduler", "sim"]) == 0
        assert "bench variant=full" in capsys.readouterr().out

    def test_usage_error(self):
        with pytest.raises(SystemExit):
            main(["frobnicate"])
