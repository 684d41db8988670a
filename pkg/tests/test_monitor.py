"""Monitor generation, stepping, reachability and DOT export."""

from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import (
    alphabet,
    corpus_modules,
    corpus_source,
    interpreter_language,
    monitor_language,
    path_roles,
)
from sessmon.monitor import (
    CommEvent,
    MonitorFsm,
    MonitorGenerationError,
    MonitorState,
    Violation,
    compute_reachability,
    dump,
    expected,
    export_dot,
    generate_monitor,
    initial_state,
    involved,
    involved_roles,
    is_terminal,
    step,
)
from sessmon.projection import (
    InternalChoice,
    LocalContinue,
    LocalEnd,
    LocalRec,
    Send,
    project,
    size,
)
from sessmon.protocol import load_module

CORPUS = [(name, proto.name, role) for name, module in corpus_modules().items()
          for proto in module for role in proto.roles]


def _monitor(name, proto, role):
    module = corpus_modules()[name] if name.endswith(".scr") else load_module(name)
    local = project(module[proto], role, module)
    return local, generate_monitor(local)


@pytest.fixture(scope="module")
def registry_fsm():
    return _monitor("chat.scr", "ChatServer", "RoomRegistry")[1]


@pytest.fixture(scope="module")
def session_fsm():
    return _monitor("chat.scr", "ChatSession", "ClientThread")[1]


@pytest.fixture(scope="module")
def buyer2_fsm():
    return _monitor("twobuyer.scr", "TwoBuyer", "B")[1]


def recv(sender, label, sorts=()):
    return CommEvent.receive(sender, label, sorts)


def send(to, label, sorts=()):
    return CommEvent.send([to] if isinstance(to, str) else to, label, sorts)


class TestGeneration:
    def test_single_send(self):
        fsm = generate_monitor(Send(frozenset({"B"}), "x", ()))
        assert len(fsm.states) == 2
        assert len(fsm.transitions) == 1
        assert fsm.terminals == {fsm.transitions[0].target}

    def test_room_registry_hub(self, registry_fsm):
        hub = registry_fsm.initial
        out = registry_fsm.outgoing(hub)
        assert sorted(t.label for t in out) == ["createRoom", "listRooms", "lookupRoom"]
        assert all(t.direction == "receive" and t.peers == {"ClientThread"} for t in out)
        replies = {t.label for t in registry_fsm.transitions if t.direction == "send"}
        assert replies == {"roomPID", "roomNotFound", "createRoomSuccess", "roomExists",
                           "roomList"}
        for t in registry_fsm.transitions:
            if t.direction == "send":
                assert t.target == hub

    def test_chat_session_par_state(self, session_fsm):
        kids = session_fsm.children[session_fsm.initial]
        assert len(kids) == 2
        assert {t.label for t in kids[0].transitions} == {"outgoingChatMessage", "leaveRoom"}
        assert {t.label for t in kids[1].transitions} == {"incomingChatMessage"}
        assert session_fsm.transitions == ()

    def test_nondeterministic_local_type(self):
        twin = InternalChoice((Send(frozenset({"B"}), "x", ()),
                               Send(frozenset({"B"}), "x", ("Int",))))
        with pytest.raises(MonitorGenerationError):
            generate_monitor(twin)

    def test_unguarded_continue(self):
        with pytest.raises(MonitorGenerationError):
            generate_monitor(LocalRec("L", LocalContinue("L")))

    def test_end_only(self):
        fsm = generate_monitor(LocalEnd())
        assert fsm.states == {0} and fsm.terminals == {0} and fsm.transitions == ()

    def test_recursion_is_a_back_edge(self):
        fsm = _monitor("pingpong.scr", "PingPong", "A")[1]
        assert dump(fsm) == ("initial 0; terminals []\n"
                             "0 -> 1 !ping@B\n"
                             "1 -> 0 ?pong@B\n")

    def test_two_buyer_dump(self, buyer2_fsm):
        assert dump(buyer2_fsm) == ("initial 0; terminals [4]\n"
                                    "0 -> 1 ?quote@C\n"
                                    "1 -> 2 ?share@A\n"
                                    "2 -> 3 !accept@A,C\n"
                                    "2 -> 4 !reject@A,C\n"
                                    "3 -> 4 ?date@C\n")

    def test_initiates_transitions(self):
        fsm = _monitor("chat_logged.scr", "ChatServer", "ClientThread")[1]
        init = [t for t in fsm.transitions if t.direction == "initiate"]
        assert len(init) == 1
        assert init[0].label == "ChatSession"
        assert init[0].sorts == ("ClientThread->ClientThread", "new ChatRoom")
        outcomes = sorted(t.label for t in fsm.outgoing(init[0].target))
        assert outcomes == ["$subsession_fail:Kicked",
                            "$subsession_fail:ParticipantOffline", "$subsession_ok"]


def _machines(fsm):
    yield fsm
    yield from fsm.nested()


class TestStructure:
    @pytest.mark.parametrize("name,proto,role", CORPUS)
    def test_well_formed(self, name, proto, role):
        for fsm in _machines(_monitor(name, proto, role)[1]):
            assert fsm.initial in fsm.states
            assert fsm.terminals <= fsm.states
            for t in fsm.transitions:
                assert t.source in fsm.states and t.target in fsm.states
                if t.direction == "receive":
                    assert len(t.peers) == 1
            for s in fsm.states:
                keys = [(t.direction, t.peers, t.label) for t in fsm.outgoing(s)]
                assert len(keys) == len(set(keys))

    @pytest.mark.parametrize("name,proto,role", CORPUS)
    def test_size_is_linear(self, name, proto, role):
        local, fsm = _monitor(name, proto, role)
        total = sum(len(m.states) for m in _machines(fsm))
        assert total <= 2 * size(local)


class TestStep:
    def test_lookup_room_then_reply(self, registry_fsm):
        st = step(registry_fsm, initial_state(registry_fsm),
                  recv("ClientThread", "lookupRoom", ["RoomName"]))
        assert isinstance(st, MonitorState)
        assert sorted(t.label for t in expected(registry_fsm, st)) == ["roomNotFound",
                                                                        "roomPID"]
        assert all(t.direction == "send" for t in expected(registry_fsm, st))

    def test_room_list_at_hub_is_a_violation(self, registry_fsm):
        v = step(registry_fsm, initial_state(registry_fsm),
                 recv("ClientThread", "roomList", ["StringList"]))
        assert isinstance(v, Violation)
        assert len(v.expected) == 3
        assert all(t.direction == "receive" for t in v.expected)
        assert "expected" in str(v)

    def test_par_session(self, session_fsm):
        st = initial_state(session_fsm)
        for ev in (send("ChatRoom", "outgoingChatMessage", ["Msg"]),
                   recv("ChatRoom", "incomingChatMessage", ["Msg"]),
                   send("ChatRoom", "leaveRoom")):
            st = step(session_fsm, st, ev)
            assert isinstance(st, MonitorState)
        kids = session_fsm.children[session_fsm.initial]
        assert is_terminal(kids[0], st.children[0])
        assert not is_terminal(kids[1], st.children[1])
        assert isinstance(step(session_fsm, st, send("ChatRoom", "leaveRoom")), Violation)

    def test_multicast_needs_the_full_recipient_set(self):
        fsm = _monitor("multicast.scr", "Multicast", "A")[1]
        st = initial_state(fsm)
        assert isinstance(step(fsm, st, send(["B"], "X")), Violation)
        assert isinstance(step(fsm, st, send(["B", "C"], "X")), MonitorState)

    def test_arity_and_sort_names(self, registry_fsm):
        st = initial_state(registry_fsm)
        assert isinstance(step(registry_fsm, st, recv("ClientThread", "lookupRoom")), Violation)
        assert isinstance(step(registry_fsm, st, recv("ClientThread", "lookupRoom", ["Int"])),
                          Violation)
        assert isinstance(step(registry_fsm, st, recv("ClientThread", "lookupRoom", [None])),
                          MonitorState)

    def test_par_completion_is_eager(self):
        module = load_module("global protocol P(role A, role B) { par { x() from A to B; } "
                             "and { y() from B to A; } z() from A to B; }")
        fsm = generate_monitor(project(module["P"], "A", module))
        st = step(fsm, initial_state(fsm), send("B", "x"))
        st = step(fsm, st, recv("B", "y"))
        assert isinstance(st, MonitorState)
        assert st.children == ()
        assert [t.label for t in expected(fsm, st)] == ["z"]

    def test_malformed_state(self, session_fsm):
        with pytest.raises(ValueError):
            step(session_fsm, MonitorState(session_fsm.initial), send("ChatRoom", "leaveRoom"))
        with pytest.raises(ValueError):
            step(session_fsm, MonitorState(99), send("ChatRoom", "leaveRoom"))

    @settings(max_examples=200, deadline=None)
    @given(st.sampled_from(CORPUS), st.lists(st.integers(0, 1000), max_size=10))
    def test_totality(self, case, picks):
        local, fsm = _monitor(*case)
        events = alphabet(local)
        state = initial_state(fsm)
        for pick in picks:
            res = step(fsm, state, events[pick % len(events)])
            assert isinstance(res, MonitorState) != isinstance(res, Violation)
            if isinstance(res, MonitorState):
                state = res


class TestLanguage:
    @pytest.mark.parametrize("name,proto,role", CORPUS)
    def test_equivalent_to_interpreter(self, name, proto, role):
        local, fsm = _monitor(name, proto, role)
        events = alphabet(local)
        assert monitor_language(fsm, events, 8) == interpreter_language(local, events, 8)


def _tables(fsm: MonitorFsm, table):
    yield fsm, table
    for s, kids in fsm.children.items():
        for kid, kt in zip(kids, table.children[s]):
            yield from _tables(kid, kt)


class TestReachability:
    def test_two_buyer_table(self, buyer2_fsm):
        assert compute_reachability(buyer2_fsm).as_dict() == {
            0: ["A", "C"], 1: ["A", "C"], 2: ["A", "C"], 3: ["C"], 4: []}

    def test_single_state(self):
        assert compute_reachability(generate_monitor(LocalEnd())).as_dict() == {0: []}

    def test_room_registry(self, registry_fsm):
        table = compute_reachability(registry_fsm).as_dict()
        for s in registry_fsm.states - registry_fsm.terminals:
            assert table[s] == ["ClientThread"]

    @pytest.mark.parametrize("name,proto,role", CORPUS)
    def test_matches_path_search(self, name, proto, role):
        fsm = _monitor(name, proto, role)[1]
        for machine, table in _tables(fsm, compute_reachability(fsm)):
            for s in machine.states:
                assert table.roles[s] == path_roles(machine, s), (machine, s)

    def test_involved_two_buyer(self, buyer2_fsm):
        table = compute_reachability(buyer2_fsm)
        assert involved(table, MonitorState(3), "A") is False
        assert involved(table, MonitorState(3), "C") is True
        assert involved(table, MonitorState(0), "A") is True

    @pytest.mark.parametrize("name,proto,role", CORPUS)
    def test_terminal_states_involve_no_one(self, name, proto, role):
        fsm = _monitor(name, proto, role)[1]
        table = compute_reachability(fsm)
        roles = table.all_roles() | {"Stranger"}
        for s in fsm.terminals:
            if not fsm.children.get(s):
                assert not any(involved(table, MonitorState(s), r) for r in roles)

    def test_nested_involvement_follows_child_states(self, session_fsm):
        table = compute_reachability(session_fsm)
        st = initial_state(session_fsm)
        assert involved_roles(table, st) == {"ChatRoom"}
        st = step(session_fsm, st, send("ChatRoom", "leaveRoom"))
        assert involved(table, st, "ChatRoom")


class TestDot:
    def test_single_send(self):
        dot = export_dot(generate_monitor(Send(frozenset({"B"}), "x", ())))
        assert dot.startswith("digraph")
        assert dot.count("->") == 1
        assert 'label="!x@B"' in dot

    def test_hub_has_three_receive_edges(self, registry_fsm):
        dot = export_dot(registry_fsm, "ChatServer_RoomRegistry")
        hub = f"s{registry_fsm.initial} ->"
        receives = [line for line in dot.splitlines()
                    if line.strip().startswith(hub) and 'label="?' in line]
        assert len(receives) == 3

    def test_par_has_two_clusters(self, session_fsm):
        dot = export_dot(session_fsm)
        assert dot.count("subgraph cluster_") == 2

    def test_quotes_are_escaped(self):
        dot = export_dot(generate_monitor(LocalEnd()), 'we"ird')
        assert 'digraph "we\\"ird"' in dot


def test_two_buyer_source_roles():
    assert load_module(corpus_source("twobuyer.scr"))["TwoBuyer"].roles == ("A", "B", "C")
