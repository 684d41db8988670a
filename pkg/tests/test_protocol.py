"""Parsing, validation and printing of global protocols."""

from __future__ import annotations

import re

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import CORPUS_FILES, corpus_source
from sessmon.protocol import (
    Choice,
    End,
    Initiates,
    Interaction,
    Par,
    ProtocolError,
    ProtocolModule,
    Rec,
    errors,
    format_module,
    format_protocol,
    load_module,
    parse_module,
    roles_of,
    tokenize,
    validate,
)
from strategies import global_bodies, global_protocols


def _messages(diags):
    return [d.message for d in diags]


class TestParse:
    def test_chat_server_shape(self):
        module = parse_module(corpus_source("chat.scr"))
        assert [p.name for p in module] == ["ChatServer", "ChatSession"]
        server = module["ChatServer"]
        assert roles_of(server) == ["ClientThread", "RoomRegistry"]
        assert isinstance(server.body, Rec)
        assert isinstance(server.body.body, Choice)
        assert server.body.body.at == "ClientThread"
        assert len(server.body.body.branches) == 3

    def test_empty_body(self):
        module = parse_module("global protocol P(role A, role B) { }")
        assert module["P"].body == End()

    def test_multicast_receivers(self):
        module = parse_module(corpus_source("multicast.scr"))
        first = module["Multicast"].body
        assert isinstance(first, Interaction)
        assert first.receivers == ("B", "C")
        assert first.sorts == ()

    def test_initiates_blockless_and_with_handlers(self):
        module = parse_module(corpus_source("chat_logged.scr"))
        found = [n for n in _walk(module["ChatServer"].body) if isinstance(n, Initiates)]
        assert len(found) == 1
        node = found[0]
        assert node.child == "ChatSession"
        assert node.internal_args == ("ClientThread",)
        assert node.external_roles == ("ChatRoom",)
        assert node.failure_names == ("Kicked", "ParticipantOffline")
        plain = [n for n in _walk(parse_module(corpus_source("chat.scr"))["ChatServer"].body)
                 if isinstance(n, Initiates)]
        assert plain[0].has_block is False

    def test_par_blocks(self):
        module = parse_module(corpus_source("chat.scr"))
        body = module["ChatSession"].body
        assert isinstance(body, Par) and len(body.blocks) == 2

    def test_syntax_error_has_location(self):
        with pytest.raises(ProtocolError) as info:
            parse_module("global protocol P(role A, role B) { x( from A to B; }")
        diag = info.value.diagnostics[0]
        assert (diag.line, diag.column) == (1, 40)
        assert diag.severity == "error"

    def test_comments_are_skipped(self):
        toks = tokenize("// a comment\nglobal /* block */ protocol")
        assert [t.text for t in toks if t.kind != "eof"] == ["global", "protocol"]

    def test_duplicate_protocol_rejected(self):
        src = "global protocol P(role A) { }\nglobal protocol P(role A) { }"
        with pytest.raises(ProtocolError):
            parse_module(src)


def _walk(body):
    stack = [body]
    while stack:
        node = stack.pop()
        yield node
        for attr in ("cont", "body", "success"):
            if hasattr(node, attr):
                stack.append(getattr(node, attr))
        for attr in ("branches", "blocks"):
            stack.extend(getattr(node, attr, ()))
        for _, h in getattr(node, "handlers", ()):
            stack.append(h)


class TestValidate:
    @pytest.mark.parametrize("name", CORPUS_FILES)
    def test_corpus_is_well_formed(self, name):
        assert errors(validate(parse_module(corpus_source(name)))) == []

    def test_self_send(self):
        diags = validate(parse_module("global protocol P(role A) { x() from A to A; }"))
        assert any("sender equals receiver" in m for m in _messages(errors(diags)))

    def test_ambiguous_choice(self):
        src = ("global protocol P(role A, role B) { choice at A { x() from A to B; } "
               "or { x() from A to B; } }")
        assert any("ambiguous choice" in m for m in _messages(errors(validate(
            parse_module(src)))))

    def test_unbound_recursion_label(self):
        with pytest.raises(ProtocolError) as info:
            parse_module("global protocol P(role A, role B) { x() from A to B; continue L; }")
        assert "unbound recursion label" in str(info.value.diagnostics[0])

    def test_choice_led_by_other_role(self):
        src = ("global protocol P(role A, role B) { choice at A { x() from B to A; } "
               "or { y() from A to B; } }")
        assert errors(validate(parse_module(src)))

    def test_undeclared_role(self):
        src = "global protocol P(role A, role B) { x() from A to Z; }"
        assert errors(validate(parse_module(src)))

    def test_initiates_unknown_protocol(self):
        src = "global protocol P(role A, role B) { A initiates Q(A, new B); }"
        assert errors(validate(parse_module(src)))

    def test_load_module_raises_on_errors(self):
        with pytest.raises(ProtocolError):
            load_module("global protocol P(role A) { x() from A to A; }")

    def test_unused_role_is_only_a_warning(self):
        diags = validate(parse_module("global protocol P(role A, role B) { }"))
        assert diags and not errors(diags)

    @pytest.mark.parametrize("name", CORPUS_FILES)
    def test_deterministic(self, name):
        src = corpus_source(name)
        assert validate(parse_module(src)) == validate(parse_module(src))


class TestRoles:
    def test_chat_session(self):
        assert roles_of(load_module(corpus_source("chat.scr"))["ChatSession"]) == \
            ["ClientThread", "ChatRoom"]

    def test_single_role(self):
        assert roles_of(parse_module("global protocol P(role A) { }")["P"]) == ["A"]

    def test_dns(self):
        assert roles_of(load_module(corpus_source("dns.scr"))["HandleDNSRequest"]) == \
            ["UDPHandlerServer", "DNSZoneRegServer"]


def _squash(text: str) -> str:
    return re.sub(r"\s+", "", re.sub(r"//[^\n]*", "", text))


class TestRoundTrip:
    @pytest.mark.parametrize("name", CORPUS_FILES)
    def test_corpus_round_trip(self, name):
        src = corpus_source(name)
        printed = format_module(parse_module(src))
        assert _squash(printed) == _squash(src)
        assert format_module(parse_module(printed)) == printed

    @settings(max_examples=200, deadline=None)
    @given(global_protocols())
    def test_print_then_parse_is_identity(self, proto):
        text = format_protocol(proto)
        module = parse_module(text)
        assert module["P"] == proto
        assert format_module(module).strip() == text.strip()


class TestContinueMutations:
    """``continue`` with no enclosing ``rec`` of that name never parses."""

    @settings(max_examples=150, deadline=None)
    @given(global_bodies(), st.sampled_from(["Nowhere", "L999"]))
    def test_appended_unbound_continue(self, body, label):
        text = format_protocol(_proto(body))
        mutated = text.rstrip().rstrip("}") + f"  continue {label};\n}}\n"
        with pytest.raises(ProtocolError) as info:
            parse_module(mutated)
        assert any("unbound recursion label" in d.message for d in info.value.diagnostics)

    @pytest.mark.parametrize("name", ["chat.scr", "dns.scr", "pingpong.scr"])
    def test_renamed_continue(self, name):
        src = corpus_source(name)
        mutated = re.sub(r"continue (\w+);", r"continue \1Gone;", src, count=1)
        with pytest.raises(ProtocolError):
            parse_module(mutated)

    def test_continue_after_rec_closes(self):
        src = corpus_source("pingpong.scr")
        mutated = src.replace("    continue Loop;\n  }", "  }\n  continue Loop;")
        assert mutated != src
        with pytest.raises(ProtocolError):
            parse_module(mutated)


def _proto(body):
    from sessmon.protocol import GlobalProtocol

    return GlobalProtocol("P", ("A", "B", "C"), body)


def test_module_lookup():
    module = ProtocolModule({})
    assert "P" not in module
    assert list(module) == []
