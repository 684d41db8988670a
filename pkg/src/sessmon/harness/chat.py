"""The chat server case study as a simulation.

Clients are driven by scripted text commands instead of a TCP socket:

    CREATE:room   create a room
    JOIN:room     look the room up and, if it exists, join it (ChatSession)
    LIST          list rooms
    CHAT:text     post to the current room
    LEAVE         leave the current room
    BAD           send a message the protocol does not allow here

Commands queue up and run one at a time once the client is at a point of
the protocol where they make sense. A room instance is kicked out of all its
sessions with the input ``KICK``.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from importlib.resources import files
from typing import Any, Optional

from ..runtime import (
    ConversationError,
    InitKey,
    MonitorViolation,
    Runtime,
    SessionActor,
    become,
    end_conversation,
    log,
    register_conversation,
    send,
    spawn_actor,
    start_conversation,
    start_subsession,
    subsession_complete,
    subsession_failed,
    system_start,
)

CONFIG = """\
# actorType               protocol     roles
mse_chat_client           ChatServer   ClientThread
mse_chat_client           ChatSession  ClientThread
mse_chat_room_manager     ChatServer   RoomRegistry
mse_chat_room_instance    ChatSession  ChatRoom
mse_chat_logger           ChatServer   Logger
"""

SERVER_COMMANDS = ("CREATE", "JOIN", "LIST", "BAD")
ROOM_COMMANDS = ("CHAT", "LEAVE")


def source() -> str:
    return files("sessmon.corpus").joinpath("chat_logged.scr").read_text()


def parse_command(text: str) -> tuple[str, str]:
    op, _, arg = text.partition(":")
    return op.strip().upper(), arg.strip()


@dataclass
class ClientState:
    name: str
    key: InitKey
    pending: deque = field(default_factory=deque)
    connected: bool = False
    busy: bool = True
    room_sid: Optional[int] = None
    violations: int = 0
    seen: list = field(default_factory=list)


class ChatClient(SessionActor):
    def on_init(self, args, init_key):
        st = ClientState(args[0] if args else "client", init_key)
        start_conversation(init_key, "ChatServer", "ClientThread")
        return st

    def on_info(self, message, st: ClientState):
        st.pending.append(str(message))
        self._pump(st)
        return st

    def _pump(self, st: ClientState) -> None:
        # Wait while a request is in flight; drop commands that make no sense now.
        while st.pending and st.connected and not st.busy:
            op, arg = parse_command(st.pending.popleft())
            if op in SERVER_COMMANDS and st.room_sid is None:
                st.busy = op != "BAD"
                become(st.key, "main_thread", "ClientThread", op, [arg])
            elif op in ROOM_COMMANDS and st.room_sid is not None:
                try:
                    become(st.key, "chat_session", "ClientThread", op, [arg])
                except ConversationError:
                    # The room session closed; its outcome is on the way.
                    st.busy = True
                    st.room_sid = None
                    continue
                if op == "LEAVE":
                    # The outcome of the subsession frees the client again.
                    st.busy = True
                    st.room_sid = None
            else:
                log(st.key, f"ignored {op}: not possible now")

    def on_established(self, protocol, role, sid, conv_key, st: ClientState):
        try:
            register_conversation(conv_key, "main_thread" if protocol == "ChatServer"
                                  else "chat_session")
        except ConversationError:
            # Already closed again; on_error or on_ended follows.
            return st
        if protocol == "ChatServer":
            st.connected = True
            st.busy = False
        else:
            st.room_sid = sid
            st.busy = False
        self._pump(st)
        return st

    def on_become(self, protocol, role, op, args, conv_key, st: ClientState):
        try:
            self._act(op, args[0] if args else "", conv_key, st)
        except MonitorViolation:
            raise
        except ConversationError as exc:
            log(st.key, f"{op} failed: {exc}")
        return st

    def _act(self, op: str, arg: str, conv_key, st: ClientState) -> None:
        if op == "CREATE":
            send(conv_key, ["RoomRegistry"], "createRoom", [arg])
        elif op == "JOIN":
            send(conv_key, ["RoomRegistry"], "lookupRoom", [arg])
        elif op == "LIST":
            send(conv_key, ["RoomRegistry"], "listRooms", [])
        elif op == "BAD":
            try:
                send(conv_key, ["RoomRegistry"], "roomList", [[]])
            except MonitorViolation as exc:
                st.violations += 1
                log(conv_key, f"rejected: {exc}")
        elif op == "CHAT":
            send(conv_key, ["ChatRoom"], "outgoingChatMessage", [arg])
        elif op == "LEAVE":
            send(conv_key, ["ChatRoom"], "leaveRoom", [])
        elif op == "GIVE_UP":
            end_conversation(conv_key, "room_unavailable")

    def on_message(self, protocol, role, sid, sender, label, payload, st: ClientState, conv_key):
        st.seen.append((protocol, label, tuple(payload)))
        if label == "roomPID":
            _, room_pid = payload
            start_subsession(conv_key, "ChatSession", {"ClientThread": "ClientThread"},
                             ["ChatRoom"], candidates={"ChatRoom": [room_pid]})
        elif label in ("roomNotFound", "createRoomSuccess", "roomExists", "roomList"):
            st.busy = False
            self._pump(st)
        return st

    def _back_in_lobby(self, st: ClientState, conv_key, label: Optional[str]) -> None:
        if label is not None:
            send(conv_key, ["Logger"], label, [])
        st.room_sid = None
        st.busy = False
        self._pump(st)

    def on_subsession_complete(self, protocol, result, st: ClientState, conv_key):
        self._back_in_lobby(st, conv_key, "clientLeftRoom")
        return st

    def on_subsession_failed(self, protocol, failure, st: ClientState, conv_key):
        label = {"Kicked": "clientKicked", "ParticipantOffline": "roomTerminated"}.get(failure)
        self._back_in_lobby(st, conv_key, label)
        return st

    def on_subsession_setup_failed(self, protocol, roles, error, st: ClientState):
        # The protocol offers nothing but the initiation here, so give up.
        become(st.key, "main_thread", "ClientThread", "GIVE_UP", [])
        return st

    def on_ended(self, sid, reason, st: ClientState):
        if sid == st.room_sid:
            st.room_sid = None
        return st

    def on_error(self, protocol, role, error, st: ClientState):
        if protocol == "ChatServer":
            st.connected = False
        return st


@dataclass
class ManagerState:
    key: InitKey
    rooms: dict[str, int] = field(default_factory=dict)


class RoomManager(SessionActor):
    def on_init(self, args, init_key):
        return ManagerState(init_key)

    def on_message(self, protocol, role, sid, sender, label, payload, st: ManagerState,
                   conv_key):
        if label == "lookupRoom":
            name = payload[0]
            if name in st.rooms:
                send(conv_key, ["ClientThread"], "roomPID", [name, st.rooms[name]])
            else:
                send(conv_key, ["ClientThread"], "roomNotFound", [name])
        elif label == "createRoom":
            name = payload[0]
            if name in st.rooms:
                send(conv_key, ["ClientThread"], "roomExists", [name])
            else:
                st.rooms[name] = spawn_actor(conv_key, "mse_chat_room_instance", [name])
                send(conv_key, ["ClientThread"], "createRoomSuccess", [name])
        elif label == "listRooms":
            send(conv_key, ["ClientThread"], "roomList", [sorted(st.rooms)])
        return st


@dataclass
class RoomState:
    name: str
    key: InitKey
    members: set[int] = field(default_factory=set)
    posted: int = 0


class RoomInstance(SessionActor):
    def on_init(self, args, init_key):
        return RoomState(args[0] if args else "room", init_key)

    def on_established(self, protocol, role, sid, conv_key, st: RoomState):
        try:
            register_conversation(conv_key, f"member:{sid}")
        except ConversationError:
            return st
        st.members.add(sid)
        return st

    def _each_member(self, st: RoomState, op: str, args: list) -> None:
        for sid in sorted(st.members):
            try:
                become(st.key, f"member:{sid}", "ChatRoom", op, args)
            except ConversationError:
                st.members.discard(sid)

    def on_message(self, protocol, role, sid, sender, label, payload, st: RoomState, conv_key):
        if label == "outgoingChatMessage":
            st.posted += 1
            self._each_member(st, "broadcast", list(payload))
        elif label == "leaveRoom":
            st.members.discard(sid)
            try:
                subsession_complete(conv_key, "left")
            except ConversationError:
                pass
        return st

    def on_become(self, protocol, role, op, args, conv_key, st: RoomState):
        try:
            if op == "broadcast":
                send(conv_key, ["ClientThread"], "incomingChatMessage", list(args))
            elif op == "kick":
                st.members.discard(conv_key.session_id)
                subsession_failed(conv_key, "Kicked")
        except ConversationError:
            st.members.discard(conv_key.session_id)
        return st

    def on_info(self, message, st: RoomState):
        if str(message).upper() == "KICK":
            self._each_member(st, "kick", [])
        return st

    def on_ended(self, sid, reason, st: RoomState):
        st.members.discard(sid)
        return st

    def on_error(self, protocol, role, error, st: RoomState):
        return st


class ChatLogger(SessionActor):
    def on_init(self, args, init_key):
        return []

    def on_message(self, protocol, role, sid, sender, label, payload, st, conv_key):
        st.append((sid, label))
        return st


BEHAVIORS = {
    "mse_chat_client": ChatClient,
    "mse_chat_room_manager": RoomManager,
    "mse_chat_room_instance": RoomInstance,
    "mse_chat_logger": ChatLogger,
}


def start(seed: int = 0, **options: Any) -> Runtime:
    """A chat system with nothing spawned yet."""
    return system_start(source(), CONFIG, behaviors=BEHAVIORS, seed=seed, **options)


def resolve(rt: Runtime, ref: str) -> int:
    """Resolve ``room:NAME`` to the pid of that room's instance."""
    kind, _, name = ref.partition(":")
    if kind != "room":
        raise KeyError(ref)
    for pid, proc in sorted(rt.actors.items()):
        if proc.spec.actor_type == "mse_chat_room_manager" and name in proc.state.rooms:
            return proc.state.rooms[name]
    raise KeyError(ref)
