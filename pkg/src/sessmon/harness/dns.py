"""The DNS request-handling case study as a simulation.

Each query is a ``dns_udp_handler`` actor spawned with the domain name. It
asks the zone registry for the nearest zone, fetches that zone's records in
a ``GetZoneData`` subsession and follows CNAME records with another round of
the loop. A killed zone data server makes the request lapse; nothing retries.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib.resources import files
from typing import Any, Optional

from ..messages import Typed
from ..runtime import (
    ConversationError,
    InitKey,
    Runtime,
    SessionActor,
    end_conversation,
    log,
    send,
    spawn_actor,
    start_conversation,
    start_subsession,
    subsession_complete,
    system_start,
)

CONFIG = """\
dns_udp_handler       HandleDNSRequest  UDPHandlerServer
dns_udp_handler       GetZoneData       UDPHandlerServer
dns_zone_registry     HandleDNSRequest  DNSZoneRegServer
dns_zone_data_server  GetZoneData       DNSZoneDataServer
"""

# zone -> name -> (record type, value)
ZONES: dict[str, dict[str, tuple[str, str]]] = {
    "example.com": {
        "www.example.com": ("A", "93.184.216.34"),
        "alias.example.com": ("CNAME", "www.example.org"),
    },
    "example.org": {
        "www.example.org": ("A", "93.184.216.35"),
    },
}

MAX_HOPS = 8


def source() -> str:
    return files("sessmon.corpus").joinpath("dns.scr").read_text()


def nearest_zone(domain: str, zones) -> Optional[str]:
    """Longest zone that is ``domain`` or a suffix of it on a label boundary."""
    best = None
    for zone in zones:
        if (domain == zone or domain.endswith("." + zone)) and \
                (best is None or len(zone) > len(best)):
            best = zone
    return best


@dataclass
class QueryState:
    key: InitKey
    domain: str
    hops: int = 0
    zones_asked: list[str] = field(default_factory=list)
    answer: Optional[tuple[str, str]] = None
    failure: Optional[str] = None


class UdpHandler(SessionActor):
    def on_init(self, args, init_key):
        st = QueryState(init_key, str(args[0]))
        start_conversation(init_key, "HandleDNSRequest", "UDPHandlerServer")
        return st

    def on_established(self, protocol, role, sid, conv_key, st: QueryState):
        try:
            if protocol == "HandleDNSRequest":
                send(conv_key, ["DNSZoneRegServer"], "FindNearestZone", [st.domain])
            else:
                send(conv_key, ["DNSZoneDataServer"], "ZoneDataRequest", [])
        except ConversationError as exc:
            # The session failed before we got to speak; on_error follows.
            log(st.key, f"{protocol}: {exc}")
        return st

    def on_message(self, protocol, role, sid, sender, label, payload, st: QueryState, conv_key):
        if label == "ZoneResponse":
            zone, zone_pid = payload[0]
            st.zones_asked.append(zone)
            start_subsession(conv_key, "GetZoneData", {"UDPHandlerServer": "UDPHandlerServer"},
                             ["DNSZoneDataServer"], candidates={"DNSZoneDataServer": [zone_pid]})
        elif label == "InvalidZone":
            st.failure = "NXDOMAIN"
            log(conv_key, f"{st.domain}: no such zone")
            end_conversation(conv_key, "invalid_zone")
        elif label == "ZoneDataResponse":
            records = payload[0]
            subsession_complete(conv_key, records.get(st.domain))
        return st

    def on_subsession_complete(self, protocol, record, st: QueryState, conv_key):
        st.hops += 1
        if record is not None and record[0] == "CNAME" and st.hops < MAX_HOPS:
            st.domain = record[1]
            send(conv_key, ["DNSZoneRegServer"], "FindNearestZone", [st.domain])
            return st
        st.answer = record
        log(conv_key, f"{st.domain}: {record[0]} {record[1]}" if record else
            f"{st.domain}: no record")
        end_conversation(conv_key, "answered")
        return st

    def on_error(self, protocol, role, error, st: QueryState):
        if st.answer is None and st.failure is None:
            st.failure = str(error)
        return st


@dataclass
class RegistryState:
    zones: dict[str, int] = field(default_factory=dict)


class ZoneRegistry(SessionActor):
    """Knows every zone; spawns one data server per zone at start."""

    def on_init(self, args, init_key):
        st = RegistryState()
        for zone in sorted(ZONES):
            st.zones[zone] = spawn_actor(init_key, "dns_zone_data_server", [zone])
        return st

    def on_message(self, protocol, role, sid, sender, label, payload, st: RegistryState,
                   conv_key):
        zone = nearest_zone(payload[0], st.zones)
        if zone is None:
            send(conv_key, ["UDPHandlerServer"], "InvalidZone", [])
        else:
            send(conv_key, ["UDPHandlerServer"], "ZoneResponse",
                 [Typed("ZonePID", (zone, st.zones[zone]))])
        return st


class ZoneDataServer(SessionActor):
    def on_init(self, args, init_key):
        return str(args[0])

    def on_message(self, protocol, role, sid, sender, label, payload, zone, conv_key):
        send(conv_key, ["UDPHandlerServer"], "ZoneDataResponse",
             [Typed("RRTree", dict(ZONES.get(zone, {})))])
        return zone


BEHAVIORS = {
    "dns_udp_handler": UdpHandler,
    "dns_zone_registry": ZoneRegistry,
    "dns_zone_data_server": ZoneDataServer,
}


def start(seed: int = 0, **options: Any) -> Runtime:
    return system_start(source(), CONFIG, behaviors=BEHAVIORS, seed=seed, **options)


def resolve(rt: Runtime, ref: str) -> int:
    """Resolve ``zone:NAME`` to that zone's data server."""
    kind, _, name = ref.partition(":")
    if kind != "zone":
        raise KeyError(ref)
    for pid, proc in sorted(rt.actors.items()):
        if proc.spec.actor_type == "dns_zone_registry" and name in proc.state.zones:
            return proc.state.zones[name]
    raise KeyError(ref)
