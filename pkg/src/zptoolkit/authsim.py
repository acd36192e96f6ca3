"""In-process authoritative nameserver with RFC 2136 server-side semantics.

Zones carry one of four update-policy archetypes (deny / open / source-IP
ACL / signed-key). Servers speak over the in-memory datagram bus, forward
updates from secondaries to their primary, push full-state transfers to
registered secondaries after every mutating update, and can journal every
update attempt in honeypot mode.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Optional, Union

from . import tsig as tsig_mod
from .transport import DatagramBus, SimDatagram
from .wire import (
    DecodeError,
    DnsMessage,
    DnsName,
    Opcode,
    Question,
    RClass,
    Rcode,
    ResourceRecord,
    RType,
    SoaData,
    decode_message,
    encode_message,
    rdata_from_text,
    rdata_to_text,
    rtype_from_text,
)

# --- update policies ---


@dataclass(frozen=True)
class Deny:
    pass


@dataclass(frozen=True)
class Open:
    pass


@dataclass(frozen=True)
class IpAcl:
    allowed: frozenset[str]

    def __post_init__(self):
        if not self.allowed:
            raise ValueError("IpAcl needs at least one allowed source address")


@dataclass(frozen=True)
class SignedKey:
    keyring: tuple[tsig_mod.TsigKey, ...]


UpdatePolicy = Union[Deny, Open, IpAcl, SignedKey]


def policy_label(policy: UpdatePolicy) -> str:
    return {Deny: "deny", Open: "open", IpAcl: "ipacl", SignedKey: "signedkey"}[type(policy)]


def parse_policy(text: str, keys: Optional[Mapping[str, tsig_mod.TsigKey]] = None) -> UpdatePolicy:
    parts = text.split(None, 1)
    kind = parts[0].lower()
    if kind == "deny":
        return Deny()
    if kind == "open":
        return Open()
    if kind == "ipacl":
        if len(parts) < 2:
            raise ValueError("ipacl policy needs a source list: ipacl a,b,c")
        return IpAcl(frozenset(a.strip() for a in parts[1].split(",") if a.strip()))
    if kind == "key":
        if len(parts) < 2:
            raise ValueError("key policy needs a key name: key <name>")
        name = parts[1].strip()
        if not keys or name not in keys:
            raise ValueError(f"policy references unknown TSIG key {name!r}")
        return SignedKey((keys[name],))
    raise ValueError(f"unknown policy {text!r}")


# --- roles ---


@dataclass(frozen=True)
class Primary:
    pass


@dataclass(frozen=True)
class Secondary:
    primary_address: str


Role = Union[Primary, Secondary]


# --- zone state ---


@dataclass(frozen=True)
class ZoneConfig:
    """One zone's full state: apex, role, policy, record set, serial.

    The record set is a mathematical set (no two records share name, type,
    and rdata; adds replace the TTL instead of duplicating).
    """

    apex: DnsName
    role: Role
    policy: UpdatePolicy
    records: frozenset[ResourceRecord]
    soa_serial: int

    def __post_init__(self):
        soas = [rr for rr in self.records if rr.rtype == RType.SOA]
        if len(soas) != 1 or soas[0].name != self.apex:
            raise ValueError("zone must hold exactly one SOA record at the apex")
        if soas[0].rdata.serial != self.soa_serial:
            raise ValueError("soa_serial must equal the SOA record's serial field")
        by_name: dict[DnsName, set[int]] = {}
        for rr in self.records:
            by_name.setdefault(rr.name, set()).add(rr.rtype)
        for name, types in by_name.items():
            if RType.CNAME in types and types != {RType.CNAME}:
                raise ValueError(f"CNAME at {name.to_text()} cannot coexist with other types")

    @classmethod
    def build(cls, apex: DnsName, role: Role, policy: UpdatePolicy,
              records: Iterable[ResourceRecord]) -> "ZoneConfig":
        records = frozenset(records)
        soas = [rr for rr in records if rr.rtype == RType.SOA]
        if len(soas) != 1:
            raise ValueError("zone must hold exactly one SOA record")
        return cls(apex, role, policy, records, soas[0].rdata.serial)

    @property
    def soa(self) -> ResourceRecord:
        return next(rr for rr in self.records if rr.rtype == RType.SOA)

    def rrset(self, name: DnsName, rtype: int) -> tuple[ResourceRecord, ...]:
        return tuple(rr for rr in self.records if rr.name == name and rr.rtype == rtype)

    def records_at(self, name: DnsName) -> tuple[ResourceRecord, ...]:
        return tuple(rr for rr in self.records if rr.name == name)

    def has_node(self, name: DnsName) -> bool:
        """True when the name exists, including as an empty non-terminal."""
        return any(rr.name.is_subdomain_of(name) for rr in self.records)

    def delegation_points(self) -> list[DnsName]:
        return sorted(
            {rr.name for rr in self.records if rr.rtype == RType.NS and rr.name != self.apex},
            key=len,
        )

    def normalized_records(self) -> frozenset[ResourceRecord]:
        """Record set with the SOA serial zeroed, for before/after comparisons.

        Every mutating update bumps the serial by contract, so residue and
        fixture-equality checks compare record sets modulo that field.
        """
        out = set()
        for rr in self.records:
            if rr.rtype == RType.SOA:
                rr = ResourceRecord(rr.name, rr.rtype, rr.rclass, rr.ttl,
                                    dataclasses.replace(rr.rdata, serial=0))
            out.add(rr)
        return frozenset(out)


# --- ACL evaluation ---


@dataclass(frozen=True)
class Allow:
    """Update may proceed; ``message`` is the (possibly TSIG-stripped) core message."""

    message: DnsMessage


@dataclass(frozen=True)
class Refuse:
    rcode: Rcode


AclResult = Union[Allow, Refuse]


def acl_check(policy: UpdatePolicy, datagram_source: str, msg: DnsMessage, now: float) -> AclResult:
    """Decide whether an UPDATE from a claimed source may proceed.

    The IpAcl arm trusts the datagram's source field as-is: that naivety is
    the spoofing vulnerability this toolkit demonstrates, so it must stay.
    """
    if isinstance(policy, Deny):
        return Refuse(Rcode.REFUSED)
    if isinstance(policy, Open):
        return Allow(msg)
    if isinstance(policy, IpAcl):
        if datagram_source in policy.allowed:
            return Allow(msg)
        return Refuse(Rcode.REFUSED)
    if isinstance(policy, SignedKey):
        result = tsig_mod.verify_message(msg, policy.keyring, now)
        if isinstance(result, tsig_mod.Accept):
            return Allow(result.message)
        if result.reason is tsig_mod.RejectReason.NO_SIGNATURE:
            return Refuse(Rcode.REFUSED)
        return Refuse(Rcode.NOTAUTH)
    raise TypeError(f"not an UpdatePolicy: {policy!r}")


# --- prerequisite evaluation (RFC 2136 §3.2, the four canonical forms) ---


def evaluate_prerequisites(zone: ZoneConfig, prereqs: Iterable[ResourceRecord]) -> Rcode:
    """Return NOERROR or the rcode of the first violated prerequisite."""
    for rr in prereqs:
        if rr.ttl != 0:
            return Rcode.FORMERR
        if not rr.name.is_subdomain_of(zone.apex):
            return Rcode.NOTZONE
        if rr.rclass == RClass.ANY:
            if rr.rdata != b"":
                return Rcode.FORMERR
            if rr.rtype == RType.ANY:
                if not zone.records_at(rr.name):
                    return Rcode.NXDOMAIN
            elif not zone.rrset(rr.name, rr.rtype):
                return Rcode.NXRRSET
        elif rr.rclass == RClass.NONE:
            if rr.rdata != b"":
                return Rcode.FORMERR
            if rr.rtype == RType.ANY:
                if zone.records_at(rr.name):
                    return Rcode.YXDOMAIN
            elif zone.rrset(rr.name, rr.rtype):
                return Rcode.YXRRSET
        else:
            # value-dependent prerequisites are outside the supported subset
            return Rcode.FORMERR
    return Rcode.NOERROR


# --- update application (RFC 2136 §3.4) ---

_Store = dict  # (name, rtype) -> {rdata: ResourceRecord}


def _to_store(records: Iterable[ResourceRecord]) -> _Store:
    store: _Store = {}
    for rr in records:
        store.setdefault((rr.name, rr.rtype), {})[rr.rdata] = rr
    return store


def _from_store(store: _Store) -> frozenset[ResourceRecord]:
    return frozenset(rr for rrset in store.values() for rr in rrset.values())


def _prescan_updates(zone: ZoneConfig, updates: Iterable[ResourceRecord]) -> Rcode:
    for rr in updates:
        if not rr.name.is_subdomain_of(zone.apex):
            return Rcode.NOTZONE
        if rr.rclass == RClass.IN:
            if rr.rtype in (RType.ANY, RType.AXFR, RType.TSIG) or rr.rdata == b"":
                return Rcode.FORMERR
        elif rr.rclass == RClass.ANY:
            if rr.ttl != 0 or rr.rdata != b"":
                return Rcode.FORMERR
        elif rr.rclass == RClass.NONE:
            if rr.ttl != 0:
                return Rcode.FORMERR
        else:
            return Rcode.FORMERR
    return Rcode.NOERROR


def apply_update(zone: ZoneConfig, msg: DnsMessage) -> tuple[ZoneConfig, Rcode]:
    """Apply an UPDATE's changes in order; non-NOERROR outcomes leave the zone untouched.

    The SOA serial advances by exactly one per message that changed
    anything; deleting data that is not there is a silent no-op. Incoming
    SOA adds are ignored so that the serial stays server-managed.
    """
    if msg.zone is None or msg.zone.rtype != RType.SOA:
        return zone, Rcode.FORMERR
    if msg.zone.name != zone.apex:
        return zone, Rcode.NOTZONE
    rc = _prescan_updates(zone, msg.updates)
    if rc != Rcode.NOERROR:
        return zone, rc
    store = _to_store(zone.records)
    apex = zone.apex
    for rr in msg.updates:
        key = (rr.name, rr.rtype)
        if rr.rclass == RClass.IN:
            if rr.rtype == RType.SOA:
                continue
            types_at_name = {t for (n, t) in store if n == rr.name and store[(n, t)]}
            if rr.rtype == RType.CNAME and types_at_name - {RType.CNAME}:
                continue
            if rr.rtype != RType.CNAME and RType.CNAME in types_at_name:
                continue
            store.setdefault(key, {})[rr.rdata] = rr
        elif rr.rclass == RClass.ANY:
            if rr.rtype == RType.ANY:
                for (n, t) in list(store):
                    if n == rr.name:
                        if n == apex and t in (RType.SOA, RType.NS):
                            continue
                        del store[(n, t)]
            else:
                if rr.name == apex and rr.rtype in (RType.SOA, RType.NS):
                    continue
                store.pop(key, None)
        else:  # RClass.NONE
            if rr.rtype == RType.SOA:
                continue
            rrset = store.get(key)
            if not rrset or rr.rdata not in rrset:
                continue
            if rr.name == apex and rr.rtype == RType.NS and len(rrset) == 1:
                continue
            del rrset[rr.rdata]
            if not rrset:
                del store[key]
    new_records = _from_store(store)
    if new_records == zone.records:
        return zone, Rcode.NOERROR
    new_serial = (zone.soa_serial + 1) & 0xFFFFFFFF
    soa = zone.soa
    new_soa = ResourceRecord(soa.name, soa.rtype, soa.rclass, soa.ttl,
                             dataclasses.replace(soa.rdata, serial=new_serial))
    new_records = frozenset(rr for rr in new_records if rr.rtype != RType.SOA) | {new_soa}
    return dataclasses.replace(zone, records=new_records, soa_serial=new_serial), Rcode.NOERROR


def propagate_zone(primary: ZoneConfig, secondary: ZoneConfig) -> ZoneConfig:
    """Full-state transfer: the secondary's records and serial become the primary's."""
    if not isinstance(secondary.role, Secondary):
        raise ValueError("propagate_zone target must have a Secondary role")
    return dataclasses.replace(secondary, records=primary.records, soa_serial=primary.soa_serial)


# --- honeypot journal ---


@dataclass(frozen=True)
class HoneypotEvent:
    ts: float
    source: str
    zone: str
    kinds: tuple[str, ...]
    names: tuple[str, ...]
    rcode: str
    raw: bytes

    def to_json_obj(self) -> dict:
        return {
            "ts": self.ts,
            "src": self.source,
            "zone": self.zone,
            "kinds": list(self.kinds),
            "names": list(self.names),
            "rcode": self.rcode,
            "raw_hex": self.raw.hex(),
        }


def _change_kind(rr: ResourceRecord) -> str:
    if rr.rclass == RClass.IN:
        return "add"
    if rr.rclass == RClass.ANY:
        return "delete_name" if rr.rtype == RType.ANY else "delete_rrset"
    if rr.rclass == RClass.NONE:
        return "delete_exact"
    return "unknown"


def open_journal(path: str) -> Callable[[HoneypotEvent], None]:
    """Append-only JSONL sink for honeypot events."""

    def sink(event: HoneypotEvent) -> None:
        with open(path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(event.to_json_obj()) + "\n")

    return sink


# --- the server ---


class NameServer:
    """One authoritative server: zones, a bus address, and per-zone secondaries.

    Datagrams addressed to one server are processed serially in arrival
    order; distinct servers share nothing but the bus.
    """

    def __init__(self, address: str, zones: Iterable[ZoneConfig] = (), *,
                 honeypot: bool = False,
                 journal_sink: Optional[Callable[[HoneypotEvent], None]] = None):
        self.address = address
        self.zones: dict[DnsName, ZoneConfig] = {}
        self.secondaries: dict[DnsName, list[str]] = {}
        self.honeypot = honeypot
        self.journal_sink = journal_sink
        self.events: list[HoneypotEvent] = []
        self._pending_forwards: dict[tuple[str, int], str] = {}
        for zone in zones:
            self.add_zone(zone)

    def add_zone(self, zone: ZoneConfig) -> None:
        self.zones[zone.apex] = zone

    def register_secondary(self, apex: DnsName, address: str) -> None:
        self.secondaries.setdefault(apex, []).append(address)

    def attach(self, bus: DatagramBus) -> None:
        bus.attach(self.address, self.handle_datagram)

    # -- datagram entry point --

    def handle_datagram(self, dgram: SimDatagram, now: float) -> list[SimDatagram]:
        try:
            msg = decode_message(dgram.payload)
        except DecodeError:
            self._journal(now, dgram, None, Rcode.FORMERR)
            return [self._raw_formerr(dgram)]
        if msg.is_response:
            return self._handle_response(msg, dgram)
        if msg.opcode == Opcode.UPDATE:
            return self._handle_update(msg, dgram, now)
        return [self._reply(dgram, self._answer_query(msg))]

    # -- queries --

    def _answer_query(self, msg: DnsMessage) -> DnsMessage:
        if len(msg.question) != 1:
            return self._response(msg, Rcode.FORMERR)
        q = msg.question[0]
        zone = self._zone_for(q.name)
        if zone is None:
            return self._response(msg, Rcode.REFUSED)
        for cut in zone.delegation_points():
            if q.name.is_subdomain_of(cut):
                ns_rrset = zone.rrset(cut, RType.NS)
                glue = []
                for ns in ns_rrset:
                    glue += zone.rrset(ns.rdata, RType.A) + zone.rrset(ns.rdata, RType.AAAA)
                return self._response(msg, Rcode.NOERROR, authority=ns_rrset,
                                      additional=tuple(glue), authoritative=False)
        at_name = zone.records_at(q.name)
        if not at_name:
            if zone.has_node(q.name):
                return self._response(msg, Rcode.NOERROR, authority=(zone.soa,), authoritative=True)
            return self._response(msg, Rcode.NXDOMAIN, authority=(zone.soa,), authoritative=True)
        if q.rtype == RType.ANY:
            answers = at_name
        else:
            answers = tuple(rr for rr in at_name if rr.rtype == q.rtype)
            if not answers and q.rtype != RType.CNAME:
                answers = tuple(rr for rr in at_name if rr.rtype == RType.CNAME)
        if not answers:
            return self._response(msg, Rcode.NOERROR, authority=(zone.soa,), authoritative=True)
        return self._response(msg, Rcode.NOERROR, answers=answers, authoritative=True)

    def _zone_for(self, name: DnsName) -> Optional[ZoneConfig]:
        best = None
        for zone in self.zones.values():
            if name.is_subdomain_of(zone.apex):
                if best is None or len(zone.apex) > len(best.apex):
                    best = zone
        return best

    # -- updates --

    def _handle_update(self, msg: DnsMessage, dgram: SimDatagram, now: float) -> list[SimDatagram]:
        if len(msg.question) != 1 or msg.question[0].rtype != RType.SOA:
            self._journal(now, dgram, msg, Rcode.FORMERR)
            return [self._reply(dgram, self._response(msg, Rcode.FORMERR))]
        apex = msg.question[0].name
        zone = self.zones.get(apex)
        if zone is None:
            self._journal(now, dgram, msg, Rcode.NOTAUTH)
            return [self._reply(dgram, self._response(msg, Rcode.NOTAUTH))]
        acl = acl_check(zone.policy, dgram.source, msg, now)
        if isinstance(zone.role, Secondary):
            if isinstance(acl, Refuse):
                self._journal(now, dgram, msg, acl.rcode)
                return [self._reply(dgram, self._response(msg, acl.rcode))]
            # no local write: hand the verbatim request to the primary and
            # relay whatever rcode it returns
            self._pending_forwards[(zone.role.primary_address, msg.id)] = dgram.source
            self._journal(now, dgram, msg, None)
            return [SimDatagram(self.address, zone.role.primary_address, dgram.payload)]
        if isinstance(acl, Refuse):
            self._journal(now, dgram, msg, acl.rcode)
            return [self._reply(dgram, self._response(msg, acl.rcode))]
        core = acl.message
        rc = evaluate_prerequisites(zone, core.prerequisites)
        if rc == Rcode.NOERROR:
            new_zone, rc = apply_update(zone, core)
        else:
            new_zone = zone
        out = [self._reply(dgram, self._response(msg, rc))]
        if new_zone is not zone:
            self.zones[apex] = new_zone
            out += self._transfers(new_zone)
        self._journal(now, dgram, msg, rc)
        return out

    def _transfers(self, zone: ZoneConfig) -> list[SimDatagram]:
        payload = encode_message(self._transfer_message(zone))
        return [SimDatagram(self.address, addr, payload)
                for addr in self.secondaries.get(zone.apex, [])]

    def _transfer_message(self, zone: ZoneConfig) -> DnsMessage:
        answers = tuple(sorted(
            zone.records,
            key=lambda rr: (rr.name, rr.rtype, rr.rclass, rr.ttl, rdata_to_text(rr.rtype, rr.rdata)),
        ))
        return DnsMessage(
            id=zone.soa_serial & 0xFFFF,
            opcode=Opcode.QUERY,
            is_response=True,
            authoritative=True,
            question=(Question(zone.apex, RType.AXFR, RClass.IN),),
            answers=answers,
        )

    # -- responses arriving at this server (transfers, relayed rcodes) --

    def _handle_response(self, msg: DnsMessage, dgram: SimDatagram) -> list[SimDatagram]:
        if msg.question and msg.question[0].rtype == RType.AXFR:
            return self._apply_transfer(msg, dgram)
        requester = self._pending_forwards.pop((dgram.source, msg.id), None)
        if requester is not None:
            return [SimDatagram(self.address, requester, dgram.payload)]
        return []

    def _apply_transfer(self, msg: DnsMessage, dgram: SimDatagram) -> list[SimDatagram]:
        apex = msg.question[0].name
        zone = self.zones.get(apex)
        if zone is None or not isinstance(zone.role, Secondary):
            return []
        if dgram.source != zone.role.primary_address:
            return []
        records = frozenset(msg.answers)
        soas = [rr for rr in records if rr.rtype == RType.SOA]
        if len(soas) != 1:
            return []
        self.zones[apex] = dataclasses.replace(zone, records=records, soa_serial=soas[0].rdata.serial)
        return []

    # -- plumbing --

    def _reply(self, dgram: SimDatagram, msg: DnsMessage) -> SimDatagram:
        return SimDatagram(self.address, dgram.source, encode_message(msg))

    def _response(self, request: DnsMessage, rcode: Rcode, *,
                  answers: tuple = (), authority: tuple = (), additional: tuple = (),
                  authoritative: bool = False) -> DnsMessage:
        return DnsMessage(
            id=request.id,
            opcode=request.opcode,
            rcode=rcode,
            is_response=True,
            authoritative=authoritative,
            question=request.question,
            answers=answers,
            authority=authority,
            additional=additional,
        )

    def _raw_formerr(self, dgram: SimDatagram) -> SimDatagram:
        msg_id = int.from_bytes(dgram.payload[:2], "big") if len(dgram.payload) >= 2 else 0
        reply = DnsMessage(id=msg_id, rcode=Rcode.FORMERR, is_response=True)
        return SimDatagram(self.address, dgram.source, encode_message(reply))

    def _journal(self, now: float, dgram: SimDatagram, msg: Optional[DnsMessage],
                 rcode: Optional[Rcode]) -> None:
        if not self.honeypot:
            return
        if msg is not None and msg.opcode != Opcode.UPDATE:
            return
        if msg is None:
            zone_name, kinds, names = "", (), ()
        else:
            zone_name = msg.zone.name.to_text() if msg.zone else ""
            kinds = tuple(_change_kind(rr) for rr in msg.updates)
            names = tuple(rr.name.to_text() for rr in msg.updates)
        event = HoneypotEvent(
            ts=now,
            source=dgram.source,
            zone=zone_name,
            kinds=kinds,
            names=names,
            rcode=rcode.name if rcode is not None else "FORWARDED",
            raw=dgram.payload,
        )
        self.events.append(event)
        if self.journal_sink is not None:
            self.journal_sink(event)


# --- zone seed files and fleets ---


def parse_zone_text(text: str, keys: Optional[Mapping[str, tsig_mod.TsigKey]] = None) -> ZoneConfig:
    """Parse one zone seed: '@policy ...', '@role ...', then 'name TTL class type rdata' lines."""
    policy: UpdatePolicy = Deny()
    role: Role = Primary()
    records = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("@policy"):
            policy = parse_policy(line.split(None, 1)[1], keys)
            continue
        if line.startswith("@role"):
            parts = line.split()
            if parts[1].lower() == "primary":
                role = Primary()
            elif parts[1].lower() == "secondary":
                role = Secondary(parts[2])
            else:
                raise ValueError(f"line {lineno}: unknown role {parts[1]!r}")
            continue
        fields = line.split(None, 4)
        if len(fields) != 5:
            raise ValueError(f"line {lineno}: expected 'name TTL class type rdata'")
        name_text, ttl_text, rclass_text, rtype_text, rdata_text = fields
        if rclass_text.upper() != "IN":
            raise ValueError(f"line {lineno}: only class IN zone data is supported")
        rtype = rtype_from_text(rtype_text)
        records.append(ResourceRecord(
            DnsName.from_text(name_text), rtype, RClass.IN, int(ttl_text),
            rdata_from_text(rtype, rdata_text),
        ))
    soas = [rr for rr in records if rr.rtype == RType.SOA]
    if len(soas) != 1:
        raise ValueError("zone seed must contain exactly one SOA record")
    return ZoneConfig.build(soas[0].name, role, policy, records)


def parse_fleet_text(text: str, keys: Optional[Mapping[str, tsig_mod.TsigKey]] = None) -> list[tuple[str, ZoneConfig]]:
    """Parse a fleet file: '@server <address>' opens a block holding one zone seed."""
    blocks: list[tuple[str, list[str]]] = []
    current: Optional[list[str]] = None
    for line in text.splitlines():
        stripped = line.split("#", 1)[0].strip()
        if stripped.startswith("@server"):
            current = []
            blocks.append((stripped.split()[1], current))
            continue
        if current is None:
            if stripped:
                raise ValueError("fleet file must start with a @server line")
            continue
        current.append(line)
    return [(addr, parse_zone_text("\n".join(lines), keys)) for addr, lines in blocks]


def build_fleet(bus: DatagramBus, zones_by_address: Iterable[tuple[str, ZoneConfig]], *,
                honeypot: bool = False,
                journal_sink: Optional[Callable[[HoneypotEvent], None]] = None) -> dict[str, NameServer]:
    """Attach one server per address and wire secondary registration to primaries."""
    servers: dict[str, NameServer] = {}
    for address, zone in zones_by_address:
        server = servers.get(address)
        if server is None:
            server = NameServer(address, honeypot=honeypot, journal_sink=journal_sink)
            servers[address] = server
            server.attach(bus)
        server.add_zone(zone)
    for address, server in servers.items():
        for zone in server.zones.values():
            if isinstance(zone.role, Secondary):
                primary = servers.get(zone.role.primary_address)
                if primary is not None and zone.apex in primary.zones:
                    primary.register_secondary(zone.apex, address)
    return servers


def make_soa(apex: DnsName, serial: int = 1, ttl: int = 3600) -> ResourceRecord:
    """Convenience SOA for fixtures: ns1.<apex> / hostmaster.<apex>."""
    return ResourceRecord(
        apex, RType.SOA, RClass.IN, ttl,
        SoaData(apex.prepend("ns1"), apex.prepend("hostmaster"), serial, 7200, 900, 1209600, 86400),
    )
