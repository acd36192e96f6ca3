"""Non-secure dynamic-update detection: probe, verify, clean up, classify.

One UPDATE datagram inserting a sentinel A/AAAA record decides the verdict
for a responsive nameserver; an authoritative lookup confirms visibility,
and a delete plus re-check guarantees the zone is left as found. Records
the scanner did not create are never deleted.
"""

from __future__ import annotations

import random
import time
from dataclasses import dataclass
from enum import Enum
from ipaddress import IPv4Address, IPv6Address
from typing import Iterable, Iterator, Optional, Union

from .analytics import CategoryCounts, ScanSnapshot
from .transport import Transport, UdpTransport
from .wire import (
    AddRecord,
    DecodeError,
    DeleteExactRecord,
    DeleteRRset,
    DnsMessage,
    DnsName,
    Rcode,
    ResourceRecord,
    RType,
    decode_message,
    encode_message,
    make_query,
    make_update,
)

DEFAULT_SENTINEL = b"researchstudyzp"


class ScannerError(Exception):
    pass


class AttestationRequired(ScannerError):
    """Real-socket probing demands the probe-address ownership attestation."""


class TransportKind(Enum):
    SIM_BUS = "sim"
    UDP_SOCKET = "udp"


@dataclass(frozen=True)
class ProbeTarget:
    zone: DnsName
    nameserver: str
    transport: TransportKind = TransportKind.SIM_BUS

    def __post_init__(self):
        if not len(self.zone):
            raise ValueError("probe zone must be non-root")
        if not self.nameserver:
            raise ValueError("probe target needs a nameserver address")


@dataclass(frozen=True)
class ProbeConfig:
    """Scanner knobs.

    ``probe_address`` must point at an operator-controlled host that
    explains the scan; ``probe_address_attested`` asserts that ownership
    and is required for real-socket scans. ``retries_verify`` bounds extra
    attempts for the probe UPDATE and the verification lookups (each
    retransmission only ever follows a timeout); ``retries_cleanup`` is the
    number of delete-and-recheck rounds before a failed cleanup is
    surfaced. Pacing is ``per_nameserver_rate`` probes/second per target
    address with a global in-flight cap of ``max_in_flight`` (the serial
    runner never exceeds one).
    """

    probe_address: Union[IPv4Address, IPv6Address] = IPv4Address("192.0.2.80")
    sentinel_label: bytes = DEFAULT_SENTINEL
    ttl: int = 120
    timeout: float = 3.0
    retries_verify: int = 2
    retries_cleanup: int = 5
    per_nameserver_rate: float = 2.0
    max_in_flight: int = 1
    probe_address_attested: bool = False

    def __post_init__(self):
        if not self.sentinel_label or len(self.sentinel_label) > 63 or b"." in self.sentinel_label:
            raise ValueError("sentinel_label must be a single valid DNS label")

    @property
    def record_type(self) -> int:
        return RType.AAAA if isinstance(self.probe_address, IPv6Address) else RType.A


class Verdict(Enum):
    VULNERABLE_CONFIRMED = "vulnerable_confirmed"
    UPDATE_ACCEPTED_NOT_VISIBLE = "update_accepted_not_visible"
    NOT_VULNERABLE = "not_vulnerable"
    UNREACHABLE = "unreachable"
    MALFORMED_REPLY = "malformed_reply"
    CLEANUP_FAILED = "cleanup_failed"


VULNERABLE_VERDICTS = {Verdict.VULNERABLE_CONFIRMED, Verdict.CLEANUP_FAILED}


@dataclass(frozen=True)
class ProbeOutcome:
    target: ProbeTarget
    verdict: Verdict
    update_rcode: Optional[Rcode]
    t_update_ms: float
    t_verify_ms: float
    t_cleanup_ms: float
    cleanup_confirmed: Optional[bool]
    detection_updates_sent: int
    cleanup_updates_sent: int
    ts: float

    def __post_init__(self):
        if self.verdict is Verdict.VULNERABLE_CONFIRMED:
            assert self.update_rcode == Rcode.NOERROR and self.cleanup_confirmed
        if self.verdict is Verdict.CLEANUP_FAILED:
            assert self.update_rcode == Rcode.NOERROR

    @property
    def vulnerable(self) -> bool:
        return self.verdict in VULNERABLE_VERDICTS

    def to_json_obj(self) -> dict:
        return {
            "zone": self.target.zone.to_text(),
            "ns": self.target.nameserver,
            "verdict": self.verdict.value,
            "rcode": self.update_rcode.name if self.update_rcode is not None else None,
            "t_update_ms": round(self.t_update_ms, 3),
            "t_verify_ms": round(self.t_verify_ms, 3),
            "cleanup_ok": self.cleanup_confirmed,
            "ts": self.ts,
        }


def sentinel_name(target: ProbeTarget, cfg: ProbeConfig) -> DnsName:
    return target.zone.prepend(cfg.sentinel_label)


def build_probe(target: ProbeTarget, cfg: ProbeConfig, *,
                msg_id: Optional[int] = None, rng: Optional[random.Random] = None) -> DnsMessage:
    """The single detection datagram: an UPDATE adding `<sentinel>.<zone>`."""
    record = ResourceRecord(sentinel_name(target, cfg), cfg.record_type, 1, cfg.ttl,
                            cfg.probe_address)
    return make_update(target.zone, [AddRecord(record)], msg_id=msg_id, rng=rng)


class _Clock:
    """Fallback wall clock for run_probe callers that pass none."""

    def now(self) -> float:
        return time.time()

    def sleep(self, seconds: float) -> None:
        time.sleep(seconds)


def _check_attestation(target: ProbeTarget, cfg: ProbeConfig, transport: Transport) -> None:
    if target.transport is TransportKind.UDP_SOCKET or isinstance(transport, UdpTransport):
        if not cfg.probe_address_attested:
            raise AttestationRequired(
                "refusing real-socket probes without --i-own-the-probe-address")


def run_probe(target: ProbeTarget, cfg: ProbeConfig, transport: Transport,
              clock=None, rng: Optional[random.Random] = None) -> ProbeOutcome:
    """Classify one domain-nameserver pair.

    Phase 1 sends the probe UPDATE: a refusal rcode is NotVulnerable,
    silence after retries is Unreachable. Phase 2 queries the nameserver
    directly for the sentinel record. Phase 3 deletes it and confirms the
    removal. Every path is an outcome, never an exception.
    """
    clock = clock or _Clock()
    rng = rng or random.Random()
    _check_attestation(target, cfg, transport)
    sentinel = sentinel_name(target, cfg)
    started = clock.now()

    def outcome(verdict, update_rcode=None, *, t_update=0.0, t_verify=0.0, t_cleanup=0.0,
                cleanup_confirmed=None, detection_sends=0, cleanup_sends=0) -> ProbeOutcome:
        return ProbeOutcome(
            target=target, verdict=verdict, update_rcode=update_rcode,
            t_update_ms=t_update * 1000, t_verify_ms=t_verify * 1000,
            t_cleanup_ms=t_cleanup * 1000, cleanup_confirmed=cleanup_confirmed,
            detection_updates_sent=detection_sends, cleanup_updates_sent=cleanup_sends,
            ts=started,
        )

    # phase 1: one UPDATE datagram decides; retransmit only after a timeout
    probe = build_probe(target, cfg, rng=rng)
    payload = encode_message(probe)
    t0 = clock.now()
    raw = None
    detection_sends = 0
    for _ in range(cfg.retries_verify + 1):
        detection_sends += 1
        raw = transport.exchange(payload, target.nameserver, cfg.timeout)
        if raw is not None:
            break
    t_update = clock.now() - t0
    if raw is None:
        return outcome(Verdict.UNREACHABLE, t_update=t_update, detection_sends=detection_sends)
    try:
        reply = decode_message(raw)
    except DecodeError:
        return outcome(Verdict.MALFORMED_REPLY, t_update=t_update, detection_sends=detection_sends)
    if reply.id != probe.id:
        return outcome(Verdict.MALFORMED_REPLY, t_update=t_update, detection_sends=detection_sends)
    if reply.rcode != Rcode.NOERROR:
        return outcome(Verdict.NOT_VULNERABLE, reply.rcode, t_update=t_update,
                       detection_sends=detection_sends)

    # phase 2: the update claims success; look for the sentinel record
    t1 = clock.now()
    answers = _query_addresses(transport, target.nameserver, sentinel, cfg, rng)
    t_verify = clock.now() - t1
    common = dict(t_update=t_update, t_verify=t_verify, detection_sends=detection_sends)
    if answers is _MALFORMED:
        removed, sends, t_clean = _cleanup_own_record(target, cfg, transport, clock, rng,
                                                      exact_only=True)
        return outcome(Verdict.MALFORMED_REPLY, Rcode.NOERROR, cleanup_confirmed=removed,
                       cleanup_sends=sends, t_cleanup=t_clean, **common)
    if answers is None or cfg.probe_address not in answers:
        # nothing of ours is visible; issue no deletion for data we did not create
        if answers is None:
            # unverifiable (timeout): the insert may have landed, remove our
            # exact record just in case; it cannot touch foreign data
            removed, sends, t_clean = _cleanup_own_record(target, cfg, transport, clock, rng,
                                                          exact_only=True)
            return outcome(Verdict.UPDATE_ACCEPTED_NOT_VISIBLE, Rcode.NOERROR,
                           cleanup_confirmed=removed, cleanup_sends=sends, t_cleanup=t_clean,
                           **common)
        return outcome(Verdict.UPDATE_ACCEPTED_NOT_VISIBLE, Rcode.NOERROR, **common)
    if answers != {cfg.probe_address}:
        # collision with a pre-existing sentinel rrset: remove only our triple
        removed, sends, t_clean = _cleanup_own_record(target, cfg, transport, clock, rng,
                                                      exact_only=True)
        return outcome(Verdict.UPDATE_ACCEPTED_NOT_VISIBLE, Rcode.NOERROR,
                       cleanup_confirmed=removed, cleanup_sends=sends, t_cleanup=t_clean,
                       **common)

    # phase 3: the rrset is exactly our record; delete it and confirm removal
    removed, cleanup_sends, t_cleanup = _cleanup_own_record(target, cfg, transport, clock, rng,
                                                            exact_only=False)
    if removed:
        return outcome(Verdict.VULNERABLE_CONFIRMED, Rcode.NOERROR, cleanup_confirmed=True,
                       cleanup_sends=cleanup_sends, t_cleanup=t_cleanup, **common)
    return outcome(Verdict.CLEANUP_FAILED, Rcode.NOERROR, cleanup_confirmed=False,
                   cleanup_sends=cleanup_sends, t_cleanup=t_cleanup, **common)


_MALFORMED = object()


def _query_addresses(transport, destination, name, cfg, rng):
    """Resolve the sentinel rrset directly at the target nameserver.

    Returns the answer address set, None after all attempts time out, or
    the _MALFORMED marker for an undecodable reply.
    """
    query = make_query(name, cfg.record_type, rng=rng)
    payload = encode_message(query)
    for _ in range(cfg.retries_verify + 1):
        raw = transport.exchange(payload, destination, cfg.timeout)
        if raw is None:
            continue
        try:
            reply = decode_message(raw)
        except DecodeError:
            return _MALFORMED
        return {rr.rdata for rr in reply.answers
                if rr.rtype == cfg.record_type and rr.name == name
                and isinstance(rr.rdata, (IPv4Address, IPv6Address))}
    return None


def _cleanup_own_record(target, cfg, transport, clock, rng, *, exact_only: bool):
    """Delete the sentinel record and confirm absence; never touches foreign rdata.

    exact_only uses DeleteExactRecord (collision-safe); otherwise the whole
    rrset, which at this point provably holds only our record, is removed.
    """
    sentinel = sentinel_name(target, cfg)
    ours = ResourceRecord(sentinel, cfg.record_type, 1, 0, cfg.probe_address)
    change = DeleteExactRecord(ours) if exact_only else DeleteRRset(sentinel, cfg.record_type)
    t0 = clock.now()
    sends = 0
    for _ in range(max(1, cfg.retries_cleanup)):
        sends += 1
        delete = make_update(target.zone, [change], rng=rng)
        transport.exchange(encode_message(delete), target.nameserver, cfg.timeout)
        answers = _query_addresses(transport, target.nameserver, sentinel, cfg, rng)
        if answers is not None and answers is not _MALFORMED and cfg.probe_address not in answers:
            return True, sends, clock.now() - t0
    return False, sends, clock.now() - t0


class Pacer:
    """Per-nameserver send gate: consecutive probes to one address keep a minimum gap."""

    def __init__(self, clock, rate_per_second: float):
        self.clock = clock
        self.min_gap = 1.0 / rate_per_second if rate_per_second > 0 else 0.0
        self._next_slot: dict[str, float] = {}

    def wait(self, nameserver: str) -> None:
        now = self.clock.now()
        slot = self._next_slot.get(nameserver, now)
        if slot > now:
            self.clock.sleep(slot - now)
        self._next_slot[nameserver] = max(slot, now) + self.min_gap


@dataclass
class ScanResult:
    outcomes: list[ProbeOutcome]
    snapshot: ScanSnapshot


def run_scan(targets: Iterable[ProbeTarget], cfg: ProbeConfig, transport: Transport,
             clock=None, rng: Optional[random.Random] = None) -> ScanResult:
    """Probe every distinct target once, paced per nameserver, and fold a snapshot."""
    clock = clock or _Clock()
    rng = rng or random.Random()
    pacer = Pacer(clock, cfg.per_nameserver_rate)
    seen: set[tuple[DnsName, str]] = set()
    outcomes: list[ProbeOutcome] = []
    zones: set[str] = set()
    nameservers: set[str] = set()
    vulnerable: set[tuple[str, str]] = set()
    for target in targets:
        key = (target.zone, target.nameserver)
        if key in seen:
            continue
        seen.add(key)
        zones.add(target.zone.to_text())
        nameservers.add(target.nameserver)
        pacer.wait(target.nameserver)
        result = run_probe(target, cfg, transport, clock, rng)
        outcomes.append(result)
        if result.vulnerable:
            vulnerable.add((target.zone.to_text(), target.nameserver))
    tested = CategoryCounts(domains=len(zones), nameservers=len(nameservers), pairs=len(seen))
    snapshot = ScanSnapshot.from_pairs(clock.now(), tested, vulnerable)
    return ScanResult(outcomes, snapshot)


def parse_pair_lines(lines: Iterable[str]) -> Iterator[ProbeTarget]:
    """`zone,nameserver` records, one per line; blank lines and #-comments skipped."""
    for line in lines:
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        zone_text, _, ns = line.partition(",")
        if not ns:
            raise ValueError(f"pair line needs 'zone,nameserver': {line!r}")
        yield ProbeTarget(DnsName.from_text(zone_text.strip()), ns.strip())
