"""Input shaping: registrable-domain extraction under public-suffix rules,
nameserver/glue resolution against an authoritative resolver, and expansion
into the domain-nameserver pair universe the scanner consumes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources
from typing import Iterable, Optional

from .transport import Transport, exchange_message
from .wire import DnsName, Rcode, RType, make_query

_DEFAULT_SNAPSHOT = "data/public_suffix_snapshot.dat"


@dataclass(frozen=True)
class SuffixRuleSet:
    """Public-suffix rules: plain, wildcard (`*.`), and exception (`!`) entries.

    Lookup is deterministic longest-match; names that match no rule fall to
    the implicit `*` rule (the rightmost label is the suffix).
    """

    rules: frozenset[tuple[bytes, ...]]
    wildcards: frozenset[tuple[bytes, ...]]   # tail after the `*.` label
    exceptions: frozenset[tuple[bytes, ...]]
    version: str = "custom"

    @classmethod
    def from_text(cls, text: str, version: str = "custom") -> "SuffixRuleSet":
        rules, wildcards, exceptions = set(), set(), set()
        for line in text.splitlines():
            line = line.strip()
            if not line or line.startswith("//") or line.startswith("#"):
                continue
            try:
                labels = tuple(l.lower().encode("ascii") for l in line.lstrip("!").split("."))
            except UnicodeEncodeError:
                continue  # unicode rules never match wire-format byte labels
            if line.startswith("!"):
                exceptions.add(labels)
            elif labels[0] == b"*":
                wildcards.add(labels[1:])
            else:
                rules.add(labels)
        return cls(frozenset(rules), frozenset(wildcards), frozenset(exceptions), version)

    @classmethod
    def bundled(cls) -> "SuffixRuleSet":
        text = resources.files(__package__).joinpath(_DEFAULT_SNAPSHOT).read_text("utf-8")
        version = "bundled"
        for line in text.splitlines():
            if line.startswith("// snapshot:"):
                version = line.split(":", 1)[1].strip()
                break
        return cls.from_text(text, version)

    @classmethod
    def from_file(cls, path: str) -> "SuffixRuleSet":
        with open(path, encoding="utf-8") as fh:
            return cls.from_text(fh.read(), version=path)

    def suffix_label_count(self, name: DnsName) -> int:
        """Number of trailing labels forming the public suffix of ``name``."""
        key = tuple(l.lower() for l in name.labels)
        best_exception = 0
        best = 0
        for k in range(1, len(key) + 1):
            tail = key[-k:]
            if tail in self.exceptions:
                best_exception = max(best_exception, k - 1)
            if tail in self.rules:
                best = max(best, k)
            if k >= 2 and tail[1:] in self.wildcards:
                best = max(best, k)
        if best_exception:
            return best_exception
        return best if best else min(1, len(key))

    def public_suffix(self, name: DnsName) -> DnsName:
        return DnsName(name.labels[len(name) - self.suffix_label_count(name):])


def registrable_domain(name: DnsName, rules: SuffixRuleSet) -> Optional[DnsName]:
    """Suffix-plus-one-label, or None when the name is a bare public suffix."""
    count = rules.suffix_label_count(name)
    if len(name) <= count:
        return None
    return DnsName(name.labels[len(name) - count - 1:])


@dataclass(frozen=True)
class SubdomainSplit:
    registrable: Optional[DnsName]
    subdomain_zone: Optional[DnsName]


def subdomain_split(name: DnsName, rules: SuffixRuleSet) -> SubdomainSplit:
    """Candidate delegated subdomain zone: the parent of ``name`` when it sits
    strictly below the registrable domain."""
    reg = registrable_domain(name, rules)
    if reg is None:
        return SubdomainSplit(None, None)
    parent = name.parent()
    return SubdomainSplit(reg, parent if len(parent) > len(reg) else None)


# --- resolution into the pair universe ---


@dataclass
class TargetUniverse:
    """Everything the scanner needs: zones, their NS names, and glue addresses."""

    domains: set[DnsName] = field(default_factory=set)
    ns_names: dict[DnsName, set[DnsName]] = field(default_factory=dict)
    ns_addresses: dict[DnsName, set[str]] = field(default_factory=dict)

    @property
    def pairs(self) -> set[tuple[DnsName, str]]:
        out = set()
        for zone in self.domains:
            for ns in self.ns_names.get(zone, ()):
                for addr in self.ns_addresses.get(ns, ()):
                    out.add((zone, addr))
        return out

    def counts(self) -> dict:
        return {
            "domains": len(self.domains),
            "ns_names": len({n for names in self.ns_names.values() for n in names}),
            "ns_addresses": len({a for addrs in self.ns_addresses.values() for a in addrs}),
            "pairs": len(self.pairs),
        }


@dataclass
class ResolutionStats:
    resolved_domains: int = 0
    domains_without_ns: int = 0
    domains_without_soa: int = 0
    unresolved_ns: int = 0


@dataclass(frozen=True)
class IngestConfig:
    timeout: float = 1.0
    retries: int = 1
    require_soa: bool = False     # optional liveness pre-filter
    include_ipv6: bool = False    # also collect AAAA glue


def resolve_targets(domains: Iterable[DnsName], resolver_address: str,
                    transport: Transport, cfg: IngestConfig = IngestConfig()) -> tuple[TargetUniverse, ResolutionStats]:
    """NS-then-address resolution with caching and negative memoization.

    NS data is taken from answers or, for delegations, from referral
    authority sections; glue arriving in additional sections is harvested
    so it is not re-queried. Domains whose nameservers cannot be resolved
    contribute no pairs and are counted, never fatal.
    """
    universe = TargetUniverse()
    stats = ResolutionStats()
    address_cache: dict[DnsName, set[str]] = {}
    negative: set[DnsName] = set()
    address_types = (RType.A, RType.AAAA) if cfg.include_ipv6 else (RType.A,)

    def query(name: DnsName, rtype: int):
        reply = exchange_message(transport, resolver_address, make_query(name, rtype),
                                 timeout=cfg.timeout, retries=cfg.retries)
        if reply is None or reply.rcode != Rcode.NOERROR:
            return None
        for rr in reply.additional:
            if rr.rtype in address_types:
                address_cache.setdefault(rr.name, set()).add(str(rr.rdata))
        return reply

    def ns_set(zone: DnsName) -> set[DnsName]:
        reply = query(zone, RType.NS)
        if reply is None:
            return set()
        records = [rr for rr in reply.answers if rr.rtype == RType.NS and rr.name == zone]
        if not records:  # a referral carries the delegation in the authority section
            records = [rr for rr in reply.authority if rr.rtype == RType.NS and rr.name == zone]
        return {rr.rdata for rr in records if isinstance(rr.rdata, DnsName)}

    def addresses_for(ns: DnsName) -> set[str]:
        if address_cache.get(ns):
            return address_cache[ns]
        if ns in negative:
            return set()
        for rtype in address_types:
            reply = query(ns, rtype)
            if reply is None:
                continue
            for rr in reply.answers:
                if rr.rtype == rtype and rr.name == ns:
                    address_cache.setdefault(ns, set()).add(str(rr.rdata))
        found = address_cache.get(ns, set())
        if not found:
            negative.add(ns)
            stats.unresolved_ns += 1
        return found

    def has_soa(zone: DnsName) -> bool:
        reply = query(zone, RType.SOA)
        if reply is None:
            return False
        return any(rr.rtype == RType.SOA and rr.name == zone
                   for rr in reply.answers + reply.authority)

    for zone in domains:
        if zone in universe.domains:
            continue
        if cfg.require_soa and not has_soa(zone):
            stats.domains_without_soa += 1
            continue
        ns_names = ns_set(zone)
        if not ns_names:
            stats.domains_without_ns += 1
            continue
        zone_has_address = False
        for ns in ns_names:
            found = addresses_for(ns)
            if found:
                zone_has_address = True
            universe.ns_addresses.setdefault(ns, set()).update(found)
        if not zone_has_address:
            stats.domains_without_ns += 1
            continue
        universe.domains.add(zone)
        universe.ns_names.setdefault(zone, set()).update(ns_names)
        stats.resolved_domains += 1
    return universe, stats


def read_domain_lines(lines: Iterable[str]) -> list[DnsName]:
    out = []
    for line in lines:
        line = line.split("#", 1)[0].strip()
        if line:
            out.append(DnsName.from_text(line))
    return out
