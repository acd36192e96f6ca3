"""Campaign analytics: rate arithmetic, attribution aggregation, rescan
diffing, Kaplan-Meier survival with interval-censored remediation times,
and notification-message generation.

Everything here is a pure transformation over immutable snapshots.
"""

from __future__ import annotations

import csv
import io
import statistics
from dataclasses import dataclass
from enum import Enum
from ipaddress import ip_address, ip_network
from typing import Callable, Iterable, Mapping, Optional, Sequence

Pair = tuple[str, str]  # (zone, nameserver address)


class AnalyticsError(Exception):
    pass


class ZeroTested(AnalyticsError):
    """A rate was requested for a category with zero tested resources."""


class NegativeTime(AnalyticsError):
    """A survival time came out negative: observation precedes notification."""


class MissingBaseline(AnalyticsError):
    """Nameservers-fixed count is uncomputable without a baseline snapshot."""


# --- snapshots ---


@dataclass(frozen=True)
class CategoryCounts:
    domains: int
    nameservers: int
    pairs: int


@dataclass(frozen=True)
class ScanSnapshot:
    """Timestamped scan result: tested totals and the vulnerable pair set.

    Aggregate-only snapshots (e.g. seeded from published totals) carry
    counts without the pair list; operations that need pair identity
    (diffing, survival) refuse to run on those.
    """

    timestamp: float
    tested: CategoryCounts
    vulnerable: CategoryCounts
    vulnerable_pairs: Optional[frozenset[Pair]] = None

    def __post_init__(self):
        for category in ("domains", "nameservers", "pairs"):
            if getattr(self.vulnerable, category) > getattr(self.tested, category):
                raise ValueError(f"vulnerable {category} exceed tested {category}")
        if self.vulnerable_pairs is not None and derive_counts(self.vulnerable_pairs) != self.vulnerable:
            raise ValueError("vulnerable counts disagree with the pair set")

    @classmethod
    def from_pairs(cls, timestamp: float, tested: CategoryCounts,
                   pairs: Iterable[Pair]) -> "ScanSnapshot":
        pairs = frozenset(pairs)
        return cls(timestamp, tested, derive_counts(pairs), pairs)

    @classmethod
    def from_counts(cls, timestamp: float, tested: CategoryCounts,
                    vulnerable: CategoryCounts) -> "ScanSnapshot":
        return cls(timestamp, tested, vulnerable, None)

    def domains(self) -> frozenset[str]:
        self._need_pairs("domains")
        return frozenset(z for z, _ in self.vulnerable_pairs)

    def nameservers(self) -> frozenset[str]:
        self._need_pairs("nameservers")
        return frozenset(a for _, a in self.vulnerable_pairs)

    def _need_pairs(self, what: str) -> None:
        if self.vulnerable_pairs is None:
            raise AnalyticsError(f"snapshot holds no pair identities; cannot compute {what}")

    def to_json_obj(self) -> dict:
        obj = {
            "ts": self.timestamp,
            "tested": {"domains": self.tested.domains, "ns": self.tested.nameservers,
                       "pairs": self.tested.pairs},
        }
        if self.vulnerable_pairs is not None:
            obj["vulnerable"] = [{"zone": z, "ns": a} for z, a in sorted(self.vulnerable_pairs)]
        else:
            obj["vulnerable_counts"] = {"domains": self.vulnerable.domains,
                                        "ns": self.vulnerable.nameservers,
                                        "pairs": self.vulnerable.pairs}
        return obj

    @classmethod
    def from_json_obj(cls, obj: Mapping) -> "ScanSnapshot":
        tested = CategoryCounts(obj["tested"]["domains"], obj["tested"]["ns"], obj["tested"]["pairs"])
        if "vulnerable" in obj:
            pairs = frozenset((e["zone"], e["ns"]) for e in obj["vulnerable"])
            return cls.from_pairs(obj["ts"], tested, pairs)
        vc = obj["vulnerable_counts"]
        return cls.from_counts(obj["ts"], tested, CategoryCounts(vc["domains"], vc["ns"], vc["pairs"]))


def derive_counts(pairs: Iterable[Pair]) -> CategoryCounts:
    pairs = set(pairs)
    return CategoryCounts(
        domains=len({z for z, _ in pairs}),
        nameservers=len({a for _, a in pairs}),
        pairs=len(pairs),
    )


# --- rates (tested / vulnerable / ratio) ---


@dataclass(frozen=True)
class RateRow:
    tested: int
    vulnerable: int
    fraction: float
    percent: str


def compute_rates(snapshot: ScanSnapshot, decimals: int = 3) -> dict[str, RateRow]:
    """Vulnerability ratio per category, with the percent rendered at ``decimals`` places."""
    rows = {}
    for category in ("domains", "nameservers", "pairs"):
        tested = getattr(snapshot.tested, category)
        vulnerable = getattr(snapshot.vulnerable, category)
        if tested == 0:
            raise ZeroTested(f"no tested {category}")
        fraction = vulnerable / tested
        rows[category] = RateRow(tested, vulnerable, fraction, f"{fraction * 100:.{decimals}f}%")
    return rows


# --- attribution ---


class CsirtType(Enum):
    NATIONAL = "national"
    GOVERNMENTAL = "governmental"
    MILITARY = "military"
    RESEARCH_EDUCATION = "research-education"
    CIIP = "CIIP"
    NON_COMMERCIAL = "non-commercial"


@dataclass(frozen=True)
class Attribution:
    asn: str
    country: str
    csirt_ids: tuple[str, ...]


@dataclass(frozen=True)
class CsirtInfo:
    csirt_id: str
    name: str
    type: CsirtType
    space_size: int


UNKNOWN = Attribution("unknown", "unknown", ("unknown",))


class AttributionMap:
    """Longest-prefix address attribution plus CSIRT metadata.

    Unattributable addresses fall into the ``unknown`` bin rather than
    being dropped.
    """

    def __init__(self, prefixes: Iterable[tuple[str, Attribution]] = (),
                 csirts: Iterable[CsirtInfo] = ()):
        self._prefixes = [(ip_network(p), attr) for p, attr in prefixes]
        self._prefixes.sort(key=lambda e: e[0].prefixlen, reverse=True)
        self.csirts = {c.csirt_id: c for c in csirts}

    def lookup(self, address: str) -> Attribution:
        try:
            addr = ip_address(address.rsplit(":", 1)[0] if address.count(":") == 1 else address)
        except ValueError:
            return UNKNOWN
        for net, attr in self._prefixes:
            if addr.version == net.version and addr in net:
                return attr
        return UNKNOWN

    @classmethod
    def from_csv(cls, prefix_csv: str, csirt_csv: str = "") -> "AttributionMap":
        """Load `prefix,asn,country,csirt_id` rows (ids ';'-separated) and
        `csirt_id,name,type,space_size` rows; a leading header line is skipped."""
        prefixes = []
        for row in _csv_rows(prefix_csv, 4, header_key="prefix"):
            prefix, asn, country, ids = row
            prefixes.append((prefix, Attribution(asn, country, tuple(i for i in ids.split(";") if i))))
        csirts = []
        for row in _csv_rows(csirt_csv, 4, header_key="csirt_id"):
            cid, name, ctype, size = row
            csirts.append(CsirtInfo(cid, name, CsirtType(ctype), int(size)))
        return cls(prefixes, csirts)


def _csv_rows(text: str, width: int, header_key: str) -> list[list[str]]:
    rows = []
    for row in csv.reader(io.StringIO(text)):
        if not row or row[0].startswith("#"):
            continue
        if row[0] == header_key:
            continue
        if len(row) != width:
            raise ValueError(f"expected {width} CSV fields, got {row!r}")
        rows.append([c.strip() for c in row])
    return rows


# --- aggregation by attribution key ---


class AggregationKey(Enum):
    ASN = "asn"
    COUNTRY = "country"
    CSIRT = "csirt"


@dataclass(frozen=True)
class AggregateRow:
    key: str
    vulnerable_domains: int
    vulnerable_nameservers: int


@dataclass(frozen=True)
class ConcentrationStats:
    top_k: int
    top_share: float  # share of vulnerable domains served by the top_k nameservers
    mean_domains_per_nameserver: float
    mean_pairs_per_nameserver: float


@dataclass(frozen=True)
class AggregateReport:
    key: AggregationKey
    rows: tuple[AggregateRow, ...]
    total_domains: int
    total_nameservers: int
    total_pairs: int
    concentration: ConcentrationStats


def nameserver_concentration(pairs: Iterable[Pair], k: int = 3) -> float:
    """Fraction of vulnerable domains covered by the k nameservers serving the most."""
    pairs = set(pairs)
    domains_by_ns: dict[str, set[str]] = {}
    for zone, addr in pairs:
        domains_by_ns.setdefault(addr, set()).add(zone)
    if not domains_by_ns:
        return 0.0
    # ties at the k boundary break on the address so the result is stable
    ranked = sorted(domains_by_ns.items(), key=lambda e: (-len(e[1]), e[0]))
    covered = set().union(*(domains for _, domains in ranked[:k]))
    total = {z for z, _ in pairs}
    return len(covered) / len(total)


def aggregate(snapshot: ScanSnapshot, attribution: AttributionMap,
              key: AggregationKey, top_k: int = 3) -> AggregateReport:
    """Distinct vulnerable domains/nameservers per attribution key, ranked."""
    snapshot._need_pairs("aggregation")
    domains_per_key: dict[str, set[str]] = {}
    ns_per_key: dict[str, set[str]] = {}
    for zone, addr in snapshot.vulnerable_pairs:
        attr = attribution.lookup(addr)
        if key is AggregationKey.ASN:
            key_values = (attr.asn,)
        elif key is AggregationKey.COUNTRY:
            key_values = (attr.country,)
        else:
            key_values = attr.csirt_ids
        for value in key_values:
            domains_per_key.setdefault(value, set()).add(zone)
            ns_per_key.setdefault(value, set()).add(addr)
    rows = tuple(sorted(
        (AggregateRow(v, len(domains_per_key[v]), len(ns_per_key[v])) for v in domains_per_key),
        key=lambda r: (-r.vulnerable_domains, -r.vulnerable_nameservers, r.key),
    ))
    counts = snapshot.vulnerable
    concentration = ConcentrationStats(
        top_k=top_k,
        top_share=nameserver_concentration(snapshot.vulnerable_pairs, top_k),
        mean_domains_per_nameserver=counts.domains / counts.nameservers if counts.nameservers else 0.0,
        mean_pairs_per_nameserver=counts.pairs / counts.nameservers if counts.nameservers else 0.0,
    )
    return AggregateReport(key, rows, counts.domains, counts.nameservers, counts.pairs, concentration)


def aggregate_csv(report: AggregateReport,
                  csirts: Optional[Mapping[str, CsirtInfo]] = None) -> str:
    """Ranked table as CSV; with CSIRT metadata a space_size column is added,
    giving the size-versus-vulnerable-resources scatter data directly."""
    out = io.StringIO()
    writer = csv.writer(out)
    header = [report.key.value, "vulnerable_domains", "vulnerable_nameservers"]
    if csirts is not None:
        header.append("space_size")
    writer.writerow(header)
    for row in report.rows:
        cells = [row.key, row.vulnerable_domains, row.vulnerable_nameservers]
        if csirts is not None:
            info = csirts.get(row.key)
            cells.append(info.space_size if info else "")
        writer.writerow(cells)
    return out.getvalue()


# --- rescan diffing ---


@dataclass(frozen=True)
class DiffSets:
    remediated: frozenset
    persistent: frozenset
    new: frozenset

    @property
    def earlier_count(self) -> int:
        return len(self.remediated) + len(self.persistent)

    @property
    def remediated_rate(self) -> float:
        return len(self.remediated) / self.earlier_count if self.earlier_count else 0.0

    @property
    def persistent_rate(self) -> float:
        return len(self.persistent) / self.earlier_count if self.earlier_count else 0.0


@dataclass(frozen=True)
class ScanDiff:
    pairs: DiffSets
    domains: DiffSets
    nameservers: DiffSets


def _diff(earlier: frozenset, later: frozenset) -> DiffSets:
    return DiffSets(remediated=earlier - later, persistent=earlier & later, new=later - earlier)


def diff_scans(earlier: ScanSnapshot, later: ScanSnapshot) -> ScanDiff:
    """Partition earlier/later vulnerable sets into remediated, persistent, and new."""
    earlier._need_pairs("diffing")
    later._need_pairs("diffing")
    return ScanDiff(
        pairs=_diff(earlier.vulnerable_pairs, later.vulnerable_pairs),
        domains=_diff(earlier.domains(), later.domains()),
        nameservers=_diff(earlier.nameservers(), later.nameservers()),
    )


def csirt_view(snapshot: ScanSnapshot,
               attribution: AttributionMap) -> dict[str, tuple[frozenset[str], frozenset[str]]]:
    """Vulnerable (domains, nameservers) under each CSIRT's jurisdiction."""
    snapshot._need_pairs("per-CSIRT view")
    domains: dict[str, set[str]] = {}
    nameservers: dict[str, set[str]] = {}
    for zone, addr in snapshot.vulnerable_pairs:
        for cid in attribution.lookup(addr).csirt_ids:
            domains.setdefault(cid, set()).add(zone)
            nameservers.setdefault(cid, set()).add(addr)
    return {cid: (frozenset(domains[cid]), frozenset(nameservers[cid])) for cid in domains}


@dataclass(frozen=True)
class GroupPhaseStats:
    """One campaign group's remediation outcome for one resource scope.

    Totals are resource counts across the group's CSIRTs; max/median/mean/sd
    summarize the per-CSIRT remediated and still-vulnerable counts.
    """

    group: str
    csirts: int
    remediated_total: int
    vulnerable_total: int
    remediated_share: float
    max: tuple[int, int]              # (remediated, still vulnerable)
    median: tuple[float, float]
    mean: tuple[float, float]
    sd: tuple[float, float]


def remediation_summary(baseline: ScanSnapshot, current: ScanSnapshot,
                        attribution: AttributionMap,
                        group_of: Callable[[str], str],
                        scope: str = "nameservers") -> dict[str, GroupPhaseStats]:
    """Per-group remediation statistics over per-CSIRT counts.

    ``group_of`` maps a CSIRT id to its campaign group (e.g. notified vs
    control, or constituency type); ``scope`` picks domains or nameservers.
    A CSIRT's remediated count is its baseline resources no longer
    vulnerable in the current scan.
    """
    index = 0 if scope == "domains" else 1
    if scope not in ("domains", "nameservers"):
        raise ValueError(f"scope must be domains or nameservers, not {scope!r}")
    before = csirt_view(baseline, attribution)
    after = csirt_view(current, attribution)
    per_group: dict[str, list[tuple[int, int]]] = {}
    for cid, sets in before.items():
        baseline_items = sets[index]
        still = baseline_items & (after.get(cid, (frozenset(), frozenset()))[index])
        per_group.setdefault(group_of(cid), []).append(
            (len(baseline_items) - len(still), len(still)))
    out = {}
    for group, counts in sorted(per_group.items()):
        remediated = [r for r, _ in counts]
        vulnerable = [v for _, v in counts]
        total = sum(remediated) + sum(vulnerable)
        out[group] = GroupPhaseStats(
            group=group,
            csirts=len(counts),
            remediated_total=sum(remediated),
            vulnerable_total=sum(vulnerable),
            remediated_share=sum(remediated) / total if total else 0.0,
            max=(max(remediated), max(vulnerable)),
            median=(statistics.median(remediated), statistics.median(vulnerable)),
            mean=(statistics.fmean(remediated), statistics.fmean(vulnerable)),
            sd=(statistics.stdev(remediated) if len(remediated) > 1 else 0.0,
                statistics.stdev(vulnerable) if len(vulnerable) > 1 else 0.0),
        )
    return out


# --- Kaplan-Meier survival of vulnerable resources after notification ---


@dataclass(frozen=True)
class RemediationSubject:
    """One notified resource: when it was last seen vulnerable and, if ever,
    first seen remediated. ``first_seen_remediated=None`` means still vulnerable."""

    notified_at: float
    last_seen_vulnerable: float
    first_seen_remediated: Optional[float] = None
    group: str = ""

    def __post_init__(self):
        if self.first_seen_remediated is not None and self.last_seen_vulnerable > self.first_seen_remediated:
            raise ValueError("last_seen_vulnerable must not exceed first_seen_remediated")


@dataclass(frozen=True)
class SurvivalCurve:
    """Right-continuous product-limit survival estimate.

    Remediation times are interval-censored between consecutive scans; the
    event time is the interval midpoint measured from notification.
    Still-vulnerable subjects are right-censored at their last observation.
    """

    times: tuple[float, ...]
    at_risk: tuple[int, ...]
    events: tuple[int, ...]
    survival: tuple[float, ...]
    censoring_intervals: tuple[tuple[float, Optional[float]], ...]

    def survival_at(self, t: float) -> float:
        s = 1.0
        for ti, si in zip(self.times, self.survival):
            if ti <= t:
                s = si
            else:
                break
        return s

    def series(self) -> list[tuple[float, float, int, int]]:
        return [(t, s, n, d) for t, s, n, d in
                zip(self.times, self.survival, self.at_risk, self.events)]


def kaplan_meier(subjects: Sequence[RemediationSubject]) -> SurvivalCurve:
    """Product-limit estimate over interval-censored remediation observations."""
    samples: list[tuple[float, bool]] = []  # (time since notification, is_event)
    intervals: list[tuple[float, Optional[float]]] = []
    for s in subjects:
        lo = s.last_seen_vulnerable - s.notified_at
        if s.first_seen_remediated is None:
            if lo < 0:
                raise NegativeTime(f"censoring time {lo} precedes notification")
            samples.append((lo, False))
            intervals.append((lo, None))
        else:
            hi = s.first_seen_remediated - s.notified_at
            t = (lo + hi) / 2
            if t < 0:
                raise NegativeTime(f"event time {t} precedes notification")
            samples.append((t, True))
            intervals.append((lo, hi))
    event_times = sorted({t for t, is_event in samples if is_event})
    times, at_risk, events, survival = [], [], [], []
    s = 1.0
    for t in event_times:
        # tie convention: subjects censored exactly at t are still at risk at t
        n = sum(1 for u, _ in samples if u >= t)
        d = sum(1 for u, is_event in samples if u == t and is_event)
        s *= 1.0 - d / n
        times.append(t)
        at_risk.append(n)
        events.append(d)
        survival.append(s)
    return SurvivalCurve(tuple(times), tuple(at_risk), tuple(events), tuple(survival),
                         tuple(intervals))


def survival_by_group(subjects: Sequence[RemediationSubject]) -> dict[str, SurvivalCurve]:
    """One curve per subject group (e.g. CSIRT constituency type)."""
    groups: dict[str, list[RemediationSubject]] = {}
    for s in subjects:
        groups.setdefault(s.group, []).append(s)
    return {g: kaplan_meier(members) for g, members in sorted(groups.items())}


def survival_series_csv(curve: SurvivalCurve) -> str:
    lines = ["t,S(t),n_risk,d"]
    for t, s, n, d in curve.series():
        lines.append(f"{t:g},{s:.10g},{n},{d}")
    return "\n".join(lines) + "\n"


def subjects_from_snapshots(snapshots: Sequence[ScanSnapshot], notified_at: float,
                            scope: str = "domain",
                            group_of=None) -> list[RemediationSubject]:
    """Derive interval-censored subjects from a baseline plus rescans.

    The subject universe is the first snapshot's vulnerable set; a subject's
    event interval spans its last sighting and the first later scan where it
    is gone. Subjects present in the final scan are right-censored there.
    """
    if len(snapshots) < 1:
        raise ValueError("need at least a baseline snapshot")
    ordered = sorted(snapshots, key=lambda s: s.timestamp)
    extract = {
        "domain": lambda snap: snap.domains(),
        "nameserver": lambda snap: snap.nameservers(),
        "pair": lambda snap: frozenset(snap.vulnerable_pairs),
    }[scope]
    sets = [(snap.timestamp, extract(snap)) for snap in ordered]
    subjects = []
    for item in sorted(sets[0][1]):
        seen = [ts for ts, items in sets if item in items]
        last_seen = max(seen)
        later = [ts for ts, _ in sets if ts > last_seen]
        first_gone = min(later) if later else None
        subjects.append(RemediationSubject(
            notified_at=notified_at,
            last_seen_vulnerable=last_seen,
            first_seen_remediated=first_gone,
            group=group_of(item) if group_of else "",
        ))
    return subjects


# --- notifications ---


SUBJECT_TEMPLATE = "{xx} domain(s) still vulnerable to zone poisoning, {yy} nameservers fixed"


@dataclass(frozen=True)
class NotificationEntry:
    csirt_id: str
    recipient: str
    vulnerable_domains: tuple[str, ...]
    vulnerable_nameservers: tuple[str, ...]
    nameservers_fixed: Optional[int]
    managing_orgs: tuple[str, ...] = ()


@dataclass(frozen=True)
class NotificationTemplate:
    guide_url: str
    sender: str = "security research team"


@dataclass(frozen=True)
class Notification:
    recipient: str
    subject: str
    body: str


_PROBLEM_TEXT = (
    "Authoritative nameservers under your constituency accept unauthenticated "
    "DNS dynamic update (RFC 2136 UPDATE) requests from arbitrary sources. "
    "A single UDP datagram lets anyone add or delete records in the listed "
    "zones: traffic redirection, mail interception, and fraudulent "
    "certificate issuance all become possible."
)

_REMEDIATION_STEPS = (
    "1. Disable dynamic updates unless they are operationally required.\n"
    "2. Never use source-IP allow lists alone; UDP sources are forgeable.\n"
    "3. Require TSIG-signed updates (key-based ACLs) on every writable zone.\n"
    "4. Re-test each nameserver after the configuration change."
)


def make_notification_batch(entries: Sequence[NotificationEntry],
                            template: NotificationTemplate) -> list[Notification]:
    """One message per CSIRT with vulnerable resources; zero-domain entries are skipped."""
    batch = []
    for entry in entries:
        if not entry.vulnerable_domains:
            continue
        if entry.nameservers_fixed is None:
            raise MissingBaseline(f"no baseline for {entry.csirt_id}; nameservers-fixed unknown")
        subject = SUBJECT_TEMPLATE.format(xx=len(entry.vulnerable_domains),
                                          yy=entry.nameservers_fixed)
        body = "\n".join([
            "i. Problem",
            _PROBLEM_TEXT,
            "",
            "ii. Vulnerable resources",
            "domains: " + ", ".join(sorted(entry.vulnerable_domains)),
            "nameservers: " + ", ".join(sorted(entry.vulnerable_nameservers)),
            "",
            "iii. Managing organizations",
            ", ".join(entry.managing_orgs) if entry.managing_orgs else "unknown",
            "",
            "iv. Remediation steps",
            _REMEDIATION_STEPS,
            f"Guide: {template.guide_url}",
            "",
            f"-- {template.sender}",
        ])
        batch.append(Notification(entry.recipient, subject, body))
    return batch


def notification_entries(baseline: ScanSnapshot, current: ScanSnapshot,
                         attribution: AttributionMap) -> list[NotificationEntry]:
    """Assemble per-CSIRT notification inputs from a baseline and the current scan."""
    before = csirt_view(baseline, attribution)
    after = csirt_view(current, attribution)
    empty = (frozenset(), frozenset())
    orgs: dict[str, set[str]] = {}
    for _, addr in current.vulnerable_pairs:
        attr = attribution.lookup(addr)
        for cid in attr.csirt_ids:
            orgs.setdefault(cid, set()).add(f"AS{attr.asn}")
    entries = []
    for cid in sorted(set(before) | set(after)):
        info = attribution.csirts.get(cid)
        fixed = len(before.get(cid, empty)[1] - after.get(cid, empty)[1])
        entries.append(NotificationEntry(
            csirt_id=cid,
            recipient=info.name if info else cid,
            vulnerable_domains=tuple(sorted(after.get(cid, empty)[0])),
            vulnerable_nameservers=tuple(sorted(after.get(cid, empty)[1])),
            nameservers_fixed=fixed,
            managing_orgs=tuple(sorted(orgs.get(cid, set()))),
        ))
    return entries


# --- popularity-rank distribution ---


@dataclass(frozen=True)
class RankDistribution:
    bucket_width: int
    histogram: tuple[tuple[int, int], ...]  # (bucket start rank, matches in bucket)
    matches: tuple[tuple[str, int], ...]    # (domain, rank), rank ascending
    min_rank: Optional[int]


def rank_distribution(vulnerable_domains: Iterable[str], popularity: Sequence[str],
                      bucket_width: int = 100_000) -> RankDistribution:
    """Locate vulnerable domains inside a rank-ordered popularity list."""
    rank_of = {name: i + 1 for i, name in enumerate(popularity)}
    matches = sorted(((d, rank_of[d]) for d in set(vulnerable_domains) if d in rank_of),
                     key=lambda e: e[1])
    buckets: dict[int, int] = {}
    for _, rank in matches:
        start = ((rank - 1) // bucket_width) * bucket_width + 1
        buckets[start] = buckets.get(start, 0) + 1
    histogram = tuple(sorted(buckets.items()))
    return RankDistribution(
        bucket_width=bucket_width,
        histogram=histogram,
        matches=tuple(matches),
        min_rank=matches[0][1] if matches else None,
    )
