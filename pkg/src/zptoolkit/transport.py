"""Datagram transports: a deterministic in-memory bus and a thin UDP socket.

The bus is the only place where source addresses can be forged; spoofing
over real sockets is deliberately unsupported. Every datagram placed on
the bus is recorded in a tap with its send timestamp, which is what the
single-datagram and pacing assertions read.
"""

from __future__ import annotations

import heapq
import random
import socket
import time
from collections import deque
from dataclasses import dataclass
from typing import Callable, Optional, Protocol

from . import wire


@dataclass(frozen=True)
class SimDatagram:
    """One simulated UDP datagram. The source field is a claim, not a fact."""

    source: str
    destination: str
    payload: bytes


@dataclass(frozen=True)
class TapEntry:
    ts: float
    datagram: SimDatagram


class ManualClock:
    """Deterministic clock; advances only when told to."""

    def __init__(self, start: float = 0.0):
        self._now = float(start)

    def now(self) -> float:
        return self._now

    def advance(self, seconds: float) -> None:
        self._now += seconds

    def sleep(self, seconds: float) -> None:
        self.advance(seconds)


class SystemClock:
    def now(self) -> float:
        return time.time()

    def advance(self, seconds: float) -> None:  # real time cannot be advanced
        pass

    def sleep(self, seconds: float) -> None:
        time.sleep(seconds)


Handler = Callable[[SimDatagram, float], list]


class DatagramBus:
    """In-memory datagram network with injectable loss and delay.

    Handlers attached to an address are invoked synchronously during
    ``pump``; anything they return is re-enqueued. Datagrams addressed to
    an address with no handler are dropped (exactly what happens to a
    response sent to a spoofed source). Delivery order is by scheduled
    time, FIFO within a tie, so runs are deterministic.
    """

    def __init__(self, clock: Optional[ManualClock] = None, rng: Optional[random.Random] = None,
                 loss_rate: float = 0.0, drop_filter: Optional[Callable[[SimDatagram], bool]] = None,
                 delay_fn: Optional[Callable[[SimDatagram], float]] = None):
        self.clock = clock or ManualClock()
        self.rng = rng or random.Random(0)
        self.loss_rate = loss_rate
        self.drop_filter = drop_filter
        self.delay_fn = delay_fn
        self.tap: list[TapEntry] = []
        self._handlers: dict[str, Handler] = {}
        self._queue: list[tuple[float, int, SimDatagram]] = []
        self._seq = 0

    def attach(self, address: str, handler: Handler) -> None:
        self._handlers[address] = handler

    def detach(self, address: str) -> None:
        self._handlers.pop(address, None)

    def send(self, dgram: SimDatagram) -> None:
        self.tap.append(TapEntry(self.clock.now(), dgram))
        if self.drop_filter is not None and self.drop_filter(dgram):
            return
        if self.loss_rate and self.rng.random() < self.loss_rate:
            return
        delay = self.delay_fn(dgram) if self.delay_fn else 0.0
        self._seq += 1
        heapq.heappush(self._queue, (self.clock.now() + delay, self._seq, dgram))

    def pump(self, until: Optional[float] = None, max_steps: int = 100_000) -> None:
        """Deliver due datagrams; with ``until``, stop at that sim instant."""
        steps = 0
        while self._queue:
            deliver_at, _, dgram = self._queue[0]
            if until is not None and deliver_at > until:
                return
            steps += 1
            if steps > max_steps:
                raise RuntimeError("datagram storm: pump exceeded max_steps")
            heapq.heappop(self._queue)
            if deliver_at > self.clock.now():
                self.clock.advance(deliver_at - self.clock.now())
            handler = self._handlers.get(dgram.destination)
            if handler is None:
                continue
            for out in handler(dgram, self.clock.now()):
                self.send(out)

    def updates_seen(self, destination: Optional[str] = None) -> list[TapEntry]:
        """Tap entries whose payload parses as an UPDATE request (opcode 5, not a response)."""
        out = []
        for entry in self.tap:
            if destination is not None and entry.datagram.destination != destination:
                continue
            payload = entry.datagram.payload
            if len(payload) < 12:
                continue
            flags = int.from_bytes(payload[2:4], "big")
            if (flags >> 11) & 0xF == wire.Opcode.UPDATE and not flags & 0x8000:
                out.append(entry)
        return out


class ClientEndpoint:
    """A bus endpoint for request/response exchanges, with optional source forgery."""

    def __init__(self, bus: DatagramBus, address: str, allow_spoofing: bool = True):
        self.bus = bus
        self.address = address
        self.allow_spoofing = allow_spoofing
        self.inbox: deque[SimDatagram] = deque()
        self.sent: list[SimDatagram] = []
        bus.attach(address, self._receive)

    def _receive(self, dgram: SimDatagram, now: float) -> list:
        self.inbox.append(dgram)
        return []

    def send(self, payload: bytes, destination: str, source: Optional[str] = None) -> None:
        if source is not None and source != self.address and not self.allow_spoofing:
            raise PermissionError("source spoofing is disabled on this endpoint")
        dgram = SimDatagram(source or self.address, destination, payload)
        self.sent.append(dgram)
        self.bus.send(dgram)

    def exchange(self, payload: bytes, destination: str, timeout: float,
                 source: Optional[str] = None) -> Optional[bytes]:
        """Send, run the network until the deadline, and pop the first reply.

        Returns None on timeout: nothing came back in time (dropped, delayed
        past the deadline, or the reply went to a forged source) and the
        clock lands on the deadline.
        """
        self.inbox.clear()  # anything older belongs to an abandoned exchange
        deadline = self.bus.clock.now() + timeout
        self.send(payload, destination, source)
        self.bus.pump(until=deadline)
        if not self.inbox:
            if deadline > self.bus.clock.now():
                self.bus.clock.advance(deadline - self.bus.clock.now())
            return None
        return self.inbox.popleft().payload


class Transport(Protocol):
    def exchange(self, payload: bytes, destination: str, timeout: float) -> Optional[bytes]:
        ...


def parse_endpoint(address: str, default_port: int = 53) -> tuple[str, int]:
    """Split 'host', 'host:port', or '[v6]:port' into (host, port)."""
    if address.startswith("["):
        host, _, rest = address[1:].partition("]")
        port = int(rest[1:]) if rest.startswith(":") else default_port
        return host, port
    if address.count(":") == 1:
        host, _, port = address.partition(":")
        return host, int(port)
    return address, default_port


class UdpTransport:
    """Real-socket transport for desk-scale interop; no spoofing, ever."""

    def __init__(self, default_port: int = 53):
        self.default_port = default_port

    def exchange(self, payload: bytes, destination: str, timeout: float) -> Optional[bytes]:
        host, port = parse_endpoint(destination, self.default_port)
        family = socket.AF_INET6 if ":" in host else socket.AF_INET
        with socket.socket(family, socket.SOCK_DGRAM) as sock:
            sock.settimeout(timeout)
            try:
                sock.sendto(payload, (host, port))
                data, _ = sock.recvfrom(65535)
            except (socket.timeout, OSError):
                return None
        return data


class SimTransport:
    """Adapts a ClientEndpoint to the scanner's Transport protocol."""

    def __init__(self, bus: DatagramBus, address: str = "scanner.client"):
        self.endpoint = ClientEndpoint(bus, address, allow_spoofing=False)
        self.bus = bus

    def exchange(self, payload: bytes, destination: str, timeout: float) -> Optional[bytes]:
        return self.endpoint.exchange(payload, destination, timeout)


def exchange_message(transport: Transport, destination: str, msg: "wire.DnsMessage",
                     timeout: float = 1.0, retries: int = 0) -> Optional["wire.DnsMessage"]:
    """Send one message and decode the reply; None after all attempts time out."""
    payload = wire.encode_message(msg)
    for _ in range(retries + 1):
        raw = transport.exchange(payload, destination, timeout)
        if raw is not None:
            return wire.decode_message(raw)
    return None
