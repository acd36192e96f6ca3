"""DNS dynamic-update security toolkit.

Wire codec and TSIG for RFC 2136 traffic, an authoritative-nameserver
simulator with configurable update policies, a probe/verify/cleanup
vulnerability scanner, an executable attack taxonomy, input-shaping
helpers, and remediation-campaign analytics.
"""

from .wire import (
    AddRecord,
    DeleteAllAtName,
    DeleteExactRecord,
    DeleteRRset,
    DnsMessage,
    DnsName,
    Opcode,
    Question,
    RClass,
    Rcode,
    ResourceRecord,
    RType,
    decode_message,
    encode_message,
    make_query,
    make_update,
)

__all__ = [
    "AddRecord",
    "DeleteAllAtName",
    "DeleteExactRecord",
    "DeleteRRset",
    "DnsMessage",
    "DnsName",
    "Opcode",
    "Question",
    "RClass",
    "Rcode",
    "ResourceRecord",
    "RType",
    "decode_message",
    "encode_message",
    "make_query",
    "make_update",
]

__version__ = "0.1.0"
