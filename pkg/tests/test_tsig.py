"""Transaction signatures: identity, tampering, time window, keyring handling."""

from ipaddress import IPv4Address

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zptoolkit.tsig import (
    Accept,
    AlreadySigned,
    Reject,
    RejectReason,
    TsigKey,
    sign_message,
    verify_message,
)
from zptoolkit.wire import (
    AddRecord,
    DnsName,
    RClass,
    ResourceRecord,
    RType,
    WireError,
    decode_message,
    encode_message,
    make_update,
)

KEY_A = TsigKey(DnsName.from_text("key-a"), b"secret-a-0123456789abc")
KEY_B = TsigKey(DnsName.from_text("key-b"), b"secret-b-0123456789abc")


def probe_update(msg_id=77):
    rr = ResourceRecord(DnsName.from_text("researchstudyzp.example.com"),
                        RType.A, RClass.IN, 120, IPv4Address("192.0.2.80"))
    return make_update(DnsName.from_text("example.com"), [AddRecord(rr)], msg_id=msg_id)


def test_sign_then_verify_accepts_and_strips():
    signed = sign_message(probe_update(), KEY_A, now=1_000_000)
    result = verify_message(signed, {KEY_A}, now=1_000_000)
    assert isinstance(result, Accept)
    assert result.message == probe_update()  # TSIG stripped, core intact


def test_signed_message_survives_wire_round_trip():
    signed = sign_message(probe_update(), KEY_A, now=1_000_000)
    again = decode_message(encode_message(signed))
    assert isinstance(verify_message(again, {KEY_A}, now=1_000_100), Accept)


def test_tampered_payload_rejected():
    signed = sign_message(probe_update(), KEY_A, now=1000)
    blob = bytearray(encode_message(signed))
    idx = blob.index(IPv4Address("192.0.2.80").packed)
    blob[idx] ^= 0x01
    result = verify_message(decode_message(bytes(blob)), {KEY_A}, now=1000)
    assert result == Reject(RejectReason.BAD_SIGNATURE)


def test_time_window_boundary():
    # fudge is fixed at 300 s: t+300 still verifies, t+301 does not
    signed = sign_message(probe_update(), KEY_A, now=5000)
    assert isinstance(verify_message(signed, {KEY_A}, now=5300), Accept)
    assert verify_message(signed, {KEY_A}, now=5301) == Reject(RejectReason.BAD_TIME)
    assert verify_message(signed, {KEY_A}, now=4699) == Reject(RejectReason.BAD_TIME)


def test_unsigned_message_rejected():
    assert verify_message(probe_update(), {KEY_A}, now=0) == Reject(RejectReason.NO_SIGNATURE)


def test_unknown_key_rejected():
    signed = sign_message(probe_update(), KEY_A, now=0)
    assert verify_message(signed, {KEY_B}, now=0) == Reject(RejectReason.UNKNOWN_KEY)


def test_keyring_with_matching_key_accepts():
    signed = sign_message(probe_update(), KEY_A, now=0)
    assert isinstance(verify_message(signed, {KEY_A, KEY_B}, now=0), Accept)


def test_outcome_independent_of_keyring_order():
    signed = sign_message(probe_update(), KEY_A, now=0)
    assert isinstance(verify_message(signed, [KEY_A, KEY_B], now=0), Accept)
    assert isinstance(verify_message(signed, [KEY_B, KEY_A], now=0), Accept)
    assert verify_message(signed, [KEY_B], now=0) == Reject(RejectReason.UNKNOWN_KEY)


def test_double_sign_refused():
    signed = sign_message(probe_update(), KEY_A, now=0)
    with pytest.raises(AlreadySigned):
        sign_message(signed, KEY_A, now=0)


def test_secret_never_in_repr():
    assert b"secret-a" not in repr(KEY_A).encode()
    assert "redacted" in repr(KEY_A)


def test_short_secret_rejected():
    with pytest.raises(ValueError):
        TsigKey(DnsName.from_text("weak"), b"tooshort")


def test_key_name_case_insensitive():
    signed = sign_message(probe_update(), KEY_A, now=0)
    shouting = TsigKey(DnsName.from_text("KEY-A"), KEY_A.secret)
    assert isinstance(verify_message(signed, {shouting}, now=0), Accept)


@given(st.integers(min_value=0))
@settings(max_examples=300, deadline=None)
def test_any_single_bit_mutation_rejected(position):
    signed = sign_message(probe_update(), KEY_A, now=123456)
    blob = bytearray(encode_message(signed))
    bit = position % (len(blob) * 8)
    blob[bit // 8] ^= 1 << (bit % 8)
    try:
        mutated = decode_message(bytes(blob))
    except WireError:
        return  # undecodable counts as rejected
    result = verify_message(mutated, {KEY_A}, now=123456)
    assert isinstance(result, Reject)


@given(st.integers(min_value=0, max_value=0xFFFF), st.integers(min_value=0, max_value=10**9))
@settings(max_examples=50, deadline=None)
def test_sign_verify_identity_property(msg_id, now):
    signed = sign_message(probe_update(msg_id), KEY_A, now=now)
    assert isinstance(verify_message(signed, {KEY_A}, now=now), Accept)
