from __future__ import annotations

import pytest
from hypothesis import given
from hypothesis import strategies as st
from strategies import elements, messages

from offline_cbdc.crypto import field
from offline_cbdc.crypto.encoding import DecodeError, Reader, Writer
from offline_cbdc.messages import (
    CreationWithOpenings,
    PaymentRequest,
    RelatedHistory,
    Response,
    SignedLeaf,
    Status,
    read_element,
    write_element,
)


@given(elements)
def test_element_round_trip(el):
    data = write_element(Writer(), el).getvalue()
    r = Reader(data)
    assert read_element(r) == el
    r.expect_end()


@given(messages)
def test_message_round_trip(msg):
    data = msg.to_bytes()
    assert type(msg).from_bytes(data) == msg
    assert type(msg).from_bytes(data).to_bytes() == data


@given(messages, st.data())
def test_truncated_messages_raise_decode_error(msg, data):
    raw = msg.to_bytes()
    if not raw:
        return
    cut = data.draw(st.integers(0, len(raw) - 1))
    with pytest.raises(DecodeError) as exc:
        type(msg).from_bytes(raw[:cut])
    assert 0 <= exc.value.offset <= cut


def test_unknown_element_tag():
    with pytest.raises(DecodeError) as exc:
        read_element(Reader(b"\x09" + b"\x00" * 40))
    assert exc.value.offset == 0


def test_duplicate_history_element_rejected():
    leaf = SignedLeaf(5, b"sig")
    data = Writer().u32(2)
    write_element(data, leaf)
    write_element(data, leaf)
    with pytest.raises(DecodeError, match="duplicate"):
        RelatedHistory.read(Reader(data.getvalue()))


def test_payment_request_is_small():
    assert len(PaymentRequest(field.P - 1, 2**64 - 1).to_bytes()) <= 128


def test_history_helpers():
    a, b = SignedLeaf(1, b"x"), CreationWithOpenings(0, 0, 2, b"p", 0, 1)
    h = RelatedHistory([a, b])
    assert len(h) == 2 and 1 in h and h.unsigned_count() == 1
    assert len(h.without(1)) == 1
    assert h.replace(SignedLeaf(2, b"y")).get(2) == SignedLeaf(2, b"y")


def test_response_status_codes_are_distinct():
    assert Response.double_spend().status is Status.DOUBLE_SPEND
    assert Response.rejected("x").status is Status.REJECTED
    assert not Response.double_spend().ok
    with pytest.raises(DecodeError):
        Response.from_bytes(b"\x07")
