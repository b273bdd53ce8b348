"""Address translation: bounds, round trips, zero-copy spans."""

import struct

import pytest
from hypothesis import given, settings, strategies as st

from mpiwasm.errors import NotInRegion, OutOfBounds
from mpiwasm.memory import (
    GUEST_ADDR_MAX,
    HostSpan,
    LinearMemoryView,
    read_scalar,
    to_guest,
    to_host,
    write_scalar,
)


def make_view(size=4096):
    return LinearMemoryView.of(bytearray(size))


class TestToHost:
    def test_valid_span(self):
        view = make_view()
        span = to_host(view, 100, 50)
        assert span.offset == 100 and span.length == 50
        assert span.start == view.base + 100

    def test_zero_length_at_end(self):
        view = make_view(64)
        assert to_host(view, 64, 0).length == 0

    def test_end_exceeds(self):
        with pytest.raises(OutOfBounds):
            to_host(make_view(64), 60, 5)

    def test_wide_sum_does_not_wrap(self):
        # 0xFFFFFFFF + 2 would pass a 32-bit wrapping check
        with pytest.raises(OutOfBounds):
            to_host(make_view(), 0xFFFFFFFF, 2)

    def test_negative_rejected(self):
        view = make_view()
        with pytest.raises(OutOfBounds):
            to_host(view, -4, 8)
        with pytest.raises(OutOfBounds):
            to_host(view, 0, -1)

    def test_addr_beyond_4gib(self):
        with pytest.raises(OutOfBounds):
            to_host(make_view(), GUEST_ADDR_MAX, 0)


class TestSpan:
    def test_zero_copy_write_through(self):
        view = make_view()
        span = to_host(view, 8, 4)
        span.data()[:] = b"abcd"
        assert view.buffer[8:12] == b"abcd"

    def test_read_and_write(self):
        view = make_view()
        span = to_host(view, 0, 3)
        span.write(b"xyz")
        assert span.read() == b"xyz"

    def test_write_length_mismatch(self):
        with pytest.raises(OutOfBounds):
            to_host(make_view(), 0, 3).write(b"toolong")


class TestToGuest:
    def test_round_trip(self):
        view = make_view()
        for addr in (0, 1, 4095):
            assert to_guest(view, to_host(view, addr, 1).start) == addr

    def test_outside_region(self):
        view = make_view(64)
        with pytest.raises(NotInRegion):
            to_guest(view, view.base - 1)
        with pytest.raises(NotInRegion):
            to_guest(view, view.base + 64)


class TestScalars:
    def test_i32_round_trip(self):
        view = make_view()
        write_scalar(view, 16, "i32", -123)
        assert read_scalar(view, 16, "i32") == -123
        assert struct.unpack_from("<i", view.buffer, 16)[0] == -123

    def test_f64_round_trip(self):
        view = make_view()
        write_scalar(view, 24, "f64", 2.5)
        assert read_scalar(view, 24, "f64") == 2.5

    def test_scalar_bounds(self):
        with pytest.raises(OutOfBounds):
            read_scalar(make_view(16), 14, "i32")


@settings(max_examples=300)
@given(
    addr=st.integers(min_value=-(1 << 34), max_value=1 << 34),
    length=st.integers(min_value=-(1 << 34), max_value=1 << 34),
)
def test_translation_total(addr, length):
    """Any (addr, len) pair either yields an exactly in-bounds span or
    raises OutOfBounds; nothing crashes, nothing partially maps."""
    view = make_view(512)
    try:
        span = to_host(view, addr, length)
    except OutOfBounds:
        assert addr < 0 or length < 0 or addr >= GUEST_ADDR_MAX or addr + length > 512
    else:
        assert 0 <= span.offset and span.offset + span.length <= 512


@given(st.binary(min_size=1, max_size=64), st.integers(min_value=0, max_value=400))
def test_span_payload_round_trip(payload, addr):
    view = make_view(512)
    span = to_host(view, addr, len(payload))
    span.write(payload)
    assert span.read() == payload
