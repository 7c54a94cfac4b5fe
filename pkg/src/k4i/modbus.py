"""Modbus TCP: MBAP framing, PDU codec, request service, and a client.

Wire format follows the public Modbus Application Protocol / Modbus TCP
specifications: big-endian throughout, MBAP header of transaction id,
protocol id (always 0), length (unit id + PDU bytes), unit id.

Supported function codes:

  0x01 Read Coils              0x05 Write Single Coil
  0x02 Read Discrete Inputs    0x06 Write Single Register
  0x03 Read Holding Registers  0x0F Write Multiple Coils
  0x04 Read Input Registers    0x10 Write Multiple Registers

Anything else is answered with an exception PDU (function | 0x80 plus a one
byte exception code). serve_request is total: arbitrary PDU bytes always
produce a response, never an unhandled error.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

from .errors import IncompleteFrameError, ProtocolError
from .registers import BIT_TABLES, ModbusDataStore, Table

MBAP_SIZE = 7
MAX_PDU_BODY = 252

READ_COILS = 0x01
READ_DISCRETE_INPUTS = 0x02
READ_HOLDING_REGISTERS = 0x03
READ_INPUT_REGISTERS = 0x04
WRITE_SINGLE_COIL = 0x05
WRITE_SINGLE_REGISTER = 0x06
WRITE_MULTIPLE_COILS = 0x0F
WRITE_MULTIPLE_REGISTERS = 0x10

SUPPORTED_FUNCTIONS = (
    READ_COILS, READ_DISCRETE_INPUTS, READ_HOLDING_REGISTERS, READ_INPUT_REGISTERS,
    WRITE_SINGLE_COIL, WRITE_SINGLE_REGISTER, WRITE_MULTIPLE_COILS, WRITE_MULTIPLE_REGISTERS,
)

EXC_ILLEGAL_FUNCTION = 0x01
EXC_ILLEGAL_DATA_ADDRESS = 0x02
EXC_ILLEGAL_DATA_VALUE = 0x03

_READ_TABLE = {
    READ_COILS: Table.COILS,
    READ_DISCRETE_INPUTS: Table.DISCRETE_INPUTS,
    READ_HOLDING_REGISTERS: Table.HOLDING_REGISTERS,
    READ_INPUT_REGISTERS: Table.INPUT_REGISTERS,
}


@dataclass(frozen=True)
class ModbusPdu:
    function: int
    body: bytes = b""

    def __post_init__(self):
        if not 0 <= self.function <= 0xFF:
            raise ProtocolError(f"function code {self.function} out of byte range")
        if len(self.body) > MAX_PDU_BODY:
            raise ProtocolError(f"PDU body of {len(self.body)} bytes exceeds {MAX_PDU_BODY}")

    @property
    def is_exception(self) -> bool:
        return bool(self.function & 0x80)

    @property
    def exception_code(self) -> int | None:
        return self.body[0] if self.is_exception and self.body else None


@dataclass(frozen=True)
class ModbusFrame:
    transaction_id: int
    unit_id: int
    pdu: ModbusPdu
    protocol_id: int = 0

    def __post_init__(self):
        if not 0 <= self.transaction_id <= 0xFFFF:
            raise ProtocolError("transaction id out of 16-bit range")
        if not 0 <= self.unit_id <= 0xFF:
            raise ProtocolError("unit id out of byte range")


def exception_pdu(function: int, code: int) -> ModbusPdu:
    return ModbusPdu((function | 0x80) & 0xFF, bytes([code]))


def encode_frame(frame: ModbusFrame) -> bytes:
    length = 1 + 1 + len(frame.pdu.body)  # unit id + function + body
    header = struct.pack(">HHHB", frame.transaction_id, frame.protocol_id,
                         length, frame.unit_id)
    return header + bytes([frame.pdu.function]) + frame.pdu.body


def decode_frame(data: bytes) -> tuple[ModbusFrame, int]:
    """Parse one frame off the front of ``data``; returns (frame, bytes consumed).

    Raises IncompleteFrameError when more bytes are needed and ProtocolError
    for malformed input.
    """
    if len(data) < MBAP_SIZE:
        raise IncompleteFrameError(f"need {MBAP_SIZE} header bytes, have {len(data)}")
    txn, proto, length, unit = struct.unpack(">HHHB", data[:MBAP_SIZE])
    if proto != 0:
        raise ProtocolError(f"protocol id must be 0, got {proto}")
    if length < 2 or length > 1 + 1 + MAX_PDU_BODY:
        raise ProtocolError(f"implausible MBAP length {length}")
    total = MBAP_SIZE - 1 + length
    if len(data) < total:
        raise IncompleteFrameError(f"need {total} bytes, have {len(data)}")
    pdu_bytes = data[MBAP_SIZE:total]
    pdu = ModbusPdu(pdu_bytes[0], pdu_bytes[1:])
    return ModbusFrame(txn, unit, pdu, proto), total


# ---------------------------------------------------------------------------
# Request service over a PLC data store
# ---------------------------------------------------------------------------

def _pack_bits(bits: list[bool]) -> bytes:
    out = bytearray((len(bits) + 7) // 8)
    for i, bit in enumerate(bits):
        if bit:
            out[i // 8] |= 1 << (i % 8)
    return bytes(out)


def serve_request(store: ModbusDataStore, request: ModbusPdu) -> ModbusPdu:
    """Apply one request PDU to the data store and build the response PDU."""
    function = request.function
    if function not in SUPPORTED_FUNCTIONS:
        return exception_pdu(function, EXC_ILLEGAL_FUNCTION)
    body = request.body
    try:
        if function in _READ_TABLE:
            if len(body) != 4:
                return exception_pdu(function, EXC_ILLEGAL_DATA_VALUE)
            address, quantity = struct.unpack(">HH", body)
            table = _READ_TABLE[function]
            limit = 2000 if table in BIT_TABLES else 125
            if not 1 <= quantity <= limit:
                return exception_pdu(function, EXC_ILLEGAL_DATA_VALUE)
            addresses = range(address, address + quantity)
            if not all(store.is_mapped(table, a) for a in addresses):
                return exception_pdu(function, EXC_ILLEGAL_DATA_ADDRESS)
            if table in BIT_TABLES:
                payload = _pack_bits([store.read_bit(table, a) for a in addresses])
            else:
                payload = b"".join(struct.pack(">H", store.read_word(table, a))
                                   for a in addresses)
            return ModbusPdu(function, bytes([len(payload)]) + payload)

        if function == WRITE_SINGLE_COIL:
            if len(body) != 4:
                return exception_pdu(function, EXC_ILLEGAL_DATA_VALUE)
            address, value = struct.unpack(">HH", body)
            if value not in (0x0000, 0xFF00):
                return exception_pdu(function, EXC_ILLEGAL_DATA_VALUE)
            if not store.is_mapped(Table.COILS, address):
                return exception_pdu(function, EXC_ILLEGAL_DATA_ADDRESS)
            store.write_bit(Table.COILS, address, value == 0xFF00)
            return ModbusPdu(function, body)  # echo

        if function == WRITE_SINGLE_REGISTER:
            if len(body) != 4:
                return exception_pdu(function, EXC_ILLEGAL_DATA_VALUE)
            address, value = struct.unpack(">HH", body)
            if not store.is_mapped(Table.HOLDING_REGISTERS, address):
                return exception_pdu(function, EXC_ILLEGAL_DATA_ADDRESS)
            store.write_word(Table.HOLDING_REGISTERS, address, value)
            return ModbusPdu(function, body)  # echo

        if function == WRITE_MULTIPLE_COILS:
            if len(body) < 6:
                return exception_pdu(function, EXC_ILLEGAL_DATA_VALUE)
            address, quantity, byte_count = struct.unpack(">HHB", body[:5])
            bit_bytes = body[5:]
            if (not 1 <= quantity <= 1968 or byte_count != (quantity + 7) // 8
                    or len(bit_bytes) != byte_count):
                return exception_pdu(function, EXC_ILLEGAL_DATA_VALUE)
            addresses = range(address, address + quantity)
            if not all(store.is_mapped(Table.COILS, a) for a in addresses):
                return exception_pdu(function, EXC_ILLEGAL_DATA_ADDRESS)
            for i, a in enumerate(addresses):
                bit = bool(bit_bytes[i // 8] & (1 << (i % 8)))
                store.write_bit(Table.COILS, a, bit)
            return ModbusPdu(function, body[:4])

        if function == WRITE_MULTIPLE_REGISTERS:
            if len(body) < 7:
                return exception_pdu(function, EXC_ILLEGAL_DATA_VALUE)
            address, quantity, byte_count = struct.unpack(">HHB", body[:5])
            words = body[5:]
            if (not 1 <= quantity <= 123 or byte_count != 2 * quantity
                    or len(words) != byte_count):
                return exception_pdu(function, EXC_ILLEGAL_DATA_VALUE)
            addresses = range(address, address + quantity)
            if not all(store.is_mapped(Table.HOLDING_REGISTERS, a) for a in addresses):
                return exception_pdu(function, EXC_ILLEGAL_DATA_ADDRESS)
            for i, a in enumerate(addresses):
                value = struct.unpack(">H", words[2 * i:2 * i + 2])[0]
                store.write_word(Table.HOLDING_REGISTERS, a, value)
            return ModbusPdu(function, body[:4])
    except struct.error:
        return exception_pdu(function, EXC_ILLEGAL_DATA_VALUE)

    return exception_pdu(function, EXC_ILLEGAL_FUNCTION)  # pragma: no cover


# ---------------------------------------------------------------------------
# Request helpers shared by clients, attack tooling, and tests
# ---------------------------------------------------------------------------

def read_request(function: int, address: int, quantity: int) -> ModbusPdu:
    return ModbusPdu(function, struct.pack(">HH", address, quantity))


def write_single_coil(address: int, on: bool) -> ModbusPdu:
    return ModbusPdu(WRITE_SINGLE_COIL, struct.pack(">HH", address, 0xFF00 if on else 0x0000))


def write_single_register(address: int, value: int) -> ModbusPdu:
    return ModbusPdu(WRITE_SINGLE_REGISTER, struct.pack(">HH", address, value & 0xFFFF))


def parse_read_bits(response: ModbusPdu, quantity: int) -> list[bool]:
    payload = response.body[1:]
    return [bool(payload[i // 8] & (1 << (i % 8))) for i in range(quantity)]


def parse_read_words(response: ModbusPdu) -> list[int]:
    payload = response.body[1:]
    return [struct.unpack(">H", payload[i:i + 2])[0] for i in range(0, len(payload), 2)]


class FrameAccumulator:
    """Byte-stream reassembler for TCP transports."""

    def __init__(self):
        self._buffer = b""

    def feed(self, data: bytes) -> list[ModbusFrame]:
        self._buffer += data
        frames = []
        while self._buffer:
            try:
                frame, consumed = decode_frame(self._buffer)
            except IncompleteFrameError:
                break
            self._buffer = self._buffer[consumed:]
            frames.append(frame)
        return frames
