#!/usr/bin/env python3
"""Writes the reference exchange frames with struct.pack, independent of the C++ encoder."""
import os
import struct

HERE = os.path.dirname(os.path.abspath(__file__))
INT64, STRING = 1, 6


def header(query, exchange, producer, partition, sequence, flags, payload):
    return struct.pack("<4sHQIHHIHQ", b"SRXF", 1, query, exchange, producer, partition, sequence, flags,
                       len(payload)) + payload


def int64_column(values):
    rows = len(values)
    has_nulls = any(v is None for v in values)
    out = struct.pack("<BQB", INT64, rows, 1 if has_nulls else 0)
    if has_nulls:
        bits = bytearray((rows + 7) // 8)
        for i, v in enumerate(values):
            if v is not None:
                bits[i // 8] |= 1 << (i % 8)
        out += bytes(bits)
    out += b"".join(struct.pack("<q", 0 if v is None else v) for v in values)
    return out


def string_column(values):
    out = struct.pack("<BQB", STRING, len(values), 0)
    offsets, data = [0], b""
    for v in values:
        data += v.encode()
        offsets.append(len(data))
    return out + b"".join(struct.pack("<Q", o) for o in offsets) + data


def batch(columns):
    return struct.pack("<I", len(columns)) + b"".join(columns)


FRAMES = {
    "empty_batch.bin": header(7, 3, 0, 1, 0, 0, batch([int64_column([])])),
    "int64_nulls.bin": header(7, 3, 2, 1, 5, 0, batch([int64_column([1, None, 3, -4, None, 6, 7, 8, 9])])),
    "string.bin": header(0x0102030405060708, 0xFFFFFFFF, 1, 0, 0, 0, batch([string_column(["ab", "", "siriette"])])),
    "end_of_stream.bin": header(7, 3, 2, 1, 6, 1, b""),
}

if __name__ == "__main__":
    for name, data in FRAMES.items():
        with open(os.path.join(HERE, name), "wb") as f:
            f.write(data)
