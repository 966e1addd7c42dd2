#!/usr/bin/env python3
# Copyright 2026 The pii-toolkit Authors
# SPDX-License-Identifier: Apache-2.0
"""Writes cross_producer.piid with plain struct/json, independently of the C++ writer.

Layout: b"PIID", u32 version, u32 header_len, header JSON (UTF-8), then per array
u16 name_len, name, u8 ndim, u64 dims[ndim], f32 payload; all little-endian,
arrays in name order.
"""
import json
import pathlib
import struct
import sys

T = 5  # cls + 2x2 patches


def attention():
    # layer 0: row i puts 0.6 on itself, 0.1 elsewhere; layer 1: one-hot on patch token 4
    out = []
    for i in range(T):
        out += [0.6 if i == j else 0.1 for j in range(T)]
    for i in range(T):
        out += [1.0 if j == 4 else 0.0 for j in range(T)]
    return out


def hidden():
    return [float(l * 100 + t * 10 + d) for l in range(2) for t in range(T) for d in range(3)]


def main(path):
    header = {
        "format_version": 1,
        "producer": "make_piid_fixture.py",
        "sample_id": "fixture-0001",
        "spans": [
            {"label": "cls", "start": 0, "end": 1},
            {"label": "image_tokens", "start": 1, "end": 5},
            {"label": "text_region_patches", "start": 3, "end": 5},
        ],
        "patch_grid": [2, 2],
        "condition": "pii",
        "attributes": {"encoder": "toy", "patch_size": 14},
        "array_count": 2,
    }
    arrays = {
        "attn": ([2, 1, T, T], attention()),
        "hidden": ([2, T, 3], hidden()),
    }
    hb = json.dumps(header, sort_keys=True, separators=(",", ":")).encode()
    out = bytearray(b"PIID")
    out += struct.pack("<II", 1, len(hb))
    out += hb
    for name in sorted(arrays):
        dims, data = arrays[name]
        nb = name.encode()
        out += struct.pack("<H", len(nb)) + nb + struct.pack("<B", len(dims))
        out += struct.pack("<%dQ" % len(dims), *dims)
        out += struct.pack("<%df" % len(data), *data)
    pathlib.Path(path).write_bytes(bytes(out))


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else pathlib.Path(__file__).with_name("cross_producer.piid"))
