"""Wire protocol, version 1.

Framing: ``u32 length | u8 msg_type | payload``; the length counts the
type byte plus the payload.  All integers big-endian, samples as IEEE-754
f64 bits.  Tile pixel data ships inside JOB messages so workers need no
shared filesystem.
"""

from __future__ import annotations

import json
import socket
import struct

import numpy as np

from ..raster import DnHistogram, RasterGrid
from ..sceneio import ClassifiedGrid
from .ops import HISTOGRAM_OPS, LABEL_OPS, OP_CODES, OP_NAMES, RASTER_OPS

PROTOCOL_VERSION = 1
MAX_FRAME = 256 * 1024 * 1024

MSG_HELLO = 1
MSG_HELLO_ACK = 2
MSG_JOB = 3
MSG_RESULT = 4
MSG_ERROR = 5
MSG_PING = 6
MSG_PONG = 7


class ProtocolError(RuntimeError):
    pass


class ConnectionClosed(ProtocolError):
    pass


def send_frame(sock: socket.socket, msg_type: int, payload: bytes = b"") -> None:
    length = 1 + len(payload)
    if length > MAX_FRAME:
        raise ProtocolError(f"frame of {length} bytes exceeds {MAX_FRAME}")
    sock.sendall(struct.pack(">IB", length, msg_type) + payload)


def _recv_exact(sock: socket.socket, n: int) -> bytes:
    chunks = []
    remaining = n
    while remaining:
        chunk = sock.recv(min(remaining, 1 << 20))
        if not chunk:
            raise ConnectionClosed("connection closed mid-frame")
        chunks.append(chunk)
        remaining -= len(chunk)
    return b"".join(chunks)


def recv_frame(sock: socket.socket) -> tuple[int, bytes]:
    header = _recv_exact(sock, 5)
    length, msg_type = struct.unpack(">IB", header)
    if length < 1 or length > MAX_FRAME:
        raise ProtocolError(f"invalid frame length {length}")
    payload = _recv_exact(sock, length - 1)
    return msg_type, payload


# ---------------------------------------------------------------------------
# message payloads

def encode_hello() -> bytes:
    return struct.pack(">H", PROTOCOL_VERSION)


def decode_hello(payload: bytes) -> int:
    if len(payload) != 2:
        raise ProtocolError("malformed HELLO")
    return struct.unpack(">H", payload)[0]


def encode_job(job_id: int, op: str, params: dict,
               bands: dict[str, RasterGrid]) -> bytes:
    param_bytes = json.dumps(params, sort_keys=True).encode()
    order = sorted(bands)
    first = bands[order[0]]
    rows, cols = first.shape
    parts = [struct.pack(">QBI", job_id, OP_CODES[op], len(param_bytes)),
             param_bytes,
             struct.pack(">IIB", rows, cols, len(order))]
    for name in order:
        grid = bands[name]
        if grid.shape != (rows, cols):
            raise ProtocolError("all bands of a job must share one shape")
        name_b = name.encode()
        parts.append(struct.pack(">H", len(name_b)) + name_b)
        parts.append(struct.pack(">d", grid.nodata))
        parts.append(grid.data.astype(">f8").tobytes())
    return b"".join(parts)


def decode_job(payload: bytes) -> tuple[int, str, dict, dict[str, RasterGrid]]:
    job_id, op_code, param_len = struct.unpack_from(">QBI", payload, 0)
    pos = 13
    params = json.loads(payload[pos:pos + param_len].decode())
    pos += param_len
    rows, cols, n_bands = struct.unpack_from(">IIB", payload, pos)
    pos += 9
    bands = {}
    for _ in range(n_bands):
        name_len, = struct.unpack_from(">H", payload, pos)
        pos += 2
        name = payload[pos:pos + name_len].decode()
        pos += name_len
        nodata, = struct.unpack_from(">d", payload, pos)
        pos += 8
        count = rows * cols
        data = np.frombuffer(payload, dtype=">f8", count=count, offset=pos)
        pos += count * 8
        bands[name] = RasterGrid(data.reshape(rows, cols).astype("<f8"),
                                 nodata=nodata)
    op = OP_NAMES.get(op_code)
    if op is None:
        raise ProtocolError(f"unknown op code {op_code}")
    return job_id, op, params, bands


def encode_result(job_id: int, op: str, payload_obj) -> bytes:
    head = struct.pack(">QB", job_id, OP_CODES[op])
    if op in RASTER_OPS:
        grid: RasterGrid = payload_obj
        return (head
                + struct.pack(">IId", grid.height, grid.width, grid.nodata)
                + grid.data.astype(">f8").tobytes())
    if op in LABEL_OPS:
        cg: ClassifiedGrid = payload_obj
        legend = json.dumps(cg.legend).encode()
        return (head
                + struct.pack(">III", cg.height, cg.width, len(legend))
                + legend + cg.labels.tobytes())
    if op in HISTOGRAM_OPS:
        hist: DnHistogram = payload_obj
        return (head + struct.pack(">I", len(hist.counts))
                + hist.counts.astype(">i8").tobytes())
    raise ProtocolError(f"cannot encode result for op {op!r}")


def decode_result(payload: bytes):
    job_id, op_code = struct.unpack_from(">QB", payload, 0)
    op = OP_NAMES.get(op_code)
    pos = 9
    if op in RASTER_OPS:
        rows, cols, nodata = struct.unpack_from(">IId", payload, pos)
        pos += 16
        data = np.frombuffer(payload, dtype=">f8", count=rows * cols,
                             offset=pos)
        return job_id, op, RasterGrid(data.reshape(rows, cols).astype("<f8"),
                                      nodata=nodata)
    if op in LABEL_OPS:
        rows, cols, legend_len = struct.unpack_from(">III", payload, pos)
        pos += 12
        legend = json.loads(payload[pos:pos + legend_len].decode())
        pos += legend_len
        labels = np.frombuffer(payload, dtype=np.uint8, count=rows * cols,
                               offset=pos)
        return job_id, op, ClassifiedGrid(labels.reshape(rows, cols).copy(),
                                          legend)
    if op in HISTOGRAM_OPS:
        n, = struct.unpack_from(">I", payload, pos)
        pos += 4
        counts = np.frombuffer(payload, dtype=">i8", count=n, offset=pos)
        return job_id, op, DnHistogram(counts.astype("<i8"))
    raise ProtocolError(f"unknown result op code {op_code}")


def encode_error(job_id: int, reason: str) -> bytes:
    return struct.pack(">Q", job_id) + reason.encode()


def decode_error(payload: bytes) -> tuple[int, str]:
    job_id, = struct.unpack_from(">Q", payload, 0)
    return job_id, payload[8:].decode()
