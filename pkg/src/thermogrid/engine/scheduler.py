"""Coordinator: splits a task into tile jobs, runs them on local or remote
workers, retries failures, and aggregates the results.

Work distribution is pull-based by default (an idle slot takes the next
job), which tolerates heterogeneous nodes; ``static=True`` reproduces the
classic one-tile-per-node assignment.  Either way the output is
bit-identical to a single-worker run because every kernel is pure and
pixel-local.
"""

from __future__ import annotations

import logging
import queue
import socket
import threading
from dataclasses import dataclass

from ..raster import DnHistogram, RasterGrid
from . import ops, protocol
from .tiling import aggregate_grids, aggregate_labels, extract, split

log = logging.getLogger(__name__)

PING_TIMEOUT_S = 10.0
CONNECT_TIMEOUT_S = 10.0


class TaskError(RuntimeError):
    pass


@dataclass(frozen=True)
class WorkerDescriptor:
    """`local` with N slots, or a remote host:port endpoint."""

    endpoint: str
    capacity: int = 1

    def __post_init__(self):
        if self.capacity < 1:
            raise ValueError("worker capacity must be >= 1")

    @property
    def is_local(self) -> bool:
        return self.endpoint == "local"


def parse_worker(text: str) -> WorkerDescriptor:
    """Parse ``local:N`` or ``host:port`` worker specs."""
    if text == "local":
        return WorkerDescriptor("local", 1)
    head, _, tail = text.rpartition(":")
    if head == "local":
        return WorkerDescriptor("local", int(tail))
    if not head:
        raise ValueError(f"bad worker spec {text!r}; use local:N or host:port")
    int(tail)  # validates the port
    return WorkerDescriptor(text, 1)


@dataclass
class TileJob:
    job_id: int
    tile: tuple
    op: str
    params: dict
    bands: dict[str, RasterGrid]
    attempts: int = 0


class _Slot:
    """One unit of execution capacity: in-process, or one remote connection."""

    def __init__(self, name: str):
        self.name = name

    def run(self, job: TileJob):
        raise NotImplementedError

    def close(self) -> None:
        pass


class _LocalSlot(_Slot):
    def run(self, job: TileJob):
        return ops.run_op(job.op, job.bands, job.params)


class _RemoteSlot(_Slot):
    def __init__(self, endpoint: str):
        super().__init__(endpoint)
        host, _, port = endpoint.rpartition(":")
        self.sock = socket.create_connection((host, int(port)),
                                             timeout=CONNECT_TIMEOUT_S)
        protocol.send_frame(self.sock, protocol.MSG_HELLO,
                            protocol.encode_hello())
        msg_type, payload = protocol.recv_frame(self.sock)
        if msg_type == protocol.MSG_ERROR:
            _, reason = protocol.decode_error(payload)
            raise TaskError(f"worker {endpoint} rejected handshake: {reason}")
        if msg_type != protocol.MSG_HELLO_ACK:
            raise TaskError(f"worker {endpoint}: unexpected handshake reply "
                            f"{msg_type}")
        self.sock.settimeout(None)

    def ping(self, timeout: float = PING_TIMEOUT_S) -> bool:
        try:
            self.sock.settimeout(timeout)
            protocol.send_frame(self.sock, protocol.MSG_PING)
            msg_type, _ = protocol.recv_frame(self.sock)
            return msg_type == protocol.MSG_PONG
        except (OSError, protocol.ProtocolError):
            return False
        finally:
            try:
                self.sock.settimeout(None)
            except OSError:
                pass

    def run(self, job: TileJob):
        protocol.send_frame(self.sock, protocol.MSG_JOB,
                            protocol.encode_job(job.job_id, job.op,
                                                job.params, job.bands))
        msg_type, payload = protocol.recv_frame(self.sock)
        if msg_type == protocol.MSG_ERROR:
            job_id, reason = protocol.decode_error(payload)
            raise TaskError(f"worker {self.name} failed job {job_id}: "
                            f"{reason}")
        if msg_type != protocol.MSG_RESULT:
            raise protocol.ProtocolError(
                f"unexpected reply type {msg_type} to JOB")
        job_id, _, result = protocol.decode_result(payload)
        if job_id != job.job_id:
            raise protocol.ProtocolError(
                f"result for job {job_id}, expected {job.job_id}")
        return result

    def close(self) -> None:
        try:
            self.sock.close()
        except OSError:
            pass


def _build_slots(workers: list[WorkerDescriptor]) -> list[_Slot]:
    slots: list[_Slot] = []
    for desc in workers:
        if desc.is_local:
            slots.extend(_LocalSlot(f"local[{i}]")
                         for i in range(desc.capacity))
        else:
            for _ in range(desc.capacity):
                slots.append(_RemoteSlot(desc.endpoint))
    return slots


def run_task(op: str, bands: dict[str, RasterGrid], params: dict,
             workers: list[WorkerDescriptor] | None = None,
             retry_limit: int = 1, n_tiles: int | None = None,
             static: bool = False):
    """Split, execute with retries, aggregate.

    Returns a RasterGrid, ClassifiedGrid, or DnHistogram depending on the
    operation.  Any job exhausting its attempts fails the whole task.
    """
    if not bands:
        raise TaskError("task references no bands")
    if workers is None:
        workers = [WorkerDescriptor("local", 1)]
    if not workers:
        raise TaskError("no workers given")

    shape = next(iter(bands.values())).shape
    for name, grid in bands.items():
        if grid.shape != shape:
            raise TaskError(f"band {name!r} shape {grid.shape} differs "
                            f"from {shape}")
    height, width = shape

    slots = _build_slots(workers)
    n = len(slots) if n_tiles is None else n_tiles
    tiles = split(height, width, max(n, 1))

    jobs = [
        TileJob(job_id=i, tile=tile, op=op, params=params,
                bands={name: extract(grid, tile)
                       for name, grid in bands.items()})
        for i, tile in enumerate(tiles)
    ]

    results: dict[int, object] = {}
    failures: dict[int, str] = {}
    job_queue: queue.Queue = queue.Queue()
    lock = threading.Lock()
    done = threading.Event()
    remaining = [len(jobs)]
    live_slots = [len(slots)]

    if static:
        # one contiguous run of jobs per slot, paper-style; a dead slot's
        # jobs still land back on the shared queue below
        for i, job in enumerate(jobs):
            job.params = dict(job.params)
        assignment = [jobs[i::len(slots)] for i in range(len(slots))]
    else:
        for job in jobs:
            job_queue.put(job)
        assignment = [[] for _ in slots]

    def record_failure(job: TileJob, reason: str) -> None:
        with lock:
            failures[job.job_id] = reason
            done.set()

    def finish(job: TileJob, result) -> None:
        with lock:
            results[job.job_id] = result
            remaining[0] -= 1
            if remaining[0] == 0:
                done.set()

    def handle_error(job: TileJob, exc: Exception) -> bool:
        """Re-enqueue or fail; returns True if the slot should die."""
        slot_dead = isinstance(exc, (OSError, protocol.ConnectionClosed))
        if job.attempts > retry_limit:
            record_failure(
                job, f"job {job.job_id} failed after {job.attempts} "
                     f"attempts: {exc}")
        else:
            log.warning("retrying job %d (attempt %d): %s",
                        job.job_id, job.attempts, exc)
            job_queue.put(job)
        return slot_dead

    def slot_loop(slot: _Slot, own_jobs: list[TileJob]) -> None:
        pending = list(own_jobs)
        try:
            while not done.is_set():
                if pending:
                    job = pending.pop(0)
                else:
                    try:
                        job = job_queue.get(timeout=0.05)
                    except queue.Empty:
                        continue
                job.attempts += 1
                try:
                    result = slot.run(job)
                except Exception as exc:
                    if handle_error(job, exc):
                        # connection-level failure: this slot is dead, put
                        # its preassigned work back for the others
                        for leftover in pending:
                            job_queue.put(leftover)
                        return
                    continue
                finish(job, result)
        finally:
            slot.close()
            with lock:
                live_slots[0] -= 1
                if live_slots[0] == 0 and remaining[0] > 0:
                    failures.setdefault(
                        -1, "all workers are dead with jobs outstanding")
                    done.set()

    threads = [
        threading.Thread(target=slot_loop, args=(slot, assignment[i]),
                         daemon=True)
        for i, slot in enumerate(slots)
    ]
    for t in threads:
        t.start()
    done.wait()
    for t in threads:
        t.join(timeout=5.0)

    if failures:
        raise TaskError("task failed: " + "; ".join(failures.values()))
    missing = [j.job_id for j in jobs if j.job_id not in results]
    if missing:
        raise TaskError(f"task incomplete, missing job(s) {missing}")

    ordered = [results[i] for i in range(len(jobs))]
    if op in ops.HISTOGRAM_OPS:
        merged = ordered[0]
        for hist in ordered[1:]:
            merged = merged.merge(hist)
        return merged
    if op in ops.LABEL_OPS:
        return aggregate_labels(tiles, ordered, height, width)
    return aggregate_grids(tiles, ordered, height, width)


def reduce_histogram(band: RasterGrid, workers=None, max_dn: int = 255,
                     retry_limit: int = 1) -> DnHistogram:
    """Global DN histogram via per-tile histograms merged on the coordinator."""
    return run_task(ops.OP_HISTOGRAM, {"dn": band}, {"max_dn": max_dn},
                    workers=workers, retry_limit=retry_limit)
