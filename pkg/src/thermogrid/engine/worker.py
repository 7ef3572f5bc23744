"""TCP worker: executes JOB messages and returns RESULT or ERROR frames."""

from __future__ import annotations

import logging
import os
import socket
import threading

from . import ops, protocol

log = logging.getLogger(__name__)


class WorkerServer:
    """Single-process job executor listening on one endpoint.

    ``die_after_results`` is a fault-injection hook for tests: the process
    exits abruptly (no clean shutdown, no FIN handshake from our side)
    after sending that many RESULT frames.
    """

    def __init__(self, host: str = "127.0.0.1", port: int = 0,
                 die_after_results: int | None = None):
        self.die_after_results = die_after_results
        self._results_sent = 0
        self._lock = threading.Lock()
        self._sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        self._sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        self._sock.bind((host, port))
        self._sock.listen(16)
        self._stopped = threading.Event()

    @property
    def endpoint(self) -> str:
        host, port = self._sock.getsockname()
        return f"{host}:{port}"

    def serve_forever(self) -> None:
        log.info("worker listening on %s", self.endpoint)
        while not self._stopped.is_set():
            try:
                conn, addr = self._sock.accept()
            except OSError:
                break
            threading.Thread(target=self._serve_connection,
                             args=(conn, addr), daemon=True).start()

    def stop(self) -> None:
        self._stopped.set()
        self._sock.close()

    def _serve_connection(self, conn: socket.socket, addr) -> None:
        try:
            msg_type, payload = protocol.recv_frame(conn)
            if msg_type != protocol.MSG_HELLO:
                protocol.send_frame(conn, protocol.MSG_ERROR,
                                    protocol.encode_error(0, "expected HELLO"))
                return
            version = protocol.decode_hello(payload)
            if version != protocol.PROTOCOL_VERSION:
                protocol.send_frame(
                    conn, protocol.MSG_ERROR,
                    protocol.encode_error(
                        0, f"unsupported protocol version {version}, "
                           f"this worker speaks {protocol.PROTOCOL_VERSION}"))
                return
            protocol.send_frame(conn, protocol.MSG_HELLO_ACK)

            while True:
                msg_type, payload = protocol.recv_frame(conn)
                if msg_type == protocol.MSG_PING:
                    protocol.send_frame(conn, protocol.MSG_PONG)
                elif msg_type == protocol.MSG_JOB:
                    self._handle_job(conn, payload)
                else:
                    protocol.send_frame(
                        conn, protocol.MSG_ERROR,
                        protocol.encode_error(
                            0, f"unexpected message type {msg_type}"))
        except protocol.ConnectionClosed:
            pass
        except Exception:
            log.exception("connection from %s failed", addr)
        finally:
            conn.close()

    def _handle_job(self, conn: socket.socket, payload: bytes) -> None:
        job_id, op, params, bands = protocol.decode_job(payload)
        try:
            result = ops.run_op(op, bands, params)
        except Exception as exc:
            protocol.send_frame(conn, protocol.MSG_ERROR,
                                protocol.encode_error(job_id, str(exc)))
            return
        protocol.send_frame(conn, protocol.MSG_RESULT,
                            protocol.encode_result(job_id, op, result))
        if self.die_after_results is not None:
            with self._lock:
                self._results_sent += 1
                if self._results_sent >= self.die_after_results:
                    log.warning("fault injection: exiting after %d results",
                                self._results_sent)
                    os._exit(1)


def serve_worker(bind: str, die_after_results: int | None = None) -> None:
    """Run a worker until interrupted; ``bind`` is host:port."""
    host, _, port = bind.rpartition(":")
    server = WorkerServer(host or "127.0.0.1", int(port),
                          die_after_results=die_after_results)
    print(f"worker listening on {server.endpoint}", flush=True)
    server.serve_forever()
