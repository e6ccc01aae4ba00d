"""Subprocess client for external learners speaking the stdio protocol.

The client owns the request ids (strictly increasing), enforces one in-flight
request at a time, and validates every inbound line before anyone consumes
it. A dead or silent adapter surfaces as AdapterCrashError so the caller can
fail one trial without touching the rest.
"""

from __future__ import annotations

import queue
import shlex
import subprocess
import threading
from typing import Any

import numpy as np

from ..core.bundle import PredictionBundle
from ..errors import AdapterCrashError, AdapterError, AdapterProtocolError
from . import protocol

TRAIN_TIMEOUT: float | None = None  # training may legitimately take hours
PREDICT_TIMEOUT: float | None = 300.0
CONTROL_TIMEOUT: float | None = 30.0  # hello / shutdown


class _Reader:
    """Background thread draining the adapter's stdout into a queue."""

    _EOF = object()

    def __init__(self, stream) -> None:
        self._queue: queue.Queue = queue.Queue()
        self._thread = threading.Thread(target=self._run, args=(stream,), daemon=True)
        self._thread.start()

    def _run(self, stream) -> None:
        for line in stream:
            self._queue.put(line)
        self._queue.put(self._EOF)

    def next_line(self, timeout: float | None) -> str | None:
        """The next stdout line, None at EOF; raises on timeout."""
        try:
            item = self._queue.get(timeout=timeout)
        except queue.Empty:
            raise AdapterError(f"adapter sent nothing for {timeout} s") from None
        if item is self._EOF:
            return None
        return item


class AdapterClient:
    """One protocol session with one adapter subprocess."""

    def __init__(self, command: str | list[str]) -> None:
        argv = shlex.split(command) if isinstance(command, str) else list(command)
        if not argv:
            raise AdapterError("empty adapter command")
        self.argv = argv
        try:
            self._proc = subprocess.Popen(
                argv,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=subprocess.DEVNULL,
                text=True,
                encoding="utf-8",
                bufsize=1,
            )
        except OSError as exc:
            raise AdapterCrashError(f"could not spawn adapter {argv[0]!r}: {exc}") from exc
        self._reader = _Reader(self._proc.stdout)
        self._next_id = 1
        self._closed = False
        self.fields: tuple[str, ...] = ()

    def __enter__(self) -> "AdapterClient":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()

    def _claim_id(self) -> int:
        ident = self._next_id
        self._next_id += 1
        return ident

    def send_raw(self, message: dict, timeout: float | None) -> dict:
        """Write one request line, read exactly one response line.

        Low level: the caller provides the full message (including id) and
        gets the decoded response, error responses included.
        """
        if self._closed or self._proc.poll() is not None:
            raise AdapterCrashError(
                f"adapter exited with code {self._proc.poll()} before the request"
            )
        line = protocol.encode_message(message)
        try:
            self._proc.stdin.write(line + "\n")
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise AdapterCrashError(f"adapter closed its stdin pipe: {exc}") from exc
        reply = self._reader.next_line(timeout)
        if reply is None:
            raise AdapterCrashError(
                f"adapter exited (code {self._proc.wait()}) instead of responding"
            )
        return protocol.decode_message(reply)

    def _request(self, message: dict, timeout: float | None) -> dict:
        response = self.send_raw(message, timeout)
        if response.get("id") != message["id"]:
            raise AdapterProtocolError(
                f"response id {response.get('id')} does not match request id {message['id']}"
            )
        if response["kind"] == protocol.ERROR:
            code = response.get("code", "?")
            raise AdapterProtocolError(
                f"adapter error {code}: {response.get('message', '')}", code=code
            )
        return response

    def handshake(self, dataset: str, seed: int) -> tuple[str, ...]:
        """hello → ack; returns the bundle fields the adapter can produce."""
        message = protocol.hello(self._claim_id(), dataset, seed)
        response = self._request(message, CONTROL_TIMEOUT)
        if response["kind"] != protocol.ACK:
            raise AdapterProtocolError(f"expected ack to hello, got {response['kind']!r}")
        if response.get("version") != protocol.PROTOCOL_VERSION:
            raise AdapterProtocolError(
                f"adapter speaks version {response.get('version')!r}, "
                f"client needs {protocol.PROTOCOL_VERSION}"
            )
        fields = response.get("fields")
        if not isinstance(fields, list) or not all(isinstance(f, str) for f in fields):
            raise AdapterProtocolError("hello ack must list supported bundle fields")
        unknown = [f for f in fields if f not in protocol.WIRE_FIELDS]
        if unknown:
            raise AdapterProtocolError(f"adapter advertises unknown fields {unknown}")
        self.fields = tuple(fields)
        return self.fields

    def train(
        self,
        labeled: list[int],
        config: dict,
        mode: str = protocol.MODE_SUPERVISED,
        unlabeled: list[int] | None = None,
        timeout: float | None = TRAIN_TIMEOUT,
    ) -> dict:
        """train / train_ssl → ack payload (wall_time, train_loss)."""
        ident = self._claim_id()
        if mode == protocol.MODE_SSL:
            message = protocol.train_ssl(ident, list(labeled), list(unlabeled or []), config)
        else:
            message = protocol.train(ident, list(labeled), config, mode=mode)
        response = self._request(message, timeout)
        if response["kind"] != protocol.ACK:
            raise AdapterProtocolError(f"expected ack to train, got {response['kind']!r}")
        return response

    def predict(
        self,
        indices: list[int],
        fields: list[str],
        timeout: float | None = PREDICT_TIMEOUT,
    ) -> PredictionBundle:
        """predict → validated PredictionBundle; the core never trusts the wire."""
        message = protocol.predict(self._claim_id(), list(indices), list(fields))
        response = self._request(message, timeout)
        if response["kind"] != protocol.BUNDLE:
            raise AdapterProtocolError(f"expected bundle, got {response['kind']!r}")
        got_indices, arrays = protocol.decode_bundle_fields(response)
        if got_indices != list(indices):
            raise AdapterProtocolError("bundle row order does not match the request")
        missing = [f for f in fields if f not in arrays]
        if missing:
            raise AdapterProtocolError(f"bundle is missing requested fields {missing}")
        votes = arrays.get("ensemble_votes")
        if votes is not None:
            arrays["ensemble_votes"] = np.asarray(votes).astype(np.int64)
        return PredictionBundle(indices=tuple(indices), **arrays)

    def shutdown(self, timeout: float | None = CONTROL_TIMEOUT) -> None:
        response = self._request(protocol.shutdown(self._claim_id()), timeout)
        if response["kind"] != protocol.ACK:
            raise AdapterProtocolError(f"expected ack to shutdown, got {response['kind']!r}")

    def close(self) -> None:
        """Best-effort clean shutdown, then make sure the process is gone."""
        if self._closed:
            return
        self._closed = True
        if self._proc.poll() is None:
            try:
                self._proc.stdin.close()
            except OSError:
                pass
            try:
                self._proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                self._proc.kill()
                self._proc.wait()

    @property
    def returncode(self) -> int | None:
        return self._proc.poll()
