"""Wire format for external learners: line-delimited JSON over stdio.

One message per line, UTF-8, numbers as decimal. Large float arrays may be
base64-encoded instead: a field value of ``{"data_b64": ..., "shape": [...]}``
carries float32 little-endian bytes. Requests and responses pair by ``id``,
and ids strictly increase within a session.
"""

from __future__ import annotations

import base64
import json
from typing import Any

import numpy as np

from ..errors import AdapterProtocolError

PROTOCOL_VERSION = 1

HELLO = "hello"
TRAIN = "train"
TRAIN_SSL = "train_ssl"
PREDICT = "predict"
SHUTDOWN = "shutdown"
ACK = "ack"
BUNDLE = "bundle"
ERROR = "error"

REQUEST_KINDS = (HELLO, TRAIN, TRAIN_SSL, PREDICT, SHUTDOWN)
RESPONSE_KINDS = (ACK, BUNDLE, ERROR)
MESSAGE_KINDS = REQUEST_KINDS + RESPONSE_KINDS

# Error codes an adapter may return.
E_VERSION = "version"
E_PROTOCOL = "protocol"
E_BAD_MODE = "bad_mode"
E_UNSUPPORTED_FIELD = "unsupported_field"
E_IO = "io"
E_INTERNAL = "internal"

# Bundle fields that may cross the wire, in canonical order.
WIRE_FIELDS = ("probs", "features", "pred_loss", "ensemble_votes", "entropy_maps", "disc_scores")

MODE_SUPERVISED = "supervised"
MODE_SSL = "ssl"


def encode_message(message: dict) -> str:
    """Serialize one message to its wire line (no trailing newline)."""
    return json.dumps(message, separators=(",", ":"), sort_keys=True)


def decode_message(line: str) -> dict:
    """Parse and structurally validate one wire line."""
    try:
        doc = json.loads(line)
    except json.JSONDecodeError as exc:
        raise AdapterProtocolError(f"malformed message line: {exc}") from exc
    if not isinstance(doc, dict):
        raise AdapterProtocolError(f"message must be a JSON object, got {type(doc).__name__}")
    kind = doc.get("kind")
    if kind not in MESSAGE_KINDS:
        raise AdapterProtocolError(f"unknown message kind {kind!r}")
    ident = doc.get("id")
    if not isinstance(ident, int) or isinstance(ident, bool) or ident < 1:
        raise AdapterProtocolError(f"message id must be a positive integer, got {ident!r}")
    return doc


def encode_f32(array: np.ndarray) -> dict:
    """Pack an array as base64 float32 little-endian with its shape."""
    arr = np.asarray(array, dtype="<f4")
    return {
        "data_b64": base64.b64encode(np.ascontiguousarray(arr).tobytes()).decode("ascii"),
        "shape": list(arr.shape),
    }


def decode_array(value: Any) -> np.ndarray:
    """Accept either a plain JSON array or a data_b64 block; returns float64."""
    if isinstance(value, dict):
        if "data_b64" not in value or "shape" not in value:
            raise AdapterProtocolError("packed array needs data_b64 and shape")
        shape = value["shape"]
        if not isinstance(shape, list) or not all(
            isinstance(d, int) and d >= 0 for d in shape
        ):
            raise AdapterProtocolError(f"bad packed-array shape {shape!r}")
        try:
            raw = base64.b64decode(value["data_b64"], validate=True)
        except Exception as exc:
            raise AdapterProtocolError(f"bad base64 payload: {exc}") from exc
        count = int(np.prod(shape)) if shape else 1
        if len(raw) != 4 * count:
            raise AdapterProtocolError(
                f"payload holds {len(raw)} bytes, shape {shape} needs {4 * count}"
            )
        return np.frombuffer(raw, dtype="<f4").reshape(shape).astype(np.float64)
    try:
        return np.asarray(value, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise AdapterProtocolError(f"field is not numeric: {exc}") from exc


def hello(ident: int, dataset: str, seed: int, version: int = PROTOCOL_VERSION) -> dict:
    return {"kind": HELLO, "id": ident, "version": version, "dataset": dataset, "seed": seed}


def train(ident: int, labeled: list[int], config: dict, mode: str = MODE_SUPERVISED) -> dict:
    return {"kind": TRAIN, "id": ident, "labeled": labeled, "mode": mode, "config": config}


def train_ssl(ident: int, labeled: list[int], unlabeled: list[int], config: dict) -> dict:
    return {
        "kind": TRAIN_SSL,
        "id": ident,
        "labeled": labeled,
        "unlabeled": unlabeled,
        "mode": MODE_SSL,
        "config": config,
    }


def predict(ident: int, indices: list[int], fields: list[str]) -> dict:
    return {"kind": PREDICT, "id": ident, "indices": indices, "fields": fields}


def shutdown(ident: int) -> dict:
    return {"kind": SHUTDOWN, "id": ident}


def ack(ident: int, **payload: Any) -> dict:
    return {"kind": ACK, "id": ident, **payload}


def error(ident: int, code: str, message: str) -> dict:
    return {"kind": ERROR, "id": ident, "code": code, "message": message}


def bundle_response(ident: int, indices: list[int], fields: dict[str, Any]) -> dict:
    doc: dict[str, Any] = {"kind": BUNDLE, "id": ident, "indices": list(indices)}
    for name, value in fields.items():
        if name not in WIRE_FIELDS:
            raise AdapterProtocolError(f"unknown bundle field {name!r}")
        doc[name] = value
    return doc


def decode_bundle_fields(doc: dict) -> tuple[list[int], dict[str, Any]]:
    """Pull indices and raw per-field arrays out of a bundle message.

    entropy_maps decodes to a list of 2-d arrays; every other field decodes
    to one array. Validation beyond shapes belongs to the core bundle type.
    """
    indices = doc.get("indices")
    if not isinstance(indices, list) or not all(
        isinstance(i, int) and not isinstance(i, bool) for i in indices
    ):
        raise AdapterProtocolError("bundle indices must be a list of integers")
    out: dict[str, Any] = {}
    for name in WIRE_FIELDS:
        if name not in doc:
            continue
        value = doc[name]
        if name == "entropy_maps":
            if not isinstance(value, list):
                raise AdapterProtocolError("entropy_maps must be a list of per-image maps")
            out[name] = tuple(decode_array(v) for v in value)
        else:
            out[name] = decode_array(value)
    return list(indices), out
