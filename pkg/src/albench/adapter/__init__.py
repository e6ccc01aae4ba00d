"""Out-of-process learners speaking line-delimited JSON over stdio."""

from .check import (
    CheckReport,
    CheckStep,
    load_transcript,
    run_check,
    write_check_dataset,
)
from .client import AdapterClient, CONTROL_TIMEOUT, PREDICT_TIMEOUT, TRAIN_TIMEOUT
from .driver import AdapterLearner, adapter_accuracy
from .protocol import (
    ACK,
    BUNDLE,
    ERROR,
    E_BAD_MODE,
    E_INTERNAL,
    E_IO,
    E_PROTOCOL,
    E_UNSUPPORTED_FIELD,
    E_VERSION,
    HELLO,
    MESSAGE_KINDS,
    MODE_SSL,
    MODE_SUPERVISED,
    PREDICT,
    PROTOCOL_VERSION,
    REQUEST_KINDS,
    RESPONSE_KINDS,
    SHUTDOWN,
    TRAIN,
    TRAIN_SSL,
    WIRE_FIELDS,
    bundle_response,
    decode_array,
    decode_bundle_fields,
    decode_message,
    encode_f32,
    encode_message,
    error,
    hello,
    predict,
    shutdown,
    train,
    train_ssl,
)

__all__ = [
    "ACK",
    "AdapterClient",
    "AdapterLearner",
    "BUNDLE",
    "CheckReport",
    "CheckStep",
    "CONTROL_TIMEOUT",
    "ERROR",
    "E_BAD_MODE",
    "E_INTERNAL",
    "E_IO",
    "E_PROTOCOL",
    "E_UNSUPPORTED_FIELD",
    "E_VERSION",
    "HELLO",
    "MESSAGE_KINDS",
    "MODE_SSL",
    "MODE_SUPERVISED",
    "PREDICT",
    "PREDICT_TIMEOUT",
    "PROTOCOL_VERSION",
    "REQUEST_KINDS",
    "RESPONSE_KINDS",
    "SHUTDOWN",
    "TRAIN",
    "TRAIN_SSL",
    "TRAIN_TIMEOUT",
    "WIRE_FIELDS",
    "adapter_accuracy",
    "bundle_response",
    "decode_array",
    "decode_bundle_fields",
    "decode_message",
    "encode_f32",
    "encode_message",
    "error",
    "hello",
    "load_transcript",
    "predict",
    "run_check",
    "shutdown",
    "train",
    "train_ssl",
    "write_check_dataset",
]
