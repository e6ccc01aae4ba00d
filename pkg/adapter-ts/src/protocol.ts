/**
 * Wire types and codecs for the adapter protocol, version 1.
 *
 * Messages are JSON objects, one per line. Responses are emitted in
 * canonical form (sorted keys, no whitespace) so that replaying a session
 * yields byte-identical output.
 */

export const PROTOCOL_VERSION = 1;

export const HELLO = 'hello';
export const TRAIN = 'train';
export const TRAIN_SSL = 'train_ssl';
export const PREDICT = 'predict';
export const SHUTDOWN = 'shutdown';
export const ACK = 'ack';
export const BUNDLE = 'bundle';
export const ERROR = 'error';

export const E_VERSION = 'version';
export const E_PROTOCOL = 'protocol';
export const E_BAD_MODE = 'bad_mode';
export const E_UNSUPPORTED_FIELD = 'unsupported_field';
export const E_IO = 'io';
export const E_INTERNAL = 'internal';

export const MODE_SUPERVISED = 'supervised';
export const MODE_SSL = 'ssl';

export const WIRE_FIELDS = [
  'probs',
  'features',
  'pred_loss',
  'ensemble_votes',
  'entropy_maps',
  'disc_scores',
] as const;

export interface Message {
  kind: string;
  id: number;
  [key: string]: unknown;
}

export interface PackedArray {
  data_b64: string;
  shape: number[];
}

/** JSON with recursively sorted keys and no whitespace. */
export function canonical(value: unknown): string {
  if (value === null || typeof value !== 'object') {
    return JSON.stringify(value);
  }
  if (Array.isArray(value)) {
    return '[' + value.map(canonical).join(',') + ']';
  }
  const record = value as Record<string, unknown>;
  const parts = Object.keys(record)
    .sort()
    .map((key) => JSON.stringify(key) + ':' + canonical(record[key]));
  return '{' + parts.join(',') + '}';
}

/** Parse one wire line; returns null when it is not a usable message. */
export function parseMessage(line: string): Message | null {
  let value: unknown;
  try {
    value = JSON.parse(line);
  } catch {
    return null;
  }
  if (value === null || typeof value !== 'object' || Array.isArray(value)) {
    return null;
  }
  const record = value as Record<string, unknown>;
  if (typeof record.kind !== 'string') {
    return null;
  }
  const id = record.id;
  if (typeof id !== 'number' || !Number.isInteger(id) || id < 1) {
    return null;
  }
  return record as Message;
}

/** Pack a flat list of numbers as base64 little-endian float32. */
export function packF32(values: number[], shape: number[]): PackedArray {
  const expected = shape.reduce((a, b) => a * b, 1);
  if (values.length !== expected) {
    throw new Error(`cannot pack ${values.length} values into shape [${shape}]`);
  }
  const buf = Buffer.alloc(4 * values.length);
  for (let i = 0; i < values.length; i++) {
    buf.writeFloatLE(values[i], i * 4);
  }
  return { data_b64: buf.toString('base64'), shape: [...shape] };
}

/** Inverse of packF32; returns the flat values and the declared shape. */
export function unpackF32(packed: PackedArray): { values: number[]; shape: number[] } {
  const buf = Buffer.from(packed.data_b64, 'base64');
  const expected = packed.shape.reduce((a, b) => a * b, 1);
  if (buf.length !== 4 * expected) {
    throw new Error(`payload holds ${buf.length} bytes, shape [${packed.shape}] needs ${4 * expected}`);
  }
  const values: number[] = new Array(expected);
  for (let i = 0; i < expected; i++) {
    values[i] = buf.readFloatLE(i * 4);
  }
  return { values, shape: [...packed.shape] };
}

export function ack(id: number, extra: Record<string, unknown> = {}): Message {
  return { kind: ACK, id, ...extra };
}

export function error(id: number, code: string, message: string): Message {
  return { kind: ERROR, id, code, message };
}

export function bundle(id: number, indices: number[], fields: Record<string, unknown>): Message {
  return { kind: BUNDLE, id, indices, ...fields };
}
