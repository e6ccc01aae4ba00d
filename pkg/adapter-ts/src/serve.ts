/**
 * Protocol session: one state machine per process, strict request/response
 * alternation, ids strictly increasing. Mirrors the contract in the
 * harness's protocol document; the compliance checker replays that
 * document's rules mechanically.
 */

import { TabularDataset, loadCsv } from './dataset';
import {
  ENSEMBLE_SIZE,
  Mlp,
  RidgeHead,
  discScore,
  meanLoss,
  parseConfig,
  trainMember,
} from './model';
import * as protocol from './protocol';
import { deriveSeed } from './rng';

export const SUPPORTED_FIELDS = [
  'probs',
  'features',
  'pred_loss',
  'ensemble_votes',
  'disc_scores',
] as const;

type Supported = (typeof SUPPORTED_FIELDS)[number];

export class Session {
  done = false;
  private lastId = 0;
  private dataset: TabularDataset | null = null;
  private trialSeed = 0;
  private members: Mlp[] = [];
  private lossHead: RidgeHead | null = null;
  private labeledFeatures: number[][] = [];

  constructor(private log: (line: string) => void = () => {}) {}

  /** Synthetic id for responses to lines that carry no usable id. */
  nextSyntheticId(): number {
    return Math.max(this.lastId + 1, 1);
  }

  handle(message: protocol.Message): protocol.Message {
    const id = message.id;
    if (id <= this.lastId) {
      return protocol.error(id, protocol.E_PROTOCOL, `id ${id} does not increase`);
    }
    this.lastId = id;
    switch (message.kind) {
      case protocol.HELLO:
        return this.hello(message);
      case protocol.TRAIN:
      case protocol.TRAIN_SSL:
      case protocol.PREDICT:
      case protocol.SHUTDOWN:
        break;
      default:
        return protocol.error(id, protocol.E_PROTOCOL, `unexpected kind '${message.kind}'`);
    }
    if (this.dataset === null) {
      return protocol.error(id, protocol.E_PROTOCOL, 'hello must come first');
    }
    if (message.kind === protocol.SHUTDOWN) {
      this.done = true;
      return protocol.ack(id);
    }
    if (message.kind === protocol.PREDICT) {
      return this.predict(message);
    }
    return this.train(message);
  }

  private hello(message: protocol.Message): protocol.Message {
    const id = message.id;
    if (this.dataset !== null) {
      return protocol.error(id, protocol.E_PROTOCOL, 'hello already exchanged');
    }
    if (message.version !== protocol.PROTOCOL_VERSION) {
      return protocol.error(
        id,
        protocol.E_VERSION,
        `only version ${protocol.PROTOCOL_VERSION} is spoken`,
      );
    }
    const path = message.dataset;
    if (typeof path !== 'string') {
      return protocol.error(id, protocol.E_PROTOCOL, 'hello carries no dataset path');
    }
    let dataset: TabularDataset;
    try {
      dataset = loadCsv(path);
    } catch (exc) {
      return protocol.error(id, protocol.E_IO, `cannot load dataset: ${String(exc)}`);
    }
    this.dataset = dataset;
    this.trialSeed = typeof message.seed === 'number' ? message.seed : 0;
    this.members = Array.from(
      { length: ENSEMBLE_SIZE },
      (_, m) => new Mlp(dataset.featureDim, dataset.numClasses, deriveSeed(this.trialSeed, m)),
    );
    this.log(`loaded ${dataset.features.length} rows from ${path}`);
    return protocol.ack(id, {
      version: protocol.PROTOCOL_VERSION,
      fields: [...SUPPORTED_FIELDS],
    });
  }

  private train(message: protocol.Message): protocol.Message {
    const id = message.id;
    const dataset = this.dataset as TabularDataset;
    const config =
      message.config !== null && typeof message.config === 'object' && !Array.isArray(message.config)
        ? (message.config as Record<string, unknown>)
        : {};
    const fallbackMode = message.kind === protocol.TRAIN_SSL ? protocol.MODE_SSL : undefined;
    const mode = (message.mode as string | undefined) ?? fallbackMode;
    if (mode !== protocol.MODE_SUPERVISED && mode !== protocol.MODE_SSL) {
      return protocol.error(id, protocol.E_BAD_MODE, `unknown training mode '${String(mode)}'`);
    }
    const labeled = toIndexList(message.labeled, dataset.features.length);
    const unlabeled = toIndexList(message.unlabeled, dataset.features.length);
    if (labeled === null || unlabeled === null) {
      return protocol.error(id, protocol.E_PROTOCOL, 'indices must be valid row numbers');
    }
    try {
      const parsed = parseConfig(config);
      const initSeed = parsed.initSeed ?? this.trialSeed;
      const start = process.hrtime.bigint();
      this.members = Array.from({ length: ENSEMBLE_SIZE }, (_, m) =>
        trainMember(dataset, labeled, unlabeled, mode, parsed, deriveSeed(initSeed, m)),
      );
      const lead = this.members[0];
      this.labeledFeatures = labeled.map((i) => lead.forward(dataset.features[i]).h2);
      if (labeled.length > 0) {
        const perSample = labeled.map((i) =>
          -Math.log(Math.max(lead.forward(dataset.features[i]).probs[dataset.targets[i]], 1e-12)),
        );
        this.lossHead = RidgeHead.fit(this.labeledFeatures, perSample);
      }
      const wall = Number(process.hrtime.bigint() - start) / 1e9;
      this.log(`trained ${ENSEMBLE_SIZE} members on ${labeled.length} rows in ${wall.toFixed(2)}s`);
      return protocol.ack(id, {
        wall_time: wall,
        train_loss: meanLoss(lead, dataset, labeled),
        overrides: parsed.overrides,
      });
    } catch (exc) {
      return protocol.error(id, protocol.E_INTERNAL, `training failed: ${String(exc)}`);
    }
  }

  private predict(message: protocol.Message): protocol.Message {
    const id = message.id;
    const dataset = this.dataset as TabularDataset;
    const fields = Array.isArray(message.fields) ? (message.fields as string[]) : [];
    const unknown = fields.filter((f) => !(SUPPORTED_FIELDS as readonly string[]).includes(f));
    if (unknown.length > 0) {
      return protocol.error(
        id,
        protocol.E_UNSUPPORTED_FIELD,
        `no such field '${unknown[0]}'`,
      );
    }
    const indices = toIndexList(message.indices, dataset.features.length);
    if (indices === null) {
      return protocol.error(id, protocol.E_PROTOCOL, 'indices must be valid row numbers');
    }
    try {
      const payload: Record<string, unknown> = {};
      for (const field of fields as Supported[]) {
        payload[field] = this.fieldPayload(field, indices);
      }
      return protocol.bundle(id, indices, payload);
    } catch (exc) {
      return protocol.error(id, protocol.E_INTERNAL, `prediction failed: ${String(exc)}`);
    }
  }

  private fieldPayload(field: Supported, indices: number[]): unknown {
    const dataset = this.dataset as TabularDataset;
    const lead = this.members[0];
    const rows = indices.map((i) => lead.forward(dataset.features[i]));
    switch (field) {
      case 'probs':
        return protocol.packF32(
          rows.flatMap((r) => r.probs),
          [indices.length, dataset.numClasses],
        );
      case 'features':
        return protocol.packF32(
          rows.flatMap((r) => r.h2),
          [indices.length, rows[0]?.h2.length ?? 32],
        );
      case 'pred_loss':
        return protocol.packF32(
          rows.map((r) => (this.lossHead ? this.lossHead.predict(r.h2) : entropyOf(r.probs))),
          [indices.length],
        );
      case 'ensemble_votes':
        if (indices.length === 0) {
          return protocol.packF32([], [0, this.members.length]);
        }
        // plain integer rows, one column per member
        return indices.map((i) =>
          this.members.map((m) => argmax(m.forward(dataset.features[i]).probs)),
        );
      case 'disc_scores':
        return protocol.packF32(
          rows.map((r) => discScore(r.h2, this.labeledFeatures)),
          [indices.length],
        );
    }
  }
}

function toIndexList(value: unknown, bound: number): number[] | null {
  if (value === undefined) {
    return [];
  }
  if (!Array.isArray(value)) {
    return null;
  }
  const out: number[] = [];
  for (const item of value) {
    if (typeof item !== 'number' || !Number.isInteger(item) || item < 0 || item >= bound) {
      return null;
    }
    out.push(item);
  }
  return out;
}

function argmax(values: number[]): number {
  let best = 0;
  for (let i = 1; i < values.length; i++) {
    if (values[i] > values[best]) {
      best = i;
    }
  }
  return best;
}

function entropyOf(probs: number[]): number {
  let acc = 0;
  for (const p of probs) {
    if (p > 0) {
      acc -= p * Math.log(p);
    }
  }
  return acc;
}
