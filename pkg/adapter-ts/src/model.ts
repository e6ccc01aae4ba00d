/**
 * The learner behind the protocol: an ensemble of small ReLU networks
 * trained with SGD, plus a closed-form loss-prediction head and a
 * distance-based discriminator score.
 *
 * Optimizer defaults mirror the harness trainer (lr 3e-2, momentum 0.9,
 * weight decay 5e-4, cosine schedule); consistency-training defaults mirror
 * its semi-supervised settings (confidence mask 0.6, temperature 0.5).
 * Every override arriving in a train request is echoed back in the ack so
 * runs stay auditable.
 */

import { TabularDataset } from './dataset';
import { Rng, deriveSeed } from './rng';

export const ENSEMBLE_SIZE = 5;
export const HIDDEN = [32, 32] as const;

export interface TrainSettings {
  baseLr: number;
  momentum: number;
  weightDecay: number;
  epochs: number;
  batchLabeled: number;
  batchUnlabeled: number;
  schedule: 'cosine' | 'constant';
  seed: number;
  maxSteps: number | null;
}

export interface SslSettings {
  confidenceMask: number;
  temperature: number;
  unlabeledWeight: number;
  perturbation: 'gaussian_noise' | 'input_dropout';
  perturbationScale: number;
}

export const TRAIN_DEFAULTS: TrainSettings = {
  baseLr: 0.03,
  momentum: 0.9,
  weightDecay: 0.0005,
  epochs: 150,
  batchLabeled: 64,
  batchUnlabeled: 320,
  schedule: 'cosine',
  seed: 0,
  maxSteps: null,
};

export const SSL_DEFAULTS: SslSettings = {
  confidenceMask: 0.6,
  temperature: 0.5,
  unlabeledWeight: 1.0,
  perturbation: 'gaussian_noise',
  perturbationScale: 0.1,
};

const TRAIN_KEYS: Record<string, keyof TrainSettings> = {
  base_lr: 'baseLr',
  momentum: 'momentum',
  weight_decay: 'weightDecay',
  epochs: 'epochs',
  batch_labeled: 'batchLabeled',
  batch_unlabeled: 'batchUnlabeled',
  schedule: 'schedule',
  seed: 'seed',
  max_steps: 'maxSteps',
};

const SSL_KEYS: Record<string, keyof SslSettings> = {
  confidence_mask: 'confidenceMask',
  temperature: 'temperature',
  unlabeled_weight: 'unlabeledWeight',
  perturbation: 'perturbation',
  perturbation_scale: 'perturbationScale',
};

export interface ParsedConfig {
  train: TrainSettings;
  ssl: SslSettings;
  initSeed: number | null;
  /** wire-named settings that differ from the defaults, for the ack */
  overrides: Record<string, unknown>;
}

/** Read a train-request config, ignoring keys we do not understand. */
export function parseConfig(config: Record<string, unknown>): ParsedConfig {
  const train = { ...TRAIN_DEFAULTS };
  const ssl = { ...SSL_DEFAULTS };
  const overrides: Record<string, unknown> = {};
  for (const [wire, key] of Object.entries(TRAIN_KEYS)) {
    const value = config[wire];
    if (value === undefined) {
      continue;
    }
    if (value !== train[key]) {
      overrides[wire] = value;
    }
    (train as Record<string, unknown>)[key] = value;
  }
  const sslRaw = config.ssl;
  if (sslRaw !== null && typeof sslRaw === 'object' && !Array.isArray(sslRaw)) {
    for (const [wire, key] of Object.entries(SSL_KEYS)) {
      const value = (sslRaw as Record<string, unknown>)[wire];
      if (value === undefined) {
        continue;
      }
      if (value !== ssl[key]) {
        overrides['ssl.' + wire] = value;
      }
      (ssl as Record<string, unknown>)[key] = value;
    }
  }
  const initSeed = typeof config.init_seed === 'number' ? config.init_seed : null;
  return { train, ssl, initSeed, overrides };
}

/** Two hidden ReLU layers and a softmax readout. */
export class Mlp {
  w1: number[][];
  b1: number[];
  w2: number[][];
  b2: number[];
  w3: number[][];
  b3: number[];

  constructor(public inDim: number, public numClasses: number, seed: number) {
    const rng = new Rng(seed);
    const init = (rows: number, cols: number): number[][] => {
      const scale = Math.sqrt(2 / cols);
      return Array.from({ length: rows }, () =>
        Array.from({ length: cols }, () => scale * rng.gaussian()),
      );
    };
    this.w1 = init(HIDDEN[0], inDim);
    this.b1 = new Array(HIDDEN[0]).fill(0);
    this.w2 = init(HIDDEN[1], HIDDEN[0]);
    this.b2 = new Array(HIDDEN[1]).fill(0);
    this.w3 = init(numClasses, HIDDEN[1]);
    this.b3 = new Array(numClasses).fill(0);
  }

  /** Hidden activations and class probabilities for one input row. */
  forward(x: number[]): { h1: number[]; h2: number[]; probs: number[] } {
    const h1 = affineRelu(this.w1, this.b1, x);
    const h2 = affineRelu(this.w2, this.b2, h1);
    const logits = affine(this.w3, this.b3, h2);
    return { h1, h2, probs: softmax(logits) };
  }
}

function affine(w: number[][], b: number[], x: number[]): number[] {
  const out = new Array(w.length);
  for (let i = 0; i < w.length; i++) {
    let acc = b[i];
    const row = w[i];
    for (let j = 0; j < row.length; j++) {
      acc += row[j] * x[j];
    }
    out[i] = acc;
  }
  return out;
}

function affineRelu(w: number[][], b: number[], x: number[]): number[] {
  const out = affine(w, b, x);
  for (let i = 0; i < out.length; i++) {
    if (out[i] < 0) {
      out[i] = 0;
    }
  }
  return out;
}

export function softmax(logits: number[]): number[] {
  const top = Math.max(...logits);
  const exps = logits.map((v) => Math.exp(v - top));
  const total = exps.reduce((a, b) => a + b, 0);
  return exps.map((v) => v / total);
}

interface SgdState {
  velocity: Map<number[], number[]>;
}

/**
 * One SGD step on a weighted cross-entropy batch. Targets are probability
 * rows (hard labels are one-hot rows); each sample's gradient is scaled by
 * its weight. Returns the mean weighted cross entropy.
 */
function sgdStep(
  model: Mlp,
  xs: number[][],
  targets: number[][],
  weights: number[],
  lr: number,
  settings: TrainSettings,
  state: SgdState,
): number {
  const gw1 = zerosLike(model.w1);
  const gb1 = new Array(model.b1.length).fill(0);
  const gw2 = zerosLike(model.w2);
  const gb2 = new Array(model.b2.length).fill(0);
  const gw3 = zerosLike(model.w3);
  const gb3 = new Array(model.b3.length).fill(0);
  const batch = xs.length;
  let loss = 0;

  for (let n = 0; n < batch; n++) {
    const x = xs[n];
    const { h1, h2, probs } = model.forward(x);
    const target = targets[n];
    const scale = weights[n] / batch;
    for (let c = 0; c < probs.length; c++) {
      if (target[c] > 0) {
        loss += -target[c] * Math.log(Math.max(probs[c], 1e-12)) * scale;
      }
    }
    // dL/dlogits = probs - target, then plain backprop through the ReLUs
    const dLogits = probs.map((p, c) => (p - target[c]) * scale);
    const dH2 = backAccumulate(model.w3, gw3, gb3, dLogits, h2);
    maskRelu(dH2, h2);
    const dH1 = backAccumulate(model.w2, gw2, gb2, dH2, h1);
    maskRelu(dH1, h1);
    backAccumulate(model.w1, gw1, gb1, dH1, x);
  }

  applyUpdate(model.w1, gw1, lr, settings, state);
  applyBias(model.b1, gb1, lr, settings, state);
  applyUpdate(model.w2, gw2, lr, settings, state);
  applyBias(model.b2, gb2, lr, settings, state);
  applyUpdate(model.w3, gw3, lr, settings, state);
  applyBias(model.b3, gb3, lr, settings, state);
  return loss;
}

function zerosLike(w: number[][]): number[][] {
  return w.map((row) => new Array(row.length).fill(0));
}

/** Accumulate dW and db for one layer; returns dL/d(input). */
function backAccumulate(
  w: number[][],
  gw: number[][],
  gb: number[],
  dOut: number[],
  input: number[],
): number[] {
  const dIn = new Array(input.length).fill(0);
  for (let i = 0; i < w.length; i++) {
    const d = dOut[i];
    if (d === 0) {
      continue;
    }
    gb[i] += d;
    const row = w[i];
    const grow = gw[i];
    for (let j = 0; j < row.length; j++) {
      grow[j] += d * input[j];
      dIn[j] += d * row[j];
    }
  }
  return dIn;
}

function maskRelu(grad: number[], activation: number[]): void {
  for (let i = 0; i < grad.length; i++) {
    if (activation[i] <= 0) {
      grad[i] = 0;
    }
  }
}

function applyUpdate(
  w: number[][],
  g: number[][],
  lr: number,
  settings: TrainSettings,
  state: SgdState,
): void {
  for (let i = 0; i < w.length; i++) {
    const row = w[i];
    let vel = state.velocity.get(row);
    if (!vel) {
      vel = new Array(row.length).fill(0);
      state.velocity.set(row, vel);
    }
    for (let j = 0; j < row.length; j++) {
      vel[j] = settings.momentum * vel[j] + g[i][j] + settings.weightDecay * row[j];
      row[j] -= lr * vel[j];
    }
  }
}

function applyBias(
  b: number[],
  g: number[],
  lr: number,
  settings: TrainSettings,
  state: SgdState,
): void {
  let vel = state.velocity.get(b);
  if (!vel) {
    vel = new Array(b.length).fill(0);
    state.velocity.set(b, vel);
  }
  for (let j = 0; j < b.length; j++) {
    vel[j] = settings.momentum * vel[j] + g[j]; // no decay on biases
    b[j] -= lr * vel[j];
  }
}

function oneHot(label: number, numClasses: number): number[] {
  const row = new Array(numClasses).fill(0);
  row[label] = 1;
  return row;
}

function cosineLr(base: number, step: number, total: number): number {
  if (total <= 1) {
    return base;
  }
  return base * 0.5 * (1 + Math.cos((Math.PI * step) / total));
}

/**
 * Train one network. In ssl mode every labeled batch is joined by an
 * unlabeled batch trained toward its own sharpened predictions: rows whose
 * top probability clears the confidence mask get a temperature-sharpened
 * target, the input is perturbed, and the consistency term is weighted in.
 */
export function trainMember(
  dataset: TabularDataset,
  labeled: number[],
  unlabeled: number[],
  mode: 'supervised' | 'ssl',
  parsed: ParsedConfig,
  memberSeed: number,
): Mlp {
  const { train, ssl } = parsed;
  const model = new Mlp(dataset.featureDim, dataset.numClasses, memberSeed);
  if (labeled.length === 0 || train.epochs <= 0) {
    return model;
  }
  const rng = new Rng(deriveSeed(train.seed, memberSeed, 1));
  const state: SgdState = { velocity: new Map() };
  const batchSize = Math.max(1, Math.min(train.batchLabeled, labeled.length));
  const stepsPerEpoch = Math.ceil(labeled.length / batchSize);
  const totalSteps = train.epochs * stepsPerEpoch;
  let step = 0;

  for (let epoch = 0; epoch < train.epochs; epoch++) {
    const order = rng.shuffle([...labeled]);
    for (let at = 0; at < order.length; at += batchSize) {
      if (train.maxSteps !== null && step >= train.maxSteps) {
        return model;
      }
      const lr =
        train.schedule === 'cosine' ? cosineLr(train.baseLr, step, totalSteps) : train.baseLr;
      const batchIdx = order.slice(at, at + batchSize);
      const xs = batchIdx.map((i) => dataset.features[i]);
      const targets = batchIdx.map((i) => oneHot(dataset.targets[i], dataset.numClasses));
      const weights = new Array(xs.length).fill(1);

      if (mode === 'ssl' && unlabeled.length > 0 && ssl.unlabeledWeight > 0) {
        const take = Math.max(1, Math.min(train.batchUnlabeled, unlabeled.length));
        for (let u = 0; u < take; u++) {
          const i = unlabeled[rng.nextInt(unlabeled.length)];
          const clean = model.forward(dataset.features[i]).probs;
          if (Math.max(...clean) < ssl.confidenceMask) {
            continue;
          }
          xs.push(perturb(dataset.features[i], ssl, rng));
          targets.push(sharpen(clean, ssl.temperature));
          weights.push(ssl.unlabeledWeight);
        }
      }

      sgdStep(model, xs, targets, weights, lr, train, state);
      step++;
    }
  }
  return model;
}

function perturb(x: number[], ssl: SslSettings, rng: Rng): number[] {
  if (ssl.perturbation === 'input_dropout') {
    return x.map((v) => (rng.next() < ssl.perturbationScale ? 0 : v));
  }
  return x.map((v) => v + ssl.perturbationScale * rng.gaussian());
}

function sharpen(probs: number[], temperature: number): number[] {
  if (temperature <= 0) {
    const hard = new Array(probs.length).fill(0);
    hard[probs.indexOf(Math.max(...probs))] = 1;
    return hard;
  }
  const powered = probs.map((p) => Math.pow(Math.max(p, 1e-12), 1 / temperature));
  const total = powered.reduce((a, b) => a + b, 0);
  return powered.map((p) => p / total);
}

/** Mean cross entropy of a trained model over the given rows. */
export function meanLoss(model: Mlp, dataset: TabularDataset, indices: number[]): number {
  if (indices.length === 0) {
    return 0;
  }
  let total = 0;
  for (const i of indices) {
    const { probs } = model.forward(dataset.features[i]);
    total += -Math.log(Math.max(probs[dataset.targets[i]], 1e-12));
  }
  return total / indices.length;
}

/**
 * Closed-form ridge regression from feature vectors to per-sample loss,
 * the loss-prediction head. Solved by Gaussian elimination so refits are
 * exactly reproducible.
 */
export class RidgeHead {
  constructor(private weights: number[]) {}

  static fit(features: number[][], targets: number[], lambda = 1e-2): RidgeHead {
    const d = features[0].length + 1; // trailing bias column
    const gram: number[][] = Array.from({ length: d }, () => new Array(d + 1).fill(0));
    for (let n = 0; n < features.length; n++) {
      const row = [...features[n], 1];
      for (let i = 0; i < d; i++) {
        for (let j = 0; j < d; j++) {
          gram[i][j] += row[i] * row[j];
        }
        gram[i][d] += row[i] * targets[n];
      }
    }
    for (let i = 0; i < d; i++) {
      gram[i][i] += lambda;
    }
    return new RidgeHead(solve(gram, d));
  }

  predict(feature: number[]): number {
    let acc = this.weights[this.weights.length - 1];
    for (let j = 0; j < feature.length; j++) {
      acc += this.weights[j] * feature[j];
    }
    return acc;
  }
}

/** Solve the augmented system [A | b] with partial pivoting. */
function solve(aug: number[][], d: number): number[] {
  for (let col = 0; col < d; col++) {
    let pivot = col;
    for (let r = col + 1; r < d; r++) {
      if (Math.abs(aug[r][col]) > Math.abs(aug[pivot][col])) {
        pivot = r;
      }
    }
    const tmp = aug[col];
    aug[col] = aug[pivot];
    aug[pivot] = tmp;
    const lead = aug[col][col];
    for (let r = 0; r < d; r++) {
      if (r === col || aug[r][col] === 0) {
        continue;
      }
      const factor = aug[r][col] / lead;
      for (let c = col; c <= d; c++) {
        aug[r][c] -= factor * aug[col][c];
      }
    }
  }
  return aug.map((row, i) => row[d] / aug[i][i]);
}

/**
 * Discriminator-score stub: how far a sample's features sit from the
 * labeled set, squashed into [0, 1). Far-from-labeled scores high.
 */
export function discScore(feature: number[], labeledFeatures: number[][]): number {
  if (labeledFeatures.length === 0) {
    return 0.5;
  }
  let best = Infinity;
  for (const ref of labeledFeatures) {
    let acc = 0;
    for (let j = 0; j < feature.length; j++) {
      const diff = feature[j] - ref[j];
      acc += diff * diff;
    }
    if (acc < best) {
      best = acc;
    }
  }
  const dist = Math.sqrt(best);
  return dist / (1 + dist);
}
