import { describe, expect, it } from 'vitest';
import { TabularDataset } from '../src/dataset';
import {
  ENSEMBLE_SIZE,
  Mlp,
  RidgeHead,
  discScore,
  meanLoss,
  parseConfig,
  trainMember,
} from '../src/model';
import { Rng, deriveSeed } from '../src/rng';

/** Two well-separated Gaussian blobs. */
function blobs(n: number, seed: number): TabularDataset {
  const rng = new Rng(seed);
  const features: number[][] = [];
  const targets: number[] = [];
  for (let i = 0; i < n; i++) {
    const label = i % 2;
    const cx = label === 0 ? -2 : 2;
    features.push([cx + 0.4 * rng.gaussian(), 0.4 * rng.gaussian()]);
    targets.push(label);
  }
  return { features, targets, featureDim: 2, numClasses: 2 };
}

function accuracy(model: Mlp, data: TabularDataset, indices: number[]): number {
  let hits = 0;
  for (const i of indices) {
    const { probs } = model.forward(data.features[i]);
    if (probs.indexOf(Math.max(...probs)) === data.targets[i]) {
      hits++;
    }
  }
  return hits / indices.length;
}

describe('config parsing', () => {
  it('fills defaults and records overrides by wire name', () => {
    const parsed = parseConfig({ epochs: 20, seed: 9, ssl: { temperature: 0.25 }, junk: 1 });
    expect(parsed.train.epochs).toBe(20);
    expect(parsed.train.baseLr).toBeCloseTo(0.03);
    expect(parsed.ssl.temperature).toBe(0.25);
    expect(parsed.ssl.confidenceMask).toBeCloseTo(0.6);
    expect(parsed.overrides).toEqual({ epochs: 20, seed: 9, 'ssl.temperature': 0.25 });
  });

  it('does not flag defaults restated verbatim', () => {
    const parsed = parseConfig({ momentum: 0.9 });
    expect(parsed.overrides).toEqual({});
  });
});

describe('training', () => {
  const data = blobs(60, 1);
  const all = Array.from({ length: 60 }, (_, i) => i);
  const parsed = parseConfig({ epochs: 40, base_lr: 0.1, batch_labeled: 16, seed: 3 });

  it('fits separable data and lowers the loss', () => {
    const fresh = new Mlp(2, 2, 7);
    const before = meanLoss(fresh, data, all);
    const model = trainMember(data, all, [], 'supervised', parsed, 7);
    expect(accuracy(model, data, all)).toBeGreaterThan(0.95);
    expect(meanLoss(model, data, all)).toBeLessThan(before);
  });

  it('is deterministic for a fixed seed pair', () => {
    const a = trainMember(data, all, [], 'supervised', parsed, 7);
    const b = trainMember(data, all, [], 'supervised', parsed, 7);
    expect(a.w1).toEqual(b.w1);
    expect(a.w3).toEqual(b.w3);
    const c = trainMember(data, all, [], 'supervised', parsed, 8);
    expect(c.w1).not.toEqual(a.w1);
  });

  it('keeps probability rows on the simplex', () => {
    const model = trainMember(data, all, [], 'supervised', parsed, 7);
    for (const i of all) {
      const { probs } = model.forward(data.features[i]);
      const total = probs.reduce((x, y) => x + y, 0);
      expect(Math.abs(total - 1)).toBeLessThan(1e-6);
      expect(Math.min(...probs)).toBeGreaterThanOrEqual(0);
    }
  });

  it('honors max_steps as a hard cap', () => {
    const capped = parseConfig({ epochs: 40, max_steps: 0, seed: 3 });
    const model = trainMember(data, all, [], 'supervised', capped, 7);
    const fresh = new Mlp(2, 2, 7);
    expect(model.w1).toEqual(fresh.w1);
  });

  it('uses unlabeled rows under consistency training', () => {
    const labeled = all.slice(0, 8);
    const unlabeled = all.slice(8);
    const sslParsed = parseConfig({
      epochs: 30,
      base_lr: 0.1,
      batch_labeled: 8,
      batch_unlabeled: 32,
      seed: 3,
      ssl: { unlabeled_weight: 1.0, perturbation_scale: 0.2 },
    });
    const ssl = trainMember(data, labeled, unlabeled, 'ssl', sslParsed, 7);
    const repeat = trainMember(data, labeled, unlabeled, 'ssl', sslParsed, 7);
    expect(accuracy(ssl, data, unlabeled)).toBeGreaterThan(0.9);
    expect(ssl.w1).toEqual(repeat.w1);
    // the consistency term must actually change the solution
    const supervisedOnly = trainMember(data, labeled, unlabeled, 'supervised', sslParsed, 7);
    expect(ssl.w1).not.toEqual(supervisedOnly.w1);
  });
});

describe('auxiliary heads', () => {
  it('ridge head recovers a linear target exactly', () => {
    const features = [
      [1, 0],
      [0, 1],
      [1, 1],
      [2, 1],
    ];
    const targets = features.map((row) => 3 * row[0] - 2 * row[1] + 0.5);
    const head = RidgeHead.fit(features, targets, 1e-8);
    for (let i = 0; i < features.length; i++) {
      expect(head.predict(features[i])).toBeCloseTo(targets[i], 5);
    }
  });

  it('disc scores stay inside [0, 1] and grow with distance', () => {
    const labeled = [
      [0, 0],
      [1, 0],
    ];
    const nearScore = discScore([0.1, 0], labeled);
    const farScore = discScore([9, 9], labeled);
    expect(nearScore).toBeGreaterThanOrEqual(0);
    expect(farScore).toBeLessThan(1);
    expect(farScore).toBeGreaterThan(nearScore);
    expect(discScore([5, 5], [])).toBe(0.5);
  });

  it('ensemble constant names five members', () => {
    expect(ENSEMBLE_SIZE).toBe(5);
  });
});

describe('rng', () => {
  it('derives distinct stable seeds', () => {
    expect(deriveSeed(1, 2)).toBe(deriveSeed(1, 2));
    expect(deriveSeed(1, 2)).not.toBe(deriveSeed(2, 1));
  });

  it('shuffles reproducibly', () => {
    const a = new Rng(5).shuffle([1, 2, 3, 4, 5]);
    const b = new Rng(5).shuffle([1, 2, 3, 4, 5]);
    expect(a).toEqual(b);
  });
});
