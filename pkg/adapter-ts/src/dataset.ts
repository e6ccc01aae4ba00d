/**
 * CSV dataset loading. The harness hands over one file whose rows cover a
 * single index space: unlabeled-pool rows first, held-out evaluation rows
 * after them. Feature columns are named feature_<k>; the label column is
 * named target.
 */

import * as fs from 'fs';

export interface TabularDataset {
  features: number[][];
  targets: number[];
  featureDim: number;
  numClasses: number;
}

export function parseCsv(text: string): TabularDataset {
  const lines = text
    .split(/\r?\n/)
    .map((line) => line.trim())
    .filter((line) => line.length > 0);
  if (lines.length < 2) {
    throw new Error('dataset needs a header and at least one row');
  }
  const header = lines[0].split(',').map((cell) => cell.trim());
  const featureCols: number[] = [];
  let targetCol = -1;
  header.forEach((name, col) => {
    if (name.startsWith('feature_')) {
      featureCols.push(col);
    } else if (name === 'target') {
      targetCol = col;
    }
  });
  if (featureCols.length === 0 || targetCol < 0) {
    throw new Error('header must name feature_<k> columns and a target column');
  }

  const features: number[][] = [];
  const targets: number[] = [];
  for (let i = 1; i < lines.length; i++) {
    const cells = lines[i].split(',');
    if (cells.length !== header.length) {
      throw new Error(`row ${i} has ${cells.length} cells, header has ${header.length}`);
    }
    const row = featureCols.map((col) => Number(cells[col]));
    const label = Number(cells[targetCol]);
    if (row.some((v) => !Number.isFinite(v)) || !Number.isInteger(label) || label < 0) {
      throw new Error(`row ${i} holds a non-numeric feature or invalid label`);
    }
    features.push(row);
    targets.push(label);
  }

  const numClasses = Math.max(...targets) + 1;
  if (numClasses < 2) {
    throw new Error('dataset must cover at least two classes');
  }
  return { features, targets, featureDim: featureCols.length, numClasses };
}

export function loadCsv(path: string): TabularDataset {
  return parseCsv(fs.readFileSync(path, 'utf8'));
}
