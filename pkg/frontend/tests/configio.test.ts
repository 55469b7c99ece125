import { describe, expect, it } from 'vitest';

import { dropModule, newCanvas, setParam } from '../src/canvas.js';
import {
  ExportBlocked,
  ImportError,
  canvasFingerprint,
  draftConfig,
  exportConfig,
  exportConfigText,
  importConfig,
} from '../src/configio.js';
import { validateCanvas } from '../src/validate.js';
import { TEST_CATALOG } from './fixtures.js';

function goldenCanvas() {
  const canvas = newCanvas();
  canvas.seed = 42;
  canvas.dataRoot = './data';
  canvas.outputDir = './out';
  const dataset = dropModule(canvas, TEST_CATALOG, 'train', 'dataset', 'JsonDataset');
  setParam(dataset, 'path', 'manifest.json');
  const load = dropModule(canvas, TEST_CATALOG, 'train', 'transforms', 'LoadNifti');
  setParam(load, 'fields', ['image', 'label']);
  const norm = dropModule(canvas, TEST_CATALOG, 'train', 'transforms', 'NormalizeFixed');
  setParam(norm, 'fields', ['image']);
  setParam(norm, 'mean', 0.5);
  setParam(norm, 'std', 0.5);
  const model = dropModule(canvas, TEST_CATALOG, 'train', 'model', 'TinyUNet');
  setParam(model, 'in_channels', 1);
  setParam(model, 'base_channels', 4);
  setParam(model, 'num_classes', 2);
  const loss = dropModule(canvas, TEST_CATALOG, 'train', 'losses', 'DiceLoss');
  setParam(loss, 'pred', 'predictions');
  setParam(loss, 'target', 'label');
  const metric = dropModule(canvas, TEST_CATALOG, 'train', 'metrics', 'DiceMetric');
  setParam(metric, 'pred', 'predictions');
  setParam(metric, 'target', 'label');
  const opt = dropModule(canvas, TEST_CATALOG, 'train', 'optimizer', 'Adam');
  setParam(opt, 'lr', 0.001);
  const wf = dropModule(canvas, TEST_CATALOG, 'train', 'workflow', 'Training');
  setParam(wf, 'epochs', 2);
  setParam(wf, 'batch_size', 2);
  setParam(wf, 'shuffle', true);
  dropModule(canvas, TEST_CATALOG, 'train', 'hooks', 'LoggingHook');
  return canvas;
}

describe('exportConfig', () => {
  it('emits the engine schema shape', () => {
    const doc = exportConfig(goldenCanvas(), TEST_CATALOG) as any;
    expect(doc.version).toBe('1.0');
    expect(doc.seed).toBe(42);
    expect(doc.data_root).toBe('./data');
    expect(Object.keys(doc.phases)).toEqual(['train']);
    expect(doc.phases.train.model).toEqual({
      type: 'TinyUNet',
      params: { in_channels: 1, base_channels: 4, num_classes: 2 },
    });
    expect(doc.phases.train.transforms.map((t: any) => t.type)).toEqual(['LoadNifti', 'NormalizeFixed']);
  });

  it('refuses to export with blocking diagnostics', () => {
    const canvas = goldenCanvas();
    setParam(canvas.phases.train!.model!, 'num_classes', undefined);
    expect(() => exportConfig(canvas, TEST_CATALOG)).toThrow(ExportBlocked);
  });

  it('emits no UI-only keys', () => {
    const doc = exportConfig(goldenCanvas(), TEST_CATALOG) as any;
    expect(Object.keys(doc).sort()).toEqual(['data_root', 'output_dir', 'phases', 'seed', 'version']);
    const phase = doc.phases.train;
    for (const entry of [phase.dataset, phase.model, phase.workflow]) {
      expect(Object.keys(entry).sort()).toEqual(['params', 'type']);
    }
  });
});

describe('importConfig', () => {
  it('round-trips the golden canvas identically', () => {
    const canvas = goldenCanvas();
    const text = exportConfigText(canvas, TEST_CATALOG);
    const back = importConfig(text, TEST_CATALOG);
    expect(canvasFingerprint(back)).toBe(canvasFingerprint(canvas));
    // and the re-export is byte-identical
    expect(exportConfigText(back, TEST_CATALOG)).toBe(text);
  });

  it('renders unknown types as inert error nodes and blocks export', () => {
    const text = exportConfigText(goldenCanvas(), TEST_CATALOG).replace('"TinyUNet"', '"FancyNet"');
    const canvas = importConfig(text, TEST_CATALOG);
    const model = canvas.phases.train!.model!;
    expect(model.type).toBe('FancyNet');
    expect(model.unknown).toBe(true);
    const diagnostics = validateCanvas(canvas, TEST_CATALOG);
    expect(diagnostics.some((d) => d.message.includes('FancyNet'))).toBe(true);
    expect(() => exportConfig(canvas, TEST_CATALOG)).toThrow(ExportBlocked);
  });

  it('throws on parse failure so the caller keeps the old canvas', () => {
    expect(() => importConfig('{broken', TEST_CATALOG)).toThrow(ImportError);
    expect(() => importConfig('[1,2]', TEST_CATALOG)).toThrow(ImportError);
  });

  it('rejects unknown keys and bad versions', () => {
    const good = JSON.parse(exportConfigText(goldenCanvas(), TEST_CATALOG));
    expect(() => importConfig(JSON.stringify({ ...good, extra: 1 }), TEST_CATALOG)).toThrow(/unknown key/);
    expect(() => importConfig(JSON.stringify({ ...good, version: '2.0' }), TEST_CATALOG)).toThrow(/version/);
  });

  it('keeps transform order', () => {
    const back = importConfig(exportConfigText(goldenCanvas(), TEST_CATALOG), TEST_CATALOG);
    expect(back.phases.train!.transforms.map((n) => n.type)).toEqual(['LoadNifti', 'NormalizeFixed']);
  });
});

describe('draftConfig', () => {
  it('never throws, even on an empty canvas', () => {
    const doc = draftConfig(newCanvas()) as any;
    expect(doc.version).toBe('1.0');
    expect(doc.phases).toEqual({});
  });

  it('includes partial phases for engine checking', () => {
    const canvas = newCanvas();
    const model = dropModule(canvas, TEST_CATALOG, 'train', 'model', 'TinyUNet');
    setParam(model, 'in_channels', 1);
    const doc = draftConfig(canvas) as any;
    expect(doc.phases.train.model.type).toBe('TinyUNet');
    expect(doc.phases.train.dataset).toBeUndefined();
  });
});
