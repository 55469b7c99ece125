// Small hand-written catalog for fast unit tests; the integration suite
// pulls the real catalog from the engine CLI instead.

import { Catalog } from '../src/catalog.js';

export const TEST_CATALOG: Catalog = {
  version: '1.0',
  modules: [
    {
      type: 'JsonDataset',
      category: 'dataset',
      doc: 'dataset from a JSON manifest',
      params: [{ name: 'path', kind: 'string', required: true, doc: 'manifest path' }],
    },
    {
      type: 'LoadNifti',
      category: 'transform',
      doc: 'read volumes',
      params: [{ name: 'fields', kind: 'string-list', required: true, doc: 'path fields' }],
    },
    {
      type: 'NormalizeFixed',
      category: 'transform',
      doc: 'normalize',
      params: [
        { name: 'fields', kind: 'string-list', required: true, doc: 'tensor fields' },
        { name: 'mean', kind: 'real', required: true, doc: 'mean' },
        { name: 'std', kind: 'real', required: true, doc: 'std' },
      ],
    },
    {
      type: 'TinyUNet',
      category: 'model',
      doc: 'encoder-decoder',
      params: [
        { name: 'in_channels', kind: 'int', required: true, doc: 'input channels' },
        { name: 'base_channels', kind: 'int', required: true, doc: 'base width' },
        { name: 'num_classes', kind: 'int', required: true, doc: 'classes' },
      ],
    },
    {
      type: 'DiceLoss',
      category: 'loss',
      doc: 'soft overlap loss',
      params: [
        { name: 'pred', kind: 'string', required: true, doc: 'prediction field' },
        { name: 'target', kind: 'string', required: true, doc: 'target field' },
        { name: 'smooth', kind: 'real', required: false, default: 1.0, doc: 'smoothing' },
      ],
    },
    {
      type: 'DiceMetric',
      category: 'metric',
      doc: 'soft overlap score',
      params: [
        { name: 'pred', kind: 'string', required: true, doc: 'prediction field' },
        { name: 'target', kind: 'string', required: true, doc: 'target field' },
        { name: 'smooth', kind: 'real', required: false, default: 1.0, doc: 'smoothing' },
      ],
    },
    {
      type: 'Adam',
      category: 'optimizer',
      doc: 'adam optimizer',
      params: [
        { name: 'lr', kind: 'real', required: true, doc: 'learning rate' },
        { name: 'beta1', kind: 'real', required: false, default: 0.9, doc: 'first moment decay' },
      ],
    },
    {
      type: 'Training',
      category: 'workflow',
      doc: 'training loop',
      params: [
        { name: 'epochs', kind: 'int', required: true, doc: 'epoch count' },
        { name: 'batch_size', kind: 'int', required: true, doc: 'batch size' },
        { name: 'shuffle', kind: 'bool', required: false, default: false, doc: 'shuffle' },
      ],
    },
    {
      type: 'Validation',
      category: 'workflow',
      doc: 'validation pass',
      params: [{ name: 'batch_size', kind: 'int', required: true, doc: 'batch size' }],
    },
    {
      type: 'LoggingHook',
      category: 'hook',
      doc: 'console lines',
      params: [],
    },
  ],
};
