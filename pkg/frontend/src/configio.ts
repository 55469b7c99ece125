// Export and import of engine config files. Exported documents follow the
// engine's strict schema exactly (no UI-only keys); import reconstructs
// the canvas, rendering unknown types as inert error nodes rather than
// dropping them.

import { Catalog, findModule } from './catalog.js';
import {
  CanvasState,
  NodeDraft,
  PHASE_NAMES,
  PhaseName,
  emptyPhase,
  newCanvas,
} from './canvas.js';
import { Diagnostic, validateCanvas } from './validate.js';

export class ExportBlocked extends Error {
  constructor(public diagnostics: Diagnostic[]) {
    super(`export blocked by ${diagnostics.length} diagnostic(s)`);
  }
}

export class ImportError extends Error {}

interface DescriptorDoc {
  type: string;
  params: Record<string, unknown>;
}

function descriptor(node: NodeDraft): DescriptorDoc {
  return { type: node.type, params: { ...node.params } };
}

export function exportConfig(canvas: CanvasState, catalog: Catalog): Record<string, unknown> {
  const diagnostics = validateCanvas(canvas, catalog);
  if (diagnostics.length > 0) throw new ExportBlocked(diagnostics);
  const phases: Record<string, unknown> = {};
  for (const name of PHASE_NAMES) {
    const p = canvas.phases[name];
    if (!p) continue;
    const phase: Record<string, unknown> = {
      dataset: descriptor(p.dataset!),
      transforms: p.transforms.map(descriptor),
      model: descriptor(p.model!),
      losses: p.losses.map(descriptor),
      metrics: p.metrics.map(descriptor),
    };
    if (p.optimizer) phase.optimizer = descriptor(p.optimizer);
    phase.workflow = descriptor(p.workflow!);
    phase.hooks = p.hooks.map(descriptor);
    phases[name] = phase;
  }
  return {
    version: '1.0',
    seed: canvas.seed,
    data_root: canvas.dataRoot,
    output_dir: canvas.outputDir,
    phases,
  };
}

export function exportConfigText(canvas: CanvasState, catalog: Catalog): string {
  return JSON.stringify(exportConfig(canvas, catalog), null, 2) + '\n';
}

/** Lenient document for live engine checks: includes whatever is on the
 * canvas, never throws. The engine reports missing slots itself. */
export function draftConfig(canvas: CanvasState): Record<string, unknown> {
  const phases: Record<string, unknown> = {};
  for (const name of PHASE_NAMES) {
    const p = canvas.phases[name];
    if (!p) continue;
    const phase: Record<string, unknown> = {};
    if (p.dataset) phase.dataset = descriptor(p.dataset);
    if (p.transforms.length) phase.transforms = p.transforms.map(descriptor);
    if (p.model) phase.model = descriptor(p.model);
    if (p.losses.length) phase.losses = p.losses.map(descriptor);
    if (p.metrics.length) phase.metrics = p.metrics.map(descriptor);
    if (p.optimizer) phase.optimizer = descriptor(p.optimizer);
    if (p.workflow) phase.workflow = descriptor(p.workflow);
    if (p.hooks.length) phase.hooks = p.hooks.map(descriptor);
    phases[name] = phase;
  }
  return {
    version: '1.0',
    seed: canvas.seed,
    data_root: canvas.dataRoot,
    output_dir: canvas.outputDir,
    phases,
  };
}

const TOP_KEYS = new Set(['version', 'seed', 'data_root', 'output_dir', 'phases']);
const PHASE_KEYS = new Set(['dataset', 'transforms', 'model', 'losses', 'metrics', 'optimizer', 'workflow', 'hooks']);

function importDescriptor(raw: unknown, path: string, catalog: Catalog, canvas: CanvasState): NodeDraft {
  if (typeof raw !== 'object' || raw === null) throw new ImportError(`${path}: module entry must be an object`);
  const d = raw as Record<string, unknown>;
  for (const key of Object.keys(d)) {
    if (key !== 'type' && key !== 'params') throw new ImportError(`${path}: unknown key '${key}'`);
  }
  if (typeof d.type !== 'string' || !d.type) throw new ImportError(`${path}: missing 'type'`);
  const params = d.params ?? {};
  if (typeof params !== 'object' || Array.isArray(params)) throw new ImportError(`${path}: 'params' must be an object`);
  return {
    id: canvas.nextId++,
    type: d.type,
    params: { ...(params as Record<string, unknown>) },
    unknown: findModule(catalog, d.type) === undefined,
  };
}

function importList(raw: unknown, path: string, catalog: Catalog, canvas: CanvasState): NodeDraft[] {
  if (raw === undefined) return [];
  if (!Array.isArray(raw)) throw new ImportError(`${path}: expected an array`);
  return raw.map((entry, i) => importDescriptor(entry, `${path}[${i}]`, catalog, canvas));
}

/** Rebuild a canvas from config text. Throws ImportError on structural
 * problems (the caller keeps its previous canvas); unknown module types
 * come back as error nodes so nothing the user owns is silently lost. */
export function importConfig(text: string, catalog: Catalog): CanvasState {
  let raw: unknown;
  try {
    raw = JSON.parse(text);
  } catch (e) {
    throw new ImportError(`config is not valid JSON: ${(e as Error).message}`);
  }
  if (typeof raw !== 'object' || raw === null || Array.isArray(raw)) {
    throw new ImportError('config top level must be an object');
  }
  const doc = raw as Record<string, unknown>;
  for (const key of Object.keys(doc)) {
    if (!TOP_KEYS.has(key)) throw new ImportError(`unknown key '${key}'`);
  }
  if (doc.version !== '1.0') throw new ImportError(`unsupported config version ${JSON.stringify(doc.version)}`);
  const canvas = newCanvas();
  if (doc.seed !== undefined) {
    if (typeof doc.seed !== 'number' || !Number.isInteger(doc.seed) || doc.seed < 0) {
      throw new ImportError('seed must be a non-negative integer');
    }
    canvas.seed = doc.seed;
  }
  if (doc.data_root !== undefined) {
    if (typeof doc.data_root !== 'string') throw new ImportError('data_root must be a string');
    canvas.dataRoot = doc.data_root;
  }
  if (doc.output_dir !== undefined) {
    if (typeof doc.output_dir !== 'string') throw new ImportError('output_dir must be a string');
    canvas.outputDir = doc.output_dir;
  }
  if (typeof doc.phases !== 'object' || doc.phases === null) {
    throw new ImportError('config declares no phases');
  }
  const phasesRaw = doc.phases as Record<string, unknown>;
  for (const name of Object.keys(phasesRaw)) {
    if (!PHASE_NAMES.includes(name as PhaseName)) throw new ImportError(`unknown phase '${name}'`);
    const phaseRaw = phasesRaw[name];
    if (typeof phaseRaw !== 'object' || phaseRaw === null) throw new ImportError(`phases.${name} must be an object`);
    const pr = phaseRaw as Record<string, unknown>;
    for (const key of Object.keys(pr)) {
      if (!PHASE_KEYS.has(key)) throw new ImportError(`phases.${name}: unknown key '${key}'`);
    }
    const base = `phases.${name}`;
    const phase = emptyPhase();
    if (pr.dataset !== undefined) phase.dataset = importDescriptor(pr.dataset, `${base}.dataset`, catalog, canvas);
    phase.transforms = importList(pr.transforms, `${base}.transforms`, catalog, canvas);
    if (pr.model !== undefined) phase.model = importDescriptor(pr.model, `${base}.model`, catalog, canvas);
    phase.losses = importList(pr.losses, `${base}.losses`, catalog, canvas);
    phase.metrics = importList(pr.metrics, `${base}.metrics`, catalog, canvas);
    if (pr.optimizer !== undefined) {
      phase.optimizer = importDescriptor(pr.optimizer, `${base}.optimizer`, catalog, canvas);
    }
    if (pr.workflow !== undefined) phase.workflow = importDescriptor(pr.workflow, `${base}.workflow`, catalog, canvas);
    phase.hooks = importList(pr.hooks, `${base}.hooks`, catalog, canvas);
    canvas.phases[name as PhaseName] = phase;
  }
  return canvas;
}

/** Structural fingerprint for round-trip comparisons: everything except
 * the transient node ids. */
export function canvasFingerprint(canvas: CanvasState): string {
  const node = (n: NodeDraft | null) => (n ? { type: n.type, params: n.params, unknown: n.unknown } : null);
  const phases: Record<string, unknown> = {};
  for (const name of PHASE_NAMES) {
    const p = canvas.phases[name];
    if (!p) continue;
    phases[name] = {
      dataset: node(p.dataset),
      transforms: p.transforms.map(node),
      model: node(p.model),
      losses: p.losses.map(node),
      metrics: p.metrics.map(node),
      optimizer: node(p.optimizer),
      workflow: node(p.workflow),
      hooks: p.hooks.map(node),
    };
  }
  return JSON.stringify({ seed: canvas.seed, dataRoot: canvas.dataRoot, outputDir: canvas.outputDir, phases });
}
