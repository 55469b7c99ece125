// Canvas state: per phase, ordered slots holding module drafts. Slot
// cardinalities are enforced at drop time; transform order is the visual
// order.

import { Catalog, Category, findModule } from './catalog.js';

export type PhaseName = 'train' | 'validate' | 'test';
export const PHASE_NAMES: PhaseName[] = ['train', 'validate', 'test'];

export type SlotName =
  | 'dataset'
  | 'transforms'
  | 'model'
  | 'losses'
  | 'metrics'
  | 'optimizer'
  | 'workflow'
  | 'hooks';

export const SLOT_ORDER: SlotName[] = [
  'dataset',
  'transforms',
  'model',
  'losses',
  'metrics',
  'optimizer',
  'workflow',
  'hooks',
];

export const SLOT_CATEGORY: Record<SlotName, Category> = {
  dataset: 'dataset',
  transforms: 'transform',
  model: 'model',
  losses: 'loss',
  metrics: 'metric',
  optimizer: 'optimizer',
  workflow: 'workflow',
  hooks: 'hook',
};

const SINGLE_SLOTS: SlotName[] = ['dataset', 'model', 'optimizer', 'workflow'];

export interface NodeDraft {
  id: number;
  type: string;
  params: Record<string, unknown>;
  /** true when imported with a type the catalog does not know: the node is
   * kept visible as an error node and blocks export */
  unknown: boolean;
}

export interface PhaseCanvas {
  dataset: NodeDraft | null;
  transforms: NodeDraft[];
  model: NodeDraft | null;
  losses: NodeDraft[];
  metrics: NodeDraft[];
  optimizer: NodeDraft | null;
  workflow: NodeDraft | null;
  hooks: NodeDraft[];
}

export interface CanvasState {
  seed: number;
  dataRoot: string;
  outputDir: string;
  phases: Partial<Record<PhaseName, PhaseCanvas>>;
  nextId: number;
}

export function emptyPhase(): PhaseCanvas {
  return {
    dataset: null,
    transforms: [],
    model: null,
    losses: [],
    metrics: [],
    optimizer: null,
    workflow: null,
    hooks: [],
  };
}

export function newCanvas(): CanvasState {
  return { seed: 42, dataRoot: '.', outputDir: './output', phases: {}, nextId: 1 };
}

export function addPhase(canvas: CanvasState, phase: PhaseName): PhaseCanvas {
  if (!canvas.phases[phase]) canvas.phases[phase] = emptyPhase();
  return canvas.phases[phase]!;
}

export function removePhase(canvas: CanvasState, phase: PhaseName): void {
  delete canvas.phases[phase];
}

/** Default param values for a freshly dropped module: optional params get
 * their schema defaults, required ones start unset. */
export function initialParams(catalog: Catalog, type: string): Record<string, unknown> {
  const schema = findModule(catalog, type);
  const params: Record<string, unknown> = {};
  if (!schema) return params;
  for (const p of schema.params) {
    if (!p.required && p.default !== undefined) params[p.name] = p.default;
  }
  return params;
}

export class DropRejected extends Error {}

/** Place a module of `type` into a slot, enforcing category match and slot
 * cardinality. Returns the created draft. */
export function dropModule(
  canvas: CanvasState,
  catalog: Catalog,
  phase: PhaseName,
  slot: SlotName,
  type: string,
): NodeDraft {
  const schema = findModule(catalog, type);
  if (!schema) throw new DropRejected(`unknown module type ${type}`);
  if (schema.category !== SLOT_CATEGORY[slot]) {
    throw new DropRejected(`${type} is a ${schema.category}, the ${slot} slot takes a ${SLOT_CATEGORY[slot]}`);
  }
  if (slot === 'optimizer' && phase !== 'train') {
    throw new DropRejected(`only the train phase takes an optimizer`);
  }
  const target = addPhase(canvas, phase);
  const draft: NodeDraft = { id: canvas.nextId++, type, params: initialParams(catalog, type), unknown: false };
  if (SINGLE_SLOTS.includes(slot)) {
    if (target[slot as 'dataset' | 'model' | 'optimizer' | 'workflow'] !== null) {
      throw new DropRejected(`the ${slot} slot is already filled`);
    }
    (target as unknown as Record<string, NodeDraft>)[slot] = draft;
  } else {
    (target as unknown as Record<string, NodeDraft[]>)[slot].push(draft);
  }
  return draft;
}

export function removeNode(canvas: CanvasState, phase: PhaseName, slot: SlotName, id: number): void {
  const target = canvas.phases[phase];
  if (!target) return;
  if (SINGLE_SLOTS.includes(slot)) {
    const key = slot as 'dataset' | 'model' | 'optimizer' | 'workflow';
    if (target[key]?.id === id) target[key] = null;
  } else {
    const key = slot as 'transforms' | 'losses' | 'metrics' | 'hooks';
    target[key] = target[key].filter((n) => n.id !== id);
  }
}

/** Reorder a list slot: move the node at `from` to position `to`. */
export function moveNode(canvas: CanvasState, phase: PhaseName, slot: SlotName, from: number, to: number): void {
  const target = canvas.phases[phase];
  if (!target || SINGLE_SLOTS.includes(slot)) return;
  const key = slot as 'transforms' | 'losses' | 'metrics' | 'hooks';
  const list = target[key];
  if (from < 0 || from >= list.length || to < 0 || to >= list.length) return;
  const [node] = list.splice(from, 1);
  list.splice(to, 0, node);
}

export function setParam(node: NodeDraft, name: string, value: unknown): void {
  if (value === undefined) {
    delete node.params[name];
  } else {
    node.params[name] = value;
  }
}

export function* iterNodes(
  canvas: CanvasState,
): Generator<{ phase: PhaseName; slot: SlotName; index: number; node: NodeDraft }> {
  for (const phase of PHASE_NAMES) {
    const p = canvas.phases[phase];
    if (!p) continue;
    for (const slot of SLOT_ORDER) {
      if (SINGLE_SLOTS.includes(slot)) {
        const node = p[slot as 'dataset' | 'model' | 'optimizer' | 'workflow'];
        if (node) yield { phase, slot, index: 0, node };
      } else {
        const list = p[slot as 'transforms' | 'losses' | 'metrics' | 'hooks'];
        for (let i = 0; i < list.length; i++) yield { phase, slot, index: i, node: list[i] };
      }
    }
  }
}
