// Local validation: mirrors the engine's parameter kind rules so most
// mistakes surface inline without a round-trip. Engine findings from
// POST /check are merged on top when a server is configured.

import { Catalog, ParamKind, findModule } from './catalog.js';
import { CanvasState, NodeDraft, PHASE_NAMES, iterNodes } from './canvas.js';

export interface Diagnostic {
  path: string;
  message: string;
  source: 'local' | 'engine';
}

export function kindAccepts(kind: ParamKind, value: unknown): boolean {
  if (typeof value === 'boolean') return kind === 'bool';
  switch (kind) {
    case 'int':
      return typeof value === 'number' && Number.isInteger(value);
    case 'real':
      return typeof value === 'number' && Number.isFinite(value);
    case 'string':
      return typeof value === 'string';
    case 'bool':
      return false; // non-boolean reached here
    default: {
      if (!Array.isArray(value)) return false;
      const inner = kind.slice(0, -'-list'.length) as ParamKind;
      return value.every((v) => kindAccepts(inner, v));
    }
  }
}

/** Parse a form field string into a typed param value, or return an error
 * string. Lists are comma-separated. */
export function parseParamInput(kind: ParamKind, text: string): { value?: unknown; error?: string } {
  const trimmed = text.trim();
  switch (kind) {
    case 'int': {
      if (!/^[+-]?\d+$/.test(trimmed)) return { error: 'expected an integer' };
      return { value: Number(trimmed) };
    }
    case 'real': {
      const value = Number(trimmed);
      if (trimmed === '' || !Number.isFinite(value)) return { error: 'expected a number' };
      return { value };
    }
    case 'string':
      return { value: text };
    case 'bool':
      if (trimmed === 'true') return { value: true };
      if (trimmed === 'false') return { value: false };
      return { error: 'expected true or false' };
    default: {
      const inner = kind.slice(0, -'-list'.length) as ParamKind;
      if (trimmed === '') return { value: [] };
      const parts = trimmed.split(',').map((p) => p.trim());
      const values: unknown[] = [];
      for (const part of parts) {
        const parsed = parseParamInput(inner, part);
        if (parsed.error) return { error: `list entry ${JSON.stringify(part)}: ${parsed.error}` };
        values.push(parsed.value);
      }
      return { value: values };
    }
  }
}

function nodePath(phase: string, slot: string, index: number, single: boolean): string {
  return single ? `phases.${phase}.${slot}` : `phases.${phase}.${slot}[${index}]`;
}

const SINGLE = new Set(['dataset', 'model', 'optimizer', 'workflow']);

function checkNode(catalog: Catalog, node: NodeDraft, path: string, out: Diagnostic[]): void {
  if (node.unknown) {
    out.push({ path, message: `unknown type '${node.type}' (imported; not in the catalog)`, source: 'local' });
    return;
  }
  const schema = findModule(catalog, node.type);
  if (!schema) {
    out.push({ path, message: `unknown type '${node.type}'`, source: 'local' });
    return;
  }
  const known = new Map(schema.params.map((p) => [p.name, p]));
  for (const name of Object.keys(node.params)) {
    if (!known.has(name)) {
      out.push({ path: `${path}.params.${name}`, message: `unknown parameter '${name}'`, source: 'local' });
    }
  }
  for (const p of schema.params) {
    const value = node.params[p.name];
    if (value === undefined) {
      if (p.required) {
        out.push({ path: `${path}.params.${p.name}`, message: `missing required parameter '${p.name}'`, source: 'local' });
      }
      continue;
    }
    if (!kindAccepts(p.kind, value)) {
      out.push({
        path: `${path}.params.${p.name}`,
        message: `parameter '${p.name}' expects ${p.kind}`,
        source: 'local',
      });
    }
  }
}

export function validateCanvas(canvas: CanvasState, catalog: Catalog): Diagnostic[] {
  const out: Diagnostic[] = [];
  const phases = PHASE_NAMES.filter((p) => canvas.phases[p]);
  if (phases.length === 0) {
    out.push({ path: 'phases', message: 'add at least one phase', source: 'local' });
  }
  for (const phase of phases) {
    const p = canvas.phases[phase]!;
    for (const slot of ['dataset', 'model', 'workflow'] as const) {
      if (!p[slot]) {
        out.push({ path: `phases.${phase}.${slot}`, message: `the ${slot} slot is empty`, source: 'local' });
      }
    }
    if (phase === 'train') {
      if (!p.optimizer) {
        out.push({ path: 'phases.train.optimizer', message: 'the train phase needs an optimizer', source: 'local' });
      }
      if (p.losses.length === 0) {
        out.push({ path: 'phases.train.losses', message: 'the train phase needs at least one loss', source: 'local' });
      }
    } else if (p.optimizer) {
      out.push({
        path: `phases.${phase}.optimizer`,
        message: `the ${phase} phase must not have an optimizer`,
        source: 'local',
      });
    }
  }
  for (const { phase, slot, index, node } of iterNodes(canvas)) {
    checkNode(catalog, node, nodePath(phase, slot, index, SINGLE.has(slot)), out);
  }
  // stable order: by path, then message
  out.sort((a, b) => (a.path < b.path ? -1 : a.path > b.path ? 1 : a.message < b.message ? -1 : 1));
  return out;
}

export function exportBlocked(diagnostics: Diagnostic[]): boolean {
  return diagnostics.length > 0;
}
