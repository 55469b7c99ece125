// DOM layer: palette, phase canvas with drop zones, schema-generated
// parameter forms, diagnostics panel, import/export. All state logic lives
// in the pure modules; this file only renders and forwards events.

import { Catalog, ModuleSchema, ParamSchema, groupByCategory } from './catalog.js';
import {
  CanvasState,
  DropRejected,
  NodeDraft,
  PHASE_NAMES,
  PhaseName,
  SLOT_CATEGORY,
  SLOT_ORDER,
  SlotName,
  addPhase,
  dropModule,
  moveNode,
  newCanvas,
  removeNode,
  removePhase,
  setParam,
} from './canvas.js';
import { exportConfigText, draftConfig, importConfig, ExportBlocked, ImportError } from './configio.js';
import { parseCatalog } from './catalog.js';
import { checkWithEngine, fetchCatalog } from './engine.js';
import { Diagnostic, parseParamInput, validateCanvas } from './validate.js';

interface AppState {
  catalog: Catalog | null;
  canvas: CanvasState;
  engineUrl: string;
  engineDiagnostics: Diagnostic[];
  fieldErrors: Map<string, string>; // `${nodeId}.${param}` -> message
}

const state: AppState = {
  catalog: null,
  canvas: newCanvas(),
  engineUrl: 'http://127.0.0.1:8765',
  engineDiagnostics: [],
  fieldErrors: new Map(),
};

const $ = <T extends HTMLElement>(selector: string): T => {
  const el = document.querySelector<T>(selector);
  if (!el) throw new Error(`missing element ${selector}`);
  return el;
};

function banner(message: string, kind: 'error' | 'info' = 'error'): void {
  const area = $('#banners');
  const div = document.createElement('div');
  div.className = `banner ${kind}`;
  div.textContent = message;
  const close = document.createElement('button');
  close.textContent = '×';
  close.onclick = () => div.remove();
  div.appendChild(close);
  area.appendChild(div);
  if (kind === 'info') setTimeout(() => div.remove(), 5000);
}

// ---------------------------------------------------------------------------
// palette

function renderPalette(): void {
  const palette = $('#palette');
  palette.textContent = '';
  if (!state.catalog) {
    palette.textContent = 'Load a catalog to begin.';
    return;
  }
  for (const [category, modules] of groupByCategory(state.catalog)) {
    if (!modules.length) continue;
    const section = document.createElement('div');
    section.className = 'palette-group';
    const heading = document.createElement('h3');
    heading.textContent = category;
    section.appendChild(heading);
    for (const m of modules) {
      section.appendChild(paletteEntry(m));
    }
    palette.appendChild(section);
  }
}

function paletteEntry(m: ModuleSchema): HTMLElement {
  const entry = document.createElement('div');
  entry.className = 'palette-entry';
  entry.draggable = true;
  entry.textContent = m.type;
  entry.title = m.doc;
  entry.dataset.type = m.type;
  entry.addEventListener('dragstart', (e) => {
    e.dataTransfer?.setData('text/plain', m.type);
  });
  return entry;
}

// ---------------------------------------------------------------------------
// canvas

function renderCanvas(): void {
  const host = $('#phases');
  host.textContent = '';
  for (const phase of PHASE_NAMES) {
    const column = document.createElement('div');
    column.className = 'phase';
    const heading = document.createElement('h2');
    heading.textContent = phase;
    column.appendChild(heading);
    if (!state.canvas.phases[phase]) {
      const btn = document.createElement('button');
      btn.textContent = `add ${phase} phase`;
      btn.onclick = () => {
        addPhase(state.canvas, phase);
        refresh();
      };
      column.appendChild(btn);
    } else {
      const drop = document.createElement('button');
      drop.textContent = 'remove phase';
      drop.className = 'remove-phase';
      drop.onclick = () => {
        removePhase(state.canvas, phase);
        refresh();
      };
      column.appendChild(drop);
      for (const slot of SLOT_ORDER) {
        if (slot === 'optimizer' && phase !== 'train') continue;
        column.appendChild(renderSlot(phase, slot));
      }
    }
    host.appendChild(column);
  }
}

function renderSlot(phase: PhaseName, slot: SlotName): HTMLElement {
  const p = state.canvas.phases[phase]!;
  const zone = document.createElement('div');
  zone.className = 'slot';
  const label = document.createElement('h4');
  label.textContent = `${slot} (${SLOT_CATEGORY[slot]})`;
  zone.appendChild(label);

  zone.addEventListener('dragover', (e) => e.preventDefault());
  zone.addEventListener('drop', (e) => {
    e.preventDefault();
    const type = e.dataTransfer?.getData('text/plain');
    if (!type || !state.catalog) return;
    try {
      dropModule(state.canvas, state.catalog, phase, slot, type);
      refresh();
    } catch (err) {
      if (err instanceof DropRejected) banner(err.message);
      else throw err;
    }
  });

  const single = slot === 'dataset' || slot === 'model' || slot === 'optimizer' || slot === 'workflow';
  if (single) {
    const node = p[slot as 'dataset' | 'model' | 'optimizer' | 'workflow'];
    if (node) zone.appendChild(renderNode(phase, slot, node, 0, 1));
  } else {
    const list = p[slot as 'transforms' | 'losses' | 'metrics' | 'hooks'];
    list.forEach((node, i) => zone.appendChild(renderNode(phase, slot, node, i, list.length)));
  }
  return zone;
}

function renderNode(phase: PhaseName, slot: SlotName, node: NodeDraft, index: number, count: number): HTMLElement {
  const card = document.createElement('div');
  card.className = node.unknown ? 'node unknown' : 'node';
  const title = document.createElement('div');
  title.className = 'node-title';
  title.textContent = node.unknown ? `${node.type} (unknown type)` : node.type;
  card.appendChild(title);

  const controls = document.createElement('div');
  controls.className = 'node-controls';
  if (count > 1) {
    const up = document.createElement('button');
    up.textContent = '↑';
    up.disabled = index === 0;
    up.onclick = () => {
      moveNode(state.canvas, phase, slot, index, index - 1);
      refresh();
    };
    const down = document.createElement('button');
    down.textContent = '↓';
    down.disabled = index === count - 1;
    down.onclick = () => {
      moveNode(state.canvas, phase, slot, index, index + 1);
      refresh();
    };
    controls.append(up, down);
  }
  const remove = document.createElement('button');
  remove.textContent = 'remove';
  remove.onclick = () => {
    removeNode(state.canvas, phase, slot, node.id);
    refresh();
  };
  controls.appendChild(remove);
  card.appendChild(controls);

  if (!node.unknown && state.catalog) {
    const schema = state.catalog.modules.find((m) => m.type === node.type);
    if (schema) {
      for (const param of schema.params) {
        card.appendChild(renderParamField(node, param));
      }
    }
  }
  return card;
}

function formatValue(value: unknown): string {
  if (value === undefined) return '';
  if (Array.isArray(value)) return value.join(', ');
  return String(value);
}

function renderParamField(node: NodeDraft, param: ParamSchema): HTMLElement {
  const row = document.createElement('label');
  row.className = 'param';
  const caption = document.createElement('span');
  caption.textContent = param.required ? `${param.name}*` : param.name;
  caption.title = `${param.kind}: ${param.doc}`;
  row.appendChild(caption);

  const errorKey = `${node.id}.${param.name}`;
  let input: HTMLInputElement;
  if (param.kind === 'bool') {
    input = document.createElement('input');
    input.type = 'checkbox';
    input.checked = node.params[param.name] === true;
    input.onchange = () => {
      setParam(node, param.name, input.checked);
      refresh();
    };
  } else {
    input = document.createElement('input');
    input.type = 'text';
    input.value = formatValue(node.params[param.name]);
    input.placeholder = param.kind;
    input.onchange = () => {
      if (input.value.trim() === '' && !param.required) {
        setParam(node, param.name, undefined);
        state.fieldErrors.delete(errorKey);
        refresh();
        return;
      }
      const parsed = parseParamInput(param.kind, input.value);
      if (parsed.error) {
        state.fieldErrors.set(errorKey, parsed.error);
        setParam(node, param.name, input.value); // keep the raw text; validation flags it
      } else {
        state.fieldErrors.delete(errorKey);
        setParam(node, param.name, parsed.value);
      }
      refresh();
    };
  }
  row.appendChild(input);
  const fieldError = state.fieldErrors.get(errorKey);
  if (fieldError) {
    row.classList.add('invalid');
    const msg = document.createElement('em');
    msg.textContent = fieldError;
    row.appendChild(msg);
  }
  return row;
}

// ---------------------------------------------------------------------------
// diagnostics + export

function currentDiagnostics(): Diagnostic[] {
  if (!state.catalog) return [];
  const local = validateCanvas(state.canvas, state.catalog);
  return [...local, ...state.engineDiagnostics];
}

function renderDiagnostics(): void {
  const panel = $('#diagnostics');
  panel.textContent = '';
  const diagnostics = currentDiagnostics();
  $('#export').toggleAttribute('disabled', diagnostics.length > 0 || !state.catalog);
  if (!diagnostics.length) {
    panel.textContent = state.catalog ? 'No problems found.' : '';
    return;
  }
  for (const d of diagnostics) {
    const row = document.createElement('div');
    row.className = `finding ${d.source}`;
    row.textContent = `[${d.source}] ${d.path}: ${d.message}`;
    panel.appendChild(row);
  }
}

function refresh(): void {
  renderPalette();
  renderCanvas();
  renderDiagnostics();
}

function download(filename: string, text: string): void {
  const blob = new Blob([text], { type: 'application/json' });
  const url = URL.createObjectURL(blob);
  const a = document.createElement('a');
  a.href = url;
  a.download = filename;
  a.click();
  URL.revokeObjectURL(url);
}

// ---------------------------------------------------------------------------
// toolbar wiring

function wireToolbar(): void {
  $('#load-url').addEventListener('click', async () => {
    state.engineUrl = ($('#engine-url') as HTMLInputElement).value;
    try {
      state.catalog = await fetchCatalog(state.engineUrl);
      banner('catalog loaded from engine', 'info');
    } catch (e) {
      banner(`cannot reach the engine: ${(e as Error).message}; load a catalog file instead`);
    }
    refresh();
  });

  ($('#catalog-file') as HTMLInputElement).addEventListener('change', async (e) => {
    const file = (e.target as HTMLInputElement).files?.[0];
    if (!file) return;
    try {
      state.catalog = parseCatalog(await file.text());
      banner(`catalog loaded: ${state.catalog.modules.length} modules`, 'info');
    } catch (err) {
      state.catalog = null;
      banner((err as Error).message);
    }
    refresh();
  });

  ($('#import-file') as HTMLInputElement).addEventListener('change', async (e) => {
    const file = (e.target as HTMLInputElement).files?.[0];
    if (!file || !state.catalog) return;
    try {
      state.canvas = importConfig(await file.text(), state.catalog);
      state.engineDiagnostics = [];
      state.fieldErrors.clear();
      banner('config imported', 'info');
    } catch (err) {
      if (err instanceof ImportError) banner(`import failed, canvas unchanged: ${err.message}`);
      else throw err;
    }
    refresh();
  });

  $('#export').addEventListener('click', () => {
    if (!state.catalog) return;
    try {
      download('config.json', exportConfigText(state.canvas, state.catalog));
    } catch (err) {
      if (err instanceof ExportBlocked) banner(err.message);
      else throw err;
    }
  });

  $('#engine-check').addEventListener('click', async () => {
    state.engineUrl = ($('#engine-url') as HTMLInputElement).value;
    try {
      state.engineDiagnostics = await checkWithEngine(state.engineUrl, draftConfig(state.canvas));
      banner('engine check complete', 'info');
    } catch (e) {
      state.engineDiagnostics = [];
      banner(`engine unreachable (${(e as Error).message}); showing local validation only`);
    }
    refresh();
  });

  ($('#seed') as HTMLInputElement).addEventListener('change', (e) => {
    const value = Number((e.target as HTMLInputElement).value);
    if (Number.isInteger(value) && value >= 0) state.canvas.seed = value;
    refresh();
  });
  ($('#data-root') as HTMLInputElement).addEventListener('change', (e) => {
    state.canvas.dataRoot = (e.target as HTMLInputElement).value;
  });
  ($('#output-dir') as HTMLInputElement).addEventListener('change', (e) => {
    state.canvas.outputDir = (e.target as HTMLInputElement).value;
  });
}

export function start(): void {
  wireToolbar();
  refresh();
}

document.addEventListener('DOMContentLoaded', start);
