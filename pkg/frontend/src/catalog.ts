// Catalog model: the machine-readable module registry served by the engine
// (`voxelflow describe` or GET /catalog). The palette is a pure function of
// this document.

export type Category =
  | 'dataset'
  | 'transform'
  | 'model'
  | 'loss'
  | 'metric'
  | 'optimizer'
  | 'workflow'
  | 'hook';

export const CATEGORIES: Category[] = [
  'dataset',
  'transform',
  'model',
  'loss',
  'metric',
  'optimizer',
  'workflow',
  'hook',
];

export type ParamKind = 'int' | 'real' | 'bool' | 'string' | 'int-list' | 'real-list' | 'string-list';

export interface ParamSchema {
  name: string;
  kind: ParamKind;
  required: boolean;
  default?: unknown;
  doc: string;
}

export interface ModuleSchema {
  type: string;
  category: Category;
  doc: string;
  params: ParamSchema[];
}

export interface Catalog {
  version: string;
  modules: ModuleSchema[];
}

export class CatalogError extends Error {}

const PARAM_KINDS = new Set(['int', 'real', 'bool', 'string', 'int-list', 'real-list', 'string-list']);

function asModule(raw: unknown, index: number): ModuleSchema {
  if (typeof raw !== 'object' || raw === null) {
    throw new CatalogError(`module ${index} is not an object`);
  }
  const m = raw as Record<string, unknown>;
  if (typeof m.type !== 'string' || !m.type) {
    throw new CatalogError(`module ${index} has no type name`);
  }
  if (typeof m.category !== 'string' || !CATEGORIES.includes(m.category as Category)) {
    throw new CatalogError(`module ${m.type}: bad category ${String(m.category)}`);
  }
  if (!Array.isArray(m.params)) {
    throw new CatalogError(`module ${m.type}: params must be an array`);
  }
  const params = m.params.map((p, i) => {
    const q = p as Record<string, unknown>;
    if (typeof q.name !== 'string' || !PARAM_KINDS.has(String(q.kind))) {
      throw new CatalogError(`module ${m.type}: bad param schema at index ${i}`);
    }
    return {
      name: q.name,
      kind: q.kind as ParamKind,
      required: Boolean(q.required),
      default: q.default,
      doc: typeof q.doc === 'string' ? q.doc : '',
    };
  });
  return { type: m.type, category: m.category as Category, doc: typeof m.doc === 'string' ? m.doc : '', params };
}

export function parseCatalog(text: string): Catalog {
  let raw: unknown;
  try {
    raw = JSON.parse(text);
  } catch (e) {
    throw new CatalogError(`catalog is not valid JSON: ${(e as Error).message}`);
  }
  if (typeof raw !== 'object' || raw === null || !Array.isArray((raw as Record<string, unknown>).modules)) {
    throw new CatalogError('catalog must be an object with a "modules" array');
  }
  const doc = raw as { version?: unknown; modules: unknown[] };
  const modules = doc.modules.map(asModule);
  const seen = new Set<string>();
  for (const m of modules) {
    if (seen.has(m.type)) throw new CatalogError(`duplicate module type ${m.type}`);
    seen.add(m.type);
  }
  return { version: typeof doc.version === 'string' ? doc.version : '1.0', modules };
}

/** Palette content: modules grouped by category, catalog order preserved. */
export function groupByCategory(catalog: Catalog): Map<Category, ModuleSchema[]> {
  const groups = new Map<Category, ModuleSchema[]>();
  for (const category of CATEGORIES) groups.set(category, []);
  for (const m of catalog.modules) groups.get(m.category)!.push(m);
  return groups;
}

export function findModule(catalog: Catalog, type: string): ModuleSchema | undefined {
  return catalog.modules.find((m) => m.type === type);
}
