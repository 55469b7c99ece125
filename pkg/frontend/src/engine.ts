// Optional live-engine integration: fetch the catalog and ask the engine
// to check a draft config. Network failure degrades to local-only
// validation; the caller shows a notice.

import { Catalog, parseCatalog } from './catalog.js';
import { Diagnostic } from './validate.js';

export interface CheckReport {
  ok: boolean;
  findings: { path: string; message: string }[];
}

export async function fetchCatalog(baseUrl: string): Promise<Catalog> {
  const response = await fetch(`${baseUrl.replace(/\/$/, '')}/catalog`);
  if (!response.ok) throw new Error(`GET /catalog failed: ${response.status}`);
  return parseCatalog(await response.text());
}

export async function checkWithEngine(baseUrl: string, configDoc: unknown): Promise<Diagnostic[]> {
  const response = await fetch(`${baseUrl.replace(/\/$/, '')}/check`, {
    method: 'POST',
    headers: { 'Content-Type': 'application/json' },
    body: JSON.stringify(configDoc),
  });
  if (!response.ok) throw new Error(`POST /check failed: ${response.status}`);
  const report = (await response.json()) as CheckReport;
  return report.findings.map((f) => ({ path: f.path, message: f.message, source: 'engine' as const }));
}
