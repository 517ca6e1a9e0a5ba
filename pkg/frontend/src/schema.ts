/**
 * Loaders for the lfpp-lab run artifacts: manifest.json, summary.json,
 * records.csv.  Read-only contract against schema version 1; newer schemas
 * are refused so stale renderers cannot silently misplot.
 */
import { readFileSync } from "fs";
import path from "path";

export const SUPPORTED_SCHEMA = 1;

export interface Manifest {
  schema_version: number;
  code_version: string;
  status: string;
  config: {
    kind: string;
    master_seed: number;
    parameters: Record<string, unknown>;
  };
}

export type Summary = Record<string, any>;

export interface RecordRow {
  kind: string;
  parameters: Record<string, string>;
  replicate: number;
  statistic: string;
  value: number | "censored";
  seed: string;
}

export class SchemaError extends Error {}

export interface RunArtifacts {
  manifest: Manifest;
  summary: Summary;
  records: RecordRow[];
}

export function loadRun(dir: string): RunArtifacts {
  const manifest = JSON.parse(
    readFileSync(path.join(dir, "manifest.json"), "utf-8"),
  ) as Manifest;
  if (typeof manifest.schema_version !== "number") {
    throw new SchemaError("manifest missing schema_version");
  }
  if (manifest.schema_version > SUPPORTED_SCHEMA) {
    throw new SchemaError(
      `manifest schema_version ${manifest.schema_version} is newer than ` +
        `supported ${SUPPORTED_SCHEMA}; refusing to render`,
    );
  }
  const summary = JSON.parse(
    readFileSync(path.join(dir, "summary.json"), "utf-8"),
  ) as Summary;
  const records = parseRecords(
    readFileSync(path.join(dir, "records.csv"), "utf-8"),
  );
  return { manifest, summary, records };
}

const COLUMNS = ["kind", "parameters", "replicate", "statistic", "value", "seed"];

export function parseRecords(text: string): RecordRow[] {
  const lines = text.split("\n").filter((l) => l.length > 0);
  if (lines.length === 0) {
    throw new SchemaError("records.csv is empty");
  }
  const header = lines[0].split(",");
  if (header.length !== COLUMNS.length || !COLUMNS.every((c, i) => header[i] === c)) {
    throw new SchemaError(
      `records.csv columns [${header.join(",")}] != expected [${COLUMNS.join(",")}]`,
    );
  }
  if (lines.length === 1) {
    throw new SchemaError("records.csv has no data rows");
  }
  const rows: RecordRow[] = [];
  for (const line of lines.slice(1)) {
    const parts = line.split(",");
    if (parts.length !== COLUMNS.length) {
      throw new SchemaError(`malformed record line: ${line}`);
    }
    const params: Record<string, string> = {};
    if (parts[1].length > 0) {
      for (const kv of parts[1].split(";")) {
        const eq = kv.indexOf("=");
        params[kv.slice(0, eq)] = kv.slice(eq + 1);
      }
    }
    rows.push({
      kind: parts[0],
      parameters: params,
      replicate: Number(parts[2]),
      statistic: parts[3],
      value: parts[4] === "censored" ? "censored" : Number(parts[4]),
      seed: parts[5],
    });
  }
  return rows;
}

export function numericValues(rows: RecordRow[]): number[] {
  return rows
    .filter((r) => r.value !== "censored")
    .map((r) => r.value as number);
}
