import { readFileSync } from "node:fs";
import Papa from "papaparse";

/** A parsed CSV: column names in file order plus one record per row. */
export interface Table {
  columns: string[];
  rows: Record<string, string>[];
}

export class DataFileError extends Error {}

/** Raised when a requested variable is absent from an input file. */
export class MissingVariableError extends Error {
  constructor(
    readonly variable: string,
    readonly file: string,
  ) {
    super(`variable ${JSON.stringify(variable)} not present in ${file}`);
  }
}

export function readCsv(path: string): Table {
  let text: string;
  try {
    text = readFileSync(path, "utf8");
  } catch (err) {
    throw new DataFileError(`cannot read ${path}: ${(err as Error).message}`);
  }
  const parsed = Papa.parse<Record<string, string>>(text, {
    header: true,
    skipEmptyLines: true,
  });
  // single-column files trip papaparse's delimiter sniffing; that is benign
  const fatal = parsed.errors.filter((e) => e.code !== "UndetectableDelimiter");
  if (fatal.length > 0) {
    const first = fatal[0]!;
    throw new DataFileError(`${path}: ${first.message} (row ${first.row})`);
  }
  const columns = parsed.meta.fields ?? [];
  if (columns.length === 0) {
    throw new DataFileError(`${path}: no header row`);
  }
  return { columns, rows: parsed.data };
}

/** Numeric column accessor; every cell must parse as a finite number. */
export function numericColumn(table: Table, path: string, name: string): number[] {
  if (!table.columns.includes(name)) {
    throw new MissingVariableError(name, path);
  }
  return table.rows.map((row, i) => {
    const cell = (row[name] ?? "").trim();
    const value = cell === "" ? Number.NaN : Number(cell);
    if (!Number.isFinite(value)) {
      throw new DataFileError(`${path}: row ${i} column ${name}: not a number`);
    }
    return value;
  });
}

export function stringColumn(table: Table, path: string, name: string): string[] {
  if (!table.columns.includes(name)) {
    throw new MissingVariableError(name, path);
  }
  return table.rows.map((row) => row[name] ?? "");
}
