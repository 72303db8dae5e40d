/** Loading the documented run-directory contracts: CSVs, edge list, manifest. */
import * as fs from "node:fs";
import * as path from "node:path";

export interface Manifest {
  fingerprint: string;
  label: string;
  replicate: number;
  n_nodes: number;
  rounds: number;
}

export interface PerNodeRow {
  round: number;
  node: number;
  accuracy: number;
  loss: number;
}

export interface SummaryRow {
  round: number;
  mean: number;
  std: number;
}

export interface ConfusionCell {
  round: number;
  node: number;
  trueClass: number;
  predClass: number;
  count: number;
}

export interface GraphInfo {
  n: number;
  blocks: number[] | null;
  degrees: number[];
}

export interface RunDir {
  dir: string;
  manifest: Manifest;
  summary: SummaryRow[];
  perNode: PerNodeRow[];
  graph: GraphInfo;
  confusionPath: string;
}

/** Split a plain (unquoted) CSV file into trimmed rows, header removed. */
function csvRows(file: string): string[][] {
  const text = fs.readFileSync(file, "utf-8").trim();
  const lines = text.split("\n");
  return lines.slice(1).map((line) => line.split(","));
}

export function loadGraph(file: string): GraphInfo {
  const lines = fs.readFileSync(file, "utf-8").trim().split("\n");
  const header = lines[0];
  const match = header.match(/^# n=(\d+) blocks=(\S+)$/);
  if (!match) {
    throw new Error(`${file}: malformed edge-list header: ${header}`);
  }
  const n = parseInt(match[1], 10);
  const blocks = match[2] === "none" ? null : match[2].split(",").map(Number);
  const degrees = new Array<number>(n).fill(0);
  for (const line of lines.slice(1)) {
    const [u, v] = line.split(" ");
    degrees[parseInt(u, 10)] += 1;
    degrees[parseInt(v, 10)] += 1;
  }
  return { n, blocks, degrees };
}

function requireFile(dir: string, name: string): string {
  const p = path.join(dir, name);
  if (!fs.existsSync(p)) {
    throw new Error(`run directory ${dir} is missing ${name}`);
  }
  return p;
}

export function loadRun(dir: string): RunDir {
  const manifest = JSON.parse(
    fs.readFileSync(requireFile(dir, "manifest.json"), "utf-8"),
  ) as Manifest;
  const summary = csvRows(requireFile(dir, "summary.csv")).map((r) => {
    if (r.length !== 3) throw new Error(`${dir}/summary.csv: expected 3 columns, got ${r.length}`);
    return { round: Number(r[0]), mean: Number(r[1]), std: Number(r[2]) };
  });
  if (summary.length === 0) {
    throw new Error(`${dir}/summary.csv holds no data rows`);
  }
  const perNode = csvRows(requireFile(dir, "per_node.csv")).map((r) => {
    if (r.length !== 4) throw new Error(`${dir}/per_node.csv: expected 4 columns, got ${r.length}`);
    return { round: Number(r[0]), node: Number(r[1]), accuracy: Number(r[2]), loss: Number(r[3]) };
  });
  const graph = loadGraph(requireFile(dir, "graph.edges"));
  return { dir, manifest, summary, perNode, graph, confusionPath: requireFile(dir, "confusion.csv") };
}

export function loadConfusion(run: RunDir): ConfusionCell[] {
  return csvRows(run.confusionPath).map((r) => ({
    round: Number(r[0]),
    node: Number(r[1]),
    trueClass: Number(r[2]),
    predClass: Number(r[3]),
    count: Number(r[4]),
  }));
}

/** Accuracy series per node: node -> [accuracy at round 0, 1, ...]. */
export function accuracySeries(run: RunDir): Map<number, number[]> {
  const series = new Map<number, number[]>();
  const sorted = [...run.perNode].sort((a, b) => a.round - b.round || a.node - b.node);
  for (const row of sorted) {
    if (!series.has(row.node)) series.set(row.node, []);
    series.get(row.node)!.push(row.accuracy);
  }
  return series;
}

/** Highest-degree node set of size ceil(fraction*n); ties break by node id. */
export function topDegreeNodes(graph: GraphInfo, fraction: number): Set<number> {
  const quota = Math.ceil(fraction * graph.n);
  const order = graph.degrees
    .map((d, i) => [d, i] as const)
    .sort((a, b) => b[0] - a[0] || a[1] - b[1]);
  return new Set(order.slice(0, quota).map(([, i]) => i));
}
