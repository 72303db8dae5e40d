/** The four figure kinds rendered from run directories.
 *
 * Every figure is a standalone SVG with the run fingerprint embedded in its
 * metadata and footer; rendering is deterministic so repeated invocations are
 * byte-identical. Run directories are never written to.
 */
import * as fs from "node:fs";
import * as path from "node:path";

import {
  ConfusionCell, RunDir, accuracySeries, loadConfusion, loadRun, topDegreeNodes,
} from "./runs.js";
import {
  HEIGHT, MARGIN, PALETTE, WIDTH, axes, escapeXml, fmt, linearScale, polylinePath,
  svgDocument,
} from "./svg.js";

export type FigureKind = "per_node" | "mean_std" | "per_community" | "confusion_heatmap";

export interface PlotSpec {
  kind: FigureKind;
  runs: string[];
  outDir: string;
  round?: number;
  /** e.g. "top-degree:0.1" — highlight the ceil(fraction*n) highest-degree nodes */
  highlight?: string;
  format?: "svg" | "png";
}

export interface FigureFile {
  path: string;
  highlighted: number;
}

function ensureSvg(spec: PlotSpec): void {
  const format = spec.format ?? "svg";
  if (format !== "svg") {
    throw new Error(
      `format ${format} is not supported in this build: no rasterizer dependency ` +
      `is available; render svg instead`,
    );
  }
}

function parseHighlight(rule: string | undefined): number {
  if (!rule) return 0;
  const match = rule.match(/^top-degree:([0-9.]+)$/);
  if (!match) {
    throw new Error(`unknown highlight rule ${rule}; expected top-degree:<fraction>`);
  }
  return parseFloat(match[1]);
}

function writeFigure(outDir: string, name: string, content: string): string {
  fs.mkdirSync(outDir, { recursive: true });
  const file = path.join(outDir, name);
  fs.writeFileSync(file, content, "utf-8");
  return file;
}

function runFileName(kind: string, run: RunDir): string {
  return `${kind}_${run.manifest.label}_r${run.manifest.replicate}.svg`;
}

const plotLeft = MARGIN.left;
const plotTop = MARGIN.top;
const plotW = WIDTH - MARGIN.left - MARGIN.right;
const plotH = HEIGHT - MARGIN.top - MARGIN.bottom;

/** One accuracy curve per node; highlighted nodes drawn last in a distinct color. */
export function plotPerNode(spec: PlotSpec): FigureFile[] {
  ensureSvg(spec);
  const fraction = parseHighlight(spec.highlight);
  const files: FigureFile[] = [];
  for (const dir of spec.runs) {
    const run = loadRun(dir);
    const series = accuracySeries(run);
    const rounds = run.summary.map((r) => r.round);
    const x = linearScale([rounds[0], rounds[rounds.length - 1]], [plotLeft, plotLeft + plotW]);
    const y = linearScale([0, 1], [plotTop + plotH, plotTop]);
    const highlighted = fraction > 0 ? topDegreeNodes(run.graph, fraction) : new Set<number>();
    const body: string[] = [];
    const draw = (node: number, cls: string, stroke: string, width: string) => {
      const ys = series.get(node)!;
      body.push(
        `<path class="${cls}" d="${polylinePath(rounds, ys, x, y)}" fill="none" ` +
        `stroke="${stroke}" stroke-width="${width}" stroke-opacity="0.85"/>`,
      );
    };
    const nodes = [...series.keys()].sort((a, b) => a - b);
    for (const node of nodes.filter((n) => !highlighted.has(n))) {
      draw(node, "node", "#9aa5b1", "1");
    }
    for (const node of nodes.filter((n) => highlighted.has(n))) {
      draw(node, "node highlight", "#d62728", "1.6");
    }
    body.push(...axes({ x, y, body }, "round", "accuracy", plotLeft, plotTop, plotW, plotH));
    if (highlighted.size > 0) {
      body.push(`<text x="${plotLeft + 8}" y="${plotTop + 14}" font-size="11" fill="#d62728">` +
                `highlighted: top ${fmt(fraction * 100, 0)}% degree (${highlighted.size} nodes)</text>`);
    }
    const title = escapeXml(`per-node accuracy — ${run.manifest.label} (replicate ${run.manifest.replicate})`);
    const doc = svgDocument(body, title, run.manifest.fingerprint);
    files.push({ path: writeFigure(spec.outDir, runFileName("per_node", run), doc),
                 highlighted: highlighted.size });
  }
  return files;
}

/** Mean curve per run plus a companion standard-deviation panel, shared colors. */
export function plotMeanStd(spec: PlotSpec): FigureFile[] {
  ensureSvg(spec);
  const runs = spec.runs.map(loadRun);
  const lengths = runs.map((r) => r.summary.length);
  const common = Math.min(...lengths);
  if (new Set(lengths).size > 1) {
    console.warn(
      `mean_std: runs disagree on round counts (${lengths.join(", ")}); truncating to ${common}`,
    );
  }
  const rounds = runs[0].summary.slice(0, common).map((r) => r.round);
  const x = linearScale([rounds[0], rounds[rounds.length - 1]], [plotLeft, plotLeft + plotW]);
  const panelH = (plotH - 30) / 2;
  const yMean = linearScale([0, 1], [plotTop + panelH, plotTop]);
  const stdMax = Math.max(...runs.flatMap((r) => r.summary.slice(0, common).map((s) => s.std)));
  const yStd = linearScale([0, Math.max(stdMax, 1e-6)],
                           [plotTop + plotH, plotTop + panelH + 30]);
  const body: string[] = [];
  runs.forEach((run, i) => {
    const color = PALETTE[i % PALETTE.length];
    const means = run.summary.slice(0, common).map((s) => s.mean);
    const stds = run.summary.slice(0, common).map((s) => s.std);
    body.push(`<path d="${polylinePath(rounds, means, x, yMean)}" fill="none" stroke="${color}" stroke-width="1.8"/>`);
    body.push(`<path d="${polylinePath(rounds, stds, x, yStd)}" fill="none" stroke="${color}" stroke-width="1.8"/>`);
    const ly = plotTop + 14 + 14 * i;
    body.push(`<line x1="${plotLeft + plotW - 150}" y1="${ly - 4}" x2="${plotLeft + plotW - 130}" y2="${ly - 4}" stroke="${color}" stroke-width="2"/>`);
    body.push(`<text class="legend" x="${plotLeft + plotW - 124}" y="${ly}" font-size="11" fill="#222">${escapeXml(run.manifest.label)}</text>`);
  });
  body.push(...axes({ x, y: yMean, body }, "", "mean accuracy", plotLeft, plotTop, plotW, panelH));
  body.push(...axes({ x, y: yStd, body }, "round", "std accuracy", plotLeft, plotTop + panelH + 30, plotW, panelH));
  const title = escapeXml(`accuracy mean and std — ${runs.length} run(s)`);
  const doc = svgDocument(body, title, runs.map((r) => r.manifest.fingerprint).join("+"));
  return [{ path: writeFigure(spec.outDir, "mean_std.svg", doc), highlighted: 0 }];
}

function communityMeans(run: RunDir): Map<number, number[]> {
  const blocks = run.graph.blocks;
  if (!blocks) {
    throw new Error(`${run.dir}: per-community figures need a graph with block labels`);
  }
  const series = accuracySeries(run);
  const nBlocks = Math.max(...blocks) + 1;
  const rounds = run.summary.length;
  const out = new Map<number, number[]>();
  for (let b = 0; b < nBlocks; b++) {
    const members = blocks.flatMap((blk, node) => (blk === b ? [node] : []));
    const means: number[] = [];
    for (let t = 0; t < rounds; t++) {
      const total = members.reduce((acc, node) => acc + series.get(node)![t], 0);
      means.push(total / members.length);
    }
    out.set(b, means);
  }
  return out;
}

/** Mean accuracy over time for every community of an SBM run. */
export function plotPerCommunity(spec: PlotSpec): FigureFile[] {
  ensureSvg(spec);
  const files: FigureFile[] = [];
  for (const dir of spec.runs) {
    const run = loadRun(dir);
    const means = communityMeans(run);
    const rounds = run.summary.map((r) => r.round);
    const x = linearScale([rounds[0], rounds[rounds.length - 1]], [plotLeft, plotLeft + plotW]);
    const y = linearScale([0, 1], [plotTop + plotH, plotTop]);
    const body: string[] = [];
    for (const [b, ys] of [...means.entries()].sort((a, c) => a[0] - c[0])) {
      const color = PALETTE[b % PALETTE.length];
      body.push(`<path class="community" d="${polylinePath(rounds, ys, x, y)}" fill="none" stroke="${color}" stroke-width="1.8"/>`);
      const ly = plotTop + 14 + 14 * b;
      body.push(`<line x1="${plotLeft + plotW - 150}" y1="${ly - 4}" x2="${plotLeft + plotW - 130}" y2="${ly - 4}" stroke="${color}" stroke-width="2"/>`);
      body.push(`<text class="legend" x="${plotLeft + plotW - 124}" y="${ly}" font-size="11" fill="#222">community ${b}</text>`);
    }
    body.push(...axes({ x, y, body }, "round", "mean accuracy", plotLeft, plotTop, plotW, plotH));
    const title = escapeXml(`mean accuracy per community — ${run.manifest.label} (replicate ${run.manifest.replicate})`);
    const doc = svgDocument(body, title, run.manifest.fingerprint);
    files.push({ path: writeFigure(spec.outDir, runFileName("per_community", run), doc), highlighted: 0 });
  }
  return files;
}

function heatColor(v: number): string {
  // white -> blue ramp; v in [0,1]
  const level = Math.round(255 - 205 * Math.min(Math.max(v, 0), 1));
  const hex = level.toString(16).padStart(2, "0");
  return `#${hex}${hex}ff`;
}

/** Row-normalized per-community confusion heatmaps at one round. */
export function plotConfusion(spec: PlotSpec): FigureFile[] {
  ensureSvg(spec);
  const files: FigureFile[] = [];
  for (const dir of spec.runs) {
    const run = loadRun(dir);
    const blocks = run.graph.blocks;
    if (!blocks) {
      throw new Error(`${run.dir}: confusion heatmaps need a graph with block labels`);
    }
    const cells = loadConfusion(run);
    const available = [...new Set(cells.map((c) => c.round))].sort((a, b) => a - b);
    const round = spec.round ?? available[available.length - 1];
    if (!available.includes(round)) {
      throw new Error(
        `round ${round} has no stored confusion matrices; available rounds: ${available.join(", ")}`,
      );
    }
    const atRound = cells.filter((c) => c.round === round);
    const nClasses = Math.max(...atRound.map((c) => Math.max(c.trueClass, c.predClass))) + 1;
    const nBlocks = Math.max(...blocks) + 1;
    const matrices: number[][][] = Array.from({ length: nBlocks }, () =>
      Array.from({ length: nClasses }, () => new Array<number>(nClasses).fill(0)));
    for (const c of atRound) {
      matrices[blocks[c.node]][c.trueClass][c.predClass] += c.count;
    }
    const cols = Math.min(nBlocks, 2);
    const rows = Math.ceil(nBlocks / cols);
    const cell = Math.min(44, Math.floor(300 / nClasses));
    const gridW = nClasses * cell;
    const blockW = gridW + 70;
    const blockH = gridW + 70;
    const width = Math.max(WIDTH, cols * blockW + 60);
    const height = rows * blockH + 80;
    const body: string[] = [];
    for (let b = 0; b < nBlocks; b++) {
      const ox = 50 + (b % cols) * blockW;
      const oy = 50 + Math.floor(b / cols) * blockH;
      body.push(`<text x="${ox + gridW / 2}" y="${oy - 8}" font-size="12" text-anchor="middle" fill="#111">community ${b} (round ${round})</text>`);
      const m = matrices[b];
      for (let t = 0; t < nClasses; t++) {
        const rowTotal = m[t].reduce((a, v) => a + v, 0);
        for (let p = 0; p < nClasses; p++) {
          const v = rowTotal > 0 ? m[t][p] / rowTotal : 0;
          const cx = ox + p * cell;
          const cy = oy + t * cell;
          body.push(`<rect x="${cx}" y="${cy}" width="${cell}" height="${cell}" fill="${heatColor(v)}" stroke="#ddd" stroke-width="0.5"/>`);
          body.push(`<text class="cell" x="${cx + cell / 2}" y="${cy + cell / 2 + 3}" font-size="${cell > 30 ? 9 : 7}" text-anchor="middle" fill="${v > 0.6 ? "#fff" : "#333"}">${v.toFixed(4)}</text>`);
        }
        body.push(`<text x="${ox - 6}" y="${oy + t * cell + cell / 2 + 3}" font-size="10" text-anchor="end" fill="#222">${t}</text>`);
        body.push(`<text x="${ox + t * cell + cell / 2}" y="${oy + gridW + 12}" font-size="10" text-anchor="middle" fill="#222">${t}</text>`);
      }
    }
    const title = escapeXml(`community confusion at round ${round} — ${run.manifest.label} (replicate ${run.manifest.replicate})`);
    const doc = svgDocument(body, title, run.manifest.fingerprint, width, height);
    files.push({ path: writeFigure(spec.outDir, runFileName(`confusion_round${round}`, run), doc), highlighted: 0 });
  }
  return files;
}

export function renderFigures(spec: PlotSpec): FigureFile[] {
  switch (spec.kind) {
    case "per_node":
      return plotPerNode(spec);
    case "mean_std":
      return plotMeanStd(spec);
    case "per_community":
      return plotPerCommunity(spec);
    case "confusion_heatmap":
      return plotConfusion(spec);
    default:
      throw new Error(`unknown figure kind ${(spec as PlotSpec).kind}`);
  }
}
