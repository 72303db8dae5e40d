#!/usr/bin/env node
/** CLI: plot --kind <k> --runs <dirs...> --out <dir> [--round R] [--highlight top-degree:0.1] */
import { FigureKind, PlotSpec, renderFigures } from "./plots.js";

const KINDS: FigureKind[] = ["per_node", "mean_std", "per_community", "confusion_heatmap"];

export function parseArgs(argv: string[]): PlotSpec {
  if (argv[0] !== "plot") {
    throw new Error(`unknown command ${argv[0] ?? "(none)"}; usage: plot --kind <k> --runs <dirs...> --out <dir>`);
  }
  let kind: FigureKind | undefined;
  const runs: string[] = [];
  let outDir: string | undefined;
  let round: number | undefined;
  let highlight: string | undefined;
  let format: "svg" | "png" | undefined;
  let i = 1;
  while (i < argv.length) {
    const arg = argv[i];
    switch (arg) {
      case "--kind": {
        const value = argv[++i];
        if (!KINDS.includes(value as FigureKind)) {
          throw new Error(`--kind must be one of ${KINDS.join(", ")}, got ${value}`);
        }
        kind = value as FigureKind;
        break;
      }
      case "--runs":
        while (i + 1 < argv.length && !argv[i + 1].startsWith("--")) {
          runs.push(argv[++i]);
        }
        break;
      case "--out":
        outDir = argv[++i];
        break;
      case "--round":
        round = parseInt(argv[++i], 10);
        break;
      case "--highlight":
        highlight = argv[++i];
        break;
      case "--format":
        format = argv[++i] as "svg" | "png";
        break;
      default:
        throw new Error(`unknown argument ${arg}`);
    }
    i += 1;
  }
  if (!kind) throw new Error("--kind is required");
  if (runs.length === 0) throw new Error("--runs needs at least one run directory");
  if (!outDir) throw new Error("--out is required");
  return { kind, runs, outDir, round, highlight, format };
}

export function main(argv: string[]): number {
  try {
    const spec = parseArgs(argv);
    const files = renderFigures(spec);
    for (const f of files) {
      console.log(f.path);
    }
    return 0;
  } catch (err) {
    console.error(`plot: ${(err as Error).message}`);
    return 2;
  }
}

if (import.meta.url === `file://${process.argv[1]}`) {
  process.exit(main(process.argv.slice(2)));
}
