/** Deterministic standalone-SVG building blocks: fixed precision, no timestamps,
 * so re-rendering the same inputs is byte-identical. */

export const WIDTH = 760;
export const HEIGHT = 480;
export const MARGIN = { top: 40, right: 24, bottom: 56, left: 56 };

export const PALETTE = [
  "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
  "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
];

export function fmt(x: number, digits = 2): string {
  const v = x.toFixed(digits);
  return v === "-0.00" ? "0.00" : v;
}

export interface Scale {
  (x: number): number;
  domain: [number, number];
}

export function linearScale(domain: [number, number], range: [number, number]): Scale {
  const [d0, d1] = domain;
  const [r0, r1] = range;
  const span = d1 - d0 || 1;
  const scale = ((x: number) => r0 + ((x - d0) / span) * (r1 - r0)) as Scale;
  scale.domain = domain;
  return scale;
}

export function polylinePath(xs: number[], ys: number[], x: Scale, y: Scale): string {
  const points = xs.map((v, i) => `${fmt(x(v))},${fmt(y(ys[i]))}`);
  return `M${points.join("L")}`;
}

export function ticks(domain: [number, number], count: number): number[] {
  const [lo, hi] = domain;
  const step = (hi - lo) / count;
  return Array.from({ length: count + 1 }, (_, i) => lo + i * step);
}

export interface Panel {
  x: Scale;
  y: Scale;
  body: string[];
}

export function axes(panel: Panel, xLabel: string, yLabel: string,
                     left: number, top: number, width: number, height: number): string[] {
  const out: string[] = [];
  const { x, y } = panel;
  out.push(`<rect x="${left}" y="${top}" width="${width}" height="${height}" fill="none" stroke="#444" stroke-width="1"/>`);
  for (const t of ticks(x.domain, 5)) {
    const px = fmt(x(t));
    out.push(`<line x1="${px}" y1="${top + height}" x2="${px}" y2="${top + height + 4}" stroke="#444"/>`);
    out.push(`<text x="${px}" y="${top + height + 18}" font-size="11" text-anchor="middle" fill="#222">${fmt(t, 0)}</text>`);
  }
  for (const t of ticks(y.domain, 4)) {
    const py = fmt(y(t));
    out.push(`<line x1="${left - 4}" y1="${py}" x2="${left}" y2="${py}" stroke="#444"/>`);
    out.push(`<text x="${left - 8}" y="${py}" font-size="11" text-anchor="end" dominant-baseline="middle" fill="#222">${fmt(t, 2)}</text>`);
  }
  out.push(`<text x="${left + width / 2}" y="${top + height + 38}" font-size="12" text-anchor="middle" fill="#222">${xLabel}</text>`);
  out.push(`<text x="${left - 40}" y="${top + height / 2}" font-size="12" text-anchor="middle" fill="#222" transform="rotate(-90 ${left - 40} ${top + height / 2})">${yLabel}</text>`);
  return out;
}

/** Wrap body markup in a standalone SVG document embedding the run fingerprint. */
export function svgDocument(body: string[], title: string, fingerprint: string,
                            width = WIDTH, height = HEIGHT): string {
  return [
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" viewBox="0 0 ${width} ${height}">`,
    `<metadata>run-fingerprint:${fingerprint}</metadata>`,
    `<rect width="${width}" height="${height}" fill="#ffffff"/>`,
    `<text x="${width / 2}" y="22" font-size="14" text-anchor="middle" fill="#111">${title}</text>`,
    ...body,
    `<text x="${width - 8}" y="${height - 6}" font-size="9" text-anchor="end" fill="#888">fingerprint ${fingerprint}</text>`,
    `</svg>`,
    ``,
  ].join("\n");
}

export function escapeXml(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}
