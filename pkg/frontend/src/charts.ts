/**
 * Hand-rolled SVG renderings: bar charts for categorical marginals and
 * density curves for Gaussian mixtures.  Pure string builders, so they are
 * unit-testable without a DOM.
 */

import type { CategoricalMarginal, MixtureMarginal } from "./api.js";

const WIDTH = 320;
const HEIGHT = 150;
const MARGIN = { top: 8, right: 10, bottom: 28, left: 10 };

export function escapeXml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function formatProbability(p: number): string {
  return p.toFixed(3);
}

export function barChartSvg(name: string, marginal: CategoricalMarginal): string {
  const plotWidth = WIDTH - MARGIN.left - MARGIN.right;
  const plotHeight = HEIGHT - MARGIN.top - MARGIN.bottom;
  const n = marginal.states.length;
  const band = plotWidth / n;
  const barWidth = Math.min(band * 0.7, 80);
  const parts: string[] = [];
  marginal.states.forEach((state, i) => {
    const p = marginal.probabilities[i];
    const height = p * plotHeight;
    const x = MARGIN.left + band * i + (band - barWidth) / 2;
    const y = MARGIN.top + plotHeight - height;
    const mid = MARGIN.left + band * i + band / 2;
    parts.push(
      `<rect class="bar" x="${x.toFixed(1)}" y="${y.toFixed(1)}" width="${barWidth.toFixed(1)}" height="${height.toFixed(1)}"/>`,
      `<text class="bar-value" x="${mid.toFixed(1)}" y="${(y - 3).toFixed(1)}" text-anchor="middle">${formatProbability(p)}</text>`,
      `<text class="bar-label" x="${mid.toFixed(1)}" y="${HEIGHT - 10}" text-anchor="middle">${escapeXml(state)}</text>`,
    );
  });
  return svgDocument(name, parts.join(""));
}

export function densitySvg(name: string, marginal: MixtureMarginal): string {
  const plotWidth = WIDTH - MARGIN.left - MARGIN.right;
  const plotHeight = HEIGHT - MARGIN.top - MARGIN.bottom;
  const lo = Math.min(
    ...marginal.components.map((c) => c.mean - 4 * Math.sqrt(Math.max(c.variance, 1e-12))),
  );
  const hi = Math.max(
    ...marginal.components.map((c) => c.mean + 4 * Math.sqrt(Math.max(c.variance, 1e-12))),
  );
  const steps = 160;
  const xs: number[] = [];
  const ys: number[] = [];
  for (let i = 0; i <= steps; i++) {
    const x = lo + ((hi - lo) * i) / steps;
    // plot of the server-provided mixture parameters
    let density = 0;
    for (const c of marginal.components) {
      const variance = Math.max(c.variance, 1e-12);
      density +=
        (c.weight * Math.exp((-0.5 * (x - c.mean) ** 2) / variance)) /
        Math.sqrt(2 * Math.PI * variance);
    }
    xs.push(x);
    ys.push(density);
  }
  const peak = Math.max(...ys, 1e-12);
  const points = xs
    .map((x, i) => {
      const px = MARGIN.left + ((x - lo) / (hi - lo)) * plotWidth;
      const py = MARGIN.top + plotHeight - (ys[i] / peak) * plotHeight;
      return `${px.toFixed(1)},${py.toFixed(1)}`;
    })
    .join(" ");
  const legend = marginal.components
    .map(
      (c) =>
        `w ${formatProbability(c.weight)}, mean ${c.mean.toFixed(2)}, var ${c.variance.toFixed(2)}`,
    )
    .join("; ");
  const parts = [
    `<polyline class="density" fill="none" points="${points}"/>`,
    `<text class="bar-label" x="${MARGIN.left}" y="${HEIGHT - 10}">${escapeXml(legend)}</text>`,
  ];
  return svgDocument(name, parts.join(""));
}

function svgDocument(name: string, inner: string): string {
  return (
    `<svg class="chart" role="img" aria-label="${escapeXml(name)}" viewBox="0 0 ${WIDTH} ${HEIGHT}" ` +
    `xmlns="http://www.w3.org/2000/svg">${inner}</svg>`
  );
}
