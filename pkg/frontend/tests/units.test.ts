/** DOM-free units: chart builders, highlighting, risk-table shaping. */

import { describe, expect, it } from "vitest";

import { barChartSvg, densitySvg, formatProbability } from "../src/charts.js";
import { highlightHtml, tokenize } from "../src/highlight.js";
import { evidenceWithReports, riskTable, scriptNodeNames } from "../src/state.js";
import type { MarginalsDoc } from "../src/api.js";

describe("charts", () => {
  it("bar chart renders one bar and label per state", () => {
    const svg = barChartSvg("EbolaVirusDisease", {
      type: "categorical",
      states: ["has", "not"],
      probabilities: [0.909, 0.091],
    });
    expect(svg.match(/<rect class="bar"/g)).toHaveLength(2);
    expect(svg).toContain(">has<");
    expect(svg).toContain(">0.909<");
  });

  it("displayed probabilities sum to one within display rounding", () => {
    const probabilities = [0.9090909090909092, 0.09090909090909091];
    const rendered = probabilities.map((p) => Number(formatProbability(p)));
    const total = rendered.reduce((a, b) => a + b, 0);
    expect(Math.abs(total - 1.0)).toBeLessThanOrEqual(0.001 * probabilities.length);
  });

  it("density curve covers each component and lists its parameters", () => {
    const svg = densitySvg("Fever", {
      type: "mixture",
      components: [
        { weight: 0.1, mean: 103, variance: 1 },
        { weight: 0.9, mean: 98.6, variance: 1 },
      ],
    });
    expect(svg).toContain("polyline");
    expect(svg).toContain("mean 103.00");
    expect(svg).toContain("mean 98.60");
  });

  it("escapes markup in state names", () => {
    const svg = barChartSvg("X", {
      type: "categorical",
      states: ["<b>", "ok"],
      probabilities: [0.5, 0.5],
    });
    expect(svg).not.toContain("<b>");
    expect(svg).toContain("&lt;b&gt;");
  });
});

describe("highlighting", () => {
  it("classifies keywords, identifiers, and numbers", () => {
    const tokens = tokenize("defineState(Discrete, has, not);");
    const kinds = tokens.filter((t) => t.kind !== "space").map((t) => t.kind);
    expect(kinds[0]).toBe("keyword"); // defineState
    expect(tokens.some((t) => t.kind === "ident" && t.text === "has")).toBe(true);
    const numberTokens = tokenize("p(A) = {a: 0.25;}").filter((t) => t.kind === "number");
    expect(numberTokens.map((t) => t.text)).toEqual(["0.25"]);
  });

  it("marks the diagnostic line", () => {
    const html = highlightHtml("defineNode(A);\n{ bad }", 2);
    const lines = html.split("</div>");
    expect(lines[0]).not.toContain("error-line");
    expect(lines[1]).toContain("error-line");
  });

  it("escapes HTML in source text", () => {
    const html = highlightHtml("<script>");
    expect(html).not.toContain("<script>");
  });
});

describe("workspace helpers", () => {
  it("extracts node names in order without duplicates", () => {
    const script = "defineNode(A);\n...\ndefineNode(B, note);\ndefineNode(A);";
    expect(scriptNodeNames(script)).toEqual(["A", "B"]);
  });

  it("builds the risk table sorted hottest first from zone marginals only", () => {
    const marginals: MarginalsDoc = {
      DZ_2_1_1: { type: "categorical", states: ["hot_zone", "cold_zone"], probabilities: [0.2, 0.8] },
      DZ_2_1_2: { type: "categorical", states: ["hot_zone", "cold_zone"], probabilities: [0.7, 0.3] },
      Other: { type: "categorical", states: ["yes", "no"], probabilities: [0.5, 0.5] },
      Fever: { type: "mixture", components: [{ weight: 1, mean: 99, variance: 1 }] },
    };
    const rows = riskTable(marginals);
    expect(rows.map((r) => r.region)).toEqual(["DZ_2_1_2", "DZ_2_1_1"]);
  });

  it("appends zone reports to the evidence text", () => {
    const text = evidenceWithReports("Fever = 100.0", { DZ_2_1_1: "hot_zone" });
    expect(text.split("\n")).toEqual(["Fever = 100.0", "DZ_2_1_1 = hot_zone"]);
    expect(evidenceWithReports("", {})).toBe("");
  });
});
