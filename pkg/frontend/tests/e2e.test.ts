/**
 * End-to-end acceptance flows against a live service: reason on the
 * diagnosis fixture, toggle zone reports on a pyramid model, and merge two
 * registry records into the editor.
 */

import { describe, expect, it } from "vitest";

import {
  DIAGNOSIS_SCRIPT,
  FEVER_SCRIPT,
  cliJson,
  newStore,
  tempFile,
} from "./helpers.js";
import { riskTable, scriptNodeNames } from "../src/state.js";

describe("reason action", () => {
  it("shows the diagnosis posterior that the command line reports", async () => {
    const store = newStore();
    store.setScript(DIAGNOSIS_SCRIPT);
    store.setEvidence("Haemorrhage = yes");
    await store.reason(["EbolaVirusDisease"]);

    expect(store.state.error).toBeNull();
    const marginal = store.state.marginals!.EbolaVirusDisease;
    expect(marginal.type).toBe("categorical");
    if (marginal.type !== "categorical") throw new Error("unreachable");
    const hasIndex = marginal.states.indexOf("has");
    const displayed = marginal.probabilities[hasIndex];
    expect(displayed).toBeCloseTo(0.909, 3);

    const modelPath = tempFile("diagnosis.bns", DIAGNOSIS_SCRIPT);
    const evidencePath = tempFile("evidence.bne", "Haemorrhage = yes\n");
    const cli = cliJson([
      "infer", modelPath, "--evidence", evidencePath, "--query", "EbolaVirusDisease",
    ]);
    const fromCli = cli.marginals.EbolaVirusDisease.probabilities[hasIndex];
    expect(displayed).toBe(fromCli);
  });

  it("renders priors when no evidence is given", async () => {
    const store = newStore();
    store.setScript(DIAGNOSIS_SCRIPT);
    await store.reason();
    const marginal = store.state.marginals!.EbolaVirusDisease;
    if (marginal.type !== "categorical") throw new Error("expected categorical");
    expect(marginal.probabilities[0]).toBeCloseTo(0.1, 9);
    expect(store.state.marginalsStale).toBe(false);
  });

  it("marks results superseded after an evidence edit, fresh after re-reason", async () => {
    const store = newStore();
    store.setScript(DIAGNOSIS_SCRIPT);
    store.setEvidence("Haemorrhage = yes");
    await store.reason(["EbolaVirusDisease"]);
    expect(store.state.marginalsStale).toBe(false);

    store.setEvidence("Haemorrhage = no");
    expect(store.state.marginalsStale).toBe(true);

    await store.reason(["EbolaVirusDisease"]);
    expect(store.state.marginalsStale).toBe(false);
    const marginal = store.state.marginals!.EbolaVirusDisease;
    if (marginal.type !== "categorical") throw new Error("expected categorical");
    expect(marginal.probabilities[0]).toBeLessThan(0.1);
  });

  it("renders gaussian mixtures for continuous queries", async () => {
    const store = newStore();
    store.setScript(FEVER_SCRIPT);
    await store.reason(["Fever"]);
    const marginal = store.state.marginals!.Fever;
    expect(marginal.type).toBe("mixture");
    if (marginal.type !== "mixture") throw new Error("unreachable");
    expect(marginal.components).toHaveLength(2);
    const weightTotal = marginal.components.reduce((acc, c) => acc + c.weight, 0);
    expect(weightTotal).toBeCloseTo(1.0, 9);
  });

  it("surfaces script diagnostics inline with a line number", async () => {
    const store = newStore();
    store.setScript("defineNode(A);\n{ defineState(Discrete, a1); p(A) = {a1: 1.0;} }");
    await store.reason(["A"]);
    expect(store.state.marginals).toBeNull();
    expect(store.state.diagnostic).not.toBeNull();
    expect(store.state.diagnostic!.line).toBe(2);
  });

  it("shows the zero-probability banner distinctly", async () => {
    const store = newStore();
    store.setScript(
      "defineNode(A);\n{\n    defineState(Discrete, a1, a2);\n    p(A) =\n        {a1: 1; a2: 0;}\n}\n",
    );
    store.setEvidence("A = a2");
    await store.reason(["A"]);
    expect(store.state.zeroProbability).toBe(true);
    expect(store.state.error).toBeNull();
  });
});

describe("scenario view", () => {
  it("toggling a region report moves sibling posteriors like the scenario command", async () => {
    const geo = cliJson(["gen-geo", "--depth", "3"]);
    const store = newStore();
    store.setScript(geo.model);

    await store.reason();
    const before = riskTable(store.state.marginals!);
    const prior = Object.fromEntries(before.map((r) => [r.region, r.hotProbability]));

    store.setReport("DZ_3_1_3", "hot_zone");
    await store.reason();
    const after = riskTable(store.state.marginals!);
    const posterior = Object.fromEntries(after.map((r) => [r.region, r.hotProbability]));

    expect(posterior.DZ_3_1_3).toBeCloseTo(1.0, 9);
    expect(posterior.DZ_3_1_2).toBeGreaterThan(prior.DZ_3_1_2);
    expect(posterior.DZ_3_2_3).toBeGreaterThan(prior.DZ_3_2_3);

    // consistency with the scenario command on the same reports
    const modelPath = tempFile("geo.bns", geo.model);
    const reportsPath = tempFile("reports.bne", "DZ_3_1_3 = hot_zone\n");
    const scenario = cliJson(["scenario", modelPath, "--reports", reportsPath]);
    const expected = Object.fromEntries(
      scenario.risk.map((row: { region: string; hot_probability: number }) => [
        row.region,
        row.hot_probability,
      ]),
    );
    for (const row of after) {
      expect(row.hotProbability).toBeCloseTo(expected[row.region], 9);
    }
    // ranked hottest first, matching the command's ordering
    const ranked = after.map((r) => r.region);
    expect(ranked[0]).toBe("DZ_3_1_3");
    const values = after.map((r) => r.hotProbability);
    expect([...values].sort((a, b) => b - a)).toEqual(values);
  });

  it("untoggling returns exactly to the prior display", async () => {
    const geo = cliJson(["gen-geo", "--depth", "2"]);
    const store = newStore();
    store.setScript(geo.model);
    await store.reason();
    const prior = riskTable(store.state.marginals!);

    store.setReport("DZ_2_1_1", "hot_zone");
    await store.reason();
    store.setReport("DZ_2_1_1", null);
    await store.reason();
    expect(riskTable(store.state.marginals!)).toEqual(prior);
  });
});

describe("registry actions", () => {
  it("register then search finds the record by keyword", async () => {
    const store = newStore();
    store.setScript(DIAGNOSIS_SCRIPT);
    const id = await store.register({
      title: `diagnosis ${Date.now()}`,
      keywords: ["haemorrhage-screen"],
    });
    expect(id).not.toBeNull();
    await store.search("haemorrhage-screen");
    expect(store.state.results.map((r) => r.id)).toContain(id);
  });

  it("merging two records opens a model containing both children", async () => {
    const store = newStore();
    store.setScript(DIAGNOSIS_SCRIPT);
    const id1 = await store.register({ title: `diag ${Date.now()}`, keywords: ["m1"] });
    store.setScript(FEVER_SCRIPT);
    const id2 = await store.register({ title: `fever ${Date.now()}`, keywords: ["m2"] });
    expect(id1).not.toBeNull();
    expect(id2).not.toBeNull();

    store.toggleSelection(id1!);
    store.toggleSelection(id2!);
    const mergedId = await store.mergeSelected("simulate", { sample_count: 20000, seed: 3 });
    expect(mergedId).not.toBeNull();
    expect(store.state.lastMergeReport!.shared).toEqual(["EbolaVirusDisease"]);

    const names = scriptNodeNames(store.state.script);
    expect(names).toContain("Haemorrhage");
    expect(names).toContain("Fever");
    expect(names).toContain("EbolaVirusDisease");
  });

  it("selection keeps at most two records", () => {
    const store = newStore();
    store.toggleSelection("a");
    store.toggleSelection("b");
    store.toggleSelection("c");
    expect(store.state.selection).toEqual(["b", "c"]);
  });
});

describe("request discipline", () => {
  it("a newer reasoning request supersedes an older one", async () => {
    const store = newStore();
    store.setScript(DIAGNOSIS_SCRIPT);
    store.setEvidence("Haemorrhage = yes");
    const first = store.reason(["EbolaVirusDisease"]);
    store.setEvidence("Haemorrhage = no");
    const second = store.reason(["EbolaVirusDisease"]);
    await Promise.all([first, second]);
    const marginal = store.state.marginals!.EbolaVirusDisease;
    if (marginal.type !== "categorical") throw new Error("expected categorical");
    // the surviving result is the one for the newer evidence
    expect(marginal.probabilities[0]).toBeLessThan(0.1);
    expect(store.state.reasonedOver!.evidence).toBe("Haemorrhage = no");
  });
});
