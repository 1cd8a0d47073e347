/**
 * DOM wiring for the workbench: editor with highlighting and inline
 * diagnostics, evidence panel with a Reasoning button, marginal charts,
 * registry search/register/merge, and the zone-risk scenario table.
 */

import { ApiClient } from "./api.js";
import { barChartSvg, densitySvg, formatProbability } from "./charts.js";
import { highlightHtml } from "./highlight.js";
import { WorkspaceStore, type WorkspaceState, type ZoneReport } from "./state.js";

const api = new ApiClient("");
const store = new WorkspaceStore(api);

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) {
    throw new Error(`missing element #${id}`);
  }
  return node as T;
}

const scriptInput = el<HTMLTextAreaElement>("script-input");
const scriptHighlight = el<HTMLElement>("script-highlight");
const evidenceInput = el<HTMLTextAreaElement>("evidence-input");
const reasonButton = el<HTMLButtonElement>("reason-button");
const diagnosticsPane = el<HTMLElement>("diagnostics");
const chartsPane = el<HTMLElement>("charts");
const staleBanner = el<HTMLElement>("stale-banner");
const zeroBanner = el<HTMLElement>("zero-banner");
const errorBanner = el<HTMLElement>("error-banner");
const searchInput = el<HTMLInputElement>("search-input");
const searchButton = el<HTMLButtonElement>("search-button");
const resultsPane = el<HTMLElement>("results");
const registerButton = el<HTMLButtonElement>("register-button");
const registerDialog = el<HTMLDialogElement>("register-dialog");
const registerForm = el<HTMLFormElement>("register-form");
const mergeButton = el<HTMLButtonElement>("merge-button");
const mergeMethod = el<HTMLSelectElement>("merge-method");
const scenarioPane = el<HTMLElement>("scenario");

scriptInput.addEventListener("input", () => store.setScript(scriptInput.value));
scriptInput.addEventListener("scroll", () => {
  scriptHighlight.scrollTop = scriptInput.scrollTop;
  scriptHighlight.scrollLeft = scriptInput.scrollLeft;
});
evidenceInput.addEventListener("input", () => store.setEvidence(evidenceInput.value));
reasonButton.addEventListener("click", () => void store.reason());
searchButton.addEventListener("click", () => void store.search(searchInput.value));
searchInput.addEventListener("keydown", (event) => {
  if (event.key === "Enter") {
    void store.search(searchInput.value);
  }
});
registerButton.addEventListener("click", () => registerDialog.showModal());
registerForm.addEventListener("submit", (event) => {
  event.preventDefault();
  const data = new FormData(registerForm);
  void store
    .register({
      title: String(data.get("title") ?? ""),
      description: String(data.get("description") ?? ""),
      author: String(data.get("author") ?? ""),
      keywords: String(data.get("keywords") ?? "")
        .split(/[,\s]+/)
        .filter(Boolean),
    })
    .then((id) => {
      if (id !== null) {
        registerDialog.close();
      }
    });
});
el<HTMLButtonElement>("register-cancel").addEventListener("click", () =>
  registerDialog.close(),
);
mergeButton.addEventListener("click", () => void store.mergeSelected(mergeMethod.value));

function renderMarginals(state: WorkspaceState): void {
  if (state.marginals === null) {
    chartsPane.innerHTML = '<p class="hint">No results yet; click Reasoning.</p>';
    return;
  }
  const blocks: string[] = [];
  for (const [name, marginal] of Object.entries(state.marginals)) {
    const chart =
      marginal.type === "categorical" ? barChartSvg(name, marginal) : densitySvg(name, marginal);
    blocks.push(`<figure><figcaption>${name}</figcaption>${chart}</figure>`);
  }
  chartsPane.innerHTML = blocks.join("");
}

function renderResults(state: WorkspaceState): void {
  if (state.results.length === 0) {
    resultsPane.innerHTML = '<p class="hint">No models found.</p>';
    return;
  }
  resultsPane.innerHTML = state.results
    .map((record) => {
      const checked = state.selection.includes(record.id) ? " checked" : "";
      return (
        `<div class="result-row" data-id="${record.id}">` +
        `<input type="checkbox" class="select-box" data-id="${record.id}"${checked}/>` +
        `<a href="#" class="record-link" data-id="${record.id}">${record.title}</a>` +
        `<span class="keywords">${record.keywords.join(", ")}</span>` +
        `</div>`
      );
    })
    .join("");
  for (const link of resultsPane.querySelectorAll<HTMLAnchorElement>(".record-link")) {
    link.addEventListener("click", (event) => {
      event.preventDefault();
      void store.loadRecord(link.dataset.id!);
    });
  }
  for (const box of resultsPane.querySelectorAll<HTMLInputElement>(".select-box")) {
    box.addEventListener("change", () => store.toggleSelection(box.dataset.id!));
  }
}

function renderScenario(state: WorkspaceState): void {
  const table = store.currentRiskTable();
  const toggles = Object.entries(state.reports)
    .map(([region, report]) => `${region}=${report === "hot_zone" ? "hot" : "cold"}`)
    .join(", ");
  if (table === null) {
    scenarioPane.innerHTML =
      Object.keys(state.reports).length > 0
        ? `<p class="hint">reports: ${toggles} (click Reasoning to update)</p>`
        : '<p class="hint">Load a zone model and click Reasoning to rank regions.</p>';
    return;
  }
  const rows = table
    .map((row) => {
      const current = state.reports[row.region];
      return (
        `<tr><td>${row.region}</td><td>${formatProbability(row.hotProbability)}</td>` +
        `<td><button class="zone-toggle" data-region="${row.region}" data-state="hot_zone"${current === "hot_zone" ? ' data-active="1"' : ""}>hot</button>` +
        `<button class="zone-toggle" data-region="${row.region}" data-state="cold_zone"${current === "cold_zone" ? ' data-active="1"' : ""}>cold</button>` +
        `<button class="zone-toggle" data-region="${row.region}" data-state=""${current === undefined ? ' data-active="1"' : ""}>?</button></td></tr>`
      );
    })
    .join("");
  scenarioPane.innerHTML =
    `<table><thead><tr><th>region</th><th>P(hot_zone)</th><th>report</th></tr></thead>` +
    `<tbody>${rows}</tbody></table>`;
  for (const button of scenarioPane.querySelectorAll<HTMLButtonElement>(".zone-toggle")) {
    button.addEventListener("click", () => {
      const next = (button.dataset.state || null) as ZoneReport | null;
      store.setReport(button.dataset.region!, next);
      void store.reason();
    });
  }
}

store.subscribe((state) => {
  if (scriptInput.value !== state.script) {
    scriptInput.value = state.script;
  }
  if (evidenceInput.value !== state.evidence) {
    evidenceInput.value = state.evidence;
  }
  scriptHighlight.innerHTML = highlightHtml(state.script, state.diagnostic?.line ?? null);
  diagnosticsPane.textContent = state.diagnostic
    ? state.diagnostic.line !== null
      ? `line ${state.diagnostic.line}: ${state.diagnostic.message}`
      : state.diagnostic.message
    : "";
  staleBanner.hidden = !state.marginalsStale;
  zeroBanner.hidden = !state.zeroProbability;
  errorBanner.hidden = state.error === null;
  errorBanner.textContent = state.error ?? "";
  reasonButton.disabled = state.busy;
  reasonButton.textContent = state.busy ? "Reasoning…" : "Reasoning";
  mergeButton.disabled = state.selection.length !== 2;
  chartsPane.classList.toggle("superseded", state.marginalsStale);
  renderMarginals(state);
  renderResults(state);
  renderScenario(state);
});

store.setScript(scriptInput.value);
void store.search("");
