/**
 * Workspace store: script + evidence editing, the reason action, registry
 * search/register/merge, and the zone-risk scenario view.
 *
 * Invariants the store maintains:
 *  - displayed marginals always correspond to the (script, evidence) pair
 *    that produced them; any edit marks them stale until the next reason;
 *  - at most one reasoning request is in flight; newer requests abort
 *    older ones, and an aborted request never writes state.
 */

import {
  ApiClient,
  ApiError,
  type Marginal,
  type MarginalsDoc,
  type MergeReport,
  type RecordSummary,
} from "./api.js";

export type ZoneReport = "hot_zone" | "cold_zone";

export interface Diagnostic {
  message: string;
  line: number | null;
  column: number | null;
}

export interface RiskRow {
  region: string;
  hotProbability: number;
}

export interface WorkspaceState {
  script: string;
  evidence: string;
  marginals: MarginalsDoc | null;
  /** The (script, evidence) snapshot the marginals were computed from. */
  reasonedOver: { script: string; evidence: string } | null;
  marginalsStale: boolean;
  diagnostic: Diagnostic | null;
  zeroProbability: boolean;
  error: string | null;
  busy: boolean;
  searchQuery: string;
  results: RecordSummary[];
  selection: string[];
  loadedRecordId: string | null;
  lastMergeReport: MergeReport | null;
  reports: Record<string, ZoneReport>;
}

const NODE_NAME_RE = /defineNode\s*\(\s*([A-Za-z_][A-Za-z0-9_]*)/g;

/** Node names, for building the query list; no probabilities involved. */
export function scriptNodeNames(script: string): string[] {
  const names: string[] = [];
  for (const match of script.matchAll(NODE_NAME_RE)) {
    if (!names.includes(match[1])) {
      names.push(match[1]);
    }
  }
  return names;
}

export function isZoneMarginal(marginal: Marginal): boolean {
  return (
    marginal.type === "categorical" &&
    marginal.states.length === 2 &&
    marginal.states.includes("hot_zone") &&
    marginal.states.includes("cold_zone")
  );
}

/** Region risk rows from a marginals response, sorted hottest first. */
export function riskTable(marginals: MarginalsDoc): RiskRow[] {
  const rows: RiskRow[] = [];
  for (const [name, marginal] of Object.entries(marginals)) {
    if (!isZoneMarginal(marginal)) {
      continue;
    }
    const categorical = marginal as { states: string[]; probabilities: number[] };
    const hot = categorical.states.indexOf("hot_zone");
    rows.push({ region: name, hotProbability: categorical.probabilities[hot] });
  }
  rows.sort(
    (a, b) => b.hotProbability - a.hotProbability || a.region.localeCompare(b.region),
  );
  return rows;
}

export function evidenceWithReports(
  evidence: string,
  reports: Record<string, ZoneReport>,
): string {
  const lines = evidence
    .split("\n")
    .filter((line) => line.trim().length > 0);
  for (const [region, state] of Object.entries(reports)) {
    lines.push(`${region} = ${state}`);
  }
  return lines.join("\n");
}

export class WorkspaceStore {
  state: WorkspaceState = {
    script: "",
    evidence: "",
    marginals: null,
    reasonedOver: null,
    marginalsStale: false,
    diagnostic: null,
    zeroProbability: false,
    error: null,
    busy: false,
    searchQuery: "",
    results: [],
    selection: [],
    loadedRecordId: null,
    lastMergeReport: null,
    reports: {},
  };

  private listeners: Array<(state: WorkspaceState) => void> = [];
  private inflight: AbortController | null = null;
  private scratchId: string | null = null;
  private scratchScript: string | null = null;

  constructor(readonly api: ApiClient) {}

  subscribe(listener: (state: WorkspaceState) => void): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  private commit(patch: Partial<WorkspaceState>): void {
    this.state = { ...this.state, ...patch };
    for (const listener of this.listeners) {
      listener(this.state);
    }
  }

  // -- editing

  setScript(script: string): void {
    this.commit({
      script,
      marginalsStale: this.state.marginals !== null,
      diagnostic: null,
      zeroProbability: false,
      loadedRecordId: null,
    });
  }

  setEvidence(evidence: string): void {
    this.commit({
      evidence,
      marginalsStale: this.state.marginals !== null,
      zeroProbability: false,
    });
  }

  setReport(region: string, state: ZoneReport | null): void {
    const reports = { ...this.state.reports };
    if (state === null) {
      delete reports[region];
    } else {
      reports[region] = state;
    }
    this.commit({ reports, marginalsStale: this.state.marginals !== null });
  }

  clearReports(): void {
    this.commit({ reports: {}, marginalsStale: this.state.marginals !== null });
  }

  // -- reasoning

  /** The evidence text actually sent: the evidence panel plus zone toggles. */
  effectiveEvidence(): string {
    return evidenceWithReports(this.state.evidence, this.state.reports);
  }

  private async ensureModelRegistered(script: string): Promise<string> {
    if (this.scratchId !== null && this.scratchScript === script) {
      return this.scratchId;
    }
    if (this.scratchId !== null) {
      try {
        await this.api.update(this.scratchId, { script });
        this.scratchScript = script;
        return this.scratchId;
      } catch (err) {
        if (err instanceof ApiError && err.status === 404) {
          this.scratchId = null; // scratch record was deleted; re-register
        } else {
          throw err;
        }
      }
    }
    const { id } = await this.api.register({
      title: "workbench scratch",
      script,
      description: "unsaved editor model",
      keywords: ["scratch"],
    });
    this.scratchId = id;
    this.scratchScript = script;
    return id;
  }

  async reason(query?: string[]): Promise<void> {
    const snapshot = { script: this.state.script, evidence: this.effectiveEvidence() };
    const names = query ?? scriptNodeNames(snapshot.script);
    if (names.length === 0) {
      this.commit({ error: "nothing to query: the script defines no nodes" });
      return;
    }
    this.inflight?.abort();
    const controller = new AbortController();
    this.inflight = controller;
    this.commit({ busy: true, error: null, diagnostic: null, zeroProbability: false });
    try {
      const id =
        this.state.loadedRecordId ?? (await this.ensureModelRegistered(snapshot.script));
      const marginals = await this.api.infer(id, snapshot.evidence, names, controller.signal);
      if (controller.signal.aborted) {
        return;
      }
      const stale =
        this.state.script !== snapshot.script ||
        this.effectiveEvidence() !== snapshot.evidence;
      this.commit({
        marginals,
        reasonedOver: snapshot,
        marginalsStale: stale,
        busy: false,
      });
    } catch (err) {
      if (controller.signal.aborted) {
        return; // superseded by a newer request; say nothing
      }
      this.commit({ busy: false, ...this.describeFailure(err) });
    } finally {
      if (this.inflight === controller) {
        this.inflight = null;
      }
    }
  }

  private describeFailure(err: unknown): Partial<WorkspaceState> {
    if (err instanceof ApiError) {
      if (err.status === 422) {
        return { zeroProbability: true, error: null };
      }
      const details = err.body.details ?? {};
      const line = typeof details.line === "number" ? details.line : null;
      const column = typeof details.column === "number" ? details.column : null;
      if (line !== null || err.body.code.includes("syntax") || err.body.code === "invalid_script") {
        return { diagnostic: { message: err.body.message, line, column }, error: null };
      }
      return { error: `${err.body.code}: ${err.body.message}` };
    }
    return { error: String(err) };
  }

  // -- registry

  async search(query: string): Promise<void> {
    this.commit({ searchQuery: query });
    try {
      const results = await this.api.search(query);
      this.commit({ results, error: null });
    } catch (err) {
      this.commit(this.describeFailure(err));
    }
  }

  async register(fields: {
    title: string;
    description?: string;
    author?: string;
    keywords?: string[];
  }): Promise<string | null> {
    try {
      const { id } = await this.api.register({ ...fields, script: this.state.script });
      this.commit({ loadedRecordId: id, error: null });
      await this.search(this.state.searchQuery);
      return id;
    } catch (err) {
      this.commit(this.describeFailure(err));
      return null;
    }
  }

  async loadRecord(id: string): Promise<void> {
    try {
      const record = await this.api.get(id);
      this.commit({
        script: record.script,
        loadedRecordId: id,
        marginals: null,
        reasonedOver: null,
        marginalsStale: false,
        diagnostic: null,
        zeroProbability: false,
        reports: {},
        error: null,
      });
    } catch (err) {
      this.commit(this.describeFailure(err));
    }
  }

  toggleSelection(id: string): void {
    let selection = this.state.selection.filter((s) => s !== id);
    if (selection.length === this.state.selection.length) {
      selection = [...this.state.selection, id].slice(-2); // keep the last two
    }
    this.commit({ selection });
  }

  async mergeSelected(method: string, options?: Record<string, unknown>): Promise<string | null> {
    const [id1, id2] = this.state.selection;
    if (!id1 || !id2) {
      this.commit({ error: "select two models to merge" });
      return null;
    }
    try {
      const { id, report } = await this.api.merge(id1, id2, method, options);
      this.commit({ lastMergeReport: report, selection: [] });
      await this.loadRecord(id); // merged model opens in the editor
      await this.search(this.state.searchQuery);
      return id;
    } catch (err) {
      this.commit(this.describeFailure(err));
      return null;
    }
  }

  // -- scenario

  currentRiskTable(): RiskRow[] | null {
    if (this.state.marginals === null) {
      return null;
    }
    const rows = riskTable(this.state.marginals);
    return rows.length > 0 ? rows : null;
  }
}
