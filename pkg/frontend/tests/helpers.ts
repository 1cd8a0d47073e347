import { execFileSync } from "node:child_process";
import { readFileSync, writeFileSync, mkdtempSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { ApiClient } from "../src/api.js";
import { WorkspaceStore } from "../src/state.js";

export function serviceBaseUrl(): string {
  const state = JSON.parse(readFileSync(join(__dirname, ".service.json"), "utf-8"));
  return state.baseUrl as string;
}

export function newStore(): WorkspaceStore {
  return new WorkspaceStore(new ApiClient(serviceBaseUrl()));
}

/** Run the command-line tool and parse its --json document. */
export function cliJson(args: string[]): any {
  const out = execFileSync("python3", ["-m", "bayescloud.cli", ...args, "--json"], {
    encoding: "utf-8",
  });
  return JSON.parse(out);
}

export function tempFile(name: string, contents: string): string {
  const dir = mkdtempSync(join(tmpdir(), "workbench-e2e-"));
  const path = join(dir, name);
  writeFileSync(path, contents);
  return path;
}

export const DIAGNOSIS_SCRIPT = `defineNode(EbolaVirusDisease, Description);
{
    defineState(Discrete, has, not);
    p(EbolaVirusDisease) =
        {has: 0.1; not: 0.9;}
}

defineNode(Haemorrhage, Description);
{
    defineState(Discrete, yes, no);
    p(Haemorrhage | EbolaVirusDisease) =
        if (EbolaVirusDisease == has)
            {yes: 0.9; no: 0.1;}
        else if (EbolaVirusDisease == not)
            {yes: 0.01; no: 0.99;}
}
`;

export const FEVER_SCRIPT = `defineNode(EbolaVirusDisease, Description);
{
    defineState(Discrete, has, not);
    p(EbolaVirusDisease) =
        {has: 0.1; not: 0.9;}
}

defineNode(Fever, Description);
{
    defineState(Continuous);
    p(Fever | EbolaVirusDisease) =
        if (EbolaVirusDisease == has)
            { NormalDist(103, 1.0) }
        else if (EbolaVirusDisease == not)
            { NormalDist(98.6, 1.0) }
}
`;
