import { execFile, spawn, type ChildProcess } from "node:child_process";
import { readFileSync } from "node:fs";
import { join } from "node:path";
import { promisify } from "node:util";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import {
  ModmaxClient,
  ModmaxError,
  parseEdgeList,
  type Edge,
  type SolveReport,
} from "../src/index.js";

const execFileAsync = promisify(execFile);

const PORT = 8934;
const BASE_URL = `http://127.0.0.1:${PORT}`;
const REPO_ROOT = join(__dirname, "..", "..");
const DATA_DIR = join(REPO_ROOT, "data");

const TWO_TRIANGLES: Edge[] = [
  [0, 1], [1, 2], [0, 2],
  [3, 4], [4, 5], [3, 5],
];

let server: ChildProcess;
const client = new ModmaxClient(BASE_URL);

beforeAll(async () => {
  server = spawn(
    "python3",
    ["-m", "uvicorn", "modmax.service:app", "--port", String(PORT)],
    { cwd: REPO_ROOT, stdio: "ignore" },
  );
  const deadline = Date.now() + 30_000;
  for (;;) {
    try {
      await client.health();
      break;
    } catch {
      if (Date.now() > deadline) throw new Error("service did not come up");
      await new Promise((resolve) => setTimeout(resolve, 250));
    }
  }
});

afterAll(() => {
  server?.kill();
});

/** Run the CLI and parse its JSON report (stderr may carry warnings). */
async function cliSolve(file: string, seed: number): Promise<SolveReport> {
  const { stdout } = await execFileAsync(
    "python3",
    ["-m", "modmax.cli", "solve", join(DATA_DIR, file), "--seed", String(seed)],
    { cwd: REPO_ROOT, maxBuffer: 16 * 1024 * 1024 },
  );
  return JSON.parse(stdout) as SolveReport;
}

/** Zero the wall-clock fields, the only run-to-run nondeterminism. */
function normalized(report: SolveReport): SolveReport {
  return {
    ...report,
    runtime_s: 0,
    stats: { ...report.stats, wall_time_s: 0 },
  };
}

describe("health", () => {
  it("reports ok with a version", async () => {
    const info = await client.health();
    expect(info.status).toBe("ok");
    expect(info.version).toMatch(/^\d+\.\d+\.\d+$/);
  });
});

describe("solve", () => {
  it("finds the two-triangle optimum with a certificate", async () => {
    const report = await client.solve(TWO_TRIANGLES);
    expect(report.modularity).toBeCloseTo(0.5, 12);
    expect(report.proven_optimal).toBe(true);
    expect(report.communities).toEqual([[0, 1, 2], [3, 4, 5]]);
  });

  it("supports string node ids", async () => {
    const report = await client.solve([["a", "b"], ["b", "c"], ["a", "c"]]);
    expect(report.communities).toEqual([["a", "b", "c"]]);
  });

  it("honors approximate mode", async () => {
    const report = await client.solve(TWO_TRIANGLES, {
      mode: "approximate",
      gapTolerance: 0.1,
    });
    expect(report.gap).not.toBeNull();
    expect(report.gap as number).toBeLessThanOrEqual(0.1);
  });

  it("returns null bounds in heuristic mode", async () => {
    const report = await client.solve(TWO_TRIANGLES, { mode: "heuristic", seed: 1 });
    expect(report.best_bound).toBeNull();
    expect(report.termination_reason).toBe("heuristic");
  });

  it("rejects an empty edge list", async () => {
    await expect(client.solve([])).rejects.toBeInstanceOf(ModmaxError);
  });

  it("rejects approximate mode without a tolerance or limit", async () => {
    await expect(
      client.solve(TWO_TRIANGLES, { mode: "approximate" }),
    ).rejects.toMatchObject({ status: 400 });
  });
});

describe("ami", () => {
  it("is exactly 1 for identical labelings", async () => {
    expect(await client.ami([0, 0, 1, 1], [0, 0, 1, 1])).toBe(1.0);
  });

  it("is exactly 1 for relabeled copies", async () => {
    expect(await client.ami([0, 0, 1, 1], [7, 7, 2, 2])).toBe(1.0);
  });

  it("is near 0 for independent labelings", async () => {
    const a: number[] = [];
    const b: number[] = [];
    let state = 123456789;
    const next = () => {
      state = (state * 1103515245 + 12345) % 2147483648;
      return Math.floor(state / 65536) % 4; // high bits; low LCG bits cycle
    };
    for (let i = 0; i < 200; i++) {
      a.push(next());
      b.push(next());
    }
    expect(Math.abs(await client.ami(a, b))).toBeLessThan(0.2);
  });

  it("rejects mismatched lengths", async () => {
    await expect(client.ami([0, 1], [0])).rejects.toMatchObject({ status: 400 });
  });
});

describe("modularity evaluation", () => {
  it("round-trips a solve's communities to its reported value", async () => {
    const report = await client.solve(TWO_TRIANGLES);
    const value = await client.modularity(
      TWO_TRIANGLES,
      report.communities,
      report.gamma,
    );
    expect(value).toBeCloseTo(report.modularity, 9);
  });
});

describe("binding parity with the CLI", () => {
  const corpus = [
    "triangle.edgelist",
    "two_triangles.edgelist",
    "barbell.edgelist",
    "karate.edgelist",
  ];

  for (const file of corpus) {
    it(`matches the CLI report field for field on ${file}`, async () => {
      const seed = 3;
      const edges = parseEdgeList(readFileSync(join(DATA_DIR, file), "utf8"));
      const viaService = await client.solve(edges, { seed });
      const viaCli = await cliSolve(file, seed);
      expect(normalized(viaService)).toEqual(normalized(viaCli));
    });
  }
});

describe("edge-list parsing", () => {
  it("skips comments and headers, keeps weights when asked", () => {
    const text = "# c\nn=4\n0 1 2.5\n2 3\n";
    expect(parseEdgeList(text, true)).toEqual([[0, 1, 2.5], [2, 3]]);
    expect(parseEdgeList(text, false)).toEqual([[0, 1], [2, 3]]);
  });

  it("rejects malformed lines", () => {
    expect(() => parseEdgeList("0 1 2 3\n")).toThrow(ModmaxError);
  });
});
