/**
 * Typed client for the modmax HTTP service.
 *
 * The service wraps a solver that maximizes modularity exactly (with an
 * optimality certificate) or within a reported gap. This client is a pure
 * pass-through over its endpoints: solve, ami, modularity, health. Reports
 * are identical field for field to the `modmax solve` CLI for equal inputs
 * and seeds, up to the two wall-clock fields.
 */

/** Mirrors the core library version. */
export const VERSION = "0.1.0";

export type NodeId = number | string;

/** An edge as [i, j] or [i, j, weight]; weights must be positive. */
export type Edge = [NodeId, NodeId] | [NodeId, NodeId, number];

export type SolveMode = "exact" | "approximate" | "heuristic";
export type AmiNormalizer = "arithmetic" | "max" | "min" | "geometric";

export interface SolveOptions {
  gamma?: number;
  mode?: SolveMode;
  gapTolerance?: number;
  timeLimitS?: number;
  delta?: number;
  seed?: number;
  restarts?: number;
  workers?: number;
  separation?: boolean;
}

export interface SolveStats {
  nodes_explored: number;
  fathomed_integer: number;
  fathomed_infeasible: number;
  fathomed_bound: number;
  lp_solves: number;
  heuristic_runs: number;
  levels: number;
  wall_time_s: number;
}

export interface SolveReport {
  n: number;
  m: number;
  gamma: number;
  mode: SolveMode;
  seed: number;
  modularity: number;
  /** null in heuristic mode */
  best_bound: number | null;
  /** null in heuristic mode */
  gap: number | null;
  proven_optimal: boolean;
  communities: NodeId[][];
  termination_reason: string;
  runtime_s: number;
  stats: SolveStats;
}

export interface HealthInfo {
  status: string;
  version: string;
}

/** Raised when the service rejects a request or cannot be reached. */
export class ModmaxError extends Error {
  readonly status?: number;

  constructor(message: string, status?: number) {
    super(message);
    this.name = "ModmaxError";
    this.status = status;
  }
}

async function postJson<T>(url: string, body: unknown): Promise<T> {
  let response: Response;
  try {
    response = await fetch(url, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
  } catch (err) {
    throw new ModmaxError(`cannot reach ${url}: ${String(err)}`);
  }
  if (!response.ok) {
    let detail = response.statusText;
    try {
      const payload = (await response.json()) as { detail?: unknown };
      if (payload.detail !== undefined) {
        detail = typeof payload.detail === "string"
          ? payload.detail
          : JSON.stringify(payload.detail);
      }
    } catch {
      // keep the status text
    }
    throw new ModmaxError(detail, response.status);
  }
  return (await response.json()) as T;
}

export class ModmaxClient {
  readonly baseUrl: string;

  constructor(baseUrl = "http://127.0.0.1:8000") {
    this.baseUrl = baseUrl.replace(/\/+$/, "");
  }

  async health(): Promise<HealthInfo> {
    let response: Response;
    try {
      response = await fetch(`${this.baseUrl}/health`);
    } catch (err) {
      throw new ModmaxError(`cannot reach ${this.baseUrl}/health: ${String(err)}`);
    }
    if (!response.ok) {
      throw new ModmaxError(response.statusText, response.status);
    }
    return (await response.json()) as HealthInfo;
  }

  /** Maximize modularity over the given edge list. */
  async solve(edges: Edge[], options: SolveOptions = {}): Promise<SolveReport> {
    const body: Record<string, unknown> = { edges };
    if (options.gamma !== undefined) body.gamma = options.gamma;
    if (options.mode !== undefined) body.mode = options.mode;
    if (options.gapTolerance !== undefined) body.gap_tolerance = options.gapTolerance;
    if (options.timeLimitS !== undefined) body.time_limit_s = options.timeLimitS;
    if (options.delta !== undefined) body.delta = options.delta;
    if (options.seed !== undefined) body.seed = options.seed;
    if (options.restarts !== undefined) body.restarts = options.restarts;
    if (options.workers !== undefined) body.workers = options.workers;
    if (options.separation !== undefined) body.separation = options.separation;
    return postJson<SolveReport>(`${this.baseUrl}/solve`, body);
  }

  /** Adjusted mutual information of two labelings of the same nodes. */
  async ami(
    labelsA: NodeId[],
    labelsB: NodeId[],
    averageMethod: AmiNormalizer = "arithmetic",
  ): Promise<number> {
    const body = { labels_a: labelsA, labels_b: labelsB, average_method: averageMethod };
    const payload = await postJson<{ ami: number }>(`${this.baseUrl}/ami`, body);
    return payload.ami;
  }

  /** Evaluate the modularity of a given partition. */
  async modularity(
    edges: Edge[],
    communities: NodeId[][],
    gamma = 1.0,
  ): Promise<number> {
    const body = { edges, communities, gamma };
    const payload = await postJson<{ modularity: number }>(
      `${this.baseUrl}/modularity`,
      body,
    );
    return payload.modularity;
  }
}

/**
 * Parse whitespace-separated edge-list text (the CLI's input format):
 * `#` comment lines, an optional `n=<count>` header (ignored here beyond
 * validation by the service), and 2- or 3-token edge lines.
 */
export function parseEdgeList(text: string, weighted = false): Edge[] {
  const edges: Edge[] = [];
  for (const raw of text.split(/\r?\n/)) {
    const line = raw.trim();
    if (!line || line.startsWith("#") || /^n\s*=\s*\d+$/.test(line)) continue;
    const tokens = line.split(/\s+/);
    if (tokens.length !== 2 && tokens.length !== 3) {
      throw new ModmaxError(`bad edge line: ${line}`);
    }
    const asId = (t: string): NodeId => (/^[+-]?\d+$/.test(t) ? Number(t) : t);
    if (tokens.length === 3 && weighted) {
      edges.push([asId(tokens[0]), asId(tokens[1]), Number(tokens[2])]);
    } else {
      edges.push([asId(tokens[0]), asId(tokens[1])]);
    }
  }
  return edges;
}
