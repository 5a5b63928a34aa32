/**
 * End-to-end flow against the real annotation service.
 *
 * Builds a two-task evaluation run (one mate-in-two reasoning question, so
 * the system plays two moves), serves it with the real harness, and drives
 * the same controller the browser uses through actual HTTP:
 *
 *  - two pending tasks and a "pending" reasoning value on load;
 *  - an out-of-range score is rejected by the service and surfaces as a
 *    visible error without losing the annotator's place;
 *  - scoring the tasks 4 and 5 moves the reported reasoning value to
 *    exactly 0.9 with no further refresh;
 *  - a duplicate submission is handled as a conflict (notice, resync),
 *    never as an error, and never changes recorded scores.
 */

import { afterAll, beforeAll, describe, expect, it } from "vitest";
import { ChildProcess, spawn, spawnSync } from "node:child_process";
import { mkdtempSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join, resolve } from "node:path";
import { fileURLToPath } from "node:url";

import { ApiClient, ApiError } from "../src/api.js";
import { QueueController } from "../src/state.js";

const HERE = fileURLToPath(new URL(".", import.meta.url));
const REPO = resolve(HERE, "..", "..");
const PORT = 8700 + (process.pid % 500);
const BASE = `http://127.0.0.1:${PORT}`;

let workDir: string;
let server: ChildProcess | null = null;
let serverLog = "";

async function waitForService(deadlineMs: number): Promise<void> {
  const deadline = Date.now() + deadlineMs;
  let lastError = "";
  while (Date.now() < deadline) {
    if (server && server.exitCode !== null) {
      throw new Error(`annotation service exited early (${server.exitCode}):\n${serverLog}`);
    }
    try {
      const response = await fetch(`${BASE}/api/report`);
      if (response.ok) {
        return;
      }
      lastError = `status ${response.status}`;
    } catch (cause) {
      lastError = cause instanceof Error ? cause.message : String(cause);
    }
    await new Promise((resolveSleep) => setTimeout(resolveSleep, 150));
  }
  throw new Error(`annotation service never came up on ${BASE}: ${lastError}\n${serverLog}`);
}

beforeAll(async () => {
  workDir = mkdtempSync(join(tmpdir(), "annotation-ui-e2e-"));
  const build = spawnSync(
    "python3",
    [join(REPO, "scripts", "make_ui_demo_run.py"), join(workDir, "demo")],
    { cwd: REPO, encoding: "utf-8", timeout: 120_000 },
  );
  if (build.status !== 0) {
    throw new Error(`demo run build failed:\n${build.stdout}\n${build.stderr}`);
  }
  const runDir = join(workDir, "demo", "run");
  server = spawn(
    "python3",
    ["-m", "cogchess.harness.cli", "annotate", "serve", "--run", runDir, "--bind", `127.0.0.1:${PORT}`],
    { cwd: REPO, stdio: ["ignore", "pipe", "pipe"] },
  );
  server.stdout?.on("data", (chunk) => {
    serverLog += String(chunk);
  });
  server.stderr?.on("data", (chunk) => {
    serverLog += String(chunk);
  });
  await waitForService(30_000);
}, 180_000);

afterAll(async () => {
  if (server) {
    server.kill("SIGTERM");
    await new Promise((resolveExit) => {
      const timer = setTimeout(() => {
        server?.kill("SIGKILL");
        resolveExit(null);
      }, 5_000);
      server?.on("exit", () => {
        clearTimeout(timer);
        resolveExit(null);
      });
    });
  }
  if (workDir) {
    rmSync(workDir, { recursive: true, force: true });
  }
});

describe("annotation flow over real HTTP", () => {
  it("serves two pending tasks and a pending reasoning value", async () => {
    const api = new ApiClient(BASE);
    const listing = await api.listTasks("all");
    expect(listing.tasks).toHaveLength(2);
    expect(listing.tasks.every((t) => t.status === "pending")).toBe(true);
    expect(listing.progress).toEqual({ done: 0, total: 2 });
    expect(listing.quorum).toBe(1);

    const report = await api.report();
    expect(report.per_quality.reasoning).toBe("pending");

    const detail = await api.taskDetail(listing.tasks[0].task_id);
    expect(detail.fen_before.length).toBeGreaterThan(0);
    expect(detail.engine_move.length).toBeGreaterThan(0);
    expect(detail.explanation.length).toBeGreaterThan(0);
    expect(detail.rubric.map((r) => r.score)).toEqual([0, 1, 2, 3, 4, 5]);
    for (const level of detail.rubric) {
      expect(level.label.length).toBeGreaterThan(0);
      expect(level.guidance.length).toBeGreaterThan(0);
    }
    // Blind review: the payload carries no machine evaluation of the move.
    expect(Object.keys(detail)).not.toContain("engine_score");
  });

  it("rejects an out-of-range score with a visible error and keeps the place", async () => {
    const controller = new QueueController(new ApiClient(BASE), "mallory");
    await controller.refresh();
    const taskId = controller.state.currentId;
    expect(taskId).not.toBeNull();

    // The selector itself refuses out-of-range values...
    controller.setScore(7);
    expect(controller.state.selectedScore).toBeNull();

    // ...and if a hand-crafted request goes out anyway, the service says no
    // and the error is shown without advancing or clearing the selection.
    controller.state.selectedScore = 7;
    await controller.submit();

    expect(controller.state.error).toContain("request failed (400)");
    expect(controller.state.error).toContain("0..5");
    expect(controller.state.currentId).toBe(taskId);
    expect(controller.state.selectedScore).toBe(7);

    const detail = await new ApiClient(BASE).taskDetail(taskId as string);
    expect(detail.status).toBe("pending");
    expect(detail.collected).toHaveLength(0);
  });

  it("scores of 4 and 5 drive the reported reasoning value to exactly 0.9", async () => {
    const controller = new QueueController(new ApiClient(BASE), "alice");
    await controller.refresh();
    expect(controller.state.currentId).not.toBeNull();

    controller.setScore(4);
    await controller.submit();
    expect(controller.state.error).toBeNull();
    expect(controller.state.progress).toEqual({ done: 1, total: 2 });
    expect(controller.state.currentId).not.toBeNull();

    controller.setScore(5);
    await controller.submit();
    expect(controller.state.error).toBeNull();
    expect(controller.state.progress).toEqual({ done: 2, total: 2 });

    // One puzzle, two system moves, scores 4 and 5:
    // mean 4.5 out of 5 -> 0.9, straight from the service.
    expect(controller.allDone).toBe(true);
    expect(controller.finalReasoning).toBe(0.9);

    const report = await new ApiClient(BASE).report();
    expect(report.per_quality.reasoning).toBe(0.9);
    expect(report.progress).toEqual({ done: 2, total: 2 });
  });

  it("a duplicate submission is a conflict notice, not an error", async () => {
    const api = new ApiClient(BASE);
    const listing = await api.listTasks("all");
    const firstId = listing.tasks[0].task_id;

    await expect(api.submitScore(firstId, "alice", 3)).rejects.toMatchObject({
      name: "ApiError",
      status: 409,
    });

    const controller = new QueueController(api, "alice");
    await controller.refresh();
    await controller.select(firstId);
    controller.setScore(3);
    await controller.submit();

    expect(controller.state.error).toBeNull();
    expect(controller.state.notice).toContain("already scored");

    // Nothing was overwritten: the aggregate is untouched.
    const report = await api.report();
    expect(report.per_quality.reasoning).toBe(0.9);
    const detail = await api.taskDetail(firstId);
    expect(detail.collected).toHaveLength(1);
    expect(detail.collected[0]).toEqual({ annotator: "alice", score: 4 });
  });

  it("transport failures surface as a retry affordance, not silence", async () => {
    const dead = new ApiClient(`http://127.0.0.1:1`);
    const controller = new QueueController(dead, "alice");
    await controller.refresh();
    expect(controller.state.loaded).toBe(false);
    expect(controller.state.error).toContain("unreachable");
    let threw: unknown = null;
    try {
      await dead.report();
    } catch (cause) {
      threw = cause;
    }
    expect(threw).toBeInstanceOf(ApiError);
    expect((threw as ApiError).unreachable).toBe(true);
  });
});
