/**
 * Typed client for the annotation service HTTP API.
 *
 * This module is the only place the frontend talks to the network, and the
 * API is the only place score values come from: nothing in the UI computes
 * or adjusts a score, it renders what the service returns.
 */

export interface Progress {
  done: number;
  total: number;
}

export type TaskStatus = "pending" | "done";

export interface TaskSummary {
  task_id: string;
  puzzle_id: string;
  move_index: number;
  status: TaskStatus;
  n_annotations: number;
}

export interface TaskListResponse {
  tasks: TaskSummary[];
  progress: Progress;
  quorum: number;
}

export interface RubricLevel {
  score: number;
  label: string;
  guidance: string;
}

export interface CollectedScore {
  annotator: string;
  score: number;
}

export interface TaskDetail {
  task_id: string;
  puzzle_id: string;
  move_index: number;
  fen_before: string;
  engine_move: string;
  explanation: string;
  status: TaskStatus;
  collected: CollectedScore[];
  rubric: RubricLevel[];
}

/** A quality value as reported: a number, or "pending" before quorum. */
export type QualityValue = number | "pending";

export interface Report {
  per_quality: Record<string, QualityValue>;
  progress: Progress;
  backend: Record<string, unknown>;
  run_id: string | null;
}

export interface SubmitResponse {
  task: Omit<TaskDetail, "rubric">;
  per_quality: Record<string, QualityValue>;
  progress: Progress;
}

/**
 * Any non-2xx response or transport failure. `status` is the HTTP status,
 * or 0 when the service could not be reached at all.
 */
export class ApiError extends Error {
  readonly status: number;

  constructor(status: number, detail: string) {
    super(detail);
    this.name = "ApiError";
    this.status = status;
  }

  get unreachable(): boolean {
    return this.status === 0;
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

async function errorDetail(response: Response): Promise<string> {
  try {
    const body = (await response.json()) as { detail?: unknown };
    if (body && typeof body.detail === "string") {
      return body.detail;
    }
    return JSON.stringify(body);
  } catch {
    return `${response.status} ${response.statusText}`.trim();
  }
}

export class ApiClient {
  private readonly base: string;
  private readonly fetchFn: FetchLike;

  constructor(baseUrl = "", fetchFn?: FetchLike) {
    this.base = baseUrl.replace(/\/+$/, "");
    this.fetchFn = fetchFn ?? ((input, init) => fetch(input, init));
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let response: Response;
    try {
      response = await this.fetchFn(`${this.base}${path}`, init);
    } catch (cause) {
      const reason = cause instanceof Error ? cause.message : String(cause);
      throw new ApiError(0, `annotation service unreachable: ${reason}`);
    }
    if (!response.ok) {
      throw new ApiError(response.status, await errorDetail(response));
    }
    return (await response.json()) as T;
  }

  listTasks(status: "all" | "pending" | "done" = "all"): Promise<TaskListResponse> {
    return this.request<TaskListResponse>(`/api/tasks?status=${status}`);
  }

  taskDetail(taskId: string): Promise<TaskDetail> {
    return this.request<TaskDetail>(`/api/tasks/${encodeURIComponent(taskId)}`);
  }

  submitScore(taskId: string, annotator: string, score: number): Promise<SubmitResponse> {
    return this.request<SubmitResponse>(
      `/api/tasks/${encodeURIComponent(taskId)}/annotations`,
      {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify({ annotator, score }),
      },
    );
  }

  report(): Promise<Report> {
    return this.request<Report>("/api/report");
  }
}
