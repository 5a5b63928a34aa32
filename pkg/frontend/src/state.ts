/**
 * Annotation queue state machine.
 *
 * Owns everything the view needs to draw and every transition the user can
 * trigger; the DOM layer only forwards events here and re-renders on each
 * change notification. Keeping this free of browser APIs makes the whole
 * flow testable without one.
 *
 * Submission rules it enforces:
 *  - no annotator name, no selected score, or a request in flight means
 *    submit is unavailable (double submits are swallowed, not queued);
 *  - a 409 means someone (possibly this annotator in another tab) already
 *    scored the task: refresh the queue and move on, never error out;
 *  - other 4xx responses surface inline and keep the selection so the
 *    annotator can correct and resubmit;
 *  - transport failures keep the selection and stay on the task as a retry
 *    affordance — the queue never advances on a failed submit.
 */

import {
  ApiError,
  Progress,
  QualityValue,
  Report,
  SubmitResponse,
  TaskDetail,
  TaskListResponse,
  TaskSummary,
} from "./api.js";

/** The slice of the HTTP client the queue needs; ApiClient satisfies it. */
export interface AnnotationApi {
  listTasks(status?: "all" | "pending" | "done"): Promise<TaskListResponse>;
  taskDetail(taskId: string): Promise<TaskDetail>;
  submitScore(taskId: string, annotator: string, score: number): Promise<SubmitResponse>;
  report(): Promise<Report>;
}

export interface UiState {
  tasks: TaskSummary[];
  progress: Progress;
  quorum: number;
  currentId: string | null;
  detail: TaskDetail | null;
  annotator: string;
  selectedScore: number | null;
  inFlight: boolean;
  /** Blocking problem shown in the banner (bad submit, unreachable service). */
  error: string | null;
  /** Non-blocking information (conflict refresh, completion). */
  notice: string | null;
  report: Report | null;
  loaded: boolean;
}

export type Listener = (state: UiState) => void;

function freshState(): UiState {
  return {
    tasks: [],
    progress: { done: 0, total: 0 },
    quorum: 1,
    currentId: null,
    detail: null,
    annotator: "",
    selectedScore: null,
    inFlight: false,
    error: null,
    notice: null,
    report: null,
    loaded: false,
  };
}

export class QueueController {
  readonly api: AnnotationApi;
  private listeners: Listener[] = [];
  state: UiState;

  constructor(api: AnnotationApi, annotator = "") {
    this.api = api;
    this.state = freshState();
    this.state.annotator = annotator;
  }

  onChange(listener: Listener): void {
    this.listeners.push(listener);
  }

  private emit(): void {
    for (const listener of this.listeners) {
      listener(this.state);
    }
  }

  /** Reload the queue and the report; keeps the current task when it still exists. */
  async refresh(): Promise<void> {
    try {
      const listing = await this.api.listTasks("all");
      this.state.tasks = listing.tasks;
      this.state.progress = listing.progress;
      this.state.quorum = listing.quorum;
      this.state.report = await this.api.report();
      this.state.loaded = true;
      this.state.error = null;
      const current = this.state.currentId;
      if (!current || !listing.tasks.some((t) => t.task_id === current)) {
        const next = this.nextPendingId();
        if (next) {
          await this.select(next);
        } else {
          this.state.currentId = null;
          this.state.detail = null;
        }
      }
    } catch (cause) {
      this.state.error = describeError(cause);
    }
    this.emit();
  }

  nextPendingId(after?: string): string | null {
    const tasks = this.state.tasks;
    const start = after ? tasks.findIndex((t) => t.task_id === after) + 1 : 0;
    for (let i = 0; i < tasks.length; i += 1) {
      const task = tasks[(start + i) % tasks.length];
      if (task.status === "pending") {
        return task.task_id;
      }
    }
    return null;
  }

  get allDone(): boolean {
    return this.state.loaded && this.state.progress.total > 0 && this.state.progress.done === this.state.progress.total;
  }

  /** The reasoning value to show in the completion state, verbatim from the report. */
  get finalReasoning(): QualityValue | null {
    const report = this.state.report;
    if (!report || !("reasoning" in report.per_quality)) {
      return null;
    }
    return report.per_quality.reasoning;
  }

  async select(taskId: string): Promise<void> {
    try {
      this.state.detail = await this.api.taskDetail(taskId);
      this.state.currentId = taskId;
      this.state.selectedScore = null;
      this.state.error = null;
    } catch (cause) {
      this.state.error = describeError(cause);
    }
    this.emit();
  }

  setAnnotator(name: string): void {
    this.state.annotator = name;
    this.emit();
  }

  /** Select a rubric level; anything outside 0..5 is ignored. */
  setScore(score: number): void {
    if (!Number.isInteger(score) || score < 0 || score > 5) {
      return;
    }
    this.state.selectedScore = score;
    this.emit();
  }

  get canSubmit(): boolean {
    return (
      this.state.detail !== null &&
      this.state.annotator.trim() !== "" &&
      this.state.selectedScore !== null &&
      !this.state.inFlight
    );
  }

  async submit(): Promise<void> {
    if (!this.canSubmit || this.state.detail === null || this.state.selectedScore === null) {
      return;
    }
    const taskId = this.state.detail.task_id;
    const score = this.state.selectedScore;
    this.state.inFlight = true;
    this.state.error = null;
    this.state.notice = null;
    this.emit();
    try {
      const outcome = await this.api.submitScore(taskId, this.state.annotator.trim(), score);
      this.state.inFlight = false;
      this.state.progress = outcome.progress;
      if (this.state.report) {
        this.state.report = { ...this.state.report, per_quality: outcome.per_quality, progress: outcome.progress };
      }
      this.applyTaskStatus(taskId, outcome.task.status, outcome.task.collected.length);
      this.state.notice = `score ${score} recorded for ${taskId}`;
      await this.advanceFrom(taskId);
    } catch (cause) {
      this.state.inFlight = false;
      if (cause instanceof ApiError && cause.status === 409) {
        // Completed elsewhere (or a double submit landed first): sync up and move on.
        this.state.notice = `${taskId} was already scored — refreshing`;
        await this.refresh();
        await this.advanceFrom(taskId);
      } else {
        this.state.error = describeError(cause);
      }
    }
    this.emit();
  }

  private applyTaskStatus(taskId: string, status: TaskSummary["status"], count: number): void {
    this.state.tasks = this.state.tasks.map((task) =>
      task.task_id === taskId ? { ...task, status, n_annotations: count } : task,
    );
  }

  private async advanceFrom(taskId: string): Promise<void> {
    const next = this.nextPendingId(taskId);
    if (next) {
      await this.select(next);
    } else {
      this.state.currentId = null;
      this.state.detail = null;
      this.state.selectedScore = null;
      // Completion state reads the final value from the service.
      try {
        this.state.report = await this.api.report();
      } catch (cause) {
        this.state.error = describeError(cause);
      }
    }
  }
}

export function describeError(cause: unknown): string {
  if (cause instanceof ApiError) {
    if (cause.unreachable) {
      return cause.message;
    }
    return `request failed (${cause.status}): ${cause.message}`;
  }
  return cause instanceof Error ? cause.message : String(cause);
}
