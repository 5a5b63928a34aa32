/**
 * Browser bootstrap: wires DOM events to the queue controller and redraws
 * from its state. All decisions live in state.ts; everything here is
 * rendering and event plumbing.
 */

import { ApiClient, TaskDetail } from "./api.js";
import { boardFromFen, FenError, highlightSquares, PIECE_GLYPHS } from "./board.js";
import { formatProgress, formatQuality, reportRows } from "./format.js";
import { QueueController } from "./state.js";

const ANNOTATOR_KEY = "annotation-ui.annotator";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) {
    node.className = className;
  }
  if (text !== undefined) {
    node.textContent = text;
  }
  return node;
}

function renderBoard(detail: TaskDetail): HTMLElement {
  const wrap = el("div", "board-wrap");
  try {
    const model = boardFromFen(detail.fen_before);
    const marked = new Set(highlightSquares(detail.engine_move, model.sideToMove));
    const table = el("table", "board");
    table.setAttribute("aria-label", "chess position");
    for (const rank of model.ranks) {
      const row = el("tr");
      for (const cell of rank) {
        const fileIndex = cell.square.charCodeAt(0) - 97;
        const rankIndex = Number(cell.square[1]);
        const dark = (fileIndex + rankIndex) % 2 === 0;
        const td = el("td", dark ? "sq dark" : "sq light");
        td.dataset.square = cell.square;
        if (marked.has(cell.square)) {
          td.classList.add("marked");
        }
        if (cell.piece) {
          const glyph = el("span", cell.piece === cell.piece.toUpperCase() ? "piece white" : "piece black");
          glyph.textContent = PIECE_GLYPHS[cell.piece] ?? cell.piece;
          td.appendChild(glyph);
        }
        row.appendChild(td);
      }
      table.appendChild(row);
    }
    wrap.appendChild(table);
    const caption = el(
      "div",
      "board-caption",
      `${model.sideToMove === "w" ? "White" : "Black"} to move — engine played ${detail.engine_move}`,
    );
    wrap.appendChild(caption);
  } catch (cause) {
    if (!(cause instanceof FenError)) {
      throw cause;
    }
    const problem = el("div", "board-error");
    problem.setAttribute("role", "alert");
    problem.appendChild(el("p", undefined, `Position could not be rendered: ${cause.message}`));
    const raw = el("pre", "fen-fallback", detail.fen_before);
    problem.appendChild(raw);
    problem.appendChild(el("p", undefined, `Engine move: ${detail.engine_move}`));
    wrap.appendChild(problem);
  }
  return wrap;
}

function renderRubric(controller: QueueController, detail: TaskDetail): HTMLElement {
  const box = el("fieldset", "rubric");
  box.appendChild(el("legend", undefined, "Rubric (keys 0–5)"));
  for (const level of detail.rubric) {
    const row = el("label", "rubric-row");
    const radio = el("input") as HTMLInputElement;
    radio.type = "radio";
    radio.name = "rubric-score";
    radio.value = String(level.score);
    radio.checked = controller.state.selectedScore === level.score;
    radio.addEventListener("change", () => controller.setScore(level.score));
    row.appendChild(radio);
    const text = el("span");
    text.appendChild(el("strong", undefined, `${level.score} — ${level.label}`));
    text.appendChild(el("small", undefined, level.guidance));
    row.appendChild(text);
    box.appendChild(row);
  }
  return box;
}

function render(controller: QueueController, root: HTMLElement): void {
  const state = controller.state;
  root.replaceChildren();

  const header = el("header");
  header.appendChild(el("h1", undefined, "Move annotation"));
  const nameLabel = el("label", "annotator-field", "Annotator ");
  const nameInput = el("input") as HTMLInputElement;
  nameInput.type = "text";
  nameInput.placeholder = "your name";
  nameInput.value = state.annotator;
  nameInput.addEventListener("input", () => {
    window.localStorage.setItem(ANNOTATOR_KEY, nameInput.value);
    controller.setAnnotator(nameInput.value);
  });
  nameLabel.appendChild(nameInput);
  header.appendChild(nameLabel);
  header.appendChild(el("div", "progress", `tasks ${formatProgress(state.progress)}`));
  root.appendChild(header);

  if (state.error) {
    const banner = el("div", "banner error", state.error);
    banner.setAttribute("role", "alert");
    root.appendChild(banner);
  }
  if (state.notice) {
    const banner = el("div", "banner notice", state.notice);
    banner.setAttribute("role", "status");
    root.appendChild(banner);
  }

  const layout = el("div", "layout");

  const queue = el("nav", "queue");
  queue.appendChild(el("h2", undefined, "Tasks"));
  if (!state.loaded) {
    queue.appendChild(el("p", "muted", "loading…"));
  } else if (state.tasks.length === 0) {
    queue.appendChild(el("p", "muted", "no annotation tasks in this run"));
  }
  for (const task of state.tasks) {
    const button = el("button", task.status === "done" ? "task done" : "task pending");
    if (task.task_id === state.currentId) {
      button.classList.add("current");
    }
    button.textContent = `${task.status === "done" ? "✓" : "•"} ${task.task_id}`;
    button.addEventListener("click", () => void controller.select(task.task_id));
    queue.appendChild(button);
  }
  layout.appendChild(queue);

  const work = el("main", "work");
  if (controller.allDone) {
    const doneBox = el("section", "all-done");
    doneBox.appendChild(el("h2", undefined, "All tasks scored"));
    const reasoning = controller.finalReasoning;
    doneBox.appendChild(
      el("p", undefined, `Reasoning score: ${reasoning === null ? "—" : formatQuality(reasoning)}`),
    );
    work.appendChild(doneBox);
  } else if (state.detail) {
    const detail = state.detail;
    work.appendChild(renderBoard(detail));
    const aside = el("section", "explanation");
    aside.appendChild(el("h2", undefined, `Explanation for ${detail.engine_move}`));
    aside.appendChild(el("p", undefined, detail.explanation));

    const meta = el("details", "task-meta");
    meta.appendChild(el("summary", undefined, "task details"));
    meta.appendChild(
      el(
        "p",
        undefined,
        `${detail.task_id} — puzzle ${detail.puzzle_id}, move ${detail.move_index}; ` +
          `${detail.collected.length} score(s) so far, quorum ${state.quorum}`,
      ),
    );
    aside.appendChild(meta);
    work.appendChild(aside);

    work.appendChild(renderRubric(controller, detail));

    const submit = el("button", "submit") as HTMLButtonElement;
    submit.textContent = state.inFlight ? "submitting…" : "Submit score";
    submit.disabled = !controller.canSubmit;
    submit.addEventListener("click", () => void controller.submit());
    work.appendChild(submit);
    if (state.annotator.trim() === "") {
      work.appendChild(el("p", "muted", "enter an annotator name to submit"));
    }
  } else if (state.loaded) {
    work.appendChild(el("p", "muted", "select a task from the queue"));
  }
  layout.appendChild(work);
  root.appendChild(layout);

  const footer = el("footer", "report");
  footer.appendChild(el("h2", undefined, "Live report"));
  const table = el("table", "report-table");
  const head = el("tr");
  const values = el("tr");
  for (const row of reportRows(state.report)) {
    head.appendChild(el("th", undefined, row.quality));
    values.appendChild(el("td", undefined, row.display));
  }
  table.appendChild(head);
  table.appendChild(values);
  footer.appendChild(table);
  root.appendChild(footer);
}

export function boot(root: HTMLElement): QueueController {
  const controller = new QueueController(
    new ApiClient(""),
    window.localStorage.getItem(ANNOTATOR_KEY) ?? "",
  );
  controller.onChange(() => render(controller, root));

  document.addEventListener("keydown", (event) => {
    const target = event.target as HTMLElement | null;
    if (target && (target.tagName === "INPUT" || target.tagName === "TEXTAREA")) {
      return;
    }
    if (event.key >= "0" && event.key <= "5") {
      controller.setScore(Number(event.key));
    } else if (event.key === "Enter" && controller.canSubmit) {
      void controller.submit();
    }
  });

  render(controller, root);
  void controller.refresh();
  return controller;
}

const mount = document.getElementById("app");
if (mount) {
  boot(mount);
}
