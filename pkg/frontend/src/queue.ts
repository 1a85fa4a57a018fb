import type { AuditApi, ListQuery } from "./api.js";
import type { Status, TaskSummary } from "./types.js";

export interface QueueOptions {
  api: AuditApi;
  pageSize?: number;
  onOpen?: (taskId: string) => void;
}

const STATUS_RANK: Record<Status, number> = { pending: 0, rejected: 1, approved: 2 };

// Pending tasks float to the top of the page; within a status group the
// server's bucket-then-id order is preserved (sort is stable).
export function sortPendingFirst(tasks: TaskSummary[]): TaskSummary[] {
  return [...tasks].sort((a, b) => STATUS_RANK[a.status] - STATUS_RANK[b.status]);
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function select(options: string[], onChange: (value: string) => void): HTMLSelectElement {
  const node = el("select");
  for (const value of options) {
    const opt = el("option", undefined, value);
    opt.value = value;
    node.append(opt);
  }
  node.addEventListener("change", () => onChange(node.value));
  return node;
}

// Task queue screen: filter controls, one row per task, cursor paging.
// Returns a promise that settles after the first page has rendered.
export function renderQueue(root: HTMLElement, options: QueueOptions): Promise<void> {
  let status = "";
  let bucket = "";
  // Cursors of pages already visited; the last entry is the current
  // page, so prev pops and next pushes.
  let trail: (string | undefined)[] = [undefined];

  root.textContent = "";
  const screen = el("section", "queue");
  screen.append(el("h2", undefined, "audit queue"));

  const controls = el("div", "controls");
  controls.append(el("label", undefined, "status"));
  controls.append(
    select(["all", "pending", "approved", "rejected"], (value) => {
      status = value === "all" ? "" : value;
      trail = [undefined];
      void load();
    }),
  );
  controls.append(el("label", undefined, "bucket"));
  controls.append(
    select(["all", "simple", "regular", "complex"], (value) => {
      bucket = value === "all" ? "" : value;
      trail = [undefined];
      void load();
    }),
  );
  const prev = el("button", "prev", "prev");
  const next = el("button", "next", "next");
  prev.addEventListener("click", () => {
    if (trail.length > 1) {
      trail.pop();
      void load();
    }
  });
  controls.append(prev, next);
  screen.append(controls);

  const banner = el("div", "banner hidden");
  screen.append(banner);
  const table = el("table", "tasks");
  const head = el("tr");
  for (const column of ["id", "bucket", "score", "status", "instances"]) {
    head.append(el("th", undefined, column));
  }
  table.append(head);
  screen.append(table);
  root.append(screen);

  let nextCursor: string | null = null;

  async function load(): Promise<void> {
    const query: ListQuery = { cursor: trail[trail.length - 1] };
    if (status) query.status = status as Status;
    if (bucket) query.bucket = bucket;
    if (options.pageSize) query.pageSize = options.pageSize;
    banner.className = "banner hidden";
    try {
      const page = await options.api.listTasks(query);
      nextCursor = page.next_cursor;
      paint(sortPendingFirst(page.tasks));
    } catch (err) {
      // Never leave a silently empty queue: keep whatever rows were
      // on screen and offer an explicit retry.
      banner.textContent = `could not load tasks: ${err instanceof Error ? err.message : err} `;
      const retry = el("button", "retry", "retry");
      retry.addEventListener("click", () => void load());
      banner.append(retry);
      banner.className = "banner error";
    }
    prev.disabled = trail.length <= 1;
    next.disabled = nextCursor === null;
  }

  next.addEventListener("click", () => {
    if (nextCursor !== null) {
      trail.push(nextCursor);
      void load();
    }
  });

  function paint(tasks: TaskSummary[]): void {
    for (const row of Array.from(table.querySelectorAll("tr.task"))) {
      row.remove();
    }
    if (tasks.length === 0) {
      const row = el("tr", "task empty");
      const cell = el("td", undefined, "no tasks match the current filters");
      cell.colSpan = 5;
      row.append(cell);
      table.append(row);
      return;
    }
    for (const task of tasks) {
      const row = el("tr", "task");
      row.dataset.id = task.id;
      row.append(el("td", "id", task.id));
      row.append(el("td", undefined, task.bucket));
      row.append(el("td", undefined, task.score.toFixed(3)));
      row.append(el("td", `status-${task.status}`, task.status));
      row.append(el("td", undefined, String(task.n_instances)));
      row.addEventListener("click", () => options.onOpen?.(task.id));
      table.append(row);
    }
  }

  return load();
}
