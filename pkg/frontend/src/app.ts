import { FetchAuditApi } from "./api.js";
import { renderQueue } from "./queue.js";
import { renderReview } from "./review.js";

// Hash routing keeps the bundle a single static page: "#/" is the queue
// and "#/task/<id>" the review screen. The audit service serves this
// bundle itself, so the API lives on the same origin.
const api = new FetchAuditApi();

function auditorName(): string {
  const stored = localStorage.getItem("auditor");
  if (stored) return stored;
  localStorage.setItem("auditor", "auditor");
  return "auditor";
}

function header(root: HTMLElement): void {
  const bar = document.createElement("div");
  bar.className = "topbar";
  const label = document.createElement("label");
  label.textContent = "auditing as ";
  const input = document.createElement("input");
  input.value = auditorName();
  input.addEventListener("change", () => {
    localStorage.setItem("auditor", input.value.trim() || "auditor");
  });
  label.append(input);
  bar.append(label);
  root.append(bar);
}

async function route(root: HTMLElement): Promise<void> {
  root.textContent = "";
  header(root);
  const view = document.createElement("div");
  root.append(view);
  const match = /^#\/task\/(.+)$/.exec(location.hash);
  if (match) {
    const id = decodeURIComponent(match[1]);
    try {
      const task = await api.getTask(id);
      renderReview(view, task, {
        api,
        auditor: auditorName(),
        onNext: () => {
          location.hash = "#/";
        },
        onBack: () => {
          location.hash = "#/";
        },
      });
    } catch (err) {
      const banner = document.createElement("div");
      banner.className = "banner error";
      banner.textContent = `could not load task ${id}: ${err instanceof Error ? err.message : err}`;
      view.append(banner);
    }
    return;
  }
  await renderQueue(view, {
    api,
    onOpen: (id) => {
      location.hash = `#/task/${encodeURIComponent(id)}`;
    },
  });
}

const root = document.getElementById("app");
if (root) {
  window.addEventListener("hashchange", () => void route(root));
  void route(root);
}
