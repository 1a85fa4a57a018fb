import type { AuditApi } from "./api.js";
import { buildOverlays, instanceColor } from "./overlay.js";
import {
  allAnswered,
  draftFromTask,
  predictStatus,
  ReviewSubmitter,
  type ChecksDraft,
} from "./state.js";
import type { Status, TaskDetail } from "./types.js";

export interface ReviewOptions {
  api: AuditApi;
  auditor: string;
  // Called after any server-acknowledged submit.
  onDone?: (task: TaskDetail) => void;
  // Called after the all-yes keyboard shortcut is acknowledged, so the
  // app can advance to the next task in the queue.
  onNext?: () => void;
  onBack?: () => void;
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

// The whole screen re-reads its enabled/badge state from these handles
// after every interaction; DOM is written, never read back.
interface ScreenRefs {
  badge: HTMLElement;
  submit: HTMLButtonElement;
  banner: HTMLElement;
  checkButtons: Map<string, { yes: HTMLButtonElement; no: HTMLButtonElement }>;
}

export function renderReview(root: HTMLElement, task: TaskDetail, options: ReviewOptions): void {
  const checks = Object.keys(task.verdicts);
  const draft = draftFromTask(task, checks);
  const submitter = new ReviewSubmitter(options.api, options.auditor);
  let status: Status = task.status;

  root.textContent = "";
  const screen = el("section", "review");

  const header = el("header", "review-header");
  if (options.onBack) {
    const back = el("button", "back", "back to queue");
    back.addEventListener("click", () => options.onBack?.());
    header.append(back);
  }
  header.append(el("h2", undefined, task.record.id));
  const badge = el("span", `badge status-${status}`, status);
  header.append(badge);
  header.append(el("span", "meta", `${task.bucket} / score ${task.score.toFixed(3)}`));
  screen.append(header);

  screen.append(el("p", "global-caption", task.record.caption));

  const banner = el("div", "banner hidden");
  screen.append(banner);

  const body = el("div", "review-body");
  body.append(viewerPane(task));
  const side = el("div", "side");
  side.append(instancesPane(task, screen));
  side.append(relationshipsPane(task));
  body.append(side);
  screen.append(body);

  const refs: ScreenRefs = { badge, submit: el("button"), banner, checkButtons: new Map() };
  screen.append(checklistPane(task, draft, refs, () => syncControls(refs, draft, submitter)));
  root.append(screen);

  function setStatus(next: Status, optimistic: boolean): void {
    status = next;
    refs.badge.textContent = optimistic ? `${next}?` : next;
    refs.badge.className = `badge status-${next}${optimistic ? " optimistic" : ""}`;
  }

  function showError(message: string): void {
    refs.banner.textContent = `${message} (answers kept; submit again to retry)`;
    refs.banner.className = "banner error";
  }

  async function doSubmit(): Promise<boolean> {
    if (submitter.inFlight) return false; // second click of a double click
    const before = status;
    refs.banner.className = "banner hidden";
    setStatus(predictStatus(draft), true);
    // submit() flips its in-flight flag synchronously, so syncing right
    // after starting it disables every control for the duration.
    const submission = submitter.submit(task, draft);
    syncControls(refs, draft, submitter);
    try {
      const outcome = await submission;
      if (outcome === null) return false;
      setStatus(outcome.task.status, false);
      options.onDone?.(outcome.task);
      return true;
    } catch (err) {
      setStatus(before, false);
      showError(err instanceof Error ? err.message : String(err));
      return false;
    } finally {
      syncControls(refs, draft, submitter);
    }
  }

  refs.submit.addEventListener("click", () => void doSubmit());

  // Bulk-audit shortcut: "y" answers every check yes, submits, and on
  // acknowledgement hands control back to the app to advance.
  screen.tabIndex = -1;
  screen.addEventListener("keydown", (event) => {
    if (event.key !== "y" || submitter.inFlight) return;
    for (const check of checks) draft[check] = true;
    syncControls(refs, draft, submitter);
    void doSubmit().then((acked) => {
      if (acked) options.onNext?.();
    });
  });

  syncControls(refs, draft, submitter);
}

function viewerPane(task: TaskDetail): HTMLElement {
  const frame = el("div", "image-frame");
  const img = el("img", "subject");
  img.src = task.image_ref;
  img.alt = task.record.caption;
  // A broken reference keeps the boxes: swap the image for a neutral
  // canvas and let the overlays carry the layout.
  img.addEventListener("error", () => {
    img.replaceWith(el("div", "canvas-fallback"));
    frame.classList.add("no-image");
  });
  frame.append(img);
  for (const overlay of buildOverlays(task.record)) {
    const box = el("div", "box-overlay");
    box.dataset.name = overlay.name;
    box.style.borderColor = overlay.color;
    box.style.left = overlay.left;
    box.style.top = overlay.top;
    box.style.width = overlay.width;
    box.style.height = overlay.height;
    const tag = el("span", "box-label", overlay.name);
    tag.style.background = overlay.color;
    box.append(tag);
    frame.append(box);
  }
  return frame;
}

function instancesPane(task: TaskDetail, screen: HTMLElement): HTMLElement {
  const pane = el("div", "instances");
  pane.append(el("h3", undefined, "instances"));
  const list = el("ul");
  task.record.instances.forEach((inst, index) => {
    const item = el("li");
    const swatch = el("span", "swatch");
    swatch.style.background = instanceColor(index);
    item.append(swatch);
    item.append(el("strong", undefined, inst.name));
    item.append(el("span", "caption", ` ${inst.caption}`));
    const overlaySelector = `.box-overlay[data-name="${inst.name}"]`;
    item.addEventListener("mouseenter", () => {
      screen.querySelector(overlaySelector)?.classList.add("active");
    });
    item.addEventListener("mouseleave", () => {
      screen.querySelector(overlaySelector)?.classList.remove("active");
    });
    list.append(item);
  });
  pane.append(list);
  return pane;
}

function relationshipsPane(task: TaskDetail): HTMLElement {
  const pane = el("div", "relationships");
  pane.append(el("h3", undefined, "relationships"));
  const list = el("ul");
  for (const rel of task.record.relationships) {
    list.append(el("li", undefined, `${rel.subject} → ${rel.phrase} → ${rel.object}`));
  }
  if (task.record.relationships.length === 0) {
    list.append(el("li", "empty", "none annotated"));
  }
  pane.append(list);
  return pane;
}

function checklistPane(
  task: TaskDetail,
  draft: ChecksDraft,
  refs: ScreenRefs,
  onChange: () => void,
): HTMLElement {
  const pane = el("div", "checklist");
  pane.append(el("h3", undefined, "checks"));
  for (const check of Object.keys(draft)) {
    const row = el("div", "check-row");
    row.append(el("span", "check-name", check.replaceAll("_", " ")));
    const yes = el("button", "vote yes", "yes");
    const no = el("button", "vote no", "no");
    yes.addEventListener("click", () => {
      draft[check] = true;
      onChange();
    });
    no.addEventListener("click", () => {
      draft[check] = false;
      onChange();
    });
    row.append(yes, no);
    pane.append(row);
    refs.checkButtons.set(check, { yes, no });
  }
  refs.submit.className = "submit";
  refs.submit.textContent = "submit verdicts";
  pane.append(refs.submit);
  return pane;
}

function syncControls(refs: ScreenRefs, draft: ChecksDraft, submitter: ReviewSubmitter): void {
  for (const [check, buttons] of refs.checkButtons) {
    buttons.yes.classList.toggle("selected", draft[check] === true);
    buttons.no.classList.toggle("selected", draft[check] === false);
    buttons.yes.disabled = submitter.inFlight;
    buttons.no.disabled = submitter.inFlight;
  }
  refs.submit.disabled = !allAnswered(draft) || submitter.inFlight;
}
