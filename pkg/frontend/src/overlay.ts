import type { InstanceView, RecordView } from "./types.js";

// Color cycle shared by box overlays and instance list entries, so an
// auditor can pair them at a glance. Picked for contrast on photos and
// on the neutral fallback canvas alike.
const PALETTE = [
  "#e6194b",
  "#3cb44b",
  "#4363d8",
  "#f58231",
  "#911eb4",
  "#46f0f0",
  "#f032e6",
  "#808000",
  "#008080",
  "#9a6324",
];

export function instanceColor(index: number): string {
  return PALETTE[index % PALETTE.length];
}

export interface BoxOverlay {
  name: string;
  caption: string;
  color: string;
  // CSS percentages relative to the rendered image frame. Boxes arrive
  // normalized to [0, 1], so percent positioning keeps the overlay
  // correct at any display size without knowing pixel dimensions.
  left: string;
  top: string;
  width: string;
  height: string;
}

function pct(fraction: number): string {
  return `${(fraction * 100).toFixed(2)}%`;
}

function boxOverlay(inst: InstanceView, index: number): BoxOverlay {
  const [x1, y1, x2, y2] = inst.bbox;
  return {
    name: inst.name,
    caption: inst.caption,
    color: instanceColor(index),
    left: pct(x1),
    top: pct(y1),
    width: pct(x2 - x1),
    height: pct(y2 - y1),
  };
}

// One overlay per instance, in annotation order; index keys the color.
export function buildOverlays(record: RecordView): BoxOverlay[] {
  return record.instances.map((inst, index) => boxOverlay(inst, index));
}
