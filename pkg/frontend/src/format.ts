/**
 * Display formatting for values the service reports. Formatting only —
 * no score is ever computed, combined, or rounded-then-reused here; every
 * number shown on screen arrives fully formed from the API.
 */

import { Progress, QualityValue, Report } from "./api.js";

export const QUALITY_ORDER = [
  "perception",
  "memory",
  "attention",
  "reasoning",
  "anticipation",
] as const;

export function formatQuality(value: QualityValue | undefined): string {
  if (value === undefined) {
    return "—";
  }
  if (value === "pending") {
    return "pending";
  }
  return value.toFixed(4);
}

export function formatProgress(progress: Progress): string {
  return `${progress.done}/${progress.total}`;
}

export interface QualityRow {
  quality: string;
  display: string;
}

/** Rows for the report footer, fixed quality order, missing ones dashed. */
export function reportRows(report: Report | null): QualityRow[] {
  return QUALITY_ORDER.map((quality) => ({
    quality,
    display: formatQuality(report?.per_quality[quality]),
  }));
}
