/**
 * Display formatting for values the service reports. Formatting only —
 * no score is ever computed, combined, or rounded-then-reused here; every
 * number shown on screen arrives fully formed from the API.
 */
export const QUALITY_ORDER = [
    "perception",
    "memory",
    "attention",
    "reasoning",
    "anticipation",
];
export function formatQuality(value) {
    if (value === undefined) {
        return "—";
    }
    if (value === "pending") {
        return "pending";
    }
    return value.toFixed(4);
}
export function formatProgress(progress) {
    return `${progress.done}/${progress.total}`;
}
/** Rows for the report footer, fixed quality order, missing ones dashed. */
export function reportRows(report) {
    return QUALITY_ORDER.map((quality) => ({
        quality,
        display: formatQuality(report?.per_quality[quality]),
    }));
}
