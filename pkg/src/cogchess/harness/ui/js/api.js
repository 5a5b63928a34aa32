/**
 * Typed client for the annotation service HTTP API.
 *
 * This module is the only place the frontend talks to the network, and the
 * API is the only place score values come from: nothing in the UI computes
 * or adjusts a score, it renders what the service returns.
 */
/**
 * Any non-2xx response or transport failure. `status` is the HTTP status,
 * or 0 when the service could not be reached at all.
 */
export class ApiError extends Error {
    constructor(status, detail) {
        super(detail);
        this.name = "ApiError";
        this.status = status;
    }
    get unreachable() {
        return this.status === 0;
    }
}
async function errorDetail(response) {
    try {
        const body = (await response.json());
        if (body && typeof body.detail === "string") {
            return body.detail;
        }
        return JSON.stringify(body);
    }
    catch {
        return `${response.status} ${response.statusText}`.trim();
    }
}
export class ApiClient {
    constructor(baseUrl = "", fetchFn) {
        this.base = baseUrl.replace(/\/+$/, "");
        this.fetchFn = fetchFn ?? ((input, init) => fetch(input, init));
    }
    async request(path, init) {
        let response;
        try {
            response = await this.fetchFn(`${this.base}${path}`, init);
        }
        catch (cause) {
            const reason = cause instanceof Error ? cause.message : String(cause);
            throw new ApiError(0, `annotation service unreachable: ${reason}`);
        }
        if (!response.ok) {
            throw new ApiError(response.status, await errorDetail(response));
        }
        return (await response.json());
    }
    listTasks(status = "all") {
        return this.request(`/api/tasks?status=${status}`);
    }
    taskDetail(taskId) {
        return this.request(`/api/tasks/${encodeURIComponent(taskId)}`);
    }
    submitScore(taskId, annotator, score) {
        return this.request(`/api/tasks/${encodeURIComponent(taskId)}/annotations`, {
            method: "POST",
            headers: { "Content-Type": "application/json" },
            body: JSON.stringify({ annotator, score }),
        });
    }
    report() {
        return this.request("/api/report");
    }
}
