// Typed client for the study service. Every network access the UI makes
// goes through this module, and only /api/v1 routes exist here.

export interface StudyInfo {
    study_id: string;
    task_kind: 'label-and-select' | 'select-only';
    sets: string[];
    max_select: number;
    candidates_per_round: number;
    rounds: number;
    ensemble_k: number;
    allowed_labels: string[] | null;
}

export interface RoundPayload {
    set_id: string;
    display_order: number[];
    max_select: number;
    label_question: string | null;
    candidates: string[];   // image URLs in display order
    lr_image: string;
    round_index: number;
    rounds: number;
    allowed_labels: string[] | null;
}

export interface BallotBody {
    selections: number[];   // display positions
    label: string | null;
    set_id: string;
}

export interface BallotAck {
    status: 'accepted';
    completed: boolean;
    round_cursor: number;
}

/** A non-2xx response carrying the server's machine-readable reason. */
export class ApiRejection extends Error {
    readonly status: number;
    readonly code: string;

    constructor(status: number, code: string, message: string) {
        super(message);
        this.name = 'ApiRejection';
        this.status = status;
        this.code = code;
    }
}

async function parseError(res: Response): Promise<ApiRejection> {
    try {
        const body = await res.json();
        if (body && typeof body.code === 'string') {
            return new ApiRejection(res.status, body.code, String(body.message ?? ''));
        }
    } catch {
        // fall through: not a structured error
    }
    return new ApiRejection(res.status, 'http-error', `HTTP ${res.status}`);
}

export class StudyApi {
    readonly base: string;

    constructor(base: string = '') {
        this.base = base.replace(/\/$/, '');
    }

    /** Payload URLs are server-relative; resolve them against the base. */
    imageUrl(path: string): string {
        return this.base + path;
    }

    async getStudy(): Promise<StudyInfo> {
        return this.getJson('/api/v1/study');
    }

    async createSession(voterId: string): Promise<string> {
        const body = await this.postJson('/api/v1/sessions', { voter_id: voterId });
        return body.session_id as string;
    }

    async getRound(sessionId: string): Promise<RoundPayload> {
        return this.getJson(`/api/v1/sessions/${sessionId}/round`);
    }

    async submitBallot(sessionId: string, ballot: BallotBody): Promise<BallotAck> {
        return this.postJson(`/api/v1/sessions/${sessionId}/ballot`, ballot);
    }

    private async getJson(path: string): Promise<any> {
        const res = await fetch(this.base + path);
        if (!res.ok) throw await parseError(res);
        return res.json();
    }

    private async postJson(path: string, payload: unknown): Promise<any> {
        const res = await fetch(this.base + path, {
            method: 'POST',
            headers: { 'Content-Type': 'application/json' },
            body: JSON.stringify(payload),
        });
        if (!res.ok) throw await parseError(res);
        return res.json();
    }
}
