import type {
  AnswerResponse,
  ApiErrorDoc,
  CreateResponse,
  FinalizeResponse,
  NextResponse,
  SessionView,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly code: string,
    message: string,
  ) {
    super(message);
  }

  get isConflict(): boolean {
    return this.status === 409;
  }
}

async function request<T>(path: string, init?: RequestInit): Promise<T> {
  const res = await fetch(path, init);
  if (!res.ok) {
    let code = "unknown";
    let message = `${res.status} on ${path}`;
    try {
      const doc = (await res.json()) as ApiErrorDoc;
      code = doc.error.code;
      message = doc.error.message;
    } catch {
      // non-JSON error body; keep the fallback message
    }
    throw new ApiError(res.status, code, message);
  }
  return (await res.json()) as T;
}

const json = (body: unknown): RequestInit => ({
  method: "POST",
  headers: { "Content-Type": "application/json" },
  body: JSON.stringify(body),
});

export function createSession(
  text: string,
  domain: string,
  context?: string,
): Promise<CreateResponse> {
  return request("/sessions", json({ text, domain, context }));
}

export function getSession(sessionId: string): Promise<SessionView> {
  return request(`/sessions/${sessionId}`);
}

export function getNext(sessionId: string): Promise<NextResponse> {
  return request(`/sessions/${sessionId}/next`);
}

export function postAnswer(
  sessionId: string,
  questionId: string,
  optionId: string,
  freeText?: string,
): Promise<AnswerResponse> {
  return request(
    `/sessions/${sessionId}/answers`,
    json({ question_id: questionId, option_id: optionId, free_text: freeText }),
  );
}

export function finalize(
  sessionId: string,
  feedback?: string,
): Promise<FinalizeResponse> {
  const path = `/sessions/${sessionId}/finalize`;
  if (feedback === undefined || feedback.trim() === "") {
    return request(path, { method: "POST" });
  }
  return request(path, json({ feedback }));
}
