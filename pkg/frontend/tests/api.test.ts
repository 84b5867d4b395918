import { afterEach, describe, expect, it } from "vitest";
import { ApiError, getSession, postAnswer } from "../src/api.js";

const realFetch = globalThis.fetch;

afterEach(() => {
  globalThis.fetch = realFetch;
});

function respond(status: number, body: string, contentType = "application/json") {
  globalThis.fetch = async () =>
    new Response(body, { status, headers: { "Content-Type": contentType } });
}

describe("api error handling", () => {
  it("maps a conflict document onto ApiError", async () => {
    respond(
      409,
      JSON.stringify({
        error: { code: "conflict", message: "answers must follow plan order", session_id: "s1" },
      }),
    );
    const err = await postAnswer("s1", "Q3", "A").catch((e) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect(err.isConflict).toBe(true);
    expect(err.code).toBe("conflict");
    expect(err.message).toBe("answers must follow plan order");
  });

  it("keeps a usable message when the error body is not JSON", async () => {
    respond(502, "bad gateway", "text/plain");
    const err = await getSession("s1").catch((e) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect(err.status).toBe(502);
    expect(err.message).toContain("/sessions/s1");
  });

  it("passes successful payloads through untouched", async () => {
    respond(200, JSON.stringify({ session_id: "s1", phase: "done" }));
    const view = await getSession("s1");
    expect(view.session_id).toBe("s1");
    expect(view.phase).toBe("done");
  });
});
