import { describe, expect, it } from "vitest";

import { ApiError, Client } from "../src/api.js";

function jsonResponse(status: number, body: unknown): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "content-type": "application/json" },
  });
}

describe("Client", () => {
  it("posts session parameters and returns the payload untouched", async () => {
    const calls: Array<{ input: string; init?: RequestInit }> = [];
    const payload = { session_id: "s1", n: 4, m: 2, model_names: ["a", "b"], mode: "replay", budget: 3 };
    const client = new Client("", async (input, init) => {
      calls.push({ input, init });
      return jsonResponse(201, payload);
    });
    const info = await client.createSession({ bundle: "demo", tau: 1, budget: 3, mode: "replay" });
    expect(info).toEqual(payload);
    expect(calls[0].input).toBe("/sessions");
    expect(calls[0].init?.method).toBe("POST");
    expect(JSON.parse(String(calls[0].init?.body)).bundle).toBe("demo");
  });

  it("surfaces service error bodies verbatim", async () => {
    const client = new Client("", async () =>
      jsonResponse(409, { error: "budget of 3 annotations reached", code: "budget_exhausted" }));
    try {
      await client.nextQuery("sid");
      expect.unreachable();
    } catch (err) {
      const apiErr = err as ApiError;
      expect(apiErr).toBeInstanceOf(ApiError);
      expect(apiErr.status).toBe(409);
      expect(apiErr.code).toBe("budget_exhausted");
      expect(apiErr.message).toBe("budget of 3 annotations reached");
    }
  });

  it("maps network failures to a connection error", async () => {
    const client = new Client("", async () => {
      throw new TypeError("fetch failed");
    });
    await expect(client.report("sid")).rejects.toMatchObject({ status: 0, code: "connection" });
  });

  it("hits the documented endpoint paths", async () => {
    const seen: string[] = [];
    const client = new Client("http://host", async (input, init) => {
      seen.push(`${init?.method ?? "GET"} ${input}`);
      return jsonResponse(200, {});
    });
    await client.nextQuery("abc");
    await client.annotate("abc", { query_id: 1, accept_replay: true });
    await client.report("abc");
    await client.deleteSession("abc");
    expect(seen).toEqual([
      "GET http://host/sessions/abc/next",
      "POST http://host/sessions/abc/annotate",
      "GET http://host/sessions/abc/report",
      "DELETE http://host/sessions/abc",
    ]);
  });
});
