/**
 * A fetch stand-in backed by a route table.  Records every request so tests
 * can assert on method, URL and body without a network.
 */

export interface RecordedRequest {
  url: string;
  method: string;
  body: unknown;
}

export type RouteResult =
  | { status?: number; json: unknown }
  | { status: number; text: string };

export interface FetchMock {
  fetch: (url: string, init?: RequestInit) => Promise<Response>;
  requests: RecordedRequest[];
}

export function makeFetch(routes: Record<string, RouteResult | (() => RouteResult)>): FetchMock {
  const requests: RecordedRequest[] = [];
  const fetchFn = async (url: string, init?: RequestInit): Promise<Response> => {
    const method = init?.method ?? "GET";
    const body = typeof init?.body === "string" ? JSON.parse(init.body) : undefined;
    requests.push({ url, method, body });
    const path = new URL(url).pathname + new URL(url).search;
    const hit = routes[path] ?? routes[new URL(url).pathname];
    if (!hit) {
      return new Response("not found", { status: 404 });
    }
    const result = typeof hit === "function" ? hit() : hit;
    if ("json" in result) {
      return new Response(JSON.stringify(result.json), {
        status: result.status ?? 200,
        headers: { "Content-Type": "application/json" },
      });
    }
    return new Response(result.text, { status: result.status });
  };
  return { fetch: fetchFn, requests };
}

/** A fetch that never connects, as if the service were down. */
export function unreachableFetch(): FetchMock {
  const requests: RecordedRequest[] = [];
  return {
    fetch: async (url: string, init?: RequestInit) => {
      requests.push({ url, method: init?.method ?? "GET", body: undefined });
      throw new TypeError("fetch failed");
    },
    requests,
  };
}
