// jsdom has no canvas 2D context: record draw calls into a stub instead.

import { vi } from "vitest";

export function stubCanvas(): { calls: string[] } {
  const calls: string[] = [];
  const ctx = new Proxy(
    { measureText: (s: string) => ({ width: s.length * 6 }) },
    {
      get(target, prop: string) {
        if (prop in target) return (target as Record<string, unknown>)[prop];
        if (prop === "canvas") return undefined;
        return (...args: unknown[]) => {
          calls.push(`${prop}(${args.map(String).join(",")})`);
        };
      },
      set() {
        return true; // style properties
      },
    },
  );
  vi.spyOn(HTMLCanvasElement.prototype, "getContext").mockReturnValue(
    ctx as unknown as CanvasRenderingContext2D,
  );
  return { calls };
}

type Handler = (url: string, init?: RequestInit) => unknown;

// Mocked gateway: route fetches by URL prefix, recording every request.
export function stubGateway(routes: Record<string, Handler>) {
  const requests: { url: string; init?: RequestInit }[] = [];
  const fn = vi.fn(async (url: string, init?: RequestInit) => {
    requests.push({ url, init });
    for (const [prefix, handler] of Object.entries(routes)) {
      if (url.includes(prefix)) {
        const body = handler(url, init);
        if (body instanceof Response) return body;
        const status = (body as { __status?: number }).__status ?? 200;
        return {
          ok: status < 300,
          status,
          json: async () => body,
        };
      }
    }
    throw new Error(`unmocked url ${url}`);
  });
  vi.stubGlobal("fetch", fn);
  return { requests, fn };
}

export function queryParams(url: string): Record<string, string> {
  const out: Record<string, string> = {};
  for (const [k, v] of new URL(url, "http://test").searchParams) out[k] = v;
  return out;
}
