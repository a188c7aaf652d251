// Typed client for the gateway API. All dashboard traffic goes through here
// so tests can assert the SPA only ever touches documented endpoints.

export interface SensorNode {
  id: string;
  name?: string;
  children?: SensorNode[];
}

export interface HierarchyDoc {
  version: number;
  root: SensorNode;
}

export interface PowerRecord {
  type: string;
  identifier: string;
  timestamp: number;
  valueInW?: number;
  count?: number;
  sumInW?: number;
  averageInW?: number;
  minInW?: number;
  maxInW?: number;
}

export interface StatsSummary {
  count: number;
  sumInW: number;
  averageInW: number | null;
  minInW: number | null;
  maxInW: number | null;
}

export interface TrendResult {
  windowMs: number;
  ratio: number | null;
}

export interface HistogramBucket {
  lower: number;
  upper: number;
  count: number;
}

export interface DistributionEntry {
  childId: string;
  valueInW: number;
  share: number;
}

export class ApiError extends Error {
  constructor(
    public status: number,
    message: string,
    public violations: string[] = [],
  ) {
    super(message);
  }
}

async function request<T>(url: string, init?: RequestInit): Promise<T> {
  const response = await fetch(url, init);
  if (!response.ok) {
    let violations: string[] = [];
    let detail = `${response.status}`;
    try {
      const body = await response.json();
      violations = body.violations ?? [];
      detail = body.error ?? JSON.stringify(body);
    } catch {
      // non-JSON error body; status alone will do
    }
    throw new ApiError(response.status, detail, violations);
  }
  return (await response.json()) as T;
}

const enc = encodeURIComponent;

// sensor ids may contain slashes (pdu-1/outlet-3): encode per segment so the
// path keeps its structure but stays a single id for the backend
function idPath(id: string): string {
  return id.split("/").map(enc).join("/");
}

export class Api {
  constructor(private base: string = "") {}

  getHierarchy(): Promise<HierarchyDoc> {
    return request(`${this.base}/api/hierarchy`);
  }

  putHierarchy(root: SensorNode): Promise<{ version: number }> {
    return request(`${this.base}/api/hierarchy`, {
      method: "PUT",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ root }),
    });
  }

  getRange(id: string, fromMs: number, toMs: number): Promise<PowerRecord[]> {
    return request(`${this.base}/api/power/${idPath(id)}?from=${fromMs}&to=${toMs}`);
  }

  getStats(id: string, fromMs: number, toMs: number): Promise<StatsSummary> {
    return request(`${this.base}/api/power/${idPath(id)}/stats?from=${fromMs}&to=${toMs}`);
  }

  getTrend(id: string, windowMs: number): Promise<TrendResult> {
    return request(`${this.base}/api/power/${idPath(id)}/trend?windowMs=${windowMs}`);
  }

  getHistogram(
    id: string,
    fromMs: number,
    toMs: number,
    bins: number,
  ): Promise<HistogramBucket[]> {
    return request(
      `${this.base}/api/power/${idPath(id)}/histogram?from=${fromMs}&to=${toMs}&bins=${bins}`,
    );
  }

  getDistribution(id: string, at?: number): Promise<DistributionEntry[]> {
    const suffix = at === undefined ? "" : `?at=${at}`;
    return request(`${this.base}/api/power/${idPath(id)}/distribution${suffix}`);
  }

  getLatest(id: string): Promise<PowerRecord | null> {
    return request(`${this.base}/api/power/${idPath(id)}/latest`);
  }
}
