/**
 * Typed client for the govtwin HTTP service.
 *
 * Identity is per-request: every mutating call carries the selected actor in
 * the X-Actor header and nothing else changes when the actor switches. The
 * client performs no computation on service values; it hands them through.
 */

import type {
  Account,
  AnalyticsRecommendations,
  ChannelSummary,
  HistoryResponse,
  Member,
  PlotSpec,
  Proposal,
  Snapshot,
  Thresholds,
  Treasury,
} from "./types.js";

export class ApiError extends Error {
  readonly kind: string;

  constructor(kind: string, reason: string) {
    super(reason);
    this.kind = kind;
  }
}

export interface ProposalActionInput {
  contract: string;
  function: string;
  args: unknown[];
  value_wei?: string;
}

export class ApiClient {
  actor: string | null = null;

  constructor(readonly base: string = "") {}

  private async request<T>(method: string, path: string, body?: unknown,
                           raw?: string): Promise<T> {
    const headers: Record<string, string> = {};
    if (this.actor) headers["X-Actor"] = this.actor;
    let payload: string | undefined;
    if (raw !== undefined) {
      headers["Content-Type"] = "text/csv";
      payload = raw;
    } else if (body !== undefined) {
      headers["Content-Type"] = "application/json";
      payload = JSON.stringify(body);
    }
    const response = await fetch(this.base + path, { method, headers, body: payload });
    const text = await response.text();
    const data = text ? JSON.parse(text) : {};
    if (!response.ok) {
      const detail = data.detail ?? data;
      throw new ApiError(detail.error ?? "error",
                         detail.reason ?? response.statusText);
    }
    return data as T;
  }

  snapshot(): Promise<Snapshot> {
    return this.request("GET", "/snapshot");
  }

  accounts(): Promise<{ accounts: Account[] }> {
    return this.request("GET", "/accounts");
  }

  members(): Promise<{ members: Member[] }> {
    return this.request("GET", "/governance/members");
  }

  manageMember(action: "add" | "remove", member: string): Promise<unknown> {
    return this.request("POST", "/governance/members", { action, member });
  }

  proposals(): Promise<{ proposals: Proposal[] }> {
    return this.request("GET", "/governance/proposals");
  }

  propose(description: string, actions: ProposalActionInput[]):
      Promise<{ proposal_id: string }> {
    return this.request("POST", "/governance/proposals", { description, actions });
  }

  vote(proposalId: string, support: 0 | 1 | 2): Promise<{ weight: string }> {
    return this.request("POST", `/governance/proposals/${proposalId}/vote`,
                        { support });
  }

  queue(proposalId: string): Promise<{ eta: number }> {
    return this.request("POST", `/governance/proposals/${proposalId}/queue`);
  }

  execute(proposalId: string): Promise<{ status: string }> {
    return this.request("POST", `/governance/proposals/${proposalId}/execute`);
  }

  thresholds(): Promise<Thresholds> {
    return this.request("GET", "/thresholds");
  }

  treasury(): Promise<Treasury> {
    return this.request("GET", "/treasury");
  }

  treasuryTransfer(source: "governor" | "timelock", to: string,
                   wei: string): Promise<unknown> {
    return this.request("POST", "/treasury/transfer", { source, to, wei });
  }

  history(from: number, to: number): Promise<HistoryResponse> {
    return this.request("GET",
                        `/telemetry/history?from=${from}&to=${to}`);
  }

  advance(blocks: number, ticks: number): Promise<unknown> {
    return this.request("POST", `/advance?blocks=${blocks}&ticks=${ticks}`);
  }

  uploadCsv(text: string): Promise<{ rows: number; idle_windows: number }> {
    return this.request("POST", "/analytics/upload", undefined, text);
  }

  analyticsSummary(): Promise<{ summaries: ChannelSummary[] }> {
    return this.request("GET", "/analytics/summary");
  }

  analyticsRecommendations(): Promise<AnalyticsRecommendations> {
    return this.request("GET", "/analytics/recommendations");
  }

  analyticsPlot(channels: string[]): Promise<PlotSpec> {
    return this.request("GET", `/analytics/plots/${channels.join(",")}`);
  }
}
