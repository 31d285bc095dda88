import type { Member, Proposal, Reading, Snapshot } from "../src/types.js";

export function mockReading(overrides: Partial<Reading> = {}): Reading {
  return {
    ts: 600,
    temperature_c: 22.5,
    humidity_pct: 55.0,
    lux: 120.0,
    gas_ppm: 450.0,
    occupancy: 3,
    power_w: 14.5,
    plugs: { fan: 6.0, bulb: 8.5, purifier: 0, humidifier: 0 },
    devices: {
      fan: { powered: true, level: 40 },
      bulb: { powered: true, level: 100 },
      purifier: { powered: false, level: 0 },
      humidifier: { powered: false, level: 0 },
    },
    ...overrides,
  };
}

export function mockMember(name: string, overrides: Partial<Member> = {}): Member {
  return {
    address: "0x" + name.padEnd(40, "0").slice(0, 40),
    name,
    eth_balance: "1000000000000000000",
    eth: 1,
    token_balance: "10000000000000000000000",
    tokens: 10_000,
    votes: "10000000000000000000000",
    votes_tokens: 10_000,
    ...overrides,
  };
}

export function mockProposal(overrides: Partial<Proposal> = {}): Proposal {
  return {
    id: "0x" + "ab".repeat(32),
    proposer: mockMember("member1").address,
    proposer_name: "member1",
    description: "Lower the minimum comfortable temperature to 17 C",
    state: "Active",
    snapshot_block: 4,
    deadline_block: 304,
    eta: null,
    tally: {
      against: "0", for: "30000000000000000000000", abstain: "0",
      against_tokens: 0, for_tokens: 30_000, abstain_tokens: 0,
    },
    actions: [{ contract: "thresholds", function: "set_min_temperature",
                args: [17], value_wei: "0" }],
    ...overrides,
  };
}

export function mockSnapshot(overrides: Partial<Snapshot> = {}): Snapshot {
  return {
    block_height: 12,
    timestamp: 144,
    tick: 2,
    proposals: [mockProposal()],
    thresholds: {
      min_temperature: 20, max_temperature: 27,
      min_co_level: 400, max_co_level: 1000,
      min_lux_level: 50, max_lux_level: 150,
      min_humidity: 40, max_humidity: 100,
    },
    latest_reading: mockReading(),
    treasury: {
      eth_balance: "10000000000000000", token_balance: "0",
      eth: 0.01, tokens: 0,
      governor_eth: "0", timelock_eth: "10000000000000000",
    },
    members: [mockMember("deployer", { tokens: 970_000, votes_tokens: 970_000 }),
              mockMember("member1"), mockMember("member2"),
              mockMember("member3")],
    fees_burned: "8249919000000000",
    ...overrides,
  };
}

type Responder = (path: string, init?: RequestInit) => unknown;

/** Install a fetch mock backed by per-path responders; returns the call log. */
export function installFetchMock(routes: Record<string, Responder>):
    { calls: { path: string; init?: RequestInit }[] } {
  const calls: { path: string; init?: RequestInit }[] = [];
  globalThis.fetch = (async (input: RequestInfo | URL, init?: RequestInit) => {
    const url = String(input);
    const path = url.replace(/^https?:\/\/[^/]+/, "");
    calls.push({ path, init });
    for (const [prefix, responder] of Object.entries(routes)) {
      if (path.split("?")[0] === prefix || path.startsWith(prefix)) {
        const body = responder(path, init);
        if (body instanceof Response) return body;
        return new Response(JSON.stringify(body), {
          status: 200, headers: { "content-type": "application/json" },
        });
      }
    }
    return new Response(JSON.stringify({ error: "not_found", reason: path }),
                        { status: 404 });
  }) as typeof fetch;
  return { calls };
}

export function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}

/** The 7-day fixture: 100 W fan load 22:00-06:00 with zero occupancy,
 * occupied low-power days. Ground truth: 56 idle hours, 5600 Wh. */
export function weekFixtureCsv(): string {
  const lines = ["ts,temperature,fan_speed,occupancy,energy"];
  for (let minute = 0; minute < 10_080; minute++) {
    const ts = minute * 60;
    const hourOfDay = (minute % 1440) / 60;
    const night = hourOfDay < 6 || hourOfDay >= 22;
    const occupied = hourOfDay >= 8 && hourOfDay < 18;
    const occupancy = occupied ? 5 : 0;
    const fanSpeed = night ? 100 : occupied ? 80 : 0;
    const energy = night ? 100 : occupied ? 30 : 0;
    const temperature = occupied ? 22.5 : 21.0;
    lines.push(`${ts},${temperature},${fanSpeed},${occupancy},${energy}`);
  }
  return lines.join("\n") + "\n";
}
