/** Wire types mirroring the service's JSON responses. */

export interface Tally {
  against: string;
  for: string;
  abstain: string;
  against_tokens: number;
  for_tokens: number;
  abstain_tokens: number;
}

export interface ProposalAction {
  contract: string;
  function: string;
  args: unknown[];
  value_wei: string;
}

export interface Proposal {
  id: string;
  proposer: string;
  proposer_name: string;
  description: string;
  state: string;
  snapshot_block: number;
  deadline_block: number;
  eta: number | null;
  tally: Tally;
  actions: ProposalAction[];
}

export interface DeviceState {
  powered: boolean;
  level: number;
}

export interface Reading {
  ts: number;
  temperature_c: number;
  humidity_pct: number;
  lux: number;
  gas_ppm: number;
  occupancy: number;
  power_w: number;
  plugs: Record<string, number>;
  devices?: Record<string, DeviceState>;
}

export type Thresholds = Record<string, number>;

export interface Treasury {
  eth_balance: string;
  token_balance: string;
  eth: number;
  tokens: number;
  governor_eth: string;
  timelock_eth: string;
}

export interface Member {
  address: string;
  name: string;
  eth_balance: string;
  eth: number;
  token_balance: string;
  tokens: number;
  votes: string;
  votes_tokens: number;
}

export interface Snapshot {
  block_height: number;
  timestamp: number;
  tick: number;
  proposals: Proposal[];
  thresholds: Thresholds;
  latest_reading: Reading;
  treasury: Treasury;
  members: Member[];
  fees_burned: string;
}

export interface Account {
  name: string;
  address: string;
  eth: number;
  tokens: number;
  votes_tokens: number;
  is_member: boolean;
}

export interface Recommendation {
  kind: string;
  device: string;
  window: [number, number];
  estimated_savings_wh: number;
  rationale: string;
}

export interface IdleWindow {
  start_ts: number;
  end_ts: number;
  duration_s: number;
  mean_power_w: number;
  mean_occupancy: number;
}

export interface AnalyticsRecommendations {
  recommendations: Recommendation[];
  idle_windows: IdleWindow[];
  narrative: string;
}

export interface ChannelSummary {
  channel: string;
  count: number;
  min: number;
  max: number;
  mean: number;
  std: number;
  hour_means: (number | null)[];
}

export interface PlotSeries {
  name: string;
  unit: string;
  points: [number, number][];
}

export interface PlotSpec {
  title: string;
  x_axis: string;
  series: PlotSeries[];
  annotations: IdleWindow[];
}

export interface HistoryResponse {
  count: number;
  readings: Reading[];
}
