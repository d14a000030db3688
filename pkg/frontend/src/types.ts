// Wire types for the monitoring bridge. These mirror the gateway's
// documented message schema and nothing else: the dashboard has no
// knowledge of the plant beyond what arrives on these messages.

export interface RegisterMeta {
  code: string;
  plc_label: string;
  description: string;
  protocol_address: number;
  unit: string;
  scale: number;
  signed: boolean;
  writable: boolean;
}

export interface LinkStats {
  frames_sent: number;
  frames_delivered: number;
  frames_dropped: number;
  frames_corrupted: number;
  bits_sent: number;
  bits_flipped: number;
}

export interface Snapshot {
  type: "snapshot";
  cycle: number;
  engineering: Record<string, number>;
  alarms: string[];
  status: "RUNNING" | "SHUTDOWN";
  staleness_ms: number;
  poll_failures_since_update: number;
  link_stats: LinkStats;
}

export interface Ack {
  type: "ack";
}

export interface CommandError {
  type: "error";
  message: string;
}

export type ServerMessage = Snapshot | Ack | CommandError;

export type Command =
  | { type: "key"; fault: string; pressed: boolean }
  | { type: "pot"; target: string; value: number }
  | { type: "preset"; name: string }
  | { type: "clear_faults" };

// The six bench fault keys. The register map carries labels and units for
// the measurement rows but not the key legend, so this is the one list the
// dashboard owns; active/inactive state still comes only from snapshots.
export const FAULT_KEYS = [
  "emergency",
  "safety_thermostat",
  "motor_overload",
  "react_sensor",
  "post_heater",
  "diff_pressure",
] as const;
