// Shapes returned by the audit service endpoints. Field names follow the
// wire format exactly; nothing is renamed client-side.

export type Status = "pending" | "approved" | "rejected";

export interface TaskSummary {
  id: string;
  bucket: string;
  score: number;
  status: Status;
  n_instances: number;
}

export interface InstanceView {
  name: string;
  caption: string;
  bbox: [number, number, number, number];
}

export interface RelationshipView {
  subject: string;
  object: string;
  phrase: string;
}

export interface RecordView {
  id: string;
  caption: string;
  width: number;
  height: number;
  instances: InstanceView[];
  relationships: RelationshipView[];
  split?: string;
}

export interface TaskDetail extends TaskSummary {
  image_ref: string;
  // Every configured check appears as a key; null means not yet answered.
  verdicts: Record<string, boolean | null>;
  record: RecordView;
}

export interface TaskPage {
  tasks: TaskSummary[];
  next_cursor: string | null;
  checks: string[];
}

export interface VerdictEventView {
  seq: number;
  record_id: string;
  check: string;
  verdict: boolean;
  auditor: string;
  timestamp: number;
  idempotency_key: string | null;
}

export interface VerdictAck {
  event: VerdictEventView;
  task: TaskDetail;
}
