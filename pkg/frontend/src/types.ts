// Mirrors the /api/v1 response documents field for field.

export type MergedState = Record<string, Record<string, string>>;

export interface EditRow {
  domain: string;
  slot: string;
  value: string | null; // null deletes the slot
}

export interface DbSummary {
  match_count: number;
  bookable: boolean;
  bucket_id: number;
}

export interface SessionCreated {
  session_id: string;
  protocol_note: string;
}

export interface UtteranceDoc {
  session_id: string;
  turn: number;
  levenshtein_state: EditRow[];
  merged_state: MergedState;
  db: DbSummary;
  response_delex: string[];
  response_lex: string[];
  warnings: number;
  protocol_note: string;
  error?: string;
}

// stored transcript entries carry the user tokens but not the turn counter
export type TranscriptTurn = Omit<UtteranceDoc, "turn"> & { user: string[] };

export interface TranscriptDoc {
  session_id: string;
  merged_state: MergedState;
  turns: TranscriptTurn[];
}

export interface SchemaDoc {
  schema: unknown;
  hash: string;
}
