// Shared contracts: the service's JSON shapes and the UI's own state types.

export interface CitationRef {
  doc_name: string;
  chunk_id: number;
}

export interface SearchHit {
  doc_name: string;
  chunk_id: number;
  final_score: number;
  fused_score: number;
  lexical_rank: number | null;
  vector_rank: number | null;
  text: string;
}

export interface ChatResponse {
  answer: string;
  citations: CitationRef[];
  dangling: CitationRef[];
  hits: SearchHit[];
  language: string;
  timings_ms: Record<string, number>;
}

export interface ChunkResponse {
  text: string;
  boost_weight: number;
  source_kind: string;
}

export interface HealthResponse {
  status: string;
  chunks: number;
  config_preset: string;
}

export interface ChatRequestBody {
  question: string;
  mode: SearchMode;
  top_k: number;
  boosting: boolean;
}

export type SearchMode = "text" | "vector" | "hybrid";

export interface UiSettings {
  mode: SearchMode;
  topK: 5 | 10 | 20;
  boosting: boolean;
  baseUrl: string;
}

export interface CitationChip {
  docName: string;
  chunkId: number;
  dangling: boolean;
}

export interface UiMessage {
  role: "user" | "assistant";
  text: string;
  chips: CitationChip[];
  timings: Record<string, number>;
  hitPreview: Array<{ docName: string; chunkId: number; score: number }>;
  settingsNote: string;
}

export class ApiError extends Error {
  constructor(
    readonly code: string,
    message: string,
    readonly status: number,
  ) {
    super(message);
  }
}
