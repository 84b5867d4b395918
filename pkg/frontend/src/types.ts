// Wire types for the session API. These mirror the serialized domain types
// the service returns; the client never computes engine state itself.

export type Phase = "clarifying" | "finalizing" | "done";

export type AmbiguityStatus = "open" | "resolved" | "eliminated";

export interface Illustration {
  input: string;
  output: string;
}

export interface Option {
  id: string;
  text: string;
  resolves_to: string;
  illustration: Illustration | null;
}

export interface Question {
  id: string;
  targets: string;
  text: string;
  options: Option[];
  guard: [string, string][];
  allows_free_text: boolean;
}

export interface Ambiguity {
  id: string;
  label: string;
  description: string;
  status: AmbiguityStatus;
  resolution: string | null;
  depends_on: [string, string][];
}

export interface TranscriptEntry {
  question_id: string;
  option_id: string;
  free_text: string | null;
  answered_at: string;
}

export interface SolutionExample {
  kind: "selected" | "not_selected" | "edge";
  input_description: string;
  expected_behavior: string;
}

export interface Solution {
  session_id: string;
  disambiguated_prompt: string;
  artifact: string;
  artifact_kind: string;
  examples: SolutionExample[];
}

export interface SessionView {
  session_id: string;
  phase: Phase;
  prompt: { id: string; text: string; domain: string; context: string | null };
  ambiguities: Ambiguity[];
  open_count: number;
  progress: { closed: number; total: number };
  plan_size: number;
  transcript: TranscriptEntry[];
  next: Question | null;
  solution: Solution | null;
  revision_used: boolean;
}

export interface CreateResponse {
  session_id: string;
  detection: unknown;
  view: SessionView;
}

export interface AnswerResponse {
  statuses: Record<string, AmbiguityStatus>;
  open_count: number;
  phase: Phase;
  next: Question | null;
  view: SessionView;
}

export interface NextResponse {
  done: boolean;
  phase: Phase;
  question: Question | null;
}

export interface FinalizeResponse {
  solution: Solution;
  phase: Phase;
  revision_used: boolean;
}

export interface ApiErrorDoc {
  error: { code: string; message: string; session_id: string | null };
}
