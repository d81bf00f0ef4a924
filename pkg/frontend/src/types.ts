/** Wire payloads of the annotation service, field for field. */

export interface PaperSummary {
  paper_id: string;
  title: string;
  n_figures: number;
  /** Number of distinct annotators with a recorded ranking. */
  annotation_status: number;
  /** Present only when the list was requested for a known annotator. */
  annotated_by_me?: boolean;
}

export interface SessionFigure {
  figure_id: string;
  caption: string;
  image_ref: string | null;
}

export interface PaperView {
  paper_id: string;
  title: string;
  abstract: string;
  /** Server-shuffled order; the client must never reorder before selection. */
  figures: SessionFigure[];
  session_seed: number;
  prior_ranking: string[] | null;
  required_ranking_size: number;
}

export interface SubmitResponse {
  status: string;
  offset: number;
}

export interface GoldRecord {
  paper_id: string;
  annotator_id: string;
  ranking: string[];
  ts: number;
}
