/** Shared types for the labeling frontend. */

export const FRAME_CODES = ["AR01", "HI02", "CF03", "MF04", "EF05", "NO06"] as const

export type FrameCode = (typeof FRAME_CODES)[number]

export const NO_FRAME: FrameCode = "NO06"

export function frameIndex(code: FrameCode): number {
  return FRAME_CODES.indexOf(code)
}

export interface FrameDefinition {
  code: FrameCode
  name: string
  guiding_questions: string[]
}

export interface Paragraph {
  para_id: string
  doc_id: string
  ordinal: number
  text: string
}

export interface NextResponse {
  done: boolean
  position: number
  total: number
  paragraph?: Paragraph
}

export interface SessionInfo {
  session_id: string
  coder_id: string
  queue_size: number
  cursor: number
}

export interface StoredAnnotation {
  para_id: string
  coder: string
  frames: FrameCode[]
  main: FrameCode
  ts: string
}

export interface AgreementResponse {
  kappa: number
  p_observed: number
  p_expected: number
  n_items: number
  band: string
  coders: [string, string]
  grid: number[][]
}

export interface ClassifyResult {
  scores: Record<FrameCode, number>
  main: FrameCode
}
