/**
 * Client-side label-set validation.
 *
 * Strict replica of the service's rules, including the exact rule names and
 * the order violations are reported in. A draft the client accepts must
 * never be rejected by the service (and vice versa); the shared fixture
 * suite in ../fixtures/label-drafts.json pins both sides to the same cases.
 */

import { NO_FRAME, type FrameCode } from "./types.js"

export const RULE_FRAMES_NONEMPTY = "frames must not be empty"
export const RULE_MAIN_IN_FRAMES = "main not in frames"
export const RULE_NO06_EXCLUSIVE = "NO06 must be exclusive"

export function validateLabelSet(frames: FrameCode[], main: FrameCode): string[] {
  const unique = new Set(frames)
  const violations: string[] = []
  if (unique.size === 0) {
    violations.push(RULE_FRAMES_NONEMPTY)
  }
  if (unique.size > 0 && !unique.has(main)) {
    violations.push(RULE_MAIN_IN_FRAMES)
  }
  if (unique.has(NO_FRAME) && unique.size > 1) {
    violations.push(RULE_NO06_EXCLUSIVE)
  }
  return violations
}
