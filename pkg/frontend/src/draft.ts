/**
 * Draft state machine for one paragraph's labels.
 *
 * Invariants enforced here (before anything reaches the service):
 *   - checking NO06 clears every other frame and disables their checkboxes;
 *   - the main selector only offers checked frames;
 *   - submit is enabled exactly when the draft would pass validation.
 *
 * Drafts persist locally per para_id until the service acknowledges the
 * submission, so an interrupted session can resume where it left off.
 */

import { FRAME_CODES, NO_FRAME, frameIndex, type FrameCode } from "./types.js"
import { validateLabelSet } from "./validate.js"

export interface Draft {
  paraId: string
  frames: Set<FrameCode>
  main: FrameCode | null
}

export function emptyDraft(paraId: string): Draft {
  return { paraId, frames: new Set(), main: null }
}

/** Frames in canonical order, the serialization order the service uses. */
export function sortedFrames(draft: Draft): FrameCode[] {
  return [...draft.frames].sort((a, b) => frameIndex(a) - frameIndex(b))
}

export function isFrameDisabled(draft: Draft, code: FrameCode): boolean {
  return draft.frames.has(NO_FRAME) && code !== NO_FRAME
}

export function toggleFrame(draft: Draft, code: FrameCode): Draft {
  if (isFrameDisabled(draft, code)) {
    return draft
  }
  const frames = new Set(draft.frames)
  let main = draft.main
  if (frames.has(code)) {
    frames.delete(code)
    if (main === code) {
      main = null
    }
  } else if (code === NO_FRAME) {
    // exclusive: replaces whatever was checked; NO06 as main is forced, not
    // a coder's tie-break, so setting it here is safe
    frames.clear()
    frames.add(NO_FRAME)
    main = NO_FRAME
  } else {
    // the coder always picks the main frame explicitly
    frames.add(code)
  }
  return { paraId: draft.paraId, frames, main }
}

/** The main selector only offers checked frames; anything else is a no-op. */
export function setMain(draft: Draft, code: FrameCode): Draft {
  if (!draft.frames.has(code)) {
    return draft
  }
  return { ...draft, main: code }
}

export function mainOptions(draft: Draft): FrameCode[] {
  return sortedFrames(draft)
}

export function draftViolations(draft: Draft): string[] {
  if (draft.main === null) {
    return ["main frame not selected"]
  }
  return validateLabelSet(sortedFrames(draft), draft.main)
}

export function submitEnabled(draft: Draft): boolean {
  return draft.main !== null && draftViolations(draft).length === 0
}

export function toPayload(draft: Draft): { para_id: string; frames: FrameCode[]; main: FrameCode } {
  if (draft.main === null) {
    throw new Error("draft has no main frame")
  }
  return { para_id: draft.paraId, frames: sortedFrames(draft), main: draft.main }
}

// ---------------------------------------------------------------------------
// local persistence

export interface DraftStorage {
  getItem(key: string): string | null
  setItem(key: string, value: string): void
  removeItem(key: string): void
}

const draftKey = (paraId: string) => `newsframes.draft.${paraId}`

export function saveDraft(storage: DraftStorage, draft: Draft): void {
  storage.setItem(
    draftKey(draft.paraId),
    JSON.stringify({ frames: sortedFrames(draft), main: draft.main }),
  )
}

export function loadDraft(storage: DraftStorage, paraId: string): Draft {
  const raw = storage.getItem(draftKey(paraId))
  if (raw === null) {
    return emptyDraft(paraId)
  }
  try {
    const parsed = JSON.parse(raw) as { frames: FrameCode[]; main: FrameCode | null }
    const frames = new Set(parsed.frames.filter((c) => FRAME_CODES.includes(c)))
    const main = parsed.main !== null && frames.has(parsed.main) ? parsed.main : null
    return { paraId, frames, main }
  } catch {
    return emptyDraft(paraId)
  }
}

export function clearDraft(storage: DraftStorage, paraId: string): void {
  storage.removeItem(draftKey(paraId))
}
