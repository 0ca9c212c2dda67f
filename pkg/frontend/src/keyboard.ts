/**
 * Keyboard path for every labeling action:
 *   1-6            toggle the corresponding frame checkbox
 *   Shift + 1-6    set the corresponding frame as the main frame
 *   Enter          submit the current draft
 *
 * Digits are matched on `event.code` (Digit1/Numpad1), so Shift+digit works
 * regardless of what character the layout produces.
 */

import { FRAME_CODES, type FrameCode } from "./types.js"

export type KeyAction =
  | { type: "toggle"; frame: FrameCode }
  | { type: "set-main"; frame: FrameCode }
  | { type: "submit" }

export interface KeyInput {
  key: string
  code: string
  shiftKey: boolean
}

const DIGIT_PATTERN = /^(?:Digit|Numpad)([1-6])$/

export function actionForKey(input: KeyInput): KeyAction | null {
  if (input.key === "Enter") {
    return { type: "submit" }
  }
  const match = DIGIT_PATTERN.exec(input.code)
  if (match) {
    const frame = FRAME_CODES[Number(match[1]) - 1]
    return input.shiftKey ? { type: "set-main", frame } : { type: "toggle", frame }
  }
  return null
}

/** Human-readable shortcut legend, shown next to the frame list. */
export function shortcutLegend(): string[] {
  return [
    ...FRAME_CODES.map((code, i) => `${i + 1}: toggle ${code}, Shift+${i + 1}: main ${code}`),
    "Enter: submit",
  ]
}
