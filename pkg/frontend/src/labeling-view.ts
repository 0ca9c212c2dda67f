/**
 * Labeling screen: current paragraph, the six frames with their guiding
 * questions, main-frame selection, progress, and submit. The service is the
 * source of truth; the view optimistically keeps a local draft per paragraph
 * until the service acknowledges the submission.
 */

import { ApiError, type AnnotationApi } from "./api.js"
import {
  clearDraft,
  draftViolations,
  emptyDraft,
  isFrameDisabled,
  loadDraft,
  mainOptions,
  saveDraft,
  setMain,
  submitEnabled,
  toggleFrame,
  toPayload,
  type Draft,
  type DraftStorage,
} from "./draft.js"
import { actionForKey, shortcutLegend, type KeyInput } from "./keyboard.js"
import type { FrameCode, FrameDefinition, Paragraph } from "./types.js"

class MemoryStorage implements DraftStorage {
  private data = new Map<string, string>()
  getItem(key: string): string | null {
    return this.data.get(key) ?? null
  }
  setItem(key: string, value: string): void {
    this.data.set(key, value)
  }
  removeItem(key: string): void {
    this.data.delete(key)
  }
}

function pickStorage(): DraftStorage {
  try {
    if (typeof localStorage !== "undefined") {
      return localStorage
    }
  } catch {
    // storage access can throw in privacy modes; fall through
  }
  return new MemoryStorage()
}

export interface LabelingView {
  /** Current draft (for tests and debugging). */
  draft(): Draft
  /** Apply one keyboard input (also wired to real keydown events). */
  handleKey(input: KeyInput): Promise<void>
  toggle(code: FrameCode): void
  selectMain(code: FrameCode): void
  submit(): Promise<void>
  current(): Paragraph | null
  isDone(): boolean
  root: HTMLElement
}

export async function createLabelingView(
  root: HTMLElement,
  client: AnnotationApi,
  coderId: string,
  storage: DraftStorage = pickStorage(),
): Promise<LabelingView> {
  const doc = root.ownerDocument
  const { frames: definitions } = await client.codebook()
  const session = await client.createSession(coderId)

  let paragraph: Paragraph | null = null
  let draft: Draft = emptyDraft("")
  let done = false
  let position = 0
  let total = session.queue_size

  root.innerHTML = ""
  const progressEl = doc.createElement("div")
  progressEl.className = "progress"
  const textEl = doc.createElement("blockquote")
  textEl.className = "paragraph"
  const framesEl = doc.createElement("div")
  framesEl.className = "frames"
  const mainEl = doc.createElement("div")
  mainEl.className = "main-select"
  const errorEl = doc.createElement("div")
  errorEl.className = "error"
  const submitEl = doc.createElement("button")
  submitEl.className = "submit"
  submitEl.textContent = "Submit annotation"
  const legendEl = doc.createElement("ul")
  legendEl.className = "shortcuts"
  for (const line of shortcutLegend()) {
    const item = doc.createElement("li")
    item.textContent = line
    legendEl.appendChild(item)
  }
  root.append(progressEl, textEl, framesEl, mainEl, errorEl, submitEl, legendEl)

  function renderFrames() {
    framesEl.innerHTML = ""
    for (const definition of definitions) {
      framesEl.appendChild(frameRow(definition))
    }
    mainEl.innerHTML = ""
    const caption = doc.createElement("span")
    caption.textContent = "Main frame: "
    mainEl.appendChild(caption)
    for (const code of mainOptions(draft)) {
      const label = doc.createElement("label")
      const radio = doc.createElement("input")
      radio.type = "radio"
      radio.name = "main-frame"
      radio.value = code
      radio.checked = draft.main === code
      radio.addEventListener("change", () => {
        view.selectMain(code)
      })
      label.append(radio, doc.createTextNode(code))
      mainEl.appendChild(label)
    }
    submitEl.disabled = !submitEnabled(draft)
    progressEl.textContent = done
      ? `All ${total} paragraphs labeled`
      : `Paragraph ${position + 1} of ${total}`
  }

  function frameRow(definition: FrameDefinition): HTMLElement {
    const row = doc.createElement("div")
    row.className = "frame-row"
    const label = doc.createElement("label")
    const checkbox = doc.createElement("input")
    checkbox.type = "checkbox"
    checkbox.value = definition.code
    checkbox.checked = draft.frames.has(definition.code)
    checkbox.disabled = done || isFrameDisabled(draft, definition.code)
    checkbox.addEventListener("change", () => {
      view.toggle(definition.code)
    })
    label.append(checkbox, doc.createTextNode(` ${definition.name} (${definition.code})`))
    row.appendChild(label)
    // the guiding questions stay visible: they are the coder's instrument
    const questions = doc.createElement("ul")
    questions.className = "questions"
    for (const question of definition.guiding_questions) {
      const item = doc.createElement("li")
      item.textContent = question
      questions.appendChild(item)
    }
    row.appendChild(questions)
    return row
  }

  async function loadNext() {
    const response = await client.next(session.session_id)
    position = response.position
    total = response.total
    if (response.done || !response.paragraph) {
      done = true
      paragraph = null
      textEl.textContent = "Queue exhausted. Thank you!"
      renderFrames()
      return
    }
    paragraph = response.paragraph
    draft = loadDraft(storage, paragraph.para_id)
    textEl.textContent = paragraph.text
    errorEl.textContent = ""
    renderFrames()
  }

  const view: LabelingView = {
    root,
    draft: () => draft,
    current: () => paragraph,
    isDone: () => done,

    toggle(code) {
      if (done) return
      draft = toggleFrame(draft, code)
      saveDraft(storage, draft)
      renderFrames()
    },

    selectMain(code) {
      if (done) return
      draft = setMain(draft, code)
      saveDraft(storage, draft)
      renderFrames()
    },

    async submit() {
      if (done || paragraph === null || !submitEnabled(draft)) {
        errorEl.textContent = draftViolations(draft).join("; ")
        return
      }
      try {
        await client.submitAnnotation(session.session_id, toPayload(draft))
      } catch (error) {
        if (error instanceof ApiError) {
          // 422 carries the violated rule names; surface them inline
          errorEl.textContent = error.violations.join("; ") || error.message
        } else {
          // network failure: the draft stays in local storage
          errorEl.textContent = "Connection lost; your draft is saved locally."
        }
        return
      }
      clearDraft(storage, draft.paraId)
      await loadNext()
    },

    async handleKey(input) {
      const action = actionForKey(input)
      if (action === null) return
      if (action.type === "toggle") {
        view.toggle(action.frame)
      } else if (action.type === "set-main") {
        view.selectMain(action.frame)
      } else {
        await view.submit()
      }
    },
  }

  doc.addEventListener("keydown", (event: KeyboardEvent) => {
    void view.handleKey({ key: event.key, code: event.code, shiftKey: event.shiftKey })
  })

  await loadNext()
  return view
}
