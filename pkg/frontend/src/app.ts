/**
 * Entry point. Query parameters pick the screen:
 *   ?coder=alice                 labeling view for one coder
 *   ?coders=alice,bob            agreement dashboard for two coders
 * The service base URL defaults to the page origin (override with ?api=...).
 */

import { ApiClient } from "./api.js"
import { createAgreementDashboard } from "./agreement-dashboard.js"
import { createLabelingView } from "./labeling-view.js"

export async function mount(root: HTMLElement, search: string): Promise<void> {
  const params = new URLSearchParams(search)
  const base = params.get("api") ?? ""
  const client = new ApiClient(base)
  const coders = params.get("coders")
  if (coders !== null) {
    const [a, b] = coders.split(",").map((s) => s.trim())
    await createAgreementDashboard(root, client, a, b)
    return
  }
  const coder = params.get("coder") ?? "anonymous"
  await createLabelingView(root, client, coder)
}

declare const window: (Window & typeof globalThis) | undefined

if (typeof window !== "undefined" && typeof document !== "undefined") {
  const root = document.getElementById("app")
  if (root !== null) {
    void mount(root, window.location.search)
  }
}
