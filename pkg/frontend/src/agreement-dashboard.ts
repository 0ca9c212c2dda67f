/**
 * Agreement dashboard: kappa with observed/expected agreement, the
 * qualitative band, and a 6x6 coder-vs-coder grid of main-frame choices
 * (rows = first coder, columns = second coder; diagonal = agreement).
 */

import { ApiError, type AnnotationApi } from "./api.js"
import { FRAME_CODES } from "./types.js"

export async function createAgreementDashboard(
  root: HTMLElement,
  client: AnnotationApi,
  coderA: string,
  coderB: string,
): Promise<HTMLElement> {
  const doc = root.ownerDocument
  root.innerHTML = ""

  let response
  try {
    response = await client.agreement(coderA, coderB)
  } catch (error) {
    const empty = doc.createElement("div")
    empty.className = "empty-state"
    empty.textContent =
      error instanceof ApiError && error.status === 422
        ? `No shared paragraphs between ${coderA} and ${coderB} yet. ` +
          "Agreement can be computed once both coders have labeled the same items."
        : "Could not load the agreement report."
    root.appendChild(empty)
    return root
  }

  const stats = doc.createElement("dl")
  stats.className = "agreement-stats"
  const entries: Array<[string, string]> = [
    ["Cohen's kappa", response.kappa.toFixed(2)],
    ["Observed agreement", response.p_observed.toFixed(2)],
    ["Expected agreement", response.p_expected.toFixed(2)],
    ["Shared items", String(response.n_items)],
    ["Interpretation", response.band.replace("_", " ")],
  ]
  for (const [term, value] of entries) {
    const dt = doc.createElement("dt")
    dt.textContent = term
    const dd = doc.createElement("dd")
    dd.textContent = value
    stats.append(dt, dd)
  }
  root.appendChild(stats)

  const table = doc.createElement("table")
  table.className = "disagreement-grid"
  const head = doc.createElement("tr")
  head.appendChild(doc.createElement("th")).textContent = `${coderA} \\ ${coderB}`
  for (const code of FRAME_CODES) {
    const th = doc.createElement("th")
    th.textContent = code
    head.appendChild(th)
  }
  table.appendChild(head)
  response.grid.forEach((row, i) => {
    const tr = doc.createElement("tr")
    const th = doc.createElement("th")
    th.textContent = FRAME_CODES[i]
    tr.appendChild(th)
    row.forEach((count, j) => {
      const td = doc.createElement("td")
      td.textContent = String(count)
      if (i === j) td.className = "agree"
      else if (count > 0) td.className = "disagree"
      tr.appendChild(td)
    })
    table.appendChild(tr)
  })
  root.appendChild(table)
  return root
}
