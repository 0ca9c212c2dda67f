/** Thin client over the annotation service's HTTP JSON API. */

import type {
  AgreementResponse,
  ClassifyResult,
  FrameCode,
  FrameDefinition,
  NextResponse,
  SessionInfo,
  StoredAnnotation,
} from "./types.js"

export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
    readonly violations: string[] = [],
  ) {
    super(message)
  }
}

/** The service surface the views consume (ApiClient or a test fake). */
export interface AnnotationApi {
  codebook(): Promise<{ frames: FrameDefinition[] }>
  createSession(coderId: string): Promise<SessionInfo>
  next(sessionId: string): Promise<NextResponse>
  submitAnnotation(
    sessionId: string,
    payload: { para_id: string; frames: FrameCode[]; main: FrameCode },
  ): Promise<StoredAnnotation>
  agreement(coderA: string, coderB: string): Promise<AgreementResponse>
  progress(): Promise<{ coders: Record<string, number>; total_paragraphs: number }>
  classify(texts: string[]): Promise<{ results: ClassifyResult[] }>
}

async function parseError(response: Response): Promise<never> {
  let detail: unknown
  try {
    detail = (await response.json()).detail
  } catch {
    detail = response.statusText
  }
  if (typeof detail === "object" && detail !== null && "violations" in detail) {
    const violations = (detail as { violations: string[] }).violations
    throw new ApiError(response.status, violations.join("; "), violations)
  }
  throw new ApiError(response.status, String(detail))
}

export class ApiClient implements AnnotationApi {
  constructor(readonly baseUrl: string) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await fetch(`${this.baseUrl}${path}`, {
      headers: { "Content-Type": "application/json" },
      ...init,
    })
    if (!response.ok) {
      await parseError(response)
    }
    return (await response.json()) as T
  }

  codebook(): Promise<{ frames: FrameDefinition[] }> {
    return this.request("/api/codebook")
  }

  createSession(coderId: string): Promise<SessionInfo> {
    return this.request("/api/session", {
      method: "POST",
      body: JSON.stringify({ coder_id: coderId }),
    })
  }

  next(sessionId: string): Promise<NextResponse> {
    return this.request(`/api/session/${sessionId}/next`)
  }

  submitAnnotation(
    sessionId: string,
    payload: { para_id: string; frames: FrameCode[]; main: FrameCode },
  ): Promise<StoredAnnotation> {
    return this.request(`/api/session/${sessionId}/annotations`, {
      method: "POST",
      body: JSON.stringify(payload),
    })
  }

  agreement(coderA: string, coderB: string): Promise<AgreementResponse> {
    const coders = encodeURIComponent(`${coderA},${coderB}`)
    return this.request(`/api/agreement?coders=${coders}`)
  }

  progress(): Promise<{ coders: Record<string, number>; total_paragraphs: number }> {
    return this.request("/api/progress")
  }

  classify(texts: string[]): Promise<{ results: ClassifyResult[] }> {
    return this.request("/api/classify", {
      method: "POST",
      body: JSON.stringify({ texts }),
    })
  }
}
