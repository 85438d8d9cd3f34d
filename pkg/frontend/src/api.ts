import type {
  AssertionWire,
  AttestationWire,
  ChallengeView,
  CredentialView,
  PendingRequest,
  SessionView,
  StatusView,
  StepName,
  StepResultView,
  UserView,
} from "./types.js";

export class TransportError extends Error {}

export class ApiError extends Error {
  constructor(
    readonly code: string,
    message: string,
    readonly status: number,
  ) {
    super(`${code}: ${message}`);
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

/** Typed client for the documented endpoints; nothing else is called. */
export class ApiClient {
  private readonly fetchFn: FetchLike;

  constructor(
    readonly baseUrl: string,
    fetchFn?: FetchLike,
  ) {
    // wrap so the global fetch keeps its expected `this` in browsers
    this.fetchFn = fetchFn ?? ((input, init) => fetch(input, init));
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    let response: Response;
    try {
      response = await this.fetchFn(`${this.baseUrl}${path}`, {
        method,
        headers: body === undefined ? undefined : { "Content-Type": "application/json" },
        body: body === undefined ? undefined : JSON.stringify(body),
      });
    } catch (error) {
      throw new TransportError(`server unreachable at ${this.baseUrl}: ${error}`);
    }
    let payload: unknown = null;
    try {
      payload = await response.json();
    } catch {
      payload = null;
    }
    if (!response.ok) {
      const record = (payload ?? {}) as { error?: string; message?: string; detail?: string };
      throw new ApiError(
        record.error ?? `Http${response.status}`,
        record.message ?? record.detail ?? response.statusText,
        response.status,
      );
    }
    return payload as T;
  }

  healthz(): Promise<{ status: string; rp_id: string }> {
    return this.request("GET", "/healthz");
  }

  registerUser(email: string, displayName: string, userId?: string): Promise<UserView> {
    return this.request("POST", "/users", {
      email,
      display_name: displayName,
      user_id: userId ?? null,
    });
  }

  enrollFace(userId: string, vector: number[]): Promise<{ user_id: string; face_enrolled: boolean }> {
    return this.request("POST", "/enroll-face", { user_id: userId, vector });
  }

  beginRegistration(userId: string): Promise<ChallengeView> {
    return this.request("POST", "/begin-registration", { user_id: userId });
  }

  finishRegistration(challengeNonce: string, attestation: AttestationWire): Promise<CredentialView> {
    return this.request("POST", "/finish-registration", {
      challenge_nonce: challengeNonce,
      attestation,
    });
  }

  beginAuthentication(userId: string): Promise<ChallengeView> {
    return this.request("POST", "/begin-authentication", { user_id: userId });
  }

  requestLogin(userId: string, serviceProvider: string, origin: string): Promise<SessionView> {
    return this.request("POST", "/request-login", {
      user_id: userId,
      service_provider: serviceProvider,
      origin_device_descriptor: origin,
    });
  }

  async feed(userId: string): Promise<PendingRequest[]> {
    const body = await this.request<{ requests: PendingRequest[] }>("GET", `/feed/${userId}`);
    return body.requests;
  }

  advanceAssertion(
    sessionId: string,
    step: StepName,
    challengeNonce: string,
    assertion: AssertionWire,
    deviceAcknowledged: boolean,
  ): Promise<StepResultView> {
    return this.request("POST", "/advance", {
      session_id: sessionId,
      step,
      challenge_nonce: challengeNonce,
      assertion,
      device_acknowledged: deviceAcknowledged,
    });
  }

  advanceFace(
    sessionId: string,
    probeVector: number[],
    probeFeatures: number[],
  ): Promise<StepResultView> {
    return this.request("POST", "/advance", {
      session_id: sessionId,
      step: "face",
      probe_vector: probeVector,
      probe_features: probeFeatures,
    });
  }

  deny(sessionId: string): Promise<SessionView> {
    return this.request("POST", "/deny", { session_id: sessionId });
  }

  status(sessionId: string): Promise<StatusView> {
    return this.request("GET", `/status/${sessionId}`);
  }

  introspect(token: string): Promise<{ active: boolean; user_id?: string; expires_at_ms?: number }> {
    return this.request("POST", "/session-introspect", { token });
  }
}
