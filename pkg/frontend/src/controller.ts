/** Approval logic shared by the UI and the tests.
 *
 * Step enablement always derives from the server's session state, so the
 * checklist mirrors the server state machine after every poll; the UI never
 * decides ordering on its own.
 */

import type { AssertionWire, ChallengeView, PendingRequest, StatusView, StepName, StepResultView, SessionView } from "./types.js";
import { LIVE_FEATURES, SPOOF_FEATURES, type DemoIdentity } from "./fixtures.js";
import { STEP_ORDER } from "./types.js";

/** The one step the server will accept next, or null in a terminal state. */
export function nextExpectedStep(state: string): StepName | null {
  switch (state) {
    case "pending":
      return "device_attestation";
    case "device_attested":
      return "security_key";
    case "key_verified":
      return "face";
    default:
      return null;
  }
}

export function completedSteps(state: string): StepName[] {
  const next = nextExpectedStep(state);
  if (state === "complete" || state === "face_verified") {
    return [...STEP_ORDER];
  }
  if (next === null) {
    return [];
  }
  return STEP_ORDER.slice(0, STEP_ORDER.indexOf(next));
}

export interface SubmitOptions {
  acknowledged?: boolean;
  spoof?: boolean;
}

/** The subset of ApiClient the controller needs (structural, test-fakeable). */
export interface ConsoleApi {
  feed(userId: string): Promise<PendingRequest[]>;
  status(sessionId: string): Promise<StatusView>;
  beginAuthentication(userId: string): Promise<ChallengeView>;
  advanceAssertion(
    sessionId: string,
    step: StepName,
    challengeNonce: string,
    assertion: AssertionWire,
    deviceAcknowledged: boolean,
  ): Promise<StepResultView>;
  advanceFace(
    sessionId: string,
    probeVector: number[],
    probeFeatures: number[],
  ): Promise<StepResultView>;
  deny(sessionId: string): Promise<SessionView>;
}

export class ApprovalController {
  constructor(
    private readonly api: ConsoleApi,
    readonly identity: DemoIdentity,
  ) {}

  fetchPending(): Promise<PendingRequest[]> {
    return this.api.feed(this.identity.userId);
  }

  status(sessionId: string): Promise<StatusView> {
    return this.api.status(sessionId);
  }

  /** Submit one named step. Out-of-order submissions surface the server's
   * OutOfOrder error; the UI normally disables them instead. */
  async submitStep(
    sessionId: string,
    step: StepName,
    options: SubmitOptions = {},
  ): Promise<StepResultView> {
    if (step === "face") {
      return this.api.advanceFace(
        sessionId,
        this.identity.faceVector,
        options.spoof ? SPOOF_FEATURES : LIVE_FEATURES,
      );
    }
    const device = step === "device_attestation" ? this.identity.phone : this.identity.key;
    const credentialId =
      step === "device_attestation"
        ? this.identity.phoneCredentialId
        : this.identity.keyCredentialId;
    const challenge = await this.api.beginAuthentication(this.identity.userId);
    const assertion = await device.getAssertion(challenge, challenge.rp_id, credentialId);
    return this.api.advanceAssertion(
      sessionId,
      step,
      challenge.nonce,
      assertion,
      options.acknowledged ?? false,
    );
  }

  /** Approve whatever the server expects next. */
  async approveNext(sessionId: string, options: SubmitOptions = {}): Promise<StepResultView> {
    const status = await this.api.status(sessionId);
    const step = nextExpectedStep(status.state);
    if (step === null) {
      throw new Error(`session ${sessionId} is ${status.state}; nothing to approve`);
    }
    return this.submitStep(sessionId, step, {
      acknowledged: step === "security_key" ? (options.acknowledged ?? true) : options.acknowledged,
      spoof: options.spoof,
    });
  }

  deny(sessionId: string): Promise<SessionView> {
    return this.api.deny(sessionId);
  }
}
