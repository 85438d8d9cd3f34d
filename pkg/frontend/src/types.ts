/** Wire types mirroring docs/wire-schema.md. Field names are the contract. */

export interface ChallengeView {
  nonce: string;
  rp_id: string;
  user_id: string;
  purpose: string;
  issued_at_ms: number;
  ttl_ms: number;
}

export interface UserView {
  user_id: string;
  email: string;
  display_name: string;
  face_enrolled: boolean;
}

export interface CredentialView {
  credential_id: string;
  user_id: string;
  rp_id: string;
  public_key: string;
  kind: string;
  device_id: string;
  counter_seen: number;
  state: string;
  created_at_ms: number;
}

export interface PendingRequest {
  session_id: string;
  service_provider: string;
  origin_device_descriptor: string;
  requested_at_ms: number;
}

export interface SessionView {
  session_id: string;
  user_id: string;
  service_provider: string;
  origin_device_descriptor: string;
  state: string;
  created_at_ms: number;
  ttl_ms: number;
  steps_done: string[];
}

export interface StepResultView {
  ok: boolean;
  failure: string | null;
  detail: string | null;
  session: SessionView;
}

export interface StatusView {
  session_id: string;
  state: string;
  session_token?: { token: string; expires_at_ms: number };
}

export interface AttestationWire {
  credential_id: string;
  public_key: string;
  device_id: string;
  kind: string;
  signed_payload: string;
  signature: string;
}

export interface AssertionWire {
  credential_id: string;
  signed_payload: string;
  signature: string;
}

export type StepName = "device_attestation" | "security_key" | "face";

export const STEP_ORDER: StepName[] = ["device_attestation", "security_key", "face"];

export const STEP_TITLES: Record<StepName, string> = {
  device_attestation: "Approve on this device",
  security_key: "Confirm origin + security key",
  face: "Face verification",
};
