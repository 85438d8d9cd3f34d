/** Demo-mode identity: everything a console session needs to approve logins.
 *
 * The browser cannot host a hardware key, so demo mode enrolls WebCrypto
 * authenticators and a synthetic face embedding; the face probe is the kept
 * local copy of the enrolled vector.
 */

import type { ApiClient } from "./api.js";
import { DemoAuthenticator } from "./authenticator.js";
import { randomHex } from "./b64.js";

export const LIVE_FEATURES = [0.1];
export const SPOOF_FEATURES = [0.9];
export const FACE_DIM = 128;

export interface DemoIdentity {
  userId: string;
  displayName: string;
  phone: DemoAuthenticator;
  key: DemoAuthenticator;
  phoneCredentialId: string;
  keyCredentialId: string;
  faceVector: number[];
}

export function randomFaceVector(): number[] {
  const raw = new Uint32Array(FACE_DIM);
  crypto.getRandomValues(raw);
  return Array.from(raw, (v) => (v / 0xffffffff) * 2 - 1);
}

async function enrollDevice(
  api: ApiClient,
  userId: string,
  device: DemoAuthenticator,
): Promise<string> {
  const challenge = await api.beginRegistration(userId);
  const attestation = await device.makeCredential(challenge, challenge.rp_id, userId);
  const credential = await api.finishRegistration(challenge.nonce, attestation);
  return credential.credential_id;
}

export async function setupDemoIdentity(api: ApiClient, tag?: string): Promise<DemoIdentity> {
  const suffix = tag ?? randomHex(4);
  const user = await api.registerUser(
    `console-${suffix}@example.com`,
    `Console User ${suffix}`,
  );
  const phone = new DemoAuthenticator("smartphone");
  const key = new DemoAuthenticator("security_key");
  const phoneCredentialId = await enrollDevice(api, user.user_id, phone);
  const keyCredentialId = await enrollDevice(api, user.user_id, key);
  const faceVector = randomFaceVector();
  await api.enrollFace(user.user_id, faceVector);
  return {
    userId: user.user_id,
    displayName: user.display_name,
    phone,
    key,
    phoneCredentialId,
    keyCredentialId,
    faceVector,
  };
}
