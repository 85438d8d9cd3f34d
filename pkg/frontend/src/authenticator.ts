/** In-browser demo authenticator on WebCrypto.
 *
 * Private keys are generated non-extractable and never leave the CryptoKey
 * handle; only SPKI public keys and signatures appear in wire payloads. The
 * signed payload matches the server's 69-byte layout exactly.
 */

import { b64decode, b64encode, randomHex } from "./b64.js";
import type { AssertionWire, AttestationWire, ChallengeView } from "./types.js";

export const FLAG_USER_PRESENT = 0x01;
export const PAYLOAD_LEN = 69;

const PSS_PARAMS: RsaPssParams = { name: "RSA-PSS", saltLength: 32 };
const KEYGEN_PARAMS: RsaHashedKeyGenParams = {
  name: "RSA-PSS",
  modulusLength: 2048,
  publicExponent: new Uint8Array([1, 0, 1]),
  hash: "SHA-256",
};

export async function sha256(data: Uint8Array): Promise<Uint8Array> {
  return new Uint8Array(await crypto.subtle.digest("SHA-256", data as BufferSource));
}

export function utf8(text: string): Uint8Array {
  return new TextEncoder().encode(text);
}

export function buildSignedPayload(
  rpIdHash: Uint8Array,
  flags: number,
  counter: number,
  challengeHash: Uint8Array,
): Uint8Array {
  if (rpIdHash.length !== 32 || challengeHash.length !== 32) {
    throw new Error("hashes must be 32 bytes");
  }
  const out = new Uint8Array(PAYLOAD_LEN);
  out.set(rpIdHash, 0);
  out[32] = flags & 0xff;
  new DataView(out.buffer).setUint32(33, counter, false); // big-endian
  out.set(challengeHash, 37);
  return out;
}

interface Slot {
  rpId: string;
  userId: string;
  counter: number;
  keyPair: CryptoKeyPair;
}

export class DemoAuthenticator {
  readonly deviceId: string;
  private readonly slots = new Map<string, Slot>();
  private wiped = false;

  constructor(
    readonly kind: "smartphone" | "security_key",
    deviceId?: string,
  ) {
    this.deviceId = deviceId ?? `web-${randomHex(6)}`;
  }

  get isWiped(): boolean {
    return this.wiped;
  }

  private checkAlive(): void {
    if (this.wiped) {
      throw new Error(`device ${this.deviceId} has been wiped`);
    }
  }

  async makeCredential(
    challenge: ChallengeView,
    rpId: string,
    userId: string,
  ): Promise<AttestationWire> {
    this.checkAlive();
    const keyPair = (await crypto.subtle.generateKey(KEYGEN_PARAMS, false, [
      "sign",
      "verify",
    ])) as CryptoKeyPair;
    const credentialId = randomHex(16);
    this.slots.set(credentialId, { rpId, userId, counter: 0, keyPair });

    const payload = buildSignedPayload(
      await sha256(utf8(rpId)),
      FLAG_USER_PRESENT,
      0,
      await sha256(b64decode(challenge.nonce)),
    );
    const signature = new Uint8Array(
      await crypto.subtle.sign(PSS_PARAMS, keyPair.privateKey, payload as BufferSource),
    );
    const publicKey = new Uint8Array(await crypto.subtle.exportKey("spki", keyPair.publicKey));
    return {
      credential_id: credentialId,
      public_key: b64encode(publicKey),
      device_id: this.deviceId,
      kind: this.kind,
      signed_payload: b64encode(payload),
      signature: b64encode(signature),
    };
  }

  async getAssertion(
    challenge: ChallengeView,
    rpId: string,
    credentialId: string,
  ): Promise<AssertionWire> {
    this.checkAlive();
    const slot = this.slots.get(credentialId);
    if (slot === undefined) {
      throw new Error(`no slot for credential ${credentialId}`);
    }
    if (slot.rpId !== rpId) {
      throw new Error(`slot is bound to ${slot.rpId}, refusing to sign for ${rpId}`);
    }
    slot.counter += 1;
    const payload = buildSignedPayload(
      await sha256(utf8(slot.rpId)),
      FLAG_USER_PRESENT,
      slot.counter,
      await sha256(b64decode(challenge.nonce)),
    );
    const signature = new Uint8Array(
      await crypto.subtle.sign(PSS_PARAMS, slot.keyPair.privateKey, payload as BufferSource),
    );
    return {
      credential_id: credentialId,
      signed_payload: b64encode(payload),
      signature: b64encode(signature),
    };
  }

  wipe(): number {
    const destroyed = this.slots.size;
    this.slots.clear();
    this.wiped = true;
    return destroyed;
  }
}
