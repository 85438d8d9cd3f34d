/** DOM rendering for the approval console. State lives server-side; every
 * poll re-renders from the feed and the selected session's status. */

import { ApiError, ApiClient, TransportError } from "./api.js";
import { ApprovalController, completedSteps, nextExpectedStep } from "./controller.js";
import { setupDemoIdentity, type DemoIdentity } from "./fixtures.js";
import { STEP_ORDER, STEP_TITLES, type PendingRequest, type StepName } from "./types.js";

const POLL_INTERVAL_MS = 2000;

interface ConsoleState {
  api: ApiClient;
  controller: ApprovalController | null;
  selected: string | null;
  selectedRequest: PendingRequest | null;
  acknowledged: boolean;
  spoofMode: boolean;
  lastOutcome: string | null;
  sessionToken: string | null;
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function startConsole(root: HTMLElement, baseUrl: string): void {
  const state: ConsoleState = {
    api: new ApiClient(baseUrl),
    controller: null,
    selected: null,
    selectedRequest: null,
    acknowledged: false,
    spoofMode: false,
    lastOutcome: null,
    sessionToken: null,
  };

  const banner = el("div", "banner hidden");
  const identityPanel = el("section", "panel");
  const requestsPanel = el("section", "panel");
  const detailPanel = el("section", "panel hidden");
  root.append(banner, identityPanel, requestsPanel, detailPanel);

  function showError(message: string): void {
    banner.textContent = message;
    banner.classList.remove("hidden");
  }

  function clearError(): void {
    banner.classList.add("hidden");
  }

  function renderIdentity(): void {
    identityPanel.replaceChildren();
    identityPanel.append(el("h2", undefined, "Identity"));
    if (state.controller === null) {
      const hint = el(
        "p",
        "hint",
        "Create a demo identity: registers a user with an in-browser smartphone + security key and a synthetic face.",
      );
      const button = el("button", "primary", "Create demo identity");
      button.onclick = async () => {
        button.disabled = true;
        try {
          const identity = await setupDemoIdentity(state.api);
          state.controller = new ApprovalController(state.api, identity);
          clearError();
          renderIdentity();
        } catch (error) {
          showError(`setup failed: ${error}`);
          button.disabled = false;
        }
      };
      identityPanel.append(hint, button);
    } else {
      const identity: DemoIdentity = state.controller.identity;
      identityPanel.append(
        el("p", undefined, `Signed in as ${identity.displayName}`),
        el("p", "mono", `user_id: ${identity.userId}`),
        el(
          "p",
          "hint",
          `Start a login from the origin device, e.g.  metasecure login ${identity.userId} --url ${baseUrl}`,
        ),
      );
    }
  }

  function renderRequests(requests: PendingRequest[]): void {
    requestsPanel.replaceChildren();
    requestsPanel.append(el("h2", undefined, "Pending login requests"));
    if (state.controller === null) {
      requestsPanel.append(el("p", "hint", "Create an identity first."));
      return;
    }
    if (requests.length === 0) {
      requestsPanel.append(el("p", "hint", "No pending requests."));
      return;
    }
    for (const request of requests) {
      const card = el("div", "card" + (request.session_id === state.selected ? " selected" : ""));
      card.append(
        el("strong", undefined, request.service_provider),
        el("div", "mono", `from ${request.origin_device_descriptor}`),
        el("div", "hint", new Date(request.requested_at_ms).toLocaleTimeString()),
      );
      card.onclick = () => {
        state.selected = request.session_id;
        state.selectedRequest = request;
        state.acknowledged = false;
        state.lastOutcome = null;
        state.sessionToken = null;
        void refresh();
      };
      requestsPanel.append(card);
    }
  }

  async function submit(step: StepName): Promise<void> {
    if (state.controller === null || state.selected === null) return;
    try {
      const result = await state.controller.submitStep(state.selected, step, {
        acknowledged: state.acknowledged,
        spoof: state.spoofMode,
      });
      state.lastOutcome = result.ok
        ? `step ${step} verified`
        : `step ${step} rejected: ${result.failure}${result.detail ? ` (${result.detail})` : ""}`;
      clearError();
    } catch (error) {
      if (error instanceof ApiError) {
        state.lastOutcome = `server refused: ${error.code}`;
      } else {
        showError(String(error));
      }
    }
    await refresh();
  }

  async function renderDetail(): Promise<void> {
    if (state.controller === null || state.selected === null) {
      detailPanel.classList.add("hidden");
      return;
    }
    const status = await state.controller.status(state.selected);
    const next = nextExpectedStep(status.state);
    const done = completedSteps(status.state);
    if (status.session_token) {
      state.sessionToken = status.session_token.token;
    }

    detailPanel.classList.remove("hidden");
    detailPanel.replaceChildren();
    const request = state.selectedRequest;
    detailPanel.append(
      el("h2", undefined, `Approve: ${request?.service_provider ?? status.session_id}`),
      el("p", "mono", `session ${status.session_id} — ${status.state}`),
    );
    if (request) {
      detailPanel.append(
        el("p", undefined, `Login attempt from: ${request.origin_device_descriptor}`),
      );
    }

    const list = el("ol", "steps");
    for (const step of STEP_ORDER) {
      const item = el("li", "step");
      const label = el("span", undefined, STEP_TITLES[step]);
      item.append(label);
      if (done.includes(step)) {
        item.classList.add("done");
        item.append(el("span", "badge ok", "done"));
      } else if (step === next) {
        item.classList.add("next");
        if (step === "security_key") {
          const ack = el("label", "ack");
          const box = el("input") as HTMLInputElement;
          box.type = "checkbox";
          box.checked = state.acknowledged;
          box.onchange = () => {
            state.acknowledged = box.checked;
          };
          ack.append(box, document.createTextNode(" I recognize this origin device"));
          item.append(ack);
        }
        if (step === "face") {
          const spoof = el("label", "ack");
          const box = el("input") as HTMLInputElement;
          box.type = "checkbox";
          box.checked = state.spoofMode;
          box.onchange = () => {
            state.spoofMode = box.checked;
          };
          spoof.append(box, document.createTextNode(" spoof-mode probe (demo PAD rejection)"));
          item.append(spoof);
        }
        const button = el("button", "primary", "Approve");
        button.onclick = () => void submit(step);
        item.append(button);
      } else {
        item.classList.add("locked");
        item.append(el("span", "badge", "locked"));
      }
      list.append(item);
    }
    detailPanel.append(list);

    if (state.lastOutcome) {
      detailPanel.append(el("p", "outcome", state.lastOutcome));
    }
    if (status.state === "complete") {
      detailPanel.append(
        el("p", "success", "Login complete — the origin device unblocks on its next poll."),
        el("p", "mono", `session token: ${state.sessionToken ?? "(issued)"}`),
      );
    } else if (status.state === "denied" || status.state === "expired") {
      detailPanel.append(el("p", "outcome", `session ${status.state}`));
    } else {
      const denyButton = el("button", "danger", "Deny");
      denyButton.onclick = async () => {
        if (state.controller && state.selected) {
          try {
            await state.controller.deny(state.selected);
          } catch (error) {
            showError(String(error));
          }
          await refresh();
        }
      };
      detailPanel.append(denyButton);
    }
  }

  async function refresh(): Promise<void> {
    if (state.controller === null) {
      renderIdentity();
      renderRequests([]);
      return;
    }
    try {
      const requests = await state.controller.fetchPending();
      clearError();
      renderRequests(requests);
      if (state.selected !== null && !requests.some((r) => r.session_id === state.selected)) {
        // completed/denied elsewhere: keep showing its terminal detail once,
        // the status call below reports the final state
      }
      await renderDetail();
    } catch (error) {
      if (error instanceof TransportError) {
        showError("server unreachable — retrying…");
      } else {
        showError(String(error));
      }
    }
  }

  renderIdentity();
  renderRequests([]);
  void refresh();
  setInterval(() => void refresh(), POLL_INTERVAL_MS);
}
