/**
 * Entry point: connect to the elicitation service, resume the stored
 * session if one exists (the session id is the only local persistence),
 * and mount the questionnaire.
 */

import { ApiClient } from "./api.js";
import { QuestionnaireFlow } from "./state.js";
import { QuestionnaireView } from "./questionnaire.js";

const SESSION_KEY = "mlrisk-elicitation-session";

function serviceUrl(): string {
  const params = new URLSearchParams(window.location.search);
  return params.get("service") ?? "http://127.0.0.1:8100";
}

async function boot(): Promise<void> {
  const root = document.getElementById("app");
  if (!root) {
    throw new Error("missing #app mount point");
  }
  const api = new ApiClient(serviceUrl());
  const flow = new QuestionnaireFlow(api);

  const stored = window.localStorage.getItem(SESSION_KEY) ?? undefined;
  try {
    if (stored) {
      await flow.start("", stored);
    } else {
      const expert = window.prompt("Expert identifier for this session:") ?? "anonymous";
      await flow.start(expert);
      window.localStorage.setItem(SESSION_KEY, flow.sessionId ?? "");
    }
  } catch (error) {
    if (stored) {
      // stale stored session; start fresh
      window.localStorage.removeItem(SESSION_KEY);
      await boot();
      return;
    }
    root.textContent = `Cannot reach the elicitation service at ${serviceUrl()}: ${String(error)}`;
    return;
  }

  new QuestionnaireView(root, flow).render();
}

void boot();
