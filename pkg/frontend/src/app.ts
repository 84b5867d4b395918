import * as api from "./api.js";
import { Store, type AppState } from "./state.js";
import {
  renderBoard,
  renderErrorBanner,
  renderProgress,
  renderQuestion,
  renderSolution,
  renderToast,
  renderTranscript,
  type QuestionCard,
} from "./render.js";
import type { SessionView } from "./types.js";

const DOMAINS = ["coding", "data_analysis", "creative_writing"];

function sessionIdFromUrl(): string | null {
  return new URLSearchParams(window.location.search).get("session");
}

function rememberSession(sessionId: string): void {
  const url = new URL(window.location.href);
  url.searchParams.set("session", sessionId);
  window.history.replaceState(null, "", url.toString());
}

export function mount(root: HTMLElement): void {
  const store = new Store();

  root.innerHTML = "";
  const promptPanel = panel("prompt-panel", "New session");
  const dialoguePanel = panel("dialogue-panel", "Clarification");
  const solutionPanel = panel("solution-panel", "Result");
  const toastHost = document.createElement("div");
  toastHost.className = "toast-host";
  root.append(promptPanel.root, dialoguePanel.root, solutionPanel.root, toastHost);

  buildPromptForm(promptPanel.body, store);

  // one request at a time per tab; every handler goes through here
  async function run<T>(work: () => Promise<T>): Promise<T | null> {
    if (store.current.busy) return null;
    store.setBusy(true);
    try {
      return await work();
    } catch (err) {
      if (err instanceof api.ApiError && err.isConflict) {
        // non-blocking: refetch the server's view, then tell the user
        const view = store.current.view;
        if (view) store.setView(await api.getSession(view.session_id));
        store.setToast({ kind: "error", message: err.message });
      } else {
        const message = err instanceof Error ? err.message : String(err);
        store.setToast({ kind: "error", message });
      }
      return null;
    } finally {
      store.setBusy(false);
    }
  }

  function buildPromptForm(host: HTMLElement, store: Store): void {
    const text = document.createElement("textarea");
    text.className = "prompt-input";
    text.placeholder = "Describe what you want";
    const domain = document.createElement("select");
    domain.className = "domain-select";
    for (const d of DOMAINS) {
      const opt = document.createElement("option");
      opt.value = d;
      opt.textContent = d;
      domain.append(opt);
    }
    const context = document.createElement("textarea");
    context.className = "context-input";
    context.placeholder = "Optional context (schema, constraints, ...)";
    const start = document.createElement("button");
    start.className = "start-button";
    start.textContent = "Start";
    start.addEventListener("click", () => {
      const prompt = text.value.trim();
      if (!prompt) return;
      void run(async () => {
        const created = await api.createSession(
          prompt,
          domain.value,
          context.value.trim() || undefined,
        );
        rememberSession(created.session_id);
        store.setView(created.view);
      });
    });
    host.append(text, domain, context, start);
  }

  function renderDialogue(view: SessionView, host: HTMLElement): void {
    host.innerHTML = "";
    host.append(renderProgress(view));
    host.append(renderBoard(view.ambiguities));

    if (view.phase === "clarifying" && view.next) {
      const card: QuestionCard = renderQuestion(view.next);
      const submit = document.createElement("button");
      submit.className = "submit-answer";
      submit.textContent = "Answer";
      submit.disabled = store.current.busy;
      const question = view.next;
      submit.addEventListener("click", () => {
        const choice = card.selected();
        if (!choice) return;
        const free = card.freeText().trim();
        void run(async () => {
          const resp = await api.postAnswer(
            view.session_id,
            question.id,
            choice,
            free || undefined,
          );
          store.setView(resp.view);
        });
      });
      card.root.append(submit);
      host.append(card.root);
    } else if (view.phase === "finalizing") {
      // done marker: no more questions, offer the generate action
      const done = document.createElement("div");
      done.className = "done-marker";
      done.textContent = "All ambiguities settled.";
      const generate = document.createElement("button");
      generate.className = "generate-solution";
      generate.textContent = "Generate solution";
      generate.disabled = store.current.busy;
      generate.addEventListener("click", () => {
        void run(async () => {
          await api.finalize(view.session_id);
          store.setView(await api.getSession(view.session_id));
        });
      });
      host.append(done, generate);
    }

    if (view.transcript.length) {
      host.append(renderTranscript(view));
    }
  }

  function renderResult(view: SessionView, host: HTMLElement): void {
    host.innerHTML = "";
    if (!view.solution) return;
    host.append(renderSolution(view.solution));
    if (!view.revision_used) {
      const feedback = document.createElement("textarea");
      feedback.className = "feedback-input";
      feedback.placeholder = "Feedback for one revision pass";
      const revise = document.createElement("button");
      revise.className = "revise-button";
      revise.textContent = "Revise once";
      revise.addEventListener("click", () => {
        const note = feedback.value.trim();
        if (!note) return;
        void run(async () => {
          await api.finalize(view.session_id, note);
          store.setView(await api.getSession(view.session_id));
        });
      });
      host.append(feedback, revise);
    }
  }

  store.subscribe((state: AppState) => {
    toastHost.innerHTML = "";
    if (state.toast) {
      toastHost.append(renderToast(state.toast.message, state.toast.kind));
    }
    const view = state.view;
    if (!view) return;
    promptPanel.root.style.display = "none";
    try {
      renderDialogue(view, dialoguePanel.body);
      renderResult(view, solutionPanel.body);
    } catch (err) {
      const message = err instanceof Error ? err.message : String(err);
      dialoguePanel.body.innerHTML = "";
      dialoguePanel.body.append(renderErrorBanner(`bad payload: ${message}`));
    }
    const busy = state.busy;
    for (const button of root.querySelectorAll("button")) {
      button.disabled = busy;
    }
  });

  const existing = sessionIdFromUrl();
  if (existing) {
    void run(async () => store.setView(await api.getSession(existing)));
  }
}

function panel(className: string, title: string): { root: HTMLElement; body: HTMLElement } {
  const root = document.createElement("section");
  root.className = `panel ${className}`;
  const heading = document.createElement("h2");
  heading.textContent = title;
  const body = document.createElement("div");
  body.className = "panel-body";
  root.append(heading, body);
  return { root, body };
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  mount(document.getElementById("app")!);
}
