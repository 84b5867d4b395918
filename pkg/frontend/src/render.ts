import type {
  Ambiguity,
  Question,
  SessionView,
  Solution,
  SolutionExample,
} from "./types.js";
import { progressLabel } from "./state.js";

export const OTHER_OPTION_ID = "other";
const FREE_TEXT_PLACEHOLDER = "{free_text}";

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

export function renderBoard(ambiguities: Ambiguity[]): HTMLElement {
  const board = el("ul", "board");
  for (const amb of ambiguities) {
    const item = el("li", "board-item");
    item.dataset.id = amb.id;
    item.dataset.status = amb.status;
    item.append(
      el("span", "board-label", `${amb.id} ${amb.label}`),
      el("span", `badge badge-${amb.status}`, amb.status),
    );
    if (amb.resolution) {
      item.append(el("div", "board-resolution", amb.resolution));
    }
    board.append(item);
  }
  return board;
}

function renderIllustration(ill: { input: string; output: string }): HTMLElement {
  // paired monospace blocks: what goes in, what comes out
  const wrap = el("div", "illustration");
  wrap.append(el("pre", "illustration-input", ill.input));
  wrap.append(el("pre", "illustration-output", ill.output));
  return wrap;
}

export interface QuestionCard {
  root: HTMLElement;
  selected(): string | null;
  freeText(): string;
}

/** The interactive card for one question. Options keep plan order. */
export function renderQuestion(question: Question): QuestionCard {
  const root = el("section", "question-card");
  root.dataset.questionId = question.id;
  root.append(el("h3", "question-text", question.text));

  const list = el("div", "options");
  const name = `q-${question.id}`;
  const addChoice = (id: string, label: string): HTMLInputElement => {
    const row = el("label", "option-row");
    const radio = el("input");
    radio.type = "radio";
    radio.name = name;
    radio.value = id;
    row.append(radio, el("span", "option-text", label));
    list.append(row);
    return radio;
  };

  const placeholderOptions = new Set<string>();
  for (const opt of question.options) {
    addChoice(opt.id, `${opt.id}. ${opt.text}`);
    if (opt.resolves_to.includes(FREE_TEXT_PLACEHOLDER)) {
      placeholderOptions.add(opt.id);
    }
    if (opt.illustration) {
      list.append(renderIllustration(opt.illustration));
    }
  }
  addChoice(OTHER_OPTION_ID, "Other (describe below)");
  root.append(list);

  const freeRow = el("div", "free-text-row");
  const freeInput = el("input", "free-text-input");
  freeInput.type = "text";
  freeInput.maxLength = 200;
  freeInput.placeholder = "your interpretation";
  freeRow.append(freeInput);
  root.append(freeRow);

  const selected = (): string | null => {
    const checked = root.querySelector<HTMLInputElement>("input[type=radio]:checked");
    return checked ? checked.value : null;
  };

  // the free-text field shows for questions that allow it, for options that
  // interpolate it, and always for the "other" escape
  const syncFreeText = () => {
    const choice = selected();
    const wanted =
      question.allows_free_text ||
      choice === OTHER_OPTION_ID ||
      (choice !== null && placeholderOptions.has(choice));
    freeRow.style.display = wanted ? "" : "none";
  };
  syncFreeText();
  list.addEventListener("change", syncFreeText);

  return { root, selected, freeText: () => freeInput.value };
}

export function renderTranscript(view: SessionView): HTMLElement {
  const pane = el("ol", "transcript");
  for (const entry of view.transcript) {
    const text = entry.free_text
      ? `${entry.question_id}: ${entry.option_id} (${entry.free_text})`
      : `${entry.question_id}: ${entry.option_id}`;
    pane.append(el("li", "transcript-entry", text));
  }
  return pane;
}

const EXAMPLE_HEADINGS: Record<SolutionExample["kind"], string> = {
  selected: "Selected",
  not_selected: "Not selected",
  edge: "Edge",
};

export function renderSolution(solution: Solution): HTMLElement {
  const pane = el("section", "solution-pane");
  pane.append(el("h2", undefined, "Solution"));
  pane.append(el("pre", "artifact", solution.artifact));
  pane.append(el("h3", undefined, "Disambiguated prompt"));
  pane.append(el("pre", "disambiguated-prompt", solution.disambiguated_prompt));

  const groups = el("div", "example-groups");
  for (const kind of ["selected", "not_selected", "edge"] as const) {
    const examples = solution.examples.filter((e) => e.kind === kind);
    if (!examples.length) continue;
    const group = el("div", `example-group example-${kind}`);
    group.append(el("h4", undefined, EXAMPLE_HEADINGS[kind]));
    for (const ex of examples) {
      group.append(el("div", "example-input", ex.input_description));
      group.append(el("div", "example-behavior", ex.expected_behavior));
    }
    groups.append(group);
  }
  pane.append(groups);
  return pane;
}

export function renderProgress(view: SessionView): HTMLElement {
  const bar = el("div", "progress");
  bar.append(el("span", "progress-label", progressLabel(view)));
  bar.append(el("span", "open-count", `${view.open_count} open`));
  return bar;
}

export function renderToast(message: string, kind: "error" | "info"): HTMLElement {
  return el("div", `toast toast-${kind}`, message);
}

export function renderErrorBanner(message: string): HTMLElement {
  return el("div", "error-banner", message);
}
