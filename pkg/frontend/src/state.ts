import type { SessionView } from "./types.js";

export interface Toast {
  kind: "error" | "info";
  message: string;
}

/**
 * Client state is a projection of the last service response plus transient
 * UI bits (in-flight flag, toast). The view is never edited locally: every
 * change comes from swapping in a fresh server payload.
 */
export interface AppState {
  view: SessionView | null;
  busy: boolean;
  toast: Toast | null;
}

export type Listener = (state: AppState) => void;

export class Store {
  private state: AppState = { view: null, busy: false, toast: null };
  private listeners: Listener[] = [];

  get current(): AppState {
    return this.state;
  }

  subscribe(fn: Listener): void {
    this.listeners.push(fn);
  }

  setView(view: SessionView): void {
    this.patch({ view, toast: null });
  }

  setBusy(busy: boolean): void {
    this.patch({ busy });
  }

  setToast(toast: Toast | null): void {
    this.patch({ toast });
  }

  private patch(partial: Partial<AppState>): void {
    this.state = { ...this.state, ...partial };
    for (const fn of this.listeners) fn(this.state);
  }
}

// progress comes from the latest payload, never recomputed from history
export function progressLabel(view: SessionView): string {
  return `${view.progress.closed} of ${view.progress.total} settled`;
}
