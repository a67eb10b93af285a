/**
 * Client-side survey state: which task is on screen, which slots the rater
 * has picked a rating for, and which of those picks have landed on the
 * server. Pure bookkeeping -- no DOM, no network -- so every rule here
 * (slot independence, submit gating, retry bookkeeping) is unit-testable.
 */

import type { ProgressMap, Rating, SurveyManifest } from './api.js';

export interface TaskView {
  readonly productId: string;
  readonly productName: string;
  readonly imageHashes: readonly string[];
  /** Rating picked per slot; slots are independent of one another. */
  selections: (Rating | null)[];
  /** Per slot: has the rating POST landed on the server? */
  submitted: boolean[];
}

export class SurveySession {
  readonly raterId: string;
  readonly tasks: TaskView[];
  private index: number;

  constructor(manifest: SurveyManifest, progress?: ProgressMap) {
    this.raterId = manifest.rater_id;
    this.tasks = manifest.tasks.map((task) => {
      const slots = task.image_hashes.length;
      // Restore is task-granular: the completion matrix counts rated cells
      // but never says which slot a cell belonged to (that mapping stays on
      // the server), so a partially-rated task starts over and its re-rated
      // cells overwrite server-side.
      const done = (progress?.get(task.product_id) ?? 0) >= slots;
      return {
        productId: task.product_id,
        productName: task.product_name,
        imageHashes: [...task.image_hashes],
        selections: new Array<Rating | null>(slots).fill(null),
        submitted: new Array<boolean>(slots).fill(done),
      };
    });
    this.index = this.firstIncomplete();
  }

  private firstIncomplete(): number {
    const i = this.tasks.findIndex((t) => !t.submitted.every(Boolean));
    return i === -1 ? this.tasks.length : i;
  }

  get currentIndex(): number {
    return this.index;
  }

  get current(): TaskView | undefined {
    return this.tasks[this.index];
  }

  /** All tasks' slots have landed on the server. */
  get finished(): boolean {
    return this.index >= this.tasks.length;
  }

  /** Ratings that have landed, across all tasks (restored ones included). */
  get submittedCount(): number {
    return this.tasks.reduce(
      (n, t) => n + t.submitted.filter(Boolean).length,
      0,
    );
  }

  /** Tasks whose every slot has landed. */
  get completedTaskCount(): number {
    return this.tasks.filter((t) => t.submitted.every(Boolean)).length;
  }

  /**
   * Pick a rating for one slot of the current task. Other slots are never
   * touched: rating one image high (or low) constrains nothing else.
   */
  select(slot: number, rating: Rating): void {
    const task = this.current;
    if (!task) throw new Error('survey already finished');
    if (slot < 0 || slot >= task.selections.length) {
      throw new Error(`no slot ${slot}`);
    }
    if (task.submitted[slot]) return; // already on the server; nothing to redo
    task.selections[slot] = rating;
  }

  /** Submission is enabled only once every slot has a rating. */
  get canSubmit(): boolean {
    const task = this.current;
    if (!task) return false;
    return task.selections.every(
      (pick, slot) => task.submitted[slot] || pick !== null,
    );
  }

  /**
   * Slots still owed to the server: selected but not yet landed. After a
   * partial submit failure only these are retried, so a slot that already
   * landed is never POSTed twice.
   */
  get pendingSlots(): { slot: number; rating: Rating }[] {
    const task = this.current;
    if (!task) return [];
    const pending: { slot: number; rating: Rating }[] = [];
    task.selections.forEach((pick, slot) => {
      if (pick !== null && !task.submitted[slot]) {
        pending.push({ slot, rating: pick });
      }
    });
    return pending;
  }

  markSubmitted(slot: number): void {
    const task = this.current;
    if (!task) throw new Error('survey already finished');
    task.submitted[slot] = true;
  }

  /** Move past the current task once every slot has landed. */
  advance(): void {
    const task = this.current;
    if (task && !task.submitted.every(Boolean)) {
      throw new Error('current task still has unsubmitted slots');
    }
    this.index = this.firstIncomplete();
  }
}
