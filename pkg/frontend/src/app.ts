/**
 * DOM shell for the survey: login screen, one screen per task with three
 * blinded banner images and a low/medium/high segmented control under each,
 * and a completion screen with the submitted count.
 *
 * Keyboard: 1/2/3 rate the outlined image low/medium/high; the outline then
 * moves to the next unrated image. Clicking a card moves the outline.
 *
 * A failed submission keeps every selection on screen and turns the submit
 * button into Retry; slots that already landed are never POSTed again.
 */

import { ApiError, RATINGS, SurveyApi, type Rating } from './api.js';
import { SurveySession } from './survey.js';

const KEY_RATINGS: Record<string, Rating> = {
  '1': 'low',
  '2': 'medium',
  '3': 'high',
};

const RATING_LABELS: Record<Rating, string> = {
  low: 'Low',
  medium: 'Medium',
  high: 'High',
};

interface AppContext {
  root: HTMLElement;
  api: SurveyApi;
  storage: Storage | null;
  /** Removes the previous screen's document-level listeners. */
  teardown: (() => void) | null;
}

function storageFor(root: HTMLElement): Storage | null {
  try {
    return root.ownerDocument.defaultView?.localStorage ?? null;
  } catch {
    return null; // storage blocked; survey still works, minus refresh-resume
  }
}

export function mountSurveyApp(root: HTMLElement, api: SurveyApi): void {
  const ctx: AppContext = { root, api, storage: storageFor(root), teardown: null };
  renderLogin(ctx);
}

function escapeHtml(text: string): string {
  return text
    .replace(/&/g, '&amp;')
    .replace(/</g, '&lt;')
    .replace(/>/g, '&gt;')
    .replace(/"/g, '&quot;')
    .replace(/'/g, '&#39;');
}

function startedKey(raterId: string): string {
  return `survey-started:${raterId}`;
}

// ---------------------------------------------------------------- login

function renderLogin(ctx: AppContext): void {
  ctx.teardown?.();
  ctx.teardown = null;
  ctx.root.dataset.screen = 'login';
  const remembered = ctx.storage?.getItem('survey-rater') ?? '';
  ctx.root.innerHTML = `
    <section class="login">
      <h1>Banner relevance survey</h1>
      <p>You will see products, each with three candidate banner images.
         Rate how relevant each image is to the product:
         low, medium, or high. The three ratings are independent.</p>
      <label for="rater-id">Your rater id</label>
      <input id="rater-id" type="text" autocomplete="off"
             value="${escapeHtml(remembered)}" />
      <button id="begin" ${remembered.trim() ? '' : 'disabled'}>Begin</button>
      <p id="login-error" class="error" hidden></p>
    </section>`;

  const input = ctx.root.querySelector<HTMLInputElement>('#rater-id')!;
  const begin = ctx.root.querySelector<HTMLButtonElement>('#begin')!;
  input.addEventListener('input', () => {
    begin.disabled = input.value.trim() === '';
  });
  input.addEventListener('keydown', (event) => {
    if (event.key === 'Enter' && !begin.disabled) begin.click();
  });
  begin.addEventListener('click', () => {
    void startSurvey(ctx, input.value.trim());
  });
}

async function startSurvey(ctx: AppContext, raterId: string): Promise<void> {
  const errorLine = ctx.root.querySelector<HTMLElement>('#login-error')!;
  errorLine.hidden = true;
  try {
    const manifest = await ctx.api.fetchManifest(raterId);
    // Only a refresh mid-survey consults the server's completion matrix; a
    // first visit never requests the report, so the rating flow's traffic
    // stays free of method names end to end.
    const resuming = ctx.storage?.getItem(startedKey(raterId)) === '1';
    const progress = resuming
      ? await ctx.api.fetchProgress(
          raterId,
          manifest.tasks.map((t) => t.product_id),
          manifest.tasks[0]?.image_hashes.length ?? 0,
        )
      : undefined;
    ctx.storage?.setItem('survey-rater', raterId);
    ctx.storage?.setItem(startedKey(raterId), '1');
    const session = new SurveySession(manifest, progress);
    renderCurrent(ctx, session);
  } catch (error) {
    errorLine.textContent =
      error instanceof ApiError
        ? `Could not load your survey: ${error.message}`
        : 'Could not reach the survey server. Please try again.';
    errorLine.hidden = false;
  }
}

// ----------------------------------------------------------------- task

function renderCurrent(ctx: AppContext, session: SurveySession): void {
  ctx.teardown?.();
  ctx.teardown = null;
  if (session.finished) {
    renderDone(ctx, session);
    return;
  }

  const task = session.current!;
  ctx.root.dataset.screen = 'task';

  const cards = task.imageHashes
    .map((hash, slot) => {
      const buttons = RATINGS.map(
        (rating) =>
          `<button class="choice" data-slot="${slot}" data-rating="${rating}"
                   aria-pressed="false">${RATING_LABELS[rating]}</button>`,
      ).join('');
      return `
        <figure class="card" data-slot="${slot}">
          <img src="${ctx.api.imageUrl(hash)}" alt="banner option ${slot + 1}" />
          <figcaption>
            <div class="choices" role="group"
                 aria-label="rating for banner option ${slot + 1}">
              ${buttons}
            </div>
          </figcaption>
        </figure>`;
    })
    .join('');

  ctx.root.innerHTML = `
    <section class="task" data-product-id="${escapeHtml(task.productId)}">
      <header>
        <span id="task-progress">Task ${session.currentIndex + 1} of ${session.tasks.length}</span>
        <h1 id="product-name">${escapeHtml(task.productName)}</h1>
        <p class="hint">Keys 1, 2, 3 rate the outlined image low, medium, high.</p>
      </header>
      <div class="cards">${cards}</div>
      <footer>
        <button id="submit-task" disabled>Submit ratings</button>
        <p id="task-status" class="status" hidden></p>
      </footer>
    </section>`;

  const submitButton = ctx.root.querySelector<HTMLButtonElement>('#submit-task')!;
  let activeSlot = 0;

  const paintSelections = (): void => {
    for (const button of ctx.root.querySelectorAll<HTMLButtonElement>('.choice')) {
      const slot = Number(button.dataset.slot);
      const picked = task.selections[slot] === button.dataset.rating;
      button.setAttribute('aria-pressed', picked ? 'true' : 'false');
      button.classList.toggle('picked', picked);
    }
    for (const card of ctx.root.querySelectorAll<HTMLElement>('.card')) {
      card.classList.toggle('active', Number(card.dataset.slot) === activeSlot);
    }
    submitButton.disabled = !session.canSubmit;
  };

  const pick = (slot: number, rating: Rating): void => {
    session.select(slot, rating);
    const nextUnrated = task.selections.findIndex((sel) => sel === null);
    activeSlot = nextUnrated === -1 ? slot : nextUnrated;
    paintSelections();
  };

  ctx.root.querySelector('.cards')!.addEventListener('click', (event) => {
    const target = event.target as HTMLElement;
    const choice = target.closest<HTMLButtonElement>('.choice');
    if (choice) {
      pick(Number(choice.dataset.slot), choice.dataset.rating as Rating);
      return;
    }
    const card = target.closest<HTMLElement>('.card');
    if (card) {
      activeSlot = Number(card.dataset.slot);
      paintSelections();
    }
  });

  const doc = ctx.root.ownerDocument;
  const onKeydown = (event: KeyboardEvent): void => {
    const rating = KEY_RATINGS[event.key];
    if (rating) pick(activeSlot, rating);
  };
  doc.addEventListener('keydown', onKeydown);
  ctx.teardown = () => doc.removeEventListener('keydown', onKeydown);

  submitButton.addEventListener('click', () => {
    void submitCurrent(ctx, session);
  });

  paintSelections();
}

async function submitCurrent(ctx: AppContext, session: SurveySession): Promise<void> {
  const task = session.current!;
  const submitButton = ctx.root.querySelector<HTMLButtonElement>('#submit-task')!;
  const status = ctx.root.querySelector<HTMLElement>('#task-status')!;
  submitButton.disabled = true;
  status.hidden = false;
  status.textContent = 'Submitting…';

  for (const { slot, rating } of session.pendingSlots) {
    try {
      await ctx.api.submitRating(session.raterId, task.productId, slot, rating);
      session.markSubmitted(slot);
    } catch (error) {
      const reason = error instanceof ApiError ? error.message : 'network error';
      status.textContent = `Submission failed (${reason}). Your selections are kept — press Retry.`;
      submitButton.textContent = 'Retry';
      submitButton.disabled = false;
      return;
    }
  }

  session.advance();
  renderCurrent(ctx, session);
}

// ----------------------------------------------------------------- done

function renderDone(ctx: AppContext, session: SurveySession): void {
  ctx.root.dataset.screen = 'done';
  ctx.root.innerHTML = `
    <section class="done">
      <h1>All done — thank you!</h1>
      <p id="done-summary">You submitted
        <strong id="done-count">${session.submittedCount}</strong> ratings
        across ${session.completedTaskCount} tasks.</p>
    </section>`;
}
