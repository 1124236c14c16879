// DOM layer: renders the study flow (join -> rounds -> done) into a root
// element and wires user events onto a RoundModel. All state lives in the
// model or in the closures here; the DOM is re-painted from it.

import { ApiRejection, StudyApi } from './api.js';
import type { BallotBody, RoundPayload } from './api.js';
import { RoundModel } from './model.js';

// Integer zoom so raters judge the actual pixels: candidates are small
// (often 7x7..128x128) and any smoothing would hide exactly the detail
// the study is about. Zoom picks the largest integer scale that keeps a
// tile near this budget.
const TILE_TARGET_PX = 128;

function intZoom(naturalSize: number): number {
    if (naturalSize <= 0) return 1;
    return Math.max(1, Math.floor(TILE_TARGET_PX / naturalSize));
}

function applyZoom(img: HTMLImageElement): void {
    const apply = () => {
        if (img.naturalWidth > 0) {
            img.style.width = `${img.naturalWidth * intZoom(img.naturalWidth)}px`;
        }
    };
    if (img.complete) apply();
    else img.addEventListener('load', apply);
}

export function mountApp(root: HTMLElement, api: StudyApi): () => void {
    let sessionId = '';
    let model: RoundModel | null = null;
    let inFlight = false;

    const doc = root.ownerDocument;

    function setState(state: string): void {
        root.dataset.state = state;
    }

    function byId<T extends HTMLElement>(id: string): T {
        const node = root.querySelector(`#${id}`);
        if (!node) throw new Error(`missing element #${id}`);
        return node as T;
    }

    // --- screens ---

    function renderJoin(): void {
        setState('join');
        root.innerHTML = `
          <section class="join">
            <h1>sample selection study</h1>
            <p>Enter your rater id to begin.</p>
            <form id="join-form">
              <input id="voter-id" autocomplete="off" placeholder="rater id">
              <button id="join-btn" type="submit">start</button>
            </form>
            <p class="error-text" id="join-error"></p>
          </section>`;
        byId<HTMLFormElement>('join-form').addEventListener('submit', (ev) => {
            ev.preventDefault();
            void join();
        });
    }

    async function join(): Promise<void> {
        const voterId = byId<HTMLInputElement>('voter-id').value.trim();
        const errorOut = byId<HTMLParagraphElement>('join-error');
        if (!voterId) {
            errorOut.textContent = 'rater id must not be empty';
            return;
        }
        try {
            sessionId = await api.createSession(voterId);
        } catch (err) {
            errorOut.textContent = describe(err);
            return;
        }
        await loadRound();
    }

    function renderDone(): void {
        setState('done');
        root.innerHTML = `
          <section class="done">
            <h1>all rounds complete</h1>
            <p>Your ballots were recorded. Thank you.</p>
          </section>`;
    }

    function renderError(message: string, retry: () => void): void {
        setState('error');
        root.innerHTML = `
          <section class="error-panel">
            <h1>something went wrong</h1>
            <p class="error-text" id="error-message"></p>
            <button id="retry-btn">retry</button>
          </section>`;
        byId<HTMLParagraphElement>('error-message').textContent = message;
        byId<HTMLButtonElement>('retry-btn').addEventListener('click', retry);
    }

    // --- round flow ---

    async function loadRound(): Promise<void> {
        setState('loading');
        root.innerHTML = '<p class="loading">loading round…</p>';
        let round: RoundPayload;
        try {
            round = await api.getRound(sessionId);
        } catch (err) {
            if (err instanceof ApiRejection && err.code === 'session-completed') {
                renderDone();
                return;
            }
            renderError(describe(err), () => void loadRound());
            return;
        }
        if (round.candidates.length === 0) {
            // the server contract rules this out; defend anyway
            renderError('round carries no candidates', () => void loadRound());
            return;
        }
        model = new RoundModel(round);
        renderRound();
    }

    function renderRound(): void {
        const m = model!;
        setState('round');
        root.innerHTML = `
          <section class="round">
            <header class="round-header">
              <span id="progress"></span>
              <span id="selection-count"></span>
            </header>
            <div class="reference">
              <figure>
                <img id="lr-image" alt="low-resolution reference">
                <figcaption>low-resolution reference</figcaption>
              </figure>
              <p class="instructions">Select the candidate${m.maxSelect > 1 ? 's' : ''} (up to ${m.maxSelect}) that
                best match the reference. Keyboard: digits toggle tiles on this page, Enter submits.</p>
            </div>
            <div id="grid" class="grid"></div>
            <nav id="pager" class="pager"></nav>
            <div id="label-block" class="label-block"></div>
            <div class="submit-row">
              <button id="submit-btn" disabled>submit ballot</button>
              <button id="retry-submit-btn" class="hidden">retry submission</button>
              <span id="hint" class="hint"></span>
            </div>
          </section>`;

        const lr = byId<HTMLImageElement>('lr-image');
        lr.src = api.imageUrl(m.lrUrl);
        applyZoom(lr);

        byId<HTMLSpanElement>('progress').textContent =
            `round ${m.roundIndex + 1} of ${m.rounds}`;

        renderLabelBlock();
        renderGridPage();
        byId<HTMLButtonElement>('submit-btn').addEventListener('click', () => void submit(null));
        updateControls();
    }

    function renderGridPage(): void {
        const m = model!;
        const grid = byId<HTMLDivElement>('grid');
        grid.innerHTML = '';
        for (const idx of m.pageIndices()) {
            const tile = doc.createElement('button');
            tile.type = 'button';
            tile.className = 'tile';
            tile.dataset.index = String(idx);
            const img = doc.createElement('img');
            img.src = api.imageUrl(m.candidateUrls[idx]);
            img.alt = `candidate ${idx + 1}`;
            applyZoom(img);
            tile.appendChild(img);
            tile.addEventListener('click', () => {
                const outcome = m.toggle(idx);
                if (outcome === 'at-limit') {
                    showHint(`select at most ${m.maxSelect}`);
                } else {
                    showHint('');
                }
                updateControls();
            });
            grid.appendChild(tile);
        }
        renderPager();
    }

    function renderPager(): void {
        const m = model!;
        const pager = byId<HTMLElement>('pager');
        if (m.pageCount() <= 1) {
            pager.innerHTML = '';
            return;
        }
        pager.innerHTML = `
          <button id="prev-page">previous</button>
          <span id="page-label">page ${m.page + 1} of ${m.pageCount()}</span>
          <button id="next-page">next</button>`;
        byId<HTMLButtonElement>('prev-page').disabled = m.page === 0;
        byId<HTMLButtonElement>('next-page').disabled = m.page === m.pageCount() - 1;
        byId<HTMLButtonElement>('prev-page').addEventListener('click', () => {
            m.prevPage();
            renderGridPage();
            updateControls();
        });
        byId<HTMLButtonElement>('next-page').addEventListener('click', () => {
            m.nextPage();
            renderGridPage();
            updateControls();
        });
    }

    function renderLabelBlock(): void {
        const m = model!;
        const block = byId<HTMLDivElement>('label-block');
        if (m.labelQuestion === null) {
            block.innerHTML = '';
            return;
        }
        const question = doc.createElement('p');
        question.className = 'label-question';
        question.textContent = m.labelQuestion;
        block.appendChild(question);
        if (m.allowedLabels !== null) {
            for (const choice of m.allowedLabels) {
                const btn = doc.createElement('button');
                btn.type = 'button';
                btn.className = 'label-choice';
                btn.dataset.label = choice;
                btn.textContent = choice;
                btn.addEventListener('click', () => {
                    m.setLabel(choice);
                    updateControls();
                });
                block.appendChild(btn);
            }
        } else {
            const input = doc.createElement('input');
            input.id = 'label-input';
            input.placeholder = 'your answer';
            input.addEventListener('input', () => {
                m.setLabel(input.value);
                updateControls();
            });
            block.appendChild(input);
        }
    }

    function updateControls(): void {
        const m = model!;
        byId<HTMLSpanElement>('selection-count').textContent =
            `${m.selectionCount()} of ${m.maxSelect} selected`;
        root.querySelectorAll<HTMLButtonElement>('.tile').forEach((tile) => {
            const idx = Number(tile.dataset.index);
            tile.classList.toggle('selected', m.isSelected(idx));
        });
        root.querySelectorAll<HTMLButtonElement>('.label-choice').forEach((btn) => {
            btn.classList.toggle('active', btn.dataset.label === m.label());
        });
        byId<HTMLButtonElement>('submit-btn').disabled = inFlight || !m.canSubmit();
    }

    function showHint(text: string): void {
        byId<HTMLSpanElement>('hint').textContent = text;
    }

    // Submission is in-flight-exclusive; a network failure keeps the exact
    // payload around so the retry is idempotent. A wrong-round rejection of
    // that retry means the first attempt actually landed: refetch and move on.
    async function submit(retryOf: BallotBody | null): Promise<void> {
        const m = model!;
        if (inFlight) return;
        const ballot = retryOf ?? m.ballot();
        if (retryOf === null && !m.canSubmit()) return;
        inFlight = true;
        updateControls();
        byId<HTMLButtonElement>('retry-submit-btn').classList.add('hidden');
        try {
            const ack = await api.submitBallot(sessionId, ballot);
            inFlight = false;
            if (ack.completed) renderDone();
            else await loadRound();
        } catch (err) {
            inFlight = false;
            if (err instanceof ApiRejection) {
                if (retryOf !== null && err.code === 'wrong-round') {
                    await loadRound();
                    return;
                }
                // surface the machine-readable reason; selections stay put
                showHint(`${err.code}: ${err.message}`);
                updateControls();
            } else {
                showHint('submission failed to send; retry when ready');
                const retryBtn = byId<HTMLButtonElement>('retry-submit-btn');
                retryBtn.classList.remove('hidden');
                retryBtn.onclick = () => void submit(ballot);
                updateControls();
            }
        }
    }

    // --- keyboard shortcuts ---

    function onKeydown(ev: KeyboardEvent): void {
        if (model === null || root.dataset.state !== 'round') return;
        const target = ev.target as HTMLElement | null;
        if (target && (target.tagName === 'INPUT' || target.tagName === 'TEXTAREA')) return;
        const m = model;
        if (ev.key >= '0' && ev.key <= '9') {
            // digit d toggles the d-th tile of the current page, 0 = tenth
            const local = ev.key === '0' ? 9 : Number(ev.key) - 1;
            const indices = m.pageIndices();
            if (local < indices.length) {
                const outcome = m.toggle(indices[local]);
                showHint(outcome === 'at-limit' ? `select at most ${m.maxSelect}` : '');
                updateControls();
            }
        } else if (ev.key === 'Enter') {
            if (m.canSubmit() && !inFlight) {
                ev.preventDefault();
                void submit(null);
            }
        }
    }

    doc.addEventListener('keydown', onKeydown);
    renderJoin();
    return () => doc.removeEventListener('keydown', onKeydown);
}

function describe(err: unknown): string {
    if (err instanceof ApiRejection) return `${err.code}: ${err.message}`;
    if (err instanceof Error) return err.message;
    return String(err);
}
