// Round view-model: all selection/label/paging state and its invariants,
// kept free of DOM so the rules are testable in isolation. The DOM layer
// renders from this and never tracks selection state of its own.

import type { BallotBody, RoundPayload } from './api.js';

// How many tiles per page. The server can hand out hundreds of candidates
// in one round; a bounded page keeps the grid scannable. Size is a UI
// choice, not a protocol value.
export const PAGE_SIZE = 24;

export type ToggleOutcome = 'added' | 'removed' | 'at-limit' | 'out-of-range';

export class RoundModel {
    readonly setId: string;
    readonly nCandidates: number;
    readonly maxSelect: number;
    readonly labelQuestion: string | null;
    readonly allowedLabels: string[] | null;
    readonly candidateUrls: string[];
    readonly lrUrl: string;
    readonly roundIndex: number;
    readonly rounds: number;
    readonly pageSize: number;

    private selected = new Set<number>();
    private labelValue: string | null = null;
    page = 0;

    constructor(round: RoundPayload, pageSize: number = PAGE_SIZE) {
        this.setId = round.set_id;
        this.candidateUrls = round.candidates.slice();
        this.nCandidates = round.candidates.length;
        this.maxSelect = round.max_select;
        this.labelQuestion = round.label_question;
        this.allowedLabels = round.allowed_labels ? round.allowed_labels.slice() : null;
        this.lrUrl = round.lr_image;
        this.roundIndex = round.round_index;
        this.rounds = round.rounds;
        this.pageSize = pageSize;
    }

    // --- selection ---

    /** Toggle one display position. Never lets the selection exceed
     *  max_select: an add past the limit reports 'at-limit' and changes
     *  nothing. The server enforces the same rule; this is the advisory
     *  copy. */
    toggle(index: number): ToggleOutcome {
        if (!Number.isInteger(index) || index < 0 || index >= this.nCandidates) {
            return 'out-of-range';
        }
        if (this.selected.has(index)) {
            this.selected.delete(index);
            return 'removed';
        }
        if (this.selected.size >= this.maxSelect) {
            return 'at-limit';
        }
        this.selected.add(index);
        return 'added';
    }

    isSelected(index: number): boolean {
        return this.selected.has(index);
    }

    selectionCount(): number {
        return this.selected.size;
    }

    selections(): number[] {
        return Array.from(this.selected).sort((a, b) => a - b);
    }

    // --- label ---

    /** Set the label answer. Ignored for select-only rounds so the model
     *  can never produce an unexpected-label ballot. */
    setLabel(value: string | null): void {
        if (this.labelQuestion === null) return;
        const trimmed = value === null ? null : value.trim();
        this.labelValue = trimmed === '' ? null : trimmed;
    }

    label(): string | null {
        return this.labelValue;
    }

    // --- submit gating ---

    /** At least one pick, and a label exactly when the round asks for one. */
    canSubmit(): boolean {
        if (this.selected.size < 1) return false;
        if (this.labelQuestion !== null) return this.labelValue !== null;
        return true;
    }

    ballot(): BallotBody {
        return {
            selections: this.selections(),
            label: this.labelValue,
            set_id: this.setId,
        };
    }

    // --- paging (selection state is global; pages only scope the view) ---

    pageCount(): number {
        return Math.max(1, Math.ceil(this.nCandidates / this.pageSize));
    }

    /** Display indices visible on the current page. */
    pageIndices(): number[] {
        const start = this.page * this.pageSize;
        const end = Math.min(start + this.pageSize, this.nCandidates);
        const out: number[] = [];
        for (let i = start; i < end; i++) out.push(i);
        return out;
    }

    goToPage(p: number): void {
        if (p >= 0 && p < this.pageCount()) this.page = p;
    }

    nextPage(): void {
        this.goToPage(this.page + 1);
    }

    prevPage(): void {
        this.goToPage(this.page - 1);
    }
}
