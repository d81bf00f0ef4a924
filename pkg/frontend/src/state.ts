/** Ordered top-K selection entered by clicking figure cards.
 *
 * Clicking an unselected card appends it as the next rank; clicking a
 * selected card removes it and closes the gap, so the list always holds
 * distinct ids in pick order.  Submission is possible only at exactly the
 * required size.
 */

export class SelectionState {
  private picks: string[] = [];

  constructor(public readonly requiredSize: number) {
    if (requiredSize < 1) {
      throw new Error("requiredSize must be >= 1");
    }
  }

  /** Current ranking, rank 1 first. */
  selection(): readonly string[] {
    return this.picks.slice();
  }

  /** 1-based rank of a figure, or null when unselected. */
  rankOf(figureId: string): number | null {
    const index = this.picks.indexOf(figureId);
    return index === -1 ? null : index + 1;
  }

  /**
   * Toggle a card.  Returns true when the click changed the selection;
   * a click beyond capacity on an unselected card is ignored.
   */
  toggle(figureId: string): boolean {
    const index = this.picks.indexOf(figureId);
    if (index !== -1) {
      this.picks.splice(index, 1);
      return true;
    }
    if (this.picks.length >= this.requiredSize) {
      return false;
    }
    this.picks.push(figureId);
    return true;
  }

  canSubmit(): boolean {
    return this.picks.length === this.requiredSize;
  }

  clear(): void {
    this.picks = [];
  }

  /** Seed the selection from a prior annotation (latest-wins resubmission). */
  prefill(ranking: readonly string[]): void {
    const distinct = [...new Set(ranking)];
    this.picks = distinct.slice(0, this.requiredSize);
  }
}
