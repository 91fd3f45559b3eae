/** What-if query de-duplication and staleness control.
 *
 * Hover streams fire faster than the server answers.  Identical in-flight
 * requests are coalesced by key, and responses that arrive after a newer
 * query has been issued are dropped by sequence number so the readout never
 * regresses to a stale point.
 */

export class QueryQueue<T> {
  private inFlight = new Map<string, Promise<T>>();
  private issued = 0;
  private applied = 0;

  constructor(private readonly run: (key: string) => Promise<T>) {}

  /** Launch (or join) the request for `key`; resolve with null when stale. */
  async submit(key: string): Promise<T | null> {
    const seq = ++this.issued;
    let promise = this.inFlight.get(key);
    if (!promise) {
      promise = this.run(key).finally(() => {
        this.inFlight.delete(key);
      });
      this.inFlight.set(key, promise);
    }
    const value = await promise;
    if (seq < this.applied) return null; // a newer response already landed
    this.applied = seq;
    return value;
  }

  get inFlightCount(): number {
    return this.inFlight.size;
  }
}

export function pointKey(u0: number, xi: number): string {
  return `${u0}|${xi}`;
}
