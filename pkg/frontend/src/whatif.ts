/** What-if request controller: keeps at most one /predict request in flight
 * and discards stale responses by sequence number. */

import { ApiClient, WhatIfRequest, WhatIfResponse } from "./api.js";

export interface Selection {
  districts: Set<string>;
  edges: Set<string>;
  reduction: number;
}

export function toRequest(sel: Selection): WhatIfRequest {
  return {
    districts: [...sel.districts].sort(),
    edges: [...sel.edges].sort(),
    reduction: sel.reduction,
  };
}

export class WhatIfController {
  private seq = 0;
  private inFlight = false;
  private pending: Selection | null = null;

  constructor(
    private readonly client: ApiClient,
    private readonly onResult: (res: WhatIfResponse, seq: number) => void,
    private readonly onError: (err: unknown) => void = () => {},
  ) {}

  /** Latest-wins: if a request is already in flight, remember this selection
   * and send it when the current one settles. */
  submit(sel: Selection): number {
    const mySeq = ++this.seq;
    if (this.inFlight) {
      this.pending = sel;
      return mySeq;
    }
    void this.send(sel, mySeq);
    return mySeq;
  }

  private async send(sel: Selection, seq: number): Promise<void> {
    this.inFlight = true;
    try {
      const res = await this.client.predict(toRequest(sel));
      if (seq === this.seq) this.onResult(res, seq);
    } catch (err) {
      if (seq === this.seq) this.onError(err);
    } finally {
      this.inFlight = false;
      if (this.pending !== null) {
        const next = this.pending;
        this.pending = null;
        void this.send(next, this.seq);
      }
    }
  }
}
