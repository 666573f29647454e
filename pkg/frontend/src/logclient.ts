/**
 * Ships action-trace entries to POST /log. A failed delivery is retried once;
 * if it still fails the entry is queued locally, in order, and the queue is
 * flushed ahead of the next entry. Exactly one persisted line per action when
 * the transport is healthy.
 */

export type Transport = (body: string) => Promise<boolean>;

export function fetchTransport(logUrl: string): Transport {
  return async (body: string) => {
    try {
      const response = await fetch(logUrl, {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body,
      });
      return response.ok || response.status === 204;
    } catch {
      return false;
    }
  };
}

export class LogClient {
  private queue: string[] = [];
  private shipping: Promise<void> = Promise.resolve();

  constructor(private transport: Transport) {}

  get pending(): number {
    return this.queue.length;
  }

  /** Queue the entry and try to flush; ordering is preserved across failures. */
  send(entry: unknown): Promise<void> {
    this.queue.push(JSON.stringify(entry));
    this.shipping = this.shipping.then(() => this.flush());
    return this.shipping;
  }

  private async flush(): Promise<void> {
    while (this.queue.length > 0) {
      const head = this.queue[0]!;
      if (!(await this.deliver(head))) return; // head stays queued for later
      this.queue.shift();
    }
  }

  private async deliver(body: string): Promise<boolean> {
    if (await this.transport(body)) return true;
    return this.transport(body); // one retry, then give up for now
  }
}
