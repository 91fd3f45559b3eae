import { describe, expect, it } from "vitest";

import { QueryQueue, pointKey } from "../src/queryQueue";

function deferred<T>() {
  let resolve!: (v: T) => void;
  const promise = new Promise<T>((res) => {
    resolve = res;
  });
  return { promise, resolve };
}

describe("query queue", () => {
  it("coalesces identical in-flight requests", async () => {
    let calls = 0;
    const gate = deferred<string>();
    const queue = new QueryQueue<string>(async () => {
      calls++;
      return gate.promise;
    });
    const a = queue.submit("k");
    const b = queue.submit("k");
    expect(queue.inFlightCount).toBe(1);
    gate.resolve("value");
    expect(await a).toBe("value");
    expect(await b).toBe("value");
    expect(calls).toBe(1);
  });

  it("drops responses that lost the race to a newer query", async () => {
    const gates = new Map<string, { promise: Promise<string>; resolve: (v: string) => void }>();
    const queue = new QueryQueue<string>((key) => {
      const d = deferred<string>();
      gates.set(key, d);
      return d.promise;
    });
    const slow = queue.submit("first");
    const fast = queue.submit("second");
    gates.get("second")!.resolve("second-answer");
    expect(await fast).toBe("second-answer");
    gates.get("first")!.resolve("first-answer");
    expect(await slow).toBeNull(); // stale: a newer response already applied
  });

  it("allows later distinct queries after settlement", async () => {
    const queue = new QueryQueue<number>(async (key) => Number(key));
    expect(await queue.submit("1")).toBe(1);
    expect(await queue.submit("2")).toBe(2);
    expect(queue.inFlightCount).toBe(0);
  });

  it("builds stable point keys", () => {
    expect(pointKey(22500, 0.03)).toBe("22500|0.03");
  });
});
