/**
 * Backend selection: prefer the wasm backend (XNNPACK, much faster for the
 * many small ops this model runs), fall back to the pure-JS cpu backend.
 * Both are single-threaded here and bit-reproducible run to run.
 */

import * as tf from "@tensorflow/tfjs";

let initialized: Promise<string> | null = null;

export function initBackend(prefer = "wasm"): Promise<string> {
  if (!initialized) {
    initialized = (async () => {
      if (prefer === "wasm") {
        try {
          await import("@tensorflow/tfjs-backend-wasm");
          if (await tf.setBackend("wasm")) {
            await tf.ready();
            return "wasm";
          }
        } catch {
          // fall through to cpu
        }
      }
      await tf.setBackend("cpu");
      await tf.ready();
      return "cpu";
    })();
  }
  return initialized;
}
