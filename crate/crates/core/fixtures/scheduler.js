// Tiny job scheduler used by the golden tests.
const DEFAULT_RETRIES = 3;

class JobQueue {
  constructor(limit) {
    this.limit = limit;
    this.items = [];
  }

  push(job) {
    if (this.items.length >= this.limit) {
      throw new Error("queue full");
    }
    this.items.push(job);
  }
}

function backoffDelay(attempt, baseMs) {
  const capped = Math.min(attempt, 6);
  const jitter = Math.floor(Math.random() * baseMs);
  // exponential growth with jitter
  return baseMs * 2 ** capped + jitter;
}

async function runWithRetry(job, retries = DEFAULT_RETRIES) {
  let attempt = 0;
  while (true) {
    try {
      return await job.run();
    } catch (err) {
      attempt += 1;
      if (attempt > retries) {
        throw err;
      }
      await sleep(backoffDelay(attempt, 100));
    }
  }
}

const sleep = (ms) => new Promise((resolve) => setTimeout(resolve, ms));

function summarize(results) {
  const ok = results.filter((r) => r.ok).length;
  const failed = results.length - ok;
  return { ok, failed, total: results.length };
}

module.exports = { JobQueue, runWithRetry, summarize };
