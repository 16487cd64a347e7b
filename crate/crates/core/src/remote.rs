//! Blocking JSON-over-HTTP plumbing shared by the external embedder, tag
//! predictor and query generator clients.

use std::sync::{Condvar, Mutex};
use std::thread;
use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};

/// Counting semaphore bounding in-flight requests.
pub(crate) struct Limiter {
    available: Mutex<usize>,
    cv: Condvar,
}

pub(crate) struct Permit<'a>(&'a Limiter);

impl Limiter {
    pub(crate) fn new(limit: usize) -> Self {
        Limiter { available: Mutex::new(limit.max(1)), cv: Condvar::new() }
    }

    pub(crate) fn acquire(&self) -> Permit<'_> {
        let mut n = self.available.lock().unwrap_or_else(|e| e.into_inner());
        while *n == 0 {
            n = self.cv.wait(n).unwrap_or_else(|e| e.into_inner());
        }
        *n -= 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        let mut n = self.0.available.lock().unwrap_or_else(|e| e.into_inner());
        *n += 1;
        self.0.cv.notify_one();
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct RetryPolicy {
    pub attempts: u32,
    pub initial_backoff: Duration,
}

impl RetryPolicy {
    pub(crate) const DEFAULT: RetryPolicy = RetryPolicy { attempts: 3, initial_backoff: Duration::from_millis(100) };
    pub(crate) const ONCE: RetryPolicy = RetryPolicy { attempts: 1, initial_backoff: Duration::ZERO };
}

pub(crate) struct JsonClient {
    agent: ureq::Agent,
    base: String,
    limiter: Limiter,
    retry: RetryPolicy,
}

impl JsonClient {
    pub(crate) fn new(base: &str, timeout: Duration, max_in_flight: usize, retry: RetryPolicy) -> Self {
        let config = ureq::Agent::config_builder().timeout_global(Some(timeout)).build();
        JsonClient {
            agent: ureq::Agent::new_with_config(config),
            base: base.trim_end_matches('/').to_string(),
            limiter: Limiter::new(max_in_flight),
            retry,
        }
    }

    pub(crate) fn post<B: Serialize, R: DeserializeOwned>(&self, path: &str, body: &B) -> Result<R> {
        let url = format!("{}/{}", self.base, path.trim_start_matches('/'));
        let _permit = self.limiter.acquire();
        let mut backoff = self.retry.initial_backoff;
        let mut last = String::new();
        for attempt in 1..=self.retry.attempts {
            match self.agent.post(&url).send_json(body) {
                Ok(mut resp) => match resp.body_mut().read_json::<R>() {
                    Ok(r) => return Ok(r),
                    Err(e) => last = format!("bad response from {url}: {e}"),
                },
                Err(e) => last = format!("{url}: {e}"),
            }
            if attempt < self.retry.attempts {
                tracing::debug!(attempt, %last, "retrying");
                thread::sleep(backoff);
                backoff *= 2;
            }
        }
        Err(Error::Provider { attempts: self.retry.attempts, message: last })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::Arc;

    #[test]
    fn limiter_bounds_concurrency() {
        let limiter = Arc::new(Limiter::new(2));
        let live = Arc::new(AtomicUsize::new(0));
        let peak = Arc::new(AtomicUsize::new(0));
        let handles: Vec<_> = (0..8)
            .map(|_| {
                let (limiter, live, peak) = (limiter.clone(), live.clone(), peak.clone());
                thread::spawn(move || {
                    let _p = limiter.acquire();
                    let now = live.fetch_add(1, Ordering::SeqCst) + 1;
                    peak.fetch_max(now, Ordering::SeqCst);
                    thread::sleep(Duration::from_millis(5));
                    live.fetch_sub(1, Ordering::SeqCst);
                })
            })
            .collect();
        for h in handles {
            h.join().unwrap();
        }
        assert!(peak.load(Ordering::SeqCst) <= 2);
    }

    #[test]
    fn unreachable_endpoint_exhausts_retries() {
        // Port 9 on localhost is closed in the test environment.
        let policy = RetryPolicy { attempts: 3, initial_backoff: Duration::from_millis(1) };
        let client = JsonClient::new("http://127.0.0.1:9", Duration::from_millis(200), 1, policy);
        let err = client.post::<_, serde_json::Value>("embed", &serde_json::json!({})).unwrap_err();
        assert!(matches!(err, Error::Provider { attempts: 3, .. }), "{err}");
    }
}
