//! Blocking JSON-over-HTTP client shared by the external service ports.

use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::Serialize;

/// Counting semaphore bounding in-flight requests.
#[derive(Debug)]
pub(crate) struct InFlight {
    limit: usize,
    used: Mutex<usize>,
    freed: Condvar,
}

pub(crate) struct Permit<'a>(&'a InFlight);

impl InFlight {
    pub(crate) fn new(limit: usize) -> Self {
        InFlight {
            limit: limit.max(1),
            used: Mutex::new(0),
            freed: Condvar::new(),
        }
    }

    pub(crate) fn acquire(&self) -> Permit<'_> {
        let mut used = self.used.lock().expect("in-flight lock");
        while *used >= self.limit {
            used = self.freed.wait(used).expect("in-flight lock");
        }
        *used += 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.used.lock().expect("in-flight lock") -= 1;
        self.0.freed.notify_one();
    }
}

#[derive(Debug)]
pub(crate) struct JsonClient {
    url: String,
    agent: ureq::Agent,
    max_retries: u32,
    inflight: InFlight,
}

impl JsonClient {
    pub(crate) fn new(url: &str, timeout: Duration, max_retries: u32, max_in_flight: usize) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(true)
            .build()
            .into();
        JsonClient {
            url: url.to_string(),
            agent,
            max_retries,
            inflight: InFlight::new(max_in_flight),
        }
    }

    pub(crate) fn url(&self) -> &str {
        &self.url
    }

    /// POSTs `body`, retrying transport/status failures up to `max_retries`.
    pub(crate) fn post<Req: Serialize, Resp: DeserializeOwned>(&self, body: &Req) -> Result<Resp, String> {
        let _permit = self.inflight.acquire();
        let mut last = String::new();
        for _ in 0..=self.max_retries {
            match self.agent.post(&self.url).send_json(body) {
                Ok(mut resp) => match resp.body_mut().read_json::<Resp>() {
                    Ok(v) => return Ok(v),
                    Err(e) => last = format!("bad response body: {e}"),
                },
                Err(e) => last = e.to_string(),
            }
        }
        Err(last)
    }
}
