//! The byte-moving layer under the providers: one request in, one JSON
//! response out.

use std::sync::atomic::{AtomicUsize, Ordering};

use codemix_core::providers::wire::ProviderRequest;
use codemix_core::ProviderError;
use serde_json::Value;

pub trait Transport: Send + Sync {
    /// Stable name of the backend; part of every cache key.
    fn id(&self) -> &str;

    fn call(&self, request: &ProviderRequest) -> Result<Value, ProviderError>;
}

/// A transport that must never be reached. Replay runs sit on top of it so a
/// cache miss cannot silently turn into network traffic.
#[derive(Debug)]
pub struct Unreachable {
    id: String,
    calls: AtomicUsize,
}

impl Unreachable {
    pub fn new(id: &str) -> Self {
        Unreachable {
            id: id.into(),
            calls: AtomicUsize::new(0),
        }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl Transport for Unreachable {
    fn id(&self) -> &str {
        &self.id
    }

    fn call(&self, request: &ProviderRequest) -> Result<Value, ProviderError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        Err(ProviderError::Offline(format!(
            "{} request to `{}`",
            request.task(),
            self.id
        )))
    }
}

impl<T: Transport + ?Sized> Transport for std::sync::Arc<T> {
    fn id(&self) -> &str {
        (**self).id()
    }

    fn call(&self, request: &ProviderRequest) -> Result<Value, ProviderError> {
        (**self).call(request)
    }
}
