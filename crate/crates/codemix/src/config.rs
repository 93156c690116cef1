//! Provider configuration: named backends and a task × language-pair
//! routing table.
//!
//! ```json
//! {
//!   "backends": {
//!     "gpt": {"kind": "openai-chat", "endpoint": "https://api.openai.com/v1",
//!             "model": "gpt-4", "auth_env": "OPENAI_API_KEY"},
//!     "use": {"kind": "generic-json", "endpoint": "http://localhost:8080"}
//!   },
//!   "routes": {"embed": {"*": "use"}, "lid": {"en-bn": "gpt", "*": "use"}},
//!   "default": "gpt"
//! }
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use anyhow::{anyhow, bail, Context};
use codemix_core::providers::wire::{ProviderRequest, Task};
use codemix_core::{LanguagePair, ProviderError};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::cache::{CacheMode, Cached, RecordStore};
use crate::http::{HttpBackend, HttpKind, HttpSettings};
use crate::tables::MockTables;
use crate::transport::{Transport, Unreachable};
use crate::wire::WireProviders;

/// Route key matching every language pair.
pub const ANY_PAIR: &str = "*";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BackendKind {
    GenericJson,
    OpenaiChat,
    OpenaiEmbeddings,
    Mock,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackendConfig {
    pub kind: BackendKind,
    #[serde(default)]
    pub endpoint: Option<String>,
    #[serde(default)]
    pub model: Option<String>,
    #[serde(default)]
    pub auth_env: Option<String>,
    #[serde(default)]
    pub rate_limit_per_sec: Option<f64>,
    #[serde(default = "default_in_flight")]
    pub max_in_flight: usize,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
    #[serde(default = "default_retries")]
    pub retries: u32,
    #[serde(default = "default_backoff")]
    pub retry_backoff_ms: u64,
    /// Mock table file, relative to the config file.
    #[serde(default)]
    pub tables: Option<PathBuf>,
}

fn default_in_flight() -> usize {
    4
}

fn default_timeout() -> u64 {
    60
}

fn default_retries() -> u32 {
    2
}

fn default_backoff() -> u64 {
    500
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProviderConfig {
    pub backends: BTreeMap<String, BackendConfig>,
    #[serde(default)]
    pub routes: BTreeMap<Task, BTreeMap<String, String>>,
    /// Backend for tasks without a route.
    #[serde(default)]
    pub default: Option<String>,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl ProviderConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut config: ProviderConfig =
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        config.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        let known = |name: &str| -> anyhow::Result<()> {
            if self.backends.contains_key(name) {
                Ok(())
            } else {
                Err(anyhow!("route refers to unknown backend `{name}`"))
            }
        };
        for (task, by_pair) in &self.routes {
            for (pair, backend) in by_pair {
                if pair != ANY_PAIR {
                    pair.parse::<LanguagePair>()
                        .with_context(|| format!("route for {task}"))?;
                }
                known(backend)?;
            }
        }
        if let Some(d) = &self.default {
            known(d)?;
        }
        for (name, b) in &self.backends {
            match b.kind {
                BackendKind::Mock if b.tables.is_none() => bail!("mock backend `{name}` needs `tables`"),
                BackendKind::Mock => {}
                _ if b.endpoint.is_none() => bail!("backend `{name}` needs an `endpoint`"),
                BackendKind::OpenaiChat | BackendKind::OpenaiEmbeddings if b.model.is_none() => {
                    bail!("backend `{name}` needs a `model`")
                }
                _ => {}
            }
        }
        Ok(())
    }

    fn build_backend(&self, name: &str, b: &BackendConfig) -> anyhow::Result<Arc<dyn Transport>> {
        let http = |kind| {
            let settings = HttpSettings {
                endpoint: b.endpoint.clone().unwrap_or_default(),
                model: b.model.clone(),
                auth_env: b.auth_env.clone(),
                rate_limit_per_sec: b.rate_limit_per_sec,
                max_in_flight: b.max_in_flight,
                timeout: Duration::from_secs(b.timeout_secs),
                retries: b.retries,
                retry_backoff: Duration::from_millis(b.retry_backoff_ms),
            };
            Arc::new(HttpBackend::new(name, kind, settings)) as Arc<dyn Transport>
        };
        Ok(match b.kind {
            BackendKind::GenericJson => http(HttpKind::GenericJson),
            BackendKind::OpenaiChat => http(HttpKind::OpenAiChat),
            BackendKind::OpenaiEmbeddings => http(HttpKind::OpenAiEmbeddings),
            BackendKind::Mock => {
                let path = self.base_dir.join(b.tables.as_ref().expect("validated"));
                Arc::new(MockTables::load(&path)?.into_local(name))
            }
        })
    }
}

/// Dispatches each request to the backend routed for its task and pair.
pub struct Router {
    routes: BTreeMap<(Task, String), Arc<dyn Transport>>,
    default: Option<Arc<dyn Transport>>,
}

impl Router {
    fn route(&self, request: &ProviderRequest) -> Option<&Arc<dyn Transport>> {
        let task = request.task();
        let exact = request.pair().and_then(|p| self.routes.get(&(task, p)));
        exact
            .or_else(|| self.routes.get(&(task, ANY_PAIR.to_string())))
            .or(self.default.as_ref())
    }
}

impl Transport for Router {
    fn id(&self) -> &str {
        "router"
    }

    fn call(&self, request: &ProviderRequest) -> Result<Value, ProviderError> {
        match self.route(request) {
            Some(t) => t.call(request),
            None => Err(ProviderError::InvalidRequest(format!(
                "no backend configured for {} requests",
                request.task()
            ))),
        }
    }
}

/// Configured providers with their cache.
pub struct Session {
    wire: WireProviders<Router>,
    store: Option<Arc<RecordStore>>,
    mode: CacheMode,
    offline: Vec<Arc<Unreachable>>,
}

impl Session {
    /// Builds every backend. In replay mode the backends are replaced by
    /// transports that refuse all traffic, so no configured endpoint (nor
    /// credential) is ever used.
    pub fn open(config: &ProviderConfig, cache: Option<&Path>, mode: CacheMode) -> anyhow::Result<Self> {
        let store = match (cache, mode) {
            (_, CacheMode::Live) => None,
            (Some(path), mode) => Some(Arc::new(RecordStore::open(path, mode)?)),
            (None, mode) => bail!("{mode:?} mode needs a cache file"),
        };
        let mut offline = Vec::new();
        let mut built: BTreeMap<&str, Arc<dyn Transport>> = BTreeMap::new();
        for (name, b) in &config.backends {
            let inner: Arc<dyn Transport> = if mode == CacheMode::Replay {
                let u = Arc::new(Unreachable::new(name));
                offline.push(u.clone());
                u
            } else {
                config.build_backend(name, b)?
            };
            let t: Arc<dyn Transport> = match &store {
                Some(store) => Arc::new(Cached::new(inner, store.clone(), mode)),
                None => inner,
            };
            built.insert(name, t);
        }
        let mut routes = BTreeMap::new();
        for (task, by_pair) in &config.routes {
            for (pair, backend) in by_pair {
                routes.insert((*task, pair.clone()), built[backend.as_str()].clone());
            }
        }
        let default = config.default.as_deref().map(|d| built[d].clone());
        Ok(Session {
            wire: WireProviders::new(Router { routes, default }),
            store,
            mode,
            offline,
        })
    }

    pub fn providers(&self) -> codemix_core::Providers<'_> {
        self.wire.providers()
    }

    pub fn mode(&self) -> CacheMode {
        self.mode
    }

    pub fn store(&self) -> Option<&RecordStore> {
        self.store.as_deref()
    }

    /// Calls that reached a refusing transport; always 0 unless the cache
    /// layer is broken.
    pub fn offline_calls(&self) -> usize {
        self.offline.iter().map(|u| u.calls()).sum()
    }
}
