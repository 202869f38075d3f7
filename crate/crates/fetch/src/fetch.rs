use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use commex_core::mrt::{Container, MrtReader};
use serde::Serialize;
use thiserror::Error;

use crate::plan::PlannedFile;

#[derive(Debug, Error)]
pub enum TransportError {
    #[error("HTTP status {0}")]
    Status(u16),
    #[error("{0}")]
    Network(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Source of remote bytes. Implementations stream the body into `sink`.
pub trait Transport: Sync {
    fn get(&self, url: &str, sink: &mut dyn Write) -> Result<u64, TransportError>;
}

/// Blocking HTTP(S) client.
pub struct HttpTransport {
    agent: ureq::Agent,
}

impl HttpTransport {
    pub fn new(timeout: Duration) -> Self {
        let agent = ureq::AgentBuilder::new()
            .timeout(timeout)
            .user_agent(concat!("commex/", env!("CARGO_PKG_VERSION")))
            .build();
        HttpTransport { agent }
    }
}

impl Default for HttpTransport {
    fn default() -> Self {
        HttpTransport::new(Duration::from_secs(300))
    }
}

impl Transport for HttpTransport {
    fn get(&self, url: &str, sink: &mut dyn Write) -> Result<u64, TransportError> {
        let resp = self.agent.get(url).call().map_err(|e| match e {
            ureq::Error::Status(code, _) => TransportError::Status(code),
            ureq::Error::Transport(t) => TransportError::Network(t.to_string()),
        })?;
        Ok(io::copy(&mut resp.into_reader(), sink)?)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub initial_backoff: Duration,
    pub max_backoff: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy { max_attempts: 3, initial_backoff: Duration::from_secs(2), max_backoff: Duration::from_secs(60) }
    }
}

impl RetryPolicy {
    /// Wait before attempt `attempt` (1-based; the first attempt has none).
    pub fn backoff(&self, attempt: u32) -> Duration {
        if attempt <= 1 {
            return Duration::ZERO;
        }
        let factor = 1u32.checked_shl(attempt - 2).unwrap_or(u32::MAX);
        self.initial_backoff.saturating_mul(factor).min(self.max_backoff)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FetchOptions {
    pub parallelism: usize,
    pub retry: RetryPolicy,
    /// Never touch the network; missing files are reported as failures.
    pub offline: bool,
}

impl Default for FetchOptions {
    fn default() -> Self {
        FetchOptions { parallelism: 4, retry: RetryPolicy::default(), offline: false }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum FetchStatus {
    Cached,
    Downloaded { attempts: u32, bytes: u64 },
    Failed { attempts: u32, error: String },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FetchOutcome {
    pub url: String,
    pub path: PathBuf,
    #[serde(flatten)]
    pub status: FetchStatus,
}

/// Per-file outcomes in plan order.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct FetchReport {
    pub outcomes: Vec<FetchOutcome>,
}

impl FetchReport {
    pub fn hits(&self) -> usize {
        self.count(|s| matches!(s, FetchStatus::Cached))
    }

    pub fn downloaded(&self) -> usize {
        self.count(|s| matches!(s, FetchStatus::Downloaded { .. }))
    }

    pub fn failed(&self) -> usize {
        self.count(|s| matches!(s, FetchStatus::Failed { .. }))
    }

    fn count(&self, f: impl Fn(&FetchStatus) -> bool) -> usize {
        self.outcomes.iter().filter(|o| f(&o.status)).count()
    }

    pub fn failures(&self) -> impl Iterator<Item = &FetchOutcome> {
        self.outcomes.iter().filter(|o| matches!(o.status, FetchStatus::Failed { .. }))
    }

    /// Local paths of every file now present in the cache.
    pub fn available(&self) -> Vec<PathBuf> {
        self.outcomes
            .iter()
            .filter(|o| !matches!(o.status, FetchStatus::Failed { .. }))
            .map(|o| o.path.clone())
            .collect()
    }
}

#[derive(Debug, Error)]
enum AttemptError {
    #[error("download failed: {0}")]
    Transport(#[from] TransportError),
    #[error("downloaded file is not MRT: {0}")]
    Probe(String),
    #[error("cache write failed: {0}")]
    Cache(#[from] io::Error),
}

/// First record must decode, which also exercises the container.
fn probe(path: &Path) -> Result<(), AttemptError> {
    let mut reader = MrtReader::new(BufReader::new(File::open(path)?), Container::Detect)
        .map_err(|e| AttemptError::Probe(e.to_string()))?;
    match reader.next() {
        Some(Ok(_)) => Ok(()),
        Some(Err(e)) => Err(AttemptError::Probe(e.to_string())),
        None => Err(AttemptError::Probe("file is empty".into())),
    }
}

fn attempt(transport: &dyn Transport, url: &str, dest: &Path) -> Result<u64, AttemptError> {
    let dir = dest.parent().unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    let tmp = tempfile::Builder::new().prefix(".partial-").tempfile_in(dir)?;
    let mut w = BufWriter::new(tmp);
    let bytes = transport.get(url, &mut w)?;
    let tmp = w.into_inner().map_err(|e| e.into_error())?;
    tmp.as_file().sync_all()?;
    probe(tmp.path())?;
    tmp.persist(dest).map_err(|e| e.error)?;
    Ok(bytes)
}

fn fetch_one(file: &PlannedFile, cache_dir: &Path, transport: &dyn Transport, opts: &FetchOptions) -> FetchOutcome {
    let path = cache_dir.join(&file.local_path);
    let outcome = |status| FetchOutcome { url: file.url.clone(), path: path.clone(), status };
    if path.is_file() {
        return outcome(FetchStatus::Cached);
    }
    if opts.offline {
        return outcome(FetchStatus::Failed { attempts: 0, error: "not cached and offline".into() });
    }
    let attempts = opts.retry.max_attempts.max(1);
    let mut last = String::new();
    for n in 1..=attempts {
        std::thread::sleep(opts.retry.backoff(n));
        match attempt(transport, &file.url, &path) {
            Ok(bytes) => return outcome(FetchStatus::Downloaded { attempts: n, bytes }),
            Err(e) => last = e.to_string(),
        }
    }
    outcome(FetchStatus::Failed { attempts, error: last })
}

/// Bring every planned file into `cache_dir`. Files already present are
/// left untouched; failures are recorded per file and never abort the
/// batch.
pub fn fetch(plan: &[PlannedFile], cache_dir: &Path, transport: &dyn Transport, opts: &FetchOptions) -> FetchReport {
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<FetchOutcome>>> = Mutex::new(vec![None; plan.len()]);
    let workers = opts.parallelism.clamp(1, plan.len().max(1));
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(file) = plan.get(i) else { break };
                let o = fetch_one(file, cache_dir, transport, opts);
                slots.lock().expect("no worker panics while holding the lock")[i] = Some(o);
            });
        }
    });
    let outcomes =
        slots.into_inner().expect("workers joined").into_iter().map(|o| o.expect("every slot filled")).collect();
    FetchReport { outcomes }
}
