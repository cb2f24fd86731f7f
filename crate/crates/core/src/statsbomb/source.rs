//! File access for the open-data layout: local directories and remote
//! bases with an on-disk cache.
//!
//! The cache mirrors the repository's relative paths exactly, so a
//! pre-downloaded tree is interchangeable with a remote base plus warm
//! cache.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Duration;

use super::DataError;

pub const DEFAULT_DATA_BASE: &str =
    "https://raw.githubusercontent.com/statsbomb/open-data/master/data";

/// Env var overriding the data base (URL or local directory).
pub const ENV_DATA_BASE: &str = "XB_DATA_BASE";
/// Env var overriding the cache directory for remote bases.
pub const ENV_CACHE_DIR: &str = "XB_CACHE_DIR";

/// Transport used by remote sources. Abstracted so tests can count and
/// fake network traffic.
pub trait RemoteFetch: Send + Sync {
    /// Ok(None) means the resource does not exist (HTTP 404).
    fn get(&self, url: &str) -> Result<Option<Vec<u8>>, String>;
}

pub struct HttpFetcher {
    client: reqwest::blocking::Client,
}

impl HttpFetcher {
    pub fn new() -> Self {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(120))
            .build()
            .expect("http client");
        HttpFetcher { client }
    }
}

impl Default for HttpFetcher {
    fn default() -> Self {
        Self::new()
    }
}

impl RemoteFetch for HttpFetcher {
    fn get(&self, url: &str) -> Result<Option<Vec<u8>>, String> {
        let resp = self.client.get(url).send().map_err(|e| e.to_string())?;
        if resp.status() == reqwest::StatusCode::NOT_FOUND {
            return Ok(None);
        }
        if !resp.status().is_success() {
            return Err(format!("status {}", resp.status()));
        }
        let bytes = resp.bytes().map_err(|e| e.to_string())?;
        Ok(Some(bytes.to_vec()))
    }
}

/// Where open-data files come from.
#[derive(Clone)]
pub enum DataSource {
    Local(PathBuf),
    Remote {
        base_url: String,
        cache_dir: PathBuf,
        fetcher: Arc<dyn RemoteFetch>,
        downloads: Arc<AtomicU64>,
    },
}

impl std::fmt::Debug for DataSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DataSource::Local(p) => f.debug_tuple("Local").field(p).finish(),
            DataSource::Remote { base_url, cache_dir, .. } => f
                .debug_struct("Remote")
                .field("base_url", base_url)
                .field("cache_dir", cache_dir)
                .finish(),
        }
    }
}

impl DataSource {
    pub fn local(dir: impl Into<PathBuf>) -> DataSource {
        DataSource::Local(dir.into())
    }

    pub fn remote(base_url: impl Into<String>, cache_dir: impl Into<PathBuf>) -> DataSource {
        DataSource::remote_with(base_url, cache_dir, Arc::new(HttpFetcher::new()))
    }

    pub fn remote_with(
        base_url: impl Into<String>,
        cache_dir: impl Into<PathBuf>,
        fetcher: Arc<dyn RemoteFetch>,
    ) -> DataSource {
        DataSource::Remote {
            base_url: base_url.into(),
            cache_dir: cache_dir.into(),
            fetcher,
            downloads: Arc::new(AtomicU64::new(0)),
        }
    }

    /// Resolve a source from an explicit base (directory path or URL),
    /// honoring the `XB_DATA_BASE` / `XB_CACHE_DIR` env overrides.
    pub fn resolve(base: Option<&str>, cache_dir: Option<&Path>) -> DataSource {
        let env_base = std::env::var(ENV_DATA_BASE).ok();
        let base = base
            .map(str::to_string)
            .or(env_base)
            .unwrap_or_else(|| DEFAULT_DATA_BASE.to_string());
        if base.starts_with("http://") || base.starts_with("https://") {
            let cache = cache_dir
                .map(Path::to_path_buf)
                .or_else(|| std::env::var(ENV_CACHE_DIR).ok().map(PathBuf::from))
                .unwrap_or_else(|| PathBuf::from(".xb-cache"));
            DataSource::remote(base, cache)
        } else {
            DataSource::local(PathBuf::from(base))
        }
    }

    /// Remote files fetched over the network so far (cache misses).
    pub fn download_count(&self) -> u64 {
        match self {
            DataSource::Local(_) => 0,
            DataSource::Remote { downloads, .. } => downloads.load(Ordering::Relaxed),
        }
    }
}

/// Read one file by its open-data relative path, e.g.
/// `events/3869685.json`. Remote fetches are cached; a warm cache serves
/// repeat reads without touching the network.
pub fn fetch_file(source: &DataSource, relative_path: &str) -> Result<Vec<u8>, DataError> {
    match fetch_optional(source, relative_path)? {
        Some(bytes) => Ok(bytes),
        None => Err(DataError::NotFound { path: relative_path.to_string() }),
    }
}

/// As [`fetch_file`] but absence is `Ok(None)` rather than an error
/// (the 360 feed does not exist for most matches).
pub fn fetch_optional(
    source: &DataSource,
    relative_path: &str,
) -> Result<Option<Vec<u8>>, DataError> {
    match source {
        DataSource::Local(dir) => {
            let path = dir.join(relative_path);
            match fs::read(&path) {
                Ok(bytes) => Ok(Some(bytes)),
                Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
                Err(e) => Err(DataError::Io { path: path.display().to_string(), source: e }),
            }
        }
        DataSource::Remote { base_url, cache_dir, fetcher, downloads } => {
            let cached = cache_dir.join(relative_path);
            match fs::read(&cached) {
                Ok(bytes) => return Ok(Some(bytes)),
                Err(e) if e.kind() == std::io::ErrorKind::NotFound => {}
                Err(e) => {
                    return Err(DataError::Io { path: cached.display().to_string(), source: e })
                }
            }
            let url = format!("{}/{}", base_url.trim_end_matches('/'), relative_path);
            let body = fetcher.get(&url).map_err(|message| DataError::Transport {
                path: relative_path.to_string(),
                message,
            })?;
            let Some(bytes) = body else { return Ok(None) };
            downloads.fetch_add(1, Ordering::Relaxed);
            write_cache_atomic(&cached, &bytes).map_err(|source| DataError::CacheWrite {
                path: cached.display().to_string(),
                source,
            })?;
            Ok(Some(bytes))
        }
    }
}

/// Write-to-temp plus rename, so concurrent writers of the same path
/// each leave a complete file.
fn write_cache_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    fs::create_dir_all(dir)?;
    let tmp = dir.join(format!(
        ".tmp-{}-{}",
        std::process::id(),
        std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_nanos())
            .unwrap_or(0)
    ));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}
