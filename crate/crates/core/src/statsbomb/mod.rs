//! Open-data ingestion: sources and caching, JSON parsing, and foul
//! extraction.

use std::collections::BTreeMap;

use thiserror::Error;

pub mod fouls;
pub mod parse;
pub mod source;
pub mod types;

pub use fouls::{extract_fouls, FoulDiagnostics, FoulExtraction, EXCLUDED_FOUL_TYPES};
pub use source::{
    fetch_file, fetch_optional, DataSource, HttpFetcher, RemoteFetch, DEFAULT_DATA_BASE,
    ENV_CACHE_DIR, ENV_DATA_BASE,
};
pub use types::{
    CardKind, CompetitionRef, EventType, FoulRecord, FramePlayer, FreezeFrame, Gender,
    MatchMeta, NameDirectory, RawEvent,
};

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}: not found at data source")]
    NotFound { path: String },
    #[error("{path}: transport failure: {message}")]
    Transport { path: String, message: String },
    #[error("{path}: cannot write cache copy")]
    CacheWrite {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: read failed")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{what}: malformed record at `{field}` (line {line}, column {column}, byte {offset})")]
    Parse {
        what: String,
        field: String,
        line: usize,
        column: usize,
        offset: usize,
    },
}

pub fn load_competitions(source: &DataSource) -> Result<Vec<CompetitionRef>, DataError> {
    let bytes = fetch_file(source, "competitions.json")?;
    parse::parse_competitions(&bytes)
}

pub fn load_matches(
    source: &DataSource,
    competition_id: i64,
    season_id: i64,
) -> Result<Vec<MatchMeta>, DataError> {
    let rel = format!("matches/{competition_id}/{season_id}.json");
    let bytes = fetch_file(source, &rel)?;
    parse::parse_matches(&bytes, &rel)
}

/// Events in ascending index order plus the names seen in the stream.
pub fn load_match_events(
    source: &DataSource,
    match_id: i64,
) -> Result<(Vec<RawEvent>, NameDirectory), DataError> {
    let rel = format!("events/{match_id}.json");
    let bytes = fetch_file(source, &rel)?;
    parse::parse_events(&bytes, &rel)
}

/// Freeze frames keyed by anchoring event id. An absent 360 file is an
/// empty map: callers must treat 360 features as missing, not zero.
pub fn load_frames(
    source: &DataSource,
    match_id: i64,
) -> Result<BTreeMap<String, FreezeFrame>, DataError> {
    let rel = format!("three-sixty/{match_id}.json");
    match fetch_optional(source, &rel)? {
        None => Ok(BTreeMap::new()),
        Some(bytes) => {
            let frames = parse::parse_frames(&bytes, &rel)?;
            Ok(frames.into_iter().map(|f| (f.event_id.clone(), f)).collect())
        }
    }
}
