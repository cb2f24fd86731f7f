//! Feature assembly: one row per filtered foul under a named preset,
//! deterministic train/test splitting, and the versioned CSV dataset
//! format.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::context::ContextSnapshot;
use crate::geometry::{angle_to_goal, distance_to_goal, AngleMode, Point};
use crate::scalar::Scalar;
use crate::statsbomb::FoulRecord;

/// Named experiment feature sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeaturePreset {
    /// The six always-available context features.
    Naive6,
    /// naive6 plus the offensive-threat probability; no 360 needed.
    Event7,
    /// Everything: naive6 + threat + freeze-frame player counts.
    Full9,
}

const NAIVE6: [&str; 6] = [
    "minutes",
    "distance_to_goal",
    "angle_to_goal",
    "foul_count_player",
    "foul_count_team",
    "goal_difference",
];
const EVENT7: [&str; 7] = [
    "minutes",
    "distance_to_goal",
    "angle_to_goal",
    "foul_count_player",
    "foul_count_team",
    "goal_difference",
    "vaep_offensive",
];
const FULL9: [&str; 9] = [
    "minutes",
    "distance_to_goal",
    "angle_to_goal",
    "foul_count_player",
    "foul_count_team",
    "goal_difference",
    "vaep_offensive",
    "attackers_count",
    "defenders_count",
];

impl FeaturePreset {
    pub fn parse(s: &str) -> Option<FeaturePreset> {
        match s {
            "naive6" => Some(FeaturePreset::Naive6),
            "event7" => Some(FeaturePreset::Event7),
            "full9" => Some(FeaturePreset::Full9),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            FeaturePreset::Naive6 => "naive6",
            FeaturePreset::Event7 => "event7",
            FeaturePreset::Full9 => "full9",
        }
    }

    pub fn feature_names(&self) -> &'static [&'static str] {
        match self {
            FeaturePreset::Naive6 => &NAIVE6,
            FeaturePreset::Event7 => &EVENT7,
            FeaturePreset::Full9 => &FULL9,
        }
    }

    pub fn includes_vaep(&self) -> bool {
        !matches!(self, FeaturePreset::Naive6)
    }

    pub fn includes_player_counts(&self) -> bool {
        matches!(self, FeaturePreset::Full9)
    }
}

/// Per-foul features. The mandatory six are always present; the three
/// optional ones are `None` exactly when their source (threat model,
/// freeze frame) was unavailable for this foul.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub minutes: u32,
    pub distance_to_goal: f64,
    /// Radians, per the configured angle mode.
    pub angle_to_goal: f64,
    pub foul_count_player: u32,
    pub foul_count_team: u32,
    pub goal_difference: i32,
    pub vaep_offensive: Option<f64>,
    pub attackers_count: Option<u32>,
    pub defenders_count: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRow {
    pub match_id: i64,
    pub event_id: String,
    pub features: FeatureVector,
    pub label_yellow: bool,
}

/// Immutable labeled dataset with provenance. Row order is the build
/// order: (match_id, event index), which makes every downstream
/// artifact byte-stable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub preset: FeaturePreset,
    pub rows: Vec<DatasetRow>,
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("preset `{preset}` needs {missing}, which no input row provides")]
    PresetUnsatisfiable { preset: String, missing: String },
    #[error("dataset with {rows} rows cannot be split: one side would be empty")]
    TooSmall { rows: usize },
    #[error("duplicate dataset row for match {match_id}, event `{event_id}`")]
    DuplicateRow { match_id: i64, event_id: String },
    #[error("{path}: {reason}")]
    SchemaMismatch { path: String, reason: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Dataset {
    /// Wrap rows, enforcing provenance uniqueness.
    pub fn new(preset: FeaturePreset, rows: Vec<DatasetRow>) -> Result<Dataset, DatasetError> {
        let mut seen = BTreeSet::new();
        for row in &rows {
            if !seen.insert((row.match_id, row.event_id.clone())) {
                return Err(DatasetError::DuplicateRow {
                    match_id: row.match_id,
                    event_id: row.event_id.clone(),
                });
            }
        }
        Ok(Dataset { preset, rows })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn feature_schema(&self) -> Vec<String> {
        self.preset.feature_names().iter().map(|s| s.to_string()).collect()
    }

    /// Feature matrix under the preset's columns plus the label vector.
    /// Masked-missing values become NaN; tree learners route those down
    /// their learned default branch.
    pub fn to_matrix<F: Scalar>(&self) -> (Vec<Vec<F>>, Vec<bool>) {
        let opt = |v: Option<f64>| v.map_or_else(F::nan, F::from_f64_lit);
        let rows = self
            .rows
            .iter()
            .map(|row| {
                let f = &row.features;
                let mut out = vec![
                    F::from_usize_lit(f.minutes as usize),
                    F::from_f64_lit(f.distance_to_goal),
                    F::from_f64_lit(f.angle_to_goal),
                    F::from_usize_lit(f.foul_count_player as usize),
                    F::from_usize_lit(f.foul_count_team as usize),
                    F::from_f64_lit(f64::from(f.goal_difference)),
                ];
                if self.preset.includes_vaep() {
                    out.push(opt(f.vaep_offensive));
                }
                if self.preset.includes_player_counts() {
                    out.push(opt(f.attackers_count.map(f64::from)));
                    out.push(opt(f.defenders_count.map(f64::from)));
                }
                out
            })
            .collect();
        let labels = self.rows.iter().map(|r| r.label_yellow).collect();
        (rows, labels)
    }
}

/// [`build_dataset`] result: the dataset plus exclusion tallies.
#[derive(Debug, Clone, PartialEq)]
pub struct BuildOutcome {
    pub dataset: Dataset,
    /// Fouls with no context snapshot (e.g. shoot-out periods, which the
    /// replay skips entirely).
    pub skipped_missing_context: u32,
}

/// Assemble one row per foul. `contexts` and `vaep_offensive` are keyed
/// by event id; fouls without a context snapshot are excluded and
/// tallied, while missing optional sources just leave the mask unset.
pub fn build_dataset(
    fouls: &[FoulRecord],
    contexts: &BTreeMap<String, ContextSnapshot>,
    vaep_offensive: Option<&BTreeMap<String, f64>>,
    preset: FeaturePreset,
    angle_mode: AngleMode,
) -> Result<BuildOutcome, DatasetError> {
    let mut ordered: Vec<&FoulRecord> = fouls.iter().collect();
    ordered.sort_by(|a, b| (a.match_id, a.index).cmp(&(b.match_id, b.index)));

    let mut rows = Vec::with_capacity(ordered.len());
    let mut skipped_missing_context = 0u32;
    for foul in ordered {
        let Some(context) = contexts.get(&foul.event_id) else {
            skipped_missing_context += 1;
            continue;
        };
        let spot = Point::new(foul.location_attacking_frame.0, foul.location_attacking_frame.1);
        rows.push(DatasetRow {
            match_id: foul.match_id,
            event_id: foul.event_id.clone(),
            features: FeatureVector {
                minutes: context.minute,
                distance_to_goal: distance_to_goal(spot),
                angle_to_goal: angle_to_goal(spot, angle_mode),
                foul_count_player: context.foul_count_player,
                foul_count_team: context.foul_count_team,
                goal_difference: context.goal_difference,
                vaep_offensive: vaep_offensive.and_then(|m| m.get(&foul.event_id)).copied(),
                attackers_count: context.attackers_count,
                defenders_count: context.defenders_count,
            },
            label_yellow: foul.label_yellow,
        });
    }

    if !rows.is_empty() {
        if preset.includes_vaep() && rows.iter().all(|r| r.features.vaep_offensive.is_none()) {
            return Err(DatasetError::PresetUnsatisfiable {
                preset: preset.name().to_string(),
                missing: "vaep_offensive values".to_string(),
            });
        }
        if preset.includes_player_counts()
            && rows.iter().all(|r| {
                r.features.attackers_count.is_none() && r.features.defenders_count.is_none()
            })
        {
            return Err(DatasetError::PresetUnsatisfiable {
                preset: preset.name().to_string(),
                missing: "freeze-frame player counts".to_string(),
            });
        }
    }

    Ok(BuildOutcome {
        dataset: Dataset::new(preset, rows)?,
        skipped_missing_context,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitMode {
    /// Instance-level split, matching the reported dataset sizes.
    PerFoul,
    /// Whole matches go to one side; for leakage-sensitive studies.
    PerMatch,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub test_fraction: f64,
    pub seed: u64,
    /// Preserve the label ratio per side. Ignored in per-match mode.
    pub stratified: bool,
    pub mode: SplitMode,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec { test_fraction: 0.2, seed: 42, stratified: true, mode: SplitMode::PerFoul }
    }
}

/// Disjoint, exhaustive partition, deterministic under the seed. Test
/// size is floor(n * fraction), applied per class when stratifying; the
/// remainder stays in train. Row order within each side follows the
/// parent dataset.
pub fn split(dataset: &Dataset, spec: &SplitSpec) -> Result<(Dataset, Dataset), DatasetError> {
    assert!(
        spec.test_fraction > 0.0 && spec.test_fraction < 1.0,
        "test fraction must sit strictly between 0 and 1"
    );
    let n = dataset.len();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut in_test = vec![false; n];

    match spec.mode {
        SplitMode::PerFoul => {
            let classes: &[Option<bool>] = if spec.stratified {
                &[Some(true), Some(false)]
            } else {
                &[None]
            };
            for class in classes {
                let mut indices: Vec<usize> = dataset
                    .rows
                    .iter()
                    .enumerate()
                    .filter(|(_, r)| class.map_or(true, |c| r.label_yellow == c))
                    .map(|(i, _)| i)
                    .collect();
                indices.shuffle(&mut rng);
                let take = (indices.len() as f64 * spec.test_fraction).floor() as usize;
                for i in indices.into_iter().take(take) {
                    in_test[i] = true;
                }
            }
        }
        SplitMode::PerMatch => {
            let mut match_rows: BTreeMap<i64, usize> = BTreeMap::new();
            for row in &dataset.rows {
                *match_rows.entry(row.match_id).or_insert(0) += 1;
            }
            let mut matches: Vec<i64> = match_rows.keys().copied().collect();
            matches.shuffle(&mut rng);
            let target = (n as f64 * spec.test_fraction).floor() as usize;
            let mut test_matches = BTreeSet::new();
            let mut taken = 0usize;
            for match_id in matches {
                if taken >= target {
                    break;
                }
                taken += match_rows[&match_id];
                test_matches.insert(match_id);
            }
            for (i, row) in dataset.rows.iter().enumerate() {
                in_test[i] = test_matches.contains(&row.match_id);
            }
        }
    }

    let side = |keep_test: bool| -> Vec<DatasetRow> {
        dataset
            .rows
            .iter()
            .zip(&in_test)
            .filter(|(_, &t)| t == keep_test)
            .map(|(r, _)| r.clone())
            .collect()
    };
    let test_rows = side(true);
    let train_rows = side(false);
    if train_rows.is_empty() || test_rows.is_empty() {
        return Err(DatasetError::TooSmall { rows: n });
    }
    Ok((
        Dataset::new(dataset.preset, train_rows)?,
        Dataset::new(dataset.preset, test_rows)?,
    ))
}

pub const CSV_VERSION: u32 = 1;

/// Fixed column order; every preset writes all twelve columns and leaves
/// unavailable optionals empty.
pub const CSV_COLUMNS: [&str; 12] = [
    "match_id",
    "event_id",
    "minutes",
    "distance_to_goal",
    "angle_to_goal",
    "foul_count_player",
    "foul_count_team",
    "goal_difference",
    "vaep_offensive",
    "attackers_count",
    "defenders_count",
    "label_yellow",
];

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> DatasetError + '_ {
    move |source| DatasetError::Io { path: path.display().to_string(), source }
}

fn schema_err(path: &Path, reason: impl Into<String>) -> DatasetError {
    DatasetError::SchemaMismatch { path: path.display().to_string(), reason: reason.into() }
}

fn fmt_opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Write the dataset: a version-and-preset comment line, the fixed
/// header, one row per foul. Floats keep full round-trip precision;
/// masked-missing values are empty cells.
pub fn export_csv(dataset: &Dataset, path: &Path) -> Result<(), DatasetError> {
    let file = std::fs::File::create(path).map_err(io_err(path))?;
    let mut out = std::io::BufWriter::new(file);
    writeln!(out, "# xb dataset v{} preset={}", CSV_VERSION, dataset.preset.name())
        .map_err(io_err(path))?;
    let mut writer = csv::Writer::from_writer(out);
    let as_io = |e: csv::Error| match e.into_kind() {
        csv::ErrorKind::Io(source) => DatasetError::Io {
            path: path.display().to_string(),
            source,
        },
        other => schema_err(path, format!("csv write failed: {other:?}")),
    };
    writer.write_record(CSV_COLUMNS).map_err(as_io)?;
    for row in &dataset.rows {
        let f = &row.features;
        writer
            .write_record([
                row.match_id.to_string(),
                row.event_id.clone(),
                f.minutes.to_string(),
                f.distance_to_goal.to_string(),
                f.angle_to_goal.to_string(),
                f.foul_count_player.to_string(),
                f.foul_count_team.to_string(),
                f.goal_difference.to_string(),
                fmt_opt(f.vaep_offensive),
                fmt_opt(f.attackers_count),
                fmt_opt(f.defenders_count),
                if row.label_yellow { "1" } else { "0" }.to_string(),
            ])
            .map_err(as_io)?;
    }
    writer.flush().map_err(io_err(path))?;
    Ok(())
}

fn parse_field<T: std::str::FromStr>(
    path: &Path,
    line: usize,
    column: &str,
    raw: &str,
) -> Result<T, DatasetError> {
    raw.parse().map_err(|_| {
        schema_err(path, format!("row {line}: cannot parse `{raw}` as {column}"))
    })
}

fn parse_opt<T: std::str::FromStr>(
    path: &Path,
    line: usize,
    column: &str,
    raw: &str,
) -> Result<Option<T>, DatasetError> {
    if raw.is_empty() {
        Ok(None)
    } else {
        parse_field(path, line, column, raw).map(Some)
    }
}

pub fn import_csv(path: &Path) -> Result<Dataset, DatasetError> {
    let file = std::fs::File::open(path).map_err(io_err(path))?;
    let mut reader = BufReader::new(file);
    let mut version_line = String::new();
    reader.read_line(&mut version_line).map_err(io_err(path))?;
    let rest = version_line
        .trim_end()
        .strip_prefix("# xb dataset v")
        .ok_or_else(|| schema_err(path, "missing `# xb dataset` version line"))?;
    let (version, preset_part) = rest
        .split_once(" preset=")
        .ok_or_else(|| schema_err(path, "version line lacks `preset=`"))?;
    if version.parse::<u32>() != Ok(CSV_VERSION) {
        return Err(schema_err(
            path,
            format!("dataset version `{version}` unsupported, this build reads v{CSV_VERSION}"),
        ));
    }
    let preset = FeaturePreset::parse(preset_part)
        .ok_or_else(|| schema_err(path, format!("unknown preset `{preset_part}`")))?;

    let mut csv_reader = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = csv_reader
        .headers()
        .map_err(|e| schema_err(path, format!("unreadable header: {e}")))?;
    let found: Vec<&str> = headers.iter().collect();
    if found != CSV_COLUMNS {
        return Err(schema_err(
            path,
            format!("header mismatch: expected {CSV_COLUMNS:?}, found {found:?}"),
        ));
    }

    let mut rows = Vec::new();
    for (i, record) in csv_reader.records().enumerate() {
        let line = i + 1;
        let record = record.map_err(|e| schema_err(path, format!("row {line}: {e}")))?;
        if record.len() != CSV_COLUMNS.len() {
            return Err(schema_err(
                path,
                format!("row {line}: expected {} fields, found {}", CSV_COLUMNS.len(), record.len()),
            ));
        }
        let field = |idx: usize| record.get(idx).unwrap_or_default();
        let label = match field(11) {
            "0" => false,
            "1" => true,
            other => {
                return Err(schema_err(
                    path,
                    format!("row {line}: label_yellow must be 0 or 1, found `{other}`"),
                ))
            }
        };
        rows.push(DatasetRow {
            match_id: parse_field(path, line, "match_id", field(0))?,
            event_id: field(1).to_string(),
            features: FeatureVector {
                minutes: parse_field(path, line, "minutes", field(2))?,
                distance_to_goal: parse_field(path, line, "distance_to_goal", field(3))?,
                angle_to_goal: parse_field(path, line, "angle_to_goal", field(4))?,
                foul_count_player: parse_field(path, line, "foul_count_player", field(5))?,
                foul_count_team: parse_field(path, line, "foul_count_team", field(6))?,
                goal_difference: parse_field(path, line, "goal_difference", field(7))?,
                vaep_offensive: parse_opt(path, line, "vaep_offensive", field(8))?,
                attackers_count: parse_opt(path, line, "attackers_count", field(9))?,
                defenders_count: parse_opt(path, line, "defenders_count", field(10))?,
            },
            label_yellow: label,
        });
    }
    Dataset::new(preset, rows)
}
