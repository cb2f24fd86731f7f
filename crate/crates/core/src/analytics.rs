//! Aggregation layer: per-foul booking probabilities rolled up into
//! team and player tables, plus the plot-data extracts behind the
//! scatter figures.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::dataset::Dataset;
use crate::learn::Model;
use crate::scalar::Scalar;
use crate::statsbomb::{CardKind, EventType, FoulRecord, MatchMeta, NameDirectory, RawEvent};

/// One filtered foul with its model score and observed outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredFoul {
    pub foul: FoulRecord,
    /// Booking probability, in [0, 1] by construction.
    pub xb: f64,
    pub booked: bool,
}

/// One aggregate table row. Team tables leave `minutes_played` and
/// `fouls_per_90` unset; player tables leave `fouls_per_match` unset.
/// `ratio` is xb_sum / bookings and is absent when bookings is zero:
/// fabricating a denominator would corrupt the ranking.
#[derive(Debug, Clone, PartialEq)]
pub struct AggRow {
    pub subject_id: i64,
    pub subject_name: String,
    pub matches_played: u32,
    pub minutes_played: Option<f64>,
    pub fouls: u32,
    pub xb_sum: f64,
    pub bookings: u32,
    pub xb_per_match: f64,
    pub bookings_per_match: f64,
    pub fouls_per_match: Option<f64>,
    pub fouls_per_90: Option<f64>,
    pub ratio: Option<f64>,
}

#[derive(Debug, Error)]
pub enum AnalyticsError {
    #[error("model expects features {expected:?} but the dataset provides {found:?}")]
    SchemaMismatch { expected: Vec<String>, found: Vec<String> },
    #[error("no foul record carries provenance for dataset row `{event_id}`")]
    MissingProvenance { event_id: String },
    #[error("scored foul in match {match_id} has no entry in the match list")]
    OrphanFoul { match_id: i64 },
    #[error("`{axis}` is not an aggregate table column")]
    UnknownAxis { axis: String },
}

/// Score every dataset row with the model and attach foul provenance,
/// joined by event id.
pub fn score_fouls<F: Scalar>(
    dataset: &Dataset,
    fouls: &[FoulRecord],
    model: &Model<F>,
) -> Result<Vec<ScoredFoul>, AnalyticsError> {
    let expected = model.feature_schema().to_vec();
    let found = dataset.feature_schema();
    if expected != found {
        return Err(AnalyticsError::SchemaMismatch { expected, found });
    }
    let by_event: BTreeMap<&str, &FoulRecord> =
        fouls.iter().map(|f| (f.event_id.as_str(), f)).collect();
    let (matrix, _) = dataset.to_matrix::<F>();
    dataset
        .rows
        .iter()
        .zip(&matrix)
        .map(|(row, x)| {
            let foul = *by_event.get(row.event_id.as_str()).ok_or_else(|| {
                AnalyticsError::MissingProvenance { event_id: row.event_id.clone() }
            })?;
            let p = model
                .predict_proba(x)
                .expect("schema checked against the dataset above");
            let xb = p.to_f64().expect("probability fits in f64");
            debug_assert!((0.0..=1.0).contains(&xb));
            Ok(ScoredFoul { foul: foul.clone(), xb, booked: row.label_yellow })
        })
        .collect()
}

struct Tally {
    fouls: u32,
    xb_sum: f64,
    bookings: u32,
}

fn tally_by<K: Ord>(
    scored: &[ScoredFoul],
    key: impl Fn(&ScoredFoul) -> Option<K>,
) -> BTreeMap<K, Tally> {
    let mut out: BTreeMap<K, Tally> = BTreeMap::new();
    for s in scored {
        let Some(k) = key(s) else { continue };
        let t = out.entry(k).or_insert(Tally { fouls: 0, xb_sum: 0.0, bookings: 0 });
        t.fouls += 1;
        t.xb_sum += s.xb;
        t.bookings += u32::from(s.booked);
    }
    out
}

/// Ratio descending; subjects without a ratio go last, ordered by
/// xb_sum descending. Ties break on subject id so output is stable.
fn rank_rows(rows: &mut [AggRow]) {
    rows.sort_by(|a, b| match (a.ratio, b.ratio) {
        (Some(x), Some(y)) => y.total_cmp(&x).then_with(|| a.subject_id.cmp(&b.subject_id)),
        (Some(_), None) => Ordering::Less,
        (None, Some(_)) => Ordering::Greater,
        (None, None) => {
            b.xb_sum.total_cmp(&a.xb_sum).then_with(|| a.subject_id.cmp(&b.subject_id))
        }
    });
}

/// One row per team that committed at least one filtered foul.
/// `matches_played` counts the team's appearances in `matches`.
pub fn team_table(
    scored: &[ScoredFoul],
    matches: &[MatchMeta],
) -> Result<Vec<AggRow>, AnalyticsError> {
    let known: BTreeSet<i64> = matches.iter().map(|m| m.match_id).collect();
    for s in scored {
        if !known.contains(&s.foul.match_id) {
            return Err(AnalyticsError::OrphanFoul { match_id: s.foul.match_id });
        }
    }

    let mut rows = Vec::new();
    for (team_id, tally) in tally_by(scored, |s| Some(s.foul.fouling_team_id)) {
        assert!(tally.fouls >= tally.bookings, "every booking rides on a counted foul");
        let played = matches.iter().filter(|m| m.involves(team_id)).count() as u32;
        let name = matches
            .iter()
            .find_map(|m| {
                if m.home_team_id == team_id {
                    Some(m.home_team_name.clone())
                } else if m.away_team_id == team_id {
                    Some(m.away_team_name.clone())
                } else {
                    None
                }
            })
            .unwrap_or_else(|| format!("team {team_id}"));
        let per_match = f64::from(played.max(1));
        rows.push(AggRow {
            subject_id: team_id,
            subject_name: name,
            matches_played: played,
            minutes_played: None,
            fouls: tally.fouls,
            xb_sum: tally.xb_sum,
            bookings: tally.bookings,
            xb_per_match: tally.xb_sum / per_match,
            bookings_per_match: f64::from(tally.bookings) / per_match,
            fouls_per_match: Some(f64::from(tally.fouls) / per_match),
            fouls_per_90: None,
            ratio: (tally.bookings > 0).then(|| tally.xb_sum / f64::from(tally.bookings)),
        });
    }
    rank_rows(&mut rows);
    Ok(rows)
}

pub const DEFAULT_MIN_MINUTES: f64 = 90.0;

/// One row per fouling player with at least `min_minutes` on the pitch
/// across the supplied matches. Fouls with no attributed player are
/// skipped. Playing time comes from [`minutes_played`] over each match
/// stream.
pub fn player_table(
    scored: &[ScoredFoul],
    match_events: &BTreeMap<i64, Vec<RawEvent>>,
    names: &NameDirectory,
    min_minutes: f64,
) -> Vec<AggRow> {
    let mut rows = Vec::new();
    for (player_id, tally) in tally_by(scored, |s| s.foul.fouling_player_id) {
        assert!(tally.fouls >= tally.bookings, "every booking rides on a counted foul");
        let mut minutes = 0.0;
        let mut played = 0u32;
        for events in match_events.values() {
            if entry_minute(events, player_id).is_some() {
                played += 1;
                minutes += minutes_played(events, player_id);
            }
        }
        if minutes < min_minutes || minutes <= 0.0 {
            continue;
        }
        let per_match = f64::from(played.max(1));
        rows.push(AggRow {
            subject_id: player_id,
            subject_name: names.player(player_id),
            matches_played: played,
            minutes_played: Some(minutes),
            fouls: tally.fouls,
            xb_sum: tally.xb_sum,
            bookings: tally.bookings,
            xb_per_match: tally.xb_sum / per_match,
            bookings_per_match: f64::from(tally.bookings) / per_match,
            fouls_per_match: None,
            fouls_per_90: Some(f64::from(tally.fouls) * 90.0 / minutes),
            ratio: (tally.bookings > 0).then(|| tally.xb_sum / f64::from(tally.bookings)),
        });
    }
    rank_rows(&mut rows);
    rows
}

/// Regulation and extra-time periods start at these match-clock minutes.
const PERIOD_OFFSET_MIN: [f64; 4] = [0.0, 45.0, 90.0, 105.0];

/// Playing length of each period in minutes, taken from its last event.
/// Event clocks restart at the period offset, so stoppage time lands in
/// the period it was played in.
fn period_lengths(events: &[RawEvent]) -> [f64; 4] {
    let mut lengths = [0.0f64; 4];
    for e in events {
        let p = e.period as usize;
        if (1..=4).contains(&p) {
            let within = e.time_seconds() / 60.0 - PERIOD_OFFSET_MIN[p - 1];
            lengths[p - 1] = lengths[p - 1].max(within);
        }
    }
    lengths
}

/// Cumulative minutes of play completed when `event` happens.
fn elapsed_at(event: &RawEvent, lengths: &[f64; 4]) -> f64 {
    let p = event.period as usize;
    if !(1..=4).contains(&p) {
        return lengths.iter().sum();
    }
    let before: f64 = lengths[..p - 1].iter().sum();
    let within = event.time_seconds() / 60.0 - PERIOD_OFFSET_MIN[p - 1];
    before + within.clamp(0.0, lengths[p - 1])
}

fn card_on(event: &RawEvent, key: &str) -> CardKind {
    event.qualifier(key).map(CardKind::from_name).unwrap_or(CardKind::None)
}

fn sends_off(card: CardKind) -> bool {
    matches!(card, CardKind::Red | CardKind::SecondYellow)
}

/// Match-clock minute the player entered play: 0 for starters, the
/// substitution moment for replacements, `None` if they never appeared.
fn entry_minute(events: &[RawEvent], player_id: i64) -> Option<f64> {
    let lengths = period_lengths(events);
    for e in events {
        let entered = match &e.event_type {
            EventType::StartingXi => e
                .qualifier("tactics.lineup")
                .is_some_and(|l| l.split(',').any(|s| s.trim().parse() == Ok(player_id)))
                .then_some(0.0),
            EventType::Substitution => (e
                .qualifier("substitution.replacement.id")
                .and_then(|s| s.parse().ok())
                == Some(player_id))
            .then(|| elapsed_at(e, &lengths)),
            _ => None,
        };
        if entered.is_some() {
            return entered;
        }
    }
    None
}

/// Minutes this player spent on the pitch: entry (kickoff or
/// substitution-on) until the first of substitution-off, a red or
/// second-yellow card, or the end of periods 1 through 4. Players who
/// never appear get 0.
pub fn minutes_played(events: &[RawEvent], player_id: i64) -> f64 {
    let Some(entry) = entry_minute(events, player_id) else {
        return 0.0;
    };
    let lengths = period_lengths(events);
    let mut exit: f64 = lengths.iter().sum();
    for e in events {
        let off = match &e.event_type {
            EventType::Substitution => e.player_id == Some(player_id),
            EventType::FoulCommitted => {
                e.player_id == Some(player_id) && sends_off(card_on(e, "foul_committed.card"))
            }
            EventType::BadBehaviour => {
                e.player_id == Some(player_id) && sends_off(card_on(e, "bad_behaviour.card"))
            }
            _ => false,
        };
        if off {
            exit = elapsed_at(e, &lengths);
            break;
        }
    }
    (exit - entry).max(0.0)
}

/// Fixed column order for aggregate CSVs; inapplicable cells are empty.
pub const TABLE_COLUMNS: [&str; 12] = [
    "subject_id",
    "subject_name",
    "matches_played",
    "minutes_played",
    "fouls",
    "xb_sum",
    "bookings",
    "xb_per_match",
    "bookings_per_match",
    "fouls_per_match",
    "fouls_per_90",
    "ratio",
];

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Full-precision CSV; the pretty renderer is the rounded view.
pub fn table_to_csv(rows: &[AggRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(TABLE_COLUMNS).expect("in-memory write");
    for r in rows {
        w.write_record([
            r.subject_id.to_string(),
            r.subject_name.clone(),
            r.matches_played.to_string(),
            fmt_opt(r.minutes_played),
            r.fouls.to_string(),
            r.xb_sum.to_string(),
            r.bookings.to_string(),
            r.xb_per_match.to_string(),
            r.bookings_per_match.to_string(),
            fmt_opt(r.fouls_per_match),
            fmt_opt(r.fouls_per_90),
            fmt_opt(r.ratio),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
}

/// Human-readable table. Reals show two decimals (ties round to even);
/// the CSV keeps full precision.
pub fn render_table(rows: &[AggRow], title: &str) -> String {
    let player_style = rows.iter().any(|r| r.minutes_played.is_some());
    let mut header = vec!["subject".to_string(), "MP".to_string()];
    if player_style {
        header.push("min".to_string());
    }
    header.extend(["fouls", "xB", "B", "xB/M", "B/M"].map(String::from));
    header.push(if player_style { "F/90" } else { "F/M" }.to_string());
    header.push("xB/B".to_string());

    let two = |v: f64| format!("{v:.2}");
    let opt2 = |v: Option<f64>| v.map(two).unwrap_or_else(|| "-".to_string());
    let mut table = vec![header];
    for r in rows {
        let mut line = vec![r.subject_name.clone(), r.matches_played.to_string()];
        if player_style {
            line.push(opt2(r.minutes_played));
        }
        line.extend([
            r.fouls.to_string(),
            two(r.xb_sum),
            r.bookings.to_string(),
            two(r.xb_per_match),
            two(r.bookings_per_match),
            if player_style { opt2(r.fouls_per_90) } else { opt2(r.fouls_per_match) },
            opt2(r.ratio),
        ]);
        table.push(line);
    }

    let columns = table[0].len();
    let width = |c: usize| table.iter().map(|row| row[c].len()).max().unwrap_or(0);
    let widths: Vec<usize> = (0..columns).map(width).collect();
    let mut out = format!("{title}\n");
    for (i, row) in table.iter().enumerate() {
        let mut line = String::new();
        for (c, cell) in row.iter().enumerate() {
            if c == 0 {
                line.push_str(&format!("{cell:<w$}", w = widths[0]));
            } else {
                line.push_str(&format!("  {cell:>w$}", w = widths[c]));
            }
        }
        out.push_str(line.trim_end());
        out.push('\n');
        if i == 0 {
            let rule_len = widths.iter().sum::<usize>() + 2 * (columns - 1);
            out.push_str(&"-".repeat(rule_len));
            out.push('\n');
        }
    }
    out
}

/// Scatter extract for one figure: label plus two axis columns.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotData {
    pub csv: String,
    /// Rows dropped because an axis value was absent for them.
    pub omitted_missing_value: u32,
}

fn axis_value(row: &AggRow, axis: &str) -> Result<Option<f64>, AnalyticsError> {
    Ok(match axis {
        "matches_played" => Some(f64::from(row.matches_played)),
        "minutes_played" => row.minutes_played,
        "fouls" => Some(f64::from(row.fouls)),
        "xb_sum" => Some(row.xb_sum),
        "bookings" => Some(f64::from(row.bookings)),
        "xb_per_match" => Some(row.xb_per_match),
        "bookings_per_match" => Some(row.bookings_per_match),
        "fouls_per_match" => row.fouls_per_match,
        "fouls_per_90" => row.fouls_per_90,
        "ratio" => row.ratio,
        other => return Err(AnalyticsError::UnknownAxis { axis: other.to_string() }),
    })
}

/// CSV rows `label,x,y` for a scatter plot. Subjects missing either
/// axis value (a ratio axis with zero bookings, say) are left out and
/// tallied.
pub fn emit_plot_data(
    table: &[AggRow],
    x_axis: &str,
    y_axis: &str,
) -> Result<PlotData, AnalyticsError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["label", x_axis, y_axis]).expect("in-memory write");
    let mut omitted = 0u32;
    for row in table {
        match (axis_value(row, x_axis)?, axis_value(row, y_axis)?) {
            (Some(x), Some(y)) => {
                w.write_record([row.subject_name.clone(), x.to_string(), y.to_string()])
                    .expect("in-memory write");
            }
            _ => omitted += 1,
        }
    }
    let csv = String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8");
    Ok(PlotData { csv, omitted_missing_value: omitted })
}
