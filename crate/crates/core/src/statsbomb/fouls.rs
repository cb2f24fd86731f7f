//! Foul filtering and labeling: turns a match's event stream into the
//! `FoulRecord` rows the feature pipeline trains on.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::geometry::{self, clamp_pitch};

use super::types::{CardKind, EventType, FoulRecord, RawEvent};

/// Foul types that do not enter the dataset: either the offence is not a
/// tackle-like challenge (handball, backpass pick, six seconds) or the
/// card decision is considered mechanical (dangerous play, foul out,
/// dive).
pub const EXCLUDED_FOUL_TYPES: [&str; 6] = [
    "Handball",
    "Dangerous Play",
    "Foul Out",
    "Dive",
    "6 Seconds",
    "Backpass Pick",
];

/// Per-match extraction tallies, serialized alongside dataset builds.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoulDiagnostics {
    pub skipped_no_location: u32,
    pub excluded_by_type: BTreeMap<String, u32>,
    pub red_dropped: u32,
    /// Fouls where no opposing team could be determined (degenerate
    /// streams only; zero on real data).
    #[serde(default, skip_serializing_if = "is_zero")]
    pub skipped_no_opponent: u32,
}

fn is_zero(v: &u32) -> bool {
    *v == 0
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoulExtraction {
    pub records: Vec<FoulRecord>,
    pub diagnostics: FoulDiagnostics,
}

fn card_of(event: &RawEvent) -> CardKind {
    event
        .qualifier("foul_committed.card")
        .map(CardKind::from_name)
        .unwrap_or(CardKind::None)
}

/// The Foul Won event paired with this foul, if the stream links one.
/// Links may point in either direction.
fn paired_foul_won<'a>(
    foul: &RawEvent,
    by_id: &BTreeMap<&str, &'a RawEvent>,
    foul_wons_pointing_here: &BTreeMap<&str, &'a RawEvent>,
) -> Option<&'a RawEvent> {
    for related in &foul.related_event_ids {
        if let Some(e) = by_id.get(related.as_str()) {
            if e.event_type == EventType::FoulWon {
                return Some(e);
            }
        }
    }
    foul_wons_pointing_here.get(foul.event_id.as_str()).copied()
}

/// The opposing team of `team_id`, taken from the set of team ids seen
/// in the stream. Matches have exactly two teams.
fn other_team(events: &[RawEvent], team_id: i64) -> Option<i64> {
    events
        .iter()
        .filter_map(|e| e.team_id)
        .find(|&t| t != team_id)
}

/// Extract labeled non-dangerous fouls from one match's sorted events.
///
/// Straight reds are dropped (the model is about yellow cards; a red is
/// not a failed yellow). A second yellow labels 1: the referee shows a
/// yellow for the foul itself. The attacking-frame location prefers the
/// paired Foul Won event, whose coordinates are already oriented for the
/// team in possession; otherwise the foul location is mirrored, since
/// the acting team of a Foul Committed is the defending side.
pub fn extract_fouls(match_id: i64, events: &[RawEvent]) -> FoulExtraction {
    let by_id: BTreeMap<&str, &RawEvent> =
        events.iter().map(|e| (e.event_id.as_str(), e)).collect();
    let mut foul_wons_pointing_here: BTreeMap<&str, &RawEvent> = BTreeMap::new();
    for e in events.iter().filter(|e| e.event_type == EventType::FoulWon) {
        for related in &e.related_event_ids {
            foul_wons_pointing_here.insert(related.as_str(), e);
        }
    }

    let mut diagnostics = FoulDiagnostics::default();
    let mut records = Vec::new();

    for event in events.iter().filter(|e| e.event_type == EventType::FoulCommitted) {
        if let Some(foul_type) = event.qualifier("foul_committed.type") {
            if EXCLUDED_FOUL_TYPES.contains(&foul_type) {
                *diagnostics
                    .excluded_by_type
                    .entry(foul_type.to_string())
                    .or_insert(0) += 1;
                continue;
            }
        }
        let card = card_of(event);
        if card == CardKind::Red {
            diagnostics.red_dropped += 1;
            continue;
        }
        let Some(fouling_team_id) = event.team_id else {
            diagnostics.skipped_no_opponent += 1;
            continue;
        };

        let won = paired_foul_won(event, &by_id, &foul_wons_pointing_here);
        let possession_team_id = won
            .and_then(|w| w.team_id)
            .or_else(|| event.possession_team_id.filter(|&t| t != fouling_team_id))
            .or_else(|| other_team(events, fouling_team_id));
        let Some(possession_team_id) = possession_team_id else {
            diagnostics.skipped_no_opponent += 1;
            continue;
        };

        let location_committed = event.location;
        let attacking = match (won.and_then(|w| w.location), location_committed) {
            (Some(won_loc), _) => Some(won_loc),
            (None, Some(loc)) => Some(geometry::mirror_xy(loc)),
            (None, None) => None,
        };
        let (Some(committed), Some(attacking)) =
            (location_committed.or_else(|| attacking.map(geometry::mirror_xy)), attacking)
        else {
            diagnostics.skipped_no_location += 1;
            continue;
        };

        records.push(FoulRecord {
            match_id,
            event_id: event.event_id.clone(),
            index: event.index,
            period: event.period,
            minute: event.minute,
            second: event.second,
            fouling_player_id: event.player_id,
            fouling_team_id,
            possession_team_id,
            location_committed: clamp_pitch(committed),
            location_attacking_frame: clamp_pitch(attacking),
            label_yellow: card.is_yellow(),
            card_raw: card,
        });
    }

    FoulExtraction { records, diagnostics }
}
