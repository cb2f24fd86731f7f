//! Match replay: walks one match's event stream and captures, for each
//! foul, the pre-foul context (minute, prior foul counts, goal
//! difference) plus player counts from the 360 freeze frame when one is
//! anchored to the foul.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry;
use crate::statsbomb::{EventType, FoulRecord, FreezeFrame, RawEvent};

/// Which fouls increment the prior-foul counters.
///
/// Training rows cover only the filtered foul set, and it is genuinely
/// ambiguous whether excluded foul types (handballs, dives, ...) should
/// still count toward a player's or team's running tally. Default
/// counts the filtered set only, matching the training universe.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FoulCounterMode {
    #[default]
    Filtered,
    All,
}

impl FoulCounterMode {
    pub fn parse(s: &str) -> Option<FoulCounterMode> {
        match s {
            "filtered" => Some(FoulCounterMode::Filtered),
            "all" => Some(FoulCounterMode::All),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            FoulCounterMode::Filtered => "filtered",
            FoulCounterMode::All => "all",
        }
    }
}

/// Pre-foul context. Counts are strictly prior: the foul itself is not
/// included in its own tallies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextSnapshot {
    pub minute: u32,
    pub foul_count_player: u32,
    pub foul_count_team: u32,
    /// Possession-team goals minus defending-team goals at foul time.
    pub goal_difference: i32,
    /// `None` when no freeze frame is anchored to the foul.
    pub attackers_count: Option<u32>,
    pub defenders_count: Option<u32>,
}

#[derive(Debug, Error)]
pub enum ContextError {
    #[error("foul event `{event_id}` not present in the match event stream")]
    UnknownFoul { event_id: String },
}

/// Possession-team players strictly ahead of the foul (closer to the
/// attacked goal), excluding the fouled actor.
///
/// Freeze-frame coordinates and `teammate` flags are relative to the
/// acting team. A Foul Committed is acted by the defending side, so in
/// that case possession players carry `teammate = false` and every
/// location is mirrored into the possession team's attacking frame
/// before comparing.
pub fn count_attackers(
    frame: &FreezeFrame,
    foul_attacking: (f64, f64),
    acting_is_defender: bool,
) -> u32 {
    frame
        .players
        .iter()
        .filter(|p| p.teammate != acting_is_defender && !p.actor)
        .filter(|p| oriented_x(p.location, acting_is_defender) > foul_attacking.0)
        .count() as u32
}

/// Defending-team players strictly between the foul and their own goal
/// (x = 120 in the attacking frame). The goalkeeper counts.
pub fn count_defenders(
    frame: &FreezeFrame,
    foul_attacking: (f64, f64),
    acting_is_defender: bool,
) -> u32 {
    frame
        .players
        .iter()
        .filter(|p| p.teammate == acting_is_defender)
        .filter(|p| oriented_x(p.location, acting_is_defender) > foul_attacking.0)
        .count() as u32
}

fn oriented_x(location: (f64, f64), acting_is_defender: bool) -> f64 {
    if acting_is_defender {
        geometry::mirror_xy(location).0
    } else {
        location.0
    }
}

/// Replay the stream and snapshot the context at each foul.
///
/// Goals come from Shot events with outcome Goal (credited to the
/// shooting team) and Own Goal Against events (credited to the
/// opposition). Penalty shootouts (period 5) are skipped entirely, so a
/// shootout foul gets no snapshot.
pub fn replay(
    events: &[RawEvent],
    fouls: &[FoulRecord],
    frames: &BTreeMap<String, FreezeFrame>,
    mode: FoulCounterMode,
) -> Result<BTreeMap<String, ContextSnapshot>, ContextError> {
    let foul_by_event: BTreeMap<&str, &FoulRecord> =
        fouls.iter().map(|f| (f.event_id.as_str(), f)).collect();
    for foul in fouls {
        if !events.iter().any(|e| e.event_id == foul.event_id) {
            return Err(ContextError::UnknownFoul { event_id: foul.event_id.clone() });
        }
    }

    let mut goals: BTreeMap<i64, i32> = BTreeMap::new();
    let mut team_fouls: BTreeMap<i64, u32> = BTreeMap::new();
    let mut player_fouls: BTreeMap<i64, u32> = BTreeMap::new();
    let mut snapshots = BTreeMap::new();

    let team_ids: Vec<i64> = {
        let mut seen = Vec::new();
        for t in events.iter().filter_map(|e| e.team_id) {
            if !seen.contains(&t) {
                seen.push(t);
            }
        }
        seen
    };
    let opponent = |team: i64| team_ids.iter().copied().find(|&t| t != team);

    for event in events {
        if event.period >= 5 {
            continue;
        }

        if let Some(foul) = foul_by_event.get(event.event_id.as_str()) {
            let foul_count_player = foul
                .fouling_player_id
                .and_then(|p| player_fouls.get(&p).copied())
                .unwrap_or(0);
            let foul_count_team = team_fouls.get(&foul.fouling_team_id).copied().unwrap_or(0);
            let goal_difference = goals.get(&foul.possession_team_id).copied().unwrap_or(0)
                - goals.get(&foul.fouling_team_id).copied().unwrap_or(0);
            let frame = frames.get(&event.event_id);
            snapshots.insert(
                event.event_id.clone(),
                ContextSnapshot {
                    minute: event.minute,
                    foul_count_player,
                    foul_count_team,
                    goal_difference,
                    attackers_count: frame
                        .map(|f| count_attackers(f, foul.location_attacking_frame, true)),
                    defenders_count: frame
                        .map(|f| count_defenders(f, foul.location_attacking_frame, true)),
                },
            );
        }

        let counted = match mode {
            FoulCounterMode::Filtered => foul_by_event.contains_key(event.event_id.as_str()),
            FoulCounterMode::All => event.event_type == EventType::FoulCommitted,
        };
        if counted {
            if let Some(team) = event.team_id {
                *team_fouls.entry(team).or_insert(0) += 1;
            }
            if let Some(player) = event.player_id {
                *player_fouls.entry(player).or_insert(0) += 1;
            }
        }

        match event.event_type {
            EventType::Shot => {
                if event.qualifier("shot.outcome") == Some("Goal") {
                    if let Some(team) = event.team_id {
                        *goals.entry(team).or_insert(0) += 1;
                    }
                }
            }
            EventType::OwnGoalAgainst => {
                if let Some(benefit) = event.team_id.and_then(opponent) {
                    *goals.entry(benefit).or_insert(0) += 1;
                }
            }
            _ => {}
        }
    }

    Ok(snapshots)
}

/// Final goal tally per team over periods 1 through 4, as counted by the
/// replay rules.
pub fn final_score(events: &[RawEvent]) -> BTreeMap<i64, i32> {
    let mut goals: BTreeMap<i64, i32> = BTreeMap::new();
    let team_ids: Vec<i64> = events.iter().filter_map(|e| e.team_id).fold(
        Vec::new(),
        |mut acc, t| {
            if !acc.contains(&t) {
                acc.push(t);
            }
            acc
        },
    );
    for event in events.iter().filter(|e| e.period < 5) {
        match event.event_type {
            EventType::Shot if event.qualifier("shot.outcome") == Some("Goal") => {
                if let Some(team) = event.team_id {
                    *goals.entry(team).or_insert(0) += 1;
                }
            }
            EventType::OwnGoalAgainst => {
                if let Some(benefit) = event
                    .team_id
                    .and_then(|t| team_ids.iter().copied().find(|&x| x != t))
                {
                    *goals.entry(benefit).or_insert(0) += 1;
                }
            }
            _ => {}
        }
    }
    goals
}
