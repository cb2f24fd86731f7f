//! Domain types for the StatsBomb open-data layout.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gender {
    Male,
    Female,
}

/// One (competition, season) pair from the catalog.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompetitionRef {
    pub competition_id: i64,
    pub season_id: i64,
    pub competition_name: String,
    pub season_name: String,
    pub gender: Gender,
}

/// Match header from `matches/{competition_id}/{season_id}.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchMeta {
    pub match_id: i64,
    pub competition: CompetitionRef,
    pub home_team_id: i64,
    pub home_team_name: String,
    pub away_team_id: i64,
    pub away_team_name: String,
    pub home_score: u32,
    pub away_score: u32,
    /// ISO-8601 date, with kickoff time appended when the feed has one.
    pub kickoff: String,
}

impl MatchMeta {
    pub fn involves(&self, team_id: i64) -> bool {
        self.home_team_id == team_id || self.away_team_id == team_id
    }
}

/// Event type tags the pipeline branches on. Anything else is preserved
/// verbatim in `Other` so unknown types survive a round trip.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum EventType {
    Pass,
    Shot,
    Carry,
    Dribble,
    Duel,
    Clearance,
    Interception,
    BallRecovery,
    Miscontrol,
    Dispossessed,
    FoulCommitted,
    FoulWon,
    BadBehaviour,
    OwnGoalFor,
    OwnGoalAgainst,
    Substitution,
    StartingXi,
    HalfStart,
    HalfEnd,
    Other(String),
}

impl EventType {
    pub fn from_name(name: &str) -> EventType {
        match name {
            "Pass" => EventType::Pass,
            "Shot" => EventType::Shot,
            "Carry" => EventType::Carry,
            "Dribble" => EventType::Dribble,
            "Duel" => EventType::Duel,
            "Clearance" => EventType::Clearance,
            "Interception" => EventType::Interception,
            "Ball Recovery" => EventType::BallRecovery,
            "Miscontrol" => EventType::Miscontrol,
            "Dispossessed" => EventType::Dispossessed,
            "Foul Committed" => EventType::FoulCommitted,
            "Foul Won" => EventType::FoulWon,
            "Bad Behaviour" => EventType::BadBehaviour,
            "Own Goal For" => EventType::OwnGoalFor,
            "Own Goal Against" => EventType::OwnGoalAgainst,
            "Substitution" => EventType::Substitution,
            "Starting XI" => EventType::StartingXi,
            "Half Start" => EventType::HalfStart,
            "Half End" => EventType::HalfEnd,
            other => EventType::Other(other.to_string()),
        }
    }

    pub fn name(&self) -> &str {
        match self {
            EventType::Pass => "Pass",
            EventType::Shot => "Shot",
            EventType::Carry => "Carry",
            EventType::Dribble => "Dribble",
            EventType::Duel => "Duel",
            EventType::Clearance => "Clearance",
            EventType::Interception => "Interception",
            EventType::BallRecovery => "Ball Recovery",
            EventType::Miscontrol => "Miscontrol",
            EventType::Dispossessed => "Dispossessed",
            EventType::FoulCommitted => "Foul Committed",
            EventType::FoulWon => "Foul Won",
            EventType::BadBehaviour => "Bad Behaviour",
            EventType::OwnGoalFor => "Own Goal For",
            EventType::OwnGoalAgainst => "Own Goal Against",
            EventType::Substitution => "Substitution",
            EventType::StartingXi => "Starting XI",
            EventType::HalfStart => "Half Start",
            EventType::HalfEnd => "Half End",
            EventType::Other(name) => name,
        }
    }
}

/// One event from `events/{match_id}.json`, normalized to the fields the
/// pipeline consumes. Nested qualifier objects are flattened into a
/// string map keyed by dotted paths, e.g. `foul_committed.card`.
#[derive(Debug, Clone, PartialEq)]
pub struct RawEvent {
    pub event_id: String,
    pub index: i64,
    pub period: u8,
    pub minute: u32,
    pub second: u8,
    pub event_type: EventType,
    pub team_id: Option<i64>,
    pub player_id: Option<i64>,
    pub possession_team_id: Option<i64>,
    pub location: Option<(f64, f64)>,
    pub qualifiers: BTreeMap<String, String>,
    pub related_event_ids: Vec<String>,
}

impl RawEvent {
    pub fn qualifier(&self, key: &str) -> Option<&str> {
        self.qualifiers.get(key).map(String::as_str)
    }

    /// Seconds since the start of the event's period base clock
    /// (`minute` is the raw match-clock minute).
    pub fn time_seconds(&self) -> f64 {
        f64::from(self.minute) * 60.0 + f64::from(self.second)
    }
}

/// Visible-player snapshot from the 360 feed, anchored to one event.
#[derive(Debug, Clone, PartialEq)]
pub struct FreezeFrame {
    pub event_id: String,
    pub players: Vec<FramePlayer>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FramePlayer {
    /// Location in the anchoring (acting) team's attacking frame.
    pub location: (f64, f64),
    pub teammate: bool,
    pub actor: bool,
    pub keeper: bool,
}

/// Card shown for a foul, if any.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CardKind {
    None,
    Yellow,
    SecondYellow,
    Red,
}

impl CardKind {
    pub fn from_name(name: &str) -> CardKind {
        match name {
            "Yellow Card" => CardKind::Yellow,
            "Second Yellow" => CardKind::SecondYellow,
            "Red Card" => CardKind::Red,
            _ => CardKind::None,
        }
    }

    pub fn is_yellow(self) -> bool {
        matches!(self, CardKind::Yellow | CardKind::SecondYellow)
    }
}

/// One filtered foul instance: the unit of the training data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoulRecord {
    pub match_id: i64,
    pub event_id: String,
    pub index: i64,
    pub period: u8,
    pub minute: u32,
    pub second: u8,
    pub fouling_player_id: Option<i64>,
    pub fouling_team_id: i64,
    pub possession_team_id: i64,
    /// Raw event location, in the fouling team's attacking frame.
    pub location_committed: (f64, f64),
    /// Location oriented so the possession team attacks toward x = 120.
    pub location_attacking_frame: (f64, f64),
    pub label_yellow: bool,
    pub card_raw: CardKind,
}

/// Player and team display names collected from a match's event stream.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NameDirectory {
    pub players: BTreeMap<i64, String>,
    pub teams: BTreeMap<i64, String>,
}

impl NameDirectory {
    pub fn merge(&mut self, other: NameDirectory) {
        self.players.extend(other.players);
        self.teams.extend(other.teams);
    }

    pub fn player(&self, id: i64) -> String {
        self.players
            .get(&id)
            .cloned()
            .unwrap_or_else(|| format!("player {id}"))
    }

    pub fn team(&self, id: i64) -> String {
        self.teams
            .get(&id)
            .cloned()
            .unwrap_or_else(|| format!("team {id}"))
    }
}
