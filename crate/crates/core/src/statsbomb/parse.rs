//! Serde mirrors for the open-data JSON and conversion into the domain
//! types in [`super::types`].
//!
//! Events keep only the fields the pipeline reads. Nested objects that
//! matter downstream (cards, outcomes, end locations, lineups) are
//! flattened into the event's qualifier map under dotted keys such as
//! `foul_committed.card` or `pass.end_location`.

use std::collections::BTreeMap;

use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::{json, Value};

use super::types::{
    CompetitionRef, EventType, FramePlayer, FreezeFrame, Gender, MatchMeta, NameDirectory,
    RawEvent,
};
use super::DataError;

fn parse_slice<T: DeserializeOwned>(bytes: &[u8], what: &str) -> Result<T, DataError> {
    let mut de = serde_json::Deserializer::from_slice(bytes);
    serde_path_to_error::deserialize(&mut de).map_err(|err| {
        let line = err.inner().line();
        let column = err.inner().column();
        DataError::Parse {
            what: what.to_string(),
            field: err.path().to_string(),
            line,
            column,
            offset: byte_offset(bytes, line, column),
        }
    })
}

/// Byte offset of (1-based line, 1-based column) in `bytes`.
fn byte_offset(bytes: &[u8], line: usize, column: usize) -> usize {
    if line == 0 {
        return 0;
    }
    let mut seen_lines = 1;
    let mut offset = 0;
    for (i, &b) in bytes.iter().enumerate() {
        if seen_lines == line {
            offset = i;
            break;
        }
        if b == b'\n' {
            seen_lines += 1;
            offset = i + 1;
        }
    }
    (offset + column.saturating_sub(1)).min(bytes.len())
}

#[derive(Deserialize)]
struct IdName {
    id: Option<i64>,
    name: Option<String>,
}

#[derive(Deserialize)]
struct CompetitionJson {
    competition_id: i64,
    season_id: i64,
    competition_name: String,
    season_name: String,
    #[serde(default)]
    competition_gender: Option<String>,
}

pub fn parse_competitions(bytes: &[u8]) -> Result<Vec<CompetitionRef>, DataError> {
    let rows: Vec<CompetitionJson> = parse_slice(bytes, "competitions.json")?;
    Ok(rows
        .into_iter()
        .map(|c| CompetitionRef {
            competition_id: c.competition_id,
            season_id: c.season_id,
            competition_name: c.competition_name,
            season_name: c.season_name,
            gender: match c.competition_gender.as_deref() {
                Some("female") => Gender::Female,
                _ => Gender::Male,
            },
        })
        .collect())
}

#[derive(Deserialize)]
struct MatchTeamJson {
    #[serde(alias = "home_team_id", alias = "away_team_id")]
    id: i64,
    #[serde(alias = "home_team_name", alias = "away_team_name")]
    name: String,
}

#[derive(Deserialize)]
struct MatchCompetitionJson {
    competition_id: i64,
    competition_name: String,
}

#[derive(Deserialize)]
struct MatchSeasonJson {
    season_id: i64,
    season_name: String,
}

#[derive(Deserialize)]
struct MatchJson {
    match_id: i64,
    competition: MatchCompetitionJson,
    season: MatchSeasonJson,
    home_team: MatchTeamJson,
    away_team: MatchTeamJson,
    home_score: u32,
    away_score: u32,
    match_date: String,
    #[serde(default)]
    kick_off: Option<String>,
}

pub fn parse_matches(bytes: &[u8], what: &str) -> Result<Vec<MatchMeta>, DataError> {
    let rows: Vec<MatchJson> = parse_slice(bytes, what)?;
    Ok(rows
        .into_iter()
        .map(|m| MatchMeta {
            match_id: m.match_id,
            competition: CompetitionRef {
                competition_id: m.competition.competition_id,
                season_id: m.season.season_id,
                competition_name: m.competition.competition_name,
                season_name: m.season.season_name,
                gender: Gender::Male,
            },
            home_team_id: m.home_team.id,
            home_team_name: m.home_team.name,
            away_team_id: m.away_team.id,
            away_team_name: m.away_team.name,
            home_score: m.home_score,
            away_score: m.away_score,
            kickoff: match m.kick_off {
                Some(t) => format!("{} {}", m.match_date, t),
                None => m.match_date,
            },
        })
        .collect())
}

#[derive(Deserialize)]
struct FoulCommittedJson {
    #[serde(rename = "type")]
    type_: Option<IdName>,
    card: Option<IdName>,
}

#[derive(Deserialize)]
struct BadBehaviourJson {
    card: Option<IdName>,
}

#[derive(Deserialize)]
struct ShotJson {
    outcome: Option<IdName>,
    end_location: Option<Vec<f64>>,
}

#[derive(Deserialize)]
struct PassJson {
    outcome: Option<IdName>,
    end_location: Option<Vec<f64>>,
    #[serde(default)]
    cross: Option<bool>,
}

#[derive(Deserialize)]
struct CarryJson {
    end_location: Option<Vec<f64>>,
}

#[derive(Deserialize)]
struct OutcomeOnlyJson {
    outcome: Option<IdName>,
}

#[derive(Deserialize)]
struct DuelJson {
    #[serde(rename = "type")]
    type_: Option<IdName>,
    outcome: Option<IdName>,
}

#[derive(Deserialize)]
struct SubstitutionJson {
    replacement: Option<IdName>,
}

#[derive(Deserialize)]
struct LineupEntryJson {
    player: IdName,
}

#[derive(Deserialize)]
struct TacticsJson {
    lineup: Vec<LineupEntryJson>,
}

#[derive(Deserialize)]
struct EventJson {
    id: String,
    index: i64,
    period: u8,
    minute: u32,
    second: u8,
    #[serde(rename = "type")]
    type_: IdName,
    team: Option<IdName>,
    player: Option<IdName>,
    possession_team: Option<IdName>,
    location: Option<Vec<f64>>,
    #[serde(default)]
    related_events: Vec<String>,
    foul_committed: Option<FoulCommittedJson>,
    bad_behaviour: Option<BadBehaviourJson>,
    shot: Option<ShotJson>,
    pass: Option<PassJson>,
    carry: Option<CarryJson>,
    dribble: Option<OutcomeOnlyJson>,
    duel: Option<DuelJson>,
    interception: Option<OutcomeOnlyJson>,
    substitution: Option<SubstitutionJson>,
    tactics: Option<TacticsJson>,
}

fn location_pair(loc: Option<Vec<f64>>) -> Option<(f64, f64)> {
    let loc = loc?;
    if loc.len() < 2 {
        return None;
    }
    Some((loc[0], loc[1]))
}

fn fmt_location(loc: &[f64]) -> String {
    loc.iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

/// Parse a qualifier value written by [`fmt_location`] back into a pair.
pub fn location_from_qualifier(value: &str) -> Option<(f64, f64)> {
    let mut parts = value.split(',');
    let x = parts.next()?.trim().parse().ok()?;
    let y = parts.next()?.trim().parse().ok()?;
    Some((x, y))
}

fn insert_name(map: &mut BTreeMap<String, String>, key: &str, field: &Option<IdName>) {
    if let Some(IdName { name: Some(name), .. }) = field {
        map.insert(key.to_string(), name.clone());
    }
}

impl EventJson {
    fn flatten_qualifiers(&self) -> BTreeMap<String, String> {
        let mut q = BTreeMap::new();
        if let Some(fc) = &self.foul_committed {
            insert_name(&mut q, "foul_committed.type", &fc.type_);
            insert_name(&mut q, "foul_committed.card", &fc.card);
        }
        if let Some(bb) = &self.bad_behaviour {
            insert_name(&mut q, "bad_behaviour.card", &bb.card);
        }
        if let Some(shot) = &self.shot {
            insert_name(&mut q, "shot.outcome", &shot.outcome);
            if let Some(end) = &shot.end_location {
                q.insert("shot.end_location".to_string(), fmt_location(end));
            }
        }
        if let Some(pass) = &self.pass {
            insert_name(&mut q, "pass.outcome", &pass.outcome);
            if let Some(end) = &pass.end_location {
                q.insert("pass.end_location".to_string(), fmt_location(end));
            }
            if pass.cross == Some(true) {
                q.insert("pass.cross".to_string(), "true".to_string());
            }
        }
        if let Some(carry) = &self.carry {
            if let Some(end) = &carry.end_location {
                q.insert("carry.end_location".to_string(), fmt_location(end));
            }
        }
        if let Some(dribble) = &self.dribble {
            insert_name(&mut q, "dribble.outcome", &dribble.outcome);
        }
        if let Some(duel) = &self.duel {
            insert_name(&mut q, "duel.type", &duel.type_);
            insert_name(&mut q, "duel.outcome", &duel.outcome);
        }
        if let Some(ic) = &self.interception {
            insert_name(&mut q, "interception.outcome", &ic.outcome);
        }
        if let Some(sub) = &self.substitution {
            if let Some(IdName { id: Some(id), .. }) = &sub.replacement {
                q.insert("substitution.replacement.id".to_string(), id.to_string());
            }
        }
        if let Some(tactics) = &self.tactics {
            let ids: Vec<String> = tactics
                .lineup
                .iter()
                .filter_map(|e| e.player.id)
                .map(|id| id.to_string())
                .collect();
            q.insert("tactics.lineup".to_string(), ids.join(","));
        }
        q
    }

    fn collect_names(&self, names: &mut NameDirectory) {
        for field in [&self.team, &self.possession_team] {
            if let Some(IdName { id: Some(id), name: Some(name) }) = field {
                names.teams.insert(*id, name.clone());
            }
        }
        if let Some(IdName { id: Some(id), name: Some(name) }) = &self.player {
            names.players.insert(*id, name.clone());
        }
        if let Some(sub) = &self.substitution {
            if let Some(IdName { id: Some(id), name: Some(name) }) = &sub.replacement {
                names.players.insert(*id, name.clone());
            }
        }
        if let Some(tactics) = &self.tactics {
            for entry in &tactics.lineup {
                if let (Some(id), Some(name)) = (entry.player.id, &entry.player.name) {
                    names.players.insert(id, name.clone());
                }
            }
        }
    }
}

pub fn parse_events(bytes: &[u8], what: &str) -> Result<(Vec<RawEvent>, NameDirectory), DataError> {
    let rows: Vec<EventJson> = parse_slice(bytes, what)?;
    let mut names = NameDirectory::default();
    let mut events = Vec::with_capacity(rows.len());
    for row in rows {
        row.collect_names(&mut names);
        let qualifiers = row.flatten_qualifiers();
        events.push(RawEvent {
            event_id: row.id,
            index: row.index,
            period: row.period,
            minute: row.minute,
            second: row.second,
            event_type: EventType::from_name(row.type_.name.as_deref().unwrap_or("")),
            team_id: row.team.and_then(|t| t.id),
            player_id: row.player.and_then(|p| p.id),
            possession_team_id: row.possession_team.and_then(|t| t.id),
            location: location_pair(row.location),
            qualifiers,
            related_event_ids: row.related_events,
        });
    }
    events.sort_by_key(|e| e.index);
    Ok((events, names))
}

#[derive(Deserialize)]
struct FramePlayerJson {
    location: Vec<f64>,
    teammate: bool,
    actor: bool,
    keeper: bool,
}

#[derive(Deserialize)]
struct FrameJson {
    event_uuid: String,
    freeze_frame: Vec<FramePlayerJson>,
}

pub fn parse_frames(bytes: &[u8], what: &str) -> Result<Vec<FreezeFrame>, DataError> {
    let rows: Vec<FrameJson> = parse_slice(bytes, what)?;
    Ok(rows
        .into_iter()
        .map(|f| FreezeFrame {
            event_id: f.event_uuid,
            players: f
                .freeze_frame
                .into_iter()
                .filter(|p| p.location.len() >= 2)
                .map(|p| FramePlayer {
                    location: (p.location[0], p.location[1]),
                    teammate: p.teammate,
                    actor: p.actor,
                    keeper: p.keeper,
                })
                .collect(),
        })
        .collect())
}

fn type_id(name: &str) -> i64 {
    match name {
        "Ball Recovery" => 2,
        "Dispossessed" => 3,
        "Duel" => 4,
        "Clearance" => 9,
        "Interception" => 10,
        "Dribble" => 14,
        "Shot" => 16,
        "Half Start" => 18,
        "Substitution" => 19,
        "Own Goal Against" => 20,
        "Foul Won" => 21,
        "Foul Committed" => 22,
        "Bad Behaviour" => 24,
        "Own Goal For" => 25,
        "Pass" => 30,
        "Half End" => 34,
        "Starting XI" => 35,
        "Miscontrol" => 38,
        "Carry" => 43,
        _ => 0,
    }
}

fn qualifier_id(name: &str) -> i64 {
    match name {
        "Red Card" => 5,
        "Second Yellow" => 6,
        "Yellow Card" => 7,
        "Complete" => 8,
        "Incomplete" => 9,
        "6 Seconds" => 19,
        "Backpass Pick" => 20,
        "Dangerous Play" => 21,
        "Dive" => 22,
        "Foul Out" => 23,
        "Handball" => 24,
        "Goal" => 97,
        "Tackle" => 11,
        "Won" => 4,
        _ => 0,
    }
}

fn id_name(id: i64, name: &str) -> Value {
    json!({ "id": id, "name": name })
}

fn qualifier_object(name: &str) -> Value {
    id_name(qualifier_id(name), name)
}

fn location_value(value: &str) -> Value {
    Value::Array(
        value
            .split(',')
            .filter_map(|v| v.trim().parse::<f64>().ok())
            .map(|v| json!(v))
            .collect(),
    )
}

/// Rebuild the open-data JSON shape for one event, restoring flattened
/// qualifiers to their nested objects. Only retained fields appear, so
/// `parse_events(event_to_json(e)) == e`.
pub fn event_to_json(event: &RawEvent, names: &NameDirectory) -> Value {
    let type_name = event.event_type.name();
    let mut obj = serde_json::Map::new();
    obj.insert("id".into(), json!(event.event_id));
    obj.insert("index".into(), json!(event.index));
    obj.insert("period".into(), json!(event.period));
    obj.insert(
        "timestamp".into(),
        json!(format!("00:{:02}:{:02}.000", event.minute.min(99), event.second)),
    );
    obj.insert("minute".into(), json!(event.minute));
    obj.insert("second".into(), json!(event.second));
    obj.insert("type".into(), id_name(type_id(type_name), type_name));
    if let Some(team_id) = event.team_id {
        obj.insert("team".into(), id_name(team_id, &names.team(team_id)));
    }
    if let Some(player_id) = event.player_id {
        obj.insert("player".into(), id_name(player_id, &names.player(player_id)));
    }
    if let Some(pt) = event.possession_team_id {
        obj.insert("possession_team".into(), id_name(pt, &names.team(pt)));
    }
    if let Some((x, y)) = event.location {
        obj.insert("location".into(), json!([x, y]));
    }
    if !event.related_event_ids.is_empty() {
        obj.insert("related_events".into(), json!(event.related_event_ids));
    }

    let q = &event.qualifiers;
    let mut foul = serde_json::Map::new();
    if let Some(t) = q.get("foul_committed.type") {
        foul.insert("type".into(), qualifier_object(t));
    }
    if let Some(c) = q.get("foul_committed.card") {
        foul.insert("card".into(), qualifier_object(c));
    }
    if !foul.is_empty() {
        obj.insert("foul_committed".into(), Value::Object(foul));
    }
    if let Some(c) = q.get("bad_behaviour.card") {
        obj.insert("bad_behaviour".into(), json!({ "card": qualifier_object(c) }));
    }
    let mut shot = serde_json::Map::new();
    if let Some(o) = q.get("shot.outcome") {
        shot.insert("outcome".into(), qualifier_object(o));
    }
    if let Some(end) = q.get("shot.end_location") {
        shot.insert("end_location".into(), location_value(end));
    }
    if !shot.is_empty() {
        obj.insert("shot".into(), Value::Object(shot));
    }
    let mut pass = serde_json::Map::new();
    if let Some(o) = q.get("pass.outcome") {
        pass.insert("outcome".into(), qualifier_object(o));
    }
    if let Some(end) = q.get("pass.end_location") {
        pass.insert("end_location".into(), location_value(end));
    }
    if q.get("pass.cross").map(String::as_str) == Some("true") {
        pass.insert("cross".into(), Value::Bool(true));
    }
    if !pass.is_empty() {
        obj.insert("pass".into(), Value::Object(pass));
    }
    if let Some(end) = q.get("carry.end_location") {
        obj.insert("carry".into(), json!({ "end_location": location_value(end) }));
    }
    if let Some(o) = q.get("dribble.outcome") {
        obj.insert("dribble".into(), json!({ "outcome": qualifier_object(o) }));
    }
    let mut duel = serde_json::Map::new();
    if let Some(t) = q.get("duel.type") {
        duel.insert("type".into(), qualifier_object(t));
    }
    if let Some(o) = q.get("duel.outcome") {
        duel.insert("outcome".into(), qualifier_object(o));
    }
    if !duel.is_empty() {
        obj.insert("duel".into(), Value::Object(duel));
    }
    if let Some(o) = q.get("interception.outcome") {
        obj.insert("interception".into(), json!({ "outcome": qualifier_object(o) }));
    }
    if let Some(id) = q.get("substitution.replacement.id") {
        if let Ok(id) = id.parse::<i64>() {
            obj.insert(
                "substitution".into(),
                json!({ "replacement": id_name(id, &names.player(id)) }),
            );
        }
    }
    if let Some(lineup) = q.get("tactics.lineup") {
        let entries: Vec<Value> = lineup
            .split(',')
            .filter_map(|s| s.trim().parse::<i64>().ok())
            .enumerate()
            .map(|(i, id)| {
                json!({
                    "player": id_name(id, &names.player(id)),
                    "jersey_number": i + 1,
                })
            })
            .collect();
        obj.insert("tactics".into(), json!({ "formation": 442, "lineup": entries }));
    }
    Value::Object(obj)
}
