//! Deterministic synthetic corpus in the open-data on-disk layout.
//!
//! Streams are plausible rather than realistic: possession spells of
//! passes and carries punctuated by shots, fouls with cards drawn from
//! a known generating process, substitutions, and the bookkeeping
//! events the replay relies on. Everything derives from one seed, so
//! end-to-end runs and their outputs are reproducible without a
//! network.

use std::collections::BTreeMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::geometry;
use crate::scalar::Scalar;
use crate::statsbomb::parse::event_to_json;
use crate::statsbomb::{
    CompetitionRef, EventType, FramePlayer, FreezeFrame, Gender, MatchMeta, NameDirectory,
    RawEvent, EXCLUDED_FOUL_TYPES,
};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub competition_id: i64,
    pub season_id: i64,
    pub n_matches: u32,
    pub seed: u64,
    /// Fraction of fouls that get a 360 freeze frame; `0.0` writes no
    /// three-sixty directory at all.
    pub frame_coverage: f64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            competition_id: 999,
            season_id: 1,
            n_matches: 8,
            seed: 7,
            frame_coverage: 0.85,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthCorpus {
    pub competition: CompetitionRef,
    pub matches: Vec<MatchMeta>,
    pub events: BTreeMap<i64, Vec<RawEvent>>,
    pub frames: BTreeMap<i64, Vec<FreezeFrame>>,
    pub names: NameDirectory,
}

const TEAM_NAMES: [&str; 8] = [
    "Asterwick Rovers",
    "Bellmoor United",
    "Caldale Town",
    "Dunkirk Harriers",
    "Eastvale Albion",
    "Fenwick City",
    "Grayling FC",
    "Holmstead Athletic",
];

const FIRST_NAMES: [&str; 16] = [
    "Ade", "Bodhi", "Casper", "Dino", "Elio", "Farid", "Gino", "Hamza", "Ivo", "Jari", "Kenji",
    "Lev", "Milan", "Nori", "Otto", "Pavel",
];

const LAST_NAMES: [&str; 16] = [
    "Aalto", "Brandt", "Costa", "Dierckx", "Egede", "Ferrer", "Garrido", "Hove", "Ilic", "Janda",
    "Kovar", "Lindt", "Moreau", "Novak", "Okafor", "Petit",
];

fn team_id(idx: usize) -> i64 {
    101 + idx as i64
}

fn roster(team: i64) -> Vec<i64> {
    (1..=16).map(|n| team * 100 + n).collect()
}

fn player_name(player_id: i64) -> String {
    let n = player_id as usize;
    format!("{} {}", FIRST_NAMES[(n * 7) % 16], LAST_NAMES[(n * 3 + n / 100) % 16])
}

/// Card probability for a kept foul under the generating process. The
/// signal lives in features the models see: proximity to goal, the
/// fouler's prior count, and the clock.
fn card_probability(dist_to_goal: f64, prior_player_fouls: u32, minute: u32) -> f64 {
    let z = -1.15 - 0.035 * (dist_to_goal - 25.0) + 0.5 * f64::from(prior_player_fouls)
        + 0.012 * f64::from(minute);
    z.min(3.0).sigmoid()
}

struct MatchSim<'a> {
    rng: &'a mut ChaCha8Rng,
    match_id: i64,
    events: Vec<RawEvent>,
    frames: Vec<FreezeFrame>,
    frame_coverage: f64,
    index: i64,
    period: u8,
    /// Seconds on the event clock (restarts at the period offset).
    clock: u32,
    on_pitch: BTreeMap<i64, Vec<i64>>,
    bench: BTreeMap<i64, Vec<i64>>,
    yellows: BTreeMap<i64, u32>,
    player_fouls: BTreeMap<i64, u32>,
    goals: BTreeMap<i64, u32>,
    teams: [i64; 2],
}

impl<'a> MatchSim<'a> {
    fn new(rng: &'a mut ChaCha8Rng, match_id: i64, home: i64, away: i64, coverage: f64) -> Self {
        let mut on_pitch = BTreeMap::new();
        let mut bench = BTreeMap::new();
        for &t in &[home, away] {
            let squad = roster(t);
            on_pitch.insert(t, squad[..11].to_vec());
            bench.insert(t, squad[11..].to_vec());
        }
        MatchSim {
            rng,
            match_id,
            events: Vec::new(),
            frames: Vec::new(),
            frame_coverage: coverage,
            index: 0,
            period: 1,
            clock: 0,
            on_pitch,
            bench,
            yellows: BTreeMap::new(),
            player_fouls: BTreeMap::new(),
            goals: BTreeMap::new(),
            teams: [home, away],
        }
    }

    fn push(
        &mut self,
        event_type: EventType,
        team: i64,
        player: Option<i64>,
        possession: i64,
        location: Option<(f64, f64)>,
        qualifiers: &[(&str, String)],
        related: Vec<String>,
    ) -> String {
        self.index += 1;
        let id = format!("{}-{:04}", self.match_id, self.index);
        self.events.push(RawEvent {
            event_id: id.clone(),
            index: self.index,
            period: self.period,
            minute: self.clock / 60,
            second: (self.clock % 60) as u8,
            event_type,
            team_id: Some(team),
            player_id: player,
            possession_team_id: Some(possession),
            location,
            qualifiers: qualifiers
                .iter()
                .map(|(k, v)| (k.to_string(), v.clone()))
                .collect(),
            related_event_ids: related,
        });
        id
    }

    fn pick_player(&mut self, team: i64) -> i64 {
        let pool = &self.on_pitch[&team];
        if pool.is_empty() {
            // A side reduced to nobody cannot happen with these card
            // rates, but the generator must never panic mid-stream.
            return team * 100 + 1;
        }
        pool[self.rng.gen_range(0..pool.len())]
    }

    fn opponent(&self, team: i64) -> i64 {
        if team == self.teams[0] {
            self.teams[1]
        } else {
            self.teams[0]
        }
    }

    fn send_off(&mut self, team: i64, player: i64) {
        self.on_pitch.get_mut(&team).unwrap().retain(|&p| p != player);
    }

    fn maybe_frame(&mut self, event_id: &str, foul_committed: (f64, f64)) {
        if !self.rng.gen_bool(self.frame_coverage) {
            return;
        }
        // Locations are in the fouling (acting) team's attacking frame,
        // where the fouler's own goal sits at x = 0.
        let mut players = vec![FramePlayer {
            location: foul_committed,
            teammate: true,
            actor: true,
            keeper: false,
        }];
        players.push(FramePlayer {
            location: (self.rng.gen_range(2.0..8.0), self.rng.gen_range(34.0..46.0)),
            teammate: true,
            actor: false,
            keeper: true,
        });
        for _ in 0..self.rng.gen_range(1..=4) {
            // Defending teammates goal side of the foul.
            players.push(FramePlayer {
                location: (
                    (foul_committed.0 - self.rng.gen_range(2.0..25.0)).max(1.0),
                    self.rng.gen_range(10.0..70.0),
                ),
                teammate: true,
                actor: false,
                keeper: false,
            });
        }
        for _ in 0..self.rng.gen_range(0..=4) {
            // Attackers past the ball, i.e. at lower x in this frame.
            players.push(FramePlayer {
                location: (
                    (foul_committed.0 - self.rng.gen_range(1.0..20.0)).max(1.0),
                    self.rng.gen_range(10.0..70.0),
                ),
                teammate: false,
                actor: false,
                keeper: false,
            });
        }
        for _ in 0..self.rng.gen_range(1..=4) {
            // Trailing attackers behind the ball.
            players.push(FramePlayer {
                location: (
                    (foul_committed.0 + self.rng.gen_range(1.0..20.0)).min(119.0),
                    self.rng.gen_range(10.0..70.0),
                ),
                teammate: false,
                actor: false,
                keeper: false,
            });
        }
        self.frames.push(FreezeFrame { event_id: event_id.to_string(), players });
    }

    fn foul(&mut self, possession: i64, spot: (f64, f64)) {
        let offensive = self.rng.gen_bool(0.12);
        let (fouled, fouler) = if offensive {
            (self.opponent(possession), possession)
        } else {
            (possession, self.opponent(possession))
        };
        // `spot` is in the possession frame; express each event in its
        // acting team's own frame.
        let fouled_view = if fouled == possession { spot } else { geometry::mirror_xy(spot) };
        let fouler_view = geometry::mirror_xy(fouled_view);
        let fouling_player = self.pick_player(fouler);

        let mut qualifiers: Vec<(&str, String)> = Vec::new();
        let excluded = self.rng.gen_bool(0.15);
        if excluded {
            let t = EXCLUDED_FOUL_TYPES[self.rng.gen_range(0..EXCLUDED_FOUL_TYPES.len())];
            qualifiers.push(("foul_committed.type", t.to_string()));
        } else {
            let dist = geometry::distance_to_goal(geometry::Point::new(
                fouled_view.0,
                fouled_view.1,
            ));
            let prior = *self.player_fouls.get(&fouling_player).unwrap_or(&0);
            let p_card = card_probability(dist, prior, self.clock / 60);
            *self.player_fouls.entry(fouling_player).or_insert(0) += 1;
            if self.rng.gen_bool(p_card) {
                if self.rng.gen_bool(0.04) {
                    qualifiers.push(("foul_committed.card", "Red Card".to_string()));
                    self.send_off(fouler, fouling_player);
                } else {
                    let prior_yellows = self.yellows.entry(fouling_player).or_insert(0);
                    *prior_yellows += 1;
                    if *prior_yellows >= 2 {
                        qualifiers.push(("foul_committed.card", "Second Yellow".to_string()));
                        self.send_off(fouler, fouling_player);
                    } else {
                        qualifiers.push(("foul_committed.card", "Yellow Card".to_string()));
                    }
                }
            }
        }

        let foul_id = self.push(
            EventType::FoulCommitted,
            fouler,
            Some(fouling_player),
            fouled,
            Some(fouler_view),
            &qualifiers,
            vec![],
        );
        if self.rng.gen_bool(0.9) {
            let fouled_player = self.pick_player(fouled);
            let won_id = self.push(
                EventType::FoulWon,
                fouled,
                Some(fouled_player),
                fouled,
                Some(fouled_view),
                &[],
                vec![foul_id.clone()],
            );
            let foul = self
                .events
                .iter_mut()
                .find(|e| e.event_id == foul_id)
                .expect("just pushed");
            foul.related_event_ids.push(won_id);
        }
        self.maybe_frame(&foul_id.clone(), fouler_view);
    }

    fn shot(&mut self, team: i64, spot: (f64, f64)) {
        let shooter = self.pick_player(team);
        let dist = geometry::distance_to_goal(geometry::Point::new(spot.0, spot.1));
        let p_goal = (0.42 - dist / 90.0).clamp(0.03, 0.4);
        let goal = self.rng.gen_bool(p_goal);
        let outcome = if goal {
            "Goal"
        } else if self.rng.gen_bool(0.5) {
            "Saved"
        } else {
            "Off T"
        };
        let end = if goal {
            (120.0, self.rng.gen_range(36.5..43.5))
        } else {
            (
                self.rng.gen_range(118.0..120.0),
                self.rng.gen_range(30.0..50.0),
            )
        };
        self.push(
            EventType::Shot,
            team,
            Some(shooter),
            team,
            Some(spot),
            &[
                ("shot.outcome", outcome.to_string()),
                ("shot.end_location", format!("{},{}", end.0, end.1)),
            ],
            vec![],
        );
        if goal {
            *self.goals.entry(team).or_insert(0) += 1;
        }
    }

    fn own_goal(&mut self, unlucky: i64) {
        let benefiting = self.opponent(unlucky);
        let scorer = self.pick_player(unlucky);
        let spot = (self.rng.gen_range(1.0..6.0), self.rng.gen_range(36.0..44.0));
        self.push(
            EventType::OwnGoalAgainst,
            unlucky,
            Some(scorer),
            benefiting,
            Some(spot),
            &[],
            vec![],
        );
        self.push(EventType::OwnGoalFor, benefiting, None, benefiting, None, &[], vec![]);
        *self.goals.entry(benefiting).or_insert(0) += 1;
    }

    fn substitution(&mut self, team: i64) {
        let Some(replacement) = self.bench.get_mut(&team).and_then(Vec::pop) else {
            return;
        };
        let leaving = self.pick_player(team);
        self.push(
            EventType::Substitution,
            team,
            Some(leaving),
            team,
            None,
            &[("substitution.replacement.id", replacement.to_string())],
            vec![],
        );
        let pool = self.on_pitch.get_mut(&team).unwrap();
        pool.retain(|&p| p != leaving);
        pool.push(replacement);
    }

    /// One possession spell: a few on-ball actions, then a terminal.
    /// Returns the team in possession afterwards.
    fn spell(&mut self, team: i64) -> i64 {
        let mut spot: (f64, f64) =
            (self.rng.gen_range(15.0..55.0), self.rng.gen_range(15.0..65.0));
        for _ in 0..self.rng.gen_range(2..=5) {
            let player = self.pick_player(team);
            let end = (
                (spot.0 + self.rng.gen_range(2.0..18.0)).min(119.0),
                (spot.1 + self.rng.gen_range(-12.0..12.0)).clamp(1.0, 79.0),
            );
            let end_q = format!("{},{}", end.0, end.1);
            self.clock += self.rng.gen_range(10..35);
            match self.rng.gen_range(0..10) {
                0..=5 => {
                    let mut q: Vec<(&str, String)> = vec![("pass.end_location", end_q)];
                    if end.0 > 90.0 && self.rng.gen_bool(0.2) {
                        q.push(("pass.cross", "true".to_string()));
                    }
                    if self.rng.gen_bool(0.12) {
                        q.push(("pass.outcome", "Incomplete".to_string()));
                        self.push(EventType::Pass, team, Some(player), team, Some(spot), &q, vec![]);
                        return self.opponent(team);
                    }
                    self.push(EventType::Pass, team, Some(player), team, Some(spot), &q, vec![]);
                }
                6..=8 => {
                    self.push(
                        EventType::Carry,
                        team,
                        Some(player),
                        team,
                        Some(spot),
                        &[("carry.end_location", end_q)],
                        vec![],
                    );
                }
                _ => {
                    let won = self.rng.gen_bool(0.55);
                    self.push(
                        EventType::Dribble,
                        team,
                        Some(player),
                        team,
                        Some(spot),
                        &[("dribble.outcome", if won { "Complete" } else { "Incomplete" }.to_string())],
                        vec![],
                    );
                    if !won {
                        return self.opponent(team);
                    }
                }
            }
            spot = end;
        }

        self.clock += self.rng.gen_range(5..20);
        let roll = self.rng.gen_range(0..100);
        if roll < 30 && spot.0 > 70.0 {
            self.shot(team, spot);
            self.opponent(team)
        } else if roll < 55 {
            self.foul(team, spot);
            team
        } else if roll < 75 {
            let tackler = self.pick_player(self.opponent(team));
            self.push(
                EventType::Duel,
                self.opponent(team),
                Some(tackler),
                team,
                Some(geometry::mirror_xy(spot)),
                &[("duel.type", "Tackle".to_string()), ("duel.outcome", "Won".to_string())],
                vec![],
            );
            self.opponent(team)
        } else if roll < 88 {
            let catcher = self.pick_player(self.opponent(team));
            self.push(
                EventType::Interception,
                self.opponent(team),
                Some(catcher),
                team,
                Some(geometry::mirror_xy(spot)),
                &[("interception.outcome", "Won".to_string())],
                vec![],
            );
            self.opponent(team)
        } else {
            let loser = self.pick_player(team);
            self.push(EventType::Dispossessed, team, Some(loser), team, Some(spot), &[], vec![]);
            self.opponent(team)
        }
    }

    fn run(mut self) -> (Vec<RawEvent>, Vec<FreezeFrame>, BTreeMap<i64, u32>) {
        let [home, away] = self.teams;
        for &t in &[home, away] {
            let lineup = self.on_pitch[&t]
                .iter()
                .map(i64::to_string)
                .collect::<Vec<_>>()
                .join(",");
            self.push(EventType::StartingXi, t, None, home, None, &[("tactics.lineup", lineup)], vec![]);
        }

        let mut sub_times: Vec<(u32, i64)> = Vec::new();
        for &t in &[home, away] {
            for _ in 0..self.rng.gen_range(2..=3) {
                sub_times.push((self.rng.gen_range(50 * 60..85 * 60), t));
            }
        }
        sub_times.sort_unstable();
        let mut own_goal_at: Option<(u32, i64)> = if self.rng.gen_bool(0.08) {
            Some((
                self.rng.gen_range(10 * 60..80 * 60),
                self.teams[self.rng.gen_range(0..2)],
            ))
        } else {
            None
        };
        let mut bad_behaviour_at: Option<u32> = if self.rng.gen_bool(0.15) {
            Some(self.rng.gen_range(20 * 60..88 * 60))
        } else {
            None
        };

        let mut possession = home;
        for period in 1..=2u8 {
            self.period = period;
            let start = if period == 1 { 0 } else { 45 * 60 };
            let end = start + 45 * 60 + self.rng.gen_range(30..240);
            self.clock = start;
            for &t in &[home, away] {
                self.push(EventType::HalfStart, t, None, possession, None, &[], vec![]);
            }
            while self.clock < end {
                while let Some(&(at, team)) = sub_times.first() {
                    if at > self.clock || period == 1 {
                        break;
                    }
                    sub_times.remove(0);
                    self.substitution(team);
                }
                if let Some((at, team)) = own_goal_at {
                    if at <= self.clock {
                        self.own_goal(team);
                        own_goal_at = None;
                    }
                }
                if let Some(at) = bad_behaviour_at {
                    if at <= self.clock {
                        let team = self.teams[self.rng.gen_range(0..2)];
                        let player = self.pick_player(team);
                        let tally = self.yellows.entry(player).or_insert(0);
                        *tally += 1;
                        let second = *tally >= 2;
                        let card = if second { "Second Yellow" } else { "Yellow Card" };
                        self.push(
                            EventType::BadBehaviour,
                            team,
                            Some(player),
                            possession,
                            None,
                            &[("bad_behaviour.card", card.to_string())],
                            vec![],
                        );
                        if second {
                            self.send_off(team, player);
                        }
                        bad_behaviour_at = None;
                    }
                }
                possession = self.spell(possession);
            }
            // The last spell may have run past the scheduled end; the
            // half ends wherever the clock actually stands.
            self.clock = self.clock.max(end);
            for &t in &[home, away] {
                self.push(EventType::HalfEnd, t, None, possession, None, &[], vec![]);
            }
        }
        (self.events, self.frames, self.goals)
    }
}

pub fn generate(spec: &SynthSpec) -> SynthCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let competition = CompetitionRef {
        competition_id: spec.competition_id,
        season_id: spec.season_id,
        competition_name: "Synthetic League".to_string(),
        season_name: "2024".to_string(),
        gender: Gender::Male,
    };

    let mut names = NameDirectory::default();
    for (idx, name) in TEAM_NAMES.iter().enumerate() {
        let t = team_id(idx);
        names.teams.insert(t, name.to_string());
        for p in roster(t) {
            names.players.insert(p, player_name(p));
        }
    }

    let mut matches = Vec::new();
    let mut events = BTreeMap::new();
    let mut frames = BTreeMap::new();
    for m in 0..spec.n_matches as usize {
        let home_idx = m % TEAM_NAMES.len();
        let mut away_idx = (m + 1 + m / TEAM_NAMES.len()) % TEAM_NAMES.len();
        if away_idx == home_idx {
            away_idx = (home_idx + 1) % TEAM_NAMES.len();
        }
        let (home, away) = (team_id(home_idx), team_id(away_idx));
        let match_id = 9000 + m as i64;
        let sim = MatchSim::new(&mut rng, match_id, home, away, spec.frame_coverage);
        let (match_events, match_frames, goals) = sim.run();
        matches.push(MatchMeta {
            match_id,
            competition: competition.clone(),
            home_team_id: home,
            home_team_name: names.team(home),
            away_team_id: away,
            away_team_name: names.team(away),
            home_score: *goals.get(&home).unwrap_or(&0),
            away_score: *goals.get(&away).unwrap_or(&0),
            kickoff: format!("2024-06-{:02} 16:00:00.000", 1 + m % 28),
        });
        events.insert(match_id, match_events);
        if spec.frame_coverage > 0.0 {
            frames.insert(match_id, match_frames);
        }
    }

    SynthCorpus { competition, matches, events, frames, names }
}

fn competitions_json(corpus: &SynthCorpus) -> Value {
    let c = &corpus.competition;
    json!([{
        "competition_id": c.competition_id,
        "season_id": c.season_id,
        "competition_name": c.competition_name,
        "season_name": c.season_name,
        "competition_gender": match c.gender { Gender::Male => "male", Gender::Female => "female" },
    }])
}

fn matches_json(corpus: &SynthCorpus) -> Value {
    Value::Array(
        corpus
            .matches
            .iter()
            .map(|m| {
                let (date, kick) = m.kickoff.split_once(' ').unwrap_or((m.kickoff.as_str(), ""));
                json!({
                    "match_id": m.match_id,
                    "competition": {
                        "competition_id": m.competition.competition_id,
                        "competition_name": m.competition.competition_name,
                    },
                    "season": {
                        "season_id": m.competition.season_id,
                        "season_name": m.competition.season_name,
                    },
                    "home_team": {
                        "home_team_id": m.home_team_id,
                        "home_team_name": m.home_team_name,
                    },
                    "away_team": {
                        "away_team_id": m.away_team_id,
                        "away_team_name": m.away_team_name,
                    },
                    "home_score": m.home_score,
                    "away_score": m.away_score,
                    "match_date": date,
                    "kick_off": kick,
                })
            })
            .collect(),
    )
}

fn frames_json(frames: &[FreezeFrame]) -> Value {
    Value::Array(
        frames
            .iter()
            .map(|f| {
                json!({
                    "event_uuid": f.event_id,
                    "visible_area": [],
                    "freeze_frame": f.players.iter().map(|p| json!({
                        "teammate": p.teammate,
                        "actor": p.actor,
                        "keeper": p.keeper,
                        "location": [p.location.0, p.location.1],
                    })).collect::<Vec<_>>(),
                })
            })
            .collect(),
    )
}

/// Write the corpus under `root` in the open-data directory layout:
/// `competitions.json`, `matches/{competition}/{season}.json`,
/// `events/{match}.json`, and `three-sixty/{match}.json`.
pub fn write_corpus(corpus: &SynthCorpus, root: &Path) -> std::io::Result<()> {
    let pretty = |v: &Value| {
        let mut s = serde_json::to_string_pretty(v).expect("corpus serializes");
        s.push('\n');
        s
    };
    std::fs::create_dir_all(root)?;
    std::fs::write(root.join("competitions.json"), pretty(&competitions_json(corpus)))?;

    let match_dir = root.join(format!("matches/{}", corpus.competition.competition_id));
    std::fs::create_dir_all(&match_dir)?;
    std::fs::write(
        match_dir.join(format!("{}.json", corpus.competition.season_id)),
        pretty(&matches_json(corpus)),
    )?;

    std::fs::create_dir_all(root.join("events"))?;
    for (match_id, events) in &corpus.events {
        let body = Value::Array(
            events
                .iter()
                .map(|e| event_to_json(e, &corpus.names))
                .collect(),
        );
        std::fs::write(root.join(format!("events/{match_id}.json")), pretty(&body))?;
    }

    if !corpus.frames.is_empty() {
        std::fs::create_dir_all(root.join("three-sixty"))?;
        for (match_id, frames) in &corpus.frames {
            std::fs::write(
                root.join(format!("three-sixty/{match_id}.json")),
                pretty(&frames_json(frames)),
            )?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statsbomb::{
        extract_fouls, load_competitions, load_frames, load_match_events, load_matches,
        DataSource,
    };

    #[test]
    fn generation_is_deterministic() {
        let spec = SynthSpec::default();
        assert_eq!(generate(&spec), generate(&spec));
        let other = generate(&SynthSpec { seed: 8, ..spec });
        assert_ne!(generate(&spec).events, other.events);
    }

    #[test]
    fn streams_are_indexed_and_time_ordered() {
        let corpus = generate(&SynthSpec::default());
        assert_eq!(corpus.matches.len(), 8);
        for events in corpus.events.values() {
            for pair in events.windows(2) {
                assert_eq!(pair[1].index, pair[0].index + 1);
                if pair[0].period == pair[1].period {
                    assert!(pair[1].time_seconds() >= pair[0].time_seconds());
                }
            }
            assert!(events.iter().any(|e| e.event_type == EventType::StartingXi));
            assert_eq!(
                events.iter().filter(|e| e.event_type == EventType::HalfEnd).count(),
                4
            );
        }
    }

    #[test]
    fn corpus_has_learnable_foul_volume() {
        let corpus = generate(&SynthSpec { n_matches: 12, ..SynthSpec::default() });
        let mut kept = 0usize;
        let mut yellows = 0usize;
        for (match_id, events) in &corpus.events {
            let extraction = extract_fouls(*match_id, events);
            kept += extraction.records.len();
            yellows += extraction.records.iter().filter(|r| r.label_yellow).count();
        }
        assert!(kept > 120, "only {kept} fouls kept");
        let rate = yellows as f64 / kept as f64;
        assert!((0.1..0.6).contains(&rate), "yellow rate {rate}");
    }

    #[test]
    fn match_scores_match_stream_goals() {
        let corpus = generate(&SynthSpec::default());
        for meta in &corpus.matches {
            let score = crate::context::final_score(&corpus.events[&meta.match_id]);
            assert_eq!(
                *score.get(&meta.home_team_id).unwrap_or(&0),
                i32::try_from(meta.home_score).unwrap(),
                "match {}",
                meta.match_id
            );
            assert_eq!(
                *score.get(&meta.away_team_id).unwrap_or(&0),
                i32::try_from(meta.away_score).unwrap(),
            );
        }
    }

    #[test]
    fn written_corpus_reloads_identically() {
        let corpus = generate(&SynthSpec { n_matches: 3, ..SynthSpec::default() });
        let dir = tempfile::tempdir().unwrap();
        write_corpus(&corpus, dir.path()).unwrap();
        let source = DataSource::local(dir.path());

        let comps = load_competitions(&source).unwrap();
        assert_eq!(comps, vec![corpus.competition.clone()]);

        let metas = load_matches(&source, corpus.competition.competition_id, corpus.competition.season_id).unwrap();
        assert_eq!(metas, corpus.matches);

        for (match_id, events) in &corpus.events {
            let (loaded, names) = load_match_events(&source, *match_id).unwrap();
            assert_eq!(&loaded, events, "event stream for match {match_id}");
            for e in &loaded {
                if let Some(t) = e.team_id {
                    assert_eq!(names.team(t), corpus.names.team(t));
                }
            }
            let frames = load_frames(&source, *match_id).unwrap();
            let expect: BTreeMap<String, FreezeFrame> = corpus.frames[match_id]
                .iter()
                .map(|f| (f.event_id.clone(), f.clone()))
                .collect();
            assert_eq!(frames, expect);
        }
    }

    #[test]
    fn zero_coverage_writes_no_frames() {
        let corpus = generate(&SynthSpec { frame_coverage: 0.0, n_matches: 2, ..SynthSpec::default() });
        assert!(corpus.frames.is_empty());
        let dir = tempfile::tempdir().unwrap();
        write_corpus(&corpus, dir.path()).unwrap();
        assert!(!dir.path().join("three-sixty").exists());
        let source = DataSource::local(dir.path());
        assert!(load_frames(&source, 9000).unwrap().is_empty());
    }

    #[test]
    fn frames_anchor_to_foul_events() {
        let corpus = generate(&SynthSpec::default());
        for (match_id, frames) in &corpus.frames {
            let events = &corpus.events[match_id];
            for frame in frames {
                let anchor = events
                    .iter()
                    .find(|e| e.event_id == frame.event_id)
                    .expect("frame anchors to a stream event");
                assert_eq!(anchor.event_type, EventType::FoulCommitted);
                assert_eq!(frame.players.iter().filter(|p| p.actor).count(), 1);
                assert_eq!(
                    frame.players.iter().filter(|p| p.keeper).count(),
                    1
                );
            }
        }
    }

    #[test]
    fn second_yellows_follow_a_first_yellow() {
        let corpus = generate(&SynthSpec { n_matches: 30, seed: 3, ..SynthSpec::default() });
        let mut seen_second = 0;
        for events in corpus.events.values() {
            let mut yellows: BTreeMap<i64, u32> = BTreeMap::new();
            for e in events {
                let card = e
                    .qualifier("foul_committed.card")
                    .or_else(|| e.qualifier("bad_behaviour.card"));
                let Some(card) = card else { continue };
                let player = e.player_id.expect("carded events name a player");
                match card {
                    "Second Yellow" => {
                        assert_eq!(yellows.get(&player), Some(&1), "second yellow without a first");
                        seen_second += 1;
                        *yellows.entry(player).or_insert(0) += 1;
                    }
                    "Yellow Card" => *yellows.entry(player).or_insert(0) += 1,
                    _ => {}
                }
            }
        }
        assert!(seen_second > 0, "corpus never produced a second yellow");
    }
}
