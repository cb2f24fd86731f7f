//! Simplified action valuation. Events become a sequence of on-the-ball
//! actions; each action is labeled with whether its team scores (or
//! concedes) within the next `k` actions; two boosted models estimate
//! those probabilities; their deltas value each action.
//!
//! The game state is the single current action. That keeps the feature
//! schema small and is the declared simplification here; widening to a
//! multi-action state only changes [`featurize`] and the schema.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::geometry::{angle_to_goal, clamp_pitch, distance_to_goal, AngleMode, Point};
use crate::learn::boost::{train_boosted, BoostParams, BoostedModel};
use crate::learn::io::{self, ModelFile, FORMAT_VERSION};
use crate::learn::LearnError;
use crate::scalar::Scalar;
use crate::statsbomb::{EventType, FoulRecord, RawEvent};

/// Default label horizon: a goal within the next ten actions.
pub const DEFAULT_WINDOW_K: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionType {
    Pass,
    Cross,
    /// Running with the ball in feeds that label it as a dribble; the
    /// open-data feed uses explicit Carry events instead, so this slot
    /// stays empty there.
    Dribble,
    Carry,
    /// Attempt to beat an opponent (the feed's "Dribble" event).
    TakeOn,
    Shot,
    Clearance,
    Interception,
    Tackle,
    Foul,
    Other,
}

impl ActionType {
    pub const ALL: [ActionType; 11] = [
        ActionType::Pass,
        ActionType::Cross,
        ActionType::Dribble,
        ActionType::Carry,
        ActionType::TakeOn,
        ActionType::Shot,
        ActionType::Clearance,
        ActionType::Interception,
        ActionType::Tackle,
        ActionType::Foul,
        ActionType::Other,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ActionType::Pass => "pass",
            ActionType::Cross => "cross",
            ActionType::Dribble => "dribble",
            ActionType::Carry => "carry",
            ActionType::TakeOn => "take_on",
            ActionType::Shot => "shot",
            ActionType::Clearance => "clearance",
            ActionType::Interception => "interception",
            ActionType::Tackle => "tackle",
            ActionType::Foul => "foul",
            ActionType::Other => "other",
        }
    }
}

/// One on-the-ball action. Locations are in the acting team's attacking
/// frame (the feed's native orientation) and clamped into pitch bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Action {
    pub index: i64,
    pub team_id: i64,
    pub player_id: Option<i64>,
    pub action_type: ActionType,
    pub start: (f64, f64),
    pub end: (f64, f64),
    pub period: u8,
    pub time_seconds: f64,
    pub outcome_success: bool,
    /// A goal credited to the acting team: a converted shot, or the
    /// beneficiary-side own-goal event.
    pub is_goal: bool,
}

/// Output of [`to_actions`]: the retained actions plus a tally of what
/// was dropped and why (keyed by event type name, or `missing_location`
/// for mappable events without coordinates).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ActionConversion {
    pub actions: Vec<Action>,
    pub dropped: BTreeMap<String, u64>,
}

fn success_name(outcome: Option<&str>) -> bool {
    match outcome {
        Some("Won") => true,
        Some(other) => other.starts_with("Success"),
        None => false,
    }
}

/// Map a sorted single-match event stream to actions. Off-the-ball and
/// bookkeeping events are dropped and tallied; no carries are
/// synthesized from location gaps.
pub fn to_actions(events: &[RawEvent]) -> ActionConversion {
    let mut out = ActionConversion::default();
    let drop = |tally: &mut BTreeMap<String, u64>, key: &str| {
        *tally.entry(key.to_string()).or_insert(0) += 1;
    };
    for event in events {
        let action_type = match &event.event_type {
            EventType::Pass => {
                if event.qualifier("pass.cross") == Some("true") {
                    ActionType::Cross
                } else {
                    ActionType::Pass
                }
            }
            EventType::Shot => ActionType::Shot,
            EventType::Carry => ActionType::Carry,
            EventType::Dribble => ActionType::TakeOn,
            EventType::Clearance => ActionType::Clearance,
            EventType::Interception => ActionType::Interception,
            EventType::Duel if event.qualifier("duel.type") == Some("Tackle") => {
                ActionType::Tackle
            }
            EventType::Duel => ActionType::Other,
            EventType::FoulCommitted => ActionType::Foul,
            EventType::BallRecovery | EventType::Miscontrol | EventType::Dispossessed => {
                ActionType::Other
            }
            EventType::OwnGoalFor => ActionType::Other,
            other => {
                drop(&mut out.dropped, other.name());
                continue;
            }
        };
        let Some(team_id) = event.team_id else {
            drop(&mut out.dropped, "missing_team");
            continue;
        };
        // The beneficiary-side own-goal event often has no coordinates;
        // the ball is in the opponent's net, which IS the goal mouth.
        let start = match (event.location, &event.event_type) {
            (Some(loc), _) => loc,
            (None, EventType::OwnGoalFor) => (120.0, 40.0),
            (None, _) => {
                drop(&mut out.dropped, "missing_location");
                continue;
            }
        };
        let end_key = match action_type {
            ActionType::Pass | ActionType::Cross => Some("pass.end_location"),
            ActionType::Shot => Some("shot.end_location"),
            ActionType::Carry => Some("carry.end_location"),
            _ => None,
        };
        let end = end_key
            .and_then(|k| event.qualifier(k))
            .and_then(crate::statsbomb::parse::location_from_qualifier)
            .unwrap_or(start);
        let outcome_success = match action_type {
            ActionType::Pass | ActionType::Cross => event.qualifier("pass.outcome").is_none(),
            ActionType::Shot => event.qualifier("shot.outcome") == Some("Goal"),
            ActionType::TakeOn => event.qualifier("dribble.outcome") == Some("Complete"),
            ActionType::Interception => success_name(event.qualifier("interception.outcome")),
            ActionType::Tackle => success_name(event.qualifier("duel.outcome")),
            ActionType::Foul => false,
            ActionType::Other => !matches!(
                event.event_type,
                EventType::Miscontrol | EventType::Dispossessed
            ),
            ActionType::Carry | ActionType::Clearance | ActionType::Dribble => true,
        };
        let is_goal = matches!(event.event_type, EventType::OwnGoalFor)
            || (action_type == ActionType::Shot && outcome_success);
        out.actions.push(Action {
            index: event.index,
            team_id,
            player_id: event.player_id,
            action_type,
            start: clamp_pitch(start),
            end: clamp_pitch(end),
            period: event.period,
            time_seconds: event.time_seconds(),
            outcome_success,
            is_goal,
        });
    }
    out
}

/// Names for the 19 per-action features, in matrix order.
pub fn action_feature_schema() -> Vec<String> {
    ActionType::ALL
        .iter()
        .map(|t| format!("type_{}", t.name()))
        .chain(
            [
                "start_x",
                "start_y",
                "end_x",
                "end_y",
                "end_distance_goal",
                "end_angle_goal",
                "period",
                "time_seconds",
            ]
            .map(String::from),
        )
        .collect()
}

/// Game-state feature row for one action, matching
/// [`action_feature_schema`].
pub fn featurize<F: Scalar>(action: &Action) -> Vec<F> {
    let mut row = Vec::with_capacity(19);
    for t in &ActionType::ALL {
        row.push(if *t == action.action_type { F::one() } else { F::zero() });
    }
    let end = Point::new(F::from_f64_lit(action.end.0), F::from_f64_lit(action.end.1));
    row.push(F::from_f64_lit(action.start.0));
    row.push(F::from_f64_lit(action.start.1));
    row.push(end.x);
    row.push(end.y);
    row.push(distance_to_goal(end));
    row.push(angle_to_goal(end, AngleMode::Subtended));
    row.push(F::from_f64_lit(f64::from(action.period)));
    row.push(F::from_f64_lit(action.time_seconds));
    row
}

/// Per-action (scores, concedes) labels over the exclusive window
/// `i+1 ..= i+k`, truncated at period boundaries: a goal after halftime
/// does not credit pre-halftime actions.
pub fn label_windows(actions: &[Action], k: usize) -> Vec<(bool, bool)> {
    assert!(k >= 1, "label window must cover at least one action");
    let mut labels = Vec::with_capacity(actions.len());
    for (i, action) in actions.iter().enumerate() {
        let mut scores = false;
        let mut concedes = false;
        for next in actions.iter().skip(i + 1).take(k) {
            if next.period != action.period {
                break;
            }
            if next.is_goal {
                if next.team_id == action.team_id {
                    scores = true;
                } else {
                    concedes = true;
                }
            }
        }
        labels.push((scores, concedes));
    }
    labels
}

/// The two probability models plus the horizon they were labeled with.
#[derive(Debug, Clone, PartialEq)]
pub struct VaepModel<F> {
    pub window_k: usize,
    pub scores: BoostedModel<F>,
    pub concedes: BoostedModel<F>,
}

impl<F: Scalar> VaepModel<F> {
    /// P(acting team scores within the next `window_k` actions).
    pub fn p_scores(&self, action: &Action) -> F {
        self.scores
            .predict_proba(&featurize(action))
            .expect("action feature schema is fixed")
    }

    /// P(acting team concedes within the next `window_k` actions).
    pub fn p_concedes(&self, action: &Action) -> F {
        self.concedes
            .predict_proba(&featurize(action))
            .expect("action feature schema is fixed")
    }

    /// Scoring-label base rate of the training corpus.
    pub fn base_rate_scores(&self) -> F {
        self.scores.base_score.sigmoid()
    }

    pub fn base_rate_concedes(&self) -> F {
        self.concedes.base_score.sigmoid()
    }
}

/// Train both window models over per-match action lists. Labeling never
/// crosses match boundaries. Determinism comes from the seed inside
/// `params`; both tasks share it.
pub fn train_vaep<F: Scalar>(
    matches: &[Vec<Action>],
    k: usize,
    params: BoostParams<F>,
) -> Result<VaepModel<F>, LearnError> {
    let mut x = Vec::new();
    let mut y_scores = Vec::new();
    let mut y_concedes = Vec::new();
    for actions in matches {
        for (action, (scores, concedes)) in actions.iter().zip(label_windows(actions, k)) {
            x.push(featurize::<F>(action));
            y_scores.push(scores);
            y_concedes.push(concedes);
        }
    }
    if x.is_empty() {
        return Err(LearnError::EmptyDataset);
    }
    for (task, labels) in [("scores", &y_scores), ("concedes", &y_concedes)] {
        if !labels.contains(&true) {
            return Err(LearnError::DegenerateLabels { task: task.to_string() });
        }
    }
    let schema = action_feature_schema();
    Ok(VaepModel {
        window_k: k,
        scores: train_boosted(&x, &y_scores, schema.clone(), params.clone())?,
        concedes: train_boosted(&x, &y_concedes, schema, params)?,
    })
}

/// Offensive-threat feature for a foul: the scores-model probability at
/// the possession team's last action strictly before the foul. With no
/// such action (foul opens the match, or the possession team has not
/// touched the ball yet) the model's base rate is returned.
pub fn p_scores_at_foul<F: Scalar>(
    foul: &FoulRecord,
    actions: &[Action],
    model: &VaepModel<F>,
) -> F {
    actions
        .iter()
        .filter(|a| a.index < foul.index && a.team_id == foul.possession_team_id)
        .next_back()
        .map(|a| model.p_scores(a))
        .unwrap_or_else(|| model.base_rate_scores())
}

/// Change in both probabilities produced by one action, from the acting
/// team's perspective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActionValue<F> {
    pub delta_p_scores: F,
    pub delta_p_concedes: F,
    /// `delta_p_scores - delta_p_concedes`.
    pub value: F,
}

/// Value every action as the probability shift it caused. The previous
/// state's probabilities are flipped when the previous action belonged
/// to the opponent (their scoring chance is our conceding chance); the
/// first action is measured against the corpus base rates.
pub fn action_values<F: Scalar>(actions: &[Action], model: &VaepModel<F>) -> Vec<ActionValue<F>> {
    let mut out = Vec::with_capacity(actions.len());
    let mut prev: Option<(i64, F, F)> = None;
    for action in actions {
        let p_scores = model.p_scores(action);
        let p_concedes = model.p_concedes(action);
        let (prev_scores, prev_concedes) = match prev {
            None => (model.base_rate_scores(), model.base_rate_concedes()),
            Some((team, ps, pc)) if team == action.team_id => (ps, pc),
            Some((_, ps, pc)) => (pc, ps),
        };
        let delta_p_scores = p_scores - prev_scores;
        let delta_p_concedes = p_concedes - prev_concedes;
        out.push(ActionValue {
            delta_p_scores,
            delta_p_concedes,
            value: delta_p_scores - delta_p_concedes,
        });
        prev = Some((action.team_id, p_scores, p_concedes));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "F: Serialize", deserialize = "F: serde::de::DeserializeOwned"))]
struct VaepSection<F> {
    window_k: usize,
    scores: BoostedModel<F>,
    concedes: BoostedModel<F>,
}

/// Pack a VAEP model into the shared versioned model envelope. The two
/// boosted models live in the `vaep` section; the top-level
/// hyperparameters mirror the scores model's for human readers.
pub fn vaep_to_file<F: Scalar>(model: &VaepModel<F>) -> ModelFile<F> {
    let section = VaepSection {
        window_k: model.window_k,
        scores: model.scores.clone(),
        concedes: model.concedes.clone(),
    };
    let mut hyperparameters = io::to_param_map(&model.scores.params);
    hyperparameters.insert("window_k".to_string(), serde_json::Value::from(model.window_k));
    ModelFile {
        format_version: FORMAT_VERSION,
        model_type: "vaep".to_string(),
        feature_schema: action_feature_schema(),
        hyperparameters,
        base_score: None,
        trees: None,
        linear: None,
        vaep: Some(serde_json::to_value(&section).expect("vaep section serializes")),
        checksum: String::new(),
    }
}

pub fn file_to_vaep<F: Scalar>(file: &ModelFile<F>, path: &Path) -> Result<VaepModel<F>, LearnError> {
    let corrupt = |reason: String| LearnError::CorruptModel {
        path: path.display().to_string(),
        reason,
    };
    if file.model_type != "vaep" {
        return Err(corrupt(format!(
            "expected model_type `vaep`, found `{}`",
            file.model_type
        )));
    }
    let value = file
        .vaep
        .clone()
        .ok_or_else(|| corrupt("missing `vaep` section".to_string()))?;
    let section: VaepSection<F> =
        serde_json::from_value(value).map_err(|e| corrupt(format!("bad vaep section: {e}")))?;
    Ok(VaepModel {
        window_k: section.window_k,
        scores: section.scores,
        concedes: section.concedes,
    })
}

pub fn save_vaep<F: Scalar>(model: &VaepModel<F>, path: &Path) -> Result<(), LearnError> {
    io::write_model_file(vaep_to_file(model), path)
}

pub fn load_vaep<F: Scalar>(path: &Path) -> Result<VaepModel<F>, LearnError> {
    let file = io::read_model_file(path)?;
    file_to_vaep(&file, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learn::tree::{Node, Tree};

    fn ev(index: i64, event_type: EventType, team: i64, loc: Option<(f64, f64)>) -> RawEvent {
        RawEvent {
            event_id: format!("e{index}"),
            index,
            period: 1,
            minute: u32::try_from(index).unwrap_or(0) / 10,
            second: u8::try_from(index.rem_euclid(10)).unwrap(),
            event_type,
            team_id: Some(team),
            player_id: Some(team * 100 + 1),
            possession_team_id: Some(team),
            location: loc,
            qualifiers: BTreeMap::new(),
            related_event_ids: Vec::new(),
        }
    }

    fn with_q(mut event: RawEvent, key: &str, value: &str) -> RawEvent {
        event.qualifiers.insert(key.to_string(), value.to_string());
        event
    }

    fn act(index: i64, team: i64, ty: ActionType, end: (f64, f64), is_goal: bool) -> Action {
        Action {
            index,
            team_id: team,
            player_id: Some(team * 100 + 1),
            action_type: ty,
            start: end,
            end,
            period: 1,
            time_seconds: index as f64 * 15.0,
            outcome_success: is_goal || ty != ActionType::Foul,
            is_goal,
        }
    }

    #[test]
    fn passes_map_in_order() {
        let events: Vec<RawEvent> = (0..5)
            .map(|i| ev(i, EventType::Pass, 1, Some((40.0 + i as f64, 40.0))))
            .collect();
        let conv = to_actions(&events);
        assert_eq!(conv.actions.len(), 5);
        assert!(conv.dropped.is_empty());
        for (i, a) in conv.actions.iter().enumerate() {
            assert_eq!(a.index, i as i64);
            assert_eq!(a.action_type, ActionType::Pass);
            assert!(a.outcome_success);
        }
    }

    #[test]
    fn cross_qualifier_splits_pass() {
        let plain = ev(0, EventType::Pass, 1, Some((60.0, 10.0)));
        let cross = with_q(ev(1, EventType::Pass, 1, Some((100.0, 5.0))), "pass.cross", "true");
        let failed = with_q(
            ev(2, EventType::Pass, 1, Some((60.0, 40.0))),
            "pass.outcome",
            "Incomplete",
        );
        let conv = to_actions(&[plain, cross, failed]);
        assert_eq!(conv.actions[0].action_type, ActionType::Pass);
        assert_eq!(conv.actions[1].action_type, ActionType::Cross);
        assert!(!conv.actions[2].outcome_success);
    }

    #[test]
    fn shot_outcomes_and_goal_flag() {
        let goal = with_q(
            with_q(
                ev(0, EventType::Shot, 1, Some((110.0, 40.0))),
                "shot.outcome",
                "Goal",
            ),
            "shot.end_location",
            "120,40",
        );
        let saved = with_q(
            ev(1, EventType::Shot, 1, Some((95.0, 30.0))),
            "shot.outcome",
            "Saved",
        );
        let conv = to_actions(&[goal, saved]);
        assert!(conv.actions[0].outcome_success && conv.actions[0].is_goal);
        assert_eq!(conv.actions[0].end, (120.0, 40.0));
        assert!(!conv.actions[1].outcome_success && !conv.actions[1].is_goal);
        assert_eq!(conv.actions[1].end, conv.actions[1].start);
    }

    #[test]
    fn bookkeeping_events_dropped_and_tallied() {
        let events = vec![
            ev(0, EventType::StartingXi, 1, None),
            ev(1, EventType::HalfStart, 1, None),
            ev(2, EventType::BadBehaviour, 2, None),
            ev(3, EventType::Pass, 1, Some((50.0, 40.0))),
            ev(4, EventType::Pass, 1, None),
            ev(5, EventType::FoulWon, 2, Some((70.0, 40.0))),
        ];
        let conv = to_actions(&events);
        assert_eq!(conv.actions.len(), 1);
        assert_eq!(conv.dropped.get("Starting XI"), Some(&1));
        assert_eq!(conv.dropped.get("Half Start"), Some(&1));
        assert_eq!(conv.dropped.get("Bad Behaviour"), Some(&1));
        assert_eq!(conv.dropped.get("Foul Won"), Some(&1));
        assert_eq!(conv.dropped.get("missing_location"), Some(&1));
        let total_dropped: u64 = conv.dropped.values().sum();
        assert_eq!(conv.actions.len() + total_dropped as usize, events.len());
    }

    #[test]
    fn duel_splits_tackle_from_other() {
        let tackle = with_q(
            with_q(ev(0, EventType::Duel, 2, Some((50.0, 20.0))), "duel.type", "Tackle"),
            "duel.outcome",
            "Won",
        );
        let aerial = with_q(
            ev(1, EventType::Duel, 2, Some((60.0, 40.0))),
            "duel.type",
            "Aerial Lost",
        );
        let conv = to_actions(&[tackle, aerial]);
        assert_eq!(conv.actions[0].action_type, ActionType::Tackle);
        assert!(conv.actions[0].outcome_success);
        assert_eq!(conv.actions[1].action_type, ActionType::Other);
    }

    #[test]
    fn own_goal_for_is_a_goal_at_the_goal_mouth() {
        let og = ev(7, EventType::OwnGoalFor, 1, None);
        let conv = to_actions(&[og]);
        assert_eq!(conv.actions.len(), 1);
        let a = &conv.actions[0];
        assert!(a.is_goal);
        assert_eq!(a.action_type, ActionType::Other);
        assert_eq!(a.start, (120.0, 40.0));
    }

    #[test]
    fn locations_clamped_into_bounds() {
        let wide = ev(0, EventType::Carry, 1, Some((121.3, -0.4)));
        let conv = to_actions(&[wide]);
        assert_eq!(conv.actions[0].start, (120.0, 0.0));
    }

    #[test]
    fn schema_and_featurize_agree() {
        let schema = action_feature_schema();
        assert_eq!(schema.len(), 19);
        assert_eq!(schema[0], "type_pass");
        assert_eq!(schema[5], "type_shot");
        assert_eq!(schema[18], "time_seconds");
        let a = act(3, 1, ActionType::Shot, (108.0, 40.0), false);
        let row: Vec<f64> = featurize(&a);
        assert_eq!(row.len(), schema.len());
        assert_eq!(row[5], 1.0);
        assert_eq!(row.iter().take(11).sum::<f64>(), 1.0);
        assert_eq!(row[13], 108.0);
        assert_eq!(row[15], 12.0);
    }

    #[test]
    fn window_labels_basics() {
        let actions = vec![
            act(0, 1, ActionType::Pass, (60.0, 40.0), false),
            act(1, 1, ActionType::Shot, (118.0, 40.0), true),
            act(2, 2, ActionType::Pass, (60.0, 40.0), false),
        ];
        let labels = label_windows(&actions, 10);
        assert_eq!(labels[0], (true, false));
        // Exclusive window: the scoring action does not label itself.
        assert_eq!(labels[1], (false, false));
        assert_eq!(labels[2], (false, false));
    }

    #[test]
    fn opponent_goal_sets_concede_label() {
        let actions = vec![
            act(0, 2, ActionType::Clearance, (30.0, 40.0), false),
            act(1, 1, ActionType::Shot, (115.0, 38.0), true),
        ];
        let labels = label_windows(&actions, 5);
        assert_eq!(labels[0], (false, true));
    }

    #[test]
    fn goal_just_outside_window_does_not_count() {
        let mut actions: Vec<Action> = (0..11)
            .map(|i| act(i, 1, ActionType::Pass, (60.0, 40.0), false))
            .collect();
        actions.push(act(11, 1, ActionType::Shot, (118.0, 40.0), true));
        let labels = label_windows(&actions, 10);
        // The goal sits k+1 actions after index 0, inside the window of
        // index 1.
        assert_eq!(labels[0], (false, false));
        assert_eq!(labels[1], (true, false));
    }

    #[test]
    fn no_goals_means_all_labels_false() {
        let actions: Vec<Action> = (0..30)
            .map(|i| act(i, 1 + i % 2, ActionType::Pass, (60.0, 40.0), false))
            .collect();
        assert!(label_windows(&actions, 10).iter().all(|&l| l == (false, false)));
    }

    #[test]
    fn period_boundary_truncates_window() {
        let mut first_half = act(0, 1, ActionType::Pass, (60.0, 40.0), false);
        first_half.period = 1;
        let mut second_half_goal = act(1, 1, ActionType::Shot, (118.0, 40.0), true);
        second_half_goal.period = 2;
        let labels = label_windows(&[first_half, second_half_goal], 10);
        assert_eq!(labels[0], (false, false));
    }

    #[test]
    fn window_labels_match_goal_centric_oracle() {
        // Oracle built from the opposite direction: each goal marks the
        // up-to-k preceding same-period actions.
        fn oracle(actions: &[Action], k: usize) -> Vec<(bool, bool)> {
            let mut labels = vec![(false, false); actions.len()];
            for (g, goal) in actions.iter().enumerate() {
                if !goal.is_goal {
                    continue;
                }
                for i in g.saturating_sub(k)..g {
                    if actions[i].period != goal.period {
                        continue;
                    }
                    if actions[i].team_id == goal.team_id {
                        labels[i].0 = true;
                    } else {
                        labels[i].1 = true;
                    }
                }
            }
            labels
        }

        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            state
        };
        for _ in 0..40 {
            let n = 20 + (next() % 120) as usize;
            let mut actions = Vec::with_capacity(n);
            for i in 0..n {
                let mut a = act(
                    i as i64,
                    1 + (next() % 3) as i64,
                    ActionType::Pass,
                    ((next() % 120) as f64, 40.0),
                    next() % 7 == 0,
                );
                a.period = if i < n / 2 { 1 } else { 2 };
                actions.push(a);
            }
            for k in [1usize, 5, 10] {
                assert_eq!(label_windows(&actions, k), oracle(&actions, k));
            }
        }
    }

    /// One team strings together box passes and converted shots; the
    /// other circulates harmlessly in its own half. Every hot-team state
    /// except the final shot is followed by a goal inside k = 10.
    fn goal_rush_matches(n_matches: usize) -> Vec<Vec<Action>> {
        let mut matches = Vec::new();
        for m in 0..n_matches {
            let mut actions = Vec::new();
            let mut index = 0i64;
            for cycle in 0..12 {
                let jitter = ((m * 12 + cycle) % 5) as f64;
                let mut push = |team, ty, end: (f64, f64), goal| {
                    let mut a = act(index, team, ty, end, goal);
                    a.time_seconds = index as f64 * 20.0;
                    actions.push(a);
                    index += 1;
                };
                push(1, ActionType::Pass, (112.0 + jitter, 38.0 + jitter), false);
                push(1, ActionType::Shot, (119.0, 39.0 + jitter * 0.2), true);
                push(2, ActionType::Pass, (30.0 + jitter, 28.0), false);
                push(2, ActionType::Carry, (38.0, 35.0 + jitter), false);
            }
            matches.push(actions);
        }
        matches
    }

    fn quick_params(n_trees: usize) -> BoostParams<f64> {
        BoostParams { n_trees, max_depth: 3, ..BoostParams::default() }
    }

    #[test]
    fn trained_model_separates_hot_and_cold_states() {
        let matches = goal_rush_matches(6);
        let model = train_vaep(&matches, 10, quick_params(120)).unwrap();
        // Mid-match states (index 20 puts time_seconds well inside the
        // trained range; the model may key late times to the final,
        // unconverted shot).
        let hot_shot = act(20, 1, ActionType::Shot, (119.0, 40.0), false);
        let cold_pass = act(22, 2, ActionType::Pass, (30.0, 30.0), false);
        assert!(model.p_scores(&hot_shot) > 0.9, "hot: {}", model.p_scores(&hot_shot));
        assert!(model.p_scores(&cold_pass) < 0.1, "cold: {}", model.p_scores(&cold_pass));
        for action in matches.iter().flatten() {
            let p = model.p_scores(action);
            assert!((0.0..=1.0).contains(&p));
        }
    }

    #[test]
    fn mean_prediction_tracks_label_base_rate() {
        let matches = goal_rush_matches(6);
        let k = 10;
        let model = train_vaep(&matches, k, quick_params(200)).unwrap();
        let mut labels = Vec::new();
        let mut predictions = Vec::new();
        for actions in &matches {
            for (action, (scores, _)) in actions.iter().zip(label_windows(actions, k)) {
                labels.push(f64::from(u8::from(scores)));
                predictions.push(model.p_scores(action));
            }
        }
        let base = labels.iter().sum::<f64>() / labels.len() as f64;
        let mean = predictions.iter().sum::<f64>() / predictions.len() as f64;
        assert!((mean - base).abs() < 1e-2, "mean {mean} vs base {base}");
    }

    #[test]
    fn goalless_corpus_is_degenerate_scores_task() {
        let matches = vec![vec![
            act(0, 1, ActionType::Pass, (60.0, 40.0), false),
            act(1, 2, ActionType::Pass, (50.0, 30.0), false),
        ]];
        match train_vaep(&matches, 10, quick_params(5)) {
            Err(LearnError::DegenerateLabels { task }) => assert_eq!(task, "scores"),
            other => panic!("expected DegenerateLabels, got {other:?}"),
        }
    }

    #[test]
    fn one_sided_corpus_is_degenerate_concedes_task() {
        // Goals exist, but no opponent ever acts before one.
        let matches = vec![vec![
            act(0, 1, ActionType::Pass, (110.0, 40.0), false),
            act(1, 1, ActionType::Shot, (119.0, 40.0), true),
        ]];
        match train_vaep(&matches, 10, quick_params(5)) {
            Err(LearnError::DegenerateLabels { task }) => assert_eq!(task, "concedes"),
            other => panic!("expected DegenerateLabels, got {other:?}"),
        }
    }

    #[test]
    fn training_is_deterministic_via_files() {
        let matches = goal_rush_matches(3);
        let dir = tempfile::tempdir().unwrap();
        let (p1, p2) = (dir.path().join("a.json"), dir.path().join("b.json"));
        save_vaep(&train_vaep(&matches, 10, quick_params(30)).unwrap(), &p1).unwrap();
        save_vaep(&train_vaep(&matches, 10, quick_params(30)).unwrap(), &p2).unwrap();
        assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
    }

    #[test]
    fn round_trip_preserves_model_and_predictions() {
        let matches = goal_rush_matches(3);
        let model = train_vaep(&matches, 10, quick_params(40)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("vaep.json");
        save_vaep(&model, &path).unwrap();
        let loaded = load_vaep::<f64>(&path).unwrap();
        assert_eq!(model, loaded);
        for action in matches.iter().flatten() {
            assert_eq!(
                model.p_scores(action).to_bits(),
                loaded.p_scores(action).to_bits()
            );
            assert_eq!(
                model.p_concedes(action).to_bits(),
                loaded.p_concedes(action).to_bits()
            );
        }
    }

    #[test]
    fn vaep_file_rejected_by_plain_model_loader() {
        let matches = goal_rush_matches(2);
        let model = train_vaep(&matches, 10, quick_params(5)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("vaep.json");
        save_vaep(&model, &path).unwrap();
        match crate::learn::io::load_model::<f64>(&path) {
            Err(LearnError::CorruptModel { reason, .. }) => {
                assert!(reason.contains("vaep"), "reason: {reason}")
            }
            other => panic!("expected CorruptModel, got {other:?}"),
        }
    }

    #[test]
    fn p_scores_at_foul_uses_possession_teams_last_action() {
        let matches = goal_rush_matches(4);
        let model = train_vaep(&matches, 10, quick_params(60)).unwrap();
        let actions = &matches[0];
        // Foul by team 2 right after a cold team-2 action; possession
        // team 1's most recent action is the converted shot.
        let foul = FoulRecord {
            match_id: 1,
            event_id: "f1".to_string(),
            index: 3,
            period: 1,
            minute: 1,
            second: 0,
            fouling_player_id: Some(201),
            fouling_team_id: 2,
            possession_team_id: 1,
            location_committed: (30.0, 40.0),
            location_attacking_frame: (90.0, 40.0),
            label_yellow: false,
            card_raw: crate::statsbomb::CardKind::None,
        };
        let p = p_scores_at_foul(&foul, actions, &model);
        let expected = model.p_scores(&actions[1]);
        assert_eq!(p.to_bits(), expected.to_bits());
        assert!(p > model.base_rate_scores());
    }

    #[test]
    fn p_scores_at_foul_falls_back_to_base_rate() {
        let matches = goal_rush_matches(2);
        let model = train_vaep(&matches, 10, quick_params(10)).unwrap();
        let foul = FoulRecord {
            match_id: 1,
            event_id: "f0".to_string(),
            index: 0,
            period: 1,
            minute: 0,
            second: 5,
            fouling_player_id: Some(201),
            fouling_team_id: 2,
            possession_team_id: 1,
            location_committed: (55.0, 40.0),
            location_attacking_frame: (65.0, 40.0),
            label_yellow: false,
            card_raw: crate::statsbomb::CardKind::None,
        };
        let p = p_scores_at_foul(&foul, &matches[0], &model);
        assert_eq!(p.to_bits(), model.base_rate_scores().to_bits());
    }

    /// Handcrafted model: scores spike only for shots ending near goal;
    /// concedes constant. Gives exact control over expected deltas.
    fn handcrafted_model() -> VaepModel<f64> {
        let tree = Tree {
            nodes: vec![
                Node::Split {
                    feature: 5, // type_shot
                    threshold: 0.5,
                    missing_goes_left: true,
                    left: 1,
                    right: 2,
                },
                Node::Leaf { value: -2.0 },
                Node::Split {
                    feature: 15, // end_distance_goal
                    threshold: 20.0,
                    missing_goes_left: true,
                    left: 3,
                    right: 4,
                },
                Node::Leaf { value: 2.5 },
                Node::Leaf { value: -1.0 },
            ],
        };
        let params = BoostParams { n_trees: 1, learning_rate: 1.0, ..BoostParams::default() };
        let scores = BoostedModel {
            params: params.clone(),
            base_score: 0.0,
            trees: vec![tree],
            feature_schema: action_feature_schema(),
        };
        let concedes = BoostedModel {
            params,
            base_score: f64::logit(0.2),
            trees: Vec::new(),
            feature_schema: action_feature_schema(),
        };
        VaepModel { window_k: 10, scores, concedes }
    }

    #[test]
    fn action_values_match_hand_computation() {
        let model = handcrafted_model();
        let p_far = f64::sigmoid(-2.0);
        let p_shot_near = f64::sigmoid(2.5);
        let actions = vec![
            act(0, 1, ActionType::Pass, (60.0, 40.0), false),
            act(1, 1, ActionType::Carry, (100.0, 40.0), false),
            act(2, 1, ActionType::Shot, (118.0, 40.0), true),
            act(3, 2, ActionType::Clearance, (30.0, 40.0), false),
        ];
        let values = action_values(&actions, &model);
        // First action against base rates sigmoid(0) = 0.5 and 0.2.
        assert!((values[0].delta_p_scores - (p_far - 0.5)).abs() < 1e-15);
        assert!((values[0].delta_p_concedes - 0.0).abs() < 1e-15);
        // Same team, no state change.
        assert!((values[1].delta_p_scores - 0.0).abs() < 1e-15);
        // The converted shot produces the possession's largest jump.
        assert!((values[2].delta_p_scores - (p_shot_near - p_far)).abs() < 1e-15);
        assert!(values[2].delta_p_scores > 0.0);
        assert!(values
            .iter()
            .take(3)
            .all(|v| v.delta_p_scores <= values[2].delta_p_scores));
        // Opponent's next action flips perspective: previous state's
        // scoring chance becomes its conceding chance.
        assert!((values[3].delta_p_scores - (p_far - 0.2)).abs() < 1e-15);
        assert!((values[3].delta_p_concedes - (0.2 - p_shot_near)).abs() < 1e-15);
        for v in &values {
            assert_eq!(v.value, v.delta_p_scores - v.delta_p_concedes);
        }
    }

    #[test]
    fn constant_equal_probabilities_value_everything_at_zero() {
        // Constant-output models; scores and concedes agree, so the
        // perspective flip is the identity and every delta vanishes.
        let constant = BoostedModel {
            params: BoostParams::default(),
            base_score: f64::logit(0.3),
            trees: Vec::new(),
            feature_schema: action_feature_schema(),
        };
        let model = VaepModel {
            window_k: 10,
            scores: constant.clone(),
            concedes: constant,
        };
        for v in action_values(&goal_rush_matches(1)[0], &model) {
            assert_eq!(v.delta_p_scores, 0.0);
            assert_eq!(v.delta_p_concedes, 0.0);
            assert_eq!(v.value, 0.0);
        }
    }

    #[test]
    fn zero_tree_model_flip_delta_is_base_rate_gap() {
        // With zero trees each model predicts its own base rate, so the
        // only nonzero deltas appear at possession changes and equal the
        // gap between the two base rates.
        let matches = goal_rush_matches(2);
        let model = train_vaep(&matches, 10, quick_params(0)).unwrap();
        let gap = model.base_rate_scores() - model.base_rate_concedes();
        let actions = &matches[0];
        for (i, v) in action_values(actions, &model).iter().enumerate() {
            let expected = if i > 0 && actions[i - 1].team_id != actions[i].team_id {
                gap
            } else {
                0.0
            };
            assert!((v.delta_p_scores - expected).abs() < 1e-15, "action {i}");
            assert!((v.delta_p_concedes + expected).abs() < 1e-15, "action {i}");
        }
    }
}
