//! The four pipeline commands. Each takes a validated [`Effective`]
//! configuration, loads what it needs, writes its artifacts under the
//! output directory, and prints a short summary to stdout. All outputs
//! are deterministic for a fixed seed and warm cache.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use xb_core::analytics::{
    emit_plot_data, player_table, render_table, score_fouls, table_to_csv, team_table,
};
use xb_core::context::{replay, ContextSnapshot};
use xb_core::dataset::{build_dataset, export_csv, import_csv, split};
use xb_core::learn::{
    evaluate, load_model, save_model, train_boosted, train_logreg, train_tree, BoostParams, Model,
};
use xb_core::statsbomb::{
    extract_fouls, load_competitions, load_frames, load_match_events, load_matches,
    CompetitionRef, DataSource, FoulDiagnostics, FoulRecord, FreezeFrame, MatchMeta,
    NameDirectory, RawEvent, ENV_CACHE_DIR, ENV_DATA_BASE,
};
use xb_core::vaep::{p_scores_at_foul, save_vaep, to_actions, train_vaep, Action};
use xb_core::Real;

use crate::config::{echo_config, Effective, LearnerKind};
use crate::CliError;

fn runtime<E: Into<anyhow::Error>>(e: E) -> CliError {
    CliError::Runtime(e.into())
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text)
        .map_err(|e| runtime(anyhow::anyhow!("cannot write {}: {e}", path.display())))
}

/// Environment beats the config file, which beats the built-in default.
pub fn resolve_source(eff: &Effective) -> DataSource {
    let base = std::env::var(ENV_DATA_BASE)
        .ok()
        .or_else(|| eff.config.data.source.clone());
    let cache = std::env::var(ENV_CACHE_DIR)
        .ok()
        .map(PathBuf::from)
        .or_else(|| eff.config.data.cache_dir.clone());
    DataSource::resolve(base.as_deref(), cache.as_deref())
}

fn parse_id_pair(s: &str) -> Option<(i64, i64)> {
    let (a, b) = s.split_once(':')?;
    Some((a.trim().parse().ok()?, b.trim().parse().ok()?))
}

/// Map selectors onto entries of `competitions.json`. A selector is
/// either `"<competition_id>:<season_id>"` or a case-insensitive
/// `"<competition name> <season name>"`.
fn resolve_selection(
    selectors: &[String],
    available: &[CompetitionRef],
) -> Result<Vec<CompetitionRef>, CliError> {
    if selectors.is_empty() {
        return Err(CliError::Usage(
            "no competitions selected; set `competitions` under [selection]".to_string(),
        ));
    }
    let mut picked: Vec<CompetitionRef> = Vec::new();
    for selector in selectors {
        let found = if let Some((cid, sid)) = parse_id_pair(selector) {
            available
                .iter()
                .find(|c| c.competition_id == cid && c.season_id == sid)
        } else {
            let want = selector.to_lowercase();
            available.iter().find(|c| {
                format!("{} {}", c.competition_name, c.season_name).to_lowercase() == want
            })
        };
        let comp = found.ok_or_else(|| {
            CliError::Usage(format!(
                "selector `{selector}` matches nothing in competitions.json"
            ))
        })?;
        let key = (comp.competition_id, comp.season_id);
        if !picked
            .iter()
            .any(|c| (c.competition_id, c.season_id) == key)
        {
            picked.push(comp.clone());
        }
    }
    Ok(picked)
}

fn merge_diagnostics(total: &mut FoulDiagnostics, part: FoulDiagnostics) {
    total.skipped_no_location += part.skipped_no_location;
    total.red_dropped += part.red_dropped;
    total.skipped_no_opponent += part.skipped_no_opponent;
    for (kind, n) in part.excluded_by_type {
        *total.excluded_by_type.entry(kind).or_insert(0) += n;
    }
}

/// Everything loaded for a selection, keyed by match where per-match.
#[derive(Default)]
struct Corpus {
    matches: Vec<MatchMeta>,
    events: BTreeMap<i64, Vec<RawEvent>>,
    frames: BTreeMap<i64, BTreeMap<String, FreezeFrame>>,
    fouls_by_match: BTreeMap<i64, Vec<FoulRecord>>,
    diagnostics: FoulDiagnostics,
    names: NameDirectory,
}

impl Corpus {
    /// Flattened foul list, ordered by match then stream position.
    fn all_fouls(&self) -> Vec<FoulRecord> {
        self.fouls_by_match.values().flatten().cloned().collect()
    }
}

fn load_corpus(source: &DataSource, selection: &[CompetitionRef]) -> Result<Corpus, CliError> {
    let mut corpus = Corpus::default();
    for comp in selection {
        let mut matches =
            load_matches(source, comp.competition_id, comp.season_id).map_err(runtime)?;
        matches.sort_by_key(|m| m.match_id);
        for m in &matches {
            let (events, names) = load_match_events(source, m.match_id).map_err(runtime)?;
            let frames = load_frames(source, m.match_id).map_err(runtime)?;
            let extraction = extract_fouls(m.match_id, &events);
            merge_diagnostics(&mut corpus.diagnostics, extraction.diagnostics);
            corpus.fouls_by_match.insert(m.match_id, extraction.records);
            corpus.names.merge(names);
            corpus.events.insert(m.match_id, events);
            corpus.frames.insert(m.match_id, frames);
        }
        corpus.matches.extend(matches);
    }
    Ok(corpus)
}

fn load_selection(
    source: &DataSource,
    eff: &Effective,
) -> Result<Vec<CompetitionRef>, CliError> {
    let competitions = load_competitions(source).map_err(runtime)?;
    resolve_selection(&eff.config.selection.competitions, &competitions)
}

/// Pull every file for the selected competitions through the source,
/// validating as it goes, and report per-competition match counts.
pub fn cmd_fetch(eff: &Effective) -> Result<(), CliError> {
    let source = resolve_source(eff);
    let selection = load_selection(&source, eff)?;
    echo_config(eff)?;
    let mut total = 0usize;
    for comp in &selection {
        let mut matches =
            load_matches(&source, comp.competition_id, comp.season_id).map_err(runtime)?;
        matches.sort_by_key(|m| m.match_id);
        let mut with_frames = 0usize;
        for m in &matches {
            load_match_events(&source, m.match_id).map_err(runtime)?;
            if !load_frames(&source, m.match_id).map_err(runtime)?.is_empty() {
                with_frames += 1;
            }
        }
        println!(
            "{} {}: {} matches, {} with three-sixty frames",
            comp.competition_name,
            comp.season_name,
            matches.len(),
            with_frames
        );
        total += matches.len();
    }
    println!(
        "validated {total} matches, {} downloads",
        source.download_count()
    );
    Ok(())
}

/// Extract fouls, replay match state, train the action-value models if
/// the preset calls for them, and write the dataset CSV.
pub fn cmd_build(eff: &Effective) -> Result<(), CliError> {
    let source = resolve_source(eff);
    let selection = load_selection(&source, eff)?;
    let corpus = load_corpus(&source, &selection)?;
    echo_config(eff)?;

    let mut contexts: BTreeMap<String, ContextSnapshot> = BTreeMap::new();
    let no_fouls = Vec::new();
    for m in &corpus.matches {
        let fouls = corpus.fouls_by_match.get(&m.match_id).unwrap_or(&no_fouls);
        let snapshot = replay(
            &corpus.events[&m.match_id],
            fouls,
            &corpus.frames[&m.match_id],
            eff.counter_mode,
        )
        .map_err(runtime)?;
        contexts.extend(snapshot);
    }

    // Fail before the action-value training, not after, when the
    // selection can never satisfy the preset.
    if eff.preset.includes_player_counts()
        && !contexts.is_empty()
        && contexts.values().all(|c| c.attackers_count.is_none())
    {
        return Err(runtime(anyhow::anyhow!(
            "preset {} needs freeze-frame player counts, but no selected foul has a frame",
            eff.preset.name()
        )));
    }

    let fouls = corpus.all_fouls();
    let vaep_map = if eff.preset.includes_vaep() {
        Some(build_vaep_values(eff, &corpus, &fouls)?)
    } else {
        None
    };

    let outcome = build_dataset(
        &fouls,
        &contexts,
        vaep_map.as_ref(),
        eff.preset,
        eff.angle_mode,
    )
    .map_err(runtime)?;
    let csv_path = eff.out_dir.join("dataset.csv");
    export_csv(&outcome.dataset, &csv_path).map_err(runtime)?;

    let d = &corpus.diagnostics;
    let excluded: u32 = d.excluded_by_type.values().sum();
    println!("matches: {}", corpus.matches.len());
    println!(
        "fouls kept: {} (excluded by type: {excluded}, straight reds dropped: {}, no location: {})",
        fouls.len(),
        d.red_dropped,
        d.skipped_no_location
    );
    for (kind, n) in &d.excluded_by_type {
        println!("  excluded {kind}: {n}");
    }
    let rows = outcome.dataset.len();
    let positives = outcome
        .dataset
        .rows
        .iter()
        .filter(|r| r.label_yellow)
        .count();
    let missing_counts = outcome
        .dataset
        .rows
        .iter()
        .filter(|r| r.features.attackers_count.is_none())
        .count();
    println!(
        "rows: {rows} ({} skipped without context), yellow rate {:.3}",
        outcome.skipped_missing_context,
        positives as f64 / rows.max(1) as f64
    );
    if eff.preset.includes_player_counts() && missing_counts > 0 {
        println!("rows without freeze-frame counts: {missing_counts}");
    }
    println!("dataset written to {}", csv_path.display());
    Ok(())
}

/// Offensive action value at each foul, from a pair of window models
/// trained on the same corpus.
fn build_vaep_values(
    eff: &Effective,
    corpus: &Corpus,
    fouls: &[FoulRecord],
) -> Result<BTreeMap<String, f64>, CliError> {
    let mut per_match: Vec<Vec<Action>> = Vec::new();
    let mut by_match: BTreeMap<i64, Vec<Action>> = BTreeMap::new();
    for m in &corpus.matches {
        let conversion = to_actions(&corpus.events[&m.match_id]);
        per_match.push(conversion.actions.clone());
        by_match.insert(m.match_id, conversion.actions);
    }
    let params = BoostParams::<Real> {
        n_trees: eff.vaep_trees,
        seed: eff.boost.seed,
        ..BoostParams::default()
    };
    let model = train_vaep(&per_match, eff.vaep_window, params).map_err(runtime)?;
    save_vaep(&model, &eff.out_dir.join("vaep_model.json")).map_err(runtime)?;
    let mut values = BTreeMap::new();
    for foul in fouls {
        let actions = by_match.get(&foul.match_id).map_or(&[][..], Vec::as_slice);
        values.insert(foul.event_id.clone(), p_scores_at_foul(foul, actions, &model));
    }
    Ok(values)
}

/// Split the dataset, fit the configured learner, and write the model
/// with its held-out evaluation.
pub fn cmd_train(eff: &Effective, dataset_path: Option<&Path>) -> Result<(), CliError> {
    let default_path = eff.out_dir.join("dataset.csv");
    let path = dataset_path.unwrap_or(&default_path);
    let dataset = import_csv(path).map_err(runtime)?;
    echo_config(eff)?;
    if dataset.preset != eff.preset {
        println!(
            "note: dataset carries preset {}; configured preset {} does not apply",
            dataset.preset.name(),
            eff.preset.name()
        );
    }

    let (train, test) = split(&dataset, &eff.split).map_err(runtime)?;
    let (x_train, y_train) = train.to_matrix::<Real>();
    let (x_test, y_test) = test.to_matrix::<Real>();
    let schema = dataset.feature_schema();
    let model = match eff.learner {
        LearnerKind::Boosted => Model::Boosted(
            train_boosted(&x_train, &y_train, schema, eff.boost.clone()).map_err(runtime)?,
        ),
        LearnerKind::Logreg => Model::Logistic(
            train_logreg(&x_train, &y_train, schema, eff.logreg.clone()).map_err(runtime)?,
        ),
        LearnerKind::Tree => Model::Tree(
            train_tree(&x_train, &y_train, schema, eff.tree.clone()).map_err(runtime)?,
        ),
    };

    let scores = x_test
        .iter()
        .map(|row| model.predict_proba(row))
        .collect::<Result<Vec<Real>, _>>()
        .map_err(runtime)?;
    let report = evaluate(&scores, &y_test, 0.5);

    let model_path = eff.out_dir.join("model.json");
    save_model(&model, &model_path).map_err(runtime)?;
    let metrics = serde_json::to_string_pretty(&report)
        .map_err(|e| runtime(anyhow::anyhow!("metrics serialization: {e}")))?;
    write_text(&eff.out_dir.join("metrics.json"), &format!("{metrics}\n"))?;
    let mut roc = String::from("threshold,fpr,tpr\n");
    for p in &report.roc_points {
        roc.push_str(&format!("{},{},{}\n", p.threshold, p.fpr, p.tpr));
    }
    write_text(&eff.out_dir.join("roc_points.csv"), &roc)?;

    println!(
        "trained {} on {} rows, evaluated on {}",
        model.type_name(),
        train.len(),
        test.len()
    );
    println!(
        "accuracy {:.3}  precision {:.3}  recall {:.3}  f1 {:.3}  roc_auc {:.3}",
        report.accuracy, report.precision, report.recall, report.f1, report.roc_auc
    );
    for note in &report.notes {
        println!("note: {note}");
    }
    println!("model written to {}", model_path.display());
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scope {
    Teams,
    Players,
}

impl Scope {
    pub fn parse(s: &str) -> Result<Scope, CliError> {
        match s {
            "teams" => Ok(Scope::Teams),
            "players" => Ok(Scope::Players),
            other => Err(CliError::Usage(format!(
                "unknown scope `{other}` (expected teams or players)"
            ))),
        }
    }
}

/// Score every dataset foul with a trained model and aggregate into
/// discipline tables plus the scatter data behind them.
pub fn cmd_analyze(
    eff: &Effective,
    dataset_path: Option<&Path>,
    model_path: Option<&Path>,
    scope: &str,
    min_minutes: f64,
) -> Result<(), CliError> {
    let scope = Scope::parse(scope)?;
    let default_dataset = eff.out_dir.join("dataset.csv");
    let default_model = eff.out_dir.join("model.json");
    let dataset = import_csv(dataset_path.unwrap_or(&default_dataset)).map_err(runtime)?;
    let model = load_model::<Real>(model_path.unwrap_or(&default_model)).map_err(runtime)?;

    let source = resolve_source(eff);
    let selection = load_selection(&source, eff)?;
    let corpus = load_corpus(&source, &selection)?;
    echo_config(eff)?;

    let fouls = corpus.all_fouls();
    let scored = score_fouls(&dataset, &fouls, &model).map_err(runtime)?;

    match scope {
        Scope::Teams => {
            let rows = team_table(&scored, &corpus.matches).map_err(runtime)?;
            write_text(&eff.out_dir.join("teams.csv"), &table_to_csv(&rows))?;
            let fig7 =
                emit_plot_data(&rows, "bookings_per_match", "xb_per_match").map_err(runtime)?;
            write_text(&eff.out_dir.join("fig7_data.csv"), &fig7.csv)?;
            let fig8 = emit_plot_data(&rows, "fouls_per_match", "ratio").map_err(runtime)?;
            write_text(&eff.out_dir.join("fig8_data.csv"), &fig8.csv)?;
            if fig8.omitted_missing_value > 0 {
                println!(
                    "fig8: omitted {} bookingless teams with no ratio",
                    fig8.omitted_missing_value
                );
            }
            print!("{}", render_table(&rows, "team discipline"));
        }
        Scope::Players => {
            let rows = player_table(&scored, &corpus.events, &corpus.names, min_minutes);
            write_text(&eff.out_dir.join("players.csv"), &table_to_csv(&rows))?;
            let fig9 = emit_plot_data(&rows, "fouls_per_90", "ratio").map_err(runtime)?;
            write_text(&eff.out_dir.join("fig9_data.csv"), &fig9.csv)?;
            if fig9.omitted_missing_value > 0 {
                println!(
                    "fig9: omitted {} players with no ratio",
                    fig9.omitted_missing_value
                );
            }
            print!("{}", render_table(&rows, "player discipline"));
        }
    }

    let predicted: f64 = scored.iter().map(|s| s.xb).sum();
    let observed = scored.iter().filter(|s| s.booked).count();
    println!(
        "calibration: {predicted:.2} expected bookings vs {observed} observed over {} fouls",
        scored.len()
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use xb_core::statsbomb::Gender;

    fn comp(cid: i64, sid: i64, name: &str, season: &str) -> CompetitionRef {
        CompetitionRef {
            competition_id: cid,
            season_id: sid,
            competition_name: name.to_string(),
            season_name: season.to_string(),
            gender: Gender::Male,
        }
    }

    #[test]
    fn selectors_accept_ids_and_names() {
        let avail = vec![
            comp(43, 106, "FIFA World Cup", "2022"),
            comp(55, 43, "UEFA Euro", "2020"),
        ];
        let sel = resolve_selection(&["43:106".to_string()], &avail).unwrap();
        assert_eq!(sel[0].competition_id, 43);
        let sel = resolve_selection(&["uefa euro 2020".to_string()], &avail).unwrap();
        assert_eq!(sel[0].competition_id, 55);
        let sel = resolve_selection(
            &["43:106".to_string(), "FIFA World Cup 2022".to_string()],
            &avail,
        )
        .unwrap();
        assert_eq!(sel.len(), 1, "duplicate selectors collapse");
    }

    #[test]
    fn empty_or_unmatched_selectors_are_usage_errors() {
        let avail = vec![comp(43, 106, "FIFA World Cup", "2022")];
        assert!(matches!(
            resolve_selection(&[], &avail),
            Err(CliError::Usage(_))
        ));
        assert!(matches!(
            resolve_selection(&["1:2".to_string()], &avail),
            Err(CliError::Usage(_))
        ));
        assert!(matches!(
            resolve_selection(&["Copa Imaginaria 1890".to_string()], &avail),
            Err(CliError::Usage(_))
        ));
    }

    #[test]
    fn scope_names_parse() {
        assert_eq!(Scope::parse("teams").unwrap(), Scope::Teams);
        assert_eq!(Scope::parse("players").unwrap(), Scope::Players);
        assert!(matches!(Scope::parse("referees"), Err(CliError::Usage(_))));
    }

    #[test]
    fn diagnostics_merge_sums_tallies() {
        let mut total = FoulDiagnostics::default();
        let mut a = FoulDiagnostics::default();
        a.red_dropped = 1;
        a.excluded_by_type.insert("Dive".to_string(), 2);
        let mut b = FoulDiagnostics::default();
        b.skipped_no_location = 3;
        b.excluded_by_type.insert("Dive".to_string(), 1);
        b.excluded_by_type.insert("Handball".to_string(), 4);
        merge_diagnostics(&mut total, a);
        merge_diagnostics(&mut total, b);
        assert_eq!(total.red_dropped, 1);
        assert_eq!(total.skipped_no_location, 3);
        assert_eq!(total.excluded_by_type["Dive"], 3);
        assert_eq!(total.excluded_by_type["Handball"], 4);
    }
}
