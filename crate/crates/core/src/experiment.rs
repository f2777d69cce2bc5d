//! The two-condition experiment: seeded games, metrics, logs and archives.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analogy::{sage_add, save_gpool, AnalogyError, Gpool, SageParams};
use crate::decision::{
    assess_probe, default_policy, game_phase, propose_action, unsatisfied_goals, DecisionError, DecisionRecord,
    GoalNetwork, Phase, Prediction,
};
use crate::episodes::{
    case_file_name, run_scenario, write_case_archive, EpisodeCase, EpisodeError, Mode, Outcome, Segmenter,
};
use crate::fluents::QuantityCatalog;
use crate::sim::{new_game, ActionSpec, CityId, SimConfig, SimError, STREAM_DECISIONS};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid experiment config: {0}")]
    Config(String),
    #[error(transparent)]
    Toml(#[from] toml::de::Error),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Episode(#[from] EpisodeError),
    #[error(transparent)]
    Analogy(#[from] AnalogyError),
    #[error(transparent)]
    Decision(#[from] DecisionError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub conditions: Vec<Mode>,
    pub games: usize,
    pub turns: u32,
    /// One seed per game, shared by both conditions.
    pub seeds: Vec<u64>,
    pub assimilation_threshold: f64,
    pub probability_cutoff: f64,
    pub output: Option<PathBuf>,
    /// World, units and invasion schedule.
    pub sim: SimConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            conditions: vec![Mode::Baseline, Mode::Histories],
            games: 10,
            turns: 120,
            seeds: (1..=10).collect(),
            assimilation_threshold: SageParams::default().assimilation_threshold,
            probability_cutoff: SageParams::default().probability_cutoff,
            output: None,
            sim: SimConfig::default(),
        }
    }
}

/// The configuration shipped with the repository.
pub const DEFAULT_CONFIG: &str = include_str!("../../../configs/default.toml");

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ExperimentError> {
        let cfg: ExperimentConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ExperimentError> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn shipped() -> Self {
        Self::from_toml(DEFAULT_CONFIG).expect("shipped config is valid")
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: String| Err(ExperimentError::Config(m));
        if self.conditions.is_empty() {
            return bad("no conditions".into());
        }
        if self.games == 0 {
            return bad("games must be positive".into());
        }
        if self.seeds.len() < self.games {
            return bad(format!("{} seeds for {} games", self.seeds.len(), self.games));
        }
        for (name, v) in
            [("assimilation_threshold", self.assimilation_threshold), ("probability_cutoff", self.probability_cutoff)]
        {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("{name} must lie in [0, 1]"));
            }
        }
        self.sim.validate()?;
        Ok(())
    }

    pub fn sage_params(&self) -> SageParams {
        SageParams { assimilation_threshold: self.assimilation_threshold, probability_cutoff: self.probability_cutoff }
    }
}

/// Everything one (condition, game) run produced.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub condition: Mode,
    pub game: usize,
    pub seed: u64,
    /// Learner cities after each turn; index 0 is the initial state.
    pub cities: Vec<u32>,
    pub gold: Vec<i64>,
    pub cases: Vec<EpisodeCase>,
    pub decisions: Vec<DecisionRecord>,
    pub success: Gpool,
    pub failure: Gpool,
}

impl RunResult {
    pub fn episodes(&self) -> usize {
        self.cases.len()
    }

    pub fn mean_facts(&self) -> f64 {
        if self.cases.is_empty() {
            0.0
        } else {
            self.cases.iter().map(EpisodeCase::fact_count).sum::<usize>() as f64 / self.cases.len() as f64
        }
    }
}

fn choose_action(
    seg: &Segmenter,
    state: &mut crate::sim::GameState,
    city: CityId,
    phase: Phase,
    net: &GoalNetwork,
    pools: (&Gpool, &Gpool),
) -> Result<DecisionRecord, ExperimentError> {
    let turn = state.turn;
    let mut record =
        DecisionRecord { turn, city, phase, predicted: None, failed_goals: Vec::new(), action: ActionSpec::NoOp };
    if phase == Phase::Growth {
        record.action = default_policy(city, state);
        return Ok(record);
    }
    let probe = seg.probe(state, city)?;
    let assessment = assess_probe(&probe.facts, pools.0, pools.1);
    record.predicted = Some(assessment.predicted);
    let mut proposed = None;
    if let (Prediction::Lose, Some((item, m))) = (assessment.predicted, &assessment.mapping) {
        let failed = unsatisfied_goals(net, city, &probe.facts, *item, m, pools.1, state)?;
        record.failed_goals = failed.iter().map(|g| g.name).collect();
        let legal = state.legal_city_actions(city)?;
        proposed = propose_action(&failed, &legal, state.rng(STREAM_DECISIONS));
    }
    record.action = proposed.unwrap_or_else(|| default_policy(city, state));
    Ok(record)
}

/// Plays one game under one condition.
pub fn run_game(cfg: &ExperimentConfig, condition: Mode, game: usize) -> Result<RunResult, ExperimentError> {
    let seed = cfg.seeds[game];
    let catalog = QuantityCatalog::shipped();
    let net = GoalNetwork::city_defense(&catalog)?;
    let mut state = new_game(&cfg.sim, seed, cfg.turns)?;
    let mut seg = Segmenter::new(condition, catalog);
    seg.start(&state)?;
    let mut success = Gpool::new(Outcome::Success, cfg.sage_params());
    let mut failure = Gpool::new(Outcome::Failure, cfg.sage_params());
    let mut result = RunResult {
        condition,
        game,
        seed,
        cities: vec![state.learner_cities().count() as u32],
        gold: vec![state.gold(crate::sim::LEARNER)],
        cases: Vec::new(),
        decisions: Vec::new(),
        success: success.clone(),
        failure: failure.clone(),
    };
    for _ in 0..cfg.turns {
        let phase = game_phase(seg.store());
        let cities: Vec<CityId> = state.learner_cities().map(|c| c.id).collect();
        let mut actions = Vec::with_capacity(cities.len());
        for city in cities {
            let record = choose_action(&seg, &mut state, city, phase, &net, (&success, &failure))?;
            actions.push((city, record.action));
            result.decisions.push(record);
        }
        let mut err = None;
        state.step_observed(&actions, &mut |st, ev| {
            if err.is_none() {
                err = seg.on_sim_event(st, ev).err();
            }
        })?;
        if let Some(e) = err {
            return Err(e.into());
        }
        for (_, case) in seg.drain_finished() {
            match case.outcome {
                Some(Outcome::Success) => sage_add(&mut success, &case)?,
                _ => sage_add(&mut failure, &case)?,
            };
            result.cases.push(case);
        }
        result.cities.push(state.learner_cities().count() as u32);
        result.gold.push(state.gold(crate::sim::LEARNER));
    }
    result.success = success;
    result.failure = failure;
    Ok(result)
}

fn write_run(dir: &Path, r: &RunResult) -> Result<(), ExperimentError> {
    let tag = format!("{}_{}", r.condition, r.game);
    let mut w = csv::Writer::from_path(dir.join(format!("metrics_{tag}.csv")))?;
    w.write_record(["turn", "cities", "gold"])?;
    for (t, (c, g)) in r.cities.iter().zip(&r.gold).enumerate() {
        w.write_record([t.to_string(), c.to_string(), g.to_string()])?;
    }
    w.flush()?;
    let mut w = csv::Writer::from_path(dir.join(format!("decisions_{tag}.csv")))?;
    w.write_record(DecisionRecord::HEADER)?;
    for d in &r.decisions {
        w.write_record(d.row())?;
    }
    w.flush()?;
    let pools = dir.join("gpools").join(&tag);
    save_gpool(&r.success, &pools.join("success"))?;
    save_gpool(&r.failure, &pools.join("failure"))?;
    Ok(())
}

/// Outcome of a whole experiment.
#[derive(Debug, Default)]
pub struct ExperimentOutput {
    pub runs: Vec<RunResult>,
    /// (condition, game, diagnostic) for runs that aborted.
    pub failures: Vec<(Mode, usize, String)>,
    pub summary: Vec<SummaryRow>,
}

/// Runs every (condition, game) pair in parallel and writes all outputs to
/// `out`. A failing run is recorded and the rest proceed.
pub fn run_experiment(cfg: &ExperimentConfig, out: &Path) -> Result<ExperimentOutput, ExperimentError> {
    cfg.validate()?;
    std::fs::create_dir_all(out)?;
    let jobs: Vec<(Mode, usize)> = cfg.conditions.iter().flat_map(|&c| (0..cfg.games).map(move |g| (c, g))).collect();
    let results: Vec<Result<RunResult, ExperimentError>> = jobs.par_iter().map(|&(c, g)| run_game(cfg, c, g)).collect();
    let mut output = ExperimentOutput::default();
    let mut archive: Vec<(String, &EpisodeCase)> = Vec::new();
    let mut diagnostics = csv::Writer::from_path(out.join("errors.csv"))?;
    diagnostics.write_record(["condition", "game", "error"])?;
    for (&(c, g), r) in jobs.iter().zip(&results) {
        match r {
            Ok(run) => {
                write_run(out, run)?;
                for (i, case) in run.cases.iter().enumerate() {
                    archive.push((case_file_name(c, g, i), case));
                }
            }
            Err(e) => {
                diagnostics.write_record([c.name(), &g.to_string(), &e.to_string()])?;
                output.failures.push((c, g, e.to_string()));
            }
        }
    }
    diagnostics.flush()?;
    write_case_archive(&out.join("cases"), &archive)?;
    output.runs = results.into_iter().filter_map(Result::ok).collect();
    output.summary = summarize_dir(out)?;
    Ok(output)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub condition: Mode,
    pub games: usize,
    pub episodes: usize,
    pub mean_facts: f64,
    pub mean_cities: f64,
    pub mean_gold: f64,
    pub final_cities: f64,
    pub final_gold: f64,
}

impl SummaryRow {
    pub const HEADER: [&'static str; 8] = [
        "condition",
        "games",
        "episodes",
        "mean-facts-per-case",
        "mean-cities",
        "mean-gold",
        "final-cities",
        "final-gold",
    ];
}

#[derive(Debug, Deserialize)]
struct MetricsRow {
    turn: u32,
    cities: u32,
    gold: i64,
}

#[derive(Debug, Deserialize)]
struct ManifestRow {
    #[serde(rename = "case-file")]
    case_file: String,
    #[serde(rename = "fact-count")]
    fact_count: usize,
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        s / n as f64
    }
}

/// Recomputes the summary from the files of a finished run directory and
/// writes `summary.csv` plus per-condition `series_<condition>.csv`.
pub fn summarize_dir(dir: &Path) -> Result<Vec<SummaryRow>, ExperimentError> {
    // condition -> game -> per-turn (cities, gold)
    let mut series: BTreeMap<Mode, BTreeMap<usize, Vec<(u32, i64)>>> = BTreeMap::new();
    let mut names: Vec<String> =
        std::fs::read_dir(dir)?.filter_map(|e| e.ok().and_then(|e| e.file_name().into_string().ok())).collect();
    names.sort();
    for name in names {
        let Some(tag) = name.strip_prefix("metrics_").and_then(|n| n.strip_suffix(".csv")) else { continue };
        let Some((cond, game)) = tag.rsplit_once('_') else { continue };
        let (Ok(cond), Ok(game)) = (cond.parse::<Mode>(), game.parse::<usize>()) else { continue };
        let mut rows = Vec::new();
        for row in csv::Reader::from_path(dir.join(&name))?.deserialize() {
            let row: MetricsRow = row?;
            debug_assert_eq!(row.turn as usize, rows.len());
            rows.push((row.cities, row.gold));
        }
        series.entry(cond).or_default().insert(game, rows);
    }
    let mut facts: BTreeMap<Mode, Vec<usize>> = BTreeMap::new();
    let manifest = dir.join("cases").join("manifest.csv");
    if manifest.exists() {
        for row in csv::Reader::from_path(manifest)?.deserialize() {
            let row: ManifestRow = row?;
            if let Some(cond) = row.case_file.split('_').next().and_then(|c| c.parse::<Mode>().ok()) {
                facts.entry(cond).or_default().push(row.fact_count);
            }
        }
    }
    let mut rows = Vec::new();
    let mut summary = csv::Writer::from_path(dir.join("summary.csv"))?;
    summary.write_record(SummaryRow::HEADER)?;
    for (cond, games) in &series {
        let f = facts.get(cond).map_or(&[][..], Vec::as_slice);
        let row = SummaryRow {
            condition: *cond,
            games: games.len(),
            episodes: f.len(),
            mean_facts: mean(f.iter().map(|&x| x as f64)),
            mean_cities: mean(games.values().flatten().map(|r| r.0 as f64)),
            mean_gold: mean(games.values().flatten().map(|r| r.1 as f64)),
            final_cities: mean(games.values().filter_map(|g| g.last()).map(|r| r.0 as f64)),
            final_gold: mean(games.values().filter_map(|g| g.last()).map(|r| r.1 as f64)),
        };
        summary.write_record([
            cond.name().to_string(),
            row.games.to_string(),
            row.episodes.to_string(),
            format!("{:.3}", row.mean_facts),
            format!("{:.3}", row.mean_cities),
            format!("{:.3}", row.mean_gold),
            format!("{:.3}", row.final_cities),
            format!("{:.3}", row.final_gold),
        ])?;
        let len = games.values().map(Vec::len).max().unwrap_or(0);
        let mut w = csv::Writer::from_path(dir.join(format!("series_{cond}.csv")))?;
        w.write_record(["turn", "mean-cities", "mean-gold"])?;
        for t in 0..len {
            let c = mean(games.values().filter_map(|g| g.get(t)).map(|r| r.0 as f64));
            let g = mean(games.values().filter_map(|g| g.get(t)).map(|r| r.1 as f64));
            w.write_record([t.to_string(), format!("{c:.3}"), format!("{g:.3}")])?;
        }
        w.flush()?;
        rows.push(row);
    }
    summary.flush()?;
    Ok(rows)
}

/// Runs a scripted scenario and archives its cases under `out`.
pub fn run_scenario_to(name: &str, condition: Mode, out: &Path) -> Result<Vec<EpisodeCase>, ExperimentError> {
    let (_, eps) = run_scenario(name, condition)?;
    let cases: Vec<EpisodeCase> = eps.into_iter().map(|(_, c)| c).collect();
    let entries: Vec<(String, &EpisodeCase)> =
        cases.iter().enumerate().map(|(i, c)| (format!("{condition}_{name}_{i}.case"), c)).collect();
    write_case_archive(out, &entries)?;
    Ok(cases)
}
