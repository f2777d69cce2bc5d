//! Battle segmentation and case construction.
//!
//! A [`Segmenter`] watches the simulation event stream, keeps footprints and
//! fluents up to date, and cuts the trace into defensive battle episodes. In
//! `Baseline` mode every attack on a city is its own episode; in `Histories`
//! mode an episode lasts from the first attack until the city falls or no
//! enemy group is spatially connected to it any more. Closed episodes are
//! turned into case facts straight away.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fluents::{allen_relation, temporally_local, FluentError, FluentStore, QualInterval, QuantityCatalog};
use crate::sim::{
    AttackTarget, CityId, Coord, GameMap, GameState, SimConfig, SimError, SimEvent, SimEventKind, Terrain, Timepoint,
    UnitKind, INVADER, LEARNER,
};
use crate::spatial::{city_region_symbol, unit_symbol, Footprint, FootprintFrame, FootprintKind, SpatialTracker};
use crate::symbolic::{render_archive, CaseFacts, Symbol, Term};

#[derive(Debug, Error)]
pub enum EpisodeError {
    #[error("episode {0} is still open")]
    Open(Symbol),
    #[error(transparent)]
    Fluent(#[from] FluentError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("unknown scenario {0}")]
    UnknownScenario(String),
    #[error("city {0} is not held by the learner")]
    NotOwned(CityId),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Baseline,
    Histories,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Baseline => "baseline",
            Mode::Histories => "histories",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "baseline" => Ok(Mode::Baseline),
            "histories" => Ok(Mode::Histories),
            other => Err(format!("unknown condition {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Outcome {
    Success,
    Failure,
}

impl Outcome {
    pub fn name(self) -> &'static str {
        match self {
            Outcome::Success => "success",
            Outcome::Failure => "failure",
        }
    }

    pub fn collection(self) -> &'static str {
        match self {
            Outcome::Success => "DefensiveEpisodeSuccess",
            Outcome::Failure => "DefensiveEpisodeFailure",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Episode {
    pub id: Symbol,
    pub city: CityId,
    pub mode: Mode,
    pub start: Timepoint,
    pub end: Option<Timepoint>,
    /// City footprint plus every enemy group ever connected to it.
    pub participants: BTreeSet<Symbol>,
    /// Units that belonged to a participating group when it was recorded.
    pub participant_units: BTreeSet<Symbol>,
    pub attacks: u32,
    pub outcome: Option<Outcome>,
}

/// Facts of one case plus bookkeeping.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EpisodeCase {
    /// The reified event; the Skolem event for probes.
    pub event: Symbol,
    pub facts: CaseFacts,
    pub outcome: Option<Outcome>,
    pub condition: Mode,
    pub city: CityId,
    pub start: Timepoint,
    pub end: Timepoint,
}

impl EpisodeCase {
    pub fn fact_count(&self) -> usize {
        self.facts.len()
    }

    pub fn turns(&self) -> u32 {
        self.end.turn - self.start.turn
    }

    pub fn render(&self) -> String {
        let outcome = self.outcome.map_or("none", Outcome::name);
        let comments = [
            format!("condition {}", self.condition),
            format!("city {}", self.city),
            format!("outcome {outcome}"),
            format!("span {} {}", self.start, self.end),
        ];
        render_archive(&comments, &self.facts)
    }
}

pub const PROBE_EVENT: &str = "ProbeEvent";
/// Closed intervals that ended at most this many turns ago still describe
/// the present in a probe.
pub const PROBE_WINDOW: u32 = 3;

/// Collections describing a participant.
pub type ParticipantTraits = BTreeMap<Symbol, BTreeSet<Symbol>>;

fn kind_collection(id: &Symbol, traits: &ParticipantTraits) -> &'static str {
    let city = FootprintKind::CityFootprint.collection();
    if traits.get(id).is_some_and(|c| c.iter().any(|s| s.as_str() == city)) {
        city
    } else {
        FootprintKind::UnitGroupFootprint.collection()
    }
}

fn isa(e: &Symbol, c: &str) -> Term {
    Term::app("isa", vec![Term::Symbol(e.clone()), Term::sym(c)])
}

fn holds(moment: &str, event: &Symbol, value: Term) -> Term {
    Term::app("holdsIn", vec![Term::app(moment, vec![Term::Symbol(event.clone())]), value])
}

/// An interval id with its resolved bounds.
type SpannedInterval = (Symbol, (Timepoint, Timepoint));

/// History intervals of the participants kept by `keep`, with their
/// Davidsonian change facts and the Allen facts among temporally local pairs.
fn history_facts(
    store: &FluentStore,
    participants: &BTreeSet<Symbol>,
    traits: &ParticipantTraits,
    now: Timepoint,
    keep: impl Fn(&QualInterval) -> bool,
) -> Result<(Vec<Term>, Vec<SpannedInterval>), FluentError> {
    let catalog = store.catalog();
    let mut facts = Vec::new();
    let mut kept = Vec::new();
    for p in participants {
        for key in catalog.history_keys(kind_collection(p, traits), p) {
            let Some(def) = catalog.get(key.quantity.as_str()) else { continue };
            for iv in store.intervals(&key).iter().filter(|iv| keep(iv)) {
                facts.push(isa(&iv.id, "TemporalInterval"));
                facts.push(Term::app(
                    iv.value.change_predicate(),
                    vec![Term::Symbol(iv.id.clone()), def.quantity_term(p)],
                ));
                kept.push((iv.id.clone(), iv.bounds(now)));
            }
        }
    }
    kept.sort_by(|a, b| (a.1, &a.0).cmp(&(b.1, &b.0)));
    for (i, (a, ab)) in kept.iter().enumerate() {
        for (b, bb) in &kept[i + 1..] {
            if temporally_local(*ab, *bb)? {
                let rel = allen_relation(*ab, *bb)?;
                facts.push(Term::app(rel.predicate(), vec![Term::Symbol(a.clone()), Term::Symbol(b.clone())]));
            }
        }
    }
    Ok((facts, kept))
}

fn participant_facts(event: &Symbol, participants: &BTreeSet<Symbol>, traits: &ParticipantTraits) -> Vec<Term> {
    let mut facts = Vec::new();
    for p in participants {
        facts.push(Term::app("eventParticipant", vec![Term::Symbol(event.clone()), Term::Symbol(p.clone())]));
        match traits.get(p) {
            Some(cs) => facts.extend(cs.iter().map(|c| isa(p, c.as_str()))),
            None => facts.push(isa(p, FootprintKind::UnitGroupFootprint.collection())),
        }
    }
    facts
}

/// Builds the case for a closed episode.
pub fn construct_case(
    ep: &Episode,
    store: &FluentStore,
    traits: &ParticipantTraits,
) -> Result<EpisodeCase, EpisodeError> {
    let end = ep.end.ok_or_else(|| EpisodeError::Open(ep.id.clone()))?;
    let outcome = ep.outcome.ok_or_else(|| EpisodeError::Open(ep.id.clone()))?;
    let span = (ep.start, end);
    let interval = Symbol::new(format!("{}-Span", ep.id));
    let mut facts = vec![
        isa(&ep.id, outcome.collection()),
        isa(&interval, "TemporalInterval"),
        Term::app("timeSpanOf", vec![Term::Symbol(ep.id.clone()), Term::Symbol(interval.clone())]),
    ];
    let local = |iv: &QualInterval| temporally_local(iv.bounds(end), span).unwrap_or(false);
    let (hist, kept) = history_facts(store, &ep.participants, traits, end, local)?;
    facts.extend(hist);
    for (id, bounds) in &kept {
        let rel = allen_relation(span, *bounds)?;
        facts.push(Term::app(rel.predicate(), vec![Term::Symbol(interval.clone()), Term::Symbol(id.clone())]));
    }
    facts.extend(participant_facts(&ep.id, &ep.participants, traits));
    let catalog = store.catalog();
    for p in &ep.participants {
        for def in catalog.participant_quantities(kind_collection(p, traits)) {
            let series: Vec<&(Timepoint, Term)> = store.series(&def.name, p).collect();
            // newest first: the start value is the last one at or before the
            // start, or the first one recorded during the episode
            let start_v =
                series.iter().find(|(t, _)| *t <= ep.start).or_else(|| series.iter().rev().find(|(t, _)| *t <= end));
            let end_v = series.iter().find(|(t, _)| *t <= end);
            let qt = def.quantity_term(p);
            if let Some((_, v)) = start_v {
                facts.push(holds("StartFn", &ep.id, Term::app("valueOf", vec![qt.clone(), v.clone()])));
            }
            if let Some((_, v)) = end_v {
                facts.push(holds("EndFn", &ep.id, Term::app("valueOf", vec![qt, v.clone()])));
            }
        }
    }
    Ok(EpisodeCase {
        event: ep.id.clone(),
        facts: CaseFacts::new(facts),
        outcome: Some(outcome),
        condition: ep.mode,
        city: ep.city,
        start: ep.start,
        end,
    })
}

/// Describes the present situation around `city` as the start of a
/// hypothetical battle.
pub fn construct_probe_case(
    state: &GameState,
    city: CityId,
    store: &FluentStore,
    frame: &FootprintFrame,
    traits: &ParticipantTraits,
    condition: Mode,
) -> Result<EpisodeCase, EpisodeError> {
    if state.cities.get(&city).is_none_or(|c| c.owner != LEARNER) {
        return Err(EpisodeError::NotOwned(city));
    }
    let now = store.last_sample().unwrap_or_else(|| state.now());
    let event = Symbol::new(PROBE_EVENT);
    let region = city_region_symbol(city);
    let mut participants = BTreeSet::from([region.clone()]);
    participants.extend(frame.local_groups(city).into_iter().map(|g| g.id.clone()));
    let mut traits = traits.clone();
    traits.entry(region).or_insert_with(|| city_traits(state, city));
    let recent = |iv: &QualInterval| iv.end.is_none_or(|e| e.turn + PROBE_WINDOW >= now.turn);
    let (mut facts, _) = history_facts(store, &participants, &traits, now, recent)?;
    facts.extend(participant_facts(&event, &participants, &traits));
    let catalog = store.catalog();
    for p in &participants {
        for def in catalog.participant_quantities(kind_collection(p, &traits)) {
            if let Some(v) = store.latest(&def.name, p) {
                facts.push(holds("StartFn", &event, Term::app("valueOf", vec![def.quantity_term(p), v.clone()])));
            }
        }
    }
    Ok(EpisodeCase { event, facts: CaseFacts::new(facts), outcome: None, condition, city, start: now, end: now })
}

/// Collections describing a city's footprint at the moment.
pub fn city_traits(state: &GameState, city: CityId) -> BTreeSet<Symbol> {
    let mut out = BTreeSet::from([Symbol::new(FootprintKind::CityFootprint.collection())]);
    if let Some(c) = state.cities.get(&city) {
        if c.walls {
            out.insert(Symbol::new("WalledCity"));
        }
        if let Some(tile) = state.map.tile(c.center) {
            out.insert(Symbol::new(format!("{:?}Terrain", tile.terrain)));
        }
    }
    out
}

/// Segments one run and accumulates footprints and fluents.
#[derive(Debug, Clone)]
pub struct Segmenter {
    pub mode: Mode,
    tracker: SpatialTracker,
    store: FluentStore,
    frame: FootprintFrame,
    prev_frame: FootprintFrame,
    prev_sample: Option<Timepoint>,
    open: BTreeMap<CityId, Episode>,
    finished: Vec<(Episode, EpisodeCase)>,
    traits: ParticipantTraits,
    next_episode: u32,
}

impl Segmenter {
    pub fn new(mode: Mode, catalog: QuantityCatalog) -> Self {
        Segmenter {
            mode,
            tracker: SpatialTracker::new(),
            store: FluentStore::with_catalog(catalog),
            frame: FootprintFrame::default(),
            prev_frame: FootprintFrame::default(),
            prev_sample: None,
            open: BTreeMap::new(),
            finished: Vec::new(),
            traits: ParticipantTraits::new(),
            next_episode: 0,
        }
    }

    pub fn store(&self) -> &FluentStore {
        &self.store
    }

    pub fn frame(&self) -> &FootprintFrame {
        &self.frame
    }

    pub fn traits(&self) -> &ParticipantTraits {
        &self.traits
    }

    pub fn open_episodes(&self) -> impl Iterator<Item = &Episode> {
        self.open.values()
    }

    /// Takes the episodes closed since the last call, with their cases.
    pub fn drain_finished(&mut self) -> Vec<(Episode, EpisodeCase)> {
        std::mem::take(&mut self.finished)
    }

    pub fn probe(&self, state: &GameState, city: CityId) -> Result<EpisodeCase, EpisodeError> {
        construct_probe_case(state, city, &self.store, &self.frame, &self.traits, self.mode)
    }

    fn sample(&mut self, state: &GameState, t: Timepoint) -> Result<(), EpisodeError> {
        let frame = self.tracker.observe(state, t);
        self.store.sample_all(state, t, &frame)?;
        for c in state.learner_cities() {
            self.traits.insert(city_region_symbol(c.id), city_traits(state, c.id));
        }
        for g in &frame.groups {
            self.traits
                .entry(g.id.clone())
                .or_insert_with(|| BTreeSet::from([Symbol::new(FootprintKind::UnitGroupFootprint.collection())]));
        }
        self.prev_frame = std::mem::replace(&mut self.frame, frame);
        self.prev_sample = Some(t);
        Ok(())
    }

    /// Records the initial state; call before the first step.
    pub fn start(&mut self, state: &GameState) -> Result<(), EpisodeError> {
        self.sample(state, state.now())
    }

    fn attacker_group(&self, attacker: u32) -> Option<&Footprint> {
        let u = unit_symbol(attacker);
        self.prev_frame.groups.iter().chain(self.frame.groups.iter()).find(|g| g.constituents.contains(&u))
    }

    fn fresh_episode(&mut self, city: CityId, start: Timepoint) -> Episode {
        self.next_episode += 1;
        Episode {
            id: Symbol::new(format!("Episode-{}", self.next_episode)),
            city,
            mode: self.mode,
            start,
            end: None,
            participants: BTreeSet::from([city_region_symbol(city)]),
            participant_units: BTreeSet::new(),
            attacks: 0,
            outcome: None,
        }
    }

    fn add_participant(ep: &mut Episode, g: &Footprint) {
        ep.participants.insert(g.id.clone());
        ep.participant_units.extend(g.constituents.iter().cloned());
    }

    fn close(&mut self, mut ep: Episode, end: Timepoint, outcome: Outcome) -> Result<(), EpisodeError> {
        ep.end = Some(end);
        ep.outcome = Some(outcome);
        self.store.close_event(&ep.id)?;
        let case = construct_case(&ep, &self.store, &self.traits)?;
        self.finished.push((ep, case));
        Ok(())
    }

    /// Handles one simulation event, given the world right after it.
    pub fn on_sim_event(&mut self, state: &GameState, ev: &SimEvent) -> Result<(), EpisodeError> {
        let attack = match &ev.kind {
            SimEventKind::TurnStart => None,
            SimEventKind::AttackResolved { attacker, target: AttackTarget::City(c), outcome } => {
                Some((*attacker, *c, outcome.conquered))
            }
            SimEventKind::CityConquered { .. } => None,
            _ => return Ok(()),
        };
        let before = self.prev_sample.unwrap_or(ev.time);
        self.sample(state, ev.time)?;
        let t = ev.time;
        if let Some((attacker, city, conquered)) = attack {
            let group = self.attacker_group(attacker).cloned();
            match self.mode {
                Mode::Baseline => {
                    let mut ep = self.fresh_episode(city, before);
                    ep.attacks = 1;
                    ep.participant_units.insert(unit_symbol(attacker));
                    if let Some(g) = &group {
                        Self::add_participant(&mut ep, g);
                    }
                    self.store.open_event(ep.id.clone());
                    for p in ep.participants.clone() {
                        self.store.record_participant(&ep.id, p)?;
                    }
                    let outcome = if conquered { Outcome::Failure } else { Outcome::Success };
                    self.close(ep, t, outcome)?;
                }
                Mode::Histories => {
                    if !self.open.contains_key(&city) {
                        let ep = self.fresh_episode(city, before);
                        self.store.open_event(ep.id.clone());
                        self.open.insert(city, ep);
                    }
                    let ep = self.open.get_mut(&city).expect("opened");
                    ep.attacks += 1;
                    ep.participant_units.insert(unit_symbol(attacker));
                    if let Some(g) = &group {
                        Self::add_participant(ep, g);
                    }
                }
            }
        }
        if self.mode == Mode::Histories {
            let cities: Vec<CityId> = self.open.keys().copied().collect();
            for city in cities {
                let held = state.cities.get(&city).is_some_and(|c| c.owner == LEARNER);
                let mut ep = self.open.remove(&city).expect("open episode");
                if held {
                    for g in self.frame.local_groups(city) {
                        Self::add_participant(&mut ep, g);
                    }
                }
                for p in ep.participants.clone() {
                    self.store.record_participant(&ep.id, p)?;
                }
                if !held {
                    self.close(ep, t, Outcome::Failure)?;
                } else if self.frame.local_groups(city).is_empty() {
                    self.close(ep, t, Outcome::Success)?;
                } else {
                    self.open.insert(city, ep);
                }
            }
        }
        Ok(())
    }
}

/// Writes one `.case` file per entry plus `manifest.csv`.
pub fn write_case_archive(dir: &Path, entries: &[(String, &EpisodeCase)]) -> Result<(), EpisodeError> {
    std::fs::create_dir_all(dir)?;
    let mut manifest = csv::Writer::from_path(dir.join("manifest.csv"))?;
    manifest.write_record(["case-file", "outcome", "fact-count", "turns"])?;
    for (name, case) in entries {
        std::fs::write(dir.join(name), case.render())?;
        let outcome = case.outcome.map_or("none", Outcome::name);
        manifest.write_record([name.as_str(), outcome, &case.fact_count().to_string(), &case.turns().to_string()])?;
    }
    manifest.flush()?;
    Ok(())
}

pub fn case_file_name(condition: Mode, game: usize, episode: usize) -> String {
    format!("{condition}_{game}_{episode}.case")
}

/// Hand-scripted fixtures that bypass invasion waves.
pub const SCENARIOS: [&str; 3] = ["three-attacker", "two-attacker", "single-attack"];

/// Initial state and scripted combat outcomes of a named scenario.
pub fn scenario_state(name: &str) -> Result<GameState, EpisodeError> {
    let cfg = SimConfig { waves_enabled: false, tech_turn: None, ..SimConfig::default() };
    let mut s = GameState::empty(cfg, GameMap::uniform(20, 20, Terrain::Plains), 0);
    let city = s.add_city(LEARNER, Coord::new(10, 10));
    s.add_unit(LEARNER, UnitKind::Defender, Coord::new(10, 10), Some(city));
    let invade = |s: &mut GameState, x, y| s.add_unit(INVADER, UnitKind::Attacker, Coord::new(x, y), Some(city));
    match name {
        "three-attacker" => {
            // the first attacker strikes at once and dies; the other two
            // close in, kill the defender and take the city
            invade(&mut s, 9, 10);
            invade(&mut s, 13, 9);
            invade(&mut s, 12, 13);
            s.combat_script.extend([false, true]);
        }
        "two-attacker" => {
            invade(&mut s, 9, 10);
            invade(&mut s, 9, 11);
            s.combat_script.extend([false, false]);
        }
        "single-attack" => {
            invade(&mut s, 9, 10);
            s.combat_script.extend([false]);
        }
        other => return Err(EpisodeError::UnknownScenario(other.to_string())),
    }
    Ok(s)
}

pub const SCENARIO_TURNS: u32 = 8;

/// Runs a scenario under one segmentation mode with no city actions.
pub fn run_scenario(name: &str, mode: Mode) -> Result<(GameState, Vec<(Episode, EpisodeCase)>), EpisodeError> {
    let mut s = scenario_state(name)?;
    let mut seg = Segmenter::new(mode, QuantityCatalog::shipped());
    seg.start(&s)?;
    for _ in 0..SCENARIO_TURNS {
        let mut err = None;
        s.step_observed(&[], &mut |st, ev| {
            if err.is_none() {
                err = seg.on_sim_event(st, ev).err();
            }
        })?;
        if let Some(e) = err {
            return Err(e);
        }
    }
    Ok((s, seg.drain_finished()))
}
