//! Defensive decision making from learned limit points.
//!
//! During the conquest phase each city describes its present situation as a
//! probe case and retrieves the closest prior battles from the success and
//! failure pools. When the failure pool wins, the quantities of the goal
//! network are compared against the values seen in those failures; goals
//! whose current value falls on the losing side of the learned limit point
//! propose the actions that push them the right way.

use std::collections::BTreeSet;
use std::fmt;

use rand::Rng;
use thiserror::Error;

use crate::analogy::{retrieve, GenEntStats, Gpool, Mapping, PoolItemId};
use crate::episodes::Outcome;
use crate::fluents::{numeric_value, FluentStore, QuantityCatalog, WORLD};
use crate::sim::{ActionSpec, CityId, GameState};
use crate::spatial::city_region_symbol;
use crate::symbolic::{value_slot, CaseFacts, Symbol, Term};

#[derive(Debug, Error, PartialEq)]
pub enum DecisionError {
    #[error("limit point needs at least one prior value")]
    EmptyStats,
    #[error("goal refers to unregistered quantity {0}")]
    UnknownQuantity(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Phase {
    Growth,
    Conquest,
}

impl Phase {
    pub fn name(self) -> &'static str {
        match self {
            Phase::Growth => "growth",
            Phase::Conquest => "conquest",
        }
    }
}

/// Conquest begins the first time any invader is recorded and never ends.
pub fn game_phase(store: &FluentStore) -> Phase {
    if store.ever_positive(&Symbol::new("invaderCount"), &Symbol::new(WORLD)) {
        Phase::Conquest
    } else {
        Phase::Growth
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Direction {
    Maximize,
    Minimize,
}

/// Whether `current` lies on the failing side of the values seen before.
pub fn limit_point_failure(direction: Direction, current: f64, stats: &GenEntStats) -> Result<bool, DecisionError> {
    if stats.cardinality == 0 {
        return Err(DecisionError::EmptyStats);
    }
    Ok(match direction {
        Direction::Maximize => current <= stats.maximum,
        Direction::Minimize => current >= stats.minimum,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GoalKind {
    /// Holds once the city has walls.
    AchieveWalls,
    Quantity {
        quantity: Symbol,
        functor: Symbol,
        direction: Direction,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Goal {
    pub name: &'static str,
    pub kind: GoalKind,
    /// Actions that move the goal in the desired direction.
    pub influences: BTreeSet<ActionSpec>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoalNetwork {
    pub root: &'static str,
    pub goals: Vec<Goal>,
}

impl GoalNetwork {
    /// City defense: walls, as many defenders and as few attackers as
    /// possible.
    pub fn city_defense(catalog: &QuantityCatalog) -> Result<Self, DecisionError> {
        let quantity = |name: &str, direction| {
            let def = catalog.get(name).ok_or_else(|| DecisionError::UnknownQuantity(name.to_string()))?;
            Ok::<_, DecisionError>(GoalKind::Quantity {
                quantity: def.name.clone(),
                functor: def.functor.clone(),
                direction,
            })
        };
        Ok(GoalNetwork {
            root: "MaximizeCityMilitarySystem",
            goals: vec![
                Goal {
                    name: "AchieveCityWalls",
                    kind: GoalKind::AchieveWalls,
                    influences: BTreeSet::from([ActionSpec::BuildWalls]),
                },
                Goal {
                    name: "MaxDefenders",
                    kind: quantity("milUnits", Direction::Maximize)?,
                    influences: BTreeSet::from([ActionSpec::BuildDefender, ActionSpec::BuildEliteDefender]),
                },
                Goal {
                    name: "MinAttackers",
                    kind: quantity("BattleOpposingUnitCardinality", Direction::Minimize)?,
                    influences: BTreeSet::from([ActionSpec::BuildAttacker]),
                },
            ],
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Prediction {
    WinOrUnknown,
    Lose,
}

impl Prediction {
    pub fn name(self) -> &'static str {
        match self {
            Prediction::WinOrUnknown => "win-or-unknown",
            Prediction::Lose => "lose",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Assessment {
    pub predicted: Prediction,
    pub success_score: f64,
    pub failure_score: f64,
    /// The failure-pool retrieval, present when the prediction is `Lose`.
    pub mapping: Option<(PoolItemId, Mapping)>,
    pub matched_pool: Option<Outcome>,
}

/// Compares a probe against both pools. Only a strictly better failure
/// match predicts a loss.
pub fn assess_probe(probe: &CaseFacts, success: &Gpool, failure: &Gpool) -> Assessment {
    let s = retrieve(probe, success);
    let f = retrieve(probe, failure);
    let success_score = s.as_ref().map_or(0.0, |(_, m)| m.normalized_score);
    let failure_score = f.as_ref().map_or(0.0, |(_, m)| m.normalized_score);
    if failure_score > success_score {
        Assessment {
            predicted: Prediction::Lose,
            success_score,
            failure_score,
            mapping: f,
            matched_pool: Some(Outcome::Failure),
        }
    } else {
        Assessment {
            predicted: Prediction::WinOrUnknown,
            success_score,
            failure_score,
            mapping: None,
            matched_pool: s.map(|_| Outcome::Success),
        }
    }
}

/// The probe's `(holdsIn (StartFn _) (valueOf (functor city) v))` fact.
fn start_fact<'a>(probe: &'a CaseFacts, functor: &Symbol, entity: &Symbol) -> Option<&'a Term> {
    probe.iter().find(|f| {
        f.functor().is_some_and(|s| s.as_str() == "holdsIn")
            && f.args().len() == 2
            && f.args()[0].functor().is_some_and(|s| s.as_str() == "StartFn")
            && value_slot(&f.args()[1]).is_some()
            && f.args()[1].args().first().is_some_and(|q| {
                q.functor() == Some(functor) && q.args().first().and_then(Term::as_symbol) == Some(entity)
            })
    })
}

/// Goals failing in the light of the retrieved failure item. Quantity goals
/// whose probe fact has no counterpart are skipped.
pub fn unsatisfied_goals<'n>(
    net: &'n GoalNetwork,
    city: CityId,
    probe: &CaseFacts,
    item: PoolItemId,
    mapping: &Mapping,
    pool: &Gpool,
    state: &GameState,
) -> Result<Vec<&'n Goal>, DecisionError> {
    let region = city_region_symbol(city);
    let mut failed = Vec::new();
    for goal in &net.goals {
        match &goal.kind {
            GoalKind::AchieveWalls => {
                if !state.cities.get(&city).is_some_and(|c| c.walls) {
                    failed.push(goal);
                }
            }
            GoalKind::Quantity { functor, direction, .. } => {
                let Some(fact) = start_fact(probe, functor, &region) else { continue };
                let Some(current) = value_slot(&fact.args()[1]).and_then(numeric_value) else { continue };
                let Some(prior) = mapping.base_of(fact) else { continue };
                let Some(stats) = pool.value_stats(item, prior) else { continue };
                if limit_point_failure(*direction, current, &stats)? {
                    failed.push(goal);
                }
            }
        }
    }
    Ok(failed)
}

/// Economy first, then one defender, then nothing.
pub fn default_policy(city: CityId, state: &GameState) -> ActionSpec {
    let Ok(legal) = state.legal_city_actions(city) else { return ActionSpec::NoOp };
    let c = &state.cities[&city];
    let wanted = if !c.economy {
        ActionSpec::BuildEconomy
    } else if state.garrison(city).is_empty() {
        ActionSpec::BuildDefender
    } else {
        ActionSpec::NoOp
    };
    if legal.contains(&wanted) {
        wanted
    } else {
        ActionSpec::NoOp
    }
}

/// Uniform draw over the legal actions influencing any failed goal; `None`
/// when there are none.
pub fn propose_action(failed: &[&Goal], legal: &BTreeSet<ActionSpec>, rng: &mut impl Rng) -> Option<ActionSpec> {
    let options: Vec<ActionSpec> = failed
        .iter()
        .flat_map(|g| g.influences.iter().copied())
        .filter(|a| *a != ActionSpec::NoOp && legal.contains(a))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if options.is_empty() {
        None
    } else {
        Some(options[rng.gen_range(0..options.len())])
    }
}

/// One row of the decision log.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionRecord {
    pub turn: u32,
    pub city: CityId,
    pub phase: Phase,
    pub predicted: Option<Prediction>,
    pub failed_goals: Vec<&'static str>,
    pub action: ActionSpec,
}

impl DecisionRecord {
    pub const HEADER: [&'static str; 6] = ["turn", "city", "phase", "predicted", "failed-goals", "chosen-action"];

    pub fn row(&self) -> [String; 6] {
        [
            self.turn.to_string(),
            self.city.to_string(),
            self.phase.name().to_string(),
            self.predicted.map_or("none", Prediction::name).to_string(),
            self.failed_goals.join(";"),
            self.action.name().to_string(),
        ]
    }
}

impl fmt::Display for DecisionRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.row().join(","))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analogy::{add_facts, SageParams};
    use crate::episodes::{scenario_state, Mode, Segmenter};
    use crate::sim::{Coord, GameMap, SimConfig, Terrain, UnitKind, INVADER, LEARNER};
    use crate::symbolic::parse_terms;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn stats(v: &[f64]) -> GenEntStats {
        GenEntStats::from_values(v)
    }

    #[test]
    fn limit_points() {
        assert!(limit_point_failure(Direction::Maximize, 1.0, &stats(&[1.0, 0.0, 1.0])).unwrap());
        assert!(!limit_point_failure(Direction::Maximize, 2.0, &stats(&[1.0, 0.0, 1.0])).unwrap());
        assert!(limit_point_failure(Direction::Minimize, 3.0, &stats(&[3.0, 5.0])).unwrap());
        assert!(!limit_point_failure(Direction::Minimize, 2.0, &stats(&[3.0, 5.0])).unwrap());
        assert_eq!(
            limit_point_failure(Direction::Maximize, 0.0, &GenEntStats::default()),
            Err(DecisionError::EmptyStats)
        );
    }

    #[test]
    fn network_references_registered_quantities() {
        let net = GoalNetwork::city_defense(&QuantityCatalog::shipped()).unwrap();
        assert_eq!(net.goals.len(), 3);
        assert!(net.goals.iter().all(|g| !g.influences.is_empty()));
        assert!(GoalNetwork::city_defense(&QuantityCatalog::default()).is_err());
    }

    #[test]
    fn phase_is_sticky() {
        let cfg = SimConfig { waves_enabled: false, ..SimConfig::default() };
        let mut s = GameState::empty(cfg, GameMap::uniform(20, 20, Terrain::Plains), 1);
        let c = s.add_city(LEARNER, Coord::new(10, 10));
        let mut seg = Segmenter::new(Mode::Histories, QuantityCatalog::shipped());
        seg.start(&s).unwrap();
        assert_eq!(game_phase(seg.store()), Phase::Growth);
        s.add_unit(INVADER, UnitKind::Attacker, Coord::new(0, 0), Some(c));
        s.step(&[]).unwrap();
        let ev = s.event_log.last().unwrap().clone();
        seg.on_sim_event(&s, &ev).unwrap();
        assert_eq!(game_phase(seg.store()), Phase::Conquest);
        s.units.retain(|_, u| u.owner != INVADER);
        s.step(&[]).unwrap();
        let ev = s.event_log.last().unwrap().clone();
        seg.on_sim_event(&s, &ev).unwrap();
        assert_eq!(game_phase(seg.store()), Phase::Conquest);
    }

    fn pool(label: Outcome, cases: &[&CaseFacts]) -> Gpool {
        let mut p = Gpool::new(label, SageParams::default());
        for c in cases {
            add_facts(&mut p, c).unwrap();
        }
        p
    }

    #[test]
    fn assessment_branches() {
        let probe = CaseFacts::new(parse_terms("(p a b) (q a)").unwrap());
        let empty_s = pool(Outcome::Success, &[]);
        let empty_f = pool(Outcome::Failure, &[]);
        assert_eq!(assess_probe(&probe, &empty_s, &empty_f).predicted, Prediction::WinOrUnknown);
        let f = pool(Outcome::Failure, &[&probe]);
        let a = assess_probe(&probe, &empty_s, &f);
        assert_eq!(a.predicted, Prediction::Lose);
        assert_eq!(a.failure_score, 1.0);
        let s = pool(Outcome::Success, &[&probe]);
        assert_eq!(assess_probe(&probe, &s, &f).predicted, Prediction::WinOrUnknown);
    }

    const PRIOR: [&str; 3] = [
        "(isa E1 DefensiveEpisodeFailure) (eventParticipant E1 R1) (holdsIn (StartFn E1) (valueOf (milUnits R1) (UnitCount 1)))",
        "(isa E2 DefensiveEpisodeFailure) (eventParticipant E2 R2) (holdsIn (StartFn E2) (valueOf (milUnits R2) (UnitCount 0)))",
        "(isa E3 DefensiveEpisodeFailure) (eventParticipant E3 R3) (holdsIn (StartFn E3) (valueOf (milUnits R3) (UnitCount 1)))",
    ];

    fn failure_pool() -> Gpool {
        let cases: Vec<CaseFacts> = PRIOR.iter().map(|t| CaseFacts::new(parse_terms(t).unwrap())).collect();
        let p = pool(Outcome::Failure, &cases.iter().collect::<Vec<_>>());
        assert_eq!(p.generalizations.len(), 1);
        p
    }

    fn probe_with(defenders: u32) -> CaseFacts {
        CaseFacts::new(
            parse_terms(&format!(
                "(eventParticipant ProbeEvent CityRegion-1) (holdsIn (StartFn ProbeEvent) (valueOf (milUnits CityRegion-1) (UnitCount {defenders})))"
            ))
            .unwrap(),
        )
    }

    #[test]
    fn worked_limit_point_example() {
        let mut s = scenario_state("single-attack").unwrap();
        s.cities.get_mut(&1).unwrap().walls = true;
        let net = GoalNetwork::city_defense(&QuantityCatalog::shipped()).unwrap();
        let fp = failure_pool();
        for (defenders, fails) in [(1, true), (2, false), (0, true)] {
            let probe = probe_with(defenders);
            let (item, m) = retrieve(&probe, &fp).unwrap();
            let failed = unsatisfied_goals(&net, 1, &probe, item, &m, &fp, &s).unwrap();
            let names: Vec<&str> = failed.iter().map(|g| g.name).collect();
            assert_eq!(names.contains(&"MaxDefenders"), fails, "{defenders}: {names:?}");
            assert!(!names.contains(&"AchieveCityWalls"));
            // no attacker fact in the probe: skipped, not failed
            assert!(!names.contains(&"MinAttackers"));
        }
    }

    #[test]
    fn proposals() {
        let net = GoalNetwork::city_defense(&QuantityCatalog::shipped()).unwrap();
        let walls = &net.goals[0];
        let defenders = &net.goals[1];
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let legal = BTreeSet::from([ActionSpec::NoOp, ActionSpec::BuildDefender, ActionSpec::BuildWalls]);
        assert_eq!(propose_action(&[defenders], &legal, &mut rng), Some(ActionSpec::BuildDefender));
        let mut seen = BTreeSet::new();
        for _ in 0..50 {
            seen.insert(propose_action(&[walls, defenders], &legal, &mut rng).unwrap());
        }
        assert_eq!(seen, BTreeSet::from([ActionSpec::BuildDefender, ActionSpec::BuildWalls]));
        assert_eq!(propose_action(&[defenders], &BTreeSet::from([ActionSpec::NoOp]), &mut rng), None);
    }

    #[test]
    fn default_policy_order() {
        let mut s = scenario_state("single-attack").unwrap();
        s.units.clear();
        assert_eq!(default_policy(1, &s), ActionSpec::BuildEconomy);
        s.cities.get_mut(&1).unwrap().economy = true;
        assert_eq!(default_policy(1, &s), ActionSpec::BuildDefender);
        s.add_unit(LEARNER, UnitKind::Defender, Coord::new(10, 10), Some(1));
        assert_eq!(default_policy(1, &s), ActionSpec::NoOp);
        s.units.clear();
        s.cities.get_mut(&1).unwrap().production =
            Some(crate::sim::Production { item: ActionSpec::BuildWalls, progress: 0 });
        assert_eq!(default_policy(1, &s), ActionSpec::NoOp);
    }
}
