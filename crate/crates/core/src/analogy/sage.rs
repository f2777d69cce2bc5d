//! Incremental analogical generalization over labeled pools.

use std::collections::BTreeMap;
use std::fmt;

use super::mac::{content_vector, mac_stage};
use super::sme::{sme_map, value_slot_of_fact, with_value_slot, Mapping};
use super::AnalogyError;
use crate::episodes::{EpisodeCase, Outcome};
use crate::symbolic::{is_genent, substitute_with, CaseFacts, Decimal, Term};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SageParams {
    /// Minimum normalized similarity for merging.
    pub assimilation_threshold: f64,
    /// Minimum fact frequency for taking part in matching.
    pub probability_cutoff: f64,
}

impl Default for SageParams {
    fn default() -> Self {
        SageParams { assimilation_threshold: 0.8, probability_cutoff: 0.2 }
    }
}

/// Running statistics over the values a numeric generalized entity stood for.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GenEntStats {
    pub cardinality: u64,
    pub minimum: f64,
    pub maximum: f64,
    pub mean: f64,
    /// Sum of squared deviations from the mean.
    pub sse: f64,
    pub values: Vec<f64>,
}

impl GenEntStats {
    pub fn from_values(values: &[f64]) -> Self {
        let mut s = GenEntStats::default();
        for &v in values {
            s.push(v);
        }
        s
    }

    /// Welford update.
    pub fn push(&mut self, v: f64) {
        if self.cardinality == 0 {
            self.minimum = v;
            self.maximum = v;
        } else {
            self.minimum = self.minimum.min(v);
            self.maximum = self.maximum.max(v);
        }
        self.cardinality += 1;
        let delta = v - self.mean;
        self.mean += delta / self.cardinality as f64;
        self.sse += delta * (v - self.mean);
        self.values.push(v);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generalization {
    pub id: u32,
    pub case_count: u32,
    /// Lifted fact to the number of merged cases containing it.
    pub facts: BTreeMap<Term, u32>,
    /// Statistics of the numeric generalized entities.
    pub genents: BTreeMap<u32, GenEntStats>,
    pub next_genent: u32,
}

impl Generalization {
    pub fn frequency(&self, fact: &Term) -> f64 {
        self.facts.get(fact).map_or(0.0, |&c| c as f64 / self.case_count as f64)
    }

    /// Facts frequent enough to take part in matching.
    pub fn matching_facts(&self, cutoff: f64) -> CaseFacts {
        self.facts
            .iter()
            .filter(|(_, &c)| c as f64 / self.case_count as f64 >= cutoff)
            .map(|(f, _)| f.clone())
            .collect()
    }

    fn fresh_genent(&mut self) -> Term {
        let t = Term::genent(self.next_genent);
        self.next_genent += 1;
        t
    }

    /// Lifts a fact's numeric value slot into a new generalized entity that
    /// remembers `history`.
    fn lift_value(&mut self, fact: &Term, history: &[f64]) -> Term {
        let mut lifted = None;
        let out = with_value_slot(fact, &mut |v| match v.as_number() {
            Some(_) => {
                let g = Term::genent(self.next_genent);
                lifted = Some(self.next_genent);
                g
            }
            None => v.clone(),
        });
        if let Some(i) = lifted {
            self.next_genent += 1;
            self.genents.insert(i, GenEntStats::from_values(history));
        }
        out
    }

    /// A single case viewed as a generalization of one: value slots lifted,
    /// entities ground. Returns the map from original to lifted facts.
    fn singleton(id: u32, case: &CaseFacts) -> (Generalization, BTreeMap<Term, Term>) {
        let mut g =
            Generalization { id, case_count: 1, facts: BTreeMap::new(), genents: BTreeMap::new(), next_genent: 0 };
        let mut lifted = BTreeMap::new();
        for f in case.iter() {
            let l = match value_slot_of_fact(f).and_then(Term::as_number) {
                Some(v) => g.lift_value(f, &[v]),
                None => f.clone(),
            };
            *g.facts.entry(l.clone()).or_default() += 1;
            lifted.insert(f.clone(), l);
        }
        (g, lifted)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outlier {
    pub id: u32,
    pub facts: CaseFacts,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PoolItemId {
    Generalization(u32),
    Outlier(u32),
}

impl fmt::Display for PoolItemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PoolItemId::Generalization(i) => write!(f, "generalization-{i}"),
            PoolItemId::Outlier(i) => write!(f, "outlier-{i}"),
        }
    }
}

/// Generalizations and outliers for one outcome label.
#[derive(Debug, Clone, PartialEq)]
pub struct Gpool {
    pub label: Outcome,
    pub params: SageParams,
    pub generalizations: Vec<Generalization>,
    pub outliers: Vec<Outlier>,
    pub next_id: u32,
}

/// What `sage_add` did with a case.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SageAction {
    Outlier(u32),
    Assimilated(u32),
    NewGeneralization(u32),
}

impl Gpool {
    pub fn new(label: Outcome, params: SageParams) -> Self {
        Gpool { label, params, generalizations: Vec::new(), outliers: Vec::new(), next_id: 0 }
    }

    pub fn is_empty(&self) -> bool {
        self.generalizations.is_empty() && self.outliers.is_empty()
    }

    pub fn generalization(&self, id: u32) -> Option<&Generalization> {
        self.generalizations.iter().find(|g| g.id == id)
    }

    pub fn outlier(&self, id: u32) -> Option<&Outlier> {
        self.outliers.iter().find(|o| o.id == id)
    }

    /// Facts of an item as seen by matching.
    pub fn item_facts(&self, id: PoolItemId) -> Option<CaseFacts> {
        match id {
            PoolItemId::Generalization(i) => {
                self.generalization(i).map(|g| g.matching_facts(self.params.probability_cutoff))
            }
            PoolItemId::Outlier(i) => self.outlier(i).map(|o| o.facts.clone()),
        }
    }

    /// Statistics for the value slot of `item_fact` in item `id`. Outlier
    /// values are a history of one.
    pub fn value_stats(&self, id: PoolItemId, item_fact: &Term) -> Option<GenEntStats> {
        let slot = value_slot_of_fact(item_fact)?;
        match id {
            PoolItemId::Generalization(i) => {
                let g = self.generalization(i)?;
                g.genents.get(&slot.genent_index()?).cloned()
            }
            PoolItemId::Outlier(_) => slot.as_number().map(|v| GenEntStats::from_values(&[v])),
        }
    }

    fn fresh_id(&mut self) -> u32 {
        let id = self.next_id;
        self.next_id += 1;
        id
    }
}

/// Best structural match for `probe` in the pool: content filtering, then
/// structure mapping of the survivors with each item as base.
pub fn retrieve(probe: &CaseFacts, pool: &Gpool) -> Option<(PoolItemId, Mapping)> {
    let mut items: Vec<(PoolItemId, CaseFacts)> = pool
        .generalizations
        .iter()
        .map(|g| (PoolItemId::Generalization(g.id), g.matching_facts(pool.params.probability_cutoff)))
        .collect();
    items.extend(pool.outliers.iter().map(|o| (PoolItemId::Outlier(o.id), o.facts.clone())));
    let library: Vec<(PoolItemId, _)> = items.iter().map(|(id, f)| (*id, content_vector(f))).collect();
    let survivors = mac_stage(&content_vector(probe), &library);
    let mut best: Option<(PoolItemId, Mapping)> = None;
    for id in survivors {
        let facts = &items.iter().find(|(i, _)| *i == id).expect("library item").1;
        let m = sme_map(facts, probe);
        if best.as_ref().is_none_or(|(_, b)| m.normalized_score > b.normalized_score) {
            best = Some((id, m));
        }
    }
    best.filter(|(_, m)| m.normalized_score > 0.0)
}

/// Merges `case` into `base` along `m` (base side = `base`'s matching
/// facts, target side = `case`).
pub fn merge_into_generalization(m: &Mapping, base: &Generalization, case: &CaseFacts) -> Generalization {
    let mut g = base.clone();
    // ground entities of the generalization that correspond to a differently
    // named entity become generalized entities
    let mut rename: BTreeMap<Term, Term> = BTreeMap::new();
    for (be, te) in &m.entities {
        if !is_genent(be) && be != te {
            let fresh = g.fresh_genent();
            rename.insert(be.clone(), fresh);
        }
    }
    let apply = |t: &Term, map: &BTreeMap<Term, Term>| substitute_with(t, &mut |x| map.get(x).cloned());
    if !rename.is_empty() {
        let mut facts = BTreeMap::new();
        for (f, c) in std::mem::take(&mut g.facts) {
            *facts.entry(apply(&f, &rename)).or_default() += c;
        }
        g.facts = facts;
    }
    for (bf, tf) in &m.facts {
        let key = apply(bf, &rename);
        let v = value_slot_of_fact(tf).and_then(Term::as_number);
        let key = match (value_slot_of_fact(&key).cloned(), v) {
            (Some(slot), Some(v)) => match slot.genent_index() {
                Some(i) => {
                    g.genents.entry(i).or_default().push(v);
                    key
                }
                None => {
                    // a ground value slot; lift it with both values
                    let old = slot.as_number().unwrap_or(v);
                    let count = g.facts.remove(&key).unwrap_or(0);
                    let lifted = g.lift_value(&key, &[old, v]);
                    g.facts.insert(lifted.clone(), count);
                    lifted
                }
            },
            _ => key,
        };
        *g.facts.entry(key).or_default() += 1;
    }
    let inverse: BTreeMap<Term, Term> =
        m.entities.iter().map(|(b, t)| (t.clone(), rename.get(b).cloned().unwrap_or_else(|| b.clone()))).collect();
    for f in case.iter() {
        if m.base_of(f).is_some() {
            continue;
        }
        let translated = apply(f, &inverse);
        let fact = match value_slot_of_fact(&translated).and_then(Term::as_number) {
            Some(v) => g.lift_value(&translated, &[v]),
            None => translated,
        };
        *g.facts.entry(fact).or_default() += 1;
    }
    g.case_count += 1;
    g
}

/// Adds a labeled case to the pool, merging it when a similar enough item
/// exists and keeping it as an outlier otherwise.
pub fn sage_add(pool: &mut Gpool, case: &EpisodeCase) -> Result<SageAction, AnalogyError> {
    if case.outcome != Some(pool.label) {
        return Err(AnalogyError::LabelMismatch {
            case: case.outcome.map_or("none", Outcome::name).to_string(),
            pool: pool.label.name().to_string(),
        });
    }
    add_facts(pool, &case.facts)
}

/// Unlabeled variant of [`sage_add`].
pub fn add_facts(pool: &mut Gpool, facts: &CaseFacts) -> Result<SageAction, AnalogyError> {
    let hit = retrieve(facts, pool).filter(|(_, m)| m.normalized_score >= pool.params.assimilation_threshold);
    Ok(match hit {
        None => {
            let id = pool.fresh_id();
            pool.outliers.push(Outlier { id, facts: facts.clone() });
            SageAction::Outlier(id)
        }
        Some((PoolItemId::Generalization(gid), m)) => {
            let pos = pool.generalizations.iter().position(|g| g.id == gid).expect("retrieved generalization");
            pool.generalizations[pos] = merge_into_generalization(&m, &pool.generalizations[pos], facts);
            SageAction::Assimilated(gid)
        }
        Some((PoolItemId::Outlier(oid), m)) => {
            let pos = pool.outliers.iter().position(|o| o.id == oid).expect("retrieved outlier");
            let outlier = pool.outliers.remove(pos);
            let id = pool.fresh_id();
            let (single, lifted) = Generalization::singleton(id, &outlier.facts);
            let m = Mapping { facts: m.facts.iter().map(|(b, t)| (lifted[b].clone(), t.clone())).collect(), ..m };
            pool.generalizations.push(merge_into_generalization(&m, &single, facts));
            SageAction::NewGeneralization(id)
        }
    })
}

pub fn genent_stats(g: &Generalization, index: u32) -> Result<&GenEntStats, AnalogyError> {
    g.genents.get(&index).ok_or(AnalogyError::UnknownGenEnt(index))
}

impl GenEntStats {
    pub fn as_terms(&self) -> Vec<Term> {
        self.values.iter().map(|&v| Term::Dec(Decimal::new(v).expect("finite"))).collect()
    }
}
