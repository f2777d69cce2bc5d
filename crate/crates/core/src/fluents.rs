//! Fluent recording and qualitative intervals.
//!
//! Quantities are declared as s-expression triples, sampled at each
//! significant timepoint, and encoded qualitatively. Each change of encoding
//! closes the running interval for that (quantity, entity, scheme) key and
//! opens the next one, so every key's timeline is a chain of meeting
//! intervals.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use thiserror::Error;

use crate::sim::{GameState, Timepoint, INVADER};
use crate::spatial::{city_region_symbol, FootprintFrame};
use crate::symbolic::{parse_terms, ParseError, Symbol, Term};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FluentError {
    #[error("quantity {0} already registered")]
    DuplicateQuantity(Symbol),
    #[error("quantity {0} has no encodings")]
    NoEncodings(Symbol),
    #[error("timepoint {t} is not after the last sample {last}")]
    NonMonotone { t: Timepoint, last: Timepoint },
    #[error("negative cardinality {value} for {quantity}")]
    NegativeCardinality { quantity: Symbol, value: f64 },
    #[error("improper interval")]
    ImproperInterval,
    #[error("unknown event {0}")]
    UnknownEvent(Symbol),
    #[error("event {0} is closed")]
    EventClosed(Symbol),
    #[error("quantity definitions: {0}")]
    Definition(String),
    #[error(transparent)]
    Parse(#[from] ParseError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Scheme {
    DerivativeSign,
    MagnitudeSign,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::DerivativeSign => "DerivativeSignEncoding",
            Scheme::MagnitudeSign => "MagnitudeSignEncoding",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "DerivativeSignEncoding" => Some(Scheme::DerivativeSign),
            "MagnitudeSignEncoding" => Some(Scheme::MagnitudeSign),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EncodingValue {
    Increasing,
    Constant,
    Decreasing,
    /// Magnitude zero.
    None,
    /// Magnitude positive.
    Some,
}

impl EncodingValue {
    /// Predicate of the change statement describing an interval.
    pub fn change_predicate(self) -> &'static str {
        match self {
            EncodingValue::Increasing => "increasingIn",
            EncodingValue::Constant => "constantIn",
            EncodingValue::Decreasing => "monotonicallyNonIncreasingIn",
            EncodingValue::None => "absentIn",
            EncodingValue::Some => "presentIn",
        }
    }
}

pub fn encode_derivative_sign(prev: f64, curr: f64) -> EncodingValue {
    match curr.partial_cmp(&prev) {
        Some(std::cmp::Ordering::Greater) => EncodingValue::Increasing,
        Some(std::cmp::Ordering::Less) => EncodingValue::Decreasing,
        _ => EncodingValue::Constant,
    }
}

pub fn encode_magnitude_sign(curr: f64) -> Result<EncodingValue, FluentError> {
    if curr < 0.0 {
        return Err(FluentError::NegativeCardinality { quantity: Symbol::new("cardinality"), value: curr });
    }
    Ok(if curr == 0.0 { EncodingValue::None } else { EncodingValue::Some })
}

/// Which entities a quantity is recorded for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EntitySelector {
    LearnerCities,
    UnitGroups,
    Global,
}

impl EntitySelector {
    fn from_name(s: &str) -> Option<Self> {
        match s {
            "LearnerCity" => Some(Self::LearnerCities),
            "UnitGroupFootprint" => Some(Self::UnitGroups),
            "World" => Some(Self::Global),
            _ => None,
        }
    }
}

/// Named measurement functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ValueFn {
    /// Invader units in groups connected to the city footprint.
    LocalOpposingUnits,
    /// Learner military units on the city tile.
    Garrison,
    RegionSize,
    InvaderCount,
    CityCount,
}

impl ValueFn {
    fn from_name(s: &str) -> Option<Self> {
        match s {
            "LocalOpposingUnits" => Some(Self::LocalOpposingUnits),
            "Garrison" => Some(Self::Garrison),
            "RegionSize" => Some(Self::RegionSize),
            "InvaderCount" => Some(Self::InvaderCount),
            "CityCount" => Some(Self::CityCount),
            _ => None,
        }
    }
}

pub const WORLD: &str = "World";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuantityDef {
    pub name: Symbol,
    /// Functor of the quantity expression in facts, e.g. `Attackers` in
    /// `(Attackers CityRegion-1)`.
    pub functor: Symbol,
    pub selector: EntitySelector,
    pub value_fn: ValueFn,
    /// Typed value wrapper such as `UnitCount`; bare integers when absent.
    pub wrapper: Option<Symbol>,
    pub encodings: BTreeSet<Scheme>,
}

impl QuantityDef {
    pub fn quantity_term(&self, entity: &Symbol) -> Term {
        Term::Compound(self.functor.clone(), vec![Term::Symbol(entity.clone())].into())
    }

    pub fn value_term(&self, v: i64) -> Term {
        match &self.wrapper {
            Some(w) => Term::Compound(w.clone(), vec![Term::Int(v)].into()),
            None => Term::Int(v),
        }
    }

    /// Evaluates the quantity for every selected entity.
    pub fn evaluate(&self, state: &GameState, frame: &FootprintFrame) -> Vec<(Symbol, i64)> {
        match self.selector {
            EntitySelector::LearnerCities => state
                .learner_cities()
                .map(|c| {
                    let v = match self.value_fn {
                        ValueFn::LocalOpposingUnits => {
                            frame.local_groups(c.id).iter().map(|g| g.constituents.len() as i64).sum()
                        }
                        ValueFn::Garrison => state.garrison(c.id).len() as i64,
                        _ => self.global_value(state),
                    };
                    (city_region_symbol(c.id), v)
                })
                .collect(),
            EntitySelector::UnitGroups => frame
                .groups
                .iter()
                .map(|g| {
                    let v = match self.value_fn {
                        ValueFn::RegionSize => g.size() as i64,
                        ValueFn::LocalOpposingUnits => g.constituents.len() as i64,
                        _ => self.global_value(state),
                    };
                    (g.id.clone(), v)
                })
                .collect(),
            EntitySelector::Global => vec![(Symbol::new(WORLD), self.global_value(state))],
        }
    }

    fn global_value(&self, state: &GameState) -> i64 {
        match self.value_fn {
            ValueFn::InvaderCount => state.units.values().filter(|u| u.owner == INVADER).count() as i64,
            ValueFn::CityCount => state.learner_cities().count() as i64,
            _ => 0,
        }
    }
}

/// Shipped quantity definitions.
pub const DEFAULT_QUANTITIES: &str = r#"
; cardinality of opposing units local to each of the player's cities
(quantityName BattleOpposingUnitCardinality (MeasurableQuantityFn Attackers LearnerCity))
(quantityValueFn BattleOpposingUnitCardinality LocalOpposingUnits)
(quantityEncodingSchemeFor BattleOpposingUnitCardinality DerivativeSignEncoding)
(quantityEncodingSchemeFor BattleOpposingUnitCardinality MagnitudeSignEncoding)

; defenders stationed in each city
(quantityName milUnits (MeasurableQuantityFn milUnits LearnerCity))
(quantityValueFn milUnits Garrison UnitCount)
(quantityEncodingSchemeFor milUnits DerivativeSignEncoding)
(quantityEncodingSchemeFor milUnits MagnitudeSignEncoding)

(quantityName regionSize (MeasurableQuantityFn regionSize UnitGroupFootprint))
(quantityValueFn regionSize RegionSize TileCount)
(quantityEncodingSchemeFor regionSize DerivativeSignEncoding)

(quantityName invaderCount (MeasurableQuantityFn invaderCount World))
(quantityValueFn invaderCount InvaderCount UnitCount)
(quantityEncodingSchemeFor invaderCount DerivativeSignEncoding)
(quantityEncodingSchemeFor invaderCount MagnitudeSignEncoding)

(quantityName cityCount (MeasurableQuantityFn cityCount World))
(quantityValueFn cityCount CityCount UnitCount)
(quantityEncodingSchemeFor cityCount DerivativeSignEncoding)

; which intervals bound the history of each kind of participant
(quantityEncodingForRegion regionSize DerivativeSignEncoding UnitGroupFootprint)
(quantityEncodingForRegion BattleOpposingUnitCardinality MagnitudeSignEncoding CityFootprint)
(quantityEncodingForRegion BattleOpposingUnitCardinality DerivativeSignEncoding CityFootprint)
(quantityEncodingForRegion milUnits DerivativeSignEncoding CityFootprint)
"#;

/// Parsed quantity definitions plus the participant-history table.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct QuantityCatalog {
    pub quantities: Vec<QuantityDef>,
    /// (quantity, scheme, footprint collection) triples.
    pub region_encodings: Vec<(Symbol, Scheme, Symbol)>,
}

/// Functor, selector, value function with wrapper, and encodings gathered so
/// far for one quantity name.
type PartialDef = (Symbol, EntitySelector, Option<(ValueFn, Option<Symbol>)>, BTreeSet<Scheme>);

impl QuantityCatalog {
    pub fn shipped() -> Self {
        Self::parse(DEFAULT_QUANTITIES).expect("shipped quantity definitions parse")
    }

    pub fn parse(text: &str) -> Result<Self, FluentError> {
        let bad = |t: &Term| FluentError::Definition(format!("unrecognized statement {t}"));
        let mut order: Vec<Symbol> = Vec::new();
        let mut partial: BTreeMap<Symbol, PartialDef> = BTreeMap::new();
        let mut region_encodings = Vec::new();
        for t in parse_terms(text)? {
            let f = t.functor().map(Symbol::as_str).unwrap_or("");
            let args = t.args();
            let sym = |i: usize| args.get(i).and_then(Term::as_symbol).cloned().ok_or_else(|| bad(&t));
            match f {
                "quantityName" => {
                    let name = sym(0)?;
                    let spec = args.get(1).ok_or_else(|| bad(&t))?;
                    if spec.functor().map(Symbol::as_str) != Some("MeasurableQuantityFn") {
                        return Err(bad(&t));
                    }
                    let functor = spec.args().first().and_then(Term::as_symbol).cloned().ok_or_else(|| bad(&t))?;
                    let selector = spec
                        .args()
                        .get(1)
                        .and_then(Term::as_symbol)
                        .and_then(|s| EntitySelector::from_name(s.as_str()))
                        .ok_or_else(|| bad(&t))?;
                    if partial.contains_key(&name) {
                        return Err(FluentError::DuplicateQuantity(name));
                    }
                    order.push(name.clone());
                    partial.insert(name, (functor, selector, None, BTreeSet::new()));
                }
                "quantityValueFn" => {
                    let name = sym(0)?;
                    let vf = ValueFn::from_name(sym(1)?.as_str()).ok_or_else(|| bad(&t))?;
                    let wrapper = args.get(2).and_then(Term::as_symbol).cloned();
                    partial.get_mut(&name).ok_or_else(|| bad(&t))?.2 = Some((vf, wrapper));
                }
                "quantityEncodingSchemeFor" => {
                    let name = sym(0)?;
                    let scheme = Scheme::from_name(sym(1)?.as_str()).ok_or_else(|| bad(&t))?;
                    partial.get_mut(&name).ok_or_else(|| bad(&t))?.3.insert(scheme);
                }
                "quantityEncodingForRegion" => {
                    let scheme = Scheme::from_name(sym(1)?.as_str()).ok_or_else(|| bad(&t))?;
                    region_encodings.push((sym(0)?, scheme, sym(2)?));
                }
                _ => return Err(bad(&t)),
            }
        }
        let mut quantities = Vec::new();
        for name in order {
            let (functor, selector, vf, encodings) = partial.remove(&name).expect("ordered");
            let (value_fn, wrapper) =
                vf.ok_or_else(|| FluentError::Definition(format!("quantity {name} has no value function")))?;
            if encodings.is_empty() {
                return Err(FluentError::NoEncodings(name));
            }
            quantities.push(QuantityDef { name, functor, selector, value_fn, wrapper, encodings });
        }
        Ok(QuantityCatalog { quantities, region_encodings })
    }

    pub fn get(&self, name: &str) -> Option<&QuantityDef> {
        self.quantities.iter().find(|q| q.name.as_str() == name)
    }

    /// Interval keys forming the history of a participant of `collection`.
    pub fn history_keys(&self, collection: &str, entity: &Symbol) -> Vec<IntervalKey> {
        self.region_encodings
            .iter()
            .filter(|(_, _, c)| c.as_str() == collection)
            .map(|(q, s, _)| IntervalKey { quantity: q.clone(), entity: entity.clone(), scheme: *s })
            .collect()
    }

    /// Quantities recorded for participants of `collection`.
    pub fn participant_quantities(&self, collection: &str) -> Vec<&QuantityDef> {
        let selector = match collection {
            "CityFootprint" => EntitySelector::LearnerCities,
            "UnitGroupFootprint" => EntitySelector::UnitGroups,
            _ => return Vec::new(),
        };
        self.quantities.iter().filter(|q| q.selector == selector).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct IntervalKey {
    pub quantity: Symbol,
    pub entity: Symbol,
    pub scheme: Scheme,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QualInterval {
    pub id: Symbol,
    pub key: IntervalKey,
    pub value: EncodingValue,
    pub start: Timepoint,
    /// `None` while open.
    pub end: Option<Timepoint>,
}

/// Open interval ends resolve to this point when relations are computed at
/// `now`: after every sample of the current turn.
pub fn horizon(now: Timepoint) -> Timepoint {
    Timepoint::new(now.turn, u32::MAX)
}

impl QualInterval {
    pub fn bounds(&self, now: Timepoint) -> (Timepoint, Timepoint) {
        (self.start, self.end.unwrap_or_else(|| horizon(now)))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodingChange {
    pub key: IntervalKey,
    pub from: EncodingValue,
    pub to: EncodingValue,
    pub at: Timepoint,
    pub closed: Symbol,
    pub opened: Symbol,
}

#[derive(Debug, Clone, Default)]
struct EventRecord {
    participants: BTreeSet<Symbol>,
    open: bool,
}

/// Fluent histories, qualitative intervals and event participation.
#[derive(Debug, Clone, Default)]
pub struct FluentStore {
    catalog: QuantityCatalog,
    /// newest sample first
    fluents: BTreeMap<(Symbol, Symbol), VecDeque<(Timepoint, Term)>>,
    intervals: BTreeMap<IntervalKey, Vec<QualInterval>>,
    events: BTreeMap<Symbol, EventRecord>,
    last: Option<Timepoint>,
    next_interval: u32,
}

impl FluentStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_catalog(catalog: QuantityCatalog) -> Self {
        FluentStore { catalog, ..Self::default() }
    }

    pub fn catalog(&self) -> &QuantityCatalog {
        &self.catalog
    }

    pub fn register_quantity(&mut self, def: QuantityDef) -> Result<(), FluentError> {
        if self.catalog.get(def.name.as_str()).is_some() {
            return Err(FluentError::DuplicateQuantity(def.name));
        }
        if def.encodings.is_empty() {
            return Err(FluentError::NoEncodings(def.name));
        }
        self.catalog.quantities.push(def);
        Ok(())
    }

    pub fn last_sample(&self) -> Option<Timepoint> {
        self.last
    }

    fn fresh_interval(&mut self) -> Symbol {
        self.next_interval += 1;
        Symbol::new(format!("Interval-{}", self.next_interval))
    }

    /// Records one raw observation and updates the key's intervals. Returns
    /// the encoding changes it caused.
    pub fn record(
        &mut self,
        def: &QuantityDef,
        entity: &Symbol,
        value: i64,
        t: Timepoint,
    ) -> Result<Vec<EncodingChange>, FluentError> {
        let series = self.fluents.entry((def.name.clone(), entity.clone())).or_default();
        let prev = series.front().and_then(|(_, v)| numeric_value(v));
        series.push_front((t, def.value_term(value)));
        let mut changes = Vec::new();
        for &scheme in &def.encodings {
            let enc = match scheme {
                Scheme::DerivativeSign => {
                    prev.map_or(EncodingValue::Constant, |p| encode_derivative_sign(p, value as f64))
                }
                Scheme::MagnitudeSign => encode_magnitude_sign(value as f64).map_err(|_| {
                    FluentError::NegativeCardinality { quantity: def.name.clone(), value: value as f64 }
                })?,
            };
            let key = IntervalKey { quantity: def.name.clone(), entity: entity.clone(), scheme };
            let open = self
                .intervals
                .get(&key)
                .and_then(|v| v.last())
                .filter(|i| i.end.is_none())
                .map(|i| (i.id.clone(), i.value));
            match open {
                Some((_, v)) if v == enc => {}
                Some((closed, from)) => {
                    let opened = self.fresh_interval();
                    let list = self.intervals.get_mut(&key).expect("open interval");
                    list.last_mut().expect("open").end = Some(t);
                    list.push(QualInterval { id: opened.clone(), key: key.clone(), value: enc, start: t, end: None });
                    changes.push(EncodingChange { key, from, to: enc, at: t, closed, opened });
                }
                None => {
                    let opened = self.fresh_interval();
                    self.intervals.entry(key.clone()).or_default().push(QualInterval {
                        id: opened,
                        key,
                        value: enc,
                        start: t,
                        end: None,
                    });
                }
            }
        }
        Ok(changes)
    }

    /// Samples every registered quantity at `t`.
    pub fn sample_all(
        &mut self,
        state: &GameState,
        t: Timepoint,
        frame: &FootprintFrame,
    ) -> Result<Vec<EncodingChange>, FluentError> {
        if let Some(last) = self.last {
            if t <= last {
                return Err(FluentError::NonMonotone { t, last });
            }
        }
        let mut changes = Vec::new();
        let defs = self.catalog.quantities.clone();
        let mut seen: BTreeSet<(Symbol, Symbol)> = BTreeSet::new();
        for def in &defs {
            for (entity, value) in def.evaluate(state, frame) {
                changes.extend(self.record(def, &entity, value, t)?);
                seen.insert((def.name.clone(), entity));
            }
        }
        // entities that left the extension end their running intervals
        for (key, list) in self.intervals.iter_mut() {
            if let Some(last) = list.last_mut() {
                if last.end.is_none() && !seen.contains(&(key.quantity.clone(), key.entity.clone())) {
                    last.end = Some(t);
                }
            }
        }
        self.last = Some(t);
        Ok(changes)
    }

    pub fn intervals(&self, key: &IntervalKey) -> &[QualInterval] {
        self.intervals.get(key).map_or(&[], Vec::as_slice)
    }

    pub fn all_intervals(&self) -> impl Iterator<Item = &QualInterval> {
        self.intervals.values().flatten()
    }

    /// Newest-first samples of one fluent.
    pub fn series(&self, quantity: &Symbol, entity: &Symbol) -> impl Iterator<Item = &(Timepoint, Term)> {
        self.fluents.get(&(quantity.clone(), entity.clone())).into_iter().flatten()
    }

    /// Latest value sampled at or before `t`.
    pub fn value_at(&self, quantity: &Symbol, entity: &Symbol, t: Timepoint) -> Option<&Term> {
        self.series(quantity, entity).find(|(ts, _)| *ts <= t).map(|(_, v)| v)
    }

    pub fn latest(&self, quantity: &Symbol, entity: &Symbol) -> Option<&Term> {
        self.series(quantity, entity).next().map(|(_, v)| v)
    }

    /// Whether the quantity has ever been positive for `entity`.
    pub fn ever_positive(&self, quantity: &Symbol, entity: &Symbol) -> bool {
        self.series(quantity, entity).any(|(_, v)| numeric_value(v).is_some_and(|x| x > 0.0))
    }

    pub fn open_event(&mut self, event: Symbol) {
        self.events.insert(event, EventRecord { participants: BTreeSet::new(), open: true });
    }

    pub fn close_event(&mut self, event: &Symbol) -> Result<(), FluentError> {
        let rec = self.events.get_mut(event).ok_or_else(|| FluentError::UnknownEvent(event.clone()))?;
        rec.open = false;
        Ok(())
    }

    pub fn record_participant(&mut self, event: &Symbol, participant: Symbol) -> Result<(), FluentError> {
        let rec = self.events.get_mut(event).ok_or_else(|| FluentError::UnknownEvent(event.clone()))?;
        if !rec.open {
            return Err(FluentError::EventClosed(event.clone()));
        }
        rec.participants.insert(participant);
        Ok(())
    }

    pub fn participants(&self, event: &Symbol) -> Result<&BTreeSet<Symbol>, FluentError> {
        self.events.get(event).map(|r| &r.participants).ok_or_else(|| FluentError::UnknownEvent(event.clone()))
    }

    /// `(eventParticipant E p)` facts for one event.
    pub fn participant_facts(&self, event: &Symbol) -> Result<Vec<Term>, FluentError> {
        Ok(self
            .participants(event)?
            .iter()
            .map(|p| Term::app("eventParticipant", vec![Term::Symbol(event.clone()), Term::Symbol(p.clone())]))
            .collect())
    }
}

/// Numeric content of a bare or wrapped value term.
pub fn numeric_value(v: &Term) -> Option<f64> {
    v.as_number().or_else(|| match v.args() {
        [inner] => inner.as_number(),
        _ => None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AllenRelation {
    Precedes,
    PrecededBy,
    Meets,
    MetBy,
    Overlaps,
    OverlappedBy,
    Starts,
    StartedBy,
    During,
    Contains,
    Finishes,
    FinishedBy,
    Equals,
}

impl AllenRelation {
    pub const ALL: [AllenRelation; 13] = [
        AllenRelation::Precedes,
        AllenRelation::PrecededBy,
        AllenRelation::Meets,
        AllenRelation::MetBy,
        AllenRelation::Overlaps,
        AllenRelation::OverlappedBy,
        AllenRelation::Starts,
        AllenRelation::StartedBy,
        AllenRelation::During,
        AllenRelation::Contains,
        AllenRelation::Finishes,
        AllenRelation::FinishedBy,
        AllenRelation::Equals,
    ];

    pub fn converse(self) -> Self {
        use AllenRelation::*;
        match self {
            Precedes => PrecededBy,
            PrecededBy => Precedes,
            Meets => MetBy,
            MetBy => Meets,
            Overlaps => OverlappedBy,
            OverlappedBy => Overlaps,
            Starts => StartedBy,
            StartedBy => Starts,
            During => Contains,
            Contains => During,
            Finishes => FinishedBy,
            FinishedBy => Finishes,
            Equals => Equals,
        }
    }

    /// Predicate name used in case facts, e.g. `aia-overlappedBy`.
    pub fn predicate(self) -> &'static str {
        use AllenRelation::*;
        match self {
            Precedes => "aia-precedes",
            PrecededBy => "aia-precededBy",
            Meets => "aia-meets",
            MetBy => "aia-metBy",
            Overlaps => "aia-overlaps",
            OverlappedBy => "aia-overlappedBy",
            Starts => "aia-starts",
            StartedBy => "aia-startedBy",
            During => "aia-during",
            Contains => "aia-contains",
            Finishes => "aia-finishes",
            FinishedBy => "aia-finishedBy",
            Equals => "aia-equals",
        }
    }
}

impl fmt::Display for AllenRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.predicate())
    }
}

/// Allen relation of `a` with respect to `b`. Both must be proper.
pub fn allen_relation<T: Ord>(a: (T, T), b: (T, T)) -> Result<AllenRelation, FluentError> {
    use std::cmp::Ordering::*;
    use AllenRelation::*;
    let ((s1, e1), (s2, e2)) = (a, b);
    if s1 >= e1 || s2 >= e2 {
        return Err(FluentError::ImproperInterval);
    }
    Ok(if e1 < s2 {
        Precedes
    } else if e2 < s1 {
        PrecededBy
    } else if e1 == s2 {
        Meets
    } else if e2 == s1 {
        MetBy
    } else {
        match (s1.cmp(&s2), e1.cmp(&e2)) {
            (Equal, Equal) => Equals,
            (Equal, Less) => Starts,
            (Equal, Greater) => StartedBy,
            (Greater, Equal) => Finishes,
            (Less, Equal) => FinishedBy,
            (Greater, Less) => During,
            (Less, Greater) => Contains,
            (Less, Less) => Overlaps,
            (Greater, Greater) => OverlappedBy,
        }
    })
}

/// Intervals are temporally local unless one wholly precedes the other.
pub fn temporally_local<T: Ord>(a: (T, T), b: (T, T)) -> Result<bool, FluentError> {
    Ok(!matches!(allen_relation(a, b)?, AllenRelation::Precedes | AllenRelation::PrecededBy))
}
