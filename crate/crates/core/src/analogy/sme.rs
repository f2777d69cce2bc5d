//! Greedy structure mapping.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap, HashMap};

use crate::symbolic::{is_genent, substitute_with, CaseFacts, Term};

/// Base of the per-expression score: an aligned expression of height `h`
/// contributes `ORDER_WEIGHT^h`.
pub const ORDER_WEIGHT: f64 = 1.25;

/// Extra greedy passes seeded from the next-best match hypotheses.
const RESTARTS: usize = 2;

/// Upper bound on accepted swap moves during local improvement.
const MAX_SWAPS: usize = 16;

/// Result of mapping a base case onto a target case.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Mapping {
    /// Base entity to target entity; symbols or generalized entities.
    pub entities: BTreeMap<Term, Term>,
    /// Aligned top-level facts as (base, target), in base order.
    pub facts: Vec<(Term, Term)>,
    pub raw_score: f64,
    pub normalized_score: f64,
    /// Unaligned base facts carried over to the target vocabulary.
    pub candidate_inferences: Vec<Term>,
}

impl Mapping {
    pub fn base_of(&self, target_fact: &Term) -> Option<&Term> {
        self.facts.iter().find(|(_, t)| t == target_fact).map(|(b, _)| b)
    }

    pub fn target_of(&self, base_fact: &Term) -> Option<&Term> {
        self.facts.iter().find(|(b, _)| b == base_fact).map(|(_, t)| t)
    }
}

fn is_value_atom(t: &Term) -> bool {
    t.as_number().is_some() || is_genent(t)
}

/// The numeric value position inside the first `valueOf` statement of a
/// fact, if any.
pub fn value_slot_of_fact(fact: &Term) -> Option<&Term> {
    if let Some(v) = crate::symbolic::value_slot(fact) {
        return Some(v);
    }
    fact.args().iter().find_map(value_slot_of_fact)
}

/// Rebuilds a fact with its value slot replaced by `f(old)`.
pub fn with_value_slot(fact: &Term, f: &mut impl FnMut(&Term) -> Term) -> Term {
    match fact {
        Term::Compound(functor, args) if functor.as_str() == "valueOf" && args.len() == 2 => {
            let v = &args[1];
            let new_v = if is_value_atom(v) {
                f(v)
            } else {
                match v {
                    Term::Compound(w, inner) if inner.len() == 1 && is_value_atom(&inner[0]) => {
                        Term::Compound(w.clone(), vec![f(&inner[0])].into())
                    }
                    _ => v.clone(),
                }
            };
            Term::Compound(functor.clone(), vec![args[0].clone(), new_v].into())
        }
        Term::Compound(functor, args) => {
            let mut done = false;
            let new_args: Vec<Term> = args
                .iter()
                .map(|a| {
                    if done {
                        return a.clone();
                    }
                    let r = with_value_slot(a, f);
                    done = &r != a;
                    r
                })
                .collect();
            Term::Compound(functor.clone(), new_args.into())
        }
        _ => fact.clone(),
    }
}

/// Height of an expression, treating generalized entities as atoms.
fn height(t: &Term) -> u32 {
    if is_genent(t) {
        return 0;
    }
    match t {
        Term::Compound(_, args) => 1 + args.iter().map(height).max().unwrap_or(0),
        _ => 0,
    }
}

/// Score contributed by aligning `fact`: every compound subexpression `e`
/// adds `ORDER_WEIGHT^(height(e) - 1)`, so first-order statements weigh 1
/// and nested structure weighs more.
pub fn fact_weight(fact: &Term) -> f64 {
    if is_genent(fact) {
        return 0.0;
    }
    match fact {
        Term::Compound(_, args) => {
            ORDER_WEIGHT.powi(height(fact) as i32 - 1) + args.iter().map(fact_weight).sum::<f64>()
        }
        _ => 0.0,
    }
}

/// Score of mapping a case onto itself.
pub fn self_score(case: &CaseFacts) -> f64 {
    case.iter().map(fact_weight).sum()
}

struct PFact {
    shape: u32,
    /// Entity leaves in traversal order, as per-side entity indices.
    ents: Vec<u32>,
    weight: f64,
}

struct Prepared<'a> {
    facts: Vec<(&'a Term, PFact)>,
    entities: Vec<Term>,
}

fn prepare<'a>(case: &'a CaseFacts, shapes: &mut HashMap<String, u32>) -> Prepared<'a> {
    let mut index: HashMap<Term, u32> = HashMap::new();
    let mut entities = Vec::new();
    let mut facts = Vec::with_capacity(case.len());
    for f in case.iter() {
        let mut shape = String::new();
        let mut ents = Vec::new();
        describe(f, false, case, &mut shape, &mut |e| {
            let next = entities.len() as u32;
            let id = *index.entry(e.clone()).or_insert_with(|| {
                entities.push(e.clone());
                next
            });
            ents.push(id);
        });
        let n = shapes.len() as u32;
        let shape = *shapes.entry(shape).or_insert(n);
        facts.push((f, PFact { shape, ents, weight: fact_weight(f) }));
    }
    Prepared { facts, entities }
}

/// Writes the entity-abstracted shape of `t` and reports entity leaves.
fn describe(t: &Term, value_slot: bool, case: &CaseFacts, out: &mut String, ent: &mut impl FnMut(&Term)) {
    if is_genent(t) {
        if value_slot {
            out.push_str("#N");
        } else {
            out.push_str("#E");
            ent(t);
        }
        return;
    }
    match t {
        Term::Symbol(s) if case.entities().contains(s) => {
            out.push_str("#E");
            ent(t);
        }
        Term::Int(_) | Term::Dec(_) if value_slot => out.push_str("#N"),
        Term::Compound(functor, args) => {
            out.push('(');
            out.push_str(functor.as_str());
            let valueof = functor.as_str() == "valueOf" && args.len() == 2;
            for (i, a) in args.iter().enumerate() {
                out.push(' ');
                if valueof && i == 1 {
                    match a {
                        Term::Compound(w, inner) if inner.len() == 1 && is_value_atom(&inner[0]) && !is_genent(a) => {
                            out.push('(');
                            out.push_str(w.as_str());
                            out.push(' ');
                            describe(&inner[0], true, case, out, ent);
                            out.push(')');
                        }
                        _ => describe(a, is_value_atom(a), case, out, ent),
                    }
                } else {
                    describe(a, false, case, out, ent);
                }
            }
            out.push(')');
        }
        other => {
            use std::fmt::Write;
            let _ = write!(out, "{other}");
        }
    }
}

struct Hypothesis {
    b: usize,
    t: usize,
    pairs: Vec<(u32, u32)>,
    weight: f64,
}

/// Local consistency of one fact pair: the positional entity pairing must
/// itself be one-to-one.
fn local_pairs(b: &PFact, t: &PFact) -> Option<Vec<(u32, u32)>> {
    let mut pairs: Vec<(u32, u32)> = Vec::with_capacity(b.ents.len());
    for (&x, &y) in b.ents.iter().zip(&t.ents) {
        for &(px, py) in &pairs {
            if (px == x) != (py == y) {
                return None;
            }
        }
        if !pairs.contains(&(x, y)) {
            pairs.push((x, y));
        }
    }
    Some(pairs)
}

/// Whether two hypotheses can both be part of one mapping.
fn compatible(a: &Hypothesis, b: &Hypothesis) -> bool {
    a.b != b.b && a.t != b.t && a.pairs.iter().all(|&(x, y)| b.pairs.iter().all(|&(u, v)| (x == u) == (y == v)))
}

struct Greedy<'h> {
    hyps: &'h [Hypothesis],
    by_pair: &'h HashMap<(u32, u32), Vec<usize>>,
    bmap: Vec<Option<u32>>,
    tmap: Vec<Option<u32>>,
    bused: Vec<bool>,
    tused: Vec<bool>,
    chosen: Vec<usize>,
    score: f64,
}

impl<'h> Greedy<'h> {
    fn new(
        hyps: &'h [Hypothesis],
        by_pair: &'h HashMap<(u32, u32), Vec<usize>>,
        nb: (usize, usize),
        nt: (usize, usize),
    ) -> Self {
        Greedy {
            hyps,
            by_pair,
            bmap: vec![None; nb.1],
            tmap: vec![None; nt.1],
            bused: vec![false; nb.0],
            tused: vec![false; nt.0],
            chosen: Vec::new(),
            score: 0.0,
        }
    }

    fn consistent(&self, h: &Hypothesis) -> bool {
        !self.bused[h.b]
            && !self.tused[h.t]
            && h.pairs.iter().all(|&(x, y)| {
                self.bmap[x as usize].is_none_or(|m| m == y) && self.tmap[y as usize].is_none_or(|m| m == x)
            })
    }

    /// Commits `i` and returns the entity pairs it newly bound.
    fn commit(&mut self, i: usize) -> Vec<(u32, u32)> {
        let h = &self.hyps[i];
        self.bused[h.b] = true;
        self.tused[h.t] = true;
        self.chosen.push(i);
        self.score += h.weight;
        let mut fresh = Vec::new();
        for &(x, y) in &h.pairs {
            if self.bmap[x as usize].is_none() {
                self.bmap[x as usize] = Some(y);
                self.tmap[y as usize] = Some(x);
                fresh.push((x, y));
            }
        }
        fresh
    }

    /// Commits an already mutually consistent set.
    fn with_chosen(mut self, chosen: impl IntoIterator<Item = usize>) -> Self {
        for i in chosen {
            self.commit(i);
        }
        self
    }

    /// Repeatedly takes the best consistent hypothesis, preferring those
    /// connected to entity pairs already bound.
    fn run(mut self, order: &[usize], rank: &[usize], seed: Option<usize>) -> Self {
        let mut frontier: BinaryHeap<Reverse<(usize, usize)>> = BinaryHeap::new();
        let mut cursor = 0;
        let mut pending_seed = seed;
        loop {
            let next = if let Some(s) = pending_seed.take() {
                Some(s)
            } else {
                let mut found = None;
                while let Some(Reverse((_, i))) = frontier.pop() {
                    if self.consistent(&self.hyps[i]) {
                        found = Some(i);
                        break;
                    }
                }
                if found.is_none() {
                    while cursor < order.len() {
                        let i = order[cursor];
                        cursor += 1;
                        if self.consistent(&self.hyps[i]) {
                            found = Some(i);
                            break;
                        }
                    }
                }
                found
            };
            let Some(i) = next else { break };
            for p in self.commit(i) {
                if let Some(list) = self.by_pair.get(&p) {
                    frontier.extend(list.iter().map(|&j| Reverse((rank[j], j))));
                }
            }
        }
        self
    }
}

/// Maps `base` onto `target`.
pub fn sme_map(base: &CaseFacts, target: &CaseFacts) -> Mapping {
    let mut shapes = HashMap::new();
    let pb = prepare(base, &mut shapes);
    let pt = prepare(target, &mut shapes);
    let mut by_shape: HashMap<u32, Vec<usize>> = HashMap::new();
    for (i, (_, f)) in pt.facts.iter().enumerate() {
        by_shape.entry(f.shape).or_default().push(i);
    }
    let mut hyps = Vec::new();
    for (bi, (_, bf)) in pb.facts.iter().enumerate() {
        for &ti in by_shape.get(&bf.shape).map_or(&[][..], Vec::as_slice) {
            if let Some(pairs) = local_pairs(bf, &pt.facts[ti].1) {
                hyps.push(Hypothesis { b: bi, t: ti, pairs, weight: bf.weight });
            }
        }
    }
    let mut by_pair: HashMap<(u32, u32), Vec<usize>> = HashMap::new();
    for (i, h) in hyps.iter().enumerate() {
        for &p in &h.pairs {
            by_pair.entry(p).or_default().push(i);
        }
    }
    // support: how many other hypotheses agree with this one's entity pairs
    let support: Vec<usize> = hyps.iter().map(|h| h.pairs.iter().map(|p| by_pair[p].len() - 1).sum()).collect();
    let mut order: Vec<usize> = (0..hyps.len()).collect();
    order.sort_by(|&a, &b| hyps[b].weight.total_cmp(&hyps[a].weight).then(support[b].cmp(&support[a])).then(a.cmp(&b)));
    let ranks = |order: &[usize]| {
        let mut rank = vec![0; order.len()];
        for (r, &i) in order.iter().enumerate() {
            rank[i] = r;
        }
        rank
    };
    let rank = ranks(&order);
    let nb = (pb.facts.len(), pb.entities.len());
    let nt = (pt.facts.len(), pt.entities.len());
    let new = || Greedy::new(&hyps, &by_pair, nb, nt);

    let mut best = new().run(&order, &rank, None);
    // identity-preferring pass: same-named entities first
    let identical = |h: &Hypothesis| h.pairs.iter().all(|&(x, y)| pb.entities[x as usize] == pt.entities[y as usize]);
    if hyps.iter().any(identical) {
        let mut id_order = order.clone();
        id_order.sort_by_key(|&i| !identical(&hyps[i]));
        let id_rank = ranks(&id_order);
        let g = new().run(&id_order, &id_rank, None);
        if g.score > best.score {
            best = g;
        }
    }
    for k in 1..=RESTARTS.min(order.len().saturating_sub(1)) {
        let g = new().run(&order, &rank, Some(order[k]));
        if g.score > best.score {
            best = g;
        }
    }

    // swap moves: force in one rejected hypothesis, drop what conflicts
    // with it, refill greedily, keep the result if it scores higher
    for _ in 0..MAX_SWAPS {
        let mut taken = vec![false; hyps.len()];
        for &c in &best.chosen {
            taken[c] = true;
        }
        let better = order.iter().filter(|&&i| !taken[i]).find_map(|&i| {
            let keep: Vec<usize> = best.chosen.iter().copied().filter(|&c| compatible(&hyps[c], &hyps[i])).collect();
            let lost: f64 = best.chosen.iter().filter(|c| !keep.contains(c)).map(|&c| hyps[c].weight).sum();
            if lost == 0.0 {
                return None;
            }
            let g = new().with_chosen(keep.into_iter().chain([i])).run(&order, &rank, None);
            (g.score > best.score + 1e-9).then_some(g)
        });
        match better {
            Some(g) => best = g,
            None => break,
        }
    }

    let mut chosen = best.chosen.clone();
    chosen.sort_by_key(|&i| hyps[i].b);
    let facts: Vec<(Term, Term)> =
        chosen.iter().map(|&i| (pb.facts[hyps[i].b].0.clone(), pt.facts[hyps[i].t].0.clone())).collect();
    let entities: BTreeMap<Term, Term> = best
        .bmap
        .iter()
        .enumerate()
        .filter_map(|(x, y)| y.map(|y| (pb.entities[x].clone(), pt.entities[y as usize].clone())))
        .collect();
    let candidate_inferences = pb
        .facts
        .iter()
        .enumerate()
        .filter(|(i, (_, f))| {
            !best.bused[*i] && !f.ents.is_empty() && f.ents.iter().all(|&e| best.bmap[e as usize].is_some())
        })
        .map(|(_, (t, _))| substitute_with(t, &mut |x| entities.get(x).cloned()))
        .collect();
    let raw = best.score;
    let denom = self_score(base).max(self_score(target));
    Mapping {
        entities,
        facts,
        raw_score: raw,
        normalized_score: if denom > 0.0 { (raw / denom).min(1.0) } else { 0.0 },
        candidate_inferences,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbolic::parse_terms;

    fn case(text: &str) -> CaseFacts {
        CaseFacts::new(parse_terms(text).unwrap())
    }

    #[test]
    fn weights_prefer_depth() {
        let flat = crate::symbolic::parse_term("(p a b)").unwrap();
        let nested = crate::symbolic::parse_term("(causes (p a b) (q c))").unwrap();
        assert_eq!(fact_weight(&flat), 1.0);
        assert_eq!(fact_weight(&nested), 1.25 + 2.0);
        let lifted = crate::symbolic::parse_term(
            "(holdsIn (StartFn (GenEntFn 0)) (valueOf (Attackers (GenEntFn 5)) (UnitCount (GenEntFn 1))))",
        )
        .unwrap();
        let ground =
            crate::symbolic::parse_term("(holdsIn (StartFn E) (valueOf (Attackers R) (UnitCount 3)))").unwrap();
        assert_eq!(fact_weight(&lifted), fact_weight(&ground));
    }

    #[test]
    fn self_mapping() {
        let x = case("(p a b) (q b) (causes (p a b) (q c)) (isa a Thing)");
        let m = sme_map(&x, &x);
        assert_eq!(m.normalized_score, 1.0);
        assert_eq!(m.facts.len(), 4);
        assert!(m.candidate_inferences.is_empty());
    }

    #[test]
    fn disjoint_functors() {
        let m = sme_map(&case("(p a b)"), &case("(q c d)"));
        assert_eq!(m.raw_score, 0.0);
        assert!(m.entities.is_empty());
    }

    #[test]
    fn candidate_inference() {
        let base = case("(p a b) (q a) (r b) (s a b) (causes (q a) (r b))");
        let target = case("(p x y) (q x) (r y) (s x y)");
        let m = sme_map(&base, &target);
        assert_eq!(m.facts.len(), 4);
        let ci = crate::symbolic::parse_term("(causes (q x) (r y))").unwrap();
        assert_eq!(m.candidate_inferences, vec![ci]);
    }

    #[test]
    fn constants_must_be_identical() {
        let m = sme_map(&case("(isa a Dog)"), &case("(isa x Cat)"));
        assert_eq!(m.raw_score, 0.0);
        let m = sme_map(&case("(isa a Dog)"), &case("(isa x Dog)"));
        assert_eq!(m.normalized_score, 1.0);
    }

    #[test]
    fn numbers_in_value_slots_match_any_number() {
        let a = case("(holdsIn (StartFn e) (valueOf (Attackers r) 3))");
        let b = case("(holdsIn (StartFn f) (valueOf (Attackers s) 1))");
        assert_eq!(sme_map(&a, &b).normalized_score, 1.0);
        let g = case("(holdsIn (StartFn (GenEntFn 0)) (valueOf (Attackers (GenEntFn 1)) (GenEntFn 2)))");
        let m = sme_map(&g, &b);
        assert_eq!(m.normalized_score, 1.0);
        assert_eq!(m.entities.len(), 2);
    }

    #[test]
    fn value_slot_helpers() {
        let f = crate::symbolic::parse_term("(holdsIn (StartFn e) (valueOf (milUnits r) (UnitCount 3)))").unwrap();
        assert_eq!(value_slot_of_fact(&f), Some(&Term::Int(3)));
        let g = with_value_slot(&f, &mut |_| Term::genent(4));
        assert_eq!(g.to_string(), "(holdsIn (StartFn e) (valueOf (milUnits r) (UnitCount (GenEntFn 4))))");
    }
}
