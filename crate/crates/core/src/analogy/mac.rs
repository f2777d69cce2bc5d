//! Content vectors and the cheap first retrieval stage.

use std::collections::BTreeMap;

use crate::symbolic::{is_genent, CaseFacts, Symbol};

/// Candidates beyond the best must score at least this fraction of it.
pub const MAC_RATIO: f64 = 0.9;
/// Maximum number of candidates passed on to structure mapping.
pub const MAC_CANDIDATES: usize = 3;

/// Relative prevalence of each functor in a case.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ContentVector {
    pub weights: BTreeMap<Symbol, f64>,
}

impl ContentVector {
    pub fn norm(&self) -> f64 {
        self.weights.values().map(|w| w * w).sum::<f64>().sqrt()
    }

    pub fn dot(&self, other: &ContentVector) -> f64 {
        self.weights.iter().filter_map(|(k, w)| other.weights.get(k).map(|v| w * v)).sum()
    }

    /// Dot product of the unit-length versions of both vectors.
    pub fn similarity(&self, other: &ContentVector) -> f64 {
        let n = self.norm() * other.norm();
        if n == 0.0 {
            0.0
        } else {
            self.dot(other) / n
        }
    }
}

/// Counts every functor occurrence at any depth and normalizes by the total.
/// Generalized-entity placeholders are not content and are skipped.
pub fn content_vector(case: &CaseFacts) -> ContentVector {
    let mut counts: BTreeMap<Symbol, u64> = BTreeMap::new();
    let mut total = 0u64;
    for f in case.iter() {
        f.walk(&mut |t| {
            if let Some(functor) = t.functor() {
                if !is_genent(t) {
                    *counts.entry(functor.clone()).or_default() += 1;
                    total += 1;
                }
            }
        });
    }
    ContentVector { weights: counts.into_iter().map(|(k, c)| (k, c as f64 / total as f64)).collect() }
}

/// Ranks the library by similarity to the probe and keeps the best item plus
/// up to two others close to it. Ties go to the smaller id.
pub fn mac_stage<Id: Ord + Clone>(probe: &ContentVector, library: &[(Id, ContentVector)]) -> Vec<Id> {
    let mut scored: Vec<(f64, &Id)> = library.iter().map(|(id, v)| (probe.similarity(v), id)).collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(b.1)));
    let Some(&(top, _)) = scored.first() else { return Vec::new() };
    scored
        .iter()
        .enumerate()
        .take_while(|(i, (s, _))| *i == 0 || *s >= MAC_RATIO * top)
        .take(MAC_CANDIDATES)
        .map(|(_, (_, id))| (*id).clone())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbolic::parse_terms;

    fn case(text: &str) -> CaseFacts {
        CaseFacts::new(parse_terms(text).unwrap())
    }

    #[test]
    fn single_fact() {
        let v = content_vector(&case("(isa A B)"));
        assert_eq!(v.weights.len(), 1);
        assert_eq!(v.weights[&Symbol::new("isa")], 1.0);
        assert!(content_vector(&CaseFacts::default()).weights.is_empty());
    }

    #[test]
    fn nested_functors_counted() {
        let v = content_vector(&case("(holdsIn (StartFn E) (valueOf (Attackers R) (UnitCount (GenEntFn 1))))"));
        assert_eq!(v.weights.len(), 5);
        assert!((v.weights.values().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn probe_itself_ranks_first() {
        let probe = case("(p a b) (q a) (q b)");
        let lib = vec![(1, content_vector(&case("(r x) (s y)"))), (2, content_vector(&probe))];
        assert_eq!(mac_stage(&content_vector(&probe), &lib), vec![2]);
        assert!(mac_stage::<u32>(&content_vector(&probe), &[]).is_empty());
    }

    #[test]
    fn ties_and_near_ties() {
        let probe = content_vector(&case("(p a) (q a)"));
        let same = content_vector(&case("(p b) (q b)"));
        let lib = vec![(3, same.clone()), (1, same.clone()), (2, same.clone()), (0, same)];
        assert_eq!(mac_stage(&probe, &lib), vec![0, 1, 2]);
        let near = content_vector(&case("(p a) (q a) (p b) (q b) (p c) (q c) (p d) (q d) (p e) (r e)"));
        let far = content_vector(&case("(r a)"));
        let lib = vec![(1, content_vector(&case("(p b) (q b)"))), (2, near), (3, far)];
        let got = mac_stage(&probe, &lib);
        assert_eq!(got, vec![1, 2]);
    }
}
