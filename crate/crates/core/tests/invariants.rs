use std::collections::BTreeSet;

use proptest::prelude::*;

use battle_histories::analogy::{add_facts, load_gpool, save_gpool, sme_map, GenEntStats, Gpool, SageParams};
use battle_histories::episodes::Outcome;
use battle_histories::fluents::{allen_relation, temporally_local, AllenRelation};
use battle_histories::symbolic::{parse_term, print_term, substitute_with, CaseFacts, Term};

fn atom() -> impl Strategy<Value = String> {
    let ent = (0..4u8).prop_map(|i| format!("E{i}"));
    prop_oneof![
        (ent.clone(), ent.clone()).prop_map(|(a, b)| format!("(touches {a} {b})")),
        (ent.clone(), ent.clone()).prop_map(|(a, b)| format!("(owns {a} {b})")),
        ent.clone().prop_map(|a| format!("(strong {a})")),
        (ent, 0..4i64).prop_map(|(a, v)| format!("(valueOf (size {a}) {v})")),
    ]
}

fn fact() -> impl Strategy<Value = String> {
    prop_oneof![
        3 => atom(),
        1 => (atom(), atom()).prop_map(|(a, b)| format!("(causes {a} {b})")),
    ]
}

fn case() -> impl Strategy<Value = CaseFacts> {
    prop::collection::vec(fact(), 1..10).prop_map(|fs| CaseFacts::new(fs.iter().map(|f| parse_term(f).unwrap())))
}

fn rename(c: &CaseFacts, prefix: &str) -> CaseFacts {
    CaseFacts::new(c.iter().map(|f| {
        substitute_with(f, &mut |t| match t {
            Term::Symbol(s) if s.as_str().starts_with('E') => Some(Term::sym(format!("{prefix}{}", &s.as_str()[1..]))),
            _ => None,
        })
    }))
}

/// Equality up to the numbers sitting in value slots.
fn same_modulo_values(a: &Term, b: &Term) -> bool {
    match (a, b) {
        (Term::Compound(f, x), Term::Compound(g, y)) => {
            f == g && x.len() == y.len() && x.iter().zip(y.iter()).all(|(p, q)| same_modulo_values(p, q))
        }
        _ => a == b || (a.as_number().is_some() && b.as_number().is_some()),
    }
}

proptest! {
    #[test]
    fn mappings_are_one_to_one_and_parallel(base in case(), target in case()) {
        let m = sme_map(&base, &rename(&target, "T"));
        let images: BTreeSet<_> = m.entities.values().collect();
        prop_assert_eq!(images.len(), m.entities.len());
        let bs: BTreeSet<_> = m.facts.iter().map(|(b, _)| b).collect();
        let ts: BTreeSet<_> = m.facts.iter().map(|(_, t)| t).collect();
        prop_assert_eq!(bs.len(), m.facts.len());
        prop_assert_eq!(ts.len(), m.facts.len());
        for (b, t) in &m.facts {
            let image = substitute_with(b, &mut |x| m.entities.get(x).cloned());
            prop_assert!(same_modulo_values(&image, t), "{} -> {} via {:?}", b, t, m.entities);
        }
        prop_assert!(m.normalized_score >= 0.0 && m.normalized_score <= 1.0);
    }

    #[test]
    fn renamed_copy_maps_completely(base in case()) {
        let m = sme_map(&base, &rename(&base, "R"));
        prop_assert!((m.normalized_score - 1.0).abs() < 1e-12);
        prop_assert!(m.candidate_inferences.is_empty());
    }

    #[test]
    fn welford_matches_direct_sums(values in prop::collection::vec(-50.0f64..50.0, 1..60)) {
        let s = GenEntStats::from_values(&values);
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let sse: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
        prop_assert_eq!(s.cardinality, values.len() as u64);
        prop_assert!((s.mean - mean).abs() < 1e-9);
        prop_assert!((s.sse - sse).abs() < 1e-9 * sse.max(1.0));
        prop_assert_eq!(s.minimum, values.iter().cloned().fold(f64::INFINITY, f64::min));
        prop_assert_eq!(s.maximum, values.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
    }

    #[test]
    fn allen_converse_and_locality(a in (0..30i32, 1..10i32), b in (0..30i32, 1..10i32)) {
        let (a, b) = ((a.0, a.0 + a.1), (b.0, b.0 + b.1));
        let r = allen_relation(a, b).unwrap();
        prop_assert_eq!(allen_relation(b, a).unwrap(), r.converse());
        let apart = matches!(r, AllenRelation::Precedes | AllenRelation::PrecededBy);
        prop_assert_eq!(temporally_local(a, b).unwrap(), !apart);
    }

    #[test]
    fn printed_facts_reparse(f in fact()) {
        let t = parse_term(&f).unwrap();
        prop_assert_eq!(parse_term(&print_term(&t)).unwrap(), t);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn gpool_survives_disk(cases in prop::collection::vec(case(), 1..6)) {
        let mut pool = Gpool::new(Outcome::Success, SageParams::default());
        for c in &cases {
            add_facts(&mut pool, c).unwrap();
        }
        let dir = tempfile::tempdir().unwrap();
        save_gpool(&pool, dir.path()).unwrap();
        let back = load_gpool(dir.path()).unwrap();
        prop_assert_eq!(&back, &pool);
        let total: u32 = pool.generalizations.iter().map(|g| g.case_count).sum::<u32>() + pool.outliers.len() as u32;
        prop_assert_eq!(total as usize, cases.len());
    }
}
