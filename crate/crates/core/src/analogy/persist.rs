//! Gpool directories: a meta file, one file per generalization and one
//! archive per outlier.

use std::collections::BTreeMap;
use std::path::Path;

use super::sage::{GenEntStats, Generalization, Gpool, Outlier, SageParams};
use super::{malformed, AnalogyError};
use crate::episodes::Outcome;
use crate::symbolic::{parse_archive, parse_terms, render_archive, Decimal, Term};

const META: &str = "pool.meta";

fn dec(v: f64) -> Term {
    Term::Dec(Decimal::new(v).expect("finite"))
}

fn render_generalization(g: &Generalization) -> String {
    let mut out = String::new();
    for (i, s) in &g.genents {
        out.push_str(&format!(
            "; genent {i} cardinality {} minimum {:?} maximum {:?} mean {:?} sse {:?}\n",
            s.cardinality, s.minimum, s.maximum, s.mean, s.sse
        ));
    }
    out.push_str(&format!("(caseCount {})\n(nextGenEnt {})\n", g.case_count, g.next_genent));
    for (i, s) in &g.genents {
        let mut args = vec![Term::Int(*i as i64)];
        args.extend(s.values.iter().map(|&v| dec(v)));
        out.push_str(&format!("{}\n", Term::app("genEntValues", args)));
    }
    for (f, c) in &g.facts {
        out.push_str(&format!("{}\n", Term::app("factCount", vec![Term::Int(*c as i64), f.clone()])));
    }
    out
}

fn int_arg(t: &Term, i: usize, file: &str) -> Result<i64, AnalogyError> {
    match t.args().get(i) {
        Some(Term::Int(v)) => Ok(*v),
        _ => Err(malformed(file, format!("expected an integer in {t}"))),
    }
}

fn parse_generalization(id: u32, text: &str, file: &str) -> Result<Generalization, AnalogyError> {
    let mut g = Generalization { id, case_count: 0, facts: BTreeMap::new(), genents: BTreeMap::new(), next_genent: 0 };
    for t in parse_terms(text)? {
        match t.functor().map(|s| s.as_str()) {
            Some("caseCount") => g.case_count = int_arg(&t, 0, file)? as u32,
            Some("nextGenEnt") => g.next_genent = int_arg(&t, 0, file)? as u32,
            Some("genEntValues") => {
                let i = int_arg(&t, 0, file)? as u32;
                let values: Option<Vec<f64>> = t.args()[1..].iter().map(Term::as_number).collect();
                let values = values.ok_or_else(|| malformed(file, "non-numeric value"))?;
                g.genents.insert(i, GenEntStats::from_values(&values));
            }
            Some("factCount") => {
                let c = int_arg(&t, 0, file)? as u32;
                let f = t.args().get(1).ok_or_else(|| malformed(file, "factCount without fact"))?;
                g.facts.insert(f.clone(), c);
            }
            _ => return Err(malformed(file, format!("unexpected statement {t}"))),
        }
    }
    if g.case_count == 0 {
        return Err(malformed(file, "missing caseCount"));
    }
    Ok(g)
}

fn label_name(l: Outcome) -> &'static str {
    l.collection()
}

pub fn save_gpool(pool: &Gpool, dir: &Path) -> Result<(), AnalogyError> {
    std::fs::create_dir_all(dir)?;
    let meta = [
        Term::app("gpoolLabel", vec![Term::sym(label_name(pool.label))]),
        Term::app("assimilationThreshold", vec![dec(pool.params.assimilation_threshold)]),
        Term::app("probabilityCutoff", vec![dec(pool.params.probability_cutoff)]),
        Term::app("nextPoolItem", vec![Term::Int(pool.next_id as i64)]),
    ];
    let text: String = meta.iter().map(|t| format!("{t}\n")).collect();
    std::fs::write(dir.join(META), text)?;
    for g in &pool.generalizations {
        std::fs::write(dir.join(format!("generalization-{}.gen", g.id)), render_generalization(g))?;
    }
    for o in &pool.outliers {
        std::fs::write(dir.join(format!("outlier-{}.case", o.id)), render_archive(&[], &o.facts))?;
    }
    Ok(())
}

pub fn load_gpool(dir: &Path) -> Result<Gpool, AnalogyError> {
    let meta = std::fs::read_to_string(dir.join(META))?;
    let mut label = None;
    let mut params = SageParams::default();
    let mut next_id = 0;
    for t in parse_terms(&meta)? {
        let arg = t.args().first().cloned();
        match (t.functor().map(|s| s.as_str()), arg) {
            (Some("gpoolLabel"), Some(Term::Symbol(s))) => {
                label = [Outcome::Success, Outcome::Failure].into_iter().find(|o| label_name(*o) == s.as_str());
            }
            (Some("assimilationThreshold"), Some(v)) => {
                params.assimilation_threshold = v.as_number().ok_or_else(|| malformed(META, "threshold"))?
            }
            (Some("probabilityCutoff"), Some(v)) => {
                params.probability_cutoff = v.as_number().ok_or_else(|| malformed(META, "cutoff"))?
            }
            (Some("nextPoolItem"), Some(Term::Int(n))) => next_id = n as u32,
            _ => return Err(malformed(META, format!("unexpected statement {t}"))),
        }
    }
    let label = label.ok_or_else(|| malformed(META, "missing label"))?;
    let mut pool = Gpool::new(label, params);
    pool.next_id = next_id;
    let mut names: Vec<String> =
        std::fs::read_dir(dir)?.filter_map(|e| e.ok().and_then(|e| e.file_name().into_string().ok())).collect();
    names.sort();
    let id_of = |name: &str, prefix: &str, suffix: &str| -> Option<u32> {
        name.strip_prefix(prefix)?.strip_suffix(suffix)?.parse().ok()
    };
    for name in &names {
        if let Some(id) = id_of(name, "generalization-", ".gen") {
            let text = std::fs::read_to_string(dir.join(name))?;
            pool.generalizations.push(parse_generalization(id, &text, name)?);
        } else if let Some(id) = id_of(name, "outlier-", ".case") {
            let text = std::fs::read_to_string(dir.join(name))?;
            let (_, facts) = parse_archive(&text)?;
            pool.outliers.push(Outlier { id, facts });
        }
    }
    pool.generalizations.sort_by_key(|g| g.id);
    pool.outliers.sort_by_key(|o| o.id);
    Ok(pool)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analogy::sage::add_facts;
    use crate::symbolic::CaseFacts;

    fn facts(text: &str) -> CaseFacts {
        CaseFacts::new(parse_terms(text).unwrap())
    }

    #[test]
    fn round_trip() {
        let mut pool =
            Gpool::new(Outcome::Failure, SageParams { assimilation_threshold: 0.7, probability_cutoff: 0.3 });
        let a = "(eventParticipant E R) (holdsIn (StartFn E) (valueOf (milUnits R) (UnitCount 1)))";
        let b = "(eventParticipant F S) (holdsIn (StartFn F) (valueOf (milUnits S) (UnitCount 0)))";
        for t in [a, b, a, "(other X)"] {
            add_facts(&mut pool, &facts(t)).unwrap();
        }
        assert_eq!(pool.generalizations.len(), 1);
        assert_eq!(pool.outliers.len(), 1);
        let dir = tempfile::tempdir().unwrap();
        save_gpool(&pool, dir.path()).unwrap();
        let back = load_gpool(dir.path()).unwrap();
        assert_eq!(back, pool);
        // saving the reloaded pool reproduces the files byte for byte
        let dir2 = tempfile::tempdir().unwrap();
        save_gpool(&back, dir2.path()).unwrap();
        for name in ["pool.meta", "generalization-1.gen", "outlier-2.case"] {
            assert_eq!(
                std::fs::read(dir.path().join(name)).unwrap(),
                std::fs::read(dir2.path().join(name)).unwrap(),
                "{name}"
            );
        }
    }
}
