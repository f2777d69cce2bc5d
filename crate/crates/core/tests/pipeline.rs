use battle_histories::analogy::{retrieve, sage_add, Gpool, SageParams};
use battle_histories::episodes::{run_scenario, Mode, Outcome};
use battle_histories::experiment::{run_game, run_scenario_to, summarize_dir, ExperimentConfig};
use battle_histories::symbolic::read_archive;

#[test]
fn scenario_cases_feed_pools_and_retrieve() {
    let (_, eps) = run_scenario("three-attacker", Mode::Baseline).unwrap();
    let mut success = Gpool::new(Outcome::Success, SageParams::default());
    for (_, case) in eps.iter().filter(|(e, _)| e.outcome == Some(Outcome::Success)) {
        sage_add(&mut success, case).unwrap();
    }
    assert!(!success.is_empty());
    let (_, first) = &eps[0];
    let (item, m) = retrieve(&first.facts, &success).expect("retrieves its own kind");
    assert!(success.item_facts(item).is_some());
    assert!(m.normalized_score > 0.5, "{}", m.normalized_score);
}

#[test]
fn scenario_archive_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let cases = run_scenario_to("three-attacker", Mode::Histories, dir.path()).unwrap();
    assert_eq!(cases.len(), 1);
    let manifest = std::fs::read_to_string(dir.path().join("manifest.csv")).unwrap();
    let mut lines = manifest.lines();
    assert_eq!(lines.next(), Some("case-file,outcome,fact-count,turns"));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    let (_, facts) = read_archive(&dir.path().join(row[0])).unwrap();
    assert_eq!(facts, cases[0].facts);
    assert_eq!(row[2].parse::<usize>().unwrap(), facts.len());
}

#[test]
fn short_games_share_prefix_until_invasion() {
    let mut cfg = ExperimentConfig::shipped();
    cfg.games = 1;
    cfg.seeds.truncate(1);
    cfg.turns = 70;
    let b = run_game(&cfg, Mode::Baseline, 0).unwrap();
    let h = run_game(&cfg, Mode::Histories, 0).unwrap();
    assert_eq!(b.cities.len(), 71);
    let invasion = cfg.sim.first_wave_turn as usize;
    assert_eq!(b.cities[..invasion], h.cities[..invasion]);
    assert_eq!(b.gold[..invasion], h.gold[..invasion]);
}

#[test]
fn summary_of_empty_dir_is_empty() {
    let dir = tempfile::tempdir().unwrap();
    assert!(summarize_dir(dir.path()).unwrap().is_empty());
    assert!(summarize_dir(&dir.path().join("missing")).is_err());
}
