use softcache_core::catalog::{ingest_catalog, read_bundle, write_bundle};
use softcache_core::network::{generate_geometric, GeometricConfig};
use softcache_core::objective::{schr_femto, schr_single};
use softcache_core::oracle::{exhaustive_single, simulate_requests};
use softcache_core::simkit::{gen_sch1, gen_zipf_demand, Sch1Sampling};
use softcache_core::solvers::{greedy_femto, greedy_single, popularity_baseline};
use softcache_core::{Budget, Capacities, Catalog, CoverageModel, Item, Problem, UtilityMode, UtilityModel};

#[test]
fn ingested_bundle_solves_by_hand() {
    let dir = tempfile::tempdir().unwrap();
    let contents = dir.path().join("contents.csv");
    let relations = dir.path().join("relations.csv");
    std::fs::write(&contents, "id,popularity,size_bytes\n0,4,1\n1,3,1\n2,2,1\n3,1,1\n").unwrap();
    std::fs::write(&relations, "src,dst,utility\n1,0,1\n2,0,1\n").unwrap();
    let (catalog, utility) = ingest_catalog(&contents, &relations).unwrap();
    write_bundle(&dir.path().join("b"), &catalog, &utility).unwrap();
    let (catalog, utility) = read_bundle(&dir.path().join("b"), UtilityMode::Acceptance).unwrap();

    let coverage = CoverageModel::uniform(1, 1, 1.0).unwrap();
    let problem = Problem::new(&catalog, &coverage, &utility).unwrap();
    // content 0 serves itself (0.4) and both of its neighbours (0.3 + 0.2)
    let run = greedy_single(&problem, 1).unwrap();
    assert_eq!(run.placement.items().collect::<Vec<_>>(), vec![Item::new(0, 0)]);
    assert!((run.objective - 0.9).abs() < 1e-12);
    let best = exhaustive_single(&problem, Budget::Items(1)).unwrap();
    assert!((best.optimum - 0.9).abs() < 1e-12);
    assert_eq!(best.optimal.len(), 1);

    let sim = simulate_requests(&problem, &run.placement, 20_000, 5).unwrap();
    assert!((sim.mean - 0.9).abs() <= 4.0 * sim.stderr);
}

#[test]
fn synthetic_pipeline_agrees_with_simulation() {
    let demand = gen_zipf_demand(300, 0.8).unwrap();
    let catalog = Catalog::with_unit_sizes(demand).unwrap();
    let popularity = catalog.demand_row(0).to_vec();
    let utility = gen_sch1(&popularity, 4.0, 0.7, 11, Sch1Sampling::PerEdge).unwrap();
    let identity = UtilityModel::identity(300, UtilityMode::Acceptance).unwrap();
    let coverage = generate_geometric(&GeometricConfig::default(), 11).unwrap();
    let caps = Capacities::uniform_items(coverage.num_cells(), 4);

    let soft = Problem::new(&catalog, &coverage, &utility).unwrap();
    let hard = Problem::new(&catalog, &coverage, &identity).unwrap();
    let with_soft = greedy_femto(&soft, &caps).unwrap();
    let without = greedy_femto(&hard, &caps).unwrap();
    let baseline = popularity_baseline(&soft, &caps).unwrap();

    let reported = schr_femto(&soft, &with_soft.placement).unwrap();
    assert!((reported - with_soft.objective).abs() < 1e-12);
    // a placement chosen without relations still earns soft hits
    let blind = schr_femto(&soft, &without.placement).unwrap();
    assert!(with_soft.objective >= blind - 1e-12);
    assert!(with_soft.objective >= schr_femto(&soft, &baseline.placement).unwrap() - 1e-12);

    let sim = simulate_requests(&soft, &with_soft.placement, 50_000, 3).unwrap();
    assert!((sim.mean - with_soft.objective).abs() <= 4.0 * sim.stderr, "{sim:?} vs {}", with_soft.objective);
}

#[test]
fn single_cache_objective_matches_femto_form() {
    let demand = gen_zipf_demand(50, 1.0).unwrap();
    let catalog = Catalog::with_unit_sizes(demand).unwrap();
    let popularity = catalog.demand_row(0).to_vec();
    let utility = gen_sch1(&popularity, 3.0, 0.5, 2, Sch1Sampling::PerEdge).unwrap();
    let coverage = CoverageModel::from_links(6, 2, (0..6).map(|i| (i, i % 2, 1.0))).unwrap();
    let problem = Problem::new(&catalog, &coverage, &utility).unwrap();
    let run = greedy_single(&problem, 3).unwrap();
    let a = schr_single(&problem, &run.placement).unwrap();
    let b = schr_femto(&problem, &run.placement).unwrap();
    assert!((a - b).abs() < 1e-12);
}
