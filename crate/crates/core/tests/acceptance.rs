//! Acceptance gate: one [PASS]/[FAIL] line per criterion.

// negated comparisons keep NaN on the failing side
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use softcache_core::catalog::{Catalog, Distribution, UtilityMode, UtilityModel};
use softcache_core::network::{generate_geometric, CoverageModel, GeometricConfig};
use softcache_core::objective::{sch_us, schr_femto, Budget, Capacities, Item, Placement};
use softcache_core::oracle::simulate_requests;
use softcache_core::simkit::{
    collect_sweep, gen_zipf_demand, Axis, CatalogSource, NetworkSource, ScenarioConfig, Sch1Sampling, Scheme, SweepAxis,
    SweepConfig, SweepRow, UtilitySource,
};
use softcache_core::verify::{run_suite, Scale, SolverSet, SuiteReport};

struct Outcome {
    pass: bool,
    detail: String,
}

fn report(id: u32, name: &str, elapsed: Duration, outcome: Outcome) -> bool {
    let tag = if outcome.pass { "PASS" } else { "FAIL" };
    println!("[{tag}] {id}. {name} ({:.1} s): {}", elapsed.as_secs_f64(), outcome.detail);
    outcome.pass
}

fn suite(name: &str) -> SuiteReport {
    run_suite(name, Scale::Small, &SolverSet::default(), 2024).expect("known suite")
}

fn observed(s: &SuiteReport, check: &str) -> f64 {
    s.check(check).and_then(|c| c.observed).unwrap_or(f64::NAN)
}

fn summary(s: &SuiteReport, checks: &[&str]) -> String {
    let mut parts: Vec<String> = checks
        .iter()
        .map(|c| {
            let st = s.check(c).expect("known check");
            format!("{c} worst {:.4e} over {} cases", observed(s, c), st.cases)
        })
        .collect();
    if let Some(c) = &s.counterexample {
        parts.push(format!("first violation: {} ({})", c.check, c.detail));
    }
    parts.join("; ")
}

fn greedy_single_bound() -> Outcome {
    let s = suite("greedy_single_bound");
    let ratio = observed(&s, "greedy_single/opt");
    let cases = s.check("greedy_single/opt").unwrap().cases;
    Outcome {
        pass: s.passed() && cases >= 500 && ratio >= 1.0 - (-1.0f64).exp(),
        detail: format!(
            "min greedy/OPT {ratio:.4} over {cases} instances (bound 0.6321); {}",
            summary(&s, &["reported objective"])
        ),
    }
}

fn knapsack_bounds() -> Outcome {
    let s = suite("knapsack_bounds");
    let fast = observed(&s, "fast_greedy/opt");
    let full = observed(&s, "partial_enum/opt");
    let slack = observed(&s, "partial_enum - fast_greedy");
    let cases = s.check("fast_greedy/opt").unwrap().cases;
    let e = 1.0 - (-1.0f64).exp();
    let mut detail = format!(
        "min fast/OPT {fast:.4} (bound 0.3161), min partial/OPT {full:.4} (bound 0.6321), min partial - fast {slack:.3e} over {cases} instances"
    );
    if let Some(c) = &s.counterexample {
        detail += &format!("; first violation: {} ({})", c.check, c.detail);
    }
    Outcome {
        pass: s.passed() && cases >= 300 && fast >= 0.5 * e && full >= e,
        detail,
    }
}

fn femto_bounds() -> Outcome {
    let s = suite("femto_bounds");
    let f = observed(&s, "greedy_femto/opt");
    let u = observed(&s, "greedy_femto_us/opt");
    let cases = s.check("greedy_femto/opt").unwrap().cases;
    Outcome {
        pass: s.passed() && cases >= 300 && f >= 0.5 && u >= 0.5,
        detail: format!("min greedy_femto/OPT {f:.4}, min greedy_femto_us/OPT {u:.4} over {cases} instances (bound 0.5)"),
    }
}

fn objective_correctness() -> Outcome {
    let g = suite("incremental_gains");
    let m = suite("submodularity");
    let gain_err = observed(&g, "gain vs recompute");
    let mono = observed(&m, "f(B) - f(A)");
    let sub = observed(&m, "gain(A) - gain(B)");
    let cases = (
        g.check("gain vs recompute").unwrap().cases,
        m.check("gain(A) - gain(B)").unwrap().cases,
    );
    Outcome {
        pass: g.passed() && m.passed() && cases.0 >= 1000 && cases.1 >= 1000,
        detail: format!(
            "max |gain - recompute| {gain_err:.2e} over {} pairs; min f(B)-f(A) {mono:.2e}, min gain(A)-gain(B) {sub:.2e} over {} triples (tolerance 1e-12)",
            cases.0, cases.1
        ),
    }
}

/// Random network with fractional q, Zipf demand and relations with random
/// fractional utilities.
fn fractional_instance(rng: &mut ChaCha8Rng) -> (Catalog, CoverageModel, UtilityModel) {
    let (k, m, n) = (200, 10, 30);
    let catalog = Catalog::with_unit_sizes(gen_zipf_demand(k, 0.8).unwrap()).unwrap();
    let mut q = vec![0.0; n * m];
    for i in 0..n {
        for j in 0..m {
            if rng.random_bool(0.3) {
                q[i * m + j] = rng.random_range(0.05..=1.0);
            }
        }
    }
    let coverage = CoverageModel::new(n, m, q).unwrap();
    let mut edges = Vec::new();
    for a in 0..k {
        let mut others: Vec<usize> = (0..k).filter(|&b| b != a).collect();
        others.shuffle(rng);
        for &b in &others[..rng.random_range(0..=8)] {
            edges.push((a, b, rng.random_range(0.05..0.95)));
        }
    }
    let utility = UtilityModel::average(k, UtilityMode::Acceptance, edges).unwrap();
    (catalog, coverage, utility)
}

fn formula_vs_simulation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut agree = 0;
    let mut worst: f64 = 0.0;
    for trial in 0..20u64 {
        let (catalog, coverage, utility) = fractional_instance(&mut rng);
        let problem = softcache_core::Problem::new(&catalog, &coverage, &utility).unwrap();
        // popular contents are more likely to be stored, so hits are not rare
        let caps = Capacities::uniform_items(10, 20);
        let sizes = catalog.sizes();
        let mut placement = Placement::new(caps);
        while placement.len() < 150 {
            let k = (rng.random::<f64>().powi(3) * 200.0) as usize;
            let item = Item::new(k.min(199), rng.random_range(0..10));
            if placement.admits(item, sizes) {
                placement.insert(item, sizes).unwrap();
            }
        }
        let exact = schr_femto(&problem, &placement).unwrap();
        let est = simulate_requests(&problem, &placement, 100_000, 1000 + trial).unwrap();
        let z = (est.mean - exact).abs() / est.stderr;
        worst = worst.max(z);
        if z <= 3.0 {
            agree += 1;
        }
    }
    Outcome {
        pass: agree >= 19,
        detail: format!("{agree}/20 placements within 3 standard errors (largest deviation {worst:.2} SE)"),
    }
}

fn point_mass_consistency() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    let mut compared = 0;
    for _ in 0..200 {
        let k = rng.random_range(3..=12);
        let n = rng.random_range(1..=4);
        let m = rng.random_range(1..=3);
        let u_max = if rng.random_bool(0.5) { 1.0 } else { 3.0 };
        let mode = UtilityMode::Satisfaction { u_max };
        let catalog = Catalog::with_unit_sizes(gen_zipf_demand(k, rng.random_range(0.0..1.5)).unwrap()).unwrap();
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                (0..m)
                    .map(|_| {
                        if rng.random_bool(0.6) {
                            rng.random_range(0.1..=1.0)
                        } else {
                            0.0
                        }
                    })
                    .collect()
            })
            .collect();
        let coverage = CoverageModel::from_rows(&rows).unwrap();
        let mut edges = Vec::new();
        for a in 0..k {
            for b in 0..k {
                if a != b && rng.random_bool(0.3) {
                    edges.push((a, b, rng.random_range(0.0..=u_max)));
                }
            }
        }
        let average = UtilityModel::average(k, mode, edges.clone()).unwrap();
        let points = edges.iter().map(|&(a, b, u)| (a, b, Distribution::point_mass(u)));
        let distributional = UtilityModel::distributional(k, mode, points).unwrap();
        let acceptance = (
            average.with_mode(UtilityMode::Acceptance),
            distributional.with_mode(UtilityMode::Acceptance),
        );
        let caps = Capacities::new(vec![Budget::Items(3); m]);
        let mut placement = Placement::new(caps);
        for _ in 0..rng.random_range(0..=3 * m) {
            let item = Item::new(rng.random_range(0..k), rng.random_range(0..m));
            if placement.admits(item, catalog.sizes()) {
                placement.insert(item, catalog.sizes()).unwrap();
            }
        }
        let pa = softcache_core::Problem::new(&catalog, &coverage, &average).unwrap();
        let pd = softcache_core::Problem::new(&catalog, &coverage, &distributional).unwrap();
        worst = worst.max((sch_us(&pa, &placement).unwrap() - sch_us(&pd, &placement).unwrap()).abs());
        if let (Ok(a), Ok(d)) = acceptance {
            if u_max == 1.0 {
                let pa = softcache_core::Problem::new(&catalog, &coverage, &a).unwrap();
                let pd = softcache_core::Problem::new(&catalog, &coverage, &d).unwrap();
                worst = worst.max((schr_femto(&pa, &placement).unwrap() - schr_femto(&pd, &placement).unwrap()).abs());
            }
        }
        compared += 1;
    }
    Outcome {
        pass: worst <= 1e-15,
        detail: format!("largest difference {worst:.2e} over {compared} random instances and placements (tolerance 1e-15)"),
    }
}

fn desk_scenario(utility: UtilitySource) -> ScenarioConfig {
    ScenarioConfig {
        catalog: CatalogSource::Synthetic {
            num_contents: 2000,
            zipf_exponent: 0.8,
        },
        utility,
        network: NetworkSource::Geometric(GeometricConfig {
            num_cells: 20,
            num_users: 50,
            ..GeometricConfig::default()
        }),
        cache_size: 5,
        size_aware: false,
        requests: 20_000,
    }
}

fn sch1(mean_degree: f64) -> UtilitySource {
    UtilitySource::Sch1 {
        mean_degree,
        acceptance: 1.0,
        sampling: Sch1Sampling::PerEdge,
    }
}

fn sweep(scenario: ScenarioConfig, axis: Axis, values: Vec<f64>) -> Vec<SweepRow> {
    let config = SweepConfig {
        scenario,
        schemes: Scheme::ALL.to_vec(),
        sweep: SweepAxis { axis, values },
        seeds: vec![1, 2, 3],
        record_timing: false,
    };
    collect_sweep(&config).expect("sweep runs")
}

fn value(rows: &[SweepRow], scheme: Scheme, seed: u64, v: f64) -> f64 {
    rows.iter()
        .find(|r| r.scheme == scheme && r.seed == seed && r.value == v)
        .map_or(f64::NAN, |r| r.objective)
}

fn trends() -> Outcome {
    let mut problems = Vec::new();
    let seeds = [1u64, 2, 3];

    // (a) cache size
    let cs: Vec<f64> = (2..=15).map(f64::from).collect();
    let rows = sweep(desk_scenario(sch1(4.0)), Axis::CacheSize, cs.clone());
    if let Some(r) = rows.iter().find(|r| r.error.is_some()) {
        problems.push(format!("row error {:?}", r.error));
    }
    for &seed in &seeds {
        for s in Scheme::ALL {
            for w in cs.windows(2) {
                let (a, b) = (value(&rows, s, seed, w[0]), value(&rows, s, seed, w[1]));
                if !(b >= a - 1e-12) {
                    problems.push(format!("{s} seed {seed} drops from C={} ({a}) to C={} ({b})", w[0], w[1]));
                }
            }
        }
        for &c in &cs {
            let (fs, f, s) = (
                value(&rows, Scheme::FemtoSch, seed, c),
                value(&rows, Scheme::Femto, seed, c),
                value(&rows, Scheme::Single, seed, c),
            );
            if !(fs >= f && f >= s) {
                problems.push(format!(
                    "ordering broken at C={c} seed {seed}: FemtoSCH {fs}, Femto {f}, Single {s}"
                ));
            }
        }
    }
    let at5 = |s| seeds.iter().map(|&x| value(&rows, s, x, 5.0)).sum::<f64>() / 3.0;
    let mut detail = format!(
        "C=5 means: Single {:.3}, SingleSCH {:.3}, Femto {:.3}, FemtoSCH {:.3}",
        at5(Scheme::Single),
        at5(Scheme::SingleSch),
        at5(Scheme::Femto),
        at5(Scheme::FemtoSch)
    );

    // (b) relation generators
    let degrees = vec![2.0, 4.0, 10.0];
    let one = sweep(desk_scenario(sch1(2.0)), Axis::MeanDegree, degrees.clone());
    let two = sweep(
        desk_scenario(UtilitySource::Sch2 {
            mean_degree: 2.0,
            acceptance: 1.0,
        }),
        Axis::MeanDegree,
        degrees.clone(),
    );
    let gain = |rows: &[SweepRow], seed, e, with, without| value(rows, with, seed, e) - value(rows, without, seed, e);
    let mut gains = Vec::new();
    for &e in &degrees {
        let mut mean = (0.0, 0.0);
        for &seed in &seeds {
            for (with, without) in [(Scheme::FemtoSch, Scheme::Femto), (Scheme::SingleSch, Scheme::Single)] {
                let (g1, g2) = (gain(&one, seed, e, with, without), gain(&two, seed, e, with, without));
                if !(g1 > g2) {
                    problems.push(format!(
                        "E[R]={e} seed {seed} {with}: SCH1 gain {g1} not above SCH2 gain {g2}"
                    ));
                }
            }
            mean.0 += gain(&one, seed, e, Scheme::FemtoSch, Scheme::Femto) / 3.0;
            mean.1 += gain(&two, seed, e, Scheme::FemtoSch, Scheme::Femto) / 3.0;
        }
        gains.push(format!("E[R]={e}: {:.3} vs {:.3}", mean.0, mean.1));
    }
    detail += &format!("; FemtoSCH gain SCH1 vs SCH2 {}", gains.join(", "));

    // (c) acceptance level
    let us: Vec<f64> = (0..=10).map(|i| f64::from(i) / 10.0).collect();
    let rows = sweep(desk_scenario(sch1(4.0)), Axis::Acceptance, us.clone());
    let mut zero_gap: f64 = 0.0;
    for &seed in &seeds {
        for (with, without) in [(Scheme::FemtoSch, Scheme::Femto), (Scheme::SingleSch, Scheme::Single)] {
            zero_gap = zero_gap.max((value(&rows, with, seed, 0.0) - value(&rows, without, seed, 0.0)).abs());
            for w in us.windows(2) {
                let (a, b) = (value(&rows, with, seed, w[0]), value(&rows, with, seed, w[1]));
                if !(b >= a - 1e-12) {
                    problems.push(format!("{with} seed {seed} drops from u={} ({a}) to u={} ({b})", w[0], w[1]));
                }
            }
        }
    }
    if !(zero_gap <= 1e-9) {
        problems.push(format!("u=0 gap {zero_gap}"));
    }
    detail += &format!("; u=0 gap {zero_gap:.1e}");
    if !problems.is_empty() {
        detail += &format!("; {} problems, first: {}", problems.len(), problems[0]);
    }
    Outcome {
        pass: problems.is_empty(),
        detail,
    }
}

fn coverage_statistic() -> Outcome {
    let config = GeometricConfig::default();
    let means: Vec<f64> = (0..100)
        .map(|seed| generate_geometric(&config, seed).unwrap().mean_cells_per_user())
        .collect();
    let mean = means.iter().sum::<f64>() / means.len() as f64;
    Outcome {
        pass: (2.0..=4.0).contains(&mean),
        detail: format!("mean cells per user {mean:.3} over 100 seeds (M=20, N=50, 1 km square, 200 m range)"),
    }
}

fn timed(limit: Option<Duration>, f: fn() -> Outcome) -> (Duration, Outcome) {
    let start = Instant::now();
    let mut out = f();
    let elapsed = start.elapsed();
    if let Some(limit) = limit {
        if elapsed > limit {
            out.pass = false;
            out.detail += &format!("; took longer than {} s", limit.as_secs());
        }
    }
    (elapsed, out)
}

type Criterion = (u32, &'static str, Option<u64>, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 8] = [
        (1, "cardinality greedy vs exhaustive optimum", Some(60), greedy_single_bound),
        (2, "knapsack solvers vs exhaustive optimum", Some(120), knapsack_bounds),
        (3, "overlapping-cache greedy vs exhaustive optimum", Some(120), femto_bounds),
        (
            4,
            "incremental gains, monotonicity and submodularity",
            None,
            objective_correctness,
        ),
        (5, "hit-ratio formula vs request simulation", None, formula_vs_simulation),
        (
            6,
            "point-mass distributions reproduce average utilities",
            None,
            point_mass_consistency,
        ),
        (
            7,
            "trend reproduction on the synthetic desk-scale scenario",
            Some(1800),
            trends,
        ),
        (8, "coverage statistic of the geometric network", None, coverage_statistic),
    ];
    let mut failed = 0;
    for (id, name, limit, f) in criteria {
        let (elapsed, outcome) = timed(limit.map(Duration::from_secs), f);
        if !report(id, name, elapsed, outcome) {
            failed += 1;
        }
    }
    println!("acceptance: {} of 8 criteria pass", 8 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
