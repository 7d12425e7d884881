// Bounds are checked as `!(x >= bound)` so that NaN counts as a violation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::instances::{random_scenario, InstanceShape};
use super::{CaseLog, Check, Scale, SolverSet, Suite, Worst, TOLERANCE};
use crate::catalog::{Catalog, Demand, UtilityMode, UtilityModel, UtilityVariant};
use crate::network::CoverageModel;
use crate::objective::ObjectiveKind;
use crate::objective::{
    sch_us, schr_femto, schr_single, Budget, Capacities, EvalState, Form, IncrementalObjective, Item, Placement,
    SatisfactionState,
};
use crate::oracle::{exhaustive_femto, exhaustive_single};
use crate::problem::{Problem, Scenario};
use crate::solvers::{SolverResult, Step};

const E_BOUND: f64 = 1.0 - 1.0 / std::f64::consts::E;

fn bound(name: &'static str, value: f64) -> Check {
    Check {
        name,
        bound: Some(value),
        worst: Worst::Min,
    }
}

fn error(name: &'static str) -> Check {
    Check {
        name,
        bound: Some(TOLERANCE),
        worst: Worst::Max,
    }
}

fn rule(name: &'static str) -> Check {
    Check {
        name,
        bound: None,
        worst: Worst::Min,
    }
}

pub(crate) fn all(scale: Scale) -> Vec<Suite> {
    vec![
        Suite {
            name: "greedy_single_bound",
            cases: scale.cases(500),
            checks: vec![bound("greedy_single/opt", E_BOUND), error("reported objective")],
            run: Box::new(greedy_single_case),
        },
        Suite {
            name: "knapsack_bounds",
            cases: scale.cases(300),
            checks: vec![
                bound("fast_greedy/opt", 0.5 * E_BOUND),
                bound("partial_enum/opt", E_BOUND),
                bound("partial_enum - fast_greedy", 0.0),
                error("reported objective"),
            ],
            run: Box::new(knapsack_case),
        },
        Suite {
            name: "femto_bounds",
            cases: scale.cases(300),
            checks: vec![
                bound("greedy_femto/opt", 0.5),
                bound("greedy_femto_us/opt", 0.5),
                error("reported objective"),
            ],
            run: Box::new(femto_case),
        },
        Suite {
            name: "incremental_gains",
            cases: scale.cases(1000),
            checks: vec![error("gain vs recompute"), error("running value")],
            run: Box::new(gain_case),
        },
        Suite {
            name: "submodularity",
            cases: scale.cases(1000),
            checks: vec![bound("f(B) - f(A)", 0.0), bound("gain(A) - gain(B)", 0.0)],
            run: Box::new(submodularity_case),
        },
        Suite {
            name: "tie_break",
            cases: scale.cases(300),
            checks: vec![rule("greedy_single"), rule("greedy_femto"), rule("greedy_femto_us")],
            run: Box::new(tie_case),
        },
        Suite {
            name: "determinism",
            cases: scale.cases(40),
            checks: vec![rule("repeat"), rule("one thread")],
            run: Box::new(determinism_case),
        },
    ]
}

/// `value / opt`, taking 0/0 as 1.
fn ratio(value: f64, opt: f64) -> f64 {
    if opt <= TOLERANCE {
        1.0
    } else {
        value / opt
    }
}

/// Records `value / opt` and flags it when `value < b·opt`.
#[allow(clippy::too_many_arguments)]
fn check_ratio(
    log: &mut CaseLog,
    check: usize,
    b: f64,
    value: f64,
    opt: f64,
    s: &Scenario,
    caps: Option<&Capacities>,
    budget: Option<f64>,
) {
    log.record(check, ratio(value, opt));
    if value < b * opt - TOLERANCE {
        log.fail(check, format!("value {value} < {b} × optimum {opt}"), s, caps, budget);
    }
}

fn check_reported(
    log: &mut CaseLog,
    check: usize,
    r: &SolverResult,
    actual: f64,
    s: &Scenario,
    caps: Option<&Capacities>,
    budget: Option<f64>,
) {
    let err = (r.objective - actual).abs();
    log.record(check, err);
    if !(err <= TOLERANCE) {
        log.fail(
            check,
            format!("solver reported {} but the placement scores {actual}", r.objective),
            s,
            caps,
            budget,
        );
    }
}

fn solver_error(log: &mut CaseLog, check: usize, e: crate::Error, s: &Scenario, caps: Option<&Capacities>, budget: Option<f64>) {
    log.fail(check, format!("solver failed: {e}"), s, caps, budget);
}

fn greedy_single_case(solvers: &SolverSet, _case: usize, rng: &mut ChaCha8Rng) -> CaseLog {
    let mut log = CaseLog::default();
    let mut shape = InstanceShape::single(12);
    shape.cells = (1, 2);
    let s = random_scenario(&shape, rng);
    let c = rng.random_range(1..=4);
    let p = s.problem();
    let caps = Capacities::uniform_items(p.num_cells(), c);
    let opt = exhaustive_single(&p, Budget::Items(c)).expect("small instance").optimum;
    match (solvers.greedy_single)(&p, c) {
        Ok(r) => {
            let actual = schr_single(&p, &r.placement).unwrap_or(f64::NAN);
            check_ratio(&mut log, 0, E_BOUND, actual, opt, &s, Some(&caps), None);
            check_reported(&mut log, 1, &r, actual, &s, Some(&caps), None);
        }
        Err(e) => solver_error(&mut log, 0, e, &s, Some(&caps), None),
    }
    log
}

fn knapsack_case(solvers: &SolverSet, _case: usize, rng: &mut ChaCha8Rng) -> CaseLog {
    let mut log = CaseLog::default();
    let mut shape = InstanceShape::single(10);
    shape.varied_sizes = true;
    let s = random_scenario(&shape, rng);
    let budget = rng.random_range(1..=12) as f64;
    let p = s.problem();
    let opt = exhaustive_single(&p, Budget::Bytes(budget)).expect("small instance").optimum;
    let b = Some(budget);
    let fast = (solvers.fast_greedy_knapsack)(&p, budget);
    let full = (solvers.partial_enum_knapsack)(&p, budget);
    let (fast, full) = match (fast, full) {
        (Ok(f), Ok(g)) => (f, g),
        (Err(e), _) => {
            solver_error(&mut log, 0, e, &s, None, b);
            return log;
        }
        (_, Err(e)) => {
            solver_error(&mut log, 1, e, &s, None, b);
            return log;
        }
    };
    let fv = schr_single(&p, &fast.placement).unwrap_or(f64::NAN);
    let gv = schr_single(&p, &full.placement).unwrap_or(f64::NAN);
    check_ratio(&mut log, 0, 0.5 * E_BOUND, fv, opt, &s, None, b);
    check_ratio(&mut log, 1, E_BOUND, gv, opt, &s, None, b);
    log.record(2, gv - fv);
    if gv < fv - TOLERANCE {
        log.fail(2, format!("partial enumeration {gv} below fast greedy {fv}"), &s, None, b);
    }
    check_reported(&mut log, 3, &fast, fv, &s, None, b);
    check_reported(&mut log, 3, &full, gv, &s, None, b);
    log
}

fn random_caps(rng: &mut ChaCha8Rng, m: usize, max: usize) -> Capacities {
    Capacities::new((0..m).map(|_| Budget::Items(rng.random_range(1..=max))).collect())
}

fn satisfaction_shape(rng: &mut ChaCha8Rng, max_contents: usize, max_cells: usize) -> InstanceShape {
    let mut shape = InstanceShape::femto(max_contents, max_cells);
    shape.mode = UtilityMode::Satisfaction {
        u_max: if rng.random_bool(0.5) { 1.0 } else { 2.5 },
    };
    shape.variant = if rng.random_bool(0.5) {
        UtilityVariant::Distributional
    } else {
        UtilityVariant::Average
    };
    shape
}

fn femto_case(solvers: &SolverSet, _case: usize, rng: &mut ChaCha8Rng) -> CaseLog {
    let mut log = CaseLog::default();
    let mut shape = InstanceShape::femto(6, 3);
    if rng.random_bool(0.3) {
        shape.variant = UtilityVariant::PerUser;
    }
    let s = random_scenario(&shape, rng);
    let p = s.problem();
    let caps = random_caps(rng, p.num_cells(), 2);
    let opt = exhaustive_femto(&p, &caps, ObjectiveKind::Schr)
        .expect("small instance")
        .optimum;
    match (solvers.greedy_femto)(&p, &caps) {
        Ok(r) => {
            let actual = schr_femto(&p, &r.placement).unwrap_or(f64::NAN);
            check_ratio(&mut log, 0, 0.5, actual, opt, &s, Some(&caps), None);
            check_reported(&mut log, 2, &r, actual, &s, Some(&caps), None);
        }
        Err(e) => solver_error(&mut log, 0, e, &s, Some(&caps), None),
    }

    let shape = satisfaction_shape(rng, 6, 3);
    let s = random_scenario(&shape, rng);
    let p = s.problem();
    let caps = random_caps(rng, p.num_cells(), 2);
    let opt = exhaustive_femto(&p, &caps, ObjectiveKind::SchUs)
        .expect("small instance")
        .optimum;
    match (solvers.greedy_femto_us)(&p, &caps) {
        Ok(r) => {
            let actual = sch_us(&p, &r.placement).unwrap_or(f64::NAN);
            check_ratio(&mut log, 1, 0.5, actual, opt, &s, Some(&caps), None);
            check_reported(&mut log, 2, &r, actual, &s, Some(&caps), None);
        }
        Err(e) => solver_error(&mut log, 1, e, &s, Some(&caps), None),
    }
    log
}

/// One of the objective flavours, with its scenario.
enum Flavor {
    Single,
    Femto,
    Satisfaction,
}

fn flavored_scenario(rng: &mut ChaCha8Rng) -> (Flavor, Scenario) {
    match rng.random_range(0..4) {
        0 => {
            let mut shape = InstanceShape::single(8);
            shape.cells = (1, 3);
            shape.per_user_demand = rng.random_bool(0.5);
            (Flavor::Single, random_scenario(&shape, rng))
        }
        1 | 2 => {
            let mut shape = InstanceShape::femto(8, 3);
            shape.per_user_demand = rng.random_bool(0.3);
            if rng.random_bool(0.3) {
                shape.variant = UtilityVariant::PerUser;
            }
            (Flavor::Femto, random_scenario(&shape, rng))
        }
        _ => {
            let shape = satisfaction_shape(rng, 8, 3);
            (Flavor::Satisfaction, random_scenario(&shape, rng))
        }
    }
}

fn full_value(flavor: &Flavor, p: &Problem<'_>, x: &Placement) -> f64 {
    match flavor {
        Flavor::Single => schr_single(p, x),
        Flavor::Femto => schr_femto(p, x),
        Flavor::Satisfaction => sch_us(p, x),
    }
    .unwrap_or(f64::NAN)
}

fn all_items(p: &Problem<'_>) -> Vec<Item> {
    (0..p.num_contents())
        .flat_map(|k| (0..p.num_cells()).map(move |j| Item::new(k, j)))
        .collect()
}

fn gain_case(_: &SolverSet, _case: usize, rng: &mut ChaCha8Rng) -> CaseLog {
    let mut log = CaseLog::default();
    let (flavor, s) = flavored_scenario(rng);
    let p = s.problem();
    let caps = random_caps(rng, p.num_cells(), 3);
    let mut state: Box<dyn IncrementalObjective + Send> = match flavor {
        Flavor::Single => Box::new(EvalState::new(p, Form::PerCell, caps.clone()).expect("single-cache scenario")),
        Flavor::Femto => Box::new(EvalState::new(p, Form::Femto, caps.clone()).expect("valid scenario")),
        Flavor::Satisfaction => Box::new(SatisfactionState::new(p, caps.clone()).expect("satisfaction scenario")),
    };
    let mut items = all_items(&p);
    items.shuffle(rng);
    let candidate = items[0];
    let room = match caps.budget(candidate.cell.0) {
        Budget::Items(c) => c as f64,
        _ => f64::INFINITY,
    };
    let commits = rng.random_range(0..=4);
    for &item in &items[1..] {
        if state.placement().len() >= commits {
            break;
        }
        // keep a slot free for the candidate
        let keeps_room = item.cell != candidate.cell || state.placement().used(candidate.cell.0) + 1.0 < room;
        if keeps_room && state.admits(item) {
            state.commit(item).expect("admissible item");
        }
    }
    let running = (state.value() - full_value(&flavor, &p, state.placement())).abs();
    log.record(1, running);
    if !(running <= TOLERANCE) {
        log.fail(
            1,
            format!("running value off by {running} after {:?}", state.placement()),
            &s,
            Some(&caps),
            None,
        );
    }
    let gain = state.marginal_gain(candidate).expect("not stored");
    let mut next = state.placement().clone();
    next.insert(candidate, p.catalog.sizes()).expect("admissible");
    let delta = full_value(&flavor, &p, &next) - full_value(&flavor, &p, state.placement());
    let err = (gain - delta).abs();
    log.record(0, err);
    if !(err <= TOLERANCE) {
        log.fail(
            0,
            format!(
                "gain of {candidate} is {gain}, recomputed {delta}, placement {:?}",
                state.placement()
            ),
            &s,
            Some(&caps),
            None,
        );
    }
    log
}

fn submodularity_case(_: &SolverSet, _case: usize, rng: &mut ChaCha8Rng) -> CaseLog {
    let mut log = CaseLog::default();
    let (flavor, s) = flavored_scenario(rng);
    let p = s.problem();
    let sizes = p.catalog.sizes();
    let caps = Capacities::unlimited(p.num_cells());
    let items = all_items(&p);
    let c = items[rng.random_range(0..items.len())];
    let mut a = Placement::new(caps.clone());
    let mut b = Placement::new(caps.clone());
    let density = rng.random_range(0.1..0.6);
    for &item in &items {
        if item != c && rng.random_bool(density) {
            b.insert(item, sizes).expect("unlimited");
            if rng.random_bool(0.5) {
                a.insert(item, sizes).expect("unlimited");
            }
        }
    }
    let with = |x: &Placement| {
        let mut y = x.clone();
        y.insert(c, sizes).expect("unlimited");
        y
    };
    let fa = full_value(&flavor, &p, &a);
    let fb = full_value(&flavor, &p, &b);
    let ga = full_value(&flavor, &p, &with(&a)) - fa;
    let gb = full_value(&flavor, &p, &with(&b)) - fb;
    let describe = || {
        format!(
            "A = {:?}, B = {:?}, c = {c}",
            a.items().collect::<Vec<_>>(),
            b.items().collect::<Vec<_>>()
        )
    };
    log.record(0, fb - fa);
    if !(fb >= fa - TOLERANCE) {
        log.fail(0, format!("f(B) = {fb} < f(A) = {fa}; {}", describe()), &s, None, None);
    }
    log.record(1, ga - gb);
    if !(ga >= gb - TOLERANCE) {
        log.fail(1, format!("gain at A {ga} < gain at B {gb}; {}", describe()), &s, None, None);
    }
    log
}

/// Replays a greedy trace against full recomputation: each step must take
/// a best candidate, the lowest `(content, cell)` among equals, and the run
/// may only stop once nothing gains.
fn replay(p: &Problem<'_>, caps: &Capacities, trace: &[Step], eval: &dyn Fn(&Placement) -> f64) -> Result<(), String> {
    let sizes = p.catalog.sizes();
    let items = all_items(p);
    let mut placement = Placement::new(caps.clone());
    let gains = |placement: &Placement| -> Vec<(Item, f64)> {
        let base = eval(placement);
        let mut out: Vec<(Item, f64)> = items
            .iter()
            .filter(|&&i| placement.admits(i, sizes))
            .map(|&i| {
                let mut next = placement.clone();
                next.insert(i, sizes).expect("admissible");
                (i, eval(&next) - base)
            })
            .collect();
        out.sort_by_key(|x| x.0);
        out
    };
    for (n, step) in trace.iter().enumerate() {
        let g = gains(&placement);
        let best = g.iter().map(|x| x.1).fold(f64::NEG_INFINITY, f64::max);
        if !(best > TOLERANCE) {
            return Err(format!("step {n} stores {} although no candidate gains", step.item));
        }
        let Some(&(_, chosen)) = g.iter().find(|x| x.0 == step.item) else {
            return Err(format!("step {n} stores {} which is not admissible", step.item));
        };
        if chosen < best - TOLERANCE {
            return Err(format!("step {n} stores {} with gain {chosen}, best is {best}", step.item));
        }
        let first = g.iter().find(|x| x.1 >= best - TOLERANCE).expect("best exists").0;
        if first != step.item {
            return Err(format!("step {n} breaks a tie towards {} instead of {first}", step.item));
        }
        placement.insert(step.item, sizes).map_err(|e| e.to_string())?;
    }
    if let Some(&(i, v)) = gains(&placement).iter().find(|x| x.1 > TOLERANCE) {
        return Err(format!("stopped after {} steps although {i} still gains {v}", trace.len()));
    }
    Ok(())
}

/// Uniform demand and identical cells, so nearly every step is a tie.
fn tied_scenario(rng: &mut ChaCha8Rng, single: bool, mode: UtilityMode) -> Scenario {
    let k = rng.random_range(3..=6);
    let n = rng.random_range(1..=3);
    let m = if single { 1 } else { rng.random_range(1..=3) };
    let catalog = Catalog::with_unit_sizes(Demand::Shared(vec![1.0 / k as f64; k])).expect("uniform demand");
    let coverage = CoverageModel::uniform(n, m, 1.0).expect("uniform coverage");
    let u = mode.diagonal() * 0.5;
    let mut edges = Vec::new();
    if rng.random_bool(0.5) {
        // every content related to the next one, all with the same value
        edges.extend((0..k).map(|a| (a, (a + 1) % k, u)));
    }
    let utility = UtilityModel::average(k, mode, edges).expect("valid utility");
    Scenario::new(catalog, coverage, utility).expect("consistent scenario")
}

fn tie_case(solvers: &SolverSet, case: usize, rng: &mut ChaCha8Rng) -> CaseLog {
    let mut log = CaseLog::default();
    let tied = case.is_multiple_of(2);
    let sat = UtilityMode::Satisfaction { u_max: 1.0 };

    let s = if tied {
        tied_scenario(rng, true, UtilityMode::Acceptance)
    } else {
        random_scenario(&InstanceShape::single(7), rng)
    };
    let p = s.problem();
    let c = rng.random_range(1..=3);
    let caps = Capacities::uniform_items(p.num_cells(), c);
    let eval = |x: &Placement| schr_single(&p, x).unwrap_or(f64::NAN);
    run_replay(&mut log, 0, (solvers.greedy_single)(&p, c), &p, &caps, &eval, &s);

    let s = if tied {
        tied_scenario(rng, false, UtilityMode::Acceptance)
    } else {
        random_scenario(&InstanceShape::femto(6, 3), rng)
    };
    let p = s.problem();
    let caps = random_caps(rng, p.num_cells(), 2);
    let eval = |x: &Placement| schr_femto(&p, x).unwrap_or(f64::NAN);
    run_replay(&mut log, 1, (solvers.greedy_femto)(&p, &caps), &p, &caps, &eval, &s);

    let s = if tied {
        tied_scenario(rng, false, sat)
    } else {
        let shape = satisfaction_shape(rng, 6, 3);
        random_scenario(&shape, rng)
    };
    let p = s.problem();
    let caps = random_caps(rng, p.num_cells(), 2);
    let eval = |x: &Placement| sch_us(&p, x).unwrap_or(f64::NAN);
    run_replay(&mut log, 2, (solvers.greedy_femto_us)(&p, &caps), &p, &caps, &eval, &s);
    log
}

fn run_replay(
    log: &mut CaseLog,
    check: usize,
    result: crate::Result<SolverResult>,
    p: &Problem<'_>,
    caps: &Capacities,
    eval: &dyn Fn(&Placement) -> f64,
    s: &Scenario,
) {
    let outcome = result
        .map_err(|e| format!("solver failed: {e}"))
        .and_then(|r| replay(p, caps, &r.trace, eval));
    match outcome {
        Ok(()) => log.record(check, 1.0),
        Err(detail) => {
            log.record(check, 0.0);
            log.fail(check, detail, s, Some(caps), None);
        }
    }
}

type Fingerprint = (Placement, u64, Vec<(Item, u64)>);

fn fingerprint(r: crate::Result<SolverResult>) -> Option<Fingerprint> {
    r.ok().map(|r| {
        (
            r.placement,
            r.objective.to_bits(),
            r.trace.iter().map(|s| (s.item, s.gain.to_bits())).collect(),
        )
    })
}

fn determinism_case(solvers: &SolverSet, _case: usize, rng: &mut ChaCha8Rng) -> CaseLog {
    let mut log = CaseLog::default();
    let mut shape = InstanceShape::femto(30, 4);
    shape.users = (5, 30);
    let femto = random_scenario(&shape, rng);
    let mut shape = InstanceShape::single(14);
    shape.cells = (1, 3);
    shape.users = (3, 20);
    shape.varied_sizes = true;
    let single = random_scenario(&shape, rng);
    let sat = random_scenario(&satisfaction_shape(rng, 30, 4), rng);
    let c = rng.random_range(1..=4);
    let budget = rng.random_range(2..=15) as f64;

    let run_all = || -> Vec<Option<Fingerprint>> {
        let (pf, ps, pu) = (femto.problem(), single.problem(), sat.problem());
        let caps_f = Capacities::uniform_items(pf.num_cells(), c);
        let caps_u = Capacities::uniform_items(pu.num_cells(), c);
        vec![
            fingerprint((solvers.greedy_single)(&ps, c)),
            fingerprint((solvers.fast_greedy_knapsack)(&ps, budget)),
            fingerprint((solvers.partial_enum_knapsack)(&ps, budget)),
            fingerprint((solvers.greedy_femto)(&pf, &caps_f)),
            fingerprint((solvers.greedy_femto_us)(&pu, &caps_u)),
        ]
    };
    let names = [
        "greedy_single",
        "fast_greedy_knapsack",
        "partial_enum_knapsack",
        "greedy_femto",
        "greedy_femto_us",
    ];
    let scenario_of = |i: usize| match i {
        0..=2 => &single,
        3 => &femto,
        _ => &sat,
    };
    let first = run_all();
    let again = run_all();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().expect("thread pool");
    let serial = pool.install(run_all);
    for (check, other) in [(0, &again), (1, &serial)] {
        let bad = (0..names.len()).find(|&i| first[i].is_none() || first[i] != other[i]);
        log.record(check, if bad.is_none() { 1.0 } else { 0.0 });
        if let Some(i) = bad {
            let what = if first[i].is_none() {
                "failed"
            } else {
                "gave a different result"
            };
            log.fail(check, format!("{} {what}", names[i]), scenario_of(i), None, Some(budget));
        }
    }
    log
}
