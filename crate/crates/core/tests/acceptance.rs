//! Acceptance suite. Prints one PASS/FAIL line per criterion.
//!
//! Criteria 7 to 9 are end-to-end searches whose outcome depends on how far
//! the search gets in its budget. They are reported but only fail the target
//! when `NEUROGEN_STRICT_ACCEPTANCE=1`. Set `NEUROGEN_SKIP_SYNTHESIS=1` to
//! skip them entirely.

mod common;

use std::collections::HashMap;
use std::process::ExitCode;
use std::time::Instant;

use common::{
    action_trace, chi_square_pooled, chi_square_test, finite_difference_gradient, messy_distribution,
    one_point_distribution, relative_error, shuffle_distribution, two_point_distribution,
    uniform_crossover_distribution, uniform_mutation_distribution,
};
use neurogen::codebase::{Codebase, ScoredEntry};
use neurogen::genetic::{
    messy_crossover, one_point_crossover, shuffle_mutation, two_point_crossover, uniform_crossover,
    uniform_mutation, BanditState, OperatorId,
};
use neurogen::lang::{prune, tokenize, LanguageConfig, Program, Token};
use neurogen::neural::{logprob_gradient, PolicyParameters};
use neurogen::pomdp::{eval_program, make_env, Action, CartPole, Environment, MountainCarContinuous};
use neurogen::scrum::{
    final_scoring, instant_scrum, should_stop, t_small, Developer, Proposal, RunConfig, ScoringConfig,
    StopReason, StoppingConfig, Team,
};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn tally(n: usize, mut draw: impl FnMut() -> Program) -> HashMap<String, usize> {
    let mut counts = HashMap::new();
    for _ in 0..n {
        *counts.entry(draw().to_string()).or_insert(0) += 1;
    }
    counts
}

fn operator_conformance() -> Verdict {
    const N: usize = 10_000;
    let c1 = tokenize("+-<>e");
    let c2 = tokenize("0123");
    let short = tokenize("+a");
    let p_ind = 0.3;
    let mut r = rng(101);
    type Case<'a> = (&'a str, HashMap<String, f64>, Box<dyn FnMut(&mut ChaCha8Rng) -> Program + 'a>);
    let cases: Vec<Case> = vec![
        ("shuffle", shuffle_distribution(&c1), Box::new(|r| shuffle_mutation(&c1, r).unwrap())),
        (
            "uniform_mutation",
            uniform_mutation_distribution(&short, p_ind),
            Box::new(|r| uniform_mutation(&short, p_ind, r).unwrap()),
        ),
        ("one_point", one_point_distribution(&c1, &c2), Box::new(|r| one_point_crossover(&c1, &c2, r).unwrap())),
        ("two_point", two_point_distribution(&c1, &c2), Box::new(|r| two_point_crossover(&c1, &c2, r).unwrap())),
        (
            "uniform_cx",
            uniform_crossover_distribution(&c1, &c2, p_ind),
            Box::new(|r| uniform_crossover(&c1, &c2, p_ind, r).unwrap()),
        ),
        ("messy", messy_distribution(&c1, &c2), Box::new(|r| messy_crossover(&c1, &c2, r).unwrap())),
    ];
    let mut all = true;
    let mut parts = Vec::new();
    for (name, expected, mut draw) in cases {
        let observed = tally(N, || draw(&mut r));
        let (ok, stat, crit) = chi_square_pooled(&observed, &expected, N, 0.01);
        all &= ok;
        parts.push(format!("{name} {stat:.1}/{crit:.1}"));
    }
    verdict(all, format!("chi2/critical at 0.01: {}", parts.join(", ")))
}

fn reached(n: usize, target: &str, mut draw: impl FnMut() -> Program) -> bool {
    (0..n).any(|_| draw().to_string() == target)
}

fn worked_examples() -> Verdict {
    let c1 = tokenize("ae>>>>>34+");
    let c2 = tokenize("a[e>-a-]b[e>>-b-]");
    let mut r = rng(202);
    let mut rows = Vec::new();
    rows.push(("shuffle", reached(2_000_000, ">>4+>3>e>a", || shuffle_mutation(&c1, &mut r).unwrap())));
    // The reference mutation "ae@>!>>35+" uses two symbols outside the
    // alphabet; its shape is tokens 2, 4 and 8 redrawn with `!` at 4.
    let shape = |c: &Program| {
        let t = c.tokens();
        let changed: Vec<usize> = (0..10).filter(|&i| t[i] != c1.tokens()[i]).collect();
        changed == [2, 4, 8] && t[4] == Token::Act
    };
    rows.push((
        "uniform_mutation",
        (0..2_000_000).any(|_| shape(&uniform_mutation(&c1, 0.5, &mut r).unwrap())),
    ));
    rows.push(("one_point", reached(10_000, "ae>>>>-]b[e>>-b-]", || one_point_crossover(&c1, &c2, &mut r).unwrap())));
    rows.push(("two_point", reached(10_000, "ae>>-a-34+", || two_point_crossover(&c1, &c2, &mut r).unwrap())));
    rows.push(("uniform_cx", reached(100_000, "aee>->>3b+", || uniform_crossover(&c1, &c2, 0.5, &mut r).unwrap())));
    rows.push(("messy", reached(10_000, "ae>>>>e>-a-]b[e>>-b-]", || messy_crossover(&c1, &c2, &mut r).unwrap())));
    let pruned = prune(&c1).to_string();
    rows.push(("prune", pruned == "e>>>>>4+"));
    let pass = rows.iter().all(|r| r.1);
    let detail = rows
        .iter()
        .map(|(n, ok)| format!("{n}={}", if *ok { "reached" } else { "MISSING" }))
        .collect::<Vec<_>>()
        .join(", ");
    verdict(pass, format!("{detail}; prune -> {pruned}"))
}

fn random_program(r: &mut impl Rng, max_len: usize) -> Program {
    let len = r.random_range(1..=max_len);
    Program::new((0..len).map(|_| Token::ALL[r.random_range(0..Token::COUNT)]).collect())
}

fn pruning_soundness() -> Verdict {
    let mut r = rng(303);
    let cfg = LanguageConfig::default().with_obs_cells(4);
    let mut violations = 0;
    for _ in 0..1000 {
        let program = random_program(&mut r, 40);
        let pruned = prune(&program);
        for _ in 0..50 {
            let stream: Vec<Vec<u8>> = (0..100).map(|_| (0..4).map(|_| r.random()).collect()).collect();
            if action_trace(&program, &stream, &cfg) != action_trace(&pruned, &stream, &cfg) {
                violations += 1;
            }
        }
    }
    verdict(violations == 0, format!("{violations} violations in 50000 traces"))
}

fn gradient_check() -> Verdict {
    let mut r = rng(404);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let mut params = PolicyParameters::new(&[4], &mut r).unwrap();
        for v in params.output_weights_mut() {
            *v = r.random_range(-1.0..1.0);
        }
        let program = random_program(&mut r, 8);
        let (_, grad) = logprob_gradient(&params, &program, 20);
        let fd = finite_difference_gradient(&params, &program, 20, 1e-5);
        worst = worst.max(relative_error(&grad, &fd));
    }
    verdict(worst <= 1e-4, format!("worst relative error {worst:.2e} (limit 1e-4)"))
}

fn bandit_convergence() -> Verdict {
    let mut r = rng(505);
    let mut correct = 0;
    for _ in 0..20 {
        let mut means: Vec<f64> = (0..7).map(|i| 0.5 * f64::from(i)).collect();
        for i in (1..7).rev() {
            means.swap(i, r.random_range(0..=i));
        }
        let best = (0..7).max_by(|&a, &b| means[a].total_cmp(&means[b])).unwrap();
        let mut bandit = BanditState::new(0.2);
        for _ in 0..10_000 {
            let op = bandit.sample_operator(&mut r);
            let reward = Normal::new(means[op.index()], 1.0).unwrap().sample(&mut r);
            bandit.update(op, reward);
        }
        correct += usize::from(bandit.greedy() == OperatorId::ALL[best]);
    }
    verdict(correct >= 19, format!("greedy arm correct in {correct}/20 trials"))
}

fn entry(program: &str, reward: f64) -> ScoredEntry {
    ScoredEntry {
        program: tokenize(program),
        reward,
        author: "test".into(),
        operator: None,
        sprint: 0,
        aborted: false,
    }
}

fn quality_sampling() -> Verdict {
    // Rewards large enough that exp(reward) overflows without a shift.
    let samples: [(&str, &[f64]); 5] = [
        ("+", &[800.0, 801.0]),
        ("-", &[799.5]),
        (">", &[798.0, 802.0, 800.0]),
        ("<", &[797.0]),
        ("e0d", &[801.5, 796.0]),
    ];
    let cb = Codebase::from_entries(
        samples
            .iter()
            .flat_map(|(p, rs)| rs.iter().map(move |&r| entry(p, r))),
    )
    .unwrap();
    // Oracle: Q_i proportional to the mean of exp(r - 802) over the samples.
    let q: Vec<f64> = samples
        .iter()
        .map(|(_, rs)| rs.iter().map(|r| (r - 802.0).exp()).sum::<f64>() / rs.len() as f64)
        .collect();
    let total: f64 = q.iter().sum();
    let expected: HashMap<String, f64> = samples
        .iter()
        .zip(&q)
        .map(|((p, _), qi)| (tokenize(p).to_string(), qi / total))
        .collect();
    const N: usize = 10_000;
    let mut r = rng(606);
    let observed = tally(N, || cb.sample_quality_weighted(&mut r).unwrap().clone());
    let (fit, stat, crit) = chi_square_test(&observed, &expected, N, 0.01);
    let base = cb.quality_probabilities(cb.shift());
    let max_dev = [-50.0, 3.0, 40.0, 700.0]
        .iter()
        .flat_map(|d| {
            let other = cb.quality_probabilities(cb.shift() + d);
            base.iter().zip(other).map(|(a, b)| (a - b).abs()).collect::<Vec<_>>()
        })
        .fold(0.0, f64::max);
    verdict(
        fit && max_dev <= 1e-12,
        format!("chi2 {stat:.2} (critical {crit:.2}); max probability change over shifts {max_dev:.1e}"),
    )
}

struct SearchResult {
    best: f64,
    program: Program,
    sprints: u64,
    stop: StopReason,
}

/// T_small from an empty codebase, then final scoring of the top programs.
fn synthesize(env_name: &str, cfg: RunConfig, seed: u64) -> SearchResult {
    let mut r = rng(seed);
    let mut env = make_env(env_name).unwrap();
    let mut team = Team::from_specs(&t_small(), env.spec(), &Default::default(), &mut r).unwrap();
    let mut cb = Codebase::new();
    let outcome = instant_scrum(&mut team, &mut cb, env.as_mut(), &cfg, &mut r).unwrap();
    let report = final_scoring(&mut cb, env.as_mut(), &cfg.language, ScoringConfig::default(), &mut r).unwrap();
    let best = report.best().unwrap();
    SearchResult {
        best: best.mean_reward,
        program: best.program.clone(),
        sprints: outcome.log.sprints(),
        stop: outcome.stop,
    }
}

fn three_seeds(env_name: &str, cfg: RunConfig, threshold: f64) -> Verdict {
    let results: Vec<SearchResult> = std::thread::scope(|s| {
        let handles: Vec<_> = (1..=3u64).map(|seed| s.spawn(move || synthesize(env_name, cfg, seed))).collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    let hits = results.iter().filter(|r| r.best >= threshold).count();
    let detail = results
        .iter()
        .enumerate()
        .map(|(i, r)| format!("seed {}: {:.2} after {} sprints ({:?}) `{}`", i + 1, r.best, r.sprints, r.stop, r.program))
        .collect::<Vec<_>>()
        .join("; ");
    verdict(hits >= 1, format!("{hits}/3 seeds >= {threshold}; {detail}"))
}

fn search_config(n_max: u64) -> RunConfig {
    RunConfig {
        stopping: Some(StoppingConfig::default()),
        time_limit: Some(3600.0),
        ..RunConfig::new(n_max)
    }
}

fn cartpole_synthesis() -> Verdict {
    three_seeds("cartpole", search_config(20_000), 60.0)
}

fn mountaincar_synthesis() -> Verdict {
    three_seeds("mountaincar", search_config(50_000), 80.0)
}

fn taxi_desk_scale() -> Verdict {
    const SPRINTS: u64 = 10_000;
    let lang = LanguageConfig::default();
    let searched = synthesize("taxi", RunConfig::new(SPRINTS), 1);

    // Baseline: the same number of one-episode evaluations spent on uniformly
    // random programs, then the same final scoring.
    let mut r = rng(909);
    let mut env = make_env("taxi").unwrap();
    let mut cb = Codebase::new();
    for _ in 0..SPRINTS {
        let program = random_program(&mut r, 20);
        let ep = eval_program(&program, env.as_mut(), &lang, &mut r);
        cb.record(ScoredEntry {
            program,
            reward: ep.total_reward,
            author: "random".into(),
            operator: None,
            sprint: 0,
            aborted: ep.aborted,
        })
        .unwrap();
    }
    let baseline = final_scoring(&mut cb, env.as_mut(), &lang, ScoringConfig::default(), &mut r)
        .unwrap()
        .best()
        .unwrap()
        .mean_reward;

    let idle: Vec<f64> = (0..100)
        .map(|_| eval_program(&Program::empty(), env.as_mut(), &lang, &mut r).total_reward)
        .collect();
    let idle_exact = idle.iter().all(|&x| x == -200.0);
    verdict(
        searched.best > baseline && idle_exact,
        format!(
            "search best {:.2} `{}` vs random-program best {baseline:.2}; empty program scores {} (exactly -200: {idle_exact})",
            searched.best, searched.program, idle[0]
        ),
    )
}

fn dynamics_oracles() -> Verdict {
    // Cart-pole from rest, pushed right with force 10.
    let (g, m_cart, m_pole, half_len, force, dt) = (9.8, 1.0, 0.1, 0.5, 10.0, 0.02);
    let total = m_cart + m_pole;
    let temp = force / total;
    let theta_acc = (g * 0.0 - 1.0 * temp) / (half_len * (4.0 / 3.0 - m_pole / total));
    let x_acc = temp - m_pole * half_len * theta_acc / total;

    let mut cp = CartPole::new();
    cp.reset(&mut rng(0));
    cp.set_state([0.0; 4]);
    cp.step(Action::Discrete(1)).unwrap();
    let s = cp.state();
    let got_x_acc = s[1] / dt;
    let got_theta_acc = s[3] / dt;
    let got_temp = got_x_acc + m_pole * half_len * got_theta_acc / total;
    let cp_err = [
        (got_temp - temp).abs(),
        (got_theta_acc - theta_acc).abs(),
        (got_x_acc - x_acc).abs(),
        s[0].abs(),
        s[2].abs(),
    ]
    .into_iter()
    .fold(0.0, f64::max);

    let mut mc = MountainCarContinuous::new();
    mc.reset(&mut rng(0));
    mc.set_state(-0.5, 0.0);
    mc.step(Action::Continuous(0.0)).unwrap();
    let v_oracle = -0.0025 * (3.0f64 * -0.5).cos();
    let mc_err = (mc.state().1 - v_oracle).abs();

    verdict(
        cp_err <= 1e-9 && mc_err <= 1e-9,
        format!(
            "cartpole temp {got_temp:.4} theta_acc {got_theta_acc:.3} x_acc {got_x_acc:.4} (max err {cp_err:.1e}); \
             mountain car v {:.4e} (err {mc_err:.1e})",
            mc.state().1
        ),
    )
}

struct Scripted {
    id: String,
    program: Program,
}

impl Developer for Scripted {
    fn id(&self) -> &str {
        &self.id
    }
    fn propose(&mut self, _cb: &Codebase, _rng: &mut dyn RngCore) -> Option<Proposal> {
        Some(Proposal::new(self.program.clone()))
    }
    fn update(&mut self, _p: &Proposal, _r: f64, _cb: &Codebase) {}
}

fn loop_fidelity() -> Verdict {
    let ids = ["alpha", "beta", "gamma", "delta"];
    let members: Vec<Box<dyn Developer>> = ids
        .iter()
        .zip(["+", "-", "e1", "e0d[-e+d]"])
        .map(|(id, p)| Box::new(Scripted { id: id.to_string(), program: tokenize(p) }) as Box<dyn Developer>)
        .collect();
    let mut team = Team::new(members).unwrap();
    let mut env = CartPole::new();
    let mut cb = Codebase::new();
    let n_max = 4 * 25 + 2;
    let out = instant_scrum(&mut team, &mut cb, &mut env, &RunConfig::new(n_max), &mut rng(1111)).unwrap();
    let order_ok = out
        .log
        .records
        .iter()
        .enumerate()
        .all(|(i, rec)| rec.developer == ids[i % 4] && rec.sprint == i as u64 + 1);
    let count_ok = out.log.sprints() == n_max && cb.len() as u64 == n_max && out.stop == StopReason::Budget;

    let (window, patience) = (200, 300);
    let constant = vec![17.0; window + patience];
    let fires_on_time =
        should_stop(&constant, window, patience) && !should_stop(&constant[..window + patience - 1], window, patience);
    let increasing: Vec<f64> = (0..20 * (window + patience)).map(|i| i as f64 * 1e-3).collect();
    let quiet_on_rise = !should_stop(&increasing, window, patience);

    verdict(
        order_ok && count_ok && fires_on_time && quiet_on_rise,
        format!(
            "round-robin {order_ok}, N = n_max = {n_max} {count_ok}, constant stream stops exactly at window+patience {fires_on_time}, \
             increasing stream never stops {quiet_on_rise}"
        ),
    )
}

fn main() -> ExitCode {
    let strict = std::env::var("NEUROGEN_STRICT_ACCEPTANCE").is_ok_and(|v| v == "1");
    let skip_synthesis = std::env::var("NEUROGEN_SKIP_SYNTHESIS").is_ok_and(|v| v == "1");
    type Criterion = (u8, &'static str, fn() -> Verdict, bool);
    let criteria: [Criterion; 11] = [
        (1, "operator distribution conformance", operator_conformance, false),
        (2, "worked operator examples reachable", worked_examples, false),
        (3, "pruning soundness", pruning_soundness, false),
        (4, "policy gradient check", gradient_check, false),
        (5, "bandit convergence", bandit_convergence, false),
        (6, "quality sampling", quality_sampling, false),
        (7, "cartpole synthesis", cartpole_synthesis, true),
        (8, "mountain car synthesis", mountaincar_synthesis, true),
        (9, "taxi at desk scale", taxi_desk_scale, true),
        (10, "dynamics oracles", dynamics_oracles, false),
        (11, "scrum loop fidelity", loop_fidelity, false),
    ];
    let mut blocking_failures = 0;
    for (n, name, run, synthesis) in criteria {
        if synthesis && skip_synthesis {
            println!("criterion {n:>2} {name}: SKIP (NEUROGEN_SKIP_SYNTHESIS=1)");
            continue;
        }
        let started = Instant::now();
        let v = run();
        let status = if v.pass { "PASS" } else { "FAIL" };
        println!(
            "criterion {n:>2} {name}: {status} [{:.1}s] {}",
            started.elapsed().as_secs_f64(),
            v.detail
        );
        if !v.pass && (!synthesis || strict) {
            blocking_failures += 1;
        }
    }
    if blocking_failures > 0 {
        println!("{blocking_failures} blocking criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
