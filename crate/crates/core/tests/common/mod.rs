//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::HashMap;

use neurogen::lang::{AgentMemory, CompiledProgram, LangError, LanguageConfig, Program, Token};
use neurogen::neural::{program_logprob, PolicyParameters};

/// Central finite differences of `log p(program)` over every parameter.
pub fn finite_difference_gradient(params: &PolicyParameters, program: &Program, max_len: usize, h: f64) -> Vec<f64> {
    let mut probe = params.clone();
    (0..params.len())
        .map(|i| {
            let x = params.as_slice()[i];
            probe.as_mut_slice()[i] = x + h;
            let up = program_logprob(&probe, program, max_len);
            probe.as_mut_slice()[i] = x - h;
            let down = program_logprob(&probe, program, max_len);
            probe.as_mut_slice()[i] = x;
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// `||a - b|| / max(||a||, ||b||)`.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let scale = norm(a).max(norm(b));
    if scale == 0.0 {
        0.0
    } else {
        norm(&diff) / scale
    }
}

/// Pearson chi-square statistic of observed counts against probabilities.
/// Outcomes with zero expected probability must not be observed.
pub fn chi_square(observed: &HashMap<String, usize>, expected: &HashMap<String, f64>, n: usize) -> (f64, usize) {
    for k in observed.keys() {
        assert!(
            expected.get(k).copied().unwrap_or(0.0) > 0.0,
            "observed outcome {k:?} has zero probability"
        );
    }
    let mut stat = 0.0;
    let mut cells: usize = 0;
    for (k, &p) in expected {
        if p <= 0.0 {
            continue;
        }
        let e = p * n as f64;
        let o = *observed.get(k).unwrap_or(&0) as f64;
        stat += (o - e) * (o - e) / e;
        cells += 1;
    }
    (stat, cells.saturating_sub(1))
}

/// Upper critical value of the chi-square distribution.
pub fn chi_square_critical(dof: usize, significance: f64) -> f64 {
    use statrs::distribution::{ChiSquared, ContinuousCDF};
    ChiSquared::new(dof.max(1) as f64).unwrap().inverse_cdf(1.0 - significance)
}

/// Chi-square goodness-of-fit at the given significance; returns (passed, stat, critical).
pub fn chi_square_test(
    observed: &HashMap<String, usize>,
    expected: &HashMap<String, f64>,
    n: usize,
    significance: f64,
) -> (bool, f64, f64) {
    let (stat, dof) = chi_square(observed, expected, n);
    if dof == 0 {
        // A single possible outcome: every draw must hit it.
        return (observed.values().sum::<usize>() == n, stat, 0.0);
    }
    let crit = chi_square_critical(dof, significance);
    (stat <= crit, stat, crit)
}

/// Action trace of a program fed a fixed observation stream; `None` marks
/// an exhausted budget, after which the trace stops.
pub fn action_trace(program: &Program, obs_stream: &[Vec<u8>], cfg: &LanguageConfig) -> Vec<Option<u8>> {
    let compiled = CompiledProgram::new(program);
    let mut mem = AgentMemory::new(cfg.tape_len);
    let mut out = Vec::with_capacity(obs_stream.len());
    for obs in obs_stream {
        match compiled.step(&mut mem, obs, cfg) {
            Ok(a) => out.push(Some(a)),
            Err(LangError::BudgetExhausted { .. }) => {
                out.push(None);
                break;
            }
            Err(e) => panic!("{e}"),
        }
    }
    out
}

pub fn program_from_indices(ix: &[usize]) -> Program {
    Program::new(ix.iter().map(|&i| Token::ALL[i]).collect())
}

// ---- closed-form operator distributions, by enumeration ----------------

fn add(dist: &mut HashMap<String, f64>, child: Vec<Token>, p: f64) {
    *dist.entry(Program::new(child).to_string()).or_default() += p;
}

/// Every permutation of the parent, each with weight 1/n!.
pub fn shuffle_distribution(c1: &Program) -> HashMap<String, f64> {
    fn perms(rest: &mut Vec<Token>, acc: &mut Vec<Token>, out: &mut Vec<Vec<Token>>) {
        if rest.is_empty() {
            out.push(acc.clone());
            return;
        }
        for i in 0..rest.len() {
            let t = rest.remove(i);
            acc.push(t);
            perms(rest, acc, out);
            acc.pop();
            rest.insert(i, t);
        }
    }
    let mut all = Vec::new();
    perms(&mut c1.tokens().to_vec(), &mut Vec::new(), &mut all);
    let w = 1.0 / all.len() as f64;
    let mut dist = HashMap::new();
    for p in all {
        add(&mut dist, p, w);
    }
    dist
}

/// Product over positions of `p_ind/|L| + (1 - p_ind)[same]`, enumerated over
/// every same-length string.
pub fn uniform_mutation_distribution(c1: &Program, p_ind: f64) -> HashMap<String, f64> {
    let n = c1.len();
    let l = Token::COUNT;
    let mut dist = HashMap::new();
    let mut idx = vec![0usize; n];
    loop {
        let child: Vec<Token> = idx.iter().map(|&i| Token::ALL[i]).collect();
        let p: f64 = child
            .iter()
            .zip(c1.tokens())
            .map(|(c, o)| p_ind / l as f64 + (1.0 - p_ind) * f64::from(u8::from(c == o)))
            .product();
        if p > 0.0 {
            add(&mut dist, child, p);
        }
        let mut k = 0;
        loop {
            if k == n {
                return dist;
            }
            idx[k] += 1;
            if idx[k] < l {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

fn m(c1: &Program, c2: &Program) -> usize {
    c1.len().min(c2.len())
}

/// Uniform cut `k` in `2..=m`: `c1[1..k-1] ++ c2[k..]`.
pub fn one_point_distribution(c1: &Program, c2: &Program) -> HashMap<String, f64> {
    let mm = m(c1, c2);
    let mut dist = HashMap::new();
    for k in 2..=mm {
        let mut child = c1.tokens()[..k - 1].to_vec();
        child.extend_from_slice(&c2.tokens()[k - 1..]);
        add(&mut dist, child, 1.0 / (mm - 1) as f64);
    }
    dist
}

/// Uniform pair `2 <= k1 < k2 <= m`, weight `2 / ((m-2)(m-1))`.
pub fn two_point_distribution(c1: &Program, c2: &Program) -> HashMap<String, f64> {
    let mm = m(c1, c2);
    let w = 2.0 / ((mm - 2) * (mm - 1)) as f64;
    let mut dist = HashMap::new();
    for k1 in 2..mm {
        for k2 in k1 + 1..=mm {
            let mut child = c1.tokens()[..k1 - 1].to_vec();
            child.extend_from_slice(&c2.tokens()[k1 - 1..k2 - 1]);
            child.extend_from_slice(&c1.tokens()[k2 - 1..]);
            add(&mut dist, child, w);
        }
    }
    dist
}

/// Per position: `p_ind [c2's token] + (1 - p_ind) [c1's token]`.
pub fn uniform_crossover_distribution(c1: &Program, c2: &Program, p_ind: f64) -> HashMap<String, f64> {
    let n = c1.len();
    let mut dist = HashMap::new();
    for mask in 0u32..(1 << n) {
        let mut p = 1.0;
        let mut child = Vec::with_capacity(n);
        for i in 0..n {
            let take = mask & (1 << i) != 0;
            match (take, c2.tokens().get(i)) {
                (true, Some(&t)) => {
                    p *= p_ind;
                    child.push(t);
                }
                (true, None) => p = 0.0,
                (false, Some(_)) => {
                    p *= 1.0 - p_ind;
                    child.push(c1.tokens()[i]);
                }
                (false, None) => child.push(c1.tokens()[i]),
            }
        }
        if p > 0.0 {
            add(&mut dist, child, p);
        }
    }
    dist
}

/// Independent cuts `k1, k2` in `2..=m`, weight `1/(m-1)^2`.
pub fn messy_distribution(c1: &Program, c2: &Program) -> HashMap<String, f64> {
    let mm = m(c1, c2);
    let w = 1.0 / ((mm - 1) * (mm - 1)) as f64;
    let mut dist = HashMap::new();
    for k1 in 2..=mm {
        for k2 in 2..=mm {
            let mut child = c1.tokens()[..k1 - 1].to_vec();
            child.extend_from_slice(&c2.tokens()[k2 - 1..]);
            add(&mut dist, child, w);
        }
    }
    dist
}

/// Chi-square test with sparse outcomes pooled: cells expecting fewer than
/// five draws are merged into one cell.
pub fn chi_square_pooled(
    observed: &HashMap<String, usize>,
    expected: &HashMap<String, f64>,
    n: usize,
    significance: f64,
) -> (bool, f64, f64) {
    for k in observed.keys() {
        assert!(
            expected.get(k).copied().unwrap_or(0.0) > 0.0,
            "observed outcome {k:?} has zero probability"
        );
    }
    let (mut obs, mut exp) = (HashMap::new(), HashMap::new());
    for (k, &p) in expected {
        let key = if p * n as f64 >= 5.0 { k.clone() } else { "<pooled>".to_string() };
        *exp.entry(key.clone()).or_insert(0.0) += p;
        *obs.entry(key).or_insert(0) += observed.get(k).copied().unwrap_or(0);
    }
    chi_square_test(&obs, &exp, n, significance)
}
