//! The six stochastic genetic operators.
//!
//! Cut points are 1-based as in the usual formulation: with
//! `m = min(|c1|, |c2|)`, a cut `k` in `2..=m` keeps the first `k - 1` tokens
//! of one parent and continues from token `k` of the other.

use rand::seq::SliceRandom;
use rand::{Rng, RngCore};

use super::GeneticError;
use crate::lang::{Program, Token};

fn require_len(c: &Program, min: usize) -> Result<(), GeneticError> {
    match (min, c.len()) {
        (_, 0) => Err(GeneticError::EmptyParent),
        (min, len) if len < min => Err(GeneticError::ParentTooShort { len, min }),
        _ => Ok(()),
    }
}

fn common_len(c1: &Program, c2: &Program, min: usize) -> Result<usize, GeneticError> {
    require_len(c1, min)?;
    require_len(c2, min)?;
    Ok(c1.len().min(c2.len()))
}

/// Uniformly random permutation of the parent's tokens.
pub fn shuffle_mutation(c1: &Program, rng: &mut dyn RngCore) -> Result<Program, GeneticError> {
    require_len(c1, 1)?;
    let mut tokens = c1.tokens().to_vec();
    tokens.shuffle(rng);
    Ok(Program::new(tokens))
}

/// Each token is replaced, with probability `p_ind`, by a uniform draw from
/// the alphabet (which may redraw the same token).
pub fn uniform_mutation(
    c1: &Program,
    p_ind: f64,
    rng: &mut dyn RngCore,
) -> Result<Program, GeneticError> {
    require_len(c1, 1)?;
    let tokens = c1
        .tokens()
        .iter()
        .map(|&t| {
            if rng.random_bool(p_ind) {
                Token::ALL[rng.random_range(0..Token::COUNT)]
            } else {
                t
            }
        })
        .collect();
    Ok(Program::new(tokens))
}

/// `c1[1..k-1] ++ c2[k..]` for a uniform cut `k`; the child has `|c2|` tokens.
pub fn one_point_crossover(
    c1: &Program,
    c2: &Program,
    rng: &mut dyn RngCore,
) -> Result<Program, GeneticError> {
    let m = common_len(c1, c2, 2)?;
    let k = rng.random_range(2..=m);
    Ok(splice(&[(c1, 0, k - 1), (c2, k - 1, c2.len())]))
}

/// Swap the middle section `[k1, k2)` of `c1` for that of `c2`; the child has
/// `|c1|` tokens. Parents too short for two distinct cuts fall back to
/// [`one_point_crossover`].
pub fn two_point_crossover(
    c1: &Program,
    c2: &Program,
    rng: &mut dyn RngCore,
) -> Result<Program, GeneticError> {
    let m = common_len(c1, c2, 2)?;
    if m < 3 {
        return one_point_crossover(c1, c2, rng);
    }
    let a = rng.random_range(2..=m);
    let mut b = rng.random_range(2..m);
    if b >= a {
        b += 1;
    }
    let (k1, k2) = (a.min(b), a.max(b));
    Ok(splice(&[
        (c1, 0, k1 - 1),
        (c2, k1 - 1, k2 - 1),
        (c1, k2 - 1, c1.len()),
    ]))
}

/// Each position of `c1` takes `c2`'s token with probability `p_ind`.
/// Positions past the end of `c2` keep `c1`'s token.
pub fn uniform_crossover(
    c1: &Program,
    c2: &Program,
    p_ind: f64,
    rng: &mut dyn RngCore,
) -> Result<Program, GeneticError> {
    require_len(c1, 1)?;
    let tokens = c1
        .tokens()
        .iter()
        .enumerate()
        .map(|(i, &t)| match c2.tokens().get(i) {
            Some(&other) if rng.random_bool(p_ind) => other,
            _ => t,
        })
        .collect();
    Ok(Program::new(tokens))
}

/// Head of `c1` cut at `k1` joined to the tail of `c2` cut at an independent `k2`.
pub fn messy_crossover(
    c1: &Program,
    c2: &Program,
    rng: &mut dyn RngCore,
) -> Result<Program, GeneticError> {
    let m = common_len(c1, c2, 2)?;
    let k1 = rng.random_range(2..=m);
    let k2 = rng.random_range(2..=m);
    Ok(splice(&[(c1, 0, k1 - 1), (c2, k2 - 1, c2.len())]))
}

fn splice(parts: &[(&Program, usize, usize)]) -> Program {
    let tokens = parts
        .iter()
        .flat_map(|&(p, from, to)| p.tokens()[from..to].iter().copied())
        .collect();
    Program::new(tokens)
}
