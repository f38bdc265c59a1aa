//! Randomized and exhaustive point-count probes: the low-rank locus of a
//! pencil, singular loci of forms, and low-rank specializations in a box.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{rank_at, LinearFormMatrix};
use crate::error::{Error, Result};
use crate::finite_field::{odometer_next, ModPolynomial};
use crate::forms::IntPolynomial;
use crate::local_density::rank_mod_prime;

/// Point counts of {y : rank M[y] ≤ k} in projective space over F_p.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CodimProbe {
    pub primes: Vec<u64>,
    /// Exact or estimated projective point counts.
    pub counts: Vec<f64>,
    pub sampled: Vec<bool>,
    pub seed: u64,
    pub projective_dim_estimate: f64,
    pub codim_estimate: i64,
}

/// Least-squares slope of log(count) against log(p) over positive counts;
/// −1 when every count is zero.
pub fn growth_exponent(primes: &[u64], counts: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = primes
        .iter()
        .zip(counts)
        .filter(|(_, &c)| c > 0.0)
        .map(|(&p, &c)| ((p as f64).ln(), c.ln()))
        .collect();
    match pts.len() {
        0 => -1.0,
        1 => pts[0].1 / pts[0].0,
        n => {
            let n = n as f64;
            let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
            let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
            let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
            let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
            if sxx == 0.0 {
                my / mx
            } else {
                sxy / sxx
            }
        }
    }
}

fn matrix_mod(m: &LinearFormMatrix, y: &[u64], p: u64) -> Vec<Vec<u64>> {
    let red: Vec<Vec<Vec<u64>>> = m
        .entries
        .iter()
        .map(|row| {
            row.iter()
                .map(|e| e.iter().map(|c| crate::finite_field::reduce_big(c, p)).collect())
                .collect()
        })
        .collect();
    red.iter()
        .map(|row| {
            row.iter()
                .map(|e| e.iter().zip(y).fold(0u64, |acc, (c, v)| (acc + crate::arith::mul_mod(*c, *v, p)) % p))
                .collect()
        })
        .collect()
}

/// Count projective points of {rank M[y] ≤ max_rank} for each prime,
/// sampling uniformly when the projective space exceeds `sample_budget`.
pub fn codim_probe(
    m: &LinearFormMatrix,
    primes: &[u64],
    max_rank: usize,
    sample_budget: u64,
    seed: u64,
) -> Result<CodimProbe> {
    let h = m.num_params;
    if h == 0 {
        return Err(Error::Precondition("pencil has no parameters".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = Vec::new();
    let mut sampled = Vec::new();
    for &p in primes {
        let size = (0..h).fold(0f64, |acc, _| acc * p as f64 + 1.0);
        if size <= sample_budget as f64 {
            let mut count = 0u64;
            for lead in 0..h {
                let tail = h - lead - 1;
                let mut rest = vec![0u64; tail];
                loop {
                    let mut y = vec![0u64; h];
                    y[lead] = 1;
                    y[lead + 1..].copy_from_slice(&rest);
                    if rank_mod_prime(&matrix_mod(m, &y, p), p) <= max_rank {
                        count += 1;
                    }
                    if !odometer_next(&mut rest, p) {
                        break;
                    }
                }
            }
            counts.push(count as f64);
            sampled.push(false);
        } else {
            let mut hits = 0u64;
            let mut taken = 0u64;
            while taken < sample_budget {
                let y: Vec<u64> = (0..h).map(|_| rng.gen_range(0..p)).collect();
                if y.iter().all(|&v| v == 0) {
                    continue;
                }
                taken += 1;
                if rank_mod_prime(&matrix_mod(m, &y, p), p) <= max_rank {
                    hits += 1;
                }
            }
            counts.push(hits as f64 / taken as f64 * size);
            sampled.push(true);
        }
    }
    let dim = growth_exponent(primes, &counts);
    Ok(CodimProbe {
        primes: primes.to_vec(),
        counts,
        sampled,
        seed,
        projective_dim_estimate: dim,
        codim_estimate: (h as i64 - 1) - dim.round() as i64,
    })
}

/// Affine point counts of the singular locus {f = 0, ∇f = 0} over F_p.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingularProbe {
    pub primes: Vec<u64>,
    pub counts: Vec<u64>,
    pub slope: f64,
    /// Rounded growth exponent; −1 for an empty locus.
    pub dim_estimate: i64,
}

/// Estimate dim sing f from exhaustive counts modulo each prime.
pub fn singular_locus_dim_probe(f: &IntPolynomial, primes: &[u64], budget: u128) -> Result<SingularProbe> {
    if f.is_zero() {
        return Err(Error::Precondition("zero polynomial".into()));
    }
    let m = f.num_vars();
    let mut counts = Vec::new();
    for &p in primes {
        let size = (p as u128).checked_pow(m as u32).unwrap_or(u128::MAX);
        if size > budget {
            return Err(Error::BudgetExceeded { needed: size, budget });
        }
        let fm = ModPolynomial::new(f, p);
        let grads: Vec<ModPolynomial> = f.gradient().iter().map(|g| ModPolynomial::new(g, p)).collect();
        let mut x = vec![0u64; m];
        let mut count = 0u64;
        loop {
            if fm.eval(&x) == 0 && grads.iter().all(|g| g.eval(&x) == 0) {
                count += 1;
            }
            if !odometer_next(&mut x, p) {
                break;
            }
        }
        counts.push(count);
    }
    let fc: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
    let slope = growth_exponent(primes, &fc);
    Ok(SingularProbe { primes: primes.to_vec(), counts, slope, dim_estimate: slope.round() as i64 })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LowRankCount {
    pub count: u64,
    pub total: u64,
    /// Every point of the box has rank at most two.
    pub degenerate: bool,
}

/// Exact number of integer points x in [−R, R]^v with rank M[x] ≤ 2.
pub fn low_rank_specialization_count(m: &LinearFormMatrix, radius: i64, budget: u128) -> Result<LowRankCount> {
    let v = m.num_params;
    let side = (2 * radius + 1) as u128;
    let total = side.checked_pow(v as u32).unwrap_or(u128::MAX);
    if total > budget {
        return Err(Error::BudgetExceeded { needed: total, budget });
    }
    let mut x = vec![-radius; v];
    let mut count = 0u64;
    loop {
        if rank_at(m, &x) <= 2 {
            count += 1;
        }
        let mut i = v;
        let mut done = true;
        while i > 0 {
            i -= 1;
            if x[i] < radius {
                x[i] += 1;
                done = false;
                break;
            }
            x[i] = -radius;
        }
        if done {
            break;
        }
    }
    Ok(LowRankCount { count, total: total as u64, degenerate: count as u128 == total })
}
