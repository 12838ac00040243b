//! Convergence diagnostics across chains: split R̂ and effective sample size.
//!
//! Both take one slice of draws per chain for a single scalar quantity.
//! Zero-variance inputs yield `NaN` (undefined); chains stuck at distinct
//! constants yield `+∞` for R̂.

use crate::error::{Error, Result};
use crate::stats::mean;

fn check(chains: &[&[f64]]) -> Result<usize> {
    if chains.len() < 2 {
        return Err(Error::Precondition(format!("need at least 2 chains, got {}", chains.len())));
    }
    let n = chains[0].len();
    if n < 4 || chains.iter().any(|c| c.len() != n) {
        return Err(Error::Precondition("need at least 4 draws per chain, equal across chains".into()));
    }
    Ok(n)
}

/// Between- and within-chain variances `(B/n, W)` of a set of equal-length chains.
fn variance_components(chains: &[&[f64]]) -> (f64, f64) {
    let m = chains.len() as f64;
    let means: Vec<f64> = chains.iter().map(|c| mean(c)).collect();
    let grand = mean(&means);
    let b_over_n = means.iter().map(|x| (x - grand).powi(2)).sum::<f64>() / (m - 1.0);
    let w = chains
        .iter()
        .zip(&means)
        .map(|(c, mu)| c.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / (c.len() as f64 - 1.0))
        .sum::<f64>()
        / m;
    (b_over_n, w)
}

/// Split R̂: each chain is halved and the classic potential scale reduction
/// factor is computed over the halves.
pub fn split_rhat(chains: &[&[f64]]) -> Result<f64> {
    let n = check(chains)?;
    let half = n / 2;
    let halves: Vec<&[f64]> = chains.iter().flat_map(|c| [&c[..half], &c[n - half..]]).collect();
    let (b_over_n, w) = variance_components(&halves);
    if w == 0.0 {
        return Ok(if b_over_n > 0.0 { f64::INFINITY } else { f64::NAN });
    }
    let nh = half as f64;
    let var_plus = (nh - 1.0) / nh * w + b_over_n;
    Ok((var_plus / w).sqrt())
}

/// Multi-chain effective sample size. Autocorrelations are combined across
/// chains and summed in adjacent pairs until the first negative pair.
pub fn effective_sample_size(chains: &[&[f64]]) -> Result<f64> {
    let n = check(chains)?;
    let m = chains.len();
    let (b_over_n, w) = variance_components(chains);
    let nf = n as f64;
    let var_plus = (nf - 1.0) / nf * w + b_over_n;
    if !(var_plus > 0.0) || w == 0.0 {
        return Ok(f64::NAN);
    }
    let centered: Vec<Vec<f64>> = chains
        .iter()
        .map(|c| {
            let mu = mean(c);
            c.iter().map(|x| x - mu).collect()
        })
        .collect();
    // mean over chains of the biased lag-t autocovariance
    let acov = |t: usize| -> f64 {
        centered
            .iter()
            .map(|c| c[..n - t].iter().zip(&c[t..]).map(|(a, b)| a * b).sum::<f64>() / nf)
            .sum::<f64>()
            / m as f64
    };
    let rho = |t: usize| 1.0 - (w - acov(t)) / var_plus;

    let mut tau = -1.0;
    let mut t = 0;
    while t + 1 < n {
        let pair = if t == 0 { 1.0 + rho(1) } else { rho(t) + rho(t + 1) };
        if pair < 0.0 {
            break;
        }
        tau += 2.0 * pair;
        t += 2;
    }
    let total = (m * n) as f64;
    // cap at log10(N)·N, the usual guard against antithetic blow-ups
    Ok((total / tau).min(total * total.log10()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};

    fn iid_chains(m: usize, n: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..m).map(|_| (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()).collect()
    }

    fn refs(c: &[Vec<f64>]) -> Vec<&[f64]> {
        c.iter().map(|v| v.as_slice()).collect()
    }

    #[test]
    fn iid_rhat_near_one() {
        for seed in 0..5 {
            let c = iid_chains(4, 1000, seed);
            let r = split_rhat(&refs(&c)).unwrap();
            assert!((0.99..=1.02).contains(&r), "seed {seed}: {r}");
        }
    }

    #[test]
    fn iid_ess_near_total() {
        for seed in 0..5 {
            let c = iid_chains(4, 1000, 100 + seed);
            let e = effective_sample_size(&refs(&c)).unwrap();
            assert!((e - 4000.0).abs() < 0.15 * 4000.0, "seed {seed}: {e}");
        }
    }

    #[test]
    fn disjoint_constant_chains_give_infinite_rhat() {
        let a = vec![1.0; 10];
        let b = vec![2.0; 10];
        assert_eq!(split_rhat(&[&a, &b]).unwrap(), f64::INFINITY);
        assert!(split_rhat(&[&a, &a]).unwrap().is_nan());
        assert!(effective_sample_size(&[&a, &a]).unwrap().is_nan());
    }

    #[test]
    fn autocorrelated_chain_has_smaller_ess() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let chains: Vec<Vec<f64>> = (0..4)
            .map(|_| {
                let mut x = 0.0;
                (0..2000)
                    .map(|_| {
                        let e: f64 = StandardNormal.sample(&mut rng);
                        x = 0.9 * x + e;
                        x
                    })
                    .collect()
            })
            .collect();
        let e = effective_sample_size(&refs(&chains)).unwrap();
        // AR(1) with φ = 0.9: N(1−φ)/(1+φ) ≈ 421
        assert!(e > 300.0 && e < 600.0, "{e}");
    }

    #[test]
    fn preconditions() {
        let a = vec![1.0, 2.0, 3.0];
        assert!(split_rhat(&[&a]).is_err());
        assert!(split_rhat(&[&a, &a]).is_err());
    }
}
