//! Shannon entropy in bits, the skew bound relating entropy deficit to the
//! largest atom, and an exhaustive audit of the random-order reveal process
//! over the cycle-factors of small digraphs.

use std::collections::HashMap;

use num_bigint::BigUint;
use rand::Rng;
use rand_distr::Exp1;
use serde::Serialize;
use thiserror::Error;

use crate::graph::{CycleFactor, RegularDigraph};
use crate::oracle::{entropy_loss_from_count, enumerate_cycle_factors, OracleError};

/// Allowed deviation of a distribution's total mass from 1.
pub const MASS_TOLERANCE: f64 = 1e-12;
/// Float slack for inequalities that hold exactly over the reals.
pub const SLACK: f64 = 1e-9;
/// Largest `n` accepted by [`reveal_audit`].
pub const REVEAL_MAX_N: usize = 6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EntropyError {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("probability {0} outside [0, 1]")]
    OutOfRange(f64),
    #[error("reveal audit needs n <= {REVEAL_MAX_N}, got {0}")]
    SizeLimitExceeded(usize),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

/// A probability vector over a finite set of size `s = probs.len()`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Distribution {
    probs: Vec<f64>,
}

impl Distribution {
    pub fn new(probs: Vec<f64>) -> Result<Self, EntropyError> {
        if probs.is_empty() {
            return Err(EntropyError::InvalidDistribution("empty support".into()));
        }
        if let Some(p) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(EntropyError::InvalidDistribution(format!(
                "negative or non-finite mass {p}"
            )));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(EntropyError::InvalidDistribution(format!(
                "mass sums to {total}"
            )));
        }
        Ok(Self { probs })
    }

    pub fn uniform(s: usize) -> Self {
        Self {
            probs: vec![1.0 / s as f64; s],
        }
    }

    /// Uniform random point of the simplex (normalised exponentials).
    pub fn random<R: Rng + ?Sized>(s: usize, rng: &mut R) -> Self {
        let raw: Vec<f64> = (0..s).map(|_| rng.sample::<f64, _>(Exp1)).collect();
        let total: f64 = raw.iter().sum();
        Self {
            probs: raw.into_iter().map(|x| x / total).collect(),
        }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn support_size(&self) -> usize {
        self.probs.len()
    }
}

/// `-sum p log2 p` over the positive entries.
pub fn entropy_of(probs: &[f64]) -> f64 {
    -probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| p * p.log2())
        .sum::<f64>()
}

pub fn shannon_entropy(dist: &Distribution) -> f64 {
    entropy_of(&dist.probs)
}

pub fn binary_entropy(p: f64) -> Result<f64, EntropyError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(EntropyError::OutOfRange(p));
    }
    Ok(entropy_of(&[p, 1.0 - p]))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SkewVerdict {
    pub max_p: f64,
    /// Entropy deficit `log2 s - H(X)`.
    pub ell: f64,
    /// `2/s + ell`.
    pub bound: f64,
    pub holds: bool,
}

/// Checks that no atom exceeds `2/s + (log2 s - H(X))`.
pub fn check_skew_lemma(dist: &Distribution) -> SkewVerdict {
    let s = dist.support_size() as f64;
    let ell = s.log2() - shannon_entropy(dist);
    let max_p = dist.probs.iter().cloned().fold(0.0, f64::max);
    let bound = 2.0 / s + ell;
    SkewVerdict {
        max_p,
        ell,
        bound,
        holds: max_p <= bound + SLACK,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChainRuleVerdict {
    pub joint: f64,
    pub marginal: f64,
    pub conditional: f64,
    pub holds: bool,
}

/// Compares `H(X, Y)` with `H(X) + H(Y | X)` for a joint table indexed
/// `[x][y]`.
pub fn chain_rule_check(joint: &[Vec<f64>]) -> Result<ChainRuleVerdict, EntropyError> {
    let flat: Vec<f64> = joint.iter().flatten().copied().collect();
    Distribution::new(flat.clone())?;
    let h_joint = entropy_of(&flat);
    let px: Vec<f64> = joint.iter().map(|row| row.iter().sum()).collect();
    let h_x = entropy_of(&px);
    let h_y_given_x: f64 = joint
        .iter()
        .zip(&px)
        .filter(|(_, &p)| p > 0.0)
        .map(|(row, &p)| {
            let cond: Vec<f64> = row.iter().map(|q| q / p).collect();
            p * entropy_of(&cond)
        })
        .sum();
    Ok(ChainRuleVerdict {
        joint: h_joint,
        marginal: h_x,
        conditional: h_y_given_x,
        holds: (h_joint - h_x - h_y_given_x).abs() <= SLACK,
    })
}

/// One step of the reveal process: vertex `i` is revealed after the
/// vertices `tau_{<i}`, conditioned on a uniform cycle-factor agreeing with
/// `sigma_prime` there.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RevealAudit {
    pub i: usize,
    pub sigma_prime: Vec<usize>,
    pub tau: Vec<usize>,
    /// Out-neighbours of `i` not yet used by the revealed vertices.
    pub s_value: usize,
    /// `log2 s_value` minus the conditional entropy of the image of `i`.
    pub ell: f64,
}

fn positions(tau: &[usize]) -> Vec<usize> {
    let mut pos = vec![0; tau.len()];
    for (k, &v) in tau.iter().enumerate() {
        pos[v] = k;
    }
    pos
}

fn s_value(g: &RegularDigraph, i: usize, inverse: &[usize], pos: &[usize]) -> usize {
    g.out_neighbours(i)
        .iter()
        .filter(|&&j| pos[inverse[j]] >= pos[i])
        .count()
}

fn inverse_of(sigma: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; sigma.len()];
    for (i, &j) in sigma.iter().enumerate() {
        inv[j] = i;
    }
    inv
}

/// Evaluates a single reveal step by filtering all cycle-factors on the
/// event `sigma(tau_{<i}) = sigma_prime(tau_{<i})`.
pub fn reveal_step(
    g: &RegularDigraph,
    factors: &[CycleFactor],
    i: usize,
    sigma_prime: &[usize],
    tau: &[usize],
) -> RevealAudit {
    let pos = positions(tau);
    let before: Vec<usize> = tau[..pos[i]].to_vec();
    let s = s_value(g, i, &inverse_of(sigma_prime), &pos);
    let mut hist: HashMap<usize, u64> = HashMap::new();
    let mut total = 0u64;
    for cf in factors {
        let sigma = cf.sigma();
        if before.iter().all(|&v| sigma[v] == sigma_prime[v]) {
            *hist.entry(sigma[i]).or_default() += 1;
            total += 1;
        }
    }
    let probs: Vec<f64> = hist.values().map(|&c| c as f64 / total as f64).collect();
    RevealAudit {
        i,
        sigma_prime: sigma_prime.to_vec(),
        tau: tau.to_vec(),
        s_value: s,
        ell: (s as f64).log2() - entropy_of(&probs),
    }
}

/// All permutations of `0..n` in lexicographic order.
pub fn all_permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut p: Vec<usize> = (0..n).collect();
    loop {
        out.push(p.clone());
        // next lexicographic permutation
        let Some(k) = (1..n).rev().find(|&k| p[k - 1] < p[k]).map(|k| k - 1) else {
            break;
        };
        let l = (k + 1..n).rev().find(|&l| p[k] < p[l]).unwrap();
        p.swap(k, l);
        p[k + 1..].reverse();
    }
    out
}

/// Tally of `s(i, sigma', tau)` over all `n!` orders `tau`; entry `t - 1`
/// counts the orders with `s = t`.
pub fn s_tally(g: &RegularDigraph, i: usize, sigma_prime: &[usize]) -> Vec<u64> {
    let inv = inverse_of(sigma_prime);
    let mut tally = vec![0u64; g.d()];
    for tau in all_permutations(g.n()) {
        let s = s_value(g, i, &inv, &positions(&tau));
        tally[s - 1] += 1;
    }
    tally
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TallyViolation {
    pub i: usize,
    pub sigma_prime: Vec<usize>,
    pub tally: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RevealReport {
    pub n: usize,
    pub d: usize,
    pub factor_count: usize,
    /// `n!/d`: the count every `s` value must reach.
    pub expected_tally: u64,
    pub tallies_checked: usize,
    pub tally_violations: Vec<TallyViolation>,
    /// Average entropy deficit summed over vertices, from the reveal process.
    pub loss_from_reveal: f64,
    /// Same quantity from the cycle-factor count alone.
    pub loss_from_count: f64,
    pub loss_agrees: bool,
}

impl RevealReport {
    pub fn uniform(&self) -> bool {
        self.tally_violations.is_empty()
    }

    pub fn holds(&self) -> bool {
        self.uniform() && self.loss_agrees
    }
}

/// Exhaustive audit of the reveal process on `g` (`n <= 6`).
///
/// For every vertex `i` and cycle-factor `sigma'`, counts `s(i, sigma', tau)`
/// over all orders `tau` and requires each value in `1..=d` exactly `n!/d`
/// times. Separately computes the average entropy deficit of the reveal steps
/// and compares it with `(n/d) log2(d!) - log2|C|` within `1e-6`.
///
/// The deficit only depends on the set `T` of vertices revealed before `i`,
/// which is a given `k`-set with probability `k!(n-1-k)!/n!`, so the average
/// over `tau` is taken over subsets.
pub fn reveal_audit(g: &RegularDigraph) -> Result<RevealReport, EntropyError> {
    let (n, d) = (g.n(), g.d());
    if n > REVEAL_MAX_N {
        return Err(EntropyError::SizeLimitExceeded(n));
    }
    let factors = enumerate_cycle_factors(g)?;
    let count = factors.len();
    let orders = all_permutations(n);
    let order_pos: Vec<Vec<usize>> = orders.iter().map(|t| positions(t)).collect();
    let n_fact: u64 = (1..=n as u64).product();
    let expected_tally = n_fact / d as u64;

    let mut violations = Vec::new();
    let mut checked = 0;
    for cf in &factors {
        let inv = inverse_of(cf.sigma());
        for i in 0..n {
            let mut tally = vec![0u64; d];
            for pos in &order_pos {
                tally[s_value(g, i, &inv, pos) - 1] += 1;
            }
            checked += 1;
            if !n_fact.is_multiple_of(d as u64) || tally.iter().any(|&t| t != expected_tally) {
                violations.push(TallyViolation {
                    i,
                    sigma_prime: cf.sigma().to_vec(),
                    tally,
                });
            }
        }
    }

    let fact = |k: usize| (1..=k as u64).product::<u64>() as f64;
    let mut loss = 0.0;
    for i in 0..n {
        let others: Vec<usize> = (0..n).filter(|&v| v != i).collect();
        for subset in 0u32..(1 << (n - 1)) {
            let t: Vec<usize> = others
                .iter()
                .enumerate()
                .filter(|(b, _)| subset >> b & 1 == 1)
                .map(|(_, &v)| v)
                .collect();
            let weight = fact(t.len()) * fact(n - 1 - t.len()) / n_fact as f64;
            // group factors by their restriction to t
            let mut groups: HashMap<Vec<usize>, Vec<u64>> = HashMap::new();
            for cf in &factors {
                let sigma = cf.sigma();
                let key: Vec<usize> = t.iter().map(|&v| sigma[v]).collect();
                let hist = groups.entry(key).or_insert_with(|| vec![0; n]);
                hist[sigma[i]] += 1;
            }
            let mut sum = 0.0;
            for (key, hist) in &groups {
                let size: u64 = hist.iter().sum();
                let s = g
                    .out_neighbours(i)
                    .iter()
                    .filter(|j| !key.contains(j))
                    .count();
                let probs: Vec<f64> = hist.iter().map(|&c| c as f64 / size as f64).collect();
                sum += size as f64 * ((s as f64).log2() - entropy_of(&probs));
            }
            loss += weight * sum / count as f64;
        }
    }
    let from_count = entropy_loss_from_count(n, d, &BigUint::from(count));
    Ok(RevealReport {
        n,
        d,
        factor_count: count,
        expected_tally,
        tallies_checked: checked,
        tally_violations: violations,
        loss_from_reveal: loss,
        loss_from_count: from_count,
        loss_agrees: (loss - from_count).abs() <= 1e-6,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::gen_random_regular_digraph;
    use proptest::prelude::*;

    #[test]
    fn entropy_examples() {
        assert_eq!(shannon_entropy(&Distribution::uniform(8)), 3.0);
        assert_eq!(
            shannon_entropy(&Distribution::new(vec![1.0, 0.0]).unwrap()),
            0.0
        );
        let d = Distribution::new(vec![0.5, 0.25, 0.25]).unwrap();
        assert!((shannon_entropy(&d) - 1.5).abs() < 1e-15);
    }

    #[test]
    fn binary_entropy_examples() {
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(0.5).unwrap(), 1.0);
        // -(1/4) log2(1/4) - (3/4) log2(3/4) = 0.5 + 0.75 (2 - log2 3)
        let expected = 0.5 + 0.75 * (2.0 - 3f64.log2());
        assert!((binary_entropy(0.25).unwrap() - expected).abs() < 1e-15);
        assert!((expected - 0.811278).abs() < 1e-6);
        assert!(binary_entropy(1.5).is_err());
    }

    #[test]
    fn invalid_distributions() {
        assert!(Distribution::new(vec![0.5, 0.4]).is_err());
        assert!(Distribution::new(vec![1.5, -0.5]).is_err());
        assert!(Distribution::new(vec![]).is_err());
        assert!(Distribution::new(vec![f64::NAN, 1.0]).is_err());
    }

    #[test]
    fn skew_examples() {
        let u = check_skew_lemma(&Distribution::uniform(5));
        assert!(u.ell.abs() < 1e-12 && u.holds);
        let point = check_skew_lemma(&Distribution::new(vec![1.0, 0.0]).unwrap());
        assert_eq!((point.max_p, point.ell, point.bound), (1.0, 1.0, 2.0));
        let v = check_skew_lemma(&Distribution::new(vec![0.6, 0.2, 0.1, 0.1]).unwrap());
        // H = 0.6 log2(1/0.6) + 0.2 log2 5 + 0.2 log2 10
        let h = 0.6 * (1.0f64 / 0.6).log2() + 0.2 * 5f64.log2() + 0.2 * 10f64.log2();
        assert!((v.ell - (2.0 - h)).abs() < 1e-12);
        assert!((h - 1.5710).abs() < 1e-4);
        assert!((v.bound - 0.9290).abs() < 1e-4);
        assert!(v.holds);
    }

    #[test]
    fn chain_rule_examples() {
        let ind = chain_rule_check(&[vec![0.25, 0.25], vec![0.25, 0.25]]).unwrap();
        assert_eq!((ind.joint, ind.marginal, ind.conditional), (2.0, 1.0, 1.0));
        let diag = chain_rule_check(&[vec![0.5, 0.0], vec![0.0, 0.5]]).unwrap();
        assert_eq!(
            (diag.joint, diag.marginal, diag.conditional),
            (1.0, 1.0, 0.0)
        );
        let j = chain_rule_check(&[vec![0.4, 0.1], vec![0.2, 0.3]]).unwrap();
        let direct = -[0.4f64, 0.1, 0.2, 0.3]
            .iter()
            .map(|p| p * p.log2())
            .sum::<f64>();
        assert!((j.joint - direct).abs() < 1e-15);
        assert!((direct - 1.8464).abs() < 1e-4);
        assert!(j.holds);
        assert!(chain_rule_check(&[vec![0.4, 0.1], vec![0.2, 0.2]]).is_err());
    }

    #[test]
    fn permutations_enumerated() {
        let p = all_permutations(4);
        assert_eq!(p.len(), 24);
        assert_eq!(p[0], vec![0, 1, 2, 3]);
        assert_eq!(p[23], vec![3, 2, 1, 0]);
        assert_eq!(all_permutations(0), vec![Vec::<usize>::new()]);
    }

    #[test]
    fn tally_on_k3() {
        let g = RegularDigraph::complete_with_loops(3);
        for sigma in all_permutations(3) {
            for i in 0..3 {
                assert_eq!(s_tally(&g, i, &sigma), vec![2, 2, 2]);
            }
        }
    }

    #[test]
    fn reveal_on_d1() {
        let g = RegularDigraph::directed_cycle(5);
        let r = reveal_audit(&g).unwrap();
        assert!(r.holds());
        assert_eq!(r.loss_from_reveal, 0.0);
        let f = enumerate_cycle_factors(&g).unwrap();
        let step = reveal_step(&g, &f, 2, f[0].sigma(), &[4, 2, 0, 1, 3]);
        assert_eq!((step.s_value, step.ell), (1, 0.0));
    }

    #[test]
    fn reveal_loss_matches_count_on_k4() {
        let r = reveal_audit(&RegularDigraph::complete_with_loops(4)).unwrap();
        assert!(r.holds());
        assert!(r.loss_from_reveal.abs() < 1e-9);
        assert_eq!(r.loss_from_count, 0.0);
    }

    #[test]
    fn reveal_loss_matches_on_random_instances() {
        for seed in 0..6 {
            let g = gen_random_regular_digraph(5, 2 + seed as usize % 2, seed, true).unwrap();
            let r = reveal_audit(&g).unwrap();
            assert!(r.holds(), "{r:?}");
        }
        assert!(reveal_audit(&RegularDigraph::complete_with_loops(7)).is_err());
    }

    proptest! {
        #[test]
        fn entropy_bounded_by_log_support(seed in any::<u64>(), s in 1usize..40) {
            use rand::SeedableRng;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let d = Distribution::random(s, &mut rng);
            let h = shannon_entropy(&d);
            prop_assert!(h >= -SLACK && h <= (s as f64).log2() + SLACK);
            prop_assert!(check_skew_lemma(&d).holds);
        }

        #[test]
        fn binary_matches_shannon(p in 0.0f64..=1.0) {
            let b = binary_entropy(p).unwrap();
            prop_assert!((b - binary_entropy(1.0 - p).unwrap()).abs() < 1e-12);
            prop_assert!((b - entropy_of(&[p, 1.0 - p])).abs() < 1e-15);
            prop_assert!(b <= 1.0 + 1e-15);
        }
    }
}
