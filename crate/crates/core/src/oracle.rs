//! Exact counting of cycle-factors and the quantities derived from the count:
//! expected cycle number, the matching-count bounds for regular bipartite
//! graphs, and the entropy loss of the edge-reveal process.
//!
//! Everything here is exact (big integers and rationals) except the final
//! logarithms, which are evaluated on exact integers.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::graph::{count_cycles, BipartiteGraph, CycleFactor, RegularDigraph};

/// Largest side size accepted by [`permanent`].
pub const PERMANENT_MAX_N: usize = 24;
/// Largest cycle-factor count [`enumerate_cycle_factors`] will materialise.
pub const ENUMERATION_MAX_COUNT: u64 = 1_000_000;
/// Largest side size for the subset-count table.
pub const TABLE_MAX_N: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("{what}: size {got} exceeds limit {limit}")]
    SizeLimitExceeded {
        what: &'static str,
        got: String,
        limit: String,
    },
}

fn too_big(what: &'static str, got: impl ToString, limit: impl ToString) -> OracleError {
    OracleError::SizeLimitExceeded {
        what,
        got: got.to_string(),
        limit: limit.to_string(),
    }
}

/// Number of perfect matchings of `bip` by Ryser's formula, with the
/// `2^n` column subsets visited in Gray-code order.
///
/// Row sums are at most 24, so each product is below `24^24 < 2^111` and fits
/// an `i128` exactly. The alternating sum is accumulated with wrapping
/// arithmetic: it is correct modulo `2^128`, and the true value
/// (at most `24! < 2^80`) is recovered exactly.
pub fn permanent(bip: &BipartiteGraph) -> Result<BigUint, OracleError> {
    let n = bip.n();
    if n > PERMANENT_MAX_N {
        return Err(too_big("permanent", n, PERMANENT_MAX_N));
    }
    if n == 0 {
        return Ok(BigUint::one());
    }
    // column j -> mask of rows having a 1 in column j
    let mut col_rows = vec![0u32; n];
    for u in 0..n {
        for &v in bip.neighbours(u) {
            col_rows[v] |= 1 << u;
        }
    }
    let mut row_sums = vec![0i64; n];
    let mut in_set = 0u32;
    let mut total: i128 = 0;
    for k in 1u64..(1u64 << n) {
        let j = k.trailing_zeros() as usize;
        let bit = 1u32 << j;
        let delta = if in_set & bit == 0 { 1 } else { -1 };
        in_set ^= bit;
        let mut rows = col_rows[j];
        while rows != 0 {
            let i = rows.trailing_zeros() as usize;
            row_sums[i] += delta;
            rows &= rows - 1;
        }
        let mut prod: i128 = 1;
        for &s in &row_sums {
            if s == 0 {
                prod = 0;
                break;
            }
            prod = prod.wrapping_mul(s as i128);
        }
        if in_set.count_ones() % 2 == 1 {
            total = total.wrapping_sub(prod);
        } else {
            total = total.wrapping_add(prod);
        }
    }
    if n % 2 == 1 {
        total = total.wrapping_neg();
    }
    debug_assert!(total >= 0);
    Ok(BigUint::from(total as u128))
}

/// Counts of partial matchings over every column subset.
///
/// `count(mask)` is the number of ways to match the last `|mask|` rows onto
/// exactly the columns in `mask`, so `count(full)` is the permanent. The
/// table drives the exact uniform sampler.
#[derive(Debug, Clone)]
pub struct MatchingTable {
    n: usize,
    counts: Vec<u64>,
    adj_masks: Vec<u32>,
}

impl MatchingTable {
    pub fn new(bip: &BipartiteGraph) -> Result<Self, OracleError> {
        let n = bip.n();
        if n > TABLE_MAX_N {
            return Err(too_big("subset table", n, TABLE_MAX_N));
        }
        let adj_masks: Vec<u32> = bip.row_masks().into_iter().map(|m| m as u32).collect();
        let size = 1usize << n;
        let mut counts = vec![0u64; size];
        counts[0] = 1;
        for mask in 1..size {
            let row = n - (mask as u32).count_ones() as usize;
            let mut avail = adj_masks[row] & mask as u32;
            let mut c = 0u64;
            while avail != 0 {
                let j = avail.trailing_zeros();
                c += counts[mask & !(1usize << j)];
                avail &= avail - 1;
            }
            counts[mask] = c;
        }
        Ok(Self {
            n,
            counts,
            adj_masks,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn full_mask(&self) -> usize {
        (1usize << self.n) - 1
    }

    pub fn count(&self, mask: usize) -> u64 {
        self.counts[mask]
    }

    /// Total number of perfect matchings.
    pub fn total(&self) -> u64 {
        self.counts[self.full_mask()]
    }

    pub(crate) fn row_mask(&self, row: usize) -> u32 {
        self.adj_masks[row]
    }
}

/// Visits every cycle-factor in lexicographic order of `sigma`.
fn for_each_permutation(g: &RegularDigraph, mut visit: impl FnMut(&[usize])) {
    fn rec(
        g: &RegularDigraph,
        row: usize,
        used: &mut Vec<bool>,
        sigma: &mut Vec<usize>,
        visit: &mut dyn FnMut(&[usize]),
    ) {
        if row == g.n() {
            visit(sigma);
            return;
        }
        for &v in g.out_neighbours(row) {
            if !used[v] {
                used[v] = true;
                sigma.push(v);
                rec(g, row + 1, used, sigma, visit);
                sigma.pop();
                used[v] = false;
            }
        }
    }
    let mut used = vec![false; g.n()];
    let mut sigma = Vec::with_capacity(g.n());
    rec(g, 0, &mut used, &mut sigma, &mut visit);
}

fn guard_enumeration(g: &RegularDigraph) -> Result<BigUint, OracleError> {
    let count = permanent(&g.to_bipartite())?;
    if count > BigUint::from(ENUMERATION_MAX_COUNT) {
        return Err(too_big(
            "cycle-factor enumeration",
            &count,
            ENUMERATION_MAX_COUNT,
        ));
    }
    Ok(count)
}

/// All cycle-factors of `g`, in lexicographic order of `sigma`.
pub fn enumerate_cycle_factors(g: &RegularDigraph) -> Result<Vec<CycleFactor>, OracleError> {
    guard_enumeration(g)?;
    let mut out = Vec::new();
    for_each_permutation(g, |sigma| {
        out.push(CycleFactor::from_permutation_unchecked(sigma.to_vec()))
    });
    Ok(out)
}

/// Histogram of cycle counts: entry `k` is the number of cycle-factors with
/// exactly `k` cycles.
pub fn cycle_count_histogram(g: &RegularDigraph) -> Result<Vec<u64>, OracleError> {
    guard_enumeration(g)?;
    let mut hist = vec![0u64; g.n() + 1];
    for_each_permutation(g, |sigma| hist[count_cycles(sigma)] += 1);
    Ok(hist)
}

/// Mean number of cycles of a uniformly random cycle-factor, as an exact
/// rational.
pub fn exact_expected_cycles(g: &RegularDigraph) -> Result<BigRational, OracleError> {
    let hist = cycle_count_histogram(g)?;
    Ok(mean_of_histogram(&hist))
}

pub(crate) fn mean_of_histogram(hist: &[u64]) -> BigRational {
    let total: u64 = hist.iter().sum();
    let weighted: u128 = hist
        .iter()
        .enumerate()
        .map(|(k, &c)| k as u128 * c as u128)
        .sum();
    BigRational::new(BigInt::from(weighted), BigInt::from(total))
}

/// The harmonic number `H_n` as an exact rational.
pub fn harmonic_number(n: u64) -> BigRational {
    (1..=n).fold(BigRational::zero(), |acc, k| {
        acc + BigRational::new(BigInt::one(), BigInt::from(k))
    })
}

pub fn factorial(n: u64) -> BigUint {
    (1..=n).fold(BigUint::one(), |acc, k| acc * k)
}

/// `log2` of a big integer, accurate to double precision at any size.
pub fn log2_big(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits == 0 {
        return f64::NEG_INFINITY;
    }
    if bits <= 64 {
        return (x.to_u64().unwrap() as f64).log2();
    }
    let shift = bits - 64;
    let top = (x >> shift).to_u64().unwrap();
    (top as f64).log2() + shift as f64
}

pub fn log2_rational(r: &BigRational) -> f64 {
    let num = r.numer().abs().to_biguint().unwrap();
    let den = r.denom().abs().to_biguint().unwrap();
    log2_big(&num) - log2_big(&den)
}

/// Truncated decimal expansion of a non-negative rational with `frac_digits`
/// digits after the point.
pub fn rational_to_decimal(r: &BigRational, frac_digits: usize) -> String {
    let negative = r.is_negative();
    let r = r.abs();
    let (int_part, rem) = r.numer().div_rem(r.denom());
    let scaled = rem * BigInt::from(10u32).pow(frac_digits as u32) / r.denom();
    let mut frac = scaled.to_string();
    while frac.len() < frac_digits {
        frac.insert(0, '0');
    }
    let sign = if negative { "-" } else { "" };
    if frac_digits == 0 {
        format!("{sign}{int_part}")
    } else {
        format!("{sign}{int_part}.{frac}")
    }
}

/// One line of a bound audit. `lhs`/`rhs` are shown in the units named by the
/// bound (counts in `log2`, expectations as plain numbers). `informational`
/// entries are reported but never fail an audit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundCheck {
    pub name: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
    pub informational: bool,
}

impl BoundCheck {
    fn gating(name: &'static str, lhs: f64, rhs: f64, holds: bool) -> Self {
        Self {
            name,
            lhs,
            rhs,
            holds,
            informational: false,
        }
    }
}

/// `4 (n/d)(log2 d + 1)`.
pub fn cycle_bound_log2(n: usize, d: usize) -> f64 {
    4.0 * (n as f64 / d as f64) * ((d as f64).log2() + 1.0)
}

/// `4 (n/d)(ln d + 1)`; the same shape with natural logarithms.
pub fn cycle_bound_ln(n: usize, d: usize) -> f64 {
    4.0 * (n as f64 / d as f64) * ((d as f64).ln() + 1.0)
}

/// `(n/d) log2(e d)`, the ceiling on the entropy loss.
pub fn entropy_loss_ceiling(n: usize, d: usize) -> f64 {
    (n as f64 / d as f64) * (std::f64::consts::E * d as f64).log2()
}

const FLOAT_SLACK: f64 = 1e-9;

fn count_bounds(n: usize, d: usize, count: &BigUint) -> Vec<BoundCheck> {
    let (n64, d64) = (n as u64, d as u64);
    let log_count = log2_big(count);

    // |C|^d <= (d!)^n
    let bregman_lhs = count.pow(d as u32);
    let bregman_rhs = factorial(d64).pow(n as u32);
    let bregman = BoundCheck::gating(
        "bregman_minc",
        log_count,
        (n as f64 / d as f64) * log2_big(&factorial(d64)),
        bregman_lhs <= bregman_rhs,
    );

    // |C| * n^n >= n! * d^n
    let vdw_holds = count * BigUint::from(n64).pow(n as u32)
        >= factorial(n64) * BigUint::from(d64).pow(n as u32);
    let vdw_rhs = log2_big(&factorial(n64)) + n as f64 * ((d as f64).log2() - (n as f64).log2());
    let vdw = BoundCheck::gating("van_der_waerden", log_count, vdw_rhs, vdw_holds);

    // |C| >= (d/e)^n
    let stirling_rhs = n as f64 * ((d as f64).log2() - std::f64::consts::LOG2_E);
    let stirling = BoundCheck::gating(
        "stirling_lower",
        log_count,
        stirling_rhs,
        log_count + FLOAT_SLACK >= stirling_rhs,
    );
    vec![bregman, vdw, stirling]
}

fn expectation_bounds(n: usize, d: usize, expected: &BigRational) -> Vec<BoundCheck> {
    let e = expected.to_f64().unwrap_or(f64::INFINITY);
    let b2 = cycle_bound_log2(n, d);
    let bn = cycle_bound_ln(n, d);
    vec![
        BoundCheck::gating("expected_cycles_log2", e, b2, e <= b2 + FLOAT_SLACK),
        BoundCheck {
            name: "expected_cycles_ln",
            lhs: e,
            rhs: bn,
            holds: e <= bn + FLOAT_SLACK,
            informational: true,
        },
    ]
}

/// Audits the matching-count bounds and the expected-cycle bound on `g`.
///
/// Count bounds are decided with exact integer arithmetic; `lhs`/`rhs` are
/// the corresponding `log2` values for display.
pub fn audit_bounds(g: &RegularDigraph) -> Result<Vec<BoundCheck>, OracleError> {
    let hist = cycle_count_histogram(g)?;
    let count = BigUint::from(hist.iter().sum::<u64>());
    let mut checks = count_bounds(g.n(), g.d(), &count);
    checks.extend(expectation_bounds(g.n(), g.d(), &mean_of_histogram(&hist)));
    Ok(checks)
}

/// `(n/d) log2(d!) - log2|C|` computed from a known count.
///
/// Evaluated as `(log2((d!)^n) - log2(|C|^d)) / d` on exact integers and
/// returns exactly zero when the two integers are equal.
pub fn entropy_loss_from_count(n: usize, d: usize, count: &BigUint) -> f64 {
    let top = factorial(d as u64).pow(n as u32);
    let bottom = count.pow(d as u32);
    if top == bottom {
        return 0.0;
    }
    (log2_big(&top) - log2_big(&bottom)) / d as f64
}

/// Entropy lost by the random-order reveal of a uniform cycle-factor
/// relative to uniform choices at every step.
pub fn entropy_loss(g: &RegularDigraph) -> Result<f64, OracleError> {
    let count = permanent(&g.to_bipartite())?;
    Ok(entropy_loss_from_count(g.n(), g.d(), &count))
}

fn biguint_as_string<S: Serializer>(v: &BigUint, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

/// Exact rational with a decimal rendering for display.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExactValue {
    pub fraction: String,
    pub decimal: String,
}

impl ExactValue {
    /// Decimal rendering with 50 digits after the point.
    pub fn from_rational(r: &BigRational) -> Self {
        Self {
            fraction: format!("{}/{}", r.numer(), r.denom()),
            decimal: rational_to_decimal(r, 50),
        }
    }
}

/// Everything the oracle can say about one instance.
#[derive(Debug, Clone, Serialize)]
pub struct OracleReport {
    pub n: usize,
    pub d: usize,
    #[serde(serialize_with = "biguint_as_string")]
    pub matching_count: BigUint,
    #[serde(skip)]
    pub expected_cycles_exact: BigRational,
    pub expected_cycles: ExactValue,
    pub cycle_histogram: Vec<u64>,
    pub entropy_loss: f64,
    pub entropy_loss_ceiling: f64,
    pub bound_audit: Vec<BoundCheck>,
}

impl OracleReport {
    /// True when every non-informational check holds.
    pub fn all_hold(&self) -> bool {
        self.bound_audit.iter().all(|b| b.holds || b.informational)
    }
}

/// Builds the full report for `g`. Requires enumeration to be feasible.
pub fn oracle_report(g: &RegularDigraph) -> Result<OracleReport, OracleError> {
    let (n, d) = (g.n(), g.d());
    let hist = cycle_count_histogram(g)?;
    let count = BigUint::from(hist.iter().sum::<u64>());
    let expected = mean_of_histogram(&hist);
    let loss = entropy_loss_from_count(n, d, &count);
    let ceiling = entropy_loss_ceiling(n, d);

    let mut audit = count_bounds(n, d, &count);
    audit.extend(expectation_bounds(n, d, &expected));
    audit.push(BoundCheck::gating(
        "entropy_loss_nonnegative",
        loss,
        0.0,
        loss >= 0.0,
    ));
    audit.push(BoundCheck::gating(
        "entropy_loss_ceiling",
        loss,
        ceiling,
        loss <= ceiling + FLOAT_SLACK,
    ));
    Ok(OracleReport {
        n,
        d,
        matching_count: count,
        expected_cycles: ExactValue::from_rational(&expected),
        expected_cycles_exact: expected,
        cycle_histogram: hist,
        entropy_loss: loss,
        entropy_loss_ceiling: ceiling,
        bound_audit: audit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{gen_family, gen_random_regular_digraph, Family, Graph};

    fn rat(p: i64, q: i64) -> BigRational {
        BigRational::new(BigInt::from(p), BigInt::from(q))
    }

    #[test]
    fn permanent_small_cases() {
        let k33 = RegularDigraph::complete_with_loops(3).to_bipartite();
        assert_eq!(permanent(&k33).unwrap(), BigUint::from(6u32));
        let c3 = RegularDigraph::directed_cycle(3).to_bipartite();
        assert_eq!(permanent(&c3).unwrap(), BigUint::one());
    }

    #[test]
    fn permanent_of_bipartite_eight_cycle() {
        // U_i ~ V_i, V_{i+1}: an 8-cycle in the bipartite graph, two matchings
        let g = RegularDigraph::new(4, 2, vec![vec![0, 1], vec![1, 2], vec![2, 3], vec![3, 0]])
            .unwrap();
        assert_eq!(permanent(&g.to_bipartite()).unwrap(), BigUint::from(2u32));
    }

    #[test]
    fn permanent_large_complete() {
        let g = RegularDigraph::complete_with_loops(12);
        assert_eq!(permanent(&g.to_bipartite()).unwrap(), factorial(12));
        let big = RegularDigraph::complete_with_loops(25).to_bipartite();
        assert!(matches!(
            permanent(&big),
            Err(OracleError::SizeLimitExceeded { .. })
        ));
    }

    #[test]
    fn table_matches_ryser() {
        for seed in 0..30u64 {
            let n = 2 + (seed as usize % 9);
            let d = 1 + (seed as usize / 3) % n;
            let g = gen_random_regular_digraph(n, d, seed, true).unwrap();
            let b = g.to_bipartite();
            let t = MatchingTable::new(&b).unwrap();
            assert_eq!(BigUint::from(t.total()), permanent(&b).unwrap());
        }
    }

    #[test]
    fn enumeration_counts() {
        assert_eq!(
            enumerate_cycle_factors(&RegularDigraph::complete_with_loops(3))
                .unwrap()
                .len(),
            6
        );
        let one = enumerate_cycle_factors(&RegularDigraph::directed_cycle(3)).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(one[0].cycle_count(), 1);
    }

    #[test]
    fn stirling_cycle_numbers_for_s4() {
        let hist = cycle_count_histogram(&RegularDigraph::complete_with_loops(4)).unwrap();
        assert_eq!(hist, vec![0, 6, 11, 6, 1]);
    }

    #[test]
    fn expected_cycles_values() {
        let g3 = RegularDigraph::complete_with_loops(3);
        assert_eq!(exact_expected_cycles(&g3).unwrap(), rat(11, 6));
        let g4 = RegularDigraph::complete_with_loops(4);
        assert_eq!(exact_expected_cycles(&g4).unwrap(), rat(25, 12));
        assert_eq!(harmonic_number(4), rat(25, 12));
        let c = RegularDigraph::directed_cycle(7);
        assert_eq!(exact_expected_cycles(&c).unwrap(), rat(1, 1));
    }

    #[test]
    fn audit_equality_case() {
        for n in 1..=6 {
            let g = RegularDigraph::complete_with_loops(n);
            let audit = audit_bounds(&g).unwrap();
            assert!(audit.iter().all(|b| b.holds), "{audit:?}");
            // both count bounds are tight when n = d
            assert!((audit[0].lhs - audit[0].rhs).abs() < 1e-9);
            assert!((audit[1].lhs - audit[1].rhs).abs() < 1e-9);
        }
    }

    #[test]
    fn audit_eight_cycle_instance() {
        let g = RegularDigraph::new(4, 2, vec![vec![0, 1], vec![1, 2], vec![2, 3], vec![3, 0]])
            .unwrap();
        let audit = audit_bounds(&g).unwrap();
        // 2 <= (2!)^2 = 4 and 2 >= 4! 2^4 / 4^4 = 1.5
        assert_eq!(audit[0].lhs, 1.0);
        assert_eq!(audit[0].rhs, 2.0);
        assert!((audit[1].rhs - 1.5f64.log2()).abs() < 1e-12);
        assert!(audit.iter().all(|b| b.holds));
    }

    #[test]
    fn audit_k3_expectation() {
        let audit = audit_bounds(&RegularDigraph::complete_with_loops(3)).unwrap();
        let e = audit
            .iter()
            .find(|b| b.name == "expected_cycles_log2")
            .unwrap();
        assert!((e.lhs - 11.0 / 6.0).abs() < 1e-12);
        assert!((e.rhs - 4.0 * (3f64.log2() + 1.0)).abs() < 1e-12);
        assert!((e.rhs - 10.34).abs() < 0.01);
    }

    #[test]
    fn entropy_loss_zero_cases() {
        for n in 1..=8 {
            assert_eq!(
                entropy_loss(&RegularDigraph::complete_with_loops(n)).unwrap(),
                0.0
            );
            assert_eq!(
                entropy_loss(&RegularDigraph::directed_cycle(n)).unwrap(),
                0.0
            );
        }
        let Graph::Directed(blocks) = gen_family(Family::CompleteLoops, 6, 3).unwrap() else {
            panic!()
        };
        assert_eq!(
            permanent(&blocks.to_bipartite()).unwrap(),
            BigUint::from(36u32)
        );
        assert_eq!(entropy_loss(&blocks).unwrap(), 0.0);
    }

    #[test]
    fn decimal_rendering() {
        assert_eq!(rational_to_decimal(&rat(25, 12), 5), "2.08333");
        assert_eq!(rational_to_decimal(&rat(1, 1), 3), "1.000");
        assert_eq!(rational_to_decimal(&rat(1, 40), 4), "0.0250");
        let v = ExactValue::from_rational(&rat(11, 6));
        assert_eq!(v.fraction, "11/6");
        assert_eq!(v.decimal.len(), 52);
    }

    #[test]
    fn log2_of_huge_integers() {
        let x = BigUint::one() << 1000u32;
        assert_eq!(log2_big(&x), 1000.0);
        let f = factorial(100);
        let direct: f64 = (1..=100).map(|k| (k as f64).log2()).sum();
        assert!((log2_big(&f) - direct).abs() < 1e-9);
    }

    #[test]
    fn report_json_uses_decimal_strings() {
        let r = oracle_report(&RegularDigraph::complete_with_loops(4)).unwrap();
        let json = serde_json::to_value(&r).unwrap();
        assert_eq!(json["matching_count"], "24");
        assert_eq!(json["expected_cycles"]["fraction"], "25/12");
        assert!(r.all_hold());
    }
}
