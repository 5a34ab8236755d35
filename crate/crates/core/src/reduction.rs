//! From binary separation to online dual bin packing.
//!
//! A binary separation instance is a sequence of positive integers, of
//! which the `n1` largest are "large". An online guesser labels each value
//! small or large as it arrives. [`reduce_and_run`] turns any online dual
//! bin packing algorithm into such a guesser:
//!
//! 1. `n1` items of weight `1/2 + 1/16`;
//! 2. for every value `y_i`, an item of weight `1/2 - f(y_i)`; the guess is
//!    "large" iff the algorithm puts it into a bin holding a phase-1 item;
//! 3. for every truly small `y_i`, the complement `1/2 + f(y_i)`;
//!
//! all into `n` bins, with `f(y) = 1/16 + 2^-(y+4)`. An optimal packing holds
//! all `2n` items, and every unpacked item costs at most five correct
//! guesses, so good packings force good guesses.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::instance::{Instance, Packing};
use crate::online::{OnlineAlgorithm, Simulator};
use crate::weight::Weight;

/// Exponent of `delta_min = 1/16`; `delta_max` is `1/8`.
const DELTA_EXP: u32 = 4;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BspInstance {
    values: Vec<u64>,
    n1: usize,
    threshold: Option<u64>,
}

fn nth_largest(values: &[u64], k: usize) -> Option<u64> {
    if k == 0 {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    Some(sorted[k - 1])
}

impl BspInstance {
    /// Fails unless every one of the `n1` largest values exceeds every
    /// other value.
    pub fn new(values: Vec<u64>, n1: usize) -> Result<Self> {
        if values.contains(&0) {
            return Err(Error::Domain("separation values must be positive".into()));
        }
        if n1 > values.len() {
            return Err(Error::Domain(format!(
                "n1 = {n1} exceeds n = {}",
                values.len()
            )));
        }
        let mut sorted = values.clone();
        sorted.sort_unstable_by(|a, b| b.cmp(a));
        if n1 > 0 && n1 < sorted.len() && sorted[n1 - 1] == sorted[n1] {
            return Err(Error::Domain(format!(
                "value {} is both large and small",
                sorted[n1]
            )));
        }
        let threshold = nth_largest(&values, n1);
        Ok(BspInstance {
            values,
            n1,
            threshold,
        })
    }

    /// Random instance with values in `[1, 2^n]` (capped at `2^63`).
    pub fn random<R: Rng>(rng: &mut R, n: usize) -> Self {
        let top = if n >= 63 { 1u64 << 63 } else { 1u64 << n };
        let n1 = rng.gen_range(0..=n);
        // Small values in [1, t], large in [t + 1, top].
        let t = if top == 1 { 1 } else { rng.gen_range(1..top) };
        let mut values: Vec<u64> = (0..n)
            .map(|i| {
                if i < n1 && top > 1 {
                    rng.gen_range(t + 1..=top)
                } else {
                    rng.gen_range(1..=t)
                }
            })
            .collect();
        let n1 = if top == 1 { 0 } else { n1 };
        values.shuffle(rng);
        let threshold = nth_largest(&values, n1);
        BspInstance {
            values,
            n1,
            threshold,
        }
    }

    /// [`Self::random`] driven by a seeded ChaCha8 generator.
    pub fn seeded(seed: u64, n: usize) -> Self {
        Self::random(&mut ChaCha8Rng::seed_from_u64(seed), n)
    }

    pub fn values(&self) -> &[u64] {
        &self.values
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn n2(&self) -> usize {
        self.values.len() - self.n1
    }

    /// Smallest large value, if any value is large.
    pub fn threshold(&self) -> Option<u64> {
        self.threshold
    }

    pub fn is_large(&self, i: usize) -> bool {
        self.threshold.is_some_and(|t| self.values[i] >= t)
    }

    /// Line 1 `n n1`, line 2 the values. Blank lines and `#` comments are
    /// ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());
        let (hline, header) = lines.next().ok_or_else(|| Error::Parse {
            line: 1,
            msg: "missing header \"n n1\"".into(),
        })?;
        let head: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Parse {
                line: hline,
                msg: format!("header: {e}"),
            })?;
        let [n, n1] = head[..] else {
            return Err(Error::Parse {
                line: hline,
                msg: "header must be \"n n1\"".into(),
            });
        };
        let mut values = Vec::with_capacity(n);
        let mut last_line = hline;
        for (line, l) in lines {
            last_line = line;
            for tok in l.split_whitespace() {
                let v = tok.parse::<u64>().map_err(|e| Error::Parse {
                    line,
                    msg: format!("value {tok:?}: {e}"),
                })?;
                values.push(v);
            }
        }
        if values.len() != n {
            return Err(Error::Parse {
                line: last_line,
                msg: format!("expected {n} values, found {}", values.len()),
            });
        }
        BspInstance::new(values, n1)
    }

    pub fn serialize(&self) -> String {
        let vals: Vec<String> = self.values.iter().map(u64::to_string).collect();
        format!("{} {}\n{}\n", self.n(), self.n1, vals.join(" "))
    }
}

/// `f(y) = 1/16 + 2^-(y+4)`: strictly decreasing, with values in `(1/16, 3/32]`.
pub fn f_map(y: u64) -> Result<Weight> {
    if y == 0 {
        return Err(Error::Domain("f is defined for y >= 1".into()));
    }
    let e = u32::try_from(y + u64::from(DELTA_EXP))
        .map_err(|_| Error::Domain(format!("y = {y} too large")))?;
    Ok(&Weight::pow2_inv(DELTA_EXP) + &Weight::pow2_inv(e))
}

fn half() -> Weight {
    Weight::pow2_inv(1)
}

/// Phase an item of the constructed instance belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Phase {
    Anchor,
    /// Carries the index of the separation value.
    Probe(usize),
    /// Complement of the probe for this separation value.
    Complement(usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Construction {
    pub instance: Instance,
    pub phases: Vec<Phase>,
}

/// The `2n`-item instance built from `bsp`, in arrival order.
pub fn construct(bsp: &BspInstance) -> Result<Construction> {
    let anchor = &half() + &Weight::pow2_inv(DELTA_EXP);
    let mut weights = Vec::with_capacity(2 * bsp.n());
    let mut phases = Vec::with_capacity(2 * bsp.n());
    for _ in 0..bsp.n1() {
        weights.push(anchor.clone());
        phases.push(Phase::Anchor);
    }
    for (i, &y) in bsp.values().iter().enumerate() {
        weights.push(half().checked_sub(&f_map(y)?).expect("f < 1/2"));
        phases.push(Phase::Probe(i));
    }
    for (i, &y) in bsp.values().iter().enumerate() {
        if !bsp.is_large(i) {
            weights.push(&half() + &f_map(y)?);
            phases.push(Phase::Complement(i));
        }
    }
    Ok(Construction {
        instance: Instance::new(weights, bsp.n())?,
        phases,
    })
}

/// Packing of all `2n` items: anchor `j` with the `j`-th large probe, each
/// small probe with its complement.
pub fn pairing_packing(bsp: &BspInstance, c: &Construction) -> Packing {
    let mut packing = Packing::rejecting_all(c.phases.len());
    let mut large_rank = 0;
    let mut small_bin = vec![None; bsp.n()];
    let mut next_small = bsp.n1();
    let mut anchor_rank = 0;
    for (item, phase) in c.phases.iter().enumerate() {
        let bin = match *phase {
            Phase::Anchor => {
                anchor_rank += 1;
                anchor_rank - 1
            }
            Phase::Probe(i) if bsp.is_large(i) => {
                large_rank += 1;
                large_rank - 1
            }
            Phase::Probe(i) => {
                small_bin[i] = Some(next_small);
                next_small += 1;
                next_small - 1
            }
            Phase::Complement(i) => small_bin[i].expect("probe precedes complement"),
        };
        packing.set(item, Some(bin));
    }
    packing
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Guess {
    pub value: usize,
    pub large: bool,
    /// Revealed after the guess; the reduction never uses it.
    pub correct: bool,
}

/// Unpacked items per phase and guess quality.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReductionReport {
    pub n1: usize,
    pub n2: usize,
    /// Unpacked anchors.
    pub p1: usize,
    /// Unpacked probes of large values.
    pub l2: usize,
    /// Unpacked probes of small values.
    pub s2: usize,
    /// Unpacked complements.
    pub p3: usize,
    /// Correct "large" guesses.
    pub g1: usize,
    /// Correct "small" guesses.
    pub g2: usize,
    pub mistakes: usize,
    pub unpacked_total: usize,
}

impl ReductionReport {
    pub fn n(&self) -> usize {
        self.n1 + self.n2
    }

    pub fn bound(&self) -> AccountingBound {
        accounting_bound(self.p1, self.l2, self.s2, self.p3, self.n1, self.n2)
    }

    pub fn csv_header() -> &'static str {
        "p1,l2,s2,p3,g1,g2,bound_tight,bound_loose,entropy_bits"
    }

    /// One CSV row in the order of [`Self::csv_header`]; the entropy bound
    /// is printed with four decimals, or `NA` outside its regime.
    pub fn csv_row(&self) -> String {
        let b = self.bound();
        let entropy = entropy_lower_bound(self.n(), self.mistakes)
            .map_or_else(|| "NA".to_string(), |v| format!("{v:.4}"));
        let mut row = String::new();
        write!(
            row,
            "{},{},{},{},{},{},{},{},{entropy}",
            self.p1, self.l2, self.s2, self.p3, self.g1, self.g2, b.tight, b.loose
        )
        .expect("write to string");
        row
    }
}

#[derive(Clone, Debug)]
pub struct ReductionRun {
    pub construction: Construction,
    pub packing: Packing,
    pub guesses: Vec<Guess>,
    pub report: ReductionReport,
}

/// Runs `alg` (set up for `n` bins) on the constructed instance, one item
/// at a time, deriving a guess from each probe decision.
pub fn reduce_and_run(bsp: &BspInstance, alg: &mut dyn OnlineAlgorithm) -> Result<ReductionRun> {
    let c = construct(bsp)?;
    let mut sim = Simulator::new(bsp.n());
    let mut holds_anchor = vec![false; bsp.n()];
    let mut guesses = Vec::with_capacity(bsp.n());
    for (item, w) in c.instance.weights().iter().enumerate() {
        let decision = sim.feed(alg, w.clone()).map_err(|e| match e {
            Error::Protocol(msg) => Error::Simulation(msg),
            other => other,
        })?;
        match c.phases[item] {
            Phase::Anchor => {
                if let Some(b) = decision {
                    holds_anchor[b] = true;
                }
            }
            Phase::Probe(i) => {
                let large = decision.is_some_and(|b| holds_anchor[b]);
                guesses.push(Guess {
                    value: i,
                    large,
                    correct: large == bsp.is_large(i),
                });
            }
            Phase::Complement(_) => {}
        }
    }
    let (_, packing) = sim.finish()?;

    let mut report = ReductionReport {
        n1: bsp.n1(),
        n2: bsp.n2(),
        p1: 0,
        l2: 0,
        s2: 0,
        p3: 0,
        g1: 0,
        g2: 0,
        mistakes: 0,
        unpacked_total: 0,
    };
    for (item, phase) in c.phases.iter().enumerate() {
        if packing.get(item).is_some() {
            continue;
        }
        match *phase {
            Phase::Anchor => report.p1 += 1,
            Phase::Probe(i) if bsp.is_large(i) => report.l2 += 1,
            Phase::Probe(_) => report.s2 += 1,
            Phase::Complement(_) => report.p3 += 1,
        }
    }
    report.unpacked_total = report.p1 + report.l2 + report.s2 + report.p3;
    for g in &guesses {
        match (g.correct, g.large) {
            (true, true) => report.g1 += 1,
            (true, false) => report.g2 += 1,
            (false, _) => report.mistakes += 1,
        }
    }
    Ok(ReductionRun {
        construction: c,
        packing,
        guesses,
        report,
    })
}

/// Lower bounds on the number of correct guesses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AccountingBound {
    /// `n1 + n2 - s2 - p1 - 4(p1 + p3) - 2 l2`, clamped at zero.
    pub tight: usize,
    /// `n - 5 (p1 + l2 + s2 + p3)`, clamped at zero.
    pub loose: usize,
}

pub fn accounting_bound(
    p1: usize,
    l2: usize,
    s2: usize,
    p3: usize,
    n1: usize,
    n2: usize,
) -> AccountingBound {
    let n = (n1 + n2) as i128;
    let [p1, l2, s2, p3] = [p1, l2, s2, p3].map(|v| v as i128);
    let tight = n - s2 - p1 - 4 * (p1 + p3) - 2 * l2;
    let loose = n - 5 * (p1 + l2 + s2 + p3);
    AccountingBound {
        tight: tight.max(0) as usize,
        loose: loose.max(0) as usize,
    }
}

/// Binary entropy in bits, with `H(0) = H(1) = 0`.
pub fn binary_entropy(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        return 0.0;
    }
    -(p * p.log2() + (1.0 - p) * (1.0 - p).log2())
}

/// `(1 - H(alpha)) n` with `alpha = (n - r) / n`, the number of advice bits
/// any guesser needs to make at most `r` mistakes on `n` values. `None`
/// when `alpha < 1/2` (or `n = 0`, `r > n`), where the bound says nothing.
pub fn entropy_lower_bound(n: usize, r: usize) -> Option<f64> {
    if n == 0 || r > n || 2 * (n - r) < n {
        return None;
    }
    let alpha = (n - r) as f64 / n as f64;
    Some((1.0 - binary_entropy(alpha)) * n as f64)
}

/// Largest bit size among the constructed weights, i.e. `max y + 4`.
pub fn constructed_bit_size(bsp: &BspInstance) -> u64 {
    bsp.values()
        .iter()
        .max()
        .map_or(DELTA_EXP as u64, |&y| y + u64::from(DELTA_EXP))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::brute_force_opt;
    use crate::instance::verify_packing;
    use crate::online::{FirstFitOnline, RandomPlacement, ReplayPacking};
    use proptest::prelude::*;

    fn w(v: u64, e: u32) -> Weight {
        Weight::from_parts(v, e)
    }

    #[test]
    fn f_values() {
        assert_eq!(f_map(1).unwrap(), w(3, 5));
        assert_eq!(f_map(2).unwrap(), w(5, 6));
        assert!(f_map(2).unwrap() < f_map(1).unwrap());
        assert!(f_map(60).unwrap() > w(1, 4));
        assert!(matches!(f_map(0), Err(Error::Domain(_))));
        let big = f_map(100_000).unwrap();
        assert!(big > w(1, 4) && big.exponent() == 100_004);
    }

    #[test]
    fn small_construction() {
        let bsp = BspInstance::new(vec![5, 2], 1).unwrap();
        let c = construct(&bsp).unwrap();
        let half = w(1, 1);
        let expected = [w(9, 4),
            half.checked_sub(&f_map(5).unwrap()).unwrap(),
            half.checked_sub(&f_map(2).unwrap()).unwrap(),
            &half + &f_map(2).unwrap()];
        assert_eq!(c.instance.weights(), &expected[..]);
        assert_eq!(c.instance.bins(), 2);
        let p = pairing_packing(&bsp, &c);
        let r = verify_packing(&c.instance, &p).unwrap();
        assert!(r.feasible);
        assert_eq!(r.packed_count, 4);
        assert_eq!(brute_force_opt(&c.instance).unwrap().opt, 4);
    }

    #[test]
    fn rejects_ambiguous_partitions() {
        assert!(BspInstance::new(vec![3, 3], 1).is_err());
        assert!(BspInstance::new(vec![0, 3], 1).is_err());
        assert!(BspInstance::new(vec![1, 3], 3).is_err());
        assert!(BspInstance::new(vec![3, 3], 2).is_ok());
        assert!(BspInstance::new(vec![], 0).is_ok());
    }

    #[test]
    fn parse_round_trip_and_errors() {
        let bsp = BspInstance::parse("# demo\n4 2\n7 1 9 3\n").unwrap();
        assert_eq!(bsp.values(), &[7, 1, 9, 3]);
        assert_eq!(bsp.threshold(), Some(7));
        assert_eq!(BspInstance::parse(&bsp.serialize()).unwrap(), bsp);
        assert!(matches!(
            BspInstance::parse("3 1\n1 2\n"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            BspInstance::parse("3\n1 2 3\n"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(BspInstance::parse("2 1\n4 x\n").is_err());
        assert!(BspInstance::parse("").is_err());
    }

    #[test]
    fn accounting_examples() {
        assert_eq!(
            accounting_bound(0, 0, 0, 0, 3, 4),
            AccountingBound { tight: 7, loose: 7 }
        );
        assert_eq!(
            accounting_bound(1, 0, 0, 0, 3, 4),
            AccountingBound { tight: 2, loose: 2 }
        );
        assert_eq!(
            accounting_bound(3, 3, 3, 3, 3, 4),
            AccountingBound { tight: 0, loose: 0 }
        );
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(binary_entropy(0.5), 1.0);
        assert_eq!(binary_entropy(1.0), 0.0);
        assert_eq!(entropy_lower_bound(100, 50), Some(0.0));
        assert_eq!(entropy_lower_bound(100, 0), Some(100.0));
        let v = entropy_lower_bound(100, 25).unwrap();
        assert!((v - 18.87).abs() < 0.01, "{v}");
        assert_eq!(entropy_lower_bound(100, 51), None);
        assert_eq!(entropy_lower_bound(0, 0), None);
    }

    #[test]
    fn optimal_replay_guesses_perfectly() {
        let bsp = BspInstance::new(vec![4, 9, 2, 11, 1], 2).unwrap();
        let c = construct(&bsp).unwrap();
        let p = pairing_packing(&bsp, &c);
        let run = reduce_and_run(&bsp, &mut ReplayPacking::new(&p)).unwrap();
        assert_eq!(run.report.unpacked_total, 0);
        assert_eq!(run.report.mistakes, 0);
        assert_eq!(run.report.g1, 2);
        assert_eq!(run.report.g2, 3);
        assert_eq!(run.packing, p);
        assert_eq!(run.report.csv_row(), "0,0,0,0,2,3,5,5,5.0000");
    }

    #[test]
    fn protocol_violation_is_a_simulation_error() {
        let bsp = BspInstance::new(vec![4, 1], 1).unwrap();
        let bad = Packing::new(vec![Some(0), Some(0), Some(0), None]);
        assert!(matches!(
            reduce_and_run(&bsp, &mut ReplayPacking::new(&bad)),
            Err(Error::Simulation(_))
        ));
    }

    proptest! {
        #[test]
        fn constructed_weights_stay_near_half(seed in any::<u64>(), n in 0usize..10) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let bsp = BspInstance::random(&mut rng, n);
            prop_assert!(BspInstance::new(bsp.values().to_vec(), bsp.n1()).is_ok());
            let c = construct(&bsp).unwrap();
            prop_assert_eq!(c.instance.len(), 2 * n);
            let lo = w(3, 3);
            let hi = w(5, 3);
            for x in c.instance.weights() {
                prop_assert!(x > &lo && x <= &hi);
            }
            let p = pairing_packing(&bsp, &c);
            let r = verify_packing(&c.instance, &p).unwrap();
            prop_assert!(r.feasible);
            prop_assert_eq!(r.packed_count, 2 * n);
        }

        #[test]
        fn accounting_holds_for_first_fit_and_random(seed in any::<u64>(), n in 1usize..10) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let bsp = BspInstance::random(&mut rng, n);
            let ff = reduce_and_run(&bsp, &mut FirstFitOnline::new(n)).unwrap().report;
            prop_assert!(ff.g1 + ff.g2 >= ff.bound().loose);
            let rp = reduce_and_run(&bsp, &mut RandomPlacement::new(n, seed, 100)).unwrap().report;
            prop_assert!(rp.g1 + rp.g2 >= rp.bound().loose);
            prop_assert_eq!(rp.g1 + rp.g2 + rp.mistakes, n);
        }

        #[test]
        fn complements_sum_to_one(y in 1u64..5000) {
            let f = f_map(y).unwrap();
            prop_assert_eq!(&(&w(1, 1) + &f) + &w(1, 1).checked_sub(&f).unwrap(), Weight::one());
            prop_assert!(f_map(y + 1).unwrap() < f);
        }
    }
}
