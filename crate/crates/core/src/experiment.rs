//! Instance generators and batch experiments with CSV output.
//!
//! Rows are computed in parallel and sorted by `(instance, algorithm, eps)`
//! before writing, so output is byte-identical for identical configurations
//! unless the informational timing column is switched on.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::advice::simulate;
use crate::error::{Error, Result};
use crate::exact::{
    brute_force_opt_with_guard, DEFAULT_MAX_BRUTE_FORCE_ITEMS, DEFAULT_MAX_DP_STATES,
};
use crate::greedy::{first_fit, first_fit_increasing, rsff};
use crate::instance::{verify_packing, Instance, Packing};
use crate::ptas::{group_size_for, ptas_solve_with, PtasConfig};
use crate::reduction::{construct, BspInstance};
use crate::weight::Weight;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    /// Numerators uniform in `[1, 2^s]`.
    Uniform,
    /// Every weight at most the cap (`eps` of the generator parameters).
    SmallHeavy,
    /// Weights within `1/8` of `1/2`.
    FfiAdversarial,
    /// The `2n` items built from a random separation instance of size `n`.
    ReductionDerived,
}

impl Family {
    pub const ALL: [Family; 4] = [
        Family::Uniform,
        Family::SmallHeavy,
        Family::FfiAdversarial,
        Family::ReductionDerived,
    ];
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Uniform => "uniform",
            Family::SmallHeavy => "small-heavy",
            Family::FfiAdversarial => "ffi-adversarial",
            Family::ReductionDerived => "reduction-derived",
        })
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.to_string() == s)
            .ok_or_else(|| Error::Config(format!("unknown family {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GenParams {
    pub n: usize,
    pub m: usize,
    pub s: u32,
    pub seed: u64,
    /// Weight cap for the small-heavy family.
    pub small_cap: Weight,
}

fn numerator_at_most(rng: &mut ChaCha8Rng, hi: u64) -> u64 {
    rng.gen_range(1..=hi)
}

/// Deterministic per seed. The reduction-derived family ignores `m` and `s`
/// (it uses `n` bins and whatever bit size the construction needs).
pub fn generate_instance(family: Family, p: &GenParams) -> Result<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    if p.s > 62 && family != Family::ReductionDerived {
        return Err(Error::Config(format!("s = {} exceeds 62", p.s)));
    }
    let full = 1u64 << p.s;
    let weights: Vec<Weight> = match family {
        Family::Uniform => (0..p.n)
            .map(|_| Weight::from_parts(numerator_at_most(&mut rng, full), p.s))
            .collect(),
        Family::SmallHeavy => {
            let cap = p
                .small_cap
                .numerator_at(p.s)
                .and_then(|c| u64::try_from(c).ok())
                .filter(|&c| c >= 1 && p.small_cap <= Weight::one())
                .ok_or_else(|| {
                    Error::Config(format!(
                        "cap {} is not a positive weight at bit size {}",
                        p.small_cap, p.s
                    ))
                })?;
            (0..p.n)
                .map(|_| Weight::from_parts(numerator_at_most(&mut rng, cap), p.s))
                .collect()
        }
        Family::FfiAdversarial => {
            if p.s < 3 {
                return Err(Error::Config("ffi-adversarial needs s >= 3".into()));
            }
            let (half, spread) = (full / 2, full / 8);
            (0..p.n)
                .map(|_| Weight::from_parts(rng.gen_range(half - spread + 1..=half + spread), p.s))
                .collect()
        }
        Family::ReductionDerived => {
            let bsp = BspInstance::random(&mut rng, p.n);
            return Ok(construct(&bsp)?.instance);
        }
    };
    Instance::new(weights, p.m)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    Ff,
    Ffi,
    Rsff,
    Ptas,
    AdviceSim,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [
        Algorithm::Ff,
        Algorithm::Ffi,
        Algorithm::Rsff,
        Algorithm::Ptas,
        Algorithm::AdviceSim,
    ];
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Ff => "ff",
            Algorithm::Ffi => "ffi",
            Algorithm::Rsff => "rsff",
            Algorithm::Ptas => "ptas",
            Algorithm::AdviceSim => "advice",
        })
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.to_string() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::Config(format!("unknown algorithm {s:?}")))
    }
}

/// Parses a comma-separated list such as `ff,ffi,ptas`.
pub fn parse_list<T: FromStr<Err = Error>>(s: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(str::parse)
        .collect()
}

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub family: Family,
    pub n: usize,
    pub m: usize,
    pub s: u32,
    pub seed: u64,
    pub count: usize,
    pub algorithms: Vec<Algorithm>,
    pub eps: Vec<Weight>,
    pub oracle: bool,
    pub max_oracle_items: usize,
    pub max_dp_states: u64,
    /// Adds a wall-time column; output is then no longer reproducible.
    pub timing: bool,
    pub threads: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            family: Family::Uniform,
            n: 12,
            m: 3,
            s: 4,
            seed: 1,
            count: 10,
            algorithms: Algorithm::ALL.to_vec(),
            eps: vec![Weight::pow2_inv(2), Weight::pow2_inv(1)],
            oracle: true,
            max_oracle_items: 20,
            max_dp_states: DEFAULT_MAX_DP_STATES,
            timing: false,
            threads: None,
        }
    }
}

impl ExperimentConfig {
    /// Seed of the `i`-th generated instance.
    pub fn instance_seed(&self, i: usize) -> u64 {
        self.seed.wrapping_add(i as u64)
    }

    /// Generator parameters of the `i`-th instance; the small-heavy cap is
    /// the smallest eps of the grid.
    pub fn gen_params(&self, i: usize) -> GenParams {
        GenParams {
            n: self.n,
            m: self.m,
            s: self.s,
            seed: self.instance_seed(i),
            small_cap: self
                .eps
                .iter()
                .min()
                .cloned()
                .unwrap_or_else(|| Weight::pow2_inv(3)),
        }
    }
}

/// One CSV row. Column order is the header order.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Row {
    pub instance: usize,
    pub family: String,
    pub seed: u64,
    pub n: usize,
    pub m: usize,
    pub s: u32,
    pub algorithm: String,
    pub eps: String,
    pub eps_m_ge_1: bool,
    pub packed: Option<usize>,
    pub opt: Option<usize>,
    pub ratio: String,
    pub bound: String,
    pub bound_ok: Option<bool>,
    pub advice_bits: Option<usize>,
    pub branch: String,
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_us: Option<u128>,
}

impl Row {
    /// True iff an invariant assertion fired on this row.
    pub fn violated(&self) -> bool {
        self.status.starts_with("violation")
    }
}

/// `opt <= bound * packed` in exact arithmetic.
pub fn within_ratio(opt: usize, packed: usize, bound: &Weight) -> bool {
    Weight::from_parts(opt as u64, 0) <= bound.mul_int(packed as u64)
}

enum ProvenBound {
    /// `opt <= (4/3) count + 1`; 4/3 is not dyadic, so checked in integers.
    FourThirdsPlusOne,
    Ratio(Weight),
}

fn proven_bound(alg: Algorithm, eps: &Weight, eps_m_ok: bool) -> Option<ProvenBound> {
    match alg {
        Algorithm::Ffi => Some(ProvenBound::FourThirdsPlusOne),
        Algorithm::Ptas | Algorithm::AdviceSim if eps_m_ok => {
            Some(ProvenBound::Ratio(ptas_bound(eps)))
        }
        _ => None,
    }
}

/// `1 + 4 eps`.
pub fn ptas_bound(eps: &Weight) -> Weight {
    &Weight::one() + &eps.mul_int(4)
}

/// `opt <= (4/3) ffi + 1`.
pub fn within_ffi_bound(opt: usize, ffi: usize) -> bool {
    3 * opt <= 4 * ffi + 3
}

struct Outcome {
    packing: Packing,
    advice_bits: Option<usize>,
    branch: String,
    extra_violation: Option<String>,
}

fn run_algorithm(
    alg: Algorithm,
    inst: &Instance,
    eps: &Weight,
    opt: Option<usize>,
    max_dp_states: u64,
) -> Result<Outcome> {
    let plain = |packing, branch: &str| Outcome {
        packing,
        advice_bits: None,
        branch: branch.to_string(),
        extra_violation: None,
    };
    Ok(match alg {
        Algorithm::Ff => plain(first_fit(inst, None, None)?, ""),
        Algorithm::Ffi => plain(first_fit_increasing(inst), ""),
        Algorithm::Rsff => {
            let r = rsff(inst);
            let eta = r
                .eta
                .map_or_else(|| "absent".to_string(), |e| e.to_string());
            plain(r.packing, &format!("eta={eta}"))
        }
        Algorithm::Ptas => {
            let out = ptas_solve_with(
                inst,
                eps,
                PtasConfig {
                    max_dp_states,
                    ..PtasConfig::default()
                },
            )?;
            plain(out.packing, out.branch.label())
        }
        Algorithm::AdviceSim => {
            let rep = simulate(inst, eps, opt)?;
            let extra_violation = (rep.online_count != rep.offline_count).then(|| {
                format!(
                    "online {} != offline {}",
                    rep.online_count, rep.offline_count
                )
            });
            Outcome {
                packing: rep.transcript.packing,
                advice_bits: Some(rep.advice_bits),
                branch: rep.advice.mode_label().to_string(),
                extra_violation,
            }
        }
    })
}

fn evaluate(
    cfg: &ExperimentConfig,
    index: usize,
    inst: &Instance,
    opt: Option<usize>,
    alg: Algorithm,
    eps: &Weight,
) -> Row {
    let eps_m_ok = group_size_for(inst.bins(), eps) >= 1;
    let mut row = Row {
        instance: index,
        family: cfg.family.to_string(),
        seed: cfg.instance_seed(index),
        n: inst.len(),
        m: inst.bins(),
        s: inst.bit_size(),
        algorithm: alg.to_string(),
        eps: eps.to_string(),
        eps_m_ge_1: eps_m_ok,
        packed: None,
        opt,
        ratio: String::new(),
        bound: String::new(),
        bound_ok: None,
        advice_bits: None,
        branch: String::new(),
        status: "ok".into(),
        wall_us: None,
    };
    let start = Instant::now();
    let outcome = run_algorithm(alg, inst, eps, opt, cfg.max_dp_states);
    if cfg.timing {
        row.wall_us = Some(start.elapsed().as_micros());
    }
    let out = match outcome {
        Ok(out) => out,
        Err(e) => {
            row.status = format!("error: {e}");
            return row;
        }
    };
    row.advice_bits = out.advice_bits;
    row.branch = out.branch;
    match verify_packing(inst, &out.packing) {
        Ok(rep) if rep.feasible => row.packed = Some(rep.packed_count),
        Ok(rep) => {
            row.status = format!("violation: {} overfull bins", rep.violations.len());
            return row;
        }
        Err(e) => {
            row.status = format!("violation: {e}");
            return row;
        }
    }
    let packed = row.packed.expect("set above");
    if let Some(opt) = opt {
        row.ratio = if packed == 0 {
            if opt == 0 {
                "1.000000".into()
            } else {
                "inf".into()
            }
        } else {
            format!("{:.6}", opt as f64 / packed as f64)
        };
        if opt < packed {
            row.status = format!("violation: packed {packed} exceeds optimum {opt}");
            return row;
        }
        match proven_bound(alg, eps, eps_m_ok) {
            Some(ProvenBound::FourThirdsPlusOne) => {
                row.bound = "4/3+1".into();
                row.bound_ok = Some(within_ffi_bound(opt, packed));
            }
            Some(ProvenBound::Ratio(b)) => {
                row.bound = b.to_string();
                row.bound_ok = Some(within_ratio(opt, packed, &b));
            }
            None => {}
        }
        if row.bound_ok == Some(false) {
            row.status = format!("violation: ratio above {}", row.bound);
        }
    }
    if let Some(v) = out.extra_violation {
        row.status = format!("violation: {v}");
    }
    row
}

#[derive(Clone, Debug)]
pub struct ExperimentReport {
    pub rows: Vec<Row>,
}

impl ExperimentReport {
    pub fn violations(&self) -> usize {
        self.rows.iter().filter(|r| r.violated()).count()
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.rows {
            w.serialize(r).map_err(|e| Error::Config(e.to_string()))?;
        }
        if self.rows.is_empty() {
            return Ok(String::new());
        }
        let bytes = w.into_inner().map_err(|e| Error::Config(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Config(e.to_string()))
    }
}

fn instance_rows(cfg: &ExperimentConfig, index: usize) -> Result<Vec<Row>> {
    let inst = generate_instance(cfg.family, &cfg.gen_params(index))?;
    let opt = if cfg.oracle {
        brute_force_opt_with_guard(&inst, cfg.max_oracle_items)
            .ok()
            .map(|r| r.opt)
    } else {
        None
    };
    let mut rows = Vec::new();
    for &alg in &cfg.algorithms {
        for eps in &cfg.eps {
            rows.push(evaluate(cfg, index, &inst, opt, alg, eps));
        }
    }
    Ok(rows)
}

/// Runs every algorithm on every generated instance for every eps.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    if cfg.eps.iter().any(|e| e.is_zero() || e >= &Weight::one()) {
        return Err(Error::Config("every eps must lie in (0, 1)".into()));
    }
    if cfg.max_oracle_items > DEFAULT_MAX_BRUTE_FORCE_ITEMS {
        return Err(Error::Config(format!(
            "oracle limit {} exceeds {DEFAULT_MAX_BRUTE_FORCE_ITEMS}",
            cfg.max_oracle_items
        )));
    }
    let work = || -> Result<Vec<Row>> {
        let per_instance: Vec<Result<Vec<Row>>> = (0..cfg.count)
            .into_par_iter()
            .map(|i| instance_rows(cfg, i))
            .collect();
        let mut rows = Vec::new();
        for r in per_instance {
            rows.extend(r?);
        }
        Ok(rows)
    };
    let mut rows = match cfg.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::Config(e.to_string()))?
            .install(work)?,
        None => work()?,
    };
    let key = |r: &Row| {
        (
            r.instance,
            r.algorithm.parse::<Algorithm>().ok(),
            r.eps.parse::<Weight>().ok(),
        )
    };
    rows.sort_by_key(|a| key(a));
    Ok(ExperimentReport { rows })
}
