//! One-item-at-a-time execution of online algorithms.
//!
//! An [`OnlineAlgorithm`] only ever sees the weight of the item currently
//! being decided; the [`Simulator`] owns the bins, applies each decision
//! before the next item is revealed, and refuses decisions that would
//! overfill a bin.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::greedy::first_fit_bin;
use crate::instance::{Instance, Packing};
use crate::weight::Weight;

pub trait OnlineAlgorithm {
    fn name(&self) -> &str;

    /// Irrevocable placement of the current item: `Some(bin)` or reject.
    fn decide(&mut self, weight: &Weight) -> Result<Option<usize>>;
}

/// Owns the bin state of an online run.
#[derive(Debug)]
pub struct Simulator {
    loads: Vec<Weight>,
    weights: Vec<Weight>,
    decisions: Vec<Option<usize>>,
}

impl Simulator {
    pub fn new(bins: usize) -> Self {
        Simulator {
            loads: vec![Weight::zero(); bins],
            weights: Vec::new(),
            decisions: Vec::new(),
        }
    }

    /// Reveals one item to `alg` and commits its decision.
    pub fn feed(&mut self, alg: &mut dyn OnlineAlgorithm, weight: Weight) -> Result<Option<usize>> {
        let decision = alg.decide(&weight)?;
        if let Some(b) = decision {
            let Some(load) = self.loads.get_mut(b) else {
                return Err(Error::Protocol(format!(
                    "{} placed item {} into bin {} of {}",
                    alg.name(),
                    self.weights.len() + 1,
                    b + 1,
                    self.loads.len()
                )));
            };
            let next = &*load + &weight;
            if next > Weight::one() {
                return Err(Error::Protocol(format!(
                    "{} overfilled bin {} with item {} (load {next})",
                    alg.name(),
                    b + 1,
                    self.weights.len() + 1
                )));
            }
            *load = next;
        }
        self.weights.push(weight);
        self.decisions.push(decision);
        Ok(decision)
    }

    pub fn loads(&self) -> &[Weight] {
        &self.loads
    }

    pub fn decisions(&self) -> &[Option<usize>] {
        &self.decisions
    }

    /// The items revealed so far and the packing of them.
    pub fn finish(self) -> Result<(Instance, Packing)> {
        let bins = self.loads.len();
        Ok((
            Instance::new(self.weights, bins)?,
            Packing::new(self.decisions),
        ))
    }
}

/// Runs `alg` over the instance in arrival order.
pub fn run_online(inst: &Instance, alg: &mut dyn OnlineAlgorithm) -> Result<Packing> {
    let mut sim = Simulator::new(inst.bins());
    for w in inst.weights() {
        sim.feed(alg, w.clone())?;
    }
    Ok(sim.finish()?.1)
}

/// First Fit as an online algorithm.
#[derive(Clone, Debug)]
pub struct FirstFitOnline {
    loads: Vec<Weight>,
}

impl FirstFitOnline {
    pub fn new(bins: usize) -> Self {
        FirstFitOnline {
            loads: vec![Weight::zero(); bins],
        }
    }
}

impl OnlineAlgorithm for FirstFitOnline {
    fn name(&self) -> &str {
        "first-fit"
    }

    fn decide(&mut self, weight: &Weight) -> Result<Option<usize>> {
        let bin = first_fit_bin(&self.loads, weight);
        if let Some(b) = bin {
            self.loads[b] += weight;
        }
        Ok(bin)
    }
}

/// Places each item into a uniformly random bin among those it fits in,
/// or rejects it with probability `reject_per_mille / 1000`.
#[derive(Clone, Debug)]
pub struct RandomPlacement {
    loads: Vec<Weight>,
    rng: ChaCha8Rng,
    reject_per_mille: u32,
}

impl RandomPlacement {
    pub fn new(bins: usize, seed: u64, reject_per_mille: u32) -> Self {
        RandomPlacement {
            loads: vec![Weight::zero(); bins],
            rng: ChaCha8Rng::seed_from_u64(seed),
            reject_per_mille,
        }
    }
}

impl OnlineAlgorithm for RandomPlacement {
    fn name(&self) -> &str {
        "random-placement"
    }

    fn decide(&mut self, weight: &Weight) -> Result<Option<usize>> {
        if self.rng.gen_range(0..1000) < self.reject_per_mille {
            return Ok(None);
        }
        let one = Weight::one();
        let fits: Vec<usize> = (0..self.loads.len())
            .filter(|&b| (&self.loads[b] + weight) <= one)
            .collect();
        if fits.is_empty() {
            return Ok(None);
        }
        let b = fits[self.rng.gen_range(0..fits.len())];
        self.loads[b] += weight;
        Ok(Some(b))
    }
}

/// Replays a precomputed packing, e.g. an offline optimum handed to the
/// player in full as advice.
#[derive(Clone, Debug)]
pub struct ReplayPacking {
    decisions: Vec<Option<usize>>,
    next: usize,
}

impl ReplayPacking {
    pub fn new(packing: &Packing) -> Self {
        ReplayPacking {
            decisions: packing.assignment().to_vec(),
            next: 0,
        }
    }
}

impl OnlineAlgorithm for ReplayPacking {
    fn name(&self) -> &str {
        "replay"
    }

    fn decide(&mut self, _weight: &Weight) -> Result<Option<usize>> {
        let d = *self.decisions.get(self.next).ok_or_else(|| {
            Error::Protocol(format!(
                "replay has only {} decisions",
                self.decisions.len()
            ))
        })?;
        self.next += 1;
        Ok(d)
    }
}
