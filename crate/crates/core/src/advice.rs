//! Tape advice for online dual bin packing.
//!
//! The oracle runs RSFF. If the threshold `eta` is at most `eps`, the tape
//! holds `eta` and the player runs First Fit on items no heavier than it.
//! Otherwise the tape holds the group sizes and rounded weights of the
//! large items; the player solves the same configuration DP, reserves
//! slots, sends large items to slots and fills the rest of each bin with
//! small items by First Fit.
//!
//! `n`, `m`, `s` and `eps` are public and not written on the tape.
//!
//! Bit layout, MSB first, no padding:
//!
//! ```text
//! mode (1 bit): 0 = first fit, 1 = rounded
//! first fit:  eta numerator at exponent s            (s bits)
//! rounded:    k                                      (B_k bits)
//!             k x [ group size (ceil log2(n+1) bits), rounded weight numerator (s bits) ]
//! B_k = ceil(log2(ceil(1/eps^2) + 2))
//! ```
//!
//! A weight field stores its numerator modulo `2^s`, so the all-zero field
//! stands for weight 1. With `m = 0` there is nothing to pack and the
//! all-zero field in first-fit mode means "absent"; with bins available an
//! absent threshold sends the oracle to rounded mode.

use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::exact::DEFAULT_MAX_DP_STATES;
use crate::greedy::{first_fit_bin, rsff};
use crate::instance::{verify_packing, Instance, Packing};
use crate::online::{OnlineAlgorithm, Simulator};
use crate::ptas::{
    large_item_groups, ptas_solve_with, split_small_large, threshold_branch_applies, FirstStep,
    PtasConfig, SlotLayout,
};
use crate::weight::Weight;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Advice {
    FirstFit {
        eta: Option<Weight>,
    },
    Rounded {
        group_sizes: Vec<usize>,
        rounded_weights: Vec<Weight>,
    },
}

impl Advice {
    pub fn mode_label(&self) -> &'static str {
        match self {
            Advice::FirstFit { .. } => "ff",
            Advice::Rounded { .. } => "rounded",
        }
    }

    pub fn k(&self) -> usize {
        match self {
            Advice::FirstFit { .. } => 0,
            Advice::Rounded { group_sizes, .. } => group_sizes.len(),
        }
    }
}

/// Parameters shared by oracle and player.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AdviceParams {
    pub n: usize,
    pub m: usize,
    pub s: u32,
    pub eps: Weight,
}

impl AdviceParams {
    pub fn for_instance(inst: &Instance, eps: &Weight) -> Self {
        AdviceParams {
            n: inst.len(),
            m: inst.bins(),
            s: inst.bit_size(),
            eps: eps.clone(),
        }
    }

    /// `ceil(1 / eps^2)`.
    pub fn inverse_eps_squared(&self) -> BigUint {
        let num = BigUint::one() << (2 * self.eps.exponent());
        let den = self.eps.numerator() * self.eps.numerator();
        num.div_ceil(&den)
    }

    /// `B_k = ceil(log2(ceil(1/eps^2) + 2))`.
    pub fn k_field_bits(&self) -> usize {
        ceil_log2(&(self.inverse_eps_squared() + 2u32))
    }

    /// `ceil(log2(n + 1))`.
    pub fn size_field_bits(&self) -> usize {
        ceil_log2(&BigUint::from(self.n + 1))
    }

    /// Tape length for a rounded-mode advice with `k` groups.
    pub fn rounded_len(&self, k: usize) -> usize {
        1 + self.k_field_bits() + k * (self.size_field_bits() + self.s as usize)
    }

    pub fn first_fit_len(&self) -> usize {
        1 + self.s as usize
    }
}

fn ceil_log2(x: &BigUint) -> usize {
    if *x <= BigUint::one() {
        0
    } else {
        (x - 1u32).bits() as usize
    }
}

/// A bit string, most significant bit of each field first.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct BitString(Vec<bool>);

impl BitString {
    pub fn new() -> Self {
        BitString(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    fn push_uint(&mut self, value: &BigUint, width: usize) {
        for i in (0..width).rev() {
            self.0.push(value.bit(i as u64));
        }
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_char(if b { '1' } else { '0' })?;
        }
        Ok(())
    }
}

impl FromStr for BitString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.trim()
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::Decode(format!("invalid bit character {other:?}"))),
            })
            .collect::<Result<Vec<bool>>>()
            .map(BitString)
    }
}

struct BitReader<'a> {
    bits: &'a [bool],
    pos: usize,
}

impl BitReader<'_> {
    fn read(&mut self, width: usize, what: &str) -> Result<BigUint> {
        if self.pos + width > self.bits.len() {
            return Err(Error::Decode(format!(
                "truncated advice: need {width} bits for {what} at offset {}, have {}",
                self.pos,
                self.bits.len() - self.pos
            )));
        }
        let mut v = BigUint::zero();
        for &b in &self.bits[self.pos..self.pos + width] {
            v <<= 1u32;
            if b {
                v += 1u32;
            }
        }
        self.pos += width;
        Ok(v)
    }
}

fn weight_field(w: &Weight, s: u32) -> Result<BigUint> {
    let num = w.numerator_at(s).ok_or_else(|| {
        Error::Precondition(format!("weight {w} is not representable at exponent {s}"))
    })?;
    Ok(num % (BigUint::one() << s))
}

fn field_weight(field: BigUint, s: u32) -> Weight {
    if field.is_zero() {
        Weight::one()
    } else {
        Weight::new(field, s)
    }
}

pub fn encode_advice(advice: &Advice, params: &AdviceParams) -> Result<BitString> {
    let mut out = BitString::new();
    match advice {
        Advice::FirstFit { eta } => {
            out.0.push(false);
            let no_threshold = params.m == 0;
            match eta {
                None if no_threshold => out.push_uint(&BigUint::zero(), params.s as usize),
                None => {
                    return Err(Error::Precondition(
                        "absent threshold is only encodable when m = 0".into(),
                    ))
                }
                Some(_) if no_threshold => {
                    return Err(Error::Precondition(
                        "a threshold cannot exist when m = 0".into(),
                    ))
                }
                Some(eta) => out.push_uint(&weight_field(eta, params.s)?, params.s as usize),
            }
        }
        Advice::Rounded {
            group_sizes,
            rounded_weights,
        } => {
            validate_rounded(group_sizes, rounded_weights, params)?;
            out.0.push(true);
            out.push_uint(&BigUint::from(group_sizes.len()), params.k_field_bits());
            for (size, w) in group_sizes.iter().zip(rounded_weights) {
                out.push_uint(&BigUint::from(*size), params.size_field_bits());
                out.push_uint(&weight_field(w, params.s)?, params.s as usize);
            }
        }
    }
    Ok(out)
}

fn validate_rounded(sizes: &[usize], weights: &[Weight], params: &AdviceParams) -> Result<()> {
    if sizes.len() != weights.len() {
        return Err(Error::Structure(
            "group sizes and weights differ in length".into(),
        ));
    }
    let k_max = (BigUint::one() << params.k_field_bits()) - 1u32;
    if BigUint::from(sizes.len()) > k_max {
        return Err(Error::Precondition(format!(
            "k = {} does not fit in {} bits",
            sizes.len(),
            params.k_field_bits()
        )));
    }
    if sizes.iter().any(|&z| z == 0 || z > params.n) || sizes.iter().sum::<usize>() > params.n {
        return Err(Error::Precondition(format!(
            "group sizes {sizes:?} inconsistent with n = {}",
            params.n
        )));
    }
    if weights.windows(2).any(|p| p[0] > p[1]) {
        return Err(Error::Precondition(
            "rounded weights must be non-decreasing".into(),
        ));
    }
    if weights
        .iter()
        .any(|w| w <= &params.eps || !w.is_item_weight())
    {
        return Err(Error::Precondition(
            "rounded weights must lie in (eps, 1]".into(),
        ));
    }
    Ok(())
}

pub fn decode_advice(bits: &BitString, params: &AdviceParams) -> Result<Advice> {
    let mut r = BitReader {
        bits: bits.bits(),
        pos: 0,
    };
    let mode = r.read(1, "mode")?;
    let advice = if mode.is_zero() {
        let field = r.read(params.s as usize, "eta")?;
        let eta = if field.is_zero() && params.m == 0 {
            None
        } else {
            Some(field_weight(field, params.s))
        };
        Advice::FirstFit { eta }
    } else {
        let k = r
            .read(params.k_field_bits(), "k")?
            .to_usize()
            .ok_or_else(|| Error::Decode("k out of range".into()))?;
        let mut group_sizes = Vec::with_capacity(k);
        let mut rounded_weights = Vec::with_capacity(k);
        for i in 0..k {
            let size = r.read(params.size_field_bits(), "group size")?;
            let size = size
                .to_usize()
                .ok_or_else(|| Error::Decode(format!("group {} size out of range", i + 1)))?;
            group_sizes.push(size);
            rounded_weights.push(field_weight(
                r.read(params.s as usize, "rounded weight")?,
                params.s,
            ));
        }
        validate_rounded(&group_sizes, &rounded_weights, params)
            .map_err(|e| Error::Decode(e.to_string()))?;
        Advice::Rounded {
            group_sizes,
            rounded_weights,
        }
    };
    if r.pos != bits.len() {
        return Err(Error::Decode(format!(
            "{} trailing bits after advice",
            bits.len() - r.pos
        )));
    }
    Ok(advice)
}

/// The oracle: inspects the whole instance and chooses the tape content.
pub fn build_advice(inst: &Instance, eps: &Weight) -> Result<Advice> {
    let split = split_small_large(inst, eps)?;
    let r = rsff(inst);
    if threshold_branch_applies(r.eta.as_ref(), eps, inst.bins()) {
        return Ok(Advice::FirstFit { eta: r.eta });
    }
    let (_, groups) = large_item_groups(inst, eps, &split)?;
    Ok(match groups {
        None => Advice::Rounded {
            group_sizes: Vec::new(),
            rounded_weights: Vec::new(),
        },
        Some(g) => Advice::Rounded {
            group_sizes: g.group_sizes(),
            rounded_weights: g.rounded_weights,
        },
    })
}

/// How the player handled one item.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SlotUse {
    /// Occupied a reserved slot of this class (0-based).
    Class(usize),
    /// Packed by First Fit into unreserved space.
    Small,
    /// Rejected.
    None,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TranscriptEntry {
    pub item: usize,
    pub decision: Option<usize>,
    pub slot: SlotUse,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OnlineTranscript {
    pub entries: Vec<TranscriptEntry>,
    pub packing: Packing,
    pub advice_bits_used: usize,
}

impl OnlineTranscript {
    /// One line per item: `item bin class`, with 1-based item, bin and class
    /// numbers and `REJECT` / `SMALL` / `NONE` markers.
    pub fn to_log(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            let bin = e
                .decision
                .map_or("REJECT".to_string(), |b| (b + 1).to_string());
            let class = match e.slot {
                SlotUse::Class(c) => (c + 1).to_string(),
                SlotUse::Small => "SMALL".into(),
                SlotUse::None => "NONE".into(),
            };
            writeln!(out, "{} {bin} {class}", e.item + 1).expect("write to string");
        }
        out
    }
}

enum PlayerState {
    FirstFit {
        eta: Option<Weight>,
        loads: Vec<Weight>,
    },
    Rounded {
        layout: Option<SlotLayout>,
        loads: Vec<Weight>,
        free_slots: Vec<Vec<usize>>,
    },
}

/// The online player. Holds only the public parameters, the decoded tape
/// and the items seen so far.
pub struct AdvicePlayer {
    params: AdviceParams,
    state: PlayerState,
    seen: usize,
    last_slot: SlotUse,
    uses: Vec<SlotUse>,
}

impl AdvicePlayer {
    pub fn new(params: AdviceParams, advice: Advice) -> Result<Self> {
        Self::with_guard(params, advice, DEFAULT_MAX_DP_STATES)
    }

    pub fn with_guard(params: AdviceParams, advice: Advice, max_states: u64) -> Result<Self> {
        let m = params.m;
        let state = match advice {
            Advice::FirstFit { eta } => PlayerState::FirstFit {
                eta,
                loads: vec![Weight::zero(); m],
            },
            Advice::Rounded {
                group_sizes,
                rounded_weights,
            } => {
                if group_sizes.is_empty() {
                    PlayerState::Rounded {
                        layout: None,
                        loads: vec![Weight::zero(); m],
                        free_slots: Vec::new(),
                    }
                } else {
                    let layout = SlotLayout::build(&group_sizes, &rounded_weights, m, max_states)?;
                    PlayerState::Rounded {
                        loads: layout.reservations.clone(),
                        free_slots: layout.bin_contents.clone(),
                        layout: Some(layout),
                    }
                }
            }
        };
        Ok(AdvicePlayer {
            params,
            state,
            seen: 0,
            last_slot: SlotUse::None,
            uses: Vec::new(),
        })
    }

    pub fn slot_uses(&self) -> &[SlotUse] {
        &self.uses
    }

    /// Number of reserved slots still empty.
    pub fn open_slots(&self) -> usize {
        match &self.state {
            PlayerState::FirstFit { .. } => 0,
            PlayerState::Rounded { free_slots, .. } => free_slots.iter().flatten().sum(),
        }
    }

    fn place(&mut self, weight: &Weight) -> (Option<usize>, SlotUse) {
        match &mut self.state {
            PlayerState::FirstFit { eta, loads } => {
                if eta.as_ref().is_some_and(|eta| weight <= eta) {
                    if let Some(b) = first_fit_bin(loads, weight) {
                        loads[b] += weight;
                        return (Some(b), SlotUse::Small);
                    }
                }
                (None, SlotUse::None)
            }
            PlayerState::Rounded {
                layout,
                loads,
                free_slots,
            } => {
                if weight <= &self.params.eps {
                    if let Some(b) = first_fit_bin(loads, weight) {
                        loads[b] += weight;
                        return (Some(b), SlotUse::Small);
                    }
                    return (None, SlotUse::None);
                }
                let Some(layout) = layout else {
                    return (None, SlotUse::None);
                };
                let first = layout.class_weights.partition_point(|c| c < weight);
                for class in first..layout.class_weights.len() {
                    if let Some(bin) = free_slots.iter().position(|f| f[class] > 0) {
                        free_slots[bin][class] -= 1;
                        return (Some(bin), SlotUse::Class(class));
                    }
                }
                (None, SlotUse::None)
            }
        }
    }
}

impl OnlineAlgorithm for AdvicePlayer {
    fn name(&self) -> &str {
        "advice-player"
    }

    fn decide(&mut self, weight: &Weight) -> Result<Option<usize>> {
        if self.seen == self.params.n {
            return Err(Error::Protocol(format!(
                "more than n = {} items arrived",
                self.params.n
            )));
        }
        self.seen += 1;
        let (decision, slot) = self.place(weight);
        self.last_slot = slot;
        self.uses.push(slot);
        Ok(decision)
    }
}

/// Feeds `inst` to a player built from `bits` one item at a time.
pub fn online_play(
    inst: &Instance,
    params: &AdviceParams,
    bits: &BitString,
) -> Result<OnlineTranscript> {
    if params.n != inst.len() || params.m != inst.bins() {
        return Err(Error::Protocol(format!(
            "advice parameters (n = {}, m = {}) do not match the stream (n = {}, m = {})",
            params.n,
            params.m,
            inst.len(),
            inst.bins()
        )));
    }
    let advice = decode_advice(bits, params)?;
    let mut player = AdvicePlayer::new(params.clone(), advice)?;
    let mut sim = Simulator::new(params.m);
    let mut entries = Vec::with_capacity(inst.len());
    for (item, w) in inst.weights().iter().enumerate() {
        let decision = sim.feed(&mut player, w.clone())?;
        entries.push(TranscriptEntry {
            item,
            decision,
            slot: player.last_slot,
        });
    }
    if player.open_slots() > 0 {
        return Err(Error::Protocol(format!(
            "{} reserved slots remain empty at end of stream; advice does not match the input",
            player.open_slots()
        )));
    }
    let (_, packing) = sim.finish()?;
    Ok(OnlineTranscript {
        entries,
        packing,
        advice_bits_used: bits.len(),
    })
}

/// Rebuilds the packing from the transcript by applying each logged
/// decision in order against the instance, checking capacity at every step.
pub fn replay_transcript(inst: &Instance, transcript: &OnlineTranscript) -> Result<Packing> {
    if transcript.entries.len() != inst.len() {
        return Err(Error::Simulation(format!(
            "transcript has {} entries for {} items",
            transcript.entries.len(),
            inst.len()
        )));
    }
    let mut loads = vec![Weight::zero(); inst.bins()];
    let mut packing = Packing::rejecting_all(inst.len());
    for (pos, e) in transcript.entries.iter().enumerate() {
        if e.item != pos {
            return Err(Error::Simulation(format!(
                "entry {} decides item {} out of arrival order",
                pos + 1,
                e.item + 1
            )));
        }
        if let Some(b) = e.decision {
            let load = loads.get_mut(b).ok_or_else(|| {
                Error::Simulation(format!("entry {} names bin {}", pos + 1, b + 1))
            })?;
            *load += inst.weight(pos);
            if *load > Weight::one() {
                return Err(Error::Simulation(format!(
                    "bin {} overfull on replay",
                    b + 1
                )));
            }
        }
        if (e.decision.is_none()) != (e.slot == SlotUse::None) {
            return Err(Error::Simulation(format!(
                "entry {} has inconsistent decision and slot",
                pos + 1
            )));
        }
        packing.set(pos, e.decision);
    }
    Ok(packing)
}

/// Outcome of one oracle-to-player round trip.
#[derive(Clone, Debug)]
pub struct SimulationReport {
    pub advice: Advice,
    pub advice_bits: usize,
    /// Tape length predicted by the layout formula for the chosen mode.
    pub predicted_bits: usize,
    pub online_count: usize,
    pub offline_count: usize,
    pub opt: Option<usize>,
    pub transcript: OnlineTranscript,
}

impl SimulationReport {
    /// `opt / online_count`, when an optimum is known.
    pub fn ratio(&self) -> Option<f64> {
        self.opt.map(|opt| {
            if self.online_count == 0 {
                if opt == 0 {
                    1.0
                } else {
                    f64::INFINITY
                }
            } else {
                opt as f64 / self.online_count as f64
            }
        })
    }
}

/// Oracle, encoder, decoder and player in sequence, with contract checks.
///
/// `opt` is computed by the caller when an exact oracle is affordable.
pub fn simulate(inst: &Instance, eps: &Weight, opt: Option<usize>) -> Result<SimulationReport> {
    let params = AdviceParams::for_instance(inst, eps);
    let advice = build_advice(inst, eps)?;
    let bits = encode_advice(&advice, &params)?;
    let decoded = decode_advice(&bits, &params)?;
    if decoded != advice {
        return Err(Error::Simulation(
            "advice does not survive encode/decode".into(),
        ));
    }
    let predicted_bits = match &advice {
        Advice::FirstFit { .. } => params.first_fit_len(),
        Advice::Rounded { group_sizes, .. } => params.rounded_len(group_sizes.len()),
    };
    if bits.len() != predicted_bits {
        return Err(Error::Simulation(format!(
            "tape has {} bits, layout predicts {predicted_bits}",
            bits.len()
        )));
    }

    let transcript = online_play(inst, &params, &bits)?;
    let report = verify_packing(inst, &transcript.packing)?;
    if !report.feasible {
        return Err(Error::Simulation("online packing is infeasible".into()));
    }
    if replay_transcript(inst, &transcript)? != transcript.packing {
        return Err(Error::Simulation(
            "transcript replay diverges from the packing".into(),
        ));
    }

    let offline = ptas_solve_with(
        inst,
        eps,
        PtasConfig {
            first_step: FirstStep::Rsff,
            ..PtasConfig::default()
        },
    )?;
    Ok(SimulationReport {
        advice,
        advice_bits: bits.len(),
        predicted_bits,
        online_count: report.packed_count,
        offline_count: offline.packing.packed_count(),
        opt,
        transcript,
    })
}
