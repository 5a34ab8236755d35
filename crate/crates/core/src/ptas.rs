//! Approximation scheme for dual bin packing.
//!
//! Items of weight at most `eps` are small, the rest large. If First Fit
//! Increasing cannot pack all small items, its packing is already within
//! `1 + eps` of optimal. Otherwise the lightest large items that leave
//! `eps * m` breathing room (`L'`) are grouped in sorted order into blocks
//! of `floor(eps * m)`, each block is rounded up to its heaviest weight, the
//! rounded instance is solved exactly by the configuration DP, and the small
//! items are added by First Fit around the reserved slots.
//!
//! With `eps <= 1/4` the result satisfies `OPT <= (1 + 4 eps) * ALG`:
//! dropping one group costs at most `eps * m` items of an LFP optimum `F`,
//! and `|F| + |S| >= m (1 - eps)` when `F != L`, so
//! `|F'| + |S| >= (|F| + |S|)(1 - 2 eps) / (1 - eps)`; combined with
//! `OPT <= (|F| + |S|) / (1 - eps)` this gives `OPT <= (|F'| + |S|) / (1 - 2 eps)`,
//! and `1 / (1 - 2 eps) <= 1 + 4 eps` exactly when `eps <= 1/4`.

use num_bigint::BigUint;
use num_traits::ToPrimitive;

use crate::error::{Error, Result};
use crate::exact::{solve_grouped_dp_with_guard, BinTuple, GroupedInstance, DEFAULT_MAX_DP_STATES};
use crate::greedy::{first_fit_bin, first_fit_order, rsff};
use crate::instance::{Instance, Packing};
use crate::weight::Weight;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SplitResult {
    /// Indices with weight `<= eps`, in arrival order.
    pub small: Vec<usize>,
    /// Indices with weight `> eps`, in arrival order.
    pub large: Vec<usize>,
    pub small_weight: Weight,
}

fn check_eps(eps: &Weight) -> Result<()> {
    if eps.is_zero() || *eps >= Weight::one() {
        return Err(Error::Precondition(format!(
            "epsilon must lie in (0, 1), got {eps}"
        )));
    }
    Ok(())
}

pub fn split_small_large(inst: &Instance, eps: &Weight) -> Result<SplitResult> {
    check_eps(eps)?;
    let (small, large): (Vec<usize>, Vec<usize>) =
        (0..inst.len()).partition(|&i| inst.weight(i) <= eps);
    let small_weight = small.iter().map(|&i| inst.weight(i)).sum();
    Ok(SplitResult {
        small,
        large,
        small_weight,
    })
}

/// `m (1 - eps) - w(S)`, or `None` when negative.
pub fn lfp_budget(bins: usize, eps: &Weight, small_weight: &Weight) -> Option<Weight> {
    let room = Weight::one().checked_sub(eps)?.mul_int(bins as u64);
    room.checked_sub(small_weight)
}

/// Takes items of `large` in `(weight, index)` order while the running
/// total stays within `budget`. A `None` budget (negative) selects nothing.
pub fn select_l_prime(inst: &Instance, large: &[usize], budget: Option<&Weight>) -> Vec<usize> {
    let Some(budget) = budget else {
        return Vec::new();
    };
    let mut sorted = large.to_vec();
    sorted.sort_by(|&a, &b| inst.weight(a).cmp(inst.weight(b)).then(a.cmp(&b)));
    let mut total = Weight::zero();
    let mut chosen = Vec::new();
    for i in sorted {
        let next = &total + inst.weight(i);
        if &next > budget {
            break;
        }
        total = next;
        chosen.push(i);
    }
    chosen
}

/// Consecutive groups of the sorted `L'` with their rounded weights.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroupSpec {
    pub group_size: usize,
    /// Members of each group, in sorted-weight order.
    pub groups: Vec<Vec<usize>>,
    /// Heaviest true weight of each group; non-decreasing.
    pub rounded_weights: Vec<Weight>,
}

impl GroupSpec {
    pub fn k(&self) -> usize {
        self.groups.len()
    }

    pub fn group_sizes(&self) -> Vec<usize> {
        self.groups.iter().map(Vec::len).collect()
    }
}

/// `floor(eps * m)`.
pub fn group_size_for(bins: usize, eps: &Weight) -> usize {
    let scaled = eps.mul_int(bins as u64);
    let floor: BigUint = scaled.numerator() >> scaled.exponent();
    floor.to_usize().unwrap_or(usize::MAX)
}

/// Splits `l_prime` (sorted by weight) into runs of `floor(eps * m)` items,
/// the last run possibly shorter, and rounds each run up to its maximum.
pub fn group_and_round(
    inst: &Instance,
    l_prime: &[usize],
    bins: usize,
    eps: &Weight,
) -> Result<GroupSpec> {
    let g = group_size_for(bins, eps);
    if g == 0 {
        return Err(Error::Precondition(format!(
            "eps * m = {} < 1: grouping is undefined, fall back to the exact oracle",
            eps.mul_int(bins as u64)
        )));
    }
    if l_prime.is_empty() {
        return Err(Error::Precondition("L' is empty".into()));
    }
    let groups: Vec<Vec<usize>> = l_prime.chunks(g).map(<[usize]>::to_vec).collect();
    let rounded_weights = groups
        .iter()
        .map(|grp| {
            grp.iter()
                .map(|&i| inst.weight(i))
                .max()
                .expect("non-empty chunk")
                .clone()
        })
        .collect();
    Ok(GroupSpec {
        group_size: g,
        groups,
        rounded_weights,
    })
}

/// Slots reserved by the DP on a rounded instance.
///
/// Groups with equal rounded weight are merged into one slot class before
/// solving, so the DP sees strictly increasing weights. Both the offline
/// solver and the online player build this from `(sizes, rounded weights,
/// m)` alone and therefore agree on it exactly.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SlotLayout {
    pub class_weights: Vec<Weight>,
    pub class_sizes: Vec<usize>,
    /// Which input groups make up each class.
    pub class_groups: Vec<Vec<usize>>,
    /// Slots per class, per bin.
    pub bin_contents: Vec<BinTuple>,
    /// Rounded weight reserved in each bin.
    pub reservations: Vec<Weight>,
}

impl SlotLayout {
    pub fn build(
        group_sizes: &[usize],
        rounded_weights: &[Weight],
        bins: usize,
        max_states: u64,
    ) -> Result<Self> {
        if group_sizes.len() != rounded_weights.len() {
            return Err(Error::Structure(
                "group sizes and weights differ in length".into(),
            ));
        }
        if rounded_weights.windows(2).any(|p| p[0] > p[1]) {
            return Err(Error::Structure(
                "rounded weights must be non-decreasing".into(),
            ));
        }
        let mut class_weights: Vec<Weight> = Vec::new();
        let mut class_sizes: Vec<usize> = Vec::new();
        let mut class_groups: Vec<Vec<usize>> = Vec::new();
        for (g, (size, w)) in group_sizes.iter().zip(rounded_weights).enumerate() {
            if class_weights.last() == Some(w) {
                *class_sizes.last_mut().expect("parallel") += size;
                class_groups.last_mut().expect("parallel").push(g);
            } else {
                class_weights.push(w.clone());
                class_sizes.push(*size);
                class_groups.push(vec![g]);
            }
        }
        let gi = GroupedInstance::new(class_weights.clone(), class_sizes.clone(), bins)?;
        let sol = solve_grouped_dp_with_guard(&gi, max_states)?;
        let reservations = sol
            .bin_contents
            .iter()
            .map(|tuple| {
                tuple
                    .iter()
                    .zip(&class_weights)
                    .map(|(&c, w)| w.mul_int(c as u64))
                    .sum()
            })
            .collect();
        Ok(SlotLayout {
            class_weights,
            class_sizes,
            class_groups,
            bin_contents: sol.bin_contents,
            reservations,
        })
    }

    pub fn slot_count(&self) -> usize {
        self.bin_contents.iter().flatten().sum()
    }
}

/// Which test decides whether the small items alone already suffice.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FirstStep {
    /// First Fit Increasing on the small items (offline).
    Ffi,
    /// RSFF threshold `eta <= eps` (the variant the online player can follow).
    Rsff,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PtasBranch {
    /// FFI could not pack every small item; its packing of `S` is returned.
    SmallItemsSaturate,
    /// RSFF found `eta <= eps` (or no threshold at all); its packing is returned.
    RsffThreshold { eta: Option<Weight> },
    /// Rounded large items plus First Fit completion with small items.
    Rounded { k: usize, l_prime: usize },
}

impl PtasBranch {
    pub fn label(&self) -> &'static str {
        match self {
            PtasBranch::SmallItemsSaturate => "ffi-small",
            PtasBranch::RsffThreshold { .. } => "rsff-eta",
            PtasBranch::Rounded { .. } => "rounded",
        }
    }
}

#[derive(Clone, Debug)]
pub struct PtasOutcome {
    pub packing: Packing,
    pub branch: PtasBranch,
    pub split: SplitResult,
    pub groups: Option<GroupSpec>,
    pub layout: Option<SlotLayout>,
}

#[derive(Clone, Copy, Debug)]
pub struct PtasConfig {
    pub first_step: FirstStep,
    pub max_dp_states: u64,
}

impl Default for PtasConfig {
    fn default() -> Self {
        PtasConfig {
            first_step: FirstStep::Ffi,
            max_dp_states: DEFAULT_MAX_DP_STATES,
        }
    }
}

pub fn ptas_solve(inst: &Instance, eps: &Weight) -> Result<PtasOutcome> {
    ptas_solve_with(inst, eps, PtasConfig::default())
}

pub fn ptas_solve_with(inst: &Instance, eps: &Weight, cfg: PtasConfig) -> Result<PtasOutcome> {
    let split = split_small_large(inst, eps)?;

    match cfg.first_step {
        FirstStep::Ffi => {
            let ffi = first_fit_order(inst, &sorted_subset(inst, &split.small));
            if ffi.packed_count() < split.small.len() {
                return Ok(PtasOutcome {
                    packing: ffi,
                    branch: PtasBranch::SmallItemsSaturate,
                    split,
                    groups: None,
                    layout: None,
                });
            }
        }
        FirstStep::Rsff => {
            let r = rsff(inst);
            if threshold_branch_applies(r.eta.as_ref(), eps, inst.bins()) {
                return Ok(PtasOutcome {
                    packing: r.packing,
                    branch: PtasBranch::RsffThreshold { eta: r.eta },
                    split,
                    groups: None,
                    layout: None,
                });
            }
        }
    }

    let m = inst.bins();
    let (l_prime, groups) = large_item_groups(inst, eps, &split)?;

    let mut packing = Packing::rejecting_all(inst.len());
    let mut loads = vec![Weight::zero(); m];
    let (groups, layout) = match groups {
        None => (None, None),
        Some(groups) => {
            let layout = SlotLayout::build(
                &groups.group_sizes(),
                &groups.rounded_weights,
                m,
                cfg.max_dp_states,
            )?;
            bind_slots(&groups, &layout, &mut packing);
            loads.clone_from(&layout.reservations);
            (Some(groups), Some(layout))
        }
    };

    for &i in &split.small {
        let w = inst.weight(i);
        if let Some(b) = first_fit_bin(&loads, w) {
            loads[b] += w;
            packing.set(i, Some(b));
        }
    }

    let branch = PtasBranch::Rounded {
        k: groups.as_ref().map_or(0, GroupSpec::k),
        l_prime: l_prime.len(),
    };
    Ok(PtasOutcome {
        packing,
        branch,
        split,
        groups,
        layout,
    })
}

/// Whether the RSFF threshold branch is taken. With no bins every branch
/// packs nothing; an absent threshold with bins available falls through to
/// the rounded branch.
pub fn threshold_branch_applies(eta: Option<&Weight>, eps: &Weight, bins: usize) -> bool {
    match eta {
        Some(eta) => eta <= eps,
        None => bins == 0,
    }
}

/// `L'` and, when it is non-empty, its grouping.
pub fn large_item_groups(
    inst: &Instance,
    eps: &Weight,
    split: &SplitResult,
) -> Result<(Vec<usize>, Option<GroupSpec>)> {
    let budget = lfp_budget(inst.bins(), eps, &split.small_weight);
    let l_prime = select_l_prime(inst, &split.large, budget.as_ref());
    if l_prime.is_empty() {
        return Ok((l_prime, None));
    }
    let groups = group_and_round(inst, &l_prime, inst.bins(), eps)?;
    Ok((l_prime, Some(groups)))
}

fn sorted_subset(inst: &Instance, items: &[usize]) -> Vec<usize> {
    let mut v = items.to_vec();
    v.sort_by(|&a, &b| inst.weight(a).cmp(inst.weight(b)).then(a.cmp(&b)));
    v
}

// Slots of each class go to that class's members in increasing index order.
fn bind_slots(groups: &GroupSpec, layout: &SlotLayout, packing: &mut Packing) {
    let members: Vec<Vec<usize>> = layout
        .class_groups
        .iter()
        .map(|gs| {
            let mut v: Vec<usize> = gs
                .iter()
                .flat_map(|&g| groups.groups[g].iter().copied())
                .collect();
            v.sort_unstable();
            v
        })
        .collect();
    let mut next = vec![0usize; members.len()];
    for (bin, tuple) in layout.bin_contents.iter().enumerate() {
        for (class, &count) in tuple.iter().enumerate() {
            for _ in 0..count {
                packing.set(members[class][next[class]], Some(bin));
                next[class] += 1;
            }
        }
    }
}
