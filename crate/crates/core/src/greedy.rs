//! First Fit, First Fit Increasing and Restricted-Subsequence First Fit.

use crate::error::{Error, Result};
use crate::instance::{verify_packing, Instance, Packing};
use crate::weight::Weight;

/// Lowest-index bin whose load plus `w` stays within capacity.
pub fn first_fit_bin(loads: &[Weight], w: &Weight) -> Option<usize> {
    let one = Weight::one();
    loads.iter().position(|load| (load + w) <= one)
}

/// First Fit in arrival order.
///
/// Placements of `initial` are kept; its unplaced items are processed in
/// arrival order. Items heavier than `filter_max` are rejected without
/// being considered.
pub fn first_fit(
    inst: &Instance,
    initial: Option<&Packing>,
    filter_max: Option<&Weight>,
) -> Result<Packing> {
    let mut packing = match initial {
        Some(p) => {
            let report = verify_packing(inst, p)?;
            if !report.feasible {
                return Err(Error::Precondition(
                    "initial packing for first fit is infeasible".into(),
                ));
            }
            p.clone()
        }
        None => Packing::rejecting_all(inst.len()),
    };
    let mut loads = packing.loads(inst);
    let preplaced: Vec<bool> = packing.assignment().iter().map(Option::is_some).collect();
    for (i, w) in inst.weights().iter().enumerate() {
        if preplaced[i] || filter_max.is_some_and(|cap| w > cap) {
            continue;
        }
        if let Some(b) = first_fit_bin(&loads, w) {
            loads[b] += w;
            packing.set(i, Some(b));
        }
    }
    Ok(packing)
}

/// First Fit over the items in `order`, starting from empty bins.
pub fn first_fit_order(inst: &Instance, order: &[usize]) -> Packing {
    let mut packing = Packing::rejecting_all(inst.len());
    let mut loads = vec![Weight::zero(); inst.bins()];
    for &i in order {
        let w = inst.weight(i);
        if let Some(b) = first_fit_bin(&loads, w) {
            loads[b] += w;
            packing.set(i, Some(b));
        }
    }
    packing
}

/// First Fit on items sorted by increasing weight (ties by index). The
/// result is indexed by original item positions.
pub fn first_fit_increasing(inst: &Instance) -> Packing {
    first_fit_order(inst, &inst.sorted_order())
}

/// Threshold chosen by RSFF together with the packing of `W_eta`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EtaResult {
    pub eta: Option<Weight>,
    pub packing: Packing,
}

/// Restricted-Subsequence First Fit.
///
/// Scans the distinct input weights from largest to smallest and returns
/// the first threshold `eta` for which First Fit on `{w_i <= eta}` rejects
/// nothing. Feasibility is not monotone in `eta`, so every candidate is
/// tried.
pub fn rsff(inst: &Instance) -> EtaResult {
    let mut candidates: Vec<&Weight> = inst.weights().iter().collect();
    candidates.sort_unstable_by(|a, b| b.cmp(a));
    candidates.dedup();
    for eta in candidates {
        let packing = first_fit(inst, None, Some(eta)).expect("no initial packing");
        let all_packed = inst
            .weights()
            .iter()
            .zip(packing.assignment())
            .all(|(w, a)| w > eta || a.is_some());
        if all_packed {
            return EtaResult {
                eta: Some(eta.clone()),
                packing,
            };
        }
    }
    EtaResult {
        eta: None,
        packing: Packing::rejecting_all(inst.len()),
    }
}
