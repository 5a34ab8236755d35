//! Exact solvers: the configuration dynamic program for instances with few
//! distinct weights, and a backtracking oracle for small instances.

use std::ops::{AddAssign, SubAssign};

use num_bigint::BigUint;

use crate::error::{Error, Result};
use crate::instance::{Instance, Packing};
use crate::weight::Weight;

pub const DEFAULT_MAX_DP_STATES: u64 = 100_000_000;
pub const DEFAULT_MAX_BRUTE_FORCE_ITEMS: usize = 30;

/// Items grouped by weight: `multiplicities[i]` items of weight `weights[i]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroupedInstance {
    weights: Vec<Weight>,
    multiplicities: Vec<usize>,
    bins: usize,
}

impl GroupedInstance {
    pub fn new(weights: Vec<Weight>, multiplicities: Vec<usize>, bins: usize) -> Result<Self> {
        if weights.len() != multiplicities.len() {
            return Err(Error::Structure(format!(
                "{} weights but {} multiplicities",
                weights.len(),
                multiplicities.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !w.is_item_weight()) {
            return Err(Error::Domain(format!("class weight {w} outside (0, 1]")));
        }
        if weights.windows(2).any(|p| p[0] >= p[1]) {
            return Err(Error::Structure(
                "class weights must be strictly increasing".into(),
            ));
        }
        Ok(GroupedInstance {
            weights,
            multiplicities,
            bins,
        })
    }

    /// Groups the items of `inst` by weight. Also returns, per class, the
    /// member item indices in increasing order.
    pub fn from_instance(inst: &Instance) -> (Self, Vec<Vec<usize>>) {
        let mut weights: Vec<Weight> = Vec::new();
        let mut members: Vec<Vec<usize>> = Vec::new();
        for i in inst.sorted_order() {
            let w = inst.weight(i);
            if weights.last() != Some(w) {
                weights.push(w.clone());
                members.push(Vec::new());
            }
            members.last_mut().expect("pushed").push(i);
        }
        for m in &mut members {
            m.sort_unstable();
        }
        let multiplicities = members.iter().map(Vec::len).collect();
        (
            GroupedInstance {
                weights,
                multiplicities,
                bins: inst.bins(),
            },
            members,
        )
    }

    pub fn weights(&self) -> &[Weight] {
        &self.weights
    }

    pub fn multiplicities(&self) -> &[usize] {
        &self.multiplicities
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn classes(&self) -> usize {
        self.weights.len()
    }

    pub fn item_count(&self) -> usize {
        self.multiplicities.iter().sum()
    }
}

/// Per-class item counts placed in one bin.
pub type BinTuple = Vec<usize>;

/// All tuples `(l_1..l_k)` with `l_i <= n_i` whose total weight fits in one
/// bin, in lexicographic order.
pub fn enumerate_bin_tuples(gi: &GroupedInstance) -> Vec<BinTuple> {
    let exp = gi.weights.iter().map(Weight::exponent).max().unwrap_or(0);
    let scaled: Vec<BigUint> = gi
        .weights
        .iter()
        .map(|w| w.numerator_at(exp).expect("max exponent"))
        .collect();
    let cap = BigUint::from(1u32) << exp;

    let mut out = Vec::new();
    let mut current = vec![0usize; gi.classes()];
    enumerate_rec(
        &scaled,
        &gi.multiplicities,
        &cap,
        0,
        BigUint::default(),
        &mut current,
        &mut out,
    );
    out
}

fn enumerate_rec(
    weights: &[BigUint],
    limits: &[usize],
    cap: &BigUint,
    class: usize,
    load: BigUint,
    current: &mut Vec<usize>,
    out: &mut Vec<BinTuple>,
) {
    if class == weights.len() {
        out.push(current.clone());
        return;
    }
    let mut load = load;
    for count in 0..=limits[class] {
        if count > 0 {
            load += &weights[class];
            if &load > cap {
                break;
            }
        }
        current[class] = count;
        enumerate_rec(weights, limits, cap, class + 1, load.clone(), current, out);
    }
    current[class] = 0;
}

/// Optimal packing of a grouped instance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DpSolution {
    pub best_count: usize,
    /// One tuple per bin, bin 0 first.
    pub bin_contents: Vec<BinTuple>,
}

impl DpSolution {
    /// Binds the per-class slots to concrete items: the slots of class `i`
    /// take the members of `members[i]` in order, bin 0 first.
    pub fn to_packing(&self, members: &[Vec<usize>], n: usize) -> Packing {
        let mut packing = Packing::rejecting_all(n);
        let mut next = vec![0usize; members.len()];
        for (bin, tuple) in self.bin_contents.iter().enumerate() {
            for (class, &count) in tuple.iter().enumerate() {
                for _ in 0..count {
                    packing.set(members[class][next[class]], Some(bin));
                    next[class] += 1;
                }
            }
        }
        packing
    }
}

pub fn solve_grouped_dp(gi: &GroupedInstance) -> Result<DpSolution> {
    solve_grouped_dp_with_guard(gi, DEFAULT_MAX_DP_STATES)
}

/// Configuration DP over `(remaining multiplicities, remaining bins)`.
///
/// `D[l, m'] = max_{t in K, t <= l} |t| + D[l - t, m' - 1]`. The packing is
/// rebuilt top-down, choosing for each bin the first maximizing tuple in
/// the lexicographic order of [`enumerate_bin_tuples`], so identical inputs
/// always produce identical bin contents.
pub fn solve_grouped_dp_with_guard(gi: &GroupedInstance, max_states: u64) -> Result<DpSolution> {
    let k = gi.classes();
    if k == 0 {
        return Err(Error::Precondition(
            "grouped instance needs at least one weight class".into(),
        ));
    }
    let m = gi.bins;

    // Mixed-radix strides: state index = sum l_i * stride_i.
    let mut strides = vec![0usize; k];
    let mut states: u64 = 1;
    for i in (0..k).rev() {
        strides[i] = states as usize;
        states = states.saturating_mul(gi.multiplicities[i] as u64 + 1);
    }
    let total = states.saturating_mul(m as u64 + 1);
    if total > max_states {
        return Err(Error::Resource(format!(
            "dynamic program needs {total} states (limit {max_states}); \
             use the brute-force oracle or a larger epsilon"
        )));
    }
    let states = states as usize;

    let tuples = enumerate_bin_tuples(gi);
    let tuple_index: Vec<usize> = tuples
        .iter()
        .map(|t| t.iter().zip(&strides).map(|(c, s)| c * s).sum())
        .collect();
    let tuple_size: Vec<u32> = tuples
        .iter()
        .map(|t| t.iter().sum::<usize>() as u32)
        .collect();

    let mut table: Vec<Vec<u32>> = Vec::with_capacity(m + 1);
    table.push(vec![0; states]);
    let mut digits = vec![0usize; k];
    for _ in 1..=m {
        let prev = table.last().expect("layer 0 present");
        let mut layer = vec![0u32; states];
        digits.iter_mut().for_each(|d| *d = 0);
        for (idx, cell) in layer.iter_mut().enumerate() {
            let mut best = 0u32;
            for (t, tuple) in tuples.iter().enumerate() {
                if tuple.iter().zip(&digits).all(|(a, b)| a <= b) {
                    let v = tuple_size[t] + prev[idx - tuple_index[t]];
                    if v > best {
                        best = v;
                    }
                }
            }
            *cell = best;
            increment(&mut digits, &gi.multiplicities);
        }
        table.push(layer);
    }

    let mut remaining = gi.multiplicities.clone();
    let mut idx = states - 1;
    let mut bin_contents = Vec::with_capacity(m);
    for bins_left in (1..=m).rev() {
        let target = table[bins_left][idx];
        let prev = &table[bins_left - 1];
        let chosen = tuples
            .iter()
            .enumerate()
            .find(|(t, tuple)| {
                tuple.iter().zip(&remaining).all(|(a, b)| a <= b)
                    && tuple_size[*t] + prev[idx - tuple_index[*t]] == target
            })
            .map(|(t, _)| t)
            .expect("optimal value is attained by some tuple");
        for (r, c) in remaining.iter_mut().zip(&tuples[chosen]) {
            *r -= c;
        }
        idx -= tuple_index[chosen];
        bin_contents.push(tuples[chosen].clone());
    }

    Ok(DpSolution {
        best_count: table[m][states - 1] as usize,
        bin_contents,
    })
}

// Row-major increment with the last class varying fastest, matching the strides.
fn increment(digits: &mut [usize], limits: &[usize]) {
    for i in (0..digits.len()).rev() {
        if digits[i] < limits[i] {
            digits[i] += 1;
            return;
        }
        digits[i] = 0;
    }
}

/// Optimum of an instance together with one optimal packing.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OptResult {
    pub opt: usize,
    pub witness: Packing,
}

pub fn brute_force_opt(inst: &Instance) -> Result<OptResult> {
    brute_force_opt_with_guard(inst, DEFAULT_MAX_BRUTE_FORCE_ITEMS)
}

/// Exact optimum by backtracking.
///
/// Some optimal solution packs the `N` lightest items, so it suffices to
/// find the largest `N` whose sorted prefix is bin-packable into `m` bins.
/// Prefix lengths are tried downward from the largest one whose total
/// weight is at most `m`.
pub fn brute_force_opt_with_guard(inst: &Instance, max_items: usize) -> Result<OptResult> {
    if inst.len() > max_items {
        return Err(Error::Resource(format!(
            "brute force limited to {max_items} items, instance has {}",
            inst.len()
        )));
    }
    let exp = inst.bit_size();
    if exp <= 120 {
        let scaled: Vec<u128> = inst
            .weights()
            .iter()
            .map(|w| {
                let v = w.numerator_at(exp).expect("bit size is max exponent");
                v.iter_u64_digits()
                    .enumerate()
                    .map(|(i, d)| u128::from(d) << (64 * i))
                    .sum()
            })
            .collect();
        Ok(brute_force_scaled(inst, &scaled, 1u128 << exp))
    } else {
        let scaled: Vec<BigUint> = inst
            .weights()
            .iter()
            .map(|w| w.numerator_at(exp).expect("bit size is max exponent"))
            .collect();
        Ok(brute_force_scaled(
            inst,
            &scaled,
            BigUint::from(1u32) << exp,
        ))
    }
}

trait Load: Clone + Ord + Default + for<'a> AddAssign<&'a Self> + for<'a> SubAssign<&'a Self> {}
impl Load for u128 {}
impl Load for BigUint {}

fn brute_force_scaled<T: Load>(inst: &Instance, scaled: &[T], cap: T) -> OptResult {
    let order = inst.sorted_order();
    let m = inst.bins();

    let mut prefix_len = 0;
    let mut total = T::default();
    let mut capacity_total = T::default();
    for _ in 0..m {
        capacity_total += &cap;
    }
    for &i in &order {
        let mut next = total.clone();
        next += &scaled[i];
        if next > capacity_total {
            break;
        }
        total = next;
        prefix_len += 1;
    }

    for n in (0..=prefix_len).rev() {
        let mut items: Vec<usize> = order[..n].to_vec();
        items.reverse();
        let sizes: Vec<T> = items.iter().map(|&i| scaled[i].clone()).collect();
        if let Some(bins) = pack_all(&sizes, m, &cap) {
            let mut witness = Packing::rejecting_all(inst.len());
            for (pos, &item) in items.iter().enumerate() {
                witness.set(item, Some(bins[pos]));
            }
            return OptResult { opt: n, witness };
        }
    }
    unreachable!("the empty prefix is always packable")
}

/// Decides whether all `sizes` (non-increasing) fit into `m` bins of
/// capacity `cap`; returns a bin per item on success.
fn pack_all<T: Load>(sizes: &[T], m: usize, cap: &T) -> Option<Vec<usize>> {
    if sizes.is_empty() {
        return Some(Vec::new());
    }
    if m == 0 {
        return None;
    }
    // suffix[i] = total size of items i..
    let mut suffix = vec![T::default(); sizes.len() + 1];
    for i in (0..sizes.len()).rev() {
        let mut s = suffix[i + 1].clone();
        s += &sizes[i];
        suffix[i] = s;
    }
    let mut free_total = T::default();
    for _ in 0..m {
        free_total += cap;
    }
    let mut search = Backtrack {
        sizes,
        suffix: &suffix,
        cap,
        loads: vec![T::default(); m],
        assignment: vec![0; sizes.len()],
        free_total,
    };
    search.place(0).then_some(search.assignment)
}

struct Backtrack<'a, T> {
    sizes: &'a [T],
    suffix: &'a [T],
    cap: &'a T,
    loads: Vec<T>,
    assignment: Vec<usize>,
    free_total: T,
}

impl<T: Load> Backtrack<'_, T> {
    fn place(&mut self, item: usize) -> bool {
        if item == self.sizes.len() {
            return true;
        }
        if self.suffix[item] > self.free_total {
            return false;
        }
        let size = &self.sizes[item];
        let mut tried: Vec<T> = Vec::new();
        for b in 0..self.loads.len() {
            let mut next = self.loads[b].clone();
            next += size;
            if &next > self.cap {
                continue;
            }
            // Bins with equal load are interchangeable.
            if tried.contains(&self.loads[b]) {
                continue;
            }
            tried.push(self.loads[b].clone());
            let old = std::mem::replace(&mut self.loads[b], next);
            self.free_total -= size;
            self.assignment[item] = b;
            if self.place(item + 1) {
                return true;
            }
            self.free_total += size;
            self.loads[b] = old;
        }
        false
    }
}
