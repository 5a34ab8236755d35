//! Instances, packings and feasibility checks.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::weight::Weight;

/// An ordered sequence of item weights in `(0, 1]` together with a bin count.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    weights: Vec<Weight>,
    bins: usize,
    bit_size: u32,
}

impl Instance {
    pub fn new(weights: Vec<Weight>, bins: usize) -> Result<Self> {
        for (i, w) in weights.iter().enumerate() {
            if !w.is_item_weight() {
                return Err(Error::Domain(format!(
                    "item {} has weight {w}, outside (0, 1]",
                    i + 1
                )));
            }
        }
        let bit_size = weights.iter().map(Weight::exponent).max().unwrap_or(0);
        Ok(Instance {
            weights,
            bins,
            bit_size,
        })
    }

    pub fn weights(&self) -> &[Weight] {
        &self.weights
    }

    pub fn weight(&self, i: usize) -> &Weight {
        &self.weights[i]
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Number of bins, `m`.
    pub fn bins(&self) -> usize {
        self.bins
    }

    /// Maximum canonical exponent over all weights, `s`.
    pub fn bit_size(&self) -> u32 {
        self.bit_size
    }

    /// Item indices ordered by `(weight, index)`.
    pub fn sorted_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&a, &b| self.weights[a].cmp(&self.weights[b]).then(a.cmp(&b)));
        order
    }

    /// Same bins, items restricted to `indices` (in the given order).
    pub fn subinstance(&self, indices: &[usize]) -> Instance {
        let weights: Vec<Weight> = indices.iter().map(|&i| self.weights[i].clone()).collect();
        let bit_size = weights.iter().map(Weight::exponent).max().unwrap_or(0);
        Instance {
            weights,
            bins: self.bins,
            bit_size,
        }
    }

    /// Parses the line-oriented instance format:
    ///
    /// ```text
    /// # comment
    /// n m
    /// v/2^e      (n lines)
    /// ```
    pub fn parse(text: &str) -> Result<Self> {
        let mut records = text.lines().enumerate().filter_map(|(i, line)| {
            let t = line.trim();
            (!t.is_empty() && !t.starts_with('#')).then_some((i + 1, t))
        });

        let (hline, header) = records.next().ok_or(Error::Parse {
            line: 1,
            msg: "missing header \"n m\"".into(),
        })?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(Error::Parse {
                line: hline,
                msg: format!("header must be \"n m\", got {header:?}"),
            });
        }
        let parse_count = |tok: &str, what: &str| -> Result<usize> {
            if tok.starts_with('-') {
                return Err(Error::Parse {
                    line: hline,
                    msg: format!("{what} must be non-negative, got {tok}"),
                });
            }
            tok.parse().map_err(|_| Error::Parse {
                line: hline,
                msg: format!("{what} is not a non-negative integer: {tok:?}"),
            })
        };
        let n = parse_count(fields[0], "n")?;
        let m = parse_count(fields[1], "m")?;

        let mut weights = Vec::with_capacity(n);
        for (line, rec) in records {
            if weights.len() == n {
                return Err(Error::Parse {
                    line,
                    msg: format!("more than {n} weight records"),
                });
            }
            let mut toks = rec.split_whitespace();
            let tok = toks.next().expect("non-empty record");
            if toks.next().is_some() {
                return Err(Error::Parse {
                    line,
                    msg: "expected a single weight per line".into(),
                });
            }
            let w = parse_weight_token(tok).map_err(|msg| Error::Parse { line, msg })?;
            weights.push(w);
        }
        if weights.len() != n {
            return Err(Error::Parse {
                line: text.lines().count().max(1),
                msg: format!("expected {n} weights, found {}", weights.len()),
            });
        }
        Instance::new(weights, m)
    }

    pub fn serialize(&self) -> String {
        let mut out = format!("{} {}\n", self.len(), self.bins);
        for w in &self.weights {
            writeln!(out, "{w}").expect("write to string");
        }
        out
    }
}

fn parse_weight_token(tok: &str) -> std::result::Result<Weight, String> {
    let (num, den) = tok
        .split_once('/')
        .ok_or_else(|| format!("expected v/2^e, got {tok:?}"))?;
    if den == "2^" || den.is_empty() || den == "0" {
        return Err(format!("zero or empty denominator in {tok:?}"));
    }
    if num.bytes().all(|b| b == b'0') && !num.is_empty() {
        return Err(format!("weight {tok} is not positive"));
    }
    let w: Weight = tok.parse().map_err(|e: Error| e.to_string())?;
    if w > Weight::one() {
        return Err(format!("weight {tok} exceeds 1"));
    }
    Ok(w)
}

/// Per-item placement: `Some(bin)` (0-based) or `None` for reject.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Packing {
    assignment: Vec<Option<usize>>,
}

impl Packing {
    pub fn new(assignment: Vec<Option<usize>>) -> Self {
        Packing { assignment }
    }

    pub fn rejecting_all(n: usize) -> Self {
        Packing {
            assignment: vec![None; n],
        }
    }

    pub fn assignment(&self) -> &[Option<usize>] {
        &self.assignment
    }

    pub fn get(&self, item: usize) -> Option<usize> {
        self.assignment[item]
    }

    pub fn set(&mut self, item: usize, bin: Option<usize>) {
        self.assignment[item] = bin;
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    pub fn packed_count(&self) -> usize {
        self.assignment.iter().filter(|a| a.is_some()).count()
    }

    /// Exact per-bin loads. Out-of-range bin indices are ignored here; use
    /// [`verify_packing`] to detect them.
    pub fn loads(&self, inst: &Instance) -> Vec<Weight> {
        let mut loads = vec![Weight::zero(); inst.bins()];
        for (i, a) in self.assignment.iter().enumerate() {
            if let Some(b) = *a {
                if b < loads.len() {
                    loads[b] += inst.weight(i);
                }
            }
        }
        loads
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub bin: usize,
    pub load: Weight,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VerificationReport {
    pub feasible: bool,
    pub packed_count: usize,
    pub violations: Vec<Violation>,
}

/// Checks both constraint families of the packing integer program: every
/// item in at most one bin (by construction of [`Packing`]) and every bin
/// load at most one.
pub fn verify_packing(inst: &Instance, p: &Packing) -> Result<VerificationReport> {
    if p.len() != inst.len() {
        return Err(Error::Structure(format!(
            "packing has {} entries, instance has {} items",
            p.len(),
            inst.len()
        )));
    }
    if let Some((i, b)) = p
        .assignment()
        .iter()
        .enumerate()
        .find_map(|(i, a)| a.filter(|&b| b >= inst.bins()).map(|b| (i, b)))
    {
        return Err(Error::Structure(format!(
            "item {} assigned to bin {} but m = {}",
            i + 1,
            b + 1,
            inst.bins()
        )));
    }
    let one = Weight::one();
    let violations: Vec<Violation> = p
        .loads(inst)
        .into_iter()
        .enumerate()
        .filter(|(_, load)| *load > one)
        .map(|(bin, load)| Violation { bin, load })
        .collect();
    Ok(VerificationReport {
        feasible: violations.is_empty(),
        packed_count: p.packed_count(),
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn w(v: u64, e: u32) -> Weight {
        Weight::from_parts(v, e)
    }

    #[test]
    fn parse_examples() {
        let inst = Instance::parse("2 1\n1/2^1\n1/2^1").unwrap();
        assert_eq!(inst.len(), 2);
        assert_eq!(inst.bins(), 1);
        assert_eq!(inst.bit_size(), 1);
        assert_eq!(inst.weights(), &[w(1, 1), w(1, 1)]);

        let inst = Instance::parse("1 1\n3/2^2").unwrap();
        assert_eq!(inst.bit_size(), 2);
        assert_eq!(inst.weights(), &[w(3, 2)]);

        let err = Instance::parse("1 1\n5/2^2").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
    }

    #[test]
    fn parse_canonicalizes_and_skips_comments() {
        let inst = Instance::parse("# header\n2 3\n\n4/2^3\n# mid\n2/2^1\n").unwrap();
        assert_eq!(inst.weights(), &[w(1, 1), Weight::one()]);
        assert_eq!(inst.bit_size(), 1);
        assert_eq!(inst.bins(), 3);
    }

    #[test]
    fn parse_errors_name_lines() {
        let cases = [
            ("", 1),
            ("2 -1\n1/2^1\n1/2^1", 1),
            ("1 1 1\n1/2^1", 1),
            ("1 1\n0/2^3", 2),
            ("1 1\n1/2^", 2),
            ("1 1\n1/3", 2),
            ("2 1\n1/2^1\n\n1/2^1 1/2^2", 4),
            ("1 1\n1/2^1\n1/2^1", 3),
        ];
        for (text, line) in cases {
            match Instance::parse(text) {
                Err(Error::Parse { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
        assert!(matches!(
            Instance::parse("3 1\n1/2^1"),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn zero_bins_is_legal() {
        let inst = Instance::parse("1 0\n1/2^1").unwrap();
        let report = verify_packing(&inst, &Packing::rejecting_all(1)).unwrap();
        assert!(report.feasible);
        assert_eq!(report.packed_count, 0);
    }

    #[test]
    fn verify_examples() {
        let inst = Instance::new(vec![w(1, 1), w(1, 1)], 1).unwrap();
        let r = verify_packing(&inst, &Packing::new(vec![Some(0), Some(0)])).unwrap();
        assert!(r.feasible);
        assert_eq!(r.packed_count, 2);

        let inst = Instance::new(vec![w(3, 2), w(1, 1)], 1).unwrap();
        let r = verify_packing(&inst, &Packing::new(vec![Some(0), Some(0)])).unwrap();
        assert!(!r.feasible);
        assert_eq!(
            r.violations,
            vec![Violation {
                bin: 0,
                load: w(5, 2)
            }]
        );

        let r = verify_packing(&inst, &Packing::new(vec![Some(0), None])).unwrap();
        assert!(r.feasible);
        assert_eq!(r.packed_count, 1);
    }

    #[test]
    fn verify_structural_errors() {
        let inst = Instance::new(vec![w(1, 1)], 1).unwrap();
        assert!(matches!(
            verify_packing(&inst, &Packing::new(vec![])),
            Err(Error::Structure(_))
        ));
        assert!(matches!(
            verify_packing(&inst, &Packing::new(vec![Some(1)])),
            Err(Error::Structure(_))
        ));
    }

    fn arb_instance() -> impl Strategy<Value = Instance> {
        (
            prop::collection::vec((1u64..=64, 0u32..=6), 0..20),
            0usize..6,
        )
            .prop_map(|(ws, m)| {
                let weights = ws
                    .into_iter()
                    .map(|(v, e)| {
                        let v = v.min(1 << e).max(1);
                        w(v, e)
                    })
                    .collect();
                Instance::new(weights, m).unwrap()
            })
    }

    proptest! {
        #[test]
        fn serialize_parse_round_trip(inst in arb_instance()) {
            let back = Instance::parse(&inst.serialize()).unwrap();
            prop_assert_eq!(back, inst);
        }

        #[test]
        fn verify_is_pure(inst in arb_instance(), seed in any::<u64>()) {
            let m = inst.bins();
            let assignment = (0..inst.len())
                .map(|i| {
                    let r = seed.wrapping_mul(6364136223846793005).wrapping_add((i as u64).wrapping_mul(1442695040888963407)) >> 33;
                    if m == 0 || r % 3 == 0 { None } else { Some(r as usize % m) }
                })
                .collect();
            let p = Packing::new(assignment);
            prop_assert_eq!(verify_packing(&inst, &p), verify_packing(&inst, &p));
        }
    }
}
