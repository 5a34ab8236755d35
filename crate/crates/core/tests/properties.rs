use proptest::prelude::*;

use dualbin::advice::{build_advice, decode_advice, encode_advice, simulate, Advice, AdviceParams};
use dualbin::exact::brute_force_opt;
use dualbin::greedy::{first_fit, first_fit_increasing, rsff};
use dualbin::ptas::{ptas_solve, PtasBranch};
use dualbin::{verify_packing, Instance, Weight};

fn arb_instance(max_n: usize, max_m: usize) -> impl Strategy<Value = Instance> {
    (1u32..=5, 0..=max_m).prop_flat_map(move |(s, m)| {
        prop::collection::vec(1u64..=(1 << s), 0..=max_n).prop_map(move |nums| {
            Instance::new(
                nums.into_iter().map(|v| Weight::from_parts(v, s)).collect(),
                m,
            )
            .unwrap()
        })
    })
}

fn eps_for(m: usize) -> Weight {
    if m >= 4 {
        Weight::pow2_inv(2)
    } else {
        Weight::pow2_inv(1)
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn every_algorithm_returns_a_feasible_packing(inst in arb_instance(14, 4)) {
        let opt = brute_force_opt(&inst).unwrap().opt;
        for p in [
            first_fit(&inst, None, None).unwrap(),
            first_fit_increasing(&inst),
            rsff(&inst).packing,
        ] {
            let r = verify_packing(&inst, &p).unwrap();
            prop_assert!(r.feasible);
            prop_assert!(r.packed_count <= opt);
        }
    }

    #[test]
    fn ptas_and_advice_agree(inst in arb_instance(14, 4).prop_filter("eps m >= 1", |i| i.bins() >= 2)) {
        let eps = eps_for(inst.bins());
        let out = ptas_solve(&inst, &eps).unwrap();
        prop_assert!(verify_packing(&inst, &out.packing).unwrap().feasible);
        let rep = simulate(&inst, &eps, None).unwrap();
        prop_assert_eq!(rep.online_count, rep.offline_count);
        prop_assert_eq!(rep.advice_bits, rep.predicted_bits);
        let params = AdviceParams::for_instance(&inst, &eps);
        let bits = encode_advice(&rep.advice, &params).unwrap();
        prop_assert_eq!(decode_advice(&bits, &params).unwrap(), rep.advice);
    }

    #[test]
    fn saturating_small_items_certify_the_ratio(inst in arb_instance(16, 3)) {
        let eps = Weight::pow2_inv(2);
        if let Ok(out) = ptas_solve(&inst, &eps) {
            if matches!(out.branch, PtasBranch::SmallItemsSaturate) {
                let opt = brute_force_opt(&inst).unwrap().opt as u64;
                let bound = (&Weight::one() + &eps).mul_int(out.packing.packed_count() as u64);
                prop_assert!(Weight::from_parts(opt, 0) <= bound);
            }
        }
    }
}

#[test]
fn group_count_can_exceed_inverse_eps_squared_when_eps_m_is_fractional() {
    // eps = 1/8, m = 15: groups have floor(15/8) = 1 item, and 93 items of
    // weight 9/64 fit the budget 15 * 7/8, so k = 93 > ceil(1/eps^2) + 1 = 65.
    let eps = Weight::pow2_inv(3);
    let inst = Instance::new(vec![Weight::from_parts(9, 6); 100], 15).unwrap();
    let advice = build_advice(&inst, &eps).unwrap();
    let Advice::Rounded { group_sizes, .. } = &advice else {
        panic!("expected rounded advice, got {advice:?}");
    };
    assert_eq!(group_sizes.len(), 93);
    let params = AdviceParams::for_instance(&inst, &eps);
    assert_eq!(params.k_field_bits(), 7);
    let bits = encode_advice(&advice, &params).unwrap();
    assert_eq!(decode_advice(&bits, &params).unwrap(), advice);
    let rep = simulate(&inst, &eps, None).unwrap();
    assert_eq!(rep.online_count, 93);
    assert_eq!(rep.online_count, rep.offline_count);
}

#[test]
fn rsff_threshold_does_not_certify_one_plus_eps() {
    // Every weight is at most eps = 1/4 and RSFF settles on eta = 1/8, yet it
    // packs 2 items where 5 fit.
    let w = |v, e| Weight::from_parts(v, e);
    let inst = Instance::new(
        vec![w(1, 3), w(1, 2), w(1, 3), w(1, 2), w(1, 2), w(1, 2)],
        1,
    )
    .unwrap();
    let r = rsff(&inst);
    assert_eq!(r.eta, Some(w(1, 3)));
    assert_eq!(r.packing.packed_count(), 2);
    assert_eq!(brute_force_opt(&inst).unwrap().opt, 5);
}
