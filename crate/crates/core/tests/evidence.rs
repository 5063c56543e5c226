mod common;

use common::{max_abs_diff, oracle_dempster, oracle_smets, random_mass};
use conflict_grid::evidence::{combine_dempster, combine_smets, conflict_k, weight_of_conflict, BeliefMass};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn mass() -> impl Strategy<Value = BeliefMass> {
    (0.0f64..1.0, 0.0f64..1.0, 0.001f64..1.0).prop_map(|(o, e, t)| {
        let s = o + e + t;
        BeliefMass {
            occupied: o / s,
            empty: e / s,
            theta: 1.0 - o / s - e / s,
            conflict: 0.0,
        }
    })
}

fn smets_mass() -> impl Strategy<Value = BeliefMass> {
    (0.0f64..1.0, 0.0f64..1.0, 0.001f64..1.0, 0.0f64..1.0).prop_map(|(o, e, t, c)| {
        let s = o + e + t + c;
        BeliefMass {
            occupied: o / s,
            empty: e / s,
            conflict: c / s,
            theta: 1.0 - o / s - e / s - c / s,
        }
    })
}

#[test]
fn dempster_matches_powerset_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let (a, b) = (random_mass(&mut rng, false), random_mass(&mut rng, false));
        let (got, _) = combine_dempster(&a, &b).unwrap();
        worst = worst.max(max_abs_diff(&got, &oracle_dempster(&a, &b)));
    }
    assert!(worst <= 1e-12, "max abs error {worst}");
}

#[test]
fn smets_matches_powerset_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let (a, b) = (random_mass(&mut rng, true), random_mass(&mut rng, true));
        let (got, obs) = combine_smets(&a, &b).unwrap();
        let want = oracle_smets(&a, &b);
        worst = worst.max(max_abs_diff(&got, &want));
        worst = worst.max((obs.k - want.conflict).abs());
    }
    assert!(worst <= 1e-12, "max abs error {worst}");
}

#[test]
fn con_is_additive_over_1000_triples() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let b1 = random_mass(&mut rng, false);
        let b2 = random_mass(&mut rng, false);
        let b3 = random_mass(&mut rng, false);
        let (b12, o12) = combine_dempster(&b1, &b2).unwrap();
        let (_, o123) = combine_dempster(&b12, &b3).unwrap();
        let (s12, _) = combine_smets(&b1, &b2).unwrap();
        let (joint, _) = combine_smets(&s12, &b3).unwrap();
        let joint_con = weight_of_conflict(joint.conflict).unwrap().con;
        worst = worst.max((o12.con + o123.con - joint_con).abs());
    }
    assert!(worst <= 1e-9, "max deviation {worst}");
}

proptest! {
    #[test]
    fn dempster_is_commutative(a in mass(), b in mass()) {
        prop_assert_eq!(combine_dempster(&a, &b).unwrap(), combine_dempster(&b, &a).unwrap());
    }

    #[test]
    fn smets_is_commutative(a in smets_mass(), b in smets_mass()) {
        prop_assert_eq!(combine_smets(&a, &b).unwrap().0, combine_smets(&b, &a).unwrap().0);
        prop_assert_eq!(conflict_k(&a, &b), conflict_k(&b, &a));
    }

    #[test]
    fn dempster_is_associative(a in mass(), b in mass(), c in mass()) {
        let left = combine_dempster(&combine_dempster(&a, &b).unwrap().0, &c).unwrap().0;
        let right = combine_dempster(&a, &combine_dempster(&b, &c).unwrap().0).unwrap().0;
        prop_assert!(max_abs_diff(&left, &right) <= 1e-9, "{:?} vs {:?}", left, right);
    }

    #[test]
    fn outputs_are_valid_beliefs(a in smets_mass(), b in smets_mass(), c in mass(), d in mass()) {
        let (s, _) = combine_smets(&a, &b).unwrap();
        prop_assert!(s.validate().is_ok(), "{:?}", s);
        let (m, _) = combine_dempster(&c, &d).unwrap();
        prop_assert!(m.validate().is_ok(), "{:?}", m);
        prop_assert_eq!(m.conflict, 0.0);
    }

    #[test]
    fn dempster_refuses_empty_set_mass(a in smets_mass(), b in mass()) {
        prop_assume!(a.conflict > 0.0);
        prop_assert!(combine_dempster(&a, &b).is_err());
    }

    #[test]
    fn con_is_nonnegative_and_monotone(k1 in 0.0f64..1.0, k2 in 0.0f64..1.0) {
        let (lo, hi) = if k1 <= k2 { (k1, k2) } else { (k2, k1) };
        let (a, b) = (weight_of_conflict(lo).unwrap(), weight_of_conflict(hi).unwrap());
        prop_assert!(a.con >= 0.0 && a.con <= b.con && b.con.is_finite());
    }
}
