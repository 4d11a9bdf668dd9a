//! Randomized invariants. Each case draws a seed and builds its inputs from a
//! ChaCha stream, so failures shrink to a reproducible seed.

use lintrans::gf::{build_tower, FieldElem, FieldTower, Level};
use lintrans::gnq::{gnq_coeffs, gnq_recurrence_check, GnqEvaluator};
use lintrans::linop::LinPoly;
use lintrans::poly::{det_cofactor, ord_det, ord_gcd, OrdPoly};
use lintrans::transition::{self, TransitionInput};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn towers() -> Vec<FieldTower> {
    [(2, 1, 2, 2, 1), (2, 1, 2, 3, 1), (3, 1, 2, 2, 1), (2, 2, 2, 1, 1), (5, 1, 2, 1, 1)]
        .iter()
        .map(|&(p, s, m, e, aux)| build_tower(p, s, m, e, aux).unwrap())
        .collect()
}

fn setup(seed: u64, tower_idx: usize) -> (FieldTower, ChaCha8Rng) {
    let ts = towers();
    (ts[tower_idx % ts.len()].clone(), ChaCha8Rng::seed_from_u64(seed))
}

fn rand_poly(t: &FieldTower, rng: &mut ChaCha8Rng, max_len: usize, level: Level) -> OrdPoly {
    let len = rng.random_range(0..=max_len);
    OrdPoly::new(t, (0..len).map(|_| t.random(level, rng)).collect()).unwrap()
}

fn rand_lin(t: &FieldTower, rng: &mut ChaCha8Rng, base_log: u32, max_len: usize, level: Level) -> LinPoly {
    let len = rng.random_range(1..=max_len);
    LinPoly::new(t, base_log, (0..len).map(|_| t.random(level, rng)).collect()).unwrap()
}

fn q_log(t: &FieldTower) -> u32 {
    t.level_degree(Level::Q)
}

fn r_log(t: &FieldTower) -> u32 {
    t.level_degree(Level::R)
}

fn point(t: &FieldTower, rng: &mut ChaCha8Rng) -> FieldElem {
    t.random(Level::Ambient, rng)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn divrem_reconstructs(seed: u64, ti in 0usize..5) {
        let (t, mut rng) = setup(seed, ti);
        let f = rand_poly(&t, &mut rng, 9, Level::Ambient);
        let g = rand_poly(&t, &mut rng, 5, Level::Ambient);
        prop_assume!(!g.is_zero());
        let (q, r) = f.divrem(&g).unwrap();
        prop_assert_eq!(&(&q * &g) + &r, f);
        prop_assert!(r.is_zero() || r.degree() < g.degree());
    }

    #[test]
    fn gcd_divides_and_keeps_common_factor(seed: u64, ti in 0usize..5) {
        let (t, mut rng) = setup(seed, ti);
        let h = rand_poly(&t, &mut rng, 4, Level::Ambient);
        let f = &rand_poly(&t, &mut rng, 5, Level::Ambient) * &h;
        let g = &rand_poly(&t, &mut rng, 5, Level::Ambient) * &h;
        prop_assume!(!(f.is_zero() && g.is_zero()));
        let d = ord_gcd(&f, &g).unwrap();
        prop_assert_eq!(d.lead(), Some(t.one()));
        prop_assert!(f.divrem(&d).unwrap().1.is_zero());
        prop_assert!(g.divrem(&d).unwrap().1.is_zero());
        if !h.is_zero() {
            prop_assert!(d.divrem(&h).unwrap().1.is_zero());
        }
    }

    #[test]
    fn bareiss_matches_cofactor(seed: u64, ti in 0usize..5, n in 1usize..=4) {
        let (t, mut rng) = setup(seed, ti);
        let m: Vec<Vec<OrdPoly>> = (0..n)
            .map(|_| (0..n).map(|_| rand_poly(&t, &mut rng, 3, Level::Ambient)).collect())
            .collect();
        prop_assert_eq!(ord_det(&m).unwrap(), det_cofactor(&m).unwrap());
    }

    #[test]
    fn linearized_maps_are_additive(seed: u64, ti in 0usize..5) {
        let (t, mut rng) = setup(seed, ti);
        let f = rand_lin(&t, &mut rng, q_log(&t), 4, Level::Ambient);
        let (x, y) = (point(&t, &mut rng), point(&t, &mut rng));
        let lhs = f.eval(&t.add(&x, &y)).unwrap();
        prop_assert_eq!(lhs, t.add(&f.eval(&x).unwrap(), &f.eval(&y).unwrap()));
        let c = t.random(Level::Q, &mut rng);
        prop_assert_eq!(f.eval(&t.mul(&c, &x)).unwrap(), t.mul(&c, &f.eval(&x).unwrap()));
    }

    #[test]
    fn composition_is_evaluation_homomorphism(seed: u64, ti in 0usize..5) {
        let (t, mut rng) = setup(seed, ti);
        let f = rand_lin(&t, &mut rng, r_log(&t), 3, Level::Ambient);
        let g = rand_lin(&t, &mut rng, q_log(&t), 3, Level::Ambient);
        let z = point(&t, &mut rng);
        let fg = f.compose(&g).unwrap();
        prop_assert_eq!(fg.eval(&z).unwrap(), f.eval(&g.eval(&z).unwrap()).unwrap());
    }

    #[test]
    fn associate_is_multiplicative_over_the_fixed_field(seed: u64, ti in 0usize..5) {
        let (t, mut rng) = setup(seed, ti);
        let f = rand_lin(&t, &mut rng, q_log(&t), 4, Level::Q);
        let g = rand_lin(&t, &mut rng, q_log(&t), 4, Level::Q);
        let fg = f.compose(&g).unwrap();
        prop_assert_eq!(fg.associate(), &f.associate() * &g.associate());
        prop_assert_eq!(LinPoly::lift(&f.associate(), q_log(&t)).unwrap(), f);
    }

    #[test]
    fn r_linear_over_fr_commutes_with_q_power(seed: u64, ti in 0usize..5) {
        let (t, mut rng) = setup(seed, ti);
        let f = rand_lin(&t, &mut rng, r_log(&t), 4, Level::R);
        let g = rand_lin(&t, &mut rng, q_log(&t), 3, Level::R);
        let xq = LinPoly::q_power(&t, 1);
        prop_assert_eq!(f.compose(&xq).unwrap(), xq.compose(&f).unwrap());
        let z = point(&t, &mut rng);
        prop_assert_eq!(f.compose(&g).unwrap().eval(&z).unwrap(), g.compose(&f).unwrap().eval(&z).unwrap());
    }

    #[test]
    fn twist_fixes_fr_coefficients(seed: u64, ti in 0usize..5, j in 0u32..6) {
        let (t, mut rng) = setup(seed, ti);
        let f = rand_lin(&t, &mut rng, q_log(&t), 4, Level::R);
        prop_assert_eq!(f.twist(j), f);
        let g = rand_lin(&t, &mut rng, q_log(&t), 4, Level::Ambient);
        prop_assert_eq!(g.twist(j).twist(t.degree() / t.s() - j % (t.degree() / t.s())), g);
    }

    #[test]
    fn frobenius_is_pth_power(seed: u64, ti in 0usize..5) {
        let (t, mut rng) = setup(seed, ti);
        let (x, y) = (point(&t, &mut rng), point(&t, &mut rng));
        prop_assert_eq!(t.frob_p(&x, 1), t.pow(&x, t.p() as u128));
        prop_assert_eq!(t.frob_p(&x, t.degree() as u64), x);
        prop_assert_eq!(t.frob_p(&t.mul(&x, &y), 1), t.mul(&t.frob_p(&x, 1), &t.frob_p(&y, 1)));
        prop_assert_eq!(t.frob_p(&t.add(&x, &y), 2), t.add(&t.frob_p(&x, 2), &t.frob_p(&y, 2)));
    }

    #[test]
    fn norm_and_trace_land_in_the_subfield(seed: u64, ti in 0usize..5) {
        let (t, mut rng) = setup(seed, ti);
        let (top, bottom) = (t.level_degree(Level::Working), t.level_degree(Level::R));
        let (x, y) = (t.random(Level::Working, &mut rng), t.random(Level::Working, &mut rng));
        let (nx, tx) = t.norm_trace_deg(&x, top, bottom).unwrap();
        let (ny, ty) = t.norm_trace_deg(&y, top, bottom).unwrap();
        let (nxy, _) = t.norm_trace_deg(&t.mul(&x, &y), top, bottom).unwrap();
        let (_, txy) = t.norm_trace_deg(&t.add(&x, &y), top, bottom).unwrap();
        prop_assert!(t.in_subfield_deg(&nx, bottom) && t.in_subfield_deg(&tx, bottom));
        prop_assert_eq!(nxy, t.mul(&nx, &ny));
        prop_assert_eq!(txy, t.add(&tx, &ty));
    }

    #[test]
    fn determinant_routes_agree(seed: u64, ti in 0usize..5, len in 1usize..4) {
        let (t, mut rng) = setup(seed, ti);
        let inp = TransitionInput::random(&t, len, &mut rng);
        let det = transition::det_m(&inp).unwrap();
        prop_assert!(det.coeffs_in(Level::R));
        prop_assert_eq!(&det, &transition::det_m_by_composition(&inp).unwrap());
        prop_assert_eq!(det, transition::expansion_det(&inp).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn gnq_paths_and_recurrence(n in 0u64..3000, a in 0u32..4, b in 0u32..4) {
        let t = build_tower(2, 1, 2, 2, 2).unwrap();
        let ev = GnqEvaluator::new(&t).unwrap();
        let g = gnq_coeffs(n, &t).unwrap();
        for y in t.enumerate(Level::Working).unwrap() {
            prop_assert_eq!(g.eval(&y).unwrap(), ev.eval(n, &y).unwrap());
        }
        prop_assert!(gnq_recurrence_check(n, a, b, &t, Some(&ev)).unwrap());
    }
}
