use proptest::prelude::*;
use soliton_gas_core::rh::{recover_field, solve_sie};
use soliton_gas_core::soliton::{
    amplitude_bound, dressing_constants, nsoliton_dressing, nsoliton_residue, one_soliton,
};
use soliton_gas_core::{
    Complex64, ContourDensity, ContourGrid, EigenvalueDomain, Interpolant, JumpField, Mat2,
    SpacetimePoint, SpectralSample,
};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn disk() -> EigenvalueDomain {
    EigenvalueDomain::disk(c(0.0, 1.0), 0.5).unwrap()
}

fn const_r(a: f64) -> Interpolant {
    Interpolant::Constant(c(a, 0.0))
}

#[test]
fn one_soliton_peak_is_twice_imaginary_part() {
    // |c| = 2 Im λ puts the peak at the origin.
    let s = SpectralSample::from_parts(vec![c(0.0, 1.0)], vec![c(2.0, 0.0)]).unwrap();
    let peak = nsoliton_residue(&s, 0.0, 0.0).unwrap().norm();
    assert!((peak - 2.0).abs() < 1e-12, "{peak}");
    for x in [-0.5, -0.1, 0.1, 0.5] {
        assert!(nsoliton_residue(&s, x, 0.0).unwrap().norm() < peak);
    }
}

#[test]
fn averaged_disk_problem_matches_centre_soliton() {
    let d = disk();
    let r = const_r(2.0);
    let g = ContourGrid::build(&d, 128, 0.2).unwrap();
    let jump = JumpField::averaged(&d, &r, &g).unwrap();
    let cc = dressing_constants(&[c(0.0, 1.0)], &[c(2.0, 0.0)])[0];
    for (x, t) in [(0.0, 0.0), (0.7, 0.3), (-1.5, 0.5)] {
        let p = SpacetimePoint::new(x, t).unwrap();
        let psi = recover_field(&solve_sie(&jump, &p).unwrap());
        let exact = one_soliton(c(0.0, 1.0), cc, x, t);
        assert!((psi - exact).norm() < 1e-9, "{x} {t}: {psi} vs {exact}");
    }
}

#[test]
fn random_jump_reproduces_two_soliton() {
    let d = disk();
    let s = SpectralSample::draw(&d, &const_r(2.0), 2, 11).unwrap();
    let g = ContourGrid::build(&d, 256, 0.2).unwrap();
    let jump = JumpField::random(&s, &g).unwrap();
    let p = SpacetimePoint::new(0.2, 0.1).unwrap();
    let v = recover_field(&solve_sie(&jump, &p).unwrap());
    let e = nsoliton_residue(&s, 0.2, 0.1).unwrap();
    assert!((v - e).norm() < 1e-6);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn dressing_and_residue_agree(n in 1usize..=8, seed in any::<u64>(), x in -6.0f64..6.0, t in 0.0f64..0.5) {
        let s = SpectralSample::draw(&disk(), &const_r(2.0), n, seed).unwrap();
        let a = nsoliton_dressing(&s, x, t).unwrap();
        let b = nsoliton_residue(&s, x, t).unwrap();
        prop_assert!((a - b).norm() <= 1e-8, "{a} vs {b}");
    }

    #[test]
    fn amplitude_never_exceeds_bound(n in 1usize..=16, seed in any::<u64>(), x in -5.0f64..5.0, t in 0.0f64..0.3) {
        let s = SpectralSample::draw(&disk(), &const_r(2.0), n, seed).unwrap();
        let v = nsoliton_residue(&s, x, t).unwrap().norm();
        prop_assert!(v <= amplitude_bound(&s) + 1e-9);
    }

    #[test]
    fn samples_lie_in_domain_and_repeat(n in 1usize..64, seed in any::<u64>()) {
        let d = disk();
        let a = SpectralSample::draw(&d, &const_r(1.0), n, seed).unwrap();
        let b = SpectralSample::draw(&d, &const_r(1.0), n, seed).unwrap();
        prop_assert_eq!(a.eigenvalues(), b.eigenvalues());
        prop_assert!(a.eigenvalues().iter().all(|&z| d.contains(z)));
    }

    #[test]
    fn plemelj_jump_is_identity(coef in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 8)) {
        let g = ContourGrid::circle(c(0.0, 1.0), 0.7, 64).unwrap();
        let h = ContourDensity::from_fn(&g, |j, z| {
            let (a, b) = coef[j % coef.len()];
            let w = c(a, b) * z;
            Mat2::new(w, w * w, c(b, a), w.exp())
        });
        let d = g.cauchy_plus(&h).unwrap().sub(&g.cauchy_minus(&h).unwrap()).sub(&h);
        prop_assert!(d.linf_norm() <= 1e-12);
    }

    #[test]
    fn averaged_jump_is_unimodular(x in -2.0f64..2.0, t in 0.0f64..0.5, a in 0.2f64..3.0) {
        let d = disk();
        let g = ContourGrid::build(&d, 64, 0.2).unwrap();
        let jump = JumpField::averaged(&d, &const_r(a), &g).unwrap();
        let p = SpacetimePoint::new(x, t).unwrap();
        for m in jump.jump(&p).values() {
            prop_assert!((m.det() - 1.0).norm() <= 1e-12);
        }
    }
}
