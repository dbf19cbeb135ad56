//! End-to-end checks against closed-form answers on two-site chains and an
//! exhaustive 3×3 blocking tabulation.

use std::sync::Arc;

use anderson_core::box_analysis::bernoulli_exact_mean;
use anderson_core::sperner::{enumerate_family, maximal_blocking, ucp_blocking_comparison};
use anderson_core::{DisorderField, FiniteVolumeOperator, FrozenAssignment, Interval, Operator, Region, Site, SiteLaw};
use proptest::prelude::*;

fn pair_region() -> Arc<Region> {
    Arc::new(Region::cuboid(Site::d1(0), 2).unwrap())
}

/// Eigenvalues of [[a, -1], [-1, b]].
fn pair_eigenvalues(a: f64, b: f64) -> (f64, f64) {
    let mean = 0.5 * (a + b);
    let r = (0.25 * (a - b) * (a - b) + 1.0).sqrt();
    (mean - r, mean + r)
}

fn pair_operator(w: [f64; 2], g: f64) -> Operator {
    let field = DisorderField::from_values(pair_region(), SiteLaw::Uniform, w.to_vec(), vec![false; 2], g).unwrap();
    FiniteVolumeOperator::assemble(field)
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn pair_spectrum(w0 in 0.0f64..1.0, w1 in 0.0f64..1.0, g in 0.0f64..10.0) {
        let op = pair_operator([w0, w1], g);
        let (lo, hi) = pair_eigenvalues(2.0 + g * w0, 2.0 + g * w1);
        let ev = op.eigenvalues().unwrap();
        prop_assert!((ev[0] - lo).abs() < 1e-12 && (ev[1] - hi).abs() < 1e-12);
    }

    #[test]
    fn pair_green_function(w0 in 0.0f64..1.0, w1 in 0.0f64..1.0, g in 0.0f64..4.0, e in -3.0f64..-0.5) {
        let op = pair_operator([w0, w1], g);
        let (a, b) = (2.0 + g * w0 - e, 2.0 + g * w1 - e);
        let det = a * b - 1.0;
        let g01 = op.green_function(e, &Site::d1(0), &Site::d1(1)).unwrap();
        let g00 = op.green_function(e, &Site::d1(0), &Site::d1(0)).unwrap();
        prop_assert!((g01 - 1.0 / det).abs() < 1e-12 * (1.0 + 1.0 / det.abs()));
        prop_assert!((g00 - b / det).abs() < 1e-12 * (1.0 + b.abs() / det.abs()));
    }

    #[test]
    fn f32_tracks_f64(w in proptest::collection::vec(0.0f64..1.0, 9), g in 0.0f64..5.0) {
        let region = Arc::new(Region::centered_box(2, 3).unwrap());
        let f64_field = DisorderField::from_values(region.clone(), SiteLaw::Uniform, w.clone(), vec![false; 9], g).unwrap();
        let w32: Vec<f32> = w.iter().map(|&x| x as f32).collect();
        let f32_field = DisorderField::from_values(region, SiteLaw::Uniform, w32, vec![false; 9], g as f32).unwrap();
        let a = FiniteVolumeOperator::assemble(f64_field).eigenvalues().unwrap().to_vec();
        let b = FiniteVolumeOperator::assemble(f32_field).eigenvalues().unwrap().to_vec();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - *y as f64).abs() < 1e-4 * (1.0 + g));
        }
    }
}

#[test]
fn pair_bernoulli_mean_and_family() {
    let region = pair_region();
    let g = 1.5;
    let window = Interval::new(0.8, 2.9).unwrap();
    let mut mean = 0.0;
    let mut members = Vec::new();
    for mask in 0u32..4 {
        let (lo, hi) = pair_eigenvalues(2.0 + g * (mask & 1) as f64, 2.0 + g * (mask >> 1) as f64);
        let count = [lo, hi].iter().filter(|&&e| window.contains(e)).count();
        mean += 0.25 * count as f64;
        if count > 0 {
            members.push(mask);
        }
    }
    let exact = bernoulli_exact_mean(&region, 0.5, g, &window).unwrap();
    assert!((exact - mean).abs() < 1e-15);

    let fam = enumerate_family(&region, &FrozenAssignment::new(), SiteLaw::bernoulli(0.5).unwrap(), g, window).unwrap();
    assert_eq!(fam.members, members);
}

/// Every single-site augmentation by an amplitude-blocking site leaves the
/// family when the window half width is below g·m_*²/2. Inclusion in the
/// maximal blocking set is tabulated only.
#[test]
fn blocking_augmentations_exit_on_3x3() {
    let region = Arc::new(Region::centered_box(2, 3).unwrap());
    let law = SiteLaw::bernoulli(0.5).unwrap();
    let m_star = 0.5;
    let half_width = 0.1;
    assert!(half_width < 0.5 * m_star * m_star);
    let mut total = 0;
    let mut violations = 0;
    for centre in [0.6, 1.4, 2.2, 3.0, 3.8, 4.6] {
        let window = Interval::centered(centre, half_width).unwrap();
        let fam = enumerate_family(&region, &FrozenAssignment::new(), law, 1.0, window).unwrap();
        let witness = maximal_blocking(&fam);
        let cmp = ucp_blocking_comparison(&fam, &witness, region.clone(), m_star, 21).unwrap();
        assert_eq!(cmp.augmentations_staying, 0, "window centred at {centre}");
        total += cmp.augmentations_total;
        violations += cmp.inclusion_violations;
        println!(
            "E={centre}: {} members, {} augmentations, {} inclusion violations, {} excluded",
            cmp.members.len(),
            cmp.augmentations_total,
            cmp.inclusion_violations,
            cmp.excluded
        );
    }
    assert!(total > 0);
    println!("inclusion violations across windows: {violations}");
}
