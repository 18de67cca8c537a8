use ionjcm::fock::FockBasis;
use ionjcm::model::IonParams;
use ionjcm::spectrum::{
    crossvalidate_roots, detect_events, eigenvalues_at, scan_spectrum, Classification,
    CrossValidationOptions, ScanGrid, ScanParameter,
};
use proptest::prelude::*;

fn params(delta: f64, omega: f64) -> IonParams {
    IonParams::new(1.0, delta, omega, 0.0).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn spectrum_symmetric_under_sign_flips(delta in -1.5f64..1.5, omega in 0.0f64..1.5, eta in 0.0f64..1.5) {
        let basis = FockBasis::new(30, 30).unwrap();
        let p = IonParams::new(1.0, delta, omega, eta).unwrap();
        let base = eigenvalues_at(&p, &basis).unwrap();
        for q in [p.with_eta(-eta), p.with_delta(-delta)] {
            let other = eigenvalues_at(&q, &basis).unwrap();
            for (a, b) in base.iter().zip(&other).take(20) {
                prop_assert!((a - b).abs() < 1e-9, "{a} vs {b}");
            }
        }
    }
}

#[test]
fn uncoupled_levels_stay_exact_at_any_eta() {
    let basis = FockBasis::new(60, 40).unwrap();
    let p = IonParams::new(1.0, 0.6, 0.0, 1.7).unwrap();
    let ev = eigenvalues_at(&p, &basis).unwrap();
    for (i, e) in ev.iter().take(20).enumerate() {
        let n = (i / 2) as f64;
        let expected = if i % 2 == 0 { n - 0.3 } else { n + 0.3 };
        assert!((e - expected).abs() < 1e-10, "{i}: {e}");
    }
}

#[test]
fn tracking_produces_permutations_and_smooth_curves() {
    let basis = FockBasis::new(60, 40).unwrap();
    let grid = ScanGrid::linspace(ScanParameter::Eta, 0.2, 1.4, 41).unwrap();
    let scan = scan_spectrum(&params(0.0, 0.5), &grid, 6, &basis).unwrap();
    for ids in &scan.track_ids {
        let mut sorted = ids.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..6).collect::<Vec<_>>());
    }
    let step = grid.values[1] - grid.values[0];
    for id in 0..4 {
        let curve = scan.tracked_curve(id);
        for w in curve.windows(2) {
            assert!((w[1] - w[0]).abs() < 4.0 * step, "id {id} jumps {w:?}");
        }
    }
}

#[test]
fn resonant_crossings_sit_on_integer_energies() {
    let basis = FockBasis::new(60, 40).unwrap();
    let grid = ScanGrid::linspace(ScanParameter::Eta, 0.3, 1.2, 31).unwrap();
    let scan = scan_spectrum(&params(0.0, 0.5), &grid, 4, &basis).unwrap();
    let events = detect_events(&scan, &basis).unwrap();
    let crossings: Vec<_> = events
        .iter()
        .filter(|e| e.classification == Classification::Crossing)
        .collect();
    assert!(!crossings.is_empty());
    for e in crossings {
        assert!((e.energy - e.energy.round()).abs() < 1e-6, "{e:?}");
        assert!(e.line.distance < 1e-6);
    }
    assert!(events.iter().any(|e| (e.location - 0.75f64.sqrt()).abs() < 1e-6));
}

#[test]
fn detuned_spectrum_has_only_avoided_crossings() {
    let basis = FockBasis::new(60, 40).unwrap();
    let grid = ScanGrid::linspace(ScanParameter::Eta, 0.0, 2.0, 41).unwrap();
    let scan = scan_spectrum(&params(0.5, 0.5), &grid, 4, &basis).unwrap();
    let events = detect_events(&scan, &basis).unwrap();
    for e in &events {
        assert_eq!(e.classification, Classification::Avoided, "{e:?}");
        assert!(e.gap > 1e-6);
    }
}

#[test]
fn sideband_roots_are_accounted_for_by_crossings() {
    let basis = FockBasis::new(60, 40).unwrap();
    let options = CrossValidationOptions {
        eta_range: (0.3, 1.6),
        steps: 40,
        n_levels: 5,
    };
    let cv = crossvalidate_roots(0, &params(1.0, 0.5), &basis, &options).unwrap();
    assert!(!cv.roots.is_empty());
    for r in &cv.roots {
        assert!(r.spectrum_distance < 1e-6, "{r:?}");
    }
    assert!(cv.all_roots_are_crossings(), "{:?}", cv.roots);
}

#[test]
fn forward_and_reverse_tracking_compose_to_identity() {
    // the spectrum is even in eta, so a scan over -eta walks the same path backwards
    let basis = FockBasis::new(60, 40).unwrap();
    let fixed = params(0.0, 0.5);
    let fwd = ScanGrid::linspace(ScanParameter::Eta, 0.4, 1.4, 50).unwrap();
    let rev = ScanGrid::linspace(ScanParameter::Eta, -1.4, -0.4, 50).unwrap();
    let f = scan_spectrum(&fixed, &fwd, 6, &basis).unwrap();
    let r = scan_spectrum(&fixed, &rev, 6, &basis).unwrap();
    let f_end = f.track_ids.last().unwrap();
    let r_end = r.track_ids.last().unwrap();
    assert_ne!(f_end, &(0..6).collect::<Vec<_>>(), "the path should contain crossings");
    for i in 0..6 {
        assert_eq!(f_end[r_end[i]], i);
    }
}

#[test]
fn every_ansatz_root_appears_in_the_spectrum() {
    use ionjcm::ansatz::{find_roots, Branch, SolveFor};
    let basis = FockBasis::new(100, 40).unwrap();
    let mut checked = 0;
    for delta in [0.0, 0.5, 1.0] {
        let p = params(delta, 0.5);
        for m in 0..=3 {
            for branch in [Branch::Plus, Branch::Minus] {
                let roots = find_roots(m, branch, SolveFor::Eta2, (0.0, 6.25), &p, 512).unwrap();
                for r in roots.roots.iter().filter(|r| r.value > 0.0) {
                    let q = p.with_eta(r.value.sqrt());
                    let e = branch.energy(m, &q);
                    let ev = eigenvalues_at(&q, &basis).unwrap();
                    let dist = ev.iter().fold(f64::INFINITY, |a, x| a.min((x - e).abs()));
                    assert!(dist < 1e-6, "delta={delta} m={m} {branch:?} eta2={}: {dist:e}", r.value);
                    checked += 1;
                }
            }
        }
    }
    assert!(checked >= 15, "{checked}");
}
