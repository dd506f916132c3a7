use std::f64::consts::PI;
use std::sync::Arc;

use gridnls::inequalities::{
    check_path_estimate, estimate_constant, random_path_points, AscentConfig, Family, InequalityForm, Verdict,
    P_CRITICAL_3D,
};
use gridnls::random::{random_suite, random_zero_boundary_field, FieldKind};
use gridnls::{Boundary, Execution, GraphFunction, GridSpec, Mesh, MetricGrid};
use proptest::prelude::*;

fn mesh(d: usize, r: usize, n: usize) -> Arc<Mesh> {
    let grid = MetricGrid::build(GridSpec::new(d, 1.0, r, Boundary::Dirichlet)).unwrap();
    Mesh::new(Arc::new(grid), n).unwrap()
}

fn checks_for(d: usize) -> Vec<(InequalityForm, Option<f64>)> {
    let mut v = vec![(InequalityForm::GnInfty, None), (InequalityForm::Sobolev1d, None)];
    v.extend([2.0, 3.0, 4.0, 5.0, 6.0].map(|p| (InequalityForm::Gn1d, Some(p))));
    v.extend([2.5, 4.0, 5.5].map(|p| (InequalityForm::HolderInterp, Some(p))));
    match d {
        2 => v.push((InequalityForm::Sobolev2d, None)),
        3 => {
            v.push((InequalityForm::Sobolev3d, None));
            v.extend([2.0, P_CRITICAL_3D, 4.0, 5.0, 6.0].map(|p| (InequalityForm::Gn3d, Some(p))));
            v.extend([P_CRITICAL_3D, 4.0, 5.0, 6.0].map(|p| (InequalityForm::GnCritical, Some(p))));
        }
        _ => {}
    }
    v
}

#[test]
fn random_suites_never_violate_any_bound() {
    for (d, r, n, count) in [(1, 6, 8, 200), (2, 3, 4, 200), (3, 2, 4, 120)] {
        let m = mesh(d, r, n);
        let suite = random_suite(&m, count, 101, Execution::Parallel);
        for f in &suite {
            for &(form, p) in &checks_for(d) {
                let rep = form.check(f, p).unwrap();
                assert_ne!(rep.verdict, Verdict::Violated, "d={d} {form} p={p:?} ratio={}", rep.ratio);
            }
        }
    }
}

#[test]
fn path_estimate_holds_on_random_fields() {
    let m = mesh(3, 2, 4);
    for (i, f) in random_suite(&m, 20, 7, Execution::Parallel).iter().enumerate() {
        let pts = random_path_points(&m, 50, 7, i as u64);
        let rep = check_path_estimate(f, &pts).unwrap();
        assert!(rep.passed(), "field {i}: {rep:?}");
        assert_eq!(rep.points, 50);
    }
}

/// On a line the sharp constant of `‖f‖₆⁶ <= C ‖f‖₂⁴ ‖f'‖₂²` is `4/π²`,
/// attained by the soliton. A long fine line must get close from below.
#[test]
fn line_soliton_approaches_sharp_gn_constant() {
    let m = mesh(1, 8, 8);
    let cfg = AscentConfig { multistart: 4, ..AscentConfig::default() };
    let est = estimate_constant(&m, InequalityForm::Gn1d, Some(6.0), Family::LineSoliton, &cfg, 3, Execution::Parallel)
        .unwrap();
    let sharp = 4.0 / (PI * PI);
    assert!(est.best_ratio <= sharp * (1.0 + 1e-9), "{}", est.best_ratio);
    assert!(est.best_ratio > 0.98 * sharp, "{}", est.best_ratio);
    assert!(est.best_ratio <= est.provable_bound.unwrap());
    let check = InequalityForm::Gn1d.check(&est.witness, Some(6.0)).unwrap();
    assert!((check.ratio - est.best_ratio).abs() <= 1e-12 * est.best_ratio);
}

#[test]
fn estimates_stay_below_provable_bounds() {
    let m = mesh(3, 2, 2);
    let cfg = AscentConfig { multistart: 3, max_evals: 60, ..AscentConfig::default() };
    for (form, p) in [
        (InequalityForm::Sobolev3d, None),
        (InequalityForm::Gn3d, Some(4.0)),
        (InequalityForm::GnCritical, Some(5.0)),
        (InequalityForm::GnInfty, None),
    ] {
        for family in [Family::GaussianBump, Family::TensorBump, Family::RandomField] {
            let est = estimate_constant(&m, form, p, family, &cfg, 0, Execution::Parallel).unwrap();
            assert!(est.best_ratio > 0.0);
            assert!(est.best_ratio <= est.provable_bound.unwrap() * (1.0 + 1e-9), "{form} {family:?}");
        }
    }
}

#[test]
fn sequential_and_parallel_estimates_agree() {
    let m = mesh(2, 2, 3);
    let cfg = AscentConfig { multistart: 4, max_evals: 40, ..AscentConfig::default() };
    let run =
        |exec| estimate_constant(&m, InequalityForm::Sobolev2d, None, Family::GaussianBump, &cfg, 9, exec).unwrap();
    let (a, b) = (run(Execution::Parallel), run(Execution::Sequential));
    assert_eq!(a.best_ratio, b.best_ratio);
    assert_eq!(a.best_start, b.best_start);
    assert_eq!(a.witness, b.witness);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn ratios_are_scale_invariant(c in prop_oneof![-50.0f64..-0.02, 0.02f64..50.0], idx in 0usize..64, p in 2.0f64..6.0) {
        let m = mesh(3, 1, 3);
        let f = random_zero_boundary_field(&m, FieldKind::for_index(idx), 41, idx);
        prop_assume!(f.sup_norm() > 0.0);
        let g: GraphFunction = f.scaled(c);
        let pc = p.max(P_CRITICAL_3D);
        for (form, q) in [
            (InequalityForm::Gn1d, Some(p)),
            (InequalityForm::Gn3d, Some(p)),
            (InequalityForm::GnCritical, Some(pc)),
            (InequalityForm::Sobolev3d, None),
            (InequalityForm::GnInfty, None),
        ] {
            let (a, b) = (form.check(&f, q).unwrap().ratio, form.check(&g, q).unwrap().ratio);
            prop_assert!((a - b).abs() <= 1e-11 * a, "{} {} {}", form, a, b);
        }
    }

    #[test]
    fn sobolev_3d_holds_for_every_seed(seed in any::<u64>(), idx in 0usize..1000) {
        let m = mesh(3, 2, 3);
        let f = random_zero_boundary_field(&m, FieldKind::for_index(idx), seed, idx);
        prop_assert!(!InequalityForm::Sobolev3d.check(&f, None).unwrap().is_violated());
        prop_assert!(!InequalityForm::GnCritical.check(&f, Some(6.0)).unwrap().is_violated());
    }
}
