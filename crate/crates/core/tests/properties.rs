use isomono::fuchsian::{FuchsianSystem, Sign, SpherePoint};
use isomono::hecke::{modify, paired_modify, HeckeMove, ModKind, PairedMove};
use isomono::linalg::Mat2;
use isomono::pvi::{cross_ratio, s4_orbit, Moebius, QuadConfig};
use isomono::random::{seeded_system, RandomSpec};
use isomono::rational::RationalMatrixFunction;
use isomono::schlesinger::{conserved_report, flow, DeformationPath};
use isomono::sov::{gauge_normalize, reconstruct, separated_variables, spectral_curve};
use isomono::transport::{local_monodromy, monodromy, monodromy_rep, transport, Loop, PathPlan};
use isomono::{complete_residue, cplx, eigenline, Error, C};
use proptest::prelude::*;

fn c() -> impl Strategy<Value = C<f64>> {
    (-2.0..2.0f64, -2.0..2.0f64).prop_map(|(re, im)| cplx(re, im))
}

fn system(n: usize) -> impl Strategy<Value = FuchsianSystem<f64>> {
    any::<u64>().prop_map(move |seed| seeded_system(seed, &RandomSpec::new(n)).unwrap())
}

fn any_system() -> impl Strategy<Value = FuchsianSystem<f64>> {
    (4usize..=7).prop_flat_map(system)
}

fn far_base(sys: &FuchsianSystem<f64>) -> C<f64> {
    cplx(0.05, sys.position_scale() + 1.3)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn residues_sum_to_zero(sys in any_system()) {
        let total: Mat2<f64> = sys.residues().iter().map(|r| r.m).sum();
        prop_assert!(total.norm() < sys.tol_alg());
    }

    #[test]
    fn completion_is_traceless_with_given_determinant(r11 in c(), r12 in c(), lambda in c()) {
        prop_assume!(r12.norm() > 1e-3);
        let done = complete_residue(r11, r12, lambda, 1e-10).unwrap();
        let m = done.residue.m;
        prop_assert_eq!(m.trace(), cplx(0.0, 0.0));
        let scale = r11.norm_sqr() + (lambda * lambda).norm();
        prop_assert!((m.det() + lambda * lambda).norm() <= 1e-14 * scale.max(1.0));
    }

    #[test]
    fn eigenlines_are_independent(sys in any_system()) {
        for r in sys.residues() {
            let p = eigenline(r, Sign::Plus, 1e-10).unwrap();
            let m = eigenline(r, Sign::Minus, 1e-10).unwrap();
            prop_assert!(p.wedge(&m).norm() > 1e-6);
        }
    }

    #[test]
    fn eval_is_linear_in_residues(sys in any_system(), alpha in c(), z in c()) {
        let ms: Vec<Mat2<f64>> = sys.finite_points().iter().map(|(i, _)| sys.residue(*i).m.scale(alpha)).collect();
        let scaled = sys.with_finite_residues(&ms);
        if let (Ok(a), Ok(b)) = (sys.eval_l(z), scaled.eval_l(z)) {
            prop_assert!((b - a.scale(alpha)).norm() <= 1e-12 * (1.0 + b.norm()));
        }
    }

    #[test]
    fn spectral_double_poles_are_minus_lambda_squared(sys in any_system()) {
        let sc = spectral_curve(&sys);
        for ((i, _), d) in sys.finite_points().iter().zip(&sc.double_pole) {
            let l = sys.residue(*i).lambda;
            prop_assert!((*d + l * l).norm() < sys.tol_alg());
        }
    }

    #[test]
    fn separated_pairs_count_and_triangularity(sys in any_system()) {
        let sep = separated_variables(&sys).unwrap();
        prop_assert_eq!(sep.pairs.len(), sys.n() - 3);
        let (norm, _) = gauge_normalize(&sys).unwrap();
        let scale = norm.residue_scale().max(1.0);
        for (x, p) in &sep.pairs {
            let l = norm.eval_l(*x).unwrap();
            prop_assert!((l - Mat2::scalar(*p)).det().norm() < 1e-9 * scale * scale);
        }
    }

    #[test]
    fn reconstruction_round_trip(sys in (4usize..=6).prop_flat_map(system)) {
        let sep = separated_variables(&sys).unwrap();
        let (norm, _) = gauge_normalize(&sys).unwrap();
        let rec = reconstruct(&sep, sys.points(), &norm.lambdas(), 1e-10).unwrap();
        let again = separated_variables(&rec.system).unwrap();
        for (a, b) in sep.pairs.iter().zip(&again.pairs) {
            prop_assert!((a.0 - b.0).norm() < 1e-8 && (a.1 - b.1).norm() < 1e-8);
        }
    }

    #[test]
    fn cross_ratio_is_moebius_invariant(l in [c(), c(), c(), c()], m in [c(), c(), c(), c()]) {
        let q = QuadConfig::new(l.map(SpherePoint::Finite));
        let mob = Moebius { matrix: Mat2::new(m[0], m[1], m[2], m[3]) };
        prop_assume!(mob.matrix.det().norm() > 1e-2);
        prop_assume!(!q.is_degenerate());
        let r0 = cross_ratio(&q).unwrap().value.finite().unwrap();
        let r1 = cross_ratio(&QuadConfig::new(q.points.map(|p| mob.apply(&p)))).unwrap().value;
        prop_assume!(r0.norm() < 1e3);
        let r1 = r1.finite().unwrap();
        prop_assert!((r1 - r0).norm() <= 1e-9 * (1.0 + r0.norm()));
    }

    #[test]
    fn orbit_is_closed(x in c()) {
        prop_assume!(x.norm() > 1e-2 && (x - cplx(1.0, 0.0)).norm() > 1e-2);
        let vals: Vec<C<f64>> = s4_orbit(SpherePoint::Finite(x)).iter().map(|e| e.value.finite().unwrap()).collect();
        let one = cplx::<f64>(1.0, 0.0);
        for v in &vals {
            for img in [one - *v, one / *v] {
                prop_assert!(vals.iter().any(|w| (*w - img).norm() < 1e-9 * (1.0 + img.norm())));
            }
        }
    }

    #[test]
    fn invariant_moves_have_no_double_pole(sys in system(5), idx in 0usize..4, upper in any::<bool>(), plus in any::<bool>()) {
        let kind = if upper { ModKind::Upper } else { ModKind::Lower };
        let sign = if plus { Sign::Plus } else { Sign::Minus };
        let mv = HeckeMove::at_eigenline(&sys, idx, kind, sign).unwrap();
        let before = RationalMatrixFunction::from_system(&sys).trace_residue_sum();
        let out = modify(&sys, &mv).unwrap();
        prop_assert!(out.double_pole.norm() < sys.tol_alg());
        let change = out.function.trace_residue_sum() - before;
        prop_assert!((change - cplx(mv.trace_shift() as f64, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn non_invariant_moves_have_double_pole(eps in 1e-3..2.0f64, lambda in 0.05..0.45f64, tilt in c()) {
        // eigenline e1 of the first residue; direction e2 + tilt e1 is never invariant
        let b0 = Mat2::new(cplx(lambda, 0.0), cplx(eps, 0.0), cplx(0.0, 0.0), cplx(-lambda, 0.0));
        let b1 = Mat2::new(cplx(0.1, 0.0), cplx(0.2, 0.0), cplx(0.3, 0.0), cplx(-0.1, 0.0));
        let sys = FuchsianSystem::from_finite(vec![cplx(0.0, 0.0), cplx(1.0, 0.0)], vec![b0, b1], true, 1e-10).unwrap();
        let dir = [tilt.scale(0.1), cplx(1.0, 0.0)];
        let mv = HeckeMove::new(&sys, cplx(0.0, 0.0), ModKind::Lower, dir).unwrap();
        let out = modify(&sys, &mv).unwrap();
        prop_assert!(out.non_invariant);
        prop_assert!(out.double_pole.norm() > 1e-4);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn paired_moves_follow_shift_table(sys in system(4), i in 0usize..4, j in 0usize..4, d0 in any::<bool>(), d1 in any::<bool>()) {
        let s = |b: bool| if b { Sign::Plus } else { Sign::Minus };
        let mv = PairedMove::new(i, j, (s(d0), s(d1)));
        let out = paired_modify(&sys, &mv).unwrap();
        let shift = mv.shift(4);
        let before = RationalMatrixFunction::from_system(&sys).trace_residue_sum();
        let after = RationalMatrixFunction::from_system(&out).trace_residue_sum();
        prop_assert!((after - before).norm() < 1e-12);
        for k in 0..4 {
            let b = out.residue(k).m;
            prop_assert!(b.trace().norm() < 1e-12);
            let want = sys.residue(k).lambda + cplx(0.5 * shift[k] as f64, 0.0);
            let ev = b.eigenvalues();
            let hit = (ev[0] - want).norm().min((ev[1] - want).norm());
            prop_assert!(hit < 1e-10 * (1.0 + b.norm()), "{:?} at {}: {:e}", mv, k, hit);
        }
    }

    #[test]
    fn transport_keeps_unit_determinant(sys in any_system(), a in c(), b in c()) {
        let base = far_base(&sys);
        let path = PathPlan::new(vec![base, a.scale(3.0), b.scale(3.0), base], 1e-3);
        prop_assume!(path.as_ref().map(|p| p.check_clearance(&sys.finite_points().iter().map(|x| x.1).collect::<Vec<_>>()).is_ok()).unwrap_or(false));
        let path = path.unwrap();
        let tol = 1e-9;
        let y = transport(&sys, &path, Mat2::identity(), tol).unwrap();
        prop_assert!((y.det() - cplx(1.0, 0.0)).norm() < 10.0 * tol * path.length());
    }

    #[test]
    fn local_monodromy_spectrum(sys in system(5)) {
        for (i, a) in sys.finite_points() {
            let m = local_monodromy(&sys, a, 1e-10).unwrap();
            let l = sys.residue(i).lambda;
            let two_pi_i = cplx::<f64>(0.0, 2.0 * std::f64::consts::PI);
            let want = [(two_pi_i * l).exp(), (-two_pi_i * l).exp()];
            let ev = m.eigenvalues();
            for w in want {
                prop_assert!(ev.iter().any(|e| (*e - w).norm() < 1e-6));
            }
        }
    }

    #[test]
    fn traces_do_not_depend_on_base(sys in system(4)) {
        let r = sys.position_scale() + 1.3;
        let t0 = monodromy_rep(&sys, cplx(0.05, r), 1e-10).unwrap().traces();
        let t1 = monodromy_rep(&sys, cplx(-r, -0.07), 1e-10).unwrap().traces();
        for (a, b) in t0.iter().zip(&t1) {
            prop_assert!((a - b).norm() < 5e-6 * (1.0 + a.norm()));
        }
    }
}

fn short_path(sys: &FuchsianSystem<f64>) -> DeformationPath<f64> {
    let a = sys.points()[0].finite().unwrap();
    let verts = vec![a, a + cplx(0.15, 0.1), a + cplx(0.3, -0.05), a + cplx(0.4, 0.1)];
    DeformationPath::new(sys, vec![(0, verts)]).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn flow_is_isospectral_and_isomonodromic(sys in system(4)) {
        let dpath = short_path(&sys);
        let tol = 1e-10;
        let traj = match flow(&sys, &dpath, tol) {
            Ok(t) => t,
            Err(Error::PointCollision { .. }) => return Ok(()),
            Err(e) => panic!("{e}"),
        };
        for row in conserved_report(&traj) {
            prop_assert!(row.eigen_drift < 10.0 * tol.max(1e-9));
        }
        let base = far_base(&sys);
        let m0 = monodromy_rep(traj.first(), base, 1e-10).unwrap().traces();
        let m1 = monodromy_rep(traj.last(), base, 1e-10).unwrap().traces();
        for (a, b) in m0.iter().zip(&m1) {
            prop_assert!((a - b).norm() < 1e-6_f64.max(100.0 * tol) * (1.0 + a.norm()));
        }
        let back = flow(traj.last(), &dpath.reversed(), tol).unwrap();
        for (r0, r1) in sys.residues().iter().zip(back.last().residues()) {
            prop_assert!((r0.m - r1.m).norm() < 1e-8);
        }
    }
}

#[test]
fn monodromy_converges_as_tolerance_halves() {
    let sys = seeded_system::<f64>(2024, &RandomSpec::new(4)).unwrap();
    let poles: Vec<C<f64>> = sys.finite_points().iter().map(|p| p.1).collect();
    let lp = Loop::around(&poles, far_base(&sys), 0).unwrap();
    let ms: Vec<Mat2<f64>> = [1e-5, 5e-6, 2.5e-6].iter().map(|t| monodromy(&sys, &lp, *t).unwrap()).collect();
    let d1 = (ms[0] - ms[1]).norm();
    let d2 = (ms[1] - ms[2]).norm();
    assert!(d2 < 0.9 * d1, "{d1:e} -> {d2:e}");
}

#[test]
fn spectral_curve_moves_along_flow() {
    let sys = seeded_system::<f64>(2024, &RandomSpec::new(4)).unwrap();
    let traj = flow(&sys, &short_path(&sys), 1e-10).unwrap();
    let c0 = spectral_curve(traj.first()).numerator;
    let c1 = spectral_curve(traj.last()).numerator;
    let change = c0.coeffs.iter().zip(&c1.coeffs).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    assert!(change > 1e-3, "{change:e}");
}

/// As the separated `x` approaches a pole, the divisor flag appears strictly
/// before separation itself breaks down.
#[test]
fn boundary_flag_precedes_breakdown() {
    use isomono::pvi::{boundary_flags, normalize_moebius, BoundaryFlag};
    use isomono::sov::BoundaryOptions;
    let sys = normalize_moebius(&seeded_system::<f64>(15, &RandomSpec::new(4)).unwrap()).unwrap().system;
    let sep = separated_variables(&sys).unwrap();
    let (norm, _) = gauge_normalize(&sys).unwrap();
    let a = cplx::<f64>(1.0, 0.0);
    let lambda = sys.residue(1).lambda;
    let mut first_flag = None;
    let mut first_failure = None;
    for k in 1..=12 {
        let du: C<f64> = cplx(10f64.powi(-k), 0.0);
        let mut near = sep.clone();
        near.pairs[0] = (a + du, (-lambda + cplx::<f64>(0.3, 0.0) * du) / du);
        let rec = reconstruct(&near, sys.points(), &norm.lambdas(), 1e-10);
        let flagged = rec.as_ref().ok().and_then(|r| {
            let (x, p) = separated_variables(&r.system).ok()?.pairs[0];
            boundary_flags(&r.system, x, p, &BoundaryOptions::default()).ok()?
        });
        match (rec.is_ok(), flagged) {
            (true, Some(BoundaryFlag::Chart(ch))) => {
                assert_eq!((ch.point_index, ch.branch), (1, Sign::Minus));
                first_flag.get_or_insert(k);
            }
            (true, _) => {}
            (false, _) => {
                first_failure.get_or_insert(k);
            }
        }
    }
    let flag = first_flag.expect("flag never fired");
    if let Some(fail) = first_failure {
        assert!(flag < fail);
    }
}
