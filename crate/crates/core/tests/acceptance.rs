//! Acceptance suite. Runs without the libtest harness so every criterion
//! prints its own PASS/FAIL line; the process fails if any criterion does.

use isomono::fuchsian::{FuchsianSystem, LogConnection, Sign, SpherePoint};
use isomono::hecke::{modify, monodromy_effect, paired_modify, HeckeMove, ModKind, PairedMove};
use isomono::linalg::Mat2;
use isomono::pvi::{cross_ratio, s4_orbit, Moebius, QuadConfig};
use isomono::random::{random_residue, rng_from_seed, seeded_system, RandomSpec};
use isomono::schlesinger::{conserved_report, flow, DeformationPath, FlowTrajectory};
use isomono::sov::{
    apparent_connection, gauge_normalize, invariant_directions, observable_p, observable_x, poisson_bracket,
    reconstruct, separated_variables, spectral_curve, BracketOptions,
};
use isomono::transport::{local_monodromy, monodromy_rep};
use isomono::{cplx, Error, C};
use rand::Rng;
use rayon::prelude::*;
use std::time::Instant;

type Sys = FuchsianSystem<f64>;

const REGRESSION_SEED: u64 = 2024;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn far_base(sys: &Sys) -> C<f64> {
    cplx(0.05, sys.position_scale() + 1.3)
}

fn one() -> C<f64> {
    cplx(1.0, 0.0)
}

/// Point 0 moves along three segments of length ~0.18 each.
fn polyline(sys: &Sys) -> Vec<C<f64>> {
    let a = sys.points()[0].finite().unwrap();
    vec![a, a + cplx(0.15, 0.1), a + cplx(0.3, -0.05), a + cplx(0.4, 0.1)]
}

/// The next seeds (from `start`) whose polyline keeps clear of the other poles.
fn flow_systems(n: usize, count: usize, start: u64) -> Vec<(u64, Sys)> {
    let mut out = Vec::new();
    let mut seed = start;
    while out.len() < count {
        let sys = seeded_system::<f64>(seed, &RandomSpec::new(n)).unwrap();
        let verts = polyline(&sys);
        let clear = sys.finite_points().iter().skip(1).all(|(_, a)| {
            verts.windows(2).all(|w| isomono::transport::segment_distance(w[0], w[1], *a) > 0.2)
        });
        if clear {
            out.push((seed, sys));
        }
        seed += 1;
    }
    out
}

struct FlowRun {
    seed: u64,
    n: usize,
    traj: FlowTrajectory<f64>,
    trace_gap: f64,
    eigen_drift: f64,
}

fn run_flow(seed: u64, sys: &Sys, tol_ode: f64) -> Result<FlowRun, Error> {
    let dpath = DeformationPath::new(sys, vec![(0, polyline(sys))])?;
    let traj = flow(sys, &dpath, tol_ode)?;
    let eigen_drift = conserved_report(&traj).iter().map(|r| r.eigen_drift).fold(0.0, f64::max);
    let base = far_base(sys);
    let t0 = monodromy_rep(traj.first(), base, tol_ode)?.traces();
    let t1 = monodromy_rep(traj.last(), base, tol_ode)?.traces();
    let trace_gap = t0.iter().zip(&t1).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    Ok(FlowRun { seed, n: sys.n(), traj, trace_gap, eigen_drift })
}

fn flow_runs() -> (Vec<Result<FlowRun, (u64, Error)>>, f64) {
    let start = Instant::now();
    let mut systems = flow_systems(4, 5, 100);
    systems.extend(flow_systems(5, 3, 200));
    let runs = systems
        .par_iter()
        .map(|(seed, sys)| run_flow(*seed, sys, 1e-9).map_err(|e| (*seed, e)))
        .collect();
    (runs, start.elapsed().as_secs_f64())
}

fn criterion_1(runs: &[Result<FlowRun, (u64, Error)>], seconds: f64) -> Verdict {
    let mut worst: f64 = 0.0;
    for r in runs {
        match r {
            Ok(run) => worst = worst.max(run.trace_gap),
            Err((seed, e)) => return verdict(false, format!("seed {seed}: {e}")),
        }
    }
    let seeds: Vec<String> = runs.iter().flatten().map(|r| format!("{}:n{}", r.seed, r.n)).collect();
    verdict(
        worst < 1e-6 && seconds < 60.0,
        format!("max |tr M(end) - tr M(start)| = {worst:.2e} over [{}], {seconds:.1} s", seeds.join(" ")),
    )
}

fn criterion_2(runs: &[Result<FlowRun, (u64, Error)>]) -> Verdict {
    let worst = runs.iter().flatten().map(|r| r.eigen_drift).fold(0.0, f64::max);
    let all = runs.iter().all(|r| r.is_ok());
    verdict(all && worst < 1e-8, format!("max eigenvalue drift = {worst:.2e}"))
}

fn criterion_3() -> Verdict {
    let signs = [Sign::Plus, Sign::Minus];
    let results: Vec<Result<(f64, bool, f64), String>> = (0..10u64)
        .into_par_iter()
        .map(|seed| {
            let sys = seeded_system::<f64>(300 + seed, &RandomSpec::new(4)).unwrap();
            let base = far_base(&sys);
            let mut eig_err: f64 = 0.0;
            let mut traceless = true;
            let mut trace_err: f64 = 0.0;
            for i in 0..4 {
                for j in 0..4 {
                    for d0 in signs {
                        for d1 in signs {
                            let mv = PairedMove::new(i, j, (d0, d1));
                            let out = paired_modify(&sys, &mv).map_err(|e| format!("seed {seed} {mv:?}: {e}"))?;
                            let shift = mv.shift(4);
                            for k in 0..4 {
                                let b = out.residue(k).m;
                                traceless &= b.trace() == cplx(0.0, 0.0);
                                let want = sys.residue(k).lambda + cplx(0.5 * shift[k] as f64, 0.0);
                                let ev = b.eigenvalues();
                                eig_err = eig_err.max((ev[0] - want).norm().min((ev[1] - want).norm()));
                            }
                            let cmp = monodromy_effect(&sys, &out, base, 1e-10)
                                .map_err(|e| format!("seed {seed} {mv:?}: {e}"))?;
                            for c in cmp {
                                trace_err = trace_err.max(c.abs_gap.abs() / (1.0 + c.before.norm()));
                            }
                        }
                    }
                }
            }
            Ok((eig_err, traceless, trace_err))
        })
        .collect();
    let mut eig: f64 = 0.0;
    let mut traceless = true;
    let mut tr: f64 = 0.0;
    for r in results {
        match r {
            Ok((e, t, m)) => {
                eig = eig.max(e);
                traceless &= t;
                tr = tr.max(m);
            }
            Err(msg) => return verdict(false, msg),
        }
    }
    verdict(
        eig < 1e-10 && traceless && tr < 1e-6,
        format!(
            "640 moves: eigenvalue error {eig:.2e}, exactly traceless = {traceless}, \
             ||tr M'| - |tr M|| / (1 + |tr M|) = {tr:.2e}"
        ),
    )
}

fn criterion_4() -> Verdict {
    let mut lines = Vec::new();
    let mut pass = true;
    for eps in [0.0, 1e-3, 1e-1, 1.0] {
        let b0 = Mat2::new(cplx(0.3, 0.0), cplx(eps, 0.0), cplx(0.0, 0.0), cplx(-0.3, 0.0));
        let b1 = Mat2::new(cplx(0.1, 0.0), cplx(0.2, 0.0), cplx(0.4, 0.0), cplx(-0.1, 0.0));
        let sys = FuchsianSystem::from_finite(vec![cplx(0.0, 0.0), cplx(1.0, 0.0)], vec![b0, b1], true, 1e-10).unwrap();
        // second axis: invariant only when eps = 0
        let mv = HeckeMove::new(&sys, cplx(0.0, 0.0), ModKind::Lower, [cplx(0.0, 0.0), one()]).unwrap();
        let norm = match modify(&sys, &mv) {
            Ok(m) => m.double_pole.norm(),
            Err(e) => return verdict(false, format!("eps {eps}: {e}")),
        };
        pass &= if eps == 0.0 { norm < 1e-12 } else { norm >= 0.5 * eps };
        lines.push(format!("eps {eps:e}: {norm:.3e}"));
    }
    verdict(pass, format!("order-2 coefficient norms [{}]", lines.join(", ")))
}

fn criterion_5() -> Verdict {
    let cases: Vec<(usize, u64)> = [4usize, 5, 6].iter().flat_map(|&n| (0..10u64).map(move |s| (n, 500 + s))).collect();
    let results: Vec<Result<(f64, f64), String>> = cases
        .par_iter()
        .map(|&(n, seed)| {
            let sys = seeded_system::<f64>(seed, &RandomSpec::new(n)).unwrap();
            let err = |e: Error| format!("n {n} seed {seed}: {e}");
            let sep = separated_variables(&sys).map_err(err)?;
            if sep.pairs.len() != n - 3 {
                return Err(format!("n {n} seed {seed}: {} pairs", sep.pairs.len()));
            }
            let (norm, _) = gauge_normalize(&sys).map_err(err)?;
            let scale = norm.residue_scale().max(1.0);
            let mut det: f64 = 0.0;
            for (x, p) in &sep.pairs {
                let l = norm.eval_l(*x).map_err(err)?;
                det = det.max((l - Mat2::scalar(*p)).det().norm() / (scale * scale));
            }
            let opts = BracketOptions::default();
            let mut br: f64 = 0.0;
            for k in 0..n - 3 {
                for l in 0..n - 3 {
                    let want = if k == l { one() } else { cplx(0.0, 0.0) };
                    let xp = poisson_bracket(&sys, &observable_x(k), &observable_p(l), &opts).map_err(err)?;
                    br = br.max((xp - want).norm());
                    if k < l {
                        let xx = poisson_bracket(&sys, &observable_x(k), &observable_x(l), &opts).map_err(err)?;
                        let pp = poisson_bracket(&sys, &observable_p(k), &observable_p(l), &opts).map_err(err)?;
                        br = br.max(xx.norm()).max(pp.norm());
                    }
                }
            }
            Ok((det, br))
        })
        .collect();
    let mut det: f64 = 0.0;
    let mut br: f64 = 0.0;
    for r in results {
        match r {
            Ok((d, b)) => {
                det = det.max(d);
                br = br.max(b);
            }
            Err(msg) => return verdict(false, msg),
        }
    }
    verdict(
        det < 1e-9 && br < 1e-4,
        format!("30 systems: max det(L(x)-p)/scale^2 = {det:.2e}, max bracket error = {br:.2e}"),
    )
}

fn criterion_6() -> Verdict {
    let cases: Vec<(usize, u64)> = (0..10u64).map(|s| (4, 600 + s)).chain((0..5u64).map(|s| (5, 700 + s))).collect();
    let mut worst: f64 = 0.0;
    let mut cond: f64 = 0.0;
    for (n, seed) in cases {
        let sys = seeded_system::<f64>(seed, &RandomSpec::new(n)).unwrap();
        let run = || -> Result<(f64, f64), Error> {
            let sep = separated_variables(&sys)?;
            let (norm, _) = gauge_normalize(&sys)?;
            let rec = reconstruct(&sep, sys.points(), &norm.lambdas(), 1e-10)?;
            let again = separated_variables(&rec.system)?;
            let mut d: f64 = 0.0;
            for (a, b) in sep.pairs.iter().zip(&again.pairs) {
                for (u, v) in [(a.0, b.0), (a.1, b.1)] {
                    d = d.max((u.re - v.re).abs()).max((u.im - v.im).abs());
                }
            }
            Ok((d, rec.cond))
        };
        match run() {
            Ok((d, c)) => {
                worst = worst.max(d);
                cond = cond.max(c);
            }
            Err(e) => return verdict(false, format!("n {n} seed {seed}: {e}")),
        }
    }
    verdict(worst < 1e-8 && cond < 1e8, format!("15 data sets: max component error {worst:.2e}, max condition {cond:.2e}"))
}

/// Four poles; `(λ, 1-λ)` at the first two, `(λ, -λ)` at the last two.
fn theta(seed: u64) -> (LogConnection<f64>, rand_chacha::ChaCha8Rng) {
    let mut rng = rng_from_seed(seed);
    let points = vec![cplx(0.0, 0.0), cplx(1.0, 0.0), cplx(0.3, 1.2), cplx(-0.9, -0.4)];
    let mut residues = Vec::new();
    for k in 0..4 {
        let l: f64 = rng.gen_range(0.1..0.4);
        residues.push(if k < 2 {
            random_residue::<f64, _>(&mut rng, cplx(0.5 - l, 0.0), 4.0) + Mat2::scalar(cplx(0.5, 0.0))
        } else {
            random_residue::<f64, _>(&mut rng, cplx(l, 0.0), 4.0)
        });
    }
    (LogConnection { points, residues }, rng)
}

fn criterion_7() -> Verdict {
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for seed in 0..5u64 {
        for m in [1usize, 2] {
            let (th, mut rng) = theta(800 + seed);
            let mut xs: Vec<C<f64>> = Vec::new();
            while xs.len() < m {
                let x = cplx(rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5));
                if th.points.iter().chain(&xs).all(|a| (a - x).norm() > 0.4) {
                    xs.push(x);
                }
            }
            let choice: Vec<Sign> = (0..m).map(|k| if k % 2 == 0 { Sign::Plus } else { Sign::Minus }).collect();
            let run = || -> Result<f64, Error> {
                let pts = invariant_directions(&th, &xs, &choice, 1e-12)?;
                let sol = apparent_connection(&th, &pts, 1e-10)?;
                let mut d: f64 = 0.0;
                for x in &xs {
                    d = d.max((local_monodromy(&sol.connection, *x, 1e-11)? - Mat2::identity()).norm());
                }
                Ok(d)
            };
            match run() {
                Ok(d) => {
                    worst = worst.max(d);
                    count += m;
                }
                Err(e) => return verdict(false, format!("seed {seed}, {m} points: {e}")),
            }
        }
    }
    verdict(worst < 1e-6, format!("{count} apparent points: max ||M - I|| = {worst:.2e}"))
}

fn criterion_8() -> Verdict {
    let sys = seeded_system::<f64>(REGRESSION_SEED, &RandomSpec::new(4)).unwrap();
    let run = match run_flow(REGRESSION_SEED, &sys, 1e-9) {
        Ok(r) => r,
        Err(e) => return verdict(false, e.to_string()),
    };
    let c0 = spectral_curve(run.traj.first()).numerator;
    let change = run
        .traj
        .samples
        .iter()
        .map(|(_, s)| {
            let c = spectral_curve(s).numerator;
            c0.coeffs.iter().zip(&c.coeffs).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
        })
        .fold(0.0, f64::max);
    verdict(
        change > 1e-3 && run.trace_gap < 1e-6 && run.eigen_drift < 1e-8,
        format!(
            "max coefficient change {change:.3e}; trace gap {:.2e}, eigenvalue drift {:.2e}",
            run.trace_gap, run.eigen_drift
        ),
    )
}

fn criterion_9() -> Verdict {
    let mut rng = rng_from_seed(900);
    let mut rc = |r: f64| cplx(rng.gen_range(-r..r), rng.gen_range(-r..r));
    let x = rc(2.0);
    let fin = SpherePoint::Finite;
    let q = QuadConfig::new([fin(x), fin(one()), fin(cplx(0.0, 0.0)), SpherePoint::Infinity]);
    let exact = cross_ratio(&q).map(|r| r.value) == Ok(fin(x));
    let swap = cross_ratio(&q.permuted([3, 1, 2, 0])).map(|r| r.value) == Ok(fin(one() - x));

    let mut moeb: f64 = 0.0;
    let mut maps = 0;
    while maps < 20 {
        let m = Mat2::new(rc(2.0), rc(2.0), rc(2.0), rc(2.0));
        if m.det().norm() < 0.1 {
            continue;
        }
        let pts = [fin(rc(2.0)), fin(rc(2.0)), fin(rc(2.0)), fin(rc(2.0))];
        let q = QuadConfig::new(pts);
        let mob = Moebius { matrix: m };
        let moved = QuadConfig::new(pts.map(|p| mob.apply(&p)));
        match (cross_ratio(&q).map(|r| r.value), cross_ratio(&moved).map(|r| r.value)) {
            (Ok(SpherePoint::Finite(a)), Ok(SpherePoint::Finite(b))) => {
                moeb = moeb.max((a - b).norm() / (1.0 + a.norm()));
                maps += 1;
            }
            _ => continue,
        }
    }

    let orbit = s4_orbit(fin(x));
    let vals: Vec<C<f64>> = orbit.iter().map(|e| e.value.finite().unwrap()).collect();
    let mut closed = true;
    for v in &vals {
        for img in [one() - *v, one() / *v] {
            closed &= vals.iter().any(|w| (*w - img).norm() < 1e-12 * (1.0 + img.norm()));
        }
    }
    for el in &orbit {
        let r = cross_ratio(&q.permuted(el.permutation)).unwrap().value.finite().unwrap();
        closed &= (r - el.value.finite().unwrap()).norm() < 1e-12 * (1.0 + r.norm());
    }
    verdict(
        exact && swap && moeb < 1e-12 && closed,
        format!("r(X,1,0,inf) = X: {exact}; swap = 1-X: {swap}; Moebius max rel. error {moeb:.2e} over 20 maps; orbit closed: {closed}"),
    )
}

fn criterion_10() -> Verdict {
    let sys = seeded_system::<f64>(REGRESSION_SEED, &RandomSpec::new(4)).unwrap();
    let base = far_base(&sys);
    let errs: Result<Vec<f64>, Error> =
        [1e-6, 5e-7].iter().map(|t| monodromy_rep(&sys, base, *t).map(|r| r.est_error)).collect();
    match errs {
        Ok(e) => {
            let ratio = e[0] / e[1];
            verdict(ratio >= 1.5, format!("||M_n...M_1 - I||: {:.3e} -> {:.3e} (ratio {ratio:.2})", e[0], e[1]))
        }
        Err(e) => verdict(false, e.to_string()),
    }
}

fn main() {
    let start = Instant::now();
    let (runs, flow_seconds) = flow_runs();
    let verdicts = [
        criterion_1(&runs, flow_seconds),
        criterion_2(&runs),
        criterion_3(),
        criterion_4(),
        criterion_5(),
        criterion_6(),
        criterion_7(),
        criterion_8(),
        criterion_9(),
        criterion_10(),
    ];
    let names = [
        "monodromy invariance under flow",
        "isospectrality",
        "Hecke eigenvalue shifts",
        "non-invariant double pole",
        "separation of variables",
        "reconstruction round trip",
        "apparent singularities",
        "spectral curve moves",
        "cross-ratio algebra",
        "monodromy convergence",
    ];
    let mut failed = 0;
    for (k, (v, name)) in verdicts.iter().zip(names).enumerate() {
        let tag = if v.pass { "PASS" } else { "FAIL" };
        println!("criterion {:>2} [{tag}] {name}: {}", k + 1, v.detail);
        failed += usize::from(!v.pass);
    }
    println!("acceptance: {} of 10 passed in {:.1} s", 10 - failed, start.elapsed().as_secs_f64());
    if failed > 0 {
        std::process::exit(1);
    }
}
