//! Schlesinger isomonodromic flow: pole positions move along polylines while
//! the residues evolve so that the monodromy stays fixed.

use crate::error::{Error, Result};
use crate::fuchsian::{FuchsianSystem, SpherePoint};
use crate::linalg::Mat2;
use crate::ode::{integrate, OdeOptions};
use crate::scalar::{czero, Real, C};

/// Moving finite points with their polylines over `t in [0, 1]`. A
/// polyline with `k` segments spends `1/k` of the time on each segment.
#[derive(Clone, Debug, PartialEq)]
pub struct DeformationPath<T: Real> {
    pub moving: Vec<(usize, Vec<C<T>>)>,
    pub collision_clearance: T,
}

impl<T: Real> DeformationPath<T> {
    /// Uses the default collision clearance, 1e-2 times the initial minimum
    /// pairwise distance of the finite points.
    pub fn new(sys: &FuchsianSystem<T>, moving: Vec<(usize, Vec<C<T>>)>) -> Result<Self> {
        let clearance = T::lit(1e-2) * min_pairwise_distance(sys);
        Self::with_clearance(sys, moving, clearance)
    }

    pub fn with_clearance(sys: &FuchsianSystem<T>, moving: Vec<(usize, Vec<C<T>>)>, clearance: T) -> Result<Self> {
        for (k, (i, verts)) in moving.iter().enumerate() {
            let a = match sys.points().get(*i) {
                Some(SpherePoint::Finite(a)) => *a,
                Some(SpherePoint::Infinity) => return Err(Error::InvalidInput("infinity cannot move".into())),
                None => return Err(Error::InvalidInput(format!("no point with index {i}"))),
            };
            if moving[..k].iter().any(|(j, _)| j == i) {
                return Err(Error::InvalidInput(format!("point {i} listed twice")));
            }
            if verts.len() < 2 {
                return Err(Error::InvalidInput(format!("polyline for point {i} needs two vertices")));
            }
            let tol = sys.tol_alg() * (T::one() + a.norm());
            if (verts[0] - a).norm() > tol {
                return Err(Error::InvalidInput(format!("polyline for point {i} does not start at the point")));
            }
        }
        if !(clearance > T::zero()) {
            return Err(Error::InvalidInput("collision clearance must be positive".into()));
        }
        Ok(DeformationPath { moving, collision_clearance: clearance })
    }

    /// The same motion traversed backwards.
    pub fn reversed(&self) -> Self {
        DeformationPath {
            moving: self
                .moving
                .iter()
                .map(|(i, v)| {
                    let mut r = v.clone();
                    r.reverse();
                    (*i, r)
                })
                .collect(),
            collision_clearance: self.collision_clearance,
        }
    }

    /// Times where some polyline switches segment, including 0 and 1.
    pub fn breakpoints(&self) -> Vec<T> {
        let mut ts = vec![T::zero(), T::one()];
        for (_, v) in &self.moving {
            let k = v.len() - 1;
            for j in 1..k {
                ts.push(T::lit(j as f64) / T::lit(k as f64));
            }
        }
        ts.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
        ts.dedup_by(|a, b| (*a - *b).abs() < T::lit(1e-15));
        ts
    }

    /// Position and velocity of the `k`-th moving point on the segment that
    /// contains `(t0, t1)`.
    fn segment(&self, k: usize, t_mid: T) -> (C<T>, C<T>, T) {
        let v = &self.moving[k].1;
        let nseg = v.len() - 1;
        let j = ((t_mid * T::lit(nseg as f64)).floor().to_f64_lossy() as usize).min(nseg - 1);
        let dt = T::one() / T::lit(nseg as f64);
        let vel = (v[j + 1] - v[j]).scale(T::lit(nseg as f64));
        (v[j], vel, T::lit(j as f64) * dt)
    }

    pub fn position(&self, k: usize, t: T) -> C<T> {
        let (start, vel, t0) = self.segment(k, t.min(T::one() - T::lit(1e-15)));
        start + vel.scale(t - t0)
    }
}

pub fn min_pairwise_distance<T: Real>(sys: &FuchsianSystem<T>) -> T {
    let pts = sys.finite_points();
    let mut d = T::infinity();
    for (k, (_, a)) in pts.iter().enumerate() {
        for (_, b) in &pts[k + 1..] {
            d = d.min((*a - *b).norm());
        }
    }
    if d.is_finite() {
        d
    } else {
        T::one()
    }
}

fn check_collisions<T: Real>(points: &[(usize, C<T>)], clearance: T) -> Result<()> {
    for (k, (i, a)) in points.iter().enumerate() {
        for (j, b) in &points[k + 1..] {
            let distance = (*a - *b).norm();
            if distance < clearance {
                return Err(Error::PointCollision { i: *i, j: *j, distance: distance.to_f64_lossy() });
            }
        }
    }
    Ok(())
}

fn traceless_commutator<T: Real>(x: &Mat2<T>, y: &Mat2<T>) -> Mat2<T> {
    let mut c = x.commutator(y);
    let h = (c[(0, 0)] - c[(1, 1)]).scale(T::lit(0.5));
    c[(0, 0)] = h;
    c[(1, 1)] = -h;
    c
}

/// `dB_i/dt = Σ_{j≠i} [B_j, B_i] (ȧ_i - ȧ_j)/(a_i - a_j)` for every finite
/// point, aligned with `sys.points()`; the entry for infinity is zero.
pub fn schlesinger_rhs<T: Real>(
    sys: &FuchsianSystem<T>,
    velocities: &[(usize, C<T>)],
    collision_clearance: T,
) -> Result<Vec<Mat2<T>>> {
    let fin = sys.finite_points();
    check_collisions(&fin, collision_clearance)?;
    let mut vel = vec![czero::<T>(); sys.n()];
    for &(i, v) in velocities {
        match sys.points().get(i) {
            Some(SpherePoint::Finite(_)) => vel[i] = v,
            _ => return Err(Error::InvalidInput(format!("velocity for non-finite or missing point {i}"))),
        }
    }
    let ms: Vec<Mat2<T>> = sys.residues().iter().map(|r| r.m).collect();
    Ok(rhs_raw(&fin, &ms, &vel, sys.n()))
}

fn rhs_raw<T: Real>(fin: &[(usize, C<T>)], ms: &[Mat2<T>], vel: &[C<T>], n: usize) -> Vec<Mat2<T>> {
    let mut out = vec![Mat2::zero(); n];
    for &(i, ai) in fin {
        let mut acc = Mat2::zero();
        for &(j, aj) in fin {
            if j == i {
                continue;
            }
            let w = (vel[i] - vel[j]) / (ai - aj);
            if w != czero() {
                acc += traceless_commutator(&ms[j], &ms[i]).scale(w);
            }
        }
        out[i] = acc;
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlowTrajectory<T: Real> {
    pub samples: Vec<(T, FuchsianSystem<T>)>,
    pub tol_flow: T,
}

impl<T: Real> FlowTrajectory<T> {
    pub fn first(&self) -> &FuchsianSystem<T> {
        &self.samples[0].1
    }

    pub fn last(&self) -> &FuchsianSystem<T> {
        &self.samples[self.samples.len() - 1].1
    }
}

/// Integrates positions and residues jointly from `t = 0` to `t = 1`,
/// recording every accepted step and every segment endpoint.
pub fn flow<T: Real>(sys: &FuchsianSystem<T>, dpath: &DeformationPath<T>, tol_flow: T) -> Result<FlowTrajectory<T>> {
    let fin = sys.finite_points();
    let nf = fin.len();
    let nm = dpath.moving.len();
    let slot_of_point: Vec<Option<usize>> = (0..sys.n()).map(|i| fin.iter().position(|(j, _)| *j == i)).collect();
    let moving_slots: Vec<usize> = dpath
        .moving
        .iter()
        .map(|(i, _)| slot_of_point[*i].ok_or_else(|| Error::InvalidInput(format!("point {i} is not finite"))))
        .collect::<Result<_>>()?;
    check_collisions(&fin, dpath.collision_clearance)?;

    // state: moving positions, then 4 entries per finite residue
    let mut y: Vec<C<T>> = Vec::with_capacity(nm + 4 * nf);
    for (_, v) in &dpath.moving {
        y.push(v[0]);
    }
    for (i, _) in &fin {
        y.extend_from_slice(&sys.residue(*i).m.entries());
    }

    let snapshot = |y: &[C<T>]| -> FuchsianSystem<T> {
        let mut pts = sys.points().to_vec();
        for (k, (i, _)) in dpath.moving.iter().enumerate() {
            pts[*i] = SpherePoint::Finite(y[k]);
        }
        let mut ms: Vec<Mat2<T>> = sys.residues().iter().map(|r| r.m).collect();
        for (slot, (i, _)) in fin.iter().enumerate() {
            ms[*i] = Mat2::from_entries(&y[nm + 4 * slot..nm + 4 * slot + 4]);
        }
        sys.with_points(pts).with_residue_matrices(&ms)
    };

    let mut samples = vec![(T::zero(), sys.clone())];
    let opts = OdeOptions::with_tol(tol_flow);
    let ts = dpath.breakpoints();
    let mut pos = vec![czero::<T>(); nf];
    let mut vel_slot = vec![czero::<T>(); nf];
    let mut ms = vec![Mat2::zero(); nf];
    for w in ts.windows(2) {
        let (t0, t1) = (w[0], w[1]);
        let mid = T::lit(0.5) * (t0 + t1);
        let seg_vel: Vec<C<T>> = (0..nm).map(|k| dpath.segment(k, mid).1).collect();
        let mut rhs = |_t: T, y: &[C<T>], dy: &mut [C<T>]| -> Result<()> {
            for (slot, (_, a)) in fin.iter().enumerate() {
                pos[slot] = *a;
                vel_slot[slot] = czero();
                ms[slot] = Mat2::from_entries(&y[nm + 4 * slot..nm + 4 * slot + 4]);
            }
            for (k, &slot) in moving_slots.iter().enumerate() {
                pos[slot] = y[k];
                vel_slot[slot] = seg_vel[k];
                dy[k] = seg_vel[k];
            }
            let pts: Vec<(usize, C<T>)> = (0..nf).map(|s| (fin[s].0, pos[s])).collect();
            check_collisions(&pts, dpath.collision_clearance)?;
            let slots: Vec<(usize, C<T>)> = (0..nf).map(|s| (s, pos[s])).collect();
            let d = rhs_raw(&slots, &ms, &vel_slot, nf);
            for (slot, m) in d.iter().enumerate() {
                dy[nm + 4 * slot..nm + 4 * slot + 4].copy_from_slice(&m.entries());
            }
            Ok(())
        };
        integrate(&mut rhs, t0, t1, &mut y, &opts, |t, y| samples.push((t, snapshot(y))))?;
    }
    Ok(FlowTrajectory { samples, tol_flow })
}

/// Drifts of one sample relative to the first.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConservedRow<T: Real> {
    pub time: T,
    pub eigen_drift: T,
    pub trace_drift: T,
    pub residue_sum_drift: T,
}

fn spectrum_distance<T: Real>(a: [C<T>; 2], b: [C<T>; 2]) -> T {
    let d1 = (a[0] - b[0]).norm().max((a[1] - b[1]).norm());
    let d2 = (a[0] - b[1]).norm().max((a[1] - b[0]).norm());
    d1.min(d2)
}

pub fn conserved_report<T: Real>(traj: &FlowTrajectory<T>) -> Vec<ConservedRow<T>> {
    let first = traj.first();
    let spec0: Vec<[C<T>; 2]> = first.residues().iter().map(|r| r.m.eigenvalues()).collect();
    let tr0: Vec<C<T>> = first.residues().iter().map(|r| r.m.trace()).collect();
    let sum0: Mat2<T> = first.residues().iter().map(|r| r.m).sum();
    traj.samples
        .iter()
        .map(|(t, s)| {
            let mut eigen_drift = T::zero();
            let mut trace_drift = T::zero();
            for (i, r) in s.residues().iter().enumerate() {
                eigen_drift = eigen_drift.max(spectrum_distance(r.m.eigenvalues(), spec0[i]));
                trace_drift = trace_drift.max((r.m.trace() - tr0[i]).norm());
            }
            let sum: Mat2<T> = s.residues().iter().map(|r| r.m).sum();
            ConservedRow { time: *t, eigen_drift, trace_drift, residue_sum_drift: (sum - sum0).norm() }
        })
        .collect()
}


#[cfg(test)]
mod flow_tests {
    use super::*;
    use crate::random::{seeded_system, RandomSpec};
    use crate::scalar::cplx;
    use crate::transport::monodromy_rep;

    fn three_segment_path(sys: &FuchsianSystem<f64>, i: usize) -> DeformationPath<f64> {
        let a = sys.points()[i].finite().unwrap();
        let v = vec![a, a + cplx(0.17, 0.0), a + cplx(0.17, 0.17), a + cplx(0.0, 0.17)];
        DeformationPath::new(sys, vec![(i, v)]).unwrap()
    }

    #[test]
    fn flow_preserves_monodromy_and_spectra() {
        let sys = seeded_system::<f64>(11, &RandomSpec::new(4)).unwrap();
        let traj = flow(&sys, &three_segment_path(&sys, 0), 1e-9).unwrap();
        let base = cplx(0.13, -2.71);
        let m0 = monodromy_rep(traj.first(), base, 1e-10).unwrap();
        let m1 = monodromy_rep(traj.last(), base, 1e-10).unwrap();
        for (a, b) in m0.traces().iter().zip(m1.traces()) {
            assert!((a - b).norm() < 1e-6, "{a} vs {b}");
        }
        let report = conserved_report(&traj);
        assert!(report.iter().all(|r| r.eigen_drift < 1e-8 && r.trace_drift < 1e-8));
        // the residues did move
        assert!((traj.last().residue(1).m - sys.residue(1).m).norm() > 1e-3);
    }

    #[test]
    fn reversal_returns_to_start() {
        let sys = seeded_system::<f64>(12, &RandomSpec::new(5)).unwrap();
        let path = three_segment_path(&sys, 2);
        let fwd = flow(&sys, &path, 1e-10).unwrap();
        let back = flow(fwd.last(), &path.reversed(), 1e-10).unwrap();
        for (r0, r1) in sys.residues().iter().zip(back.last().residues()) {
            assert!((r0.m - r1.m).norm() < 1e-8);
        }
    }

    #[test]
    fn collision_mid_flow() {
        let sys = seeded_system::<f64>(12, &RandomSpec::new(4)).unwrap();
        let a = sys.points()[2].finite().unwrap();
        let b = sys.points()[1].finite().unwrap();
        let path = DeformationPath::new(&sys, vec![(2, vec![a, b])]).unwrap();
        assert!(matches!(flow(&sys, &path, 1e-9), Err(Error::PointCollision { .. })));
    }
}
