//! Shared random-input generators and invariant checks for the integration
//! test binaries. Each check panics with a diagnostic on violation so it can
//! back both the randomized property suites and the acceptance gate.
#![allow(dead_code)]

use cvals::detector::{CouplingSpec, DetectorResponse, EffectSet, OutcomeChannel};
use cvals::linalg::{self, CMat, Mat};
use cvals::prob::{Observable, ProbState, SampleSpace, TransitionKernel};
use cvals::quantum::{
    born_probability, DensityOperator, HermitianOperator, KrausSet, UnitaryRotor,
};
use cvals::solver::{conditioned_average, solve_contextual_values, ResponseMap};
use num_complex::Complex64;
use proptest::prelude::*;

pub fn sys_space(n: usize) -> SampleSpace {
    SampleSpace::new((0..n).map(|i| format!("x{i}"))).unwrap()
}

pub fn det_space(n: usize) -> SampleSpace {
    SampleSpace::new((0..n).map(|i| format!("y{i}"))).unwrap()
}

fn normalize(mut v: Vec<f64>) -> Vec<f64> {
    let total: f64 = v.iter().sum();
    for x in &mut v {
        *x /= total;
    }
    v
}

/// Strictly positive probability vector of length `n`.
pub fn prob_vec(n: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(0.05f64..1.0, n).prop_map(normalize)
}

/// Row-stochastic likelihood matrices with strictly positive entries.
pub fn stochastic_rows(
    nx: std::ops::RangeInclusive<usize>,
    ny: std::ops::RangeInclusive<usize>,
) -> impl Strategy<Value = Vec<Vec<f64>>> {
    (nx, ny).prop_flat_map(|(r, c)| proptest::collection::vec(prob_vec(c), r))
}

/// Arbitrary nonnegative matrices (not necessarily stochastic).
pub fn nonneg_rows(
    nr: std::ops::RangeInclusive<usize>,
    nc: std::ops::RangeInclusive<usize>,
) -> impl Strategy<Value = Vec<Vec<f64>>> {
    (nr, nc).prop_flat_map(|(r, c)| {
        proptest::collection::vec(proptest::collection::vec(0.0f64..1.0, c), r)
    })
}

/// Complex state vector of dimension `dim` with norm bounded away from 0.
pub fn complex_vec(dim: usize) -> impl Strategy<Value = Vec<Complex64>> {
    proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), dim)
        .prop_map(|parts| {
            parts
                .into_iter()
                .map(|(re, im)| Complex64::new(re, im))
                .collect::<Vec<_>>()
        })
        .prop_filter("state vector too close to zero", |v| {
            v.iter().map(|z| z.norm_sqr()).sum::<f64>() > 0.1
        })
}

/// A full invasive-detector instance: prior, joint kernel, preparation,
/// observable, contextual values, and a postselection effect.
#[derive(Debug, Clone)]
pub struct CouplingCase {
    pub nx: usize,
    pub ny: usize,
    pub prior: Vec<f64>,
    pub joint_rows: Vec<Vec<f64>>,
    pub state: Vec<f64>,
    pub obs: Vec<f64>,
    pub cvs: Vec<f64>,
    pub z_vals: Vec<f64>,
}

pub fn coupling_case() -> impl Strategy<Value = CouplingCase> {
    (2usize..=3, 2usize..=3).prop_flat_map(|(nx, ny)| {
        let joint = nx * ny;
        (
            Just(nx),
            Just(ny),
            prob_vec(ny),
            proptest::collection::vec(prob_vec(joint), joint),
            prob_vec(nx),
            proptest::collection::vec(-3.0f64..3.0, nx),
            proptest::collection::vec(-10.0f64..10.0, ny),
            proptest::collection::vec(0.05f64..1.0, nx),
        )
            .prop_map(
                |(nx, ny, prior, joint_rows, state, obs, cvs, z_vals)| CouplingCase {
                    nx,
                    ny,
                    prior,
                    joint_rows,
                    state,
                    obs,
                    cvs,
                    z_vals,
                },
            )
    })
}

pub fn build_channel(case: &CouplingCase) -> (SampleSpace, OutcomeChannel, ProbState) {
    let xs = sys_space(case.nx);
    let ys = det_space(case.ny);
    let prior = ProbState::new(&ys, case.prior.clone()).unwrap();
    let joint = xs.product(&ys);
    let kernel = TransitionKernel::new(&joint, &joint, case.joint_rows.clone()).unwrap();
    let spec = CouplingSpec::new(&xs, &prior, &kernel).unwrap();
    let channel = OutcomeChannel::from_coupling(&spec).unwrap();
    let state = ProbState::new(&xs, case.state.clone()).unwrap();
    (xs, channel, state)
}

/// Haar-ish random unitary: eigenvector matrix of a random Hermitian.
pub fn random_unitary(dim: usize, entries: &[(f64, f64)]) -> UnitaryRotor {
    assert_eq!(entries.len(), dim * dim);
    let mut a = CMat::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            let (re, im) = entries[i * dim + j];
            a[(i, j)] = Complex64::new(re, im);
        }
    }
    let h = a.add(&a.adjoint()).scale(Complex64::new(0.5, 0.0));
    let (_, v) = linalg::hermitian_eigen(&h).unwrap();
    UnitaryRotor::new(v).unwrap()
}

fn mat_scale(m: &Mat) -> f64 {
    let zero = Mat::zeros(m.nrows(), m.ncols());
    m.max_abs_diff(&zero).max(1.0)
}

// ---------------------------------------------------------------------------
// Invariant checks (each panics with a diagnostic on violation)
// ---------------------------------------------------------------------------

/// Classical POVM completeness: effects built from a stochastic response sum
/// to the unit observable atomwise and stay within [0, 1].
pub fn check_povm_completeness(rows: &[Vec<f64>]) {
    let nx = rows.len();
    let ny = rows[0].len();
    let resp = DetectorResponse::new(&sys_space(nx), &det_space(ny), rows.to_vec()).unwrap();
    let effects = EffectSet::from_response(&resp);
    for x in 0..nx {
        let mut total = 0.0;
        for y in 0..ny {
            let v = effects.effect(y).value(x);
            assert!(
                (-1e-12..=1.0 + 1e-12).contains(&v),
                "effect value {v} outside [0,1] at (x={x}, y={y})"
            );
            total += v;
        }
        assert!(
            (total - 1.0).abs() <= 1e-12,
            "effects sum to {total} at atom {x}"
        );
    }
}

/// The four Penrose identities of the in-house pseudoinverse, relative to
/// the magnitudes of the matrix and its pseudoinverse.
pub fn check_penrose(rows: &[Vec<f64>]) {
    let a = Mat::from_rows(rows).unwrap();
    let tol = linalg::default_rel_tol(a.nrows(), a.ncols());
    let p = linalg::pinv(&a, tol).unwrap();
    let scale = mat_scale(&a) * mat_scale(&p);
    let apa = a.matmul(&p).matmul(&a);
    assert!(
        apa.max_abs_diff(&a) <= 1e-10 * scale,
        "A P A deviates from A by {}",
        apa.max_abs_diff(&a)
    );
    let pap = p.matmul(&a).matmul(&p);
    assert!(
        pap.max_abs_diff(&p) <= 1e-10 * scale,
        "P A P deviates from P by {}",
        pap.max_abs_diff(&p)
    );
    let ap = a.matmul(&p);
    assert!(
        ap.max_abs_diff(&ap.transpose()) <= 1e-10 * scale,
        "A P is not symmetric"
    );
    let pa = p.matmul(&a);
    assert!(
        pa.max_abs_diff(&pa.transpose()) <= 1e-10 * scale,
        "P A is not symmetric"
    );
}

/// Least-norm optimality: the solver's contextual values are orthogonal to
/// the response map's null space, so any null-space perturbation grows the
/// squared norm by exactly its own squared norm.
pub fn check_least_norm(rows: &[Vec<f64>], target: &[f64], dir: &[f64]) {
    let map = ResponseMap::new_stochastic(rows.to_vec()).unwrap();
    let sol = solve_contextual_values(&map, target, None).unwrap();
    let a = Mat::from_rows(rows).unwrap();
    let p = linalg::pinv(&a, linalg::default_rel_tol(a.nrows(), a.ncols())).unwrap();
    // Null-space component of the random direction: (1 - P A) dir.
    let pad = p.matvec(&a.matvec(dir));
    let nvec: Vec<f64> = dir.iter().zip(&pad).map(|(d, q)| d - q).collect();
    let n_sq: f64 = nvec.iter().map(|n| n * n).sum();
    let dot: f64 = sol.values.iter().zip(&nvec).map(|(f, n)| f * n).sum();
    let perturbed: f64 = sol
        .values
        .iter()
        .zip(&nvec)
        .map(|(f, n)| (f + n) * (f + n))
        .sum();
    let scale = (sol.norm_sq + n_sq).max(1.0);
    assert!(
        dot.abs() <= 1e-9 * scale,
        "solution has null-space component: <f, n> = {dot}"
    );
    assert!(
        perturbed + 1e-9 * scale >= sol.norm_sq,
        "perturbed norm {perturbed} beats least norm {}",
        sol.norm_sq
    );
    assert!(
        (perturbed - sol.norm_sq - n_sq).abs() <= 1e-8 * scale,
        "Pythagorean identity violated: {perturbed} vs {} + {n_sq}",
        sol.norm_sq
    );
}

/// Heisenberg/Schrödinger adjointness of invasive outcome channels:
/// pulling an observable back through an outcome matrix matches pushing the
/// state forward through its transpose.
pub fn check_channel_adjointness(case: &CouplingCase) {
    let (xs, channel, state) = build_channel(case);
    let obs = Observable::new(&xs, case.obs.clone()).unwrap();
    let scale = case.obs.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    for y in 0..channel.outcomes() {
        let lhs = state
            .expectation(&channel.apply(y, &obs).unwrap())
            .unwrap();
        let pushed = channel.matrix(y).transpose().matvec(state.probs());
        let rhs: f64 = pushed.iter().zip(&case.obs).map(|(p, v)| p * v).sum();
        assert!(
            (lhs - rhs).abs() <= 1e-12 * scale,
            "outcome {y}: pullback {lhs} vs pushforward {rhs}"
        );
    }
}

/// Conditioned averages are convex combinations of the contextual values, so
/// they can never leave the closed interval the values span.
pub fn check_cv_range(case: &CouplingCase) {
    let (xs, channel, state) = build_channel(case);
    let z = Observable::new(&xs, case.z_vals.clone()).unwrap();
    let ca = conditioned_average(&state, &channel, &case.cvs, &z).unwrap();
    let lo = case.cvs.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = case.cvs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let slack = 1e-9 * (1.0 + hi.abs().max(lo.abs()));
    assert!(
        ca >= lo - slack && ca <= hi + slack,
        "conditioned average {ca} outside [{lo}, {hi}]"
    );
}

/// Born-rule symmetry for rank-1 projectors: the transition probability
/// between two pure states does not depend on direction.
pub fn check_born_symmetry(x: &[Complex64], z: &[Complex64]) {
    let rho_x = DensityOperator::pure_state(x).unwrap();
    let rho_z = DensityOperator::pure_state(z).unwrap();
    let proj_x = HermitianOperator::projector(x).unwrap();
    let proj_z = HermitianOperator::projector(z).unwrap();
    let forward = born_probability(&rho_x, &proj_z).unwrap();
    let backward = born_probability(&rho_z, &proj_x).unwrap();
    assert!(
        (forward - backward).abs() <= 1e-12,
        "transition probabilities differ: {forward} vs {backward}"
    );
}

/// Kraus sets built from unitary couplings are complete: their effects sum
/// to the identity.
pub fn check_kraus_completeness(
    sys_dim: usize,
    entries: &[(f64, f64)],
    det_prior: &[f64],
) {
    let det_dim = det_prior.len();
    let u = random_unitary(sys_dim * det_dim, entries);
    let prior = ProbState::new(&det_space(det_dim), det_prior.to_vec()).unwrap();
    let kraus = KrausSet::from_coupling(&u, &prior, sys_dim, None).unwrap();
    let mut total = CMat::zeros(sys_dim, sys_dim);
    for effect in kraus.effects().unwrap() {
        total = total.add(effect.matrix());
    }
    let defect = total.sub(&CMat::identity(sys_dim)).frobenius_norm();
    assert!(
        defect <= 1e-10 * (sys_dim as f64).sqrt(),
        "effects sum deviates from identity by {defect}"
    );
}
