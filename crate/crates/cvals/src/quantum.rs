//! Quantum layer: noncommuting observables over a complex Hilbert space.
//!
//! A quantum system is a classical sample space together with unitary
//! rotations `A -> U^H A U` that generate incompatible frameworks. States
//! are trace-densities `rho` with `P(x') = Tr(rho x')` (Born rule),
//! projective conditioning is the double-sided update `y rho y / Tr(rho y)`,
//! and general detectors act through Kraus operators
//! `M_{y,y'} = e^{i phi} sqrt(P'(y')) <y|U|y'>` coupling the system to a
//! prepared detector. Outcome `y` induces the operation
//! `E_y(F) = sum_{y'} M^H F M` on observables, with effect `E_y = E_y(1)`.
//! Postselected conditioning divides by the nonselective disturbance, and in
//! the weak-measurement limit the contextual-value-weighted conditioned
//! average of any such detector converges to the context-independent weak
//! value `Re <z|F|x> / <z|x>`.
//!
//! Complex arithmetic stays inside this module; every public result is real.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, CMat};
use crate::prob::ProbState;
use crate::solver::ResponseMap;

const HERM_TOL: f64 = 1e-12;
const UNITARY_TOL: f64 = 1e-10;
const DENSITY_HERM_TOL: f64 = 1e-10;
const PSD_TOL: f64 = 1e-10;
const TRACE_TOL: f64 = 1e-12;
const COMPLETENESS_TOL: f64 = 1e-10;
/// Postselection overlaps below this are flagged as divergent weak values.
const DIVERGENCE_TOL: f64 = 1e-14;

/// `Tr(AB)` without forming the product matrix.
fn trace_product(a: &CMat, b: &CMat) -> Complex64 {
    let n = a.nrows();
    let mut t = Complex64::ZERO;
    for i in 0..n {
        for j in 0..a.ncols() {
            t += a[(i, j)] * b[(j, i)];
        }
    }
    t
}

fn commutator_norm(a: &CMat, b: &CMat) -> f64 {
    a.matmul(b).sub(&b.matmul(a)).frobenius_norm()
}

/// Validates Hermiticity relative to the matrix scale and returns the
/// symmetrized part `(A + A^H)/2`.
fn symmetrized(m: &CMat, tol: f64, what: &str) -> Result<CMat> {
    if m.nrows() != m.ncols() {
        return Err(Error::dim(format!("{what} matrix must be square")));
    }
    let scale = m.frobenius_norm().max(1.0);
    let defect = m.hermiticity_defect();
    if defect > tol * scale {
        return Err(Error::invalid(format!(
            "{what} matrix is not Hermitian (defect {defect:.3e})"
        )));
    }
    let mut sym = m.clone();
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            sym[(i, j)] = 0.5 * (m[(i, j)] + m[(j, i)].conj());
        }
    }
    Ok(sym)
}

// ---------------------------------------------------------------------------
// Operator types
// ---------------------------------------------------------------------------

/// A real observable on the quantum space: a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct HermitianOperator {
    m: CMat,
}

impl HermitianOperator {
    /// Accepts matrices Hermitian within 1e-12 (relative) and stores the
    /// symmetrized part `(A + A^H)/2`; larger defects are rejected.
    pub fn new(m: CMat) -> Result<Self> {
        Ok(HermitianOperator {
            m: symmetrized(&m, HERM_TOL, "observable")?,
        })
    }

    pub fn identity(dim: usize) -> Self {
        HermitianOperator { m: CMat::identity(dim) }
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        let mut m = CMat::zeros(diag.len(), diag.len());
        for (i, d) in diag.iter().enumerate() {
            m[(i, i)] = Complex64::new(*d, 0.0);
        }
        HermitianOperator { m }
    }

    /// Atomic proposition: projector onto the k-th basis vector.
    pub fn basis_projector(dim: usize, k: usize) -> Self {
        let mut m = CMat::zeros(dim, dim);
        m[(k, k)] = Complex64::ONE;
        HermitianOperator { m }
    }

    /// Rank-1 projector onto the (normalized) state vector.
    pub fn projector(state: &[Complex64]) -> Result<Self> {
        let norm_sq: f64 = state.iter().map(|z| z.norm_sqr()).sum();
        if norm_sq <= 0.0 || !norm_sq.is_finite() {
            return Err(Error::invalid("projector needs a nonzero finite state vector"));
        }
        let n = state.len();
        let mut m = CMat::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = state[i] * state[j].conj() / norm_sq;
            }
        }
        Ok(HermitianOperator { m })
    }

    /// Qubit observable with eigenvalues `(a, b)` in the framework rotated
    /// by `(beta, gamma)` from the reference basis.
    pub fn qubit_observable(p: &QubitObservableParams) -> Self {
        let mean = 0.5 * (p.a + p.b);
        let half = 0.5 * (p.a - p.b);
        let mut m = CMat::zeros(2, 2);
        m[(0, 0)] = Complex64::new(mean + half * p.beta.cos(), 0.0);
        m[(1, 1)] = Complex64::new(mean - half * p.beta.cos(), 0.0);
        let off = half * p.beta.sin();
        m[(0, 1)] = Complex64::from_polar(1.0, -p.gamma) * off;
        m[(1, 0)] = m[(0, 1)].conj();
        HermitianOperator { m }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.m
    }

    /// Eigenvalues ascending with matching eigenvector columns.
    pub fn eigen(&self) -> Result<(Vec<f64>, CMat)> {
        hermitian_eigen(&self.m)
    }

    pub fn add(&self, other: &HermitianOperator) -> HermitianOperator {
        HermitianOperator { m: self.m.add(&other.m) }
    }

    pub fn sub(&self, other: &HermitianOperator) -> HermitianOperator {
        HermitianOperator { m: self.m.sub(&other.m) }
    }

    pub fn scale(&self, s: f64) -> HermitianOperator {
        HermitianOperator { m: self.m.scale(Complex64::new(s, 0.0)) }
    }
}

/// Eigenvalues and framework orientation of a general qubit observable.
#[derive(Debug, Clone, Copy)]
pub struct QubitObservableParams {
    pub a: f64,
    pub b: f64,
    pub beta: f64,
    pub gamma: f64,
}

/// Unitary rotation connecting incompatible frameworks; acts on observables
/// as `A -> U^H A U`.
#[derive(Debug, Clone)]
pub struct UnitaryRotor {
    m: CMat,
}

impl UnitaryRotor {
    pub fn new(m: CMat) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::dim("rotor matrix must be square"));
        }
        let defect = m.unitarity_defect();
        if defect > UNITARY_TOL {
            return Err(Error::invalid(format!(
                "matrix is not unitary (defect {defect:.3e})"
            )));
        }
        Ok(UnitaryRotor { m })
    }

    pub fn identity(dim: usize) -> Self {
        UnitaryRotor { m: CMat::identity(dim) }
    }

    /// Euler-angle qubit rotor
    /// `U = exp(i alpha sigma_z / 2) exp(i beta sigma_y / 2) exp(i gamma sigma_z / 2)`.
    pub fn qubit_rotor(alpha: f64, beta: f64, gamma: f64) -> Self {
        let c = (0.5 * beta).cos();
        let s = (0.5 * beta).sin();
        let mut m = CMat::zeros(2, 2);
        m[(0, 0)] = Complex64::from_polar(c, 0.5 * (alpha + gamma));
        m[(0, 1)] = Complex64::from_polar(s, 0.5 * (alpha - gamma));
        m[(1, 0)] = -Complex64::from_polar(s, -0.5 * (alpha - gamma));
        m[(1, 1)] = Complex64::from_polar(c, -0.5 * (alpha + gamma));
        UnitaryRotor { m }
    }

    /// Block-diagonal direct sum, e.g. a coupling that preserves each system
    /// atom while rotating the detector conditioned on it.
    pub fn direct_sum(blocks: &[&UnitaryRotor]) -> Self {
        let dim: usize = blocks.iter().map(|b| b.dim()).sum();
        let mut m = CMat::zeros(dim, dim);
        let mut off = 0;
        for b in blocks {
            for i in 0..b.dim() {
                for j in 0..b.dim() {
                    m[(off + i, off + j)] = b.m[(i, j)];
                }
            }
            off += b.dim();
        }
        UnitaryRotor { m }
    }

    /// Product rotor `self * other` (first `other`, then `self` as matrices).
    pub fn compose(&self, other: &UnitaryRotor) -> UnitaryRotor {
        UnitaryRotor { m: self.m.matmul(&other.m) }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.m
    }

    /// Heisenberg rotation `U^H A U`.
    pub fn rotate(&self, a: &HermitianOperator) -> HermitianOperator {
        HermitianOperator { m: self.m.adjoint().matmul(&a.m).matmul(&self.m) }
    }

    /// Inverse rotation `U A U^H`.
    pub fn rotate_adjoint(&self, a: &HermitianOperator) -> HermitianOperator {
        HermitianOperator { m: self.m.matmul(&a.m).matmul(&self.m.adjoint()) }
    }
}

/// Trace-density of a quantum state: Hermitian, positive semidefinite,
/// unit trace.
#[derive(Debug, Clone)]
pub struct DensityOperator {
    m: CMat,
}

impl DensityOperator {
    /// Hermiticity and positivity violations within 1e-10 are repaired
    /// (symmetrize, clamp); the trace must be 1 within 1e-12 and is
    /// renormalized exactly.
    pub fn new(m: CMat) -> Result<Self> {
        let sym = symmetrized(&m, DENSITY_HERM_TOL, "density")?;
        let (eigs, _) = hermitian_eigen(&sym)?;
        let min_eig = eigs.first().copied().unwrap_or(0.0);
        if min_eig < -PSD_TOL {
            return Err(Error::invalid(format!(
                "density matrix is not positive semidefinite (min eigenvalue {min_eig:.3e})"
            )));
        }
        let tr = sym.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::invalid(format!(
                "density matrix trace {} must be 1",
                tr.re
            )));
        }
        let m = sym.scale(Complex64::new(1.0 / tr.re, 0.0));
        Ok(DensityOperator { m })
    }

    /// Pure state `|psi><psi|` from an unnormalized state vector.
    pub fn pure_state(state: &[Complex64]) -> Result<Self> {
        let proj = HermitianOperator::projector(state)?;
        Ok(DensityOperator { m: proj.m })
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        DensityOperator {
            m: CMat::identity(dim).scale(Complex64::new(1.0 / dim as f64, 0.0)),
        }
    }

    /// Qubit state with classical mixing angle `theta`
    /// (`P(0) = cos^2(theta/2)`) in the framework rotated by `(beta, gamma)`.
    pub fn qubit(theta: f64, beta: f64, gamma: f64) -> Self {
        let ct = theta.cos();
        let mut m = CMat::zeros(2, 2);
        m[(0, 0)] = Complex64::new(0.5 * (1.0 + beta.cos() * ct), 0.0);
        m[(1, 1)] = Complex64::new(0.5 * (1.0 - beta.cos() * ct), 0.0);
        let off = 0.5 * beta.sin() * ct;
        m[(0, 1)] = Complex64::from_polar(1.0, -gamma) * off;
        m[(1, 0)] = m[(0, 1)].conj();
        DensityOperator { m }
    }

    /// Classical state embedded as a diagonal density in the reference
    /// framework.
    pub fn from_classical(state: &ProbState) -> Self {
        let probs = state.probs();
        let mut m = CMat::zeros(probs.len(), probs.len());
        for (i, p) in probs.iter().enumerate() {
            m[(i, i)] = Complex64::new(*p, 0.0);
        }
        DensityOperator { m }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.m
    }

    /// `Tr(rho^2)`, 1 exactly for pure states.
    pub fn purity(&self) -> f64 {
        trace_product(&self.m, &self.m).re
    }
}

// ---------------------------------------------------------------------------
// Expectations and conditioning
// ---------------------------------------------------------------------------

/// `<F> = Tr(rho F)` for a general observable (no range restriction).
pub fn expectation_value(rho: &DensityOperator, obs: &HermitianOperator) -> Result<f64> {
    if rho.dim() != obs.dim() {
        return Err(Error::dim(format!(
            "state dimension {} vs observable dimension {}",
            rho.dim(),
            obs.dim()
        )));
    }
    Ok(trace_product(&rho.m, &obs.m).re)
}

/// Born probability `Tr(rho E)` of an effect (PSD, eigenvalues at most 1);
/// roundoff outside [0,1] is clamped, anything worse is a numerical error.
pub fn born_probability(rho: &DensityOperator, effect: &HermitianOperator) -> Result<f64> {
    let raw = expectation_value(rho, effect)?;
    let p = trace_product(&rho.m, &effect.m);
    if p.im.abs() > 1e-9 {
        return Err(Error::numerical(format!(
            "effect expectation has imaginary part {:.3e}",
            p.im
        )));
    }
    if !(-1e-9..=1.0 + 1e-9).contains(&raw) {
        return Err(Error::numerical(format!(
            "effect expectation {raw} outside [0, 1]"
        )));
    }
    Ok(raw.clamp(0.0, 1.0))
}

/// Projective (double-sided) state update `y rho y / Tr(rho y)`.
pub fn luders_update(rho: &DensityOperator, proj: &HermitianOperator) -> Result<DensityOperator> {
    if rho.dim() != proj.dim() {
        return Err(Error::dim("projector dimension mismatch"));
    }
    let idem = proj.m.matmul(&proj.m).sub(&proj.m).frobenius_norm();
    if idem > 1e-10 * proj.m.frobenius_norm().max(1.0) {
        return Err(Error::invalid(format!(
            "conditioning operator is not a projector (defect {idem:.3e})"
        )));
    }
    let p = born_probability(rho, proj)?;
    if p <= 0.0 {
        return Err(Error::zero_prob(
            "projective conditioning on a zero-probability proposition",
        ));
    }
    let updated = proj
        .m
        .matmul(&rho.m)
        .matmul(&proj.m)
        .scale(Complex64::new(1.0 / p, 0.0));
    DensityOperator::new(updated)
}

// ---------------------------------------------------------------------------
// Kraus measurement operations
// ---------------------------------------------------------------------------

/// A generalized measurement: per detector outcome `y`, Kraus operators
/// `{M_{y,y'}}` indexed by the detector preparation atoms `y'`.
#[derive(Debug, Clone)]
pub struct KrausSet {
    dim: usize,
    ops: Vec<Vec<CMat>>,
}

impl KrausSet {
    /// Validates completeness `sum M^H M = 1` within 1e-10.
    pub fn new(ops: Vec<Vec<CMat>>) -> Result<Self> {
        if ops.is_empty() || ops.iter().all(|l| l.is_empty()) {
            return Err(Error::invalid("measurement needs at least one Kraus operator"));
        }
        let dim = ops
            .iter()
            .flatten()
            .next()
            .map(|m| m.nrows())
            .unwrap_or(0);
        for m in ops.iter().flatten() {
            if m.nrows() != dim || m.ncols() != dim {
                return Err(Error::dim("Kraus operators must be square and equal-sized"));
            }
        }
        let mut total = CMat::zeros(dim, dim);
        for m in ops.iter().flatten() {
            total = total.add(&m.adjoint().matmul(m));
        }
        let defect = total.sub(&CMat::identity(dim)).frobenius_norm();
        if defect > COMPLETENESS_TOL * (dim as f64).sqrt() {
            return Err(Error::invalid(format!(
                "Kraus completeness violated (defect {defect:.3e})"
            )));
        }
        Ok(KrausSet { dim, ops })
    }

    /// One Kraus operator per outcome (pure detector preparation).
    pub fn from_single_ops(ops: Vec<CMat>) -> Result<Self> {
        KrausSet::new(ops.into_iter().map(|m| vec![m]).collect())
    }

    /// Partial matrix elements of a system-detector coupling rotor:
    /// `M_{y,y'} = e^{i phi_{y,y'}} sqrt(P'(y')) <y|U|y'>` where the joint
    /// basis is ordered system-major (`index = x * det_dim + y`). The
    /// detector is prepared in the mixture `detector_prior` over its basis
    /// atoms and read out in that same basis; phases default to 0.
    pub fn from_coupling(
        u: &UnitaryRotor,
        detector_prior: &ProbState,
        sys_dim: usize,
        phases: Option<&[Vec<f64>]>,
    ) -> Result<Self> {
        let det_dim = detector_prior.probs().len();
        if sys_dim == 0 || det_dim == 0 || u.dim() != sys_dim * det_dim {
            return Err(Error::dim(format!(
                "coupling rotor dimension {} must equal system {} x detector {}",
                u.dim(),
                sys_dim,
                det_dim
            )));
        }
        if let Some(ph) = phases {
            if ph.len() != det_dim || ph.iter().any(|row| row.len() != det_dim) {
                return Err(Error::dim(
                    "phase table must be detector_dim x detector_dim (outcome x preparation)",
                ));
            }
        }
        let mut ops = Vec::with_capacity(det_dim);
        for y in 0..det_dim {
            let mut list = Vec::new();
            for (yp, &p) in detector_prior.probs().iter().enumerate() {
                if p <= 0.0 {
                    continue;
                }
                let phase = phases.map_or(Complex64::ONE, |ph| {
                    Complex64::from_polar(1.0, ph[y][yp])
                });
                let amp = phase * p.sqrt();
                let mut m = CMat::zeros(sys_dim, sys_dim);
                for i in 0..sys_dim {
                    for j in 0..sys_dim {
                        m[(i, j)] = amp * u.matrix()[(i * det_dim + y, j * det_dim + yp)];
                    }
                }
                list.push(m);
            }
            ops.push(list);
        }
        KrausSet::new(ops)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn outcomes(&self) -> usize {
        self.ops.len()
    }

    pub fn operators(&self, y: usize) -> &[CMat] {
        &self.ops[y]
    }

    /// Heisenberg-picture operation `E_y(F) = sum_{y'} M^H F M`.
    pub fn apply_to_observable(
        &self,
        y: usize,
        obs: &HermitianOperator,
    ) -> Result<HermitianOperator> {
        self.check_outcome_and_dim(y, obs.dim())?;
        let mut out = CMat::zeros(self.dim, self.dim);
        for m in &self.ops[y] {
            out = out.add(&m.adjoint().matmul(&obs.m).matmul(m));
        }
        HermitianOperator::new(out)
    }

    /// Schroedinger-picture adjoint `E_y^H(rho) = sum_{y'} M rho M^H`,
    /// unnormalized (its trace is the outcome probability).
    pub fn apply_to_density(&self, y: usize, rho: &DensityOperator) -> Result<CMat> {
        self.check_outcome_and_dim(y, rho.dim())?;
        let mut out = CMat::zeros(self.dim, self.dim);
        for m in &self.ops[y] {
            out = out.add(&m.matmul(&rho.m).matmul(&m.adjoint()));
        }
        Ok(out)
    }

    /// Effect (probability observable) `E_y = E_y(1)`.
    pub fn effect(&self, y: usize) -> Result<HermitianOperator> {
        self.apply_to_observable(y, &HermitianOperator::identity(self.dim))
    }

    pub fn effects(&self) -> Result<Vec<HermitianOperator>> {
        (0..self.outcomes()).map(|y| self.effect(y)).collect()
    }

    /// Nonselective measurement `E(F) = sum_y E_y(F)`: the full disturbance
    /// without conditioning.
    pub fn nonselective(&self, obs: &HermitianOperator) -> Result<HermitianOperator> {
        let mut out = CMat::zeros(self.dim, self.dim);
        for y in 0..self.outcomes() {
            out = out.add(&self.apply_to_observable(y, obs)?.m);
        }
        HermitianOperator::new(out)
    }

    /// Normalized state after observing outcome `y`.
    pub fn update_density(&self, rho: &DensityOperator, y: usize) -> Result<DensityOperator> {
        let raw = self.apply_to_density(y, rho)?;
        let p = raw.trace().re;
        if p <= 0.0 {
            return Err(Error::zero_prob(format!(
                "outcome {y} has zero probability in this state"
            )));
        }
        DensityOperator::new(raw.scale(Complex64::new(1.0 / p, 0.0)))
    }

    fn check_outcome_and_dim(&self, y: usize, dim: usize) -> Result<()> {
        if y >= self.outcomes() {
            return Err(Error::invalid(format!(
                "outcome {y} out of range for {} outcomes",
                self.outcomes()
            )));
        }
        if dim != self.dim {
            return Err(Error::dim(format!(
                "operand dimension {dim} vs measurement dimension {}",
                self.dim
            )));
        }
        Ok(())
    }
}

/// Generalized postselected conditioning: probability of earlier outcome `y`
/// given a later effect `z`,
/// `<E_y(E'_z)> / sum_{y''} <E_{y''}(E'_z)>`. The denominator is the
/// nonselective disturbance, so ordering matters.
pub fn postselected_probability(
    rho: &DensityOperator,
    kraus: &KrausSet,
    y: usize,
    z_effect: &HermitianOperator,
) -> Result<f64> {
    let numer = expectation_value(rho, &kraus.apply_to_observable(y, z_effect)?)?;
    let denom = expectation_value(rho, &kraus.nonselective(z_effect)?)?;
    if denom <= 0.0 {
        return Err(Error::zero_prob(
            "postselection effect has zero probability after the measurement",
        ));
    }
    Ok((numer / denom).max(0.0))
}

/// Contextual-value-weighted postselected average
/// `sum_y f_Y(y) <E_y(E'_z)> / <E(E'_z)>`; always within the
/// contextual-value range.
pub fn conditioned_average_q(
    rho: &DensityOperator,
    kraus: &KrausSet,
    cvs: &[f64],
    z_effect: &HermitianOperator,
) -> Result<f64> {
    if cvs.len() != kraus.outcomes() {
        return Err(Error::dim(format!(
            "{} contextual values for {} outcomes",
            cvs.len(),
            kraus.outcomes()
        )));
    }
    let denom = expectation_value(rho, &kraus.nonselective(z_effect)?)?;
    if denom <= 0.0 {
        return Err(Error::zero_prob(
            "postselection effect has zero probability after the measurement",
        ));
    }
    let mut total = 0.0;
    for (y, f) in cvs.iter().enumerate() {
        let numer = expectation_value(rho, &kraus.apply_to_observable(y, z_effect)?)?;
        total += f * (numer / denom).max(0.0);
    }
    Ok(total)
}

/// Sequence-enumerated n-th moment
/// `sum_{y1..yn} f(y1)..f(yn) <E_{y1}(E_{y2}(..E_{yn}(1)..))>`: the
/// physically measurable repeated-measurement statistic. It equals
/// `Tr(rho F^n)` exactly when all measurement operators commute (a fully
/// compatible detector) and generally differs otherwise.
pub fn sequence_moment_q(
    rho: &DensityOperator,
    kraus: &KrausSet,
    cvs: &[f64],
    n: u32,
) -> Result<f64> {
    if cvs.len() != kraus.outcomes() {
        return Err(Error::dim(format!(
            "{} contextual values for {} outcomes",
            cvs.len(),
            kraus.outcomes()
        )));
    }
    if n == 0 {
        return Ok(1.0);
    }
    let n_y = kraus.outcomes();
    let mut total = 0.0;
    let mut tuple = vec![0usize; n as usize];
    loop {
        let mut weight = 1.0;
        let mut obs = HermitianOperator::identity(kraus.dim());
        // Innermost operation is the last measurement of the sequence.
        for &y in tuple.iter().rev() {
            weight *= cvs[y];
            obs = kraus.apply_to_observable(y, &obs)?;
        }
        total += weight * expectation_value(rho, &obs)?;

        let mut pos = 0;
        loop {
            if pos == tuple.len() {
                return Ok(total);
            }
            tuple[pos] += 1;
            if tuple[pos] < n_y {
                break;
            }
            tuple[pos] = 0;
            pos += 1;
        }
    }
}

/// Weak value: the symmetrized quotient
/// `<E'_z F + F E'_z> / 2 <E'_z>`.
#[derive(Debug, Clone, Copy)]
pub struct WeakValue {
    pub value: f64,
    /// True when the postselection overlap is small enough (below 1e-14)
    /// that the quotient has effectively diverged.
    pub divergent: bool,
}

pub fn weak_value(
    rho: &DensityOperator,
    obs: &HermitianOperator,
    z_effect: &HermitianOperator,
) -> Result<WeakValue> {
    if rho.dim() != obs.dim() || rho.dim() != z_effect.dim() {
        return Err(Error::dim("weak value operands must share one dimension"));
    }
    let denom = expectation_value(rho, z_effect)?;
    if denom <= 0.0 {
        return Err(Error::zero_prob("postselection effect has zero probability"));
    }
    let sym = z_effect
        .m
        .matmul(&obs.m)
        .add(&obs.m.matmul(&z_effect.m))
        .scale(Complex64::new(0.5, 0.0));
    let numer = trace_product(&rho.m, &sym).re;
    Ok(WeakValue {
        value: numer / denom,
        divergent: denom < DIVERGENCE_TOL,
    })
}

/// Ideal strong-measurement conditioned average: dephase in the observable
/// eigenbasis, then condition.
/// `sum_x f(x) <x|rho|x> <x|E_z|x> / sum_x <x|rho|x> <x|E_z|x>`; always in
/// the eigenvalue range.
pub fn strong_conditioned_average(
    rho: &DensityOperator,
    obs: &HermitianOperator,
    z_effect: &HermitianOperator,
) -> Result<f64> {
    if rho.dim() != obs.dim() || rho.dim() != z_effect.dim() {
        return Err(Error::dim("conditioned average operands must share one dimension"));
    }
    let (vals, vecs) = obs.eigen()?;
    let mut numer = 0.0;
    let mut denom = 0.0;
    for (k, f) in vals.iter().enumerate() {
        let col: Vec<Complex64> = (0..obs.dim()).map(|i| vecs[(i, k)]).collect();
        let p = quadratic_form(&rho.m, &col).max(0.0);
        let w = quadratic_form(&z_effect.m, &col).max(0.0);
        numer += f * p * w;
        denom += p * w;
    }
    if denom <= 0.0 {
        return Err(Error::zero_prob(
            "strong postselection has zero probability",
        ));
    }
    Ok(numer / denom)
}

/// `<v|A|v>` for Hermitian `A` (real).
fn quadratic_form(a: &CMat, v: &[Complex64]) -> f64 {
    let av = a.matvec(v);
    v.iter()
        .zip(&av)
        .map(|(vi, avi)| (vi.conj() * avi).re)
        .sum()
}

/// Classical response map of a set of quantum effects relative to an
/// observable's eigenbasis: `S[x, y] = <v_x|E_y|v_x>`, target row `x` is the
/// eigenvalue `f_x` (ascending eigen order). When the effects commute with
/// the observable this captures the full operator constraint
/// `sum_y f(y) E_y = F`; otherwise the off-diagonal defect is reported by
/// [`reconstruction_defect`].
pub fn observable_response(
    effects: &[HermitianOperator],
    obs: &HermitianOperator,
) -> Result<(ResponseMap, Vec<f64>, CMat)> {
    if effects.is_empty() {
        return Err(Error::invalid("need at least one effect"));
    }
    let dim = obs.dim();
    if effects.iter().any(|e| e.dim() != dim) {
        return Err(Error::dim("effect dimension mismatch with observable"));
    }
    let (vals, vecs) = obs.eigen()?;
    let mut rows = Vec::with_capacity(dim);
    for x in 0..dim {
        let col: Vec<Complex64> = (0..dim).map(|i| vecs[(i, x)]).collect();
        rows.push(
            effects
                .iter()
                .map(|e| quadratic_form(&e.m, &col))
                .collect::<Vec<f64>>(),
        );
    }
    Ok((ResponseMap::new_stochastic(rows)?, vals, vecs))
}

/// Frobenius norm of `sum_y f(y) E_y - F`: zero exactly when the contextual
/// values reproduce the observable as an operator identity.
pub fn reconstruction_defect(
    effects: &[HermitianOperator],
    cvs: &[f64],
    obs: &HermitianOperator,
) -> Result<f64> {
    if effects.len() != cvs.len() {
        return Err(Error::dim("one contextual value per effect required"));
    }
    let mut sum = CMat::zeros(obs.dim(), obs.dim());
    for (e, f) in effects.iter().zip(cvs) {
        if e.dim() != obs.dim() {
            return Err(Error::dim("effect dimension mismatch with observable"));
        }
        sum = sum.add(&e.m.scale(Complex64::new(*f, 0.0)));
    }
    Ok(sum.sub(&obs.m).frobenius_norm())
}

// ---------------------------------------------------------------------------
// Weak-limit convergence sweep
// ---------------------------------------------------------------------------

/// One measurement strength in a [`weak_limit_sweep`].
#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub eps: f64,
    /// Conditioned average at this strength, absent if the contextual
    /// values could not be solved.
    pub conditioned_average: Option<f64>,
    /// `|CA(eps) - weak value|`.
    pub deviation: Option<f64>,
    /// Whether the contextual values reproduce the observable as an
    /// operator identity at this strength.
    pub cv_exact: bool,
    pub note: Option<String>,
}

/// Convergence diagnostics of a measurement-strength family toward the weak
/// value.
#[derive(Debug, Clone)]
pub struct SweepReport {
    pub weak_value: f64,
    pub weak_value_divergent: bool,
    pub points: Vec<SweepPoint>,
    /// Log-log slope of deviation versus strength, when at least two usable
    /// points exist.
    pub fitted_order: Option<f64>,
    /// Kraus operators approach multiples of the identity at the smallest
    /// strength (weak-measurement requirement).
    pub kraus_identity_limit: bool,
    /// Polar unitary parts of the Kraus operators commute with the state or
    /// with the postselection effect at the smallest strength (sufficiency
    /// condition for context independence of the limit).
    pub polar_parts_compatible: bool,
    pub all_points_exact: bool,
}

/// Sweep a family of measurements of decreasing strength, comparing the
/// contextual-value conditioned average against the weak value at each
/// strength and fitting the convergence order.
pub fn weak_limit_sweep<F>(
    family: F,
    rho: &DensityOperator,
    z_effect: &HermitianOperator,
    obs: &HermitianOperator,
    eps_grid: &[f64],
) -> Result<SweepReport>
where
    F: Fn(f64) -> Result<KrausSet>,
{
    if eps_grid.is_empty() {
        return Err(Error::invalid("strength grid must be nonempty"));
    }
    if eps_grid.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
        return Err(Error::invalid("strengths must be positive and finite"));
    }
    if eps_grid.windows(2).any(|w| w[0] <= w[1]) {
        return Err(Error::invalid("strength grid must be strictly descending"));
    }

    let wv = weak_value(rho, obs, z_effect)?;
    let mut points = Vec::with_capacity(eps_grid.len());
    let mut smallest_ok: Option<KrausSet> = None;

    for &eps in eps_grid {
        let point = match sweep_point(&family, rho, z_effect, obs, eps, wv.value) {
            Ok((point, kraus)) => {
                smallest_ok = Some(kraus);
                point
            }
            Err(err) => SweepPoint {
                eps,
                conditioned_average: None,
                deviation: None,
                cv_exact: false,
                note: Some(err.to_string()),
            },
        };
        points.push(point);
    }

    let usable: Vec<(f64, f64)> = points
        .iter()
        .filter_map(|p| p.deviation.map(|d| (p.eps, d)))
        .filter(|(_, d)| *d > 1e-12)
        .collect();
    let fitted_order = fit_log_slope(&usable);

    let (kraus_identity_limit, polar_parts_compatible) = match &smallest_ok {
        Some(kraus) => {
            let eps_min = points
                .iter()
                .rev()
                .find(|p| p.conditioned_average.is_some())
                .map(|p| p.eps)
                .unwrap_or(eps_grid[eps_grid.len() - 1]);
            (
                kraus_near_identity(kraus, eps_min),
                polar_compatibility(kraus, rho, z_effect)?,
            )
        }
        None => (false, false),
    };

    let all_points_exact = !points.is_empty() && points.iter().all(|p| p.cv_exact);

    Ok(SweepReport {
        weak_value: wv.value,
        weak_value_divergent: wv.divergent,
        points,
        fitted_order,
        kraus_identity_limit,
        polar_parts_compatible,
        all_points_exact,
    })
}

fn sweep_point<F>(
    family: &F,
    rho: &DensityOperator,
    z_effect: &HermitianOperator,
    obs: &HermitianOperator,
    eps: f64,
    wv: f64,
) -> Result<(SweepPoint, KrausSet)>
where
    F: Fn(f64) -> Result<KrausSet>,
{
    let kraus = family(eps)?;
    let effects = kraus.effects()?;
    let (map, target, _) = observable_response(&effects, obs)?;
    let solution = crate::solver::solve_contextual_values(&map, &target, None)?;
    let defect = reconstruction_defect(&effects, &solution.values, obs)?;
    let scale = 1.0 + obs.m.frobenius_norm();
    let cv_exact = solution.exact && defect <= 1e-8 * scale;
    let ca = conditioned_average_q(rho, &kraus, &solution.values, z_effect)?;
    Ok((
        SweepPoint {
            eps,
            conditioned_average: Some(ca),
            deviation: Some((ca - wv).abs()),
            cv_exact,
            note: None,
        },
        kraus,
    ))
}

fn fit_log_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|(e, d)| (e.ln(), d.ln())).collect();
    let n = logs.len() as f64;
    let mean_x = logs.iter().map(|(x, _)| x).sum::<f64>() / n;
    let mean_y = logs.iter().map(|(_, y)| y).sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (x, y) in &logs {
        sxy += (x - mean_x) * (y - mean_y);
        sxx += (x - mean_x) * (x - mean_x);
    }
    if sxx == 0.0 {
        return None;
    }
    Some(sxy / sxx)
}

/// Relative distance of every Kraus operator from a multiple of the
/// identity, compared against the strength scale.
fn kraus_near_identity(kraus: &KrausSet, eps: f64) -> bool {
    let d = kraus.dim();
    let tol = (10.0 * eps).max(1e-6);
    for y in 0..kraus.outcomes() {
        for m in kraus.operators(y) {
            let norm = m.frobenius_norm();
            if norm == 0.0 {
                continue;
            }
            let mean = m.trace() / Complex64::new(d as f64, 0.0);
            let dev = m.sub(&CMat::identity(d).scale(mean)).frobenius_norm();
            if dev / norm > tol {
                return false;
            }
        }
    }
    true
}

/// Checks whether the polar unitary parts `U_M = M (M^H M)^{-1/2}` of all
/// Kraus operators commute with the state, or all commute with the
/// postselection effect.
fn polar_compatibility(
    kraus: &KrausSet,
    rho: &DensityOperator,
    z_effect: &HermitianOperator,
) -> Result<bool> {
    let mut all_rho = true;
    let mut all_z = true;
    for y in 0..kraus.outcomes() {
        for m in kraus.operators(y) {
            let u = polar_unitary(m)?;
            let scale = u.frobenius_norm().max(1.0);
            if commutator_norm(&u, &rho.m) > 1e-8 * scale {
                all_rho = false;
            }
            if commutator_norm(&u, &z_effect.m) > 1e-8 * scale {
                all_z = false;
            }
            if !all_rho && !all_z {
                return Ok(false);
            }
        }
    }
    Ok(all_rho || all_z)
}

/// `M (M^H M)^{-1/2}`, treating singular directions as absent (partial
/// isometry completed by the identity on the null space).
fn polar_unitary(m: &CMat) -> Result<CMat> {
    let h = m.adjoint().matmul(m);
    let (vals, vecs) = hermitian_eigen(&h)?;
    let n = m.nrows();
    let max = vals.last().copied().unwrap_or(0.0);
    if max <= 0.0 {
        return Ok(CMat::identity(n));
    }
    let cutoff = 1e-14 * max;
    let mut inv_sqrt = CMat::zeros(n, n);
    for (k, lam) in vals.iter().enumerate() {
        if *lam <= cutoff {
            continue;
        }
        let w = 1.0 / lam.sqrt();
        for i in 0..n {
            for j in 0..n {
                inv_sqrt[(i, j)] += vecs[(i, k)] * vecs[(j, k)].conj() * w;
            }
        }
    }
    Ok(m.matmul(&inv_sqrt))
}
