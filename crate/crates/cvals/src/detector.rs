//! Generalized detectors coupled to a system: response likelihoods, the
//! probability observables (POVM effects) they induce, and the per-outcome
//! channels of invasive measurements.
//!
//! A detector characterized by likelihoods `P(y|x)` induces one effect per
//! outcome, `E_y = sum_x P(y|x) x`, with `sum_y E_y = 1_X`. Observing `y`
//! updates a state by Jeffrey conditioning `P'(x) = P(x) E_y(x) / <E_y>`.
//! When the measurement coupling also disturbs the system, each outcome acts
//! as an operation `E_y(F)(x') = sum_x A_y[x',x] f(x)` compiled from the
//! detector prior and the joint transition kernel; the effective effect is
//! `E~_y = E_y(1_X)` and conditioning can happen before (preselection) or
//! after (postselection) the disturbance, related by a modified Bayes rule.

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::prob::{Observable, ProbState, Proposition, SampleSpace, TransitionKernel};

const NORM_TOL: f64 = 1e-12;
const EFFECT_RANGE_TOL: f64 = 1e-9;

fn check_effect_range(obs: &Observable, what: &str) -> Result<()> {
    for &v in obs.values() {
        if !(-EFFECT_RANGE_TOL..=1.0 + EFFECT_RANGE_TOL).contains(&v) {
            return Err(Error::invalid(format!(
                "{what} value {v} outside the probability range [0,1]"
            )));
        }
    }
    Ok(())
}

/// Conditional likelihoods `P(y|x)`: rows indexed by system atom `x`,
/// columns by detector outcome `y`; every row is a distribution over `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorResponse {
    system: SampleSpace,
    detector: SampleSpace,
    likelihood: Vec<Vec<f64>>,
}

impl DetectorResponse {
    pub fn new(
        system: &SampleSpace,
        detector: &SampleSpace,
        likelihood: Vec<Vec<f64>>,
    ) -> Result<Self> {
        // A response is exactly a stochastic kernel from X to Y; reuse its
        // validation (nonnegativity, row sums within 1e-12, renormalization).
        let kernel = TransitionKernel::new(system, detector, likelihood)?;
        let likelihood = (0..system.len()).map(|x| kernel.row(x).to_vec()).collect();
        Ok(DetectorResponse {
            system: system.clone(),
            detector: detector.clone(),
            likelihood,
        })
    }

    /// Perfectly correlated response on matching spaces: `P(y|x) = [y = x]`.
    pub fn ideal(space: &SampleSpace) -> Self {
        let n = space.len();
        let likelihood = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        DetectorResponse { system: space.clone(), detector: space.clone(), likelihood }
    }

    /// Interpolated family `P_eps(y|x) = (1-eps) P_Y(y) + eps P(y|x)`: at
    /// `eps = 1` the sharp response, at `eps -> 0` an uncorrelated detector
    /// that reports its prior, with all effects converging linearly to
    /// `P_Y(y) 1_X`.
    pub fn weak_family(prior: &ProbState, sharp: &DetectorResponse, eps: f64) -> Result<Self> {
        if prior.space() != &sharp.detector {
            return Err(Error::dim("detector prior lives on a different outcome space"));
        }
        if !(0.0..=1.0).contains(&eps) {
            return Err(Error::invalid(format!(
                "weak-family strength eps={eps} outside [0,1]"
            )));
        }
        let likelihood = sharp
            .likelihood
            .iter()
            .map(|row| {
                row.iter()
                    .zip(prior.probs())
                    .map(|(p, q)| (1.0 - eps) * q + eps * p)
                    .collect()
            })
            .collect();
        DetectorResponse::new(&sharp.system, &sharp.detector, likelihood)
    }

    pub fn system(&self) -> &SampleSpace {
        &self.system
    }

    pub fn detector(&self) -> &SampleSpace {
        &self.detector
    }

    pub fn likelihood(&self, x: usize, y: usize) -> f64 {
        self.likelihood[x][y]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.likelihood
    }
}

/// One effect (probability observable) per detector outcome, with
/// `sum_y E_y = 1_X`.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectSet {
    system: SampleSpace,
    detector: SampleSpace,
    effects: Vec<Observable>,
}

impl EffectSet {
    /// `E_y(x) = P(y|x)`; completeness follows from row-stochasticity.
    pub fn from_response(resp: &DetectorResponse) -> Self {
        let effects = (0..resp.detector.len())
            .map(|y| {
                let values = (0..resp.system.len()).map(|x| resp.likelihood[x][y]).collect();
                Observable::new(&resp.system, values).expect("response validated")
            })
            .collect();
        EffectSet {
            system: resp.system.clone(),
            detector: resp.detector.clone(),
            effects,
        }
    }

    pub fn new(
        system: &SampleSpace,
        detector: &SampleSpace,
        effects: Vec<Observable>,
    ) -> Result<Self> {
        if effects.len() != detector.len() {
            return Err(Error::dim(format!(
                "{} effects for {} detector outcomes",
                effects.len(),
                detector.len()
            )));
        }
        for e in &effects {
            if e.space() != system {
                return Err(Error::dim("effect defined on a different system space"));
            }
            check_effect_range(e, "effect")?;
        }
        for x in 0..system.len() {
            let total: f64 = effects.iter().map(|e| e.value(x)).sum();
            if (total - 1.0).abs() > NORM_TOL {
                return Err(Error::invalid(format!(
                    "effects sum to {total} at atom '{}', expected 1",
                    system.atom(x)
                )));
            }
        }
        Ok(EffectSet {
            system: system.clone(),
            detector: detector.clone(),
            effects,
        })
    }

    pub fn system(&self) -> &SampleSpace {
        &self.system
    }

    pub fn detector(&self) -> &SampleSpace {
        &self.detector
    }

    pub fn len(&self) -> usize {
        self.effects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.effects.is_empty()
    }

    pub fn effect(&self, y: usize) -> &Observable {
        &self.effects[y]
    }

    pub fn effects(&self) -> &[Observable] {
        &self.effects
    }

    /// Outcome distribution `P(y) = <E_y>` under a state.
    pub fn outcome_probs(&self, state: &ProbState) -> Result<Vec<f64>> {
        self.effects.iter().map(|e| state.expectation(e)).collect()
    }
}

/// Jeffrey conditioning on a detection: `P'(x) = P(x) E(x) / <E>`.
pub fn generalized_condition(state: &ProbState, effect: &Observable) -> Result<ProbState> {
    check_effect_range(effect, "effect")?;
    let norm = state.expectation(effect)?;
    if norm <= 0.0 {
        return Err(Error::zero_prob("effect has zero detection probability"));
    }
    let probs = state
        .probs()
        .iter()
        .zip(effect.values())
        .map(|(p, e)| p * e / norm)
        .collect();
    ProbState::new(state.space(), probs)
}

/// Joint probability of an ordered sequence of noninvasive detections:
/// `P(y1..yn) = <E_y1 * ... * E_yn>` (atomwise product). Empty sequence
/// has probability 1.
pub fn sequence_prob(state: &ProbState, effects: &[&Observable]) -> Result<f64> {
    let mut product = Observable::constant(state.space(), 1.0);
    for e in effects {
        product = product.mul(e)?;
    }
    state.expectation(&product)
}

/// Measurement coupling for an invasive detector: the detector prior `P_Y`
/// and the joint transition kernel on the product space, whose source and
/// target atoms are ordered x-major/y-minor (pair `(i,j)` at flat index
/// `i * |Y| + j`).
#[derive(Debug, Clone)]
pub struct CouplingSpec {
    system: SampleSpace,
    detector_prior: ProbState,
    joint_kernel: TransitionKernel,
}

impl CouplingSpec {
    pub fn new(
        system: &SampleSpace,
        detector_prior: &ProbState,
        joint_kernel: &TransitionKernel,
    ) -> Result<Self> {
        let joint = system.product(detector_prior.space());
        if joint_kernel.source() != &joint || joint_kernel.target() != &joint {
            return Err(Error::dim(
                "joint kernel must map the system-detector product space to itself",
            ));
        }
        Ok(CouplingSpec {
            system: system.clone(),
            detector_prior: detector_prior.clone(),
            joint_kernel: joint_kernel.clone(),
        })
    }

    pub fn system(&self) -> &SampleSpace {
        &self.system
    }

    pub fn detector_prior(&self) -> &ProbState {
        &self.detector_prior
    }

    pub fn joint_kernel(&self) -> &TransitionKernel {
        &self.joint_kernel
    }
}

/// Per-outcome measurement operations `E_y(F)(x') = sum_x A_y[x',x] f(x)`.
///
/// The matrices act on observables (backward picture); `A_y[x',x]` is the
/// probability, starting from system atom `x'`, that the detector reports
/// `y` and the system lands on `x`. Completeness requires
/// `sum_y sum_x A_y[x',x] = 1` for every `x'`.
#[derive(Debug, Clone)]
pub struct OutcomeChannel {
    system: SampleSpace,
    detector: SampleSpace,
    mats: Vec<Mat>,
}

impl OutcomeChannel {
    pub fn new(system: &SampleSpace, detector: &SampleSpace, mats: Vec<Mat>) -> Result<Self> {
        if mats.len() != detector.len() {
            return Err(Error::dim(format!(
                "{} outcome matrices for {} detector outcomes",
                mats.len(),
                detector.len()
            )));
        }
        let n = system.len();
        let mut clean: Vec<Mat> = Vec::with_capacity(mats.len());
        for m in &mats {
            if m.nrows() != n || m.ncols() != n {
                return Err(Error::dim("outcome matrix shape must match the system space"));
            }
            let mut c = m.clone();
            for i in 0..n {
                for j in 0..n {
                    let v = c[(i, j)];
                    if v < -NORM_TOL {
                        return Err(Error::invalid(format!(
                            "outcome matrix has negative entry {v}"
                        )));
                    }
                    c[(i, j)] = v.max(0.0);
                }
            }
            clean.push(c);
        }
        // Total preservation of 1_X: rows across all outcomes sum to 1.
        for xp in 0..n {
            let total: f64 = clean
                .iter()
                .map(|m| (0..n).map(|x| m[(xp, x)]).sum::<f64>())
                .sum();
            if (total - 1.0).abs() > NORM_TOL {
                return Err(Error::invalid(format!(
                    "channel rows at atom '{}' sum to {total}, expected 1",
                    system.atom(xp)
                )));
            }
            for m in clean.iter_mut() {
                for x in 0..n {
                    m[(xp, x)] /= total;
                }
            }
        }
        Ok(OutcomeChannel {
            system: system.clone(),
            detector: detector.clone(),
            mats: clean,
        })
    }

    /// Compile the per-outcome matrices from a coupling:
    /// `A_y[x',x] = sum_y' P_Y(y') D_(x',y')(x,y)`.
    pub fn from_coupling(spec: &CouplingSpec) -> Result<Self> {
        let nx = spec.system.len();
        let ny = spec.detector_prior.space().len();
        let mut mats = vec![Mat::zeros(nx, nx); ny];
        for xp in 0..nx {
            for yp in 0..ny {
                let weight = spec.detector_prior.prob(yp);
                let row = spec.joint_kernel.row(xp * ny + yp);
                for x in 0..nx {
                    for (y, mat) in mats.iter_mut().enumerate() {
                        mat[(xp, x)] += weight * row[x * ny + y];
                    }
                }
            }
        }
        OutcomeChannel::new(&spec.system, spec.detector_prior.space(), mats)
    }

    /// Channel of a noninvasive detector: each `A_y` is diagonal with the
    /// effect values, so the operation is atomwise multiplication by `E_y`.
    pub fn noninvasive(effects: &EffectSet) -> Self {
        let n = effects.system().len();
        let mats = effects
            .effects()
            .iter()
            .map(|e| {
                let mut m = Mat::zeros(n, n);
                for x in 0..n {
                    m[(x, x)] = e.value(x);
                }
                m
            })
            .collect();
        OutcomeChannel {
            system: effects.system().clone(),
            detector: effects.detector().clone(),
            mats,
        }
    }

    pub fn system(&self) -> &SampleSpace {
        &self.system
    }

    pub fn detector(&self) -> &SampleSpace {
        &self.detector
    }

    pub fn outcomes(&self) -> usize {
        self.mats.len()
    }

    pub fn matrix(&self, y: usize) -> &Mat {
        &self.mats[y]
    }

    fn check_outcome(&self, y: usize) -> Result<()> {
        if y >= self.mats.len() {
            return Err(Error::invalid(format!(
                "outcome index {y} out of range for {} outcomes",
                self.mats.len()
            )));
        }
        Ok(())
    }

    /// Observable-picture action `E_y(F)`.
    pub fn apply(&self, y: usize, obs: &Observable) -> Result<Observable> {
        self.check_outcome(y)?;
        if obs.space() != &self.system {
            return Err(Error::dim("observable defined on a different system space"));
        }
        let values = self.mats[y].matvec(obs.values());
        Observable::new(&self.system, values)
    }

    /// Effective effect `E~_y = E_y(1_X)`; `<E~_y>` is the probability of
    /// outcome `y`.
    pub fn effective_effect(&self, y: usize) -> Result<Observable> {
        self.apply(y, &Observable::constant(&self.system, 1.0))
    }

    /// Nonselective action `E(F) = sum_y E_y(F)`.
    pub fn nonselective(&self, obs: &Observable) -> Result<Observable> {
        let mut total = Observable::constant(&self.system, 0.0);
        for y in 0..self.mats.len() {
            total = total.add(&self.apply(y, obs)?)?;
        }
        Ok(total)
    }

    /// Effective response likelihoods `P~(y|x') = E~_y(x')` recovered from
    /// the channel, for tomography-style round trips.
    pub fn effective_response(&self) -> Result<DetectorResponse> {
        let rows = (0..self.system.len())
            .map(|xp| {
                (0..self.mats.len())
                    .map(|y| (0..self.system.len()).map(|x| self.mats[y][(xp, x)]).sum())
                    .collect()
            })
            .collect();
        DetectorResponse::new(&self.system, &self.detector, rows)
    }

    /// True when no outcome moves probability between system atoms
    /// (all matrices diagonal to within `tol`).
    pub fn is_noninvasive(&self, tol: f64) -> bool {
        self.mats.iter().all(|m| {
            (0..m.nrows()).all(|i| {
                (0..m.ncols()).all(|j| i == j || m[(i, j)].abs() <= tol)
            })
        })
    }

    /// State update after observing `y`: propagate-and-condition,
    /// `P'(x) proportional to sum_x' P(x') A_y[x',x]`.
    pub fn update_state(&self, state: &ProbState, y: usize) -> Result<ProbState> {
        self.check_outcome(y)?;
        if state.space() != &self.system {
            return Err(Error::dim("state defined on a different system space"));
        }
        let m = &self.mats[y];
        let n = self.system.len();
        let mut weights = vec![0.0; n];
        for xp in 0..n {
            let p = state.prob(xp);
            for x in 0..n {
                weights[x] += p * m[(xp, x)];
            }
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::zero_prob("outcome has zero probability in this state"));
        }
        for w in weights.iter_mut() {
            *w /= total;
        }
        ProbState::new(&self.system, weights)
    }
}

/// Postselected conditional probability of the first outcome `y` given a
/// later detection of `z`: `<E_y(E'_z)> / <E(E'_z)>` with the nonselective
/// channel in the denominator.
pub fn postselected_cond_prob(
    state: &ProbState,
    channel: &OutcomeChannel,
    y: usize,
    z_effect: &Observable,
) -> Result<f64> {
    check_effect_range(z_effect, "postselection effect")?;
    let numer = state.expectation(&channel.apply(y, z_effect)?)?;
    let denom = state.expectation(&channel.nonselective(z_effect)?)?;
    if denom <= 0.0 {
        return Err(Error::zero_prob("postselection effect has zero probability"));
    }
    Ok(numer / denom)
}

/// Both sides of the modified Bayes rule relating postselected conditioning
/// to preselected conditioning:
/// left `<E_y(E'_z)>/<E(E'_z)>`, right `<z>~_y * <E~_y> / <E(E'_z)>` with
/// `<z>~_y = <E_y(E'_z)>/<E~_y>` the preselected conditional.
pub fn invasive_bayes_check(
    state: &ProbState,
    channel: &OutcomeChannel,
    y: usize,
    z_effect: &Observable,
) -> Result<(f64, f64)> {
    check_effect_range(z_effect, "postselection effect")?;
    let lhs = postselected_cond_prob(state, channel, y, z_effect)?;

    let p_y = state.expectation(&channel.effective_effect(y)?)?;
    if p_y <= 0.0 {
        return Err(Error::zero_prob(
            "outcome has zero probability; preselected conditional undefined",
        ));
    }
    let z_given_y = state.expectation(&channel.apply(y, z_effect)?)? / p_y;
    let p_z = state.expectation(&channel.nonselective(z_effect)?)?;
    if p_z <= 0.0 {
        return Err(Error::zero_prob("postselection effect has zero probability"));
    }
    let rhs = z_given_y * p_y / p_z;
    Ok((lhs, rhs))
}

/// Pure conditioned average of `F` given a later detection `z` through a
/// sequence of noninvasive effects: `<F E'_z>/<E'_z>`.
pub fn preselected_average(
    state: &ProbState,
    f: &Observable,
    z: &Proposition,
) -> Result<f64> {
    state.conditioned_expectation(f, z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::{ProbState, Proposition, SampleSpace};

    fn marble_spaces() -> (SampleSpace, SampleSpace) {
        (
            SampleSpace::new(["g", "r"]).unwrap(),
            SampleSpace::new(["b", "y"]).unwrap(),
        )
    }

    fn marble_response() -> DetectorResponse {
        let (xs, ys) = marble_spaces();
        DetectorResponse::new(&xs, &ys, vec![vec![0.6, 0.4], vec![0.2, 0.8]]).unwrap()
    }

    /// Invasive marble coupling: fair detector prior, joint transitions that
    /// can flip the marble color, yet with the same effective response as
    /// the noninvasive detector.
    fn invasive_marble() -> CouplingSpec {
        let (xs, ys) = marble_spaces();
        let prior = ProbState::new(&ys, vec![0.5, 0.5]).unwrap();
        let joint = xs.product(&ys);
        let row_g = vec![0.5, 0.3, 0.1, 0.1];
        let row_r = vec![0.1, 0.1, 0.1, 0.7];
        let kernel = TransitionKernel::new(
            &joint,
            &joint,
            vec![row_g.clone(), row_g, row_r.clone(), row_r],
        )
        .unwrap();
        CouplingSpec::new(&xs, &prior, &kernel).unwrap()
    }

    #[test]
    fn marble_effects() {
        let effects = EffectSet::from_response(&marble_response());
        assert_eq!(effects.effect(0).values(), &[0.6, 0.2]);
        assert_eq!(effects.effect(1).values(), &[0.4, 0.8]);
        // Completeness.
        let total = effects.effect(0).add(effects.effect(1)).unwrap();
        assert_eq!(total.values(), &[1.0, 1.0]);
    }

    #[test]
    fn ideal_response_gives_atomic_projections() {
        let xs = SampleSpace::new(["a", "b", "c"]).unwrap();
        let effects = EffectSet::from_response(&DetectorResponse::ideal(&xs));
        for (i, e) in effects.effects().iter().enumerate() {
            let atom = Proposition::from_indices(&xs, &[i]).unwrap().to_observable();
            assert_eq!(e.values(), atom.values());
        }
    }

    #[test]
    fn effect_set_rejects_incomplete_sets() {
        let (xs, ys) = marble_spaces();
        let e0 = Observable::new(&xs, vec![0.6, 0.2]).unwrap();
        let e1 = Observable::new(&xs, vec![0.3, 0.8]).unwrap();
        assert!(EffectSet::new(&xs, &ys, vec![e0, e1]).is_err());
    }

    #[test]
    fn jeffrey_conditioning() {
        let (xs, _) = marble_spaces();
        let uniform = ProbState::uniform(&xs);

        let unit = Observable::constant(&xs, 1.0);
        assert_eq!(
            generalized_condition(&uniform, &unit).unwrap().probs(),
            uniform.probs()
        );

        let atom = Proposition::atom(&xs, "r").unwrap().to_observable();
        let collapsed = generalized_condition(&uniform, &atom).unwrap();
        assert_eq!(collapsed.probs(), &[0.0, 1.0]);

        let effect = Observable::new(&xs, vec![0.6, 0.2]).unwrap();
        let updated = generalized_condition(&uniform, &effect).unwrap();
        assert!((updated.prob(0) - 0.75).abs() < 1e-15);
        assert!((updated.prob(1) - 0.25).abs() < 1e-15);

        let zero = Observable::constant(&xs, 0.0);
        assert!(matches!(
            generalized_condition(&uniform, &zero),
            Err(Error::ZeroProbability(_))
        ));
        let not_effect = Observable::new(&xs, vec![1.5, 0.0]).unwrap();
        assert!(generalized_condition(&uniform, &not_effect).is_err());
    }

    #[test]
    fn sequence_probabilities() {
        let (xs, _) = marble_spaces();
        let uniform = ProbState::uniform(&xs);
        let g = Proposition::atom(&xs, "g").unwrap().to_observable();
        let r = Proposition::atom(&xs, "r").unwrap().to_observable();

        // Repeated projective measurement = single measurement.
        let twice = sequence_prob(&uniform, &[&g, &g]).unwrap();
        assert_eq!(twice, uniform.expectation(&g).unwrap());
        // Disjoint projections never co-occur.
        assert_eq!(sequence_prob(&uniform, &[&g, &r]).unwrap(), 0.0);
        // Empty sequence is certain.
        assert_eq!(sequence_prob(&uniform, &[]).unwrap(), 1.0);

        let e_b = Observable::new(&xs, vec![0.6, 0.2]).unwrap();
        let double = sequence_prob(&uniform, &[&e_b, &e_b]).unwrap();
        assert!((double - 0.20).abs() < 1e-15);
    }

    #[test]
    fn invasive_marble_channel_matrices() {
        let channel = OutcomeChannel::from_coupling(&invasive_marble()).unwrap();
        let a_b = channel.matrix(0);
        let a_y = channel.matrix(1);
        let tol = 1e-15;
        for (mat, expect) in [
            (a_b, [[0.5, 0.1], [0.1, 0.1]]),
            (a_y, [[0.3, 0.1], [0.1, 0.7]]),
        ] {
            for i in 0..2 {
                for j in 0..2 {
                    assert!((mat[(i, j)] - expect[i][j]).abs() < tol);
                }
            }
        }
    }

    #[test]
    fn invasive_marble_effective_response_matches_noninvasive() {
        let channel = OutcomeChannel::from_coupling(&invasive_marble()).unwrap();
        let resp = channel.effective_response().unwrap();
        assert!((resp.likelihood(0, 0) - 0.6).abs() < 1e-12);
        assert!((resp.likelihood(0, 1) - 0.4).abs() < 1e-12);
        assert!((resp.likelihood(1, 0) - 0.2).abs() < 1e-12);
        assert!((resp.likelihood(1, 1) - 0.8).abs() < 1e-12);
        assert!(!channel.is_noninvasive(1e-12));
    }

    #[test]
    fn channel_completeness_and_unit_action() {
        let channel = OutcomeChannel::from_coupling(&invasive_marble()).unwrap();
        let (xs, _) = marble_spaces();
        let mut total = Observable::constant(&xs, 0.0);
        for y in 0..channel.outcomes() {
            total = total.add(&channel.effective_effect(y).unwrap()).unwrap();
        }
        for &v in total.values() {
            assert!((v - 1.0).abs() < 1e-12);
        }
        // apply(y, 1_X) is the effective effect.
        let unit = Observable::constant(&xs, 1.0);
        assert_eq!(
            channel.apply(0, &unit).unwrap().values(),
            channel.effective_effect(0).unwrap().values()
        );
    }

    #[test]
    fn noninvasive_channel_multiplies_by_effect() {
        let effects = EffectSet::from_response(&marble_response());
        let channel = OutcomeChannel::noninvasive(&effects);
        assert!(channel.is_noninvasive(0.0));
        let (xs, _) = marble_spaces();
        let f = Observable::new(&xs, vec![1.0, -1.0]).unwrap();
        let acted = channel.apply(0, &f).unwrap();
        let direct = effects.effect(0).mul(&f).unwrap();
        assert_eq!(acted.values(), direct.values());
    }

    #[test]
    fn invasive_channel_action_on_sign_observable() {
        let channel = OutcomeChannel::from_coupling(&invasive_marble()).unwrap();
        let (xs, _) = marble_spaces();
        let f = Observable::new(&xs, vec![1.0, -1.0]).unwrap();
        let acted = channel.apply(0, &f).unwrap();
        // Row g of A_b is (0.5, 0.1): 0.5*1 + 0.1*(-1) = 0.4.
        assert!((acted.value(0) - 0.4).abs() < 1e-15);
        // Row r of A_b is (0.1, 0.1): 0.
        assert!(acted.value(1).abs() < 1e-15);
    }

    #[test]
    fn postselection_matches_brute_force_path_enumeration() {
        let spec = invasive_marble();
        let channel = OutcomeChannel::from_coupling(&spec).unwrap();
        let (xs, ys) = marble_spaces();
        let uniform = ProbState::uniform(&xs);
        let z = Proposition::atom(&xs, "g").unwrap().to_observable();

        // Enumerate (x', y', x, y) paths: initial system atom and detector
        // atom, joint transition, then test the final system atom with z.
        let ny = ys.len();
        let mut joint = vec![0.0; ny]; // P(outcome y and z true)
        let mut norm = 0.0; // P(z true)
        for xp in 0..xs.len() {
            for yp in 0..ny {
                let w = uniform.prob(xp) * spec.detector_prior().prob(yp);
                let row = spec.joint_kernel().row(xp * ny + yp);
                for x in 0..xs.len() {
                    for (y, j) in joint.iter_mut().enumerate() {
                        let p = w * row[x * ny + y] * z.value(x);
                        *j += p;
                        norm += p;
                    }
                }
            }
        }

        for (y, jy) in joint.iter().enumerate() {
            let fast = postselected_cond_prob(&uniform, &channel, y, &z).unwrap();
            assert!((fast - jy / norm).abs() < 1e-13);
        }
        // Postselected conditionals form a distribution.
        let total: f64 = (0..ny)
            .map(|y| postselected_cond_prob(&uniform, &channel, y, &z).unwrap())
            .sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn noninvasive_postselection_reduces_to_sequence_rule() {
        let effects = EffectSet::from_response(&marble_response());
        let channel = OutcomeChannel::noninvasive(&effects);
        let (xs, _) = marble_spaces();
        let state = ProbState::new(&xs, vec![0.4, 0.6]).unwrap();
        let z = Observable::new(&xs, vec![0.3, 0.9]).unwrap();
        for y in 0..2 {
            let post = postselected_cond_prob(&state, &channel, y, &z).unwrap();
            let seq = sequence_prob(&state, &[effects.effect(y), &z]).unwrap()
                / state.expectation(&z).unwrap();
            assert!((post - seq).abs() < 1e-12);
        }
    }

    #[test]
    fn modified_bayes_rule_holds() {
        let channel = OutcomeChannel::from_coupling(&invasive_marble()).unwrap();
        let (xs, _) = marble_spaces();
        let state = ProbState::new(&xs, vec![0.35, 0.65]).unwrap();
        let z = Observable::new(&xs, vec![0.8, 0.15]).unwrap();
        for y in 0..2 {
            let (lhs, rhs) = invasive_bayes_check(&state, &channel, y, &z).unwrap();
            assert!((lhs - rhs).abs() < 1e-12);
        }
        // z = 1_X: both sides are the plain outcome probability.
        let unit = Observable::constant(&xs, 1.0);
        let (lhs, rhs) = invasive_bayes_check(&state, &channel, 0, &unit).unwrap();
        let p0 = state
            .expectation(&channel.effective_effect(0).unwrap())
            .unwrap();
        assert!((lhs - p0).abs() < 1e-12);
        assert!((rhs - p0).abs() < 1e-12);
    }

    #[test]
    fn weak_family_converges_linearly_to_prior() {
        let (xs, ys) = marble_spaces();
        let sharp = marble_response();
        let prior = ProbState::new(&ys, vec![0.5, 0.5]).unwrap();

        let dist = |eps: f64| -> f64 {
            let weak = DetectorResponse::weak_family(&prior, &sharp, eps).unwrap();
            let effects = EffectSet::from_response(&weak);
            let mut worst = 0.0f64;
            for (y, e) in effects.effects().iter().enumerate() {
                for x in 0..xs.len() {
                    worst = worst.max((e.value(x) - prior.prob(y)).abs());
                }
            }
            worst
        };

        let d1 = dist(0.2);
        let d2 = dist(0.1);
        let d3 = dist(0.05);
        assert!(d1 > 0.0);
        assert!((d1 / d2 - 2.0).abs() < 1e-9, "linear decay in eps");
        assert!((d2 / d3 - 2.0).abs() < 1e-9, "linear decay in eps");
        // eps = 1 recovers the sharp response; eps = 0 is prior-only.
        let at_one = DetectorResponse::weak_family(&prior, &sharp, 1.0).unwrap();
        assert_eq!(at_one.rows(), sharp.rows());
        assert!(dist(0.0) < 1e-15);
    }

    #[test]
    fn channel_state_update_matches_invasive_conditioning() {
        // The channel state update after outcome y agrees with propagating
        // the joint state and conditioning on the detector outcome.
        let spec = invasive_marble();
        let channel = OutcomeChannel::from_coupling(&spec).unwrap();
        let (xs, ys) = marble_spaces();
        let state = ProbState::new(&xs, vec![0.3, 0.7]).unwrap();

        // Joint initial state P(x)P_Y(y'), pushed through the kernel, then
        // conditioned on the detector atom and marginalized over it.
        let joint_space = xs.product(&ys);
        let mut joint_probs = Vec::new();
        for x in 0..xs.len() {
            for yp in 0..ys.len() {
                joint_probs.push(state.prob(x) * spec.detector_prior().prob(yp));
            }
        }
        let joint_state = ProbState::new(&joint_space, joint_probs).unwrap();
        let pushed = spec.joint_kernel().apply(&joint_state).unwrap();

        for y in 0..ys.len() {
            let indices: Vec<usize> =
                (0..xs.len()).map(|x| x * ys.len() + y).collect();
            let prop = Proposition::from_indices(&joint_space, &indices).unwrap();
            let conditioned = pushed.condition(&prop).unwrap();
            let marginal: Vec<f64> = (0..xs.len())
                .map(|x| {
                    (0..ys.len())
                        .map(|yy| conditioned.prob(x * ys.len() + yy))
                        .sum()
                })
                .collect();
            let updated = channel.update_state(&state, y).unwrap();
            for (x, m) in marginal.iter().enumerate() {
                assert!((updated.prob(x) - m).abs() < 1e-12);
            }
        }
    }
}
