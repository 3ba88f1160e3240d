//! Finite classical probability: sample spaces, propositions, observables,
//! states, reference measures, and stochastic transition kernels.
//!
//! An observable is a real value per atom, `F = sum_x f(x) x`, so expectation
//! is the weighted sum `<F> = sum_x f(x) P(x)`. Conditioning on a proposition
//! `y` renormalizes the restricted state (Bayes collapse). A transition
//! kernel `D` disturbs states forward, `P'(x') = sum_x P(x) D_x(x')`, and
//! pulls observables back, `D(F)(x) = sum_x' D_x(x') f(x')`; the two pictures
//! agree in expectation. An invasive measurement conditions only after the
//! disturbance has acted: `<F>_y = <D(yF)> / <D(y)>`.

use crate::error::{Error, Result};

const NORM_TOL: f64 = 1e-12;

/// Ordered finite set of mutually exclusive atomic propositions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleSpace {
    atoms: Vec<String>,
}

impl SampleSpace {
    /// Build from atom labels; labels must be nonempty and unique.
    pub fn new<S: Into<String>>(atoms: impl IntoIterator<Item = S>) -> Result<Self> {
        let atoms: Vec<String> = atoms.into_iter().map(Into::into).collect();
        if atoms.is_empty() {
            return Err(Error::invalid("sample space needs at least one atom"));
        }
        for (i, a) in atoms.iter().enumerate() {
            if atoms[..i].contains(a) {
                return Err(Error::invalid(format!("duplicate atom label '{a}'")));
            }
        }
        Ok(SampleSpace { atoms })
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn atoms(&self) -> &[String] {
        &self.atoms
    }

    pub fn atom(&self, i: usize) -> &str {
        &self.atoms[i]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.atoms.iter().position(|a| a == label)
    }

    /// Joint space with one atom per ordered pair, labeled `(a,b)`.
    /// Pairs are enumerated with the left factor varying slowest, so the
    /// pair `(i, j)` lives at flat index `i * other.len() + j`.
    pub fn product(&self, other: &SampleSpace) -> SampleSpace {
        let atoms = self
            .atoms
            .iter()
            .flat_map(|a| other.atoms.iter().map(move |b| format!("({a},{b})")))
            .collect();
        SampleSpace { atoms }
    }

    fn check_same(&self, other: &SampleSpace, what: &str) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::dim(format!("{what} defined on a different sample space")))
        }
    }
}

/// Subset of atoms (an event) over a fixed sample space.
#[derive(Debug, Clone, PartialEq)]
pub struct Proposition {
    space: SampleSpace,
    mask: Vec<bool>,
}

impl Proposition {
    /// The single-atom proposition for `label`.
    pub fn atom(space: &SampleSpace, label: &str) -> Result<Self> {
        let idx = space
            .index_of(label)
            .ok_or_else(|| Error::invalid(format!("unknown atom label '{label}'")))?;
        let mut mask = vec![false; space.len()];
        mask[idx] = true;
        Ok(Proposition { space: space.clone(), mask })
    }

    pub fn from_labels(space: &SampleSpace, labels: &[&str]) -> Result<Self> {
        let mut mask = vec![false; space.len()];
        for label in labels {
            let idx = space
                .index_of(label)
                .ok_or_else(|| Error::invalid(format!("unknown atom label '{label}'")))?;
            mask[idx] = true;
        }
        Ok(Proposition { space: space.clone(), mask })
    }

    pub fn from_indices(space: &SampleSpace, indices: &[usize]) -> Result<Self> {
        let mut mask = vec![false; space.len()];
        for &idx in indices {
            if idx >= space.len() {
                return Err(Error::invalid(format!("atom index {idx} out of range")));
            }
            mask[idx] = true;
        }
        Ok(Proposition { space: space.clone(), mask })
    }

    /// The certain proposition `1_X`.
    pub fn always(space: &SampleSpace) -> Self {
        Proposition { space: space.clone(), mask: vec![true; space.len()] }
    }

    /// The impossible proposition `0`.
    pub fn never(space: &SampleSpace) -> Self {
        Proposition { space: space.clone(), mask: vec![false; space.len()] }
    }

    pub fn space(&self) -> &SampleSpace {
        &self.space
    }

    pub fn contains(&self, idx: usize) -> bool {
        self.mask[idx]
    }

    pub fn complement(&self) -> Proposition {
        Proposition {
            space: self.space.clone(),
            mask: self.mask.iter().map(|b| !b).collect(),
        }
    }

    pub fn and(&self, other: &Proposition) -> Result<Proposition> {
        self.space.check_same(&other.space, "proposition")?;
        Ok(Proposition {
            space: self.space.clone(),
            mask: self.mask.iter().zip(&other.mask).map(|(a, b)| *a && *b).collect(),
        })
    }

    pub fn or(&self, other: &Proposition) -> Result<Proposition> {
        self.space.check_same(&other.space, "proposition")?;
        Ok(Proposition {
            space: self.space.clone(),
            mask: self.mask.iter().zip(&other.mask).map(|(a, b)| *a || *b).collect(),
        })
    }

    /// The 0/1-valued observable indicating this proposition.
    pub fn to_observable(&self) -> Observable {
        Observable {
            space: self.space.clone(),
            values: self.mask.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect(),
        }
    }
}

/// Real-valued function on the atoms: `F = sum_x f(x) x`.
#[derive(Debug, Clone, PartialEq)]
pub struct Observable {
    space: SampleSpace,
    values: Vec<f64>,
}

impl Observable {
    pub fn new(space: &SampleSpace, values: Vec<f64>) -> Result<Self> {
        if values.len() != space.len() {
            return Err(Error::dim(format!(
                "observable has {} values for {} atoms",
                values.len(),
                space.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("observable values must be finite"));
        }
        Ok(Observable { space: space.clone(), values })
    }

    pub fn from_fn(space: &SampleSpace, f: impl Fn(&str) -> f64) -> Result<Self> {
        let values = space.atoms().iter().map(|a| f(a)).collect();
        Observable::new(space, values)
    }

    pub fn constant(space: &SampleSpace, c: f64) -> Self {
        Observable { space: space.clone(), values: vec![c; space.len()] }
    }

    pub fn space(&self) -> &SampleSpace {
        &self.space
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, idx: usize) -> f64 {
        self.values[idx]
    }

    /// Pointwise product; products of commuting observables multiply values.
    pub fn mul(&self, other: &Observable) -> Result<Observable> {
        self.space.check_same(&other.space, "observable")?;
        Ok(Observable {
            space: self.space.clone(),
            values: self.values.iter().zip(&other.values).map(|(a, b)| a * b).collect(),
        })
    }

    pub fn add(&self, other: &Observable) -> Result<Observable> {
        self.space.check_same(&other.space, "observable")?;
        Ok(Observable {
            space: self.space.clone(),
            values: self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn scale(&self, s: f64) -> Observable {
        Observable {
            space: self.space.clone(),
            values: self.values.iter().map(|v| v * s).collect(),
        }
    }
}

/// Normalize a nonnegative vector to unit sum, enforcing the construction
/// tolerance: entries below `-NORM_TOL` or a total farther than `tol_sum`
/// from 1 are rejected; smaller defects are repaired exactly.
fn normalize_distribution(values: &[f64], tol_sum: f64, what: &str) -> Result<Vec<f64>> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid(format!("{what} entries must be finite")));
    }
    let mut out = Vec::with_capacity(values.len());
    for &v in values {
        if v < -NORM_TOL {
            return Err(Error::invalid(format!("{what} has negative entry {v}")));
        }
        out.push(v.max(0.0));
    }
    let sum: f64 = out.iter().sum();
    if (sum - 1.0).abs() > tol_sum {
        return Err(Error::invalid(format!("{what} sums to {sum}, expected 1")));
    }
    for v in out.iter_mut() {
        *v /= sum;
    }
    Ok(out)
}

/// Probability measure on the atoms of a sample space.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbState {
    space: SampleSpace,
    probs: Vec<f64>,
}

impl ProbState {
    pub fn new(space: &SampleSpace, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != space.len() {
            return Err(Error::dim(format!(
                "state has {} probabilities for {} atoms",
                probs.len(),
                space.len()
            )));
        }
        let probs = normalize_distribution(&probs, NORM_TOL, "probability state")?;
        Ok(ProbState { space: space.clone(), probs })
    }

    pub fn uniform(space: &SampleSpace) -> Self {
        let n = space.len();
        ProbState { space: space.clone(), probs: vec![1.0 / n as f64; n] }
    }

    pub fn point_mass(space: &SampleSpace, label: &str) -> Result<Self> {
        let idx = space
            .index_of(label)
            .ok_or_else(|| Error::invalid(format!("unknown atom label '{label}'")))?;
        let mut probs = vec![0.0; space.len()];
        probs[idx] = 1.0;
        Ok(ProbState { space: space.clone(), probs })
    }

    pub fn space(&self) -> &SampleSpace {
        &self.space
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, idx: usize) -> f64 {
        self.probs[idx]
    }

    /// `<F> = sum_x f(x) P(x)`.
    pub fn expectation(&self, obs: &Observable) -> Result<f64> {
        self.space.check_same(&obs.space, "observable")?;
        Ok(self.probs.iter().zip(&obs.values).map(|(p, f)| p * f).sum())
    }

    /// `<F^n> = sum_x f(x)^n P(x)`; the zeroth moment is the normalization, 1.
    pub fn moment(&self, obs: &Observable, n: u32) -> Result<f64> {
        self.space.check_same(&obs.space, "observable")?;
        if n == 0 {
            return Ok(1.0);
        }
        Ok(self
            .probs
            .iter()
            .zip(&obs.values)
            .map(|(p, f)| p * f.powi(n as i32))
            .sum())
    }

    pub fn probability(&self, y: &Proposition) -> Result<f64> {
        self.space.check_same(&y.space, "proposition")?;
        Ok(self
            .probs
            .iter()
            .zip(&y.mask)
            .filter(|(_, m)| **m)
            .map(|(p, _)| p)
            .sum())
    }

    /// Bayesian collapse: restrict to `y` and renormalize.
    pub fn condition(&self, y: &Proposition) -> Result<ProbState> {
        let py = self.probability(y)?;
        if py <= 0.0 {
            return Err(Error::zero_prob(
                "conditioning proposition has probability zero",
            ));
        }
        let probs = self
            .probs
            .iter()
            .zip(&y.mask)
            .map(|(p, m)| if *m { p / py } else { 0.0 })
            .collect();
        Ok(ProbState { space: self.space.clone(), probs })
    }

    /// Expectation of `F` in the collapsed state, `<yF>/<y>`.
    pub fn conditioned_expectation(&self, obs: &Observable, y: &Proposition) -> Result<f64> {
        self.condition(y)?.expectation(obs)
    }

    /// Invasive measurement: the disturbance acts first, then the pure
    /// conditioning, giving `<F>_y = <D(yF)> / <D(y)>` as a state update.
    pub fn invasive_condition(
        &self,
        kernel: &TransitionKernel,
        y: &Proposition,
    ) -> Result<ProbState> {
        let pushed = kernel.apply(self)?;
        pushed.space.check_same(&y.space, "proposition")?;
        let denom = pushed.probability(y)?;
        if denom <= 0.0 {
            return Err(Error::zero_prob(
                "disturbed state gives the conditioning proposition probability zero",
            ));
        }
        let probs = pushed
            .probs
            .iter()
            .zip(&y.mask)
            .map(|(p, m)| if *m { p / denom } else { 0.0 })
            .collect();
        Ok(ProbState { space: pushed.space, probs })
    }
}

/// Strictly positive weight per atom; the counting measure is all ones.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceMeasure {
    space: SampleSpace,
    weights: Vec<f64>,
}

impl ReferenceMeasure {
    pub fn new(space: &SampleSpace, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != space.len() {
            return Err(Error::dim(format!(
                "measure has {} weights for {} atoms",
                weights.len(),
                space.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite() || *w <= 0.0) {
            return Err(Error::invalid("measure weights must be finite and positive"));
        }
        Ok(ReferenceMeasure { space: space.clone(), weights })
    }

    pub fn counting(space: &SampleSpace) -> Self {
        ReferenceMeasure { space: space.clone(), weights: vec![1.0; space.len()] }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `integral of F d(mu) = sum_x mu(x) f(x)`.
    pub fn integrate(&self, obs: &Observable) -> Result<f64> {
        self.space.check_same(&obs.space, "observable")?;
        Ok(self.weights.iter().zip(&obs.values).map(|(w, f)| w * f).sum())
    }

    /// State density with respect to this measure, `P_mu(x) = P(x)/mu(x)`,
    /// satisfying `integral of P_mu * F d(mu) = <F>`.
    pub fn density(&self, state: &ProbState) -> Result<Observable> {
        self.space.check_same(&state.space, "state")?;
        let values = state
            .probs
            .iter()
            .zip(&self.weights)
            .map(|(p, w)| p / w)
            .collect();
        Ok(Observable { space: self.space.clone(), values })
    }
}

/// Row-stochastic transition matrix: `rows[x]` is the distribution `D_x`
/// over target atoms reached from source atom `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionKernel {
    source: SampleSpace,
    target: SampleSpace,
    rows: Vec<Vec<f64>>,
}

impl TransitionKernel {
    pub fn new(source: &SampleSpace, target: &SampleSpace, rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.len() != source.len() {
            return Err(Error::dim(format!(
                "kernel has {} rows for {} source atoms",
                rows.len(),
                source.len()
            )));
        }
        let mut clean = Vec::with_capacity(rows.len());
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != target.len() {
                return Err(Error::dim(format!(
                    "kernel row {i} has {} entries for {} target atoms",
                    row.len(),
                    target.len()
                )));
            }
            clean.push(normalize_distribution(&row, NORM_TOL, &format!("kernel row {i}"))?);
        }
        Ok(TransitionKernel {
            source: source.clone(),
            target: target.clone(),
            rows: clean,
        })
    }

    pub fn identity(space: &SampleSpace) -> Self {
        let n = space.len();
        let rows = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        TransitionKernel { source: space.clone(), target: space.clone(), rows }
    }

    pub fn source(&self) -> &SampleSpace {
        &self.source
    }

    pub fn target(&self) -> &SampleSpace {
        &self.target
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.rows[x]
    }

    /// Sequential composition: first `self`, then `next`.
    pub fn compose(&self, next: &TransitionKernel) -> Result<TransitionKernel> {
        self.target.check_same(&next.source, "kernel chain")?;
        let rows = self
            .rows
            .iter()
            .map(|row| {
                (0..next.target.len())
                    .map(|k| row.iter().zip(&next.rows).map(|(p, nrow)| p * nrow[k]).sum())
                    .collect()
            })
            .collect();
        // Re-validate to keep compositions row-stochastic to tolerance.
        TransitionKernel::new(&self.source, &next.target, rows)
    }

    /// Forward action on states: `P'(x') = sum_x P(x) D_x(x')`.
    pub fn apply(&self, state: &ProbState) -> Result<ProbState> {
        self.source.check_same(&state.space, "state")?;
        let mut probs = vec![0.0; self.target.len()];
        for (p, row) in state.probs.iter().zip(&self.rows) {
            for (out, d) in probs.iter_mut().zip(row) {
                *out += p * d;
            }
        }
        ProbState::new(&self.target, probs)
    }

    /// Backward (adjoint) action on observables:
    /// `D(F)(x) = sum_x' D_x(x') f(x')`.
    pub fn apply_to_observable(&self, obs: &Observable) -> Result<Observable> {
        self.target.check_same(&obs.space, "observable")?;
        let values = self
            .rows
            .iter()
            .map(|row| row.iter().zip(&obs.values).map(|(d, f)| d * f).sum())
            .collect();
        Ok(Observable { space: self.source.clone(), values })
    }
}

/// Two-time correlation `<F D(G)> = sum_x P(x) f(x) sum_x' D_x(x') g(x')`:
/// measure `F`, evolve by the kernel, then measure `G`.
pub fn correlation(
    state: &ProbState,
    f: &Observable,
    kernel: &TransitionKernel,
    g: &Observable,
) -> Result<f64> {
    let evolved_g = kernel.apply_to_observable(g)?;
    state.expectation(&f.mul(&evolved_g)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_space() -> SampleSpace {
        SampleSpace::new(["g", "r"]).unwrap()
    }

    #[test]
    fn space_rejects_duplicates_and_empty() {
        assert!(SampleSpace::new(["a", "a"]).is_err());
        assert!(SampleSpace::new(Vec::<String>::new()).is_err());
    }

    #[test]
    fn product_space_orders_left_factor_slowest() {
        let xs = two_space();
        let ys = SampleSpace::new(["b", "y"]).unwrap();
        let joint = xs.product(&ys);
        assert_eq!(joint.atoms(), &["(g,b)", "(g,y)", "(r,b)", "(r,y)"]);
        assert_eq!(joint.index_of("(r,b)"), Some(2));
    }

    #[test]
    fn expectation_examples() {
        let xs = two_space();
        let f = Observable::new(&xs, vec![1.0, -1.0]).unwrap();
        let fair = ProbState::new(&xs, vec![0.5, 0.5]).unwrap();
        assert_eq!(fair.expectation(&f).unwrap(), 0.0);

        let point = ProbState::point_mass(&xs, "g").unwrap();
        let g = Observable::new(&xs, vec![3.25, -7.5]).unwrap();
        assert_eq!(point.expectation(&g).unwrap(), 3.25);

        let biased = ProbState::new(&xs, vec![0.7, 0.3]).unwrap();
        assert!((biased.expectation(&f).unwrap() - 0.4).abs() < 1e-15);
    }

    #[test]
    fn moment_examples() {
        let xs = two_space();
        let sign = Observable::new(&xs, vec![1.0, -1.0]).unwrap();
        let biased = ProbState::new(&xs, vec![0.31, 0.69]).unwrap();
        assert_eq!(biased.moment(&sign, 2).unwrap(), 1.0);

        let point = ProbState::point_mass(&xs, "g").unwrap();
        let f = Observable::new(&xs, vec![3.0, -2.0]).unwrap();
        assert_eq!(point.moment(&f, 3).unwrap(), 27.0);

        let fair = ProbState::new(&xs, vec![0.5, 0.5]).unwrap();
        let h = Observable::new(&xs, vec![2.0, 0.0]).unwrap();
        assert_eq!(fair.moment(&h, 2).unwrap(), 2.0);

        assert_eq!(biased.moment(&f, 0).unwrap(), 1.0);
    }

    #[test]
    fn conditioning_examples() {
        let xs = two_space();
        let fair = ProbState::uniform(&xs);
        let g_atom = Proposition::atom(&xs, "g").unwrap();
        let collapsed = fair.condition(&g_atom).unwrap();
        assert_eq!(collapsed.probs(), &[1.0, 0.0]);

        let everything = Proposition::always(&xs);
        assert_eq!(fair.condition(&everything).unwrap().probs(), fair.probs());

        let xs3 = SampleSpace::new(["a", "b", "c"]).unwrap();
        let state = ProbState::new(&xs3, vec![0.6, 0.3, 0.1]).unwrap();
        let y = Proposition::from_indices(&xs3, &[0, 1]).unwrap();
        let conditioned = state.condition(&y).unwrap();
        assert!((conditioned.prob(0) - 2.0 / 3.0).abs() < 1e-15);
        assert!((conditioned.prob(1) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(conditioned.prob(2), 0.0);

        // Conditioning twice equals conditioning once.
        assert_eq!(conditioned.condition(&y).unwrap().probs(), conditioned.probs());
    }

    #[test]
    fn zero_probability_condition_is_error() {
        let xs = two_space();
        let point = ProbState::point_mass(&xs, "g").unwrap();
        let r_atom = Proposition::atom(&xs, "r").unwrap();
        let err = point.condition(&r_atom).unwrap_err();
        assert!(matches!(err, Error::ZeroProbability(_)));
    }

    #[test]
    fn state_normalization_policy() {
        let xs = two_space();
        // Small drift is repaired to an exact distribution.
        let s = ProbState::new(&xs, vec![0.5 + 4e-13, 0.5]).unwrap();
        assert!((s.probs().iter().sum::<f64>() - 1.0).abs() < 1e-15);
        // Larger drift is rejected.
        assert!(ProbState::new(&xs, vec![0.5005, 0.5]).is_err());
        // Tiny negatives are clamped; real negatives are rejected.
        assert!(ProbState::new(&xs, vec![-5e-13, 1.0]).is_ok());
        assert!(ProbState::new(&xs, vec![-0.1, 1.1]).is_err());
    }

    #[test]
    fn kernel_identity_and_rank_one() {
        let xs = two_space();
        let state = ProbState::new(&xs, vec![0.3, 0.7]).unwrap();
        let id = TransitionKernel::identity(&xs);
        assert_eq!(id.apply(&state).unwrap().probs(), state.probs());

        let q = vec![0.25, 0.75];
        let forgetful =
            TransitionKernel::new(&xs, &xs, vec![q.clone(), q.clone()]).unwrap();
        let out = forgetful.apply(&state).unwrap();
        for (i, qi) in q.iter().enumerate() {
            assert!((out.prob(i) - qi).abs() < 1e-15);
        }
    }

    #[test]
    fn kernel_adjointness() {
        let xs = SampleSpace::new(["a", "b", "c"]).unwrap();
        let state = ProbState::new(&xs, vec![0.2, 0.5, 0.3]).unwrap();
        let kernel = TransitionKernel::new(
            &xs,
            &xs,
            vec![
                vec![0.6, 0.3, 0.1],
                vec![0.2, 0.5, 0.3],
                vec![0.1, 0.1, 0.8],
            ],
        )
        .unwrap();
        let f = Observable::new(&xs, vec![2.0, -1.0, 0.5]).unwrap();
        let forward = kernel.apply(&state).unwrap().expectation(&f).unwrap();
        let backward = state.expectation(&kernel.apply_to_observable(&f).unwrap()).unwrap();
        assert!((forward - backward).abs() < 1e-12);
    }

    #[test]
    fn kernel_composition_matches_two_steps() {
        let xs = two_space();
        let k1 = TransitionKernel::new(&xs, &xs, vec![vec![0.9, 0.1], vec![0.4, 0.6]]).unwrap();
        let k2 = TransitionKernel::new(&xs, &xs, vec![vec![0.5, 0.5], vec![0.2, 0.8]]).unwrap();
        let chained = k1.compose(&k2).unwrap();
        let state = ProbState::new(&xs, vec![0.35, 0.65]).unwrap();
        let two_step = k2.apply(&k1.apply(&state).unwrap()).unwrap();
        let one_step = chained.apply(&state).unwrap();
        for i in 0..2 {
            assert!((two_step.prob(i) - one_step.prob(i)).abs() < 1e-15);
        }
        for row in 0..2 {
            let sum: f64 = chained.row(row).iter().sum();
            assert!((sum - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn invasive_condition_reductions() {
        let xs = two_space();
        let state = ProbState::new(&xs, vec![0.5, 0.5]).unwrap();
        let y = Proposition::atom(&xs, "g").unwrap();
        let id = TransitionKernel::identity(&xs);
        let via_invasive = state.invasive_condition(&id, &y).unwrap();
        let via_pure = state.condition(&y).unwrap();
        assert_eq!(via_invasive.probs(), via_pure.probs());

        let kernel =
            TransitionKernel::new(&xs, &xs, vec![vec![0.9, 0.1], vec![0.1, 0.9]]).unwrap();
        let trivial = state.invasive_condition(&kernel, &Proposition::always(&xs)).unwrap();
        let pushed = kernel.apply(&state).unwrap();
        assert_eq!(trivial.probs(), pushed.probs());
    }

    #[test]
    fn invasive_condition_disturbs_before_conditioning() {
        // Hand-evaluated double sum on three atoms: propagate the state
        // through the kernel, then restrict to y = {a, c} and renormalize.
        let xs = SampleSpace::new(["a", "b", "c"]).unwrap();
        let state = ProbState::new(&xs, vec![0.5, 0.3, 0.2]).unwrap();
        let kernel = TransitionKernel::new(
            &xs,
            &xs,
            vec![
                vec![0.6, 0.3, 0.1],
                vec![0.2, 0.5, 0.3],
                vec![0.1, 0.1, 0.8],
            ],
        )
        .unwrap();
        let y = Proposition::from_labels(&xs, &["a", "c"]).unwrap();
        let result = state.invasive_condition(&kernel, &y).unwrap();
        // Pushed state is (0.38, 0.32, 0.30); restriction to {a,c} has mass 0.68.
        assert!((result.prob(0) - 19.0 / 34.0).abs() < 1e-15);
        assert_eq!(result.prob(1), 0.0);
        assert!((result.prob(2) - 15.0 / 34.0).abs() < 1e-15);
    }

    #[test]
    fn correlation_examples() {
        let xs = two_space();
        let state = ProbState::new(&xs, vec![0.3, 0.7]).unwrap();
        let sign = Observable::new(&xs, vec![1.0, -1.0]).unwrap();
        let id = TransitionKernel::identity(&xs);
        let self_corr = correlation(&state, &sign, &id, &sign).unwrap();
        assert_eq!(self_corr, state.moment(&sign, 2).unwrap());

        // Uniform rows decorrelate: <F D(G)> = <F> * mean(g).
        let uniform_rows =
            TransitionKernel::new(&xs, &xs, vec![vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        let g = Observable::new(&xs, vec![4.0, 1.0]).unwrap();
        let corr = correlation(&state, &sign, &uniform_rows, &g).unwrap();
        let expected = state.expectation(&sign).unwrap() * 2.5;
        assert!((corr - expected).abs() < 1e-12);

        // Brute-force double sum on a fixed asymmetric instance.
        let kernel =
            TransitionKernel::new(&xs, &xs, vec![vec![0.9, 0.1], vec![0.4, 0.6]]).unwrap();
        let mut brute = 0.0;
        for x in 0..2 {
            for xp in 0..2 {
                brute += state.prob(x) * sign.value(x) * kernel.row(x)[xp] * g.value(xp);
            }
        }
        let fast = correlation(&state, &sign, &kernel, &g).unwrap();
        assert!((fast - brute).abs() < 1e-12);
    }

    #[test]
    fn bayes_rule_symmetry() {
        let xs = SampleSpace::new(["a", "b", "c", "d"]).unwrap();
        let state = ProbState::new(&xs, vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let y = Proposition::from_labels(&xs, &["a", "b"]).unwrap();
        let z = Proposition::from_labels(&xs, &["b", "c"]).unwrap();
        let p_y = state.probability(&y).unwrap();
        let p_z = state.probability(&z).unwrap();
        let p_z_given_y = state.condition(&y).unwrap().probability(&z).unwrap();
        let p_y_given_z = state.condition(&z).unwrap().probability(&y).unwrap();
        assert!((p_z_given_y * p_y - p_y_given_z * p_z).abs() < 1e-15);
    }

    #[test]
    fn density_reproduces_expectation() {
        let xs = SampleSpace::new(["a", "b", "c"]).unwrap();
        let state = ProbState::new(&xs, vec![0.25, 0.6, 0.15]).unwrap();
        let measure = ReferenceMeasure::new(&xs, vec![0.5, 2.0, 1.25]).unwrap();
        let f = Observable::new(&xs, vec![1.5, -0.5, 3.0]).unwrap();
        let density = measure.density(&state).unwrap();
        let via_measure = measure.integrate(&density.mul(&f).unwrap()).unwrap();
        let direct = state.expectation(&f).unwrap();
        assert!((via_measure - direct).abs() < 1e-12);

        // Counting measure: density equals the probability vector itself.
        let counting = ReferenceMeasure::counting(&xs);
        assert_eq!(counting.density(&state).unwrap().values(), state.probs());
    }

    #[test]
    fn proposition_algebra() {
        let xs = SampleSpace::new(["a", "b", "c"]).unwrap();
        let y = Proposition::from_labels(&xs, &["a", "b"]).unwrap();
        let z = Proposition::from_labels(&xs, &["b", "c"]).unwrap();
        let both = y.and(&z).unwrap();
        assert!(!both.contains(0) && both.contains(1) && !both.contains(2));
        let either = y.or(&z).unwrap();
        assert_eq!(either, Proposition::always(&xs));
        let neither = y.complement().and(&z.complement()).unwrap();
        assert_eq!(neither, Proposition::never(&xs));
        assert_eq!(both.to_observable().values(), &[0.0, 1.0, 0.0]);
    }
}
