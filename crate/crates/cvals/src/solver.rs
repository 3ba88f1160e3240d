//! Contextual-value inversion.
//!
//! A detector characterization defines a linear map `S` from detector
//! observables to system observables, `S(F_Y)(x) = sum_y S[x,y] f_Y(y)` with
//! `S[x,y] = P(y|x)`. Contextual values are weights `f_Y` satisfying
//! `S(F_Y) = F_X`; when the system is underdetermined the Moore-Penrose
//! pseudoinverse picks the least-norm solution
//! `f_Y = S+ f_X + (I - S+ S) g`, `g = 0` by default, which also minimizes
//! the single-shot variance bound `|F_Y|^2 = sum_y f_Y(y)^2`. The same
//! machinery covers continuous outcome spaces, either on explicit grids or
//! through closed forms for shifted-profile detectors, and weighted
//! postselected conditioning for invasive measurements.

use crate::detector::{postselected_cond_prob, DetectorResponse, EffectSet, OutcomeChannel};
use crate::error::{Error, Result};
use crate::linalg::{default_rel_tol, pinv, svd, Mat};
use crate::prob::{Observable, ProbState};

const EXACT_TOL: f64 = 1e-9;

/// The observable map `S`: rows indexed by system atoms, columns by detector
/// outcomes, entry `S[x,y] = P(y|x)`.
#[derive(Debug, Clone)]
pub struct ResponseMap {
    mat: Mat,
}

impl ResponseMap {
    /// Strict constructor: nonnegative entries, each row a distribution
    /// over outcomes within 1e-12 (renormalized exactly).
    pub fn new_stochastic(rows: Vec<Vec<f64>>) -> Result<Self> {
        let mut clean = Vec::with_capacity(rows.len());
        for (i, row) in rows.iter().enumerate() {
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid("response map entries must be finite"));
            }
            if let Some(v) = row.iter().find(|v| **v < -1e-12) {
                return Err(Error::invalid(format!(
                    "response map row {i} has negative entry {v}"
                )));
            }
            let sum: f64 = row.iter().map(|v| v.max(0.0)).sum();
            if (sum - 1.0).abs() > 1e-12 {
                return Err(Error::invalid(format!(
                    "response map row {i} sums to {sum}, expected 1"
                )));
            }
            clean.push(row.iter().map(|v| v.max(0.0) / sum).collect());
        }
        Ok(ResponseMap { mat: Mat::from_rows(&clean)? })
    }

    /// General linear-constraint matrix: nonnegative finite entries, but row
    /// sums unconstrained. Some published characterizations (and moment
    /// problems) are written directly as constraint rows that are not
    /// normalized likelihoods.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        for (i, row) in rows.iter().enumerate() {
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid("response map entries must be finite"));
            }
            if let Some(v) = row.iter().find(|v| **v < 0.0) {
                return Err(Error::invalid(format!(
                    "response map row {i} has negative entry {v}"
                )));
            }
        }
        Ok(ResponseMap { mat: Mat::from_rows(&rows)? })
    }

    /// `S[x,y] = E_y(x)`.
    pub fn from_effects(effects: &EffectSet) -> Self {
        let rows: Vec<Vec<f64>> = (0..effects.system().len())
            .map(|x| effects.effects().iter().map(|e| e.value(x)).collect())
            .collect();
        ResponseMap { mat: Mat::from_rows(&rows).expect("effects validated") }
    }

    pub fn from_response(resp: &DetectorResponse) -> Self {
        ResponseMap { mat: Mat::from_rows(resp.rows()).expect("response validated") }
    }

    pub fn matrix(&self) -> &Mat {
        &self.mat
    }

    /// Number of system atoms (rows).
    pub fn system_dim(&self) -> usize {
        self.mat.nrows()
    }

    /// Number of detector outcomes (columns).
    pub fn outcomes(&self) -> usize {
        self.mat.ncols()
    }
}

/// Contextual values with the diagnostics of the inversion that produced
/// them.
#[derive(Debug, Clone)]
pub struct CvSolution {
    /// One contextual value per detector outcome.
    pub values: Vec<f64>,
    /// Singular values of the solved map, descending.
    pub singular_values: Vec<f64>,
    /// Numerical rank at the cutoff used.
    pub rank: usize,
    /// `|S f_Y - f_X|_2`.
    pub residual: f64,
    /// `|F_Y|^2 = sum_y f_Y(y)^2`, the single-shot variance bound.
    pub norm_sq: f64,
    /// True when the residual is at solver tolerance, i.e. the target
    /// observable is exactly measurable in this context.
    pub exact: bool,
    /// Dimension of the solution family: outcomes minus rank.
    pub null_dim: usize,
}

impl CvSolution {
    fn from_values(map: &ResponseMap, target: &[f64], values: Vec<f64>, svd_info: (Vec<f64>, usize)) -> Self {
        let fitted = map.mat.matvec(&values);
        let residual = fitted
            .iter()
            .zip(target)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let norm_sq = values.iter().map(|v| v * v).sum();
        let target_norm = target.iter().map(|v| v * v).sum::<f64>().sqrt();
        let exact = residual <= EXACT_TOL * (1.0 + target_norm);
        let (singular_values, rank) = svd_info;
        let null_dim = values.len() - rank;
        CvSolution {
            values,
            singular_values,
            rank,
            residual,
            norm_sq,
            exact,
            null_dim,
        }
    }
}

fn rank_at_cutoff(sigma: &[f64], rel_tol: f64) -> usize {
    let cutoff = rel_tol * sigma.first().copied().unwrap_or(0.0);
    sigma.iter().filter(|s| **s > cutoff && **s > 0.0).count()
}

/// Moore-Penrose pseudoinverse of the response map. `rel_tol` is the
/// relative singular-value cutoff; `None` uses
/// `max(dims) * machine_epsilon * 64`.
pub fn pseudoinverse(map: &ResponseMap, rel_tol: Option<f64>) -> Result<Mat> {
    let tol = resolve_tol(map, rel_tol)?;
    pinv(&map.mat, tol)
}

fn resolve_tol(map: &ResponseMap, rel_tol: Option<f64>) -> Result<f64> {
    match rel_tol {
        Some(t) if t > 0.0 && t < 1.0 => Ok(t),
        Some(t) => Err(Error::invalid(format!(
            "singular-value cutoff {t} outside (0, 1)"
        ))),
        None => Ok(default_rel_tol(map.mat.nrows(), map.mat.ncols())),
    }
}

fn check_target(map: &ResponseMap, target: &[f64]) -> Result<()> {
    if target.len() != map.system_dim() {
        return Err(Error::dim(format!(
            "target has {} values for {} system atoms",
            target.len(),
            map.system_dim()
        )));
    }
    if target.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("target values must be finite"));
    }
    Ok(())
}

/// Solve `S f_Y = f_X` for contextual values.
///
/// Returns the least-norm solution plus an optional homogeneous part:
/// `f_Y = S+ f_X + (I - S+ S) g`. Inexact (least-squares) solutions are
/// returned with `exact = false` rather than rejected.
pub fn solve_contextual_values(
    map: &ResponseMap,
    target: &[f64],
    homogeneous: Option<&[f64]>,
) -> Result<CvSolution> {
    solve_with_tol(map, target, homogeneous, None)
}

/// [`solve_contextual_values`] with an explicit relative singular-value
/// cutoff; `None` uses the default (see [`pseudoinverse`]).
pub fn solve_with_tol(
    map: &ResponseMap,
    target: &[f64],
    homogeneous: Option<&[f64]>,
    rel_tol: Option<f64>,
) -> Result<CvSolution> {
    check_target(map, target)?;
    let tol = resolve_tol(map, rel_tol)?;
    let dec = svd(&map.mat)?;
    let rank = rank_at_cutoff(&dec.sigma, tol);
    let pinv_mat = pinv(&map.mat, tol)?;
    let mut values = pinv_mat.matvec(target);

    if let Some(g) = homogeneous {
        if g.len() != map.outcomes() {
            return Err(Error::dim(format!(
                "homogeneous part has {} values for {} outcomes",
                g.len(),
                map.outcomes()
            )));
        }
        // (I - S+ S) g projects g onto the null space of S.
        let sg = map.mat.matvec(g);
        let pinv_sg = pinv_mat.matvec(&sg);
        for ((v, gi), pg) in values.iter_mut().zip(g).zip(&pinv_sg) {
            *v += gi - pg;
        }
    }

    Ok(CvSolution::from_values(map, target, values, (dec.sigma, rank)))
}

/// Solve with some outcomes pinned to fixed values; the pinned columns are
/// substituted out and the remaining outcomes solved least-norm. Errors with
/// no-solution if the pinned system is inconsistent.
pub fn solution_family(
    map: &ResponseMap,
    target: &[f64],
    pinned: &[(usize, f64)],
) -> Result<CvSolution> {
    check_target(map, target)?;
    let n = map.outcomes();
    for &(idx, v) in pinned {
        if idx >= n {
            return Err(Error::invalid(format!(
                "pinned outcome index {idx} out of range for {n} outcomes"
            )));
        }
        if !v.is_finite() {
            return Err(Error::invalid("pinned values must be finite"));
        }
    }
    let mut seen = vec![false; n];
    for &(idx, _) in pinned {
        if seen[idx] {
            return Err(Error::invalid(format!("outcome {idx} pinned twice")));
        }
        seen[idx] = true;
    }

    let free: Vec<usize> = (0..n).filter(|i| !seen[*i]).collect();

    // Reduced target: move pinned columns to the right-hand side.
    let mut reduced_target = target.to_vec();
    for &(idx, v) in pinned {
        for (x, t) in reduced_target.iter_mut().enumerate() {
            *t -= map.mat[(x, idx)] * v;
        }
    }

    let mut values = vec![0.0; n];
    for &(idx, v) in pinned {
        values[idx] = v;
    }

    let (sigma, rank) = if free.is_empty() {
        (Vec::new(), 0)
    } else {
        let reduced_rows: Vec<Vec<f64>> = (0..map.system_dim())
            .map(|x| free.iter().map(|&y| map.mat[(x, y)]).collect())
            .collect();
        let reduced = Mat::from_rows(&reduced_rows)?;
        let tol = default_rel_tol(reduced.nrows(), reduced.ncols());
        let dec = svd(&reduced)?;
        let rank = rank_at_cutoff(&dec.sigma, tol);
        let solved = pinv(&reduced, tol)?.matvec(&reduced_target);
        for (slot, v) in free.iter().zip(&solved) {
            values[*slot] = *v;
        }
        (dec.sigma, rank)
    };

    let solution = CvSolution::from_values(map, target, values, (sigma, rank));
    if !solution.exact {
        return Err(Error::NoSolution(format!(
            "pinned values admit no exact solution (residual {:.3e})",
            solution.residual
        )));
    }
    Ok(solution)
}

/// Single-shot variance bound `|F_Y|^2`, divided by the trial count when
/// given: the mean squared error of an n-trial average obeys
/// `MSE <= |F_Y|^2 / n`.
pub fn variance_bound(solution: &CvSolution, trials: Option<u64>) -> Result<f64> {
    match trials {
        None => Ok(solution.norm_sq),
        Some(0) => Err(Error::invalid("trial count must be at least 1")),
        Some(n) => Ok(solution.norm_sq / n as f64),
    }
}

/// Contextual values for the n-th power of the target observable. These are
/// generally not powers of the first-moment contextual values.
pub fn moment_contextual_values(
    map: &ResponseMap,
    target: &[f64],
    n: u32,
) -> Result<CvSolution> {
    check_target(map, target)?;
    let powered: Vec<f64> = target.iter().map(|v| v.powi(n as i32)).collect();
    solve_contextual_values(map, &powered, None)
}

/// The n-th moment recovered from length-n measurement sequences:
/// `sum_{y1..yn} f(y1) ... f(yn) <E_y1 ... E_yn>`. For noninvasive
/// detectors this equals `<F_X^n>`, unlike the n-th power statistics of
/// single outcomes.
pub fn sequence_moment(
    state: &ProbState,
    effects: &EffectSet,
    cvs: &[f64],
    n: u32,
) -> Result<f64> {
    if cvs.len() != effects.len() {
        return Err(Error::dim(format!(
            "{} contextual values for {} outcomes",
            cvs.len(),
            effects.len()
        )));
    }
    if n == 0 {
        return Ok(1.0);
    }
    let n_y = effects.len();
    let mut total = 0.0;
    let mut tuple = vec![0usize; n as usize];
    loop {
        // Weight of this outcome tuple times its sequence probability.
        let mut weight = 1.0;
        let mut product = Observable::constant(state.space(), 1.0);
        for &y in &tuple {
            weight *= cvs[y];
            product = product.mul(effects.effect(y))?;
        }
        total += weight * state.expectation(&product)?;

        // Advance the mixed-radix counter.
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

/// CV-weighted postselected conditioned average
/// `sum_y f_Y(y) P(y|z) = <F_X(E'_z)> / <E(E'_z)>`; always inside the
/// contextual-value range, and inside the eigenvalue range when the channel
/// is noninvasive.
pub fn conditioned_average(
    state: &ProbState,
    channel: &OutcomeChannel,
    cvs: &[f64],
    z_effect: &Observable,
) -> Result<f64> {
    if cvs.len() != channel.outcomes() {
        return Err(Error::dim(format!(
            "{} contextual values for {} outcomes",
            cvs.len(),
            channel.outcomes()
        )));
    }
    let mut total = 0.0;
    for (y, f) in cvs.iter().enumerate() {
        total += f * postselected_cond_prob(state, channel, y, z_effect)?;
    }
    Ok(total)
}

// ---------------------------------------------------------------------------
// Continuous outcome spaces
// ---------------------------------------------------------------------------

/// Symmetric outcome-noise profile of a continuous pointer detector, with
/// closed-form autocorrelation `a = integral of p^2` and shifted overlap
/// `b(z) = integral of p(y-z) p(y+z) dy`.
#[derive(Debug, Clone, PartialEq)]
pub enum ContinuousProfile {
    /// `p(y) = exp(-y^2 / 2 sigma^2) / (sigma sqrt(2 pi))`.
    Gaussian { sigma: f64 },
    /// `p(y) = exp(-|y| / scale) / (2 scale)`.
    Laplace { scale: f64 },
    /// `p(y) = 1 / (2 half_width)` on `[-half_width, half_width]`.
    Tophat { half_width: f64 },
}

impl ContinuousProfile {
    pub fn gaussian(sigma: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::invalid(format!("gaussian width sigma={sigma} must be positive")));
        }
        Ok(ContinuousProfile::Gaussian { sigma })
    }

    pub fn laplace(scale: f64) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::invalid(format!("laplace scale={scale} must be positive")));
        }
        Ok(ContinuousProfile::Laplace { scale })
    }

    pub fn tophat(half_width: f64) -> Result<Self> {
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::invalid(format!(
                "tophat half-width={half_width} must be positive"
            )));
        }
        Ok(ContinuousProfile::Tophat { half_width })
    }

    /// Unit-variance profile of each kind, so different shapes are compared
    /// at equal pointer noise power.
    pub fn unit_variance_gaussian() -> Self {
        ContinuousProfile::Gaussian { sigma: 1.0 }
    }

    pub fn unit_variance_laplace() -> Self {
        // Variance of the two-sided exponential is 2 scale^2.
        ContinuousProfile::Laplace { scale: 1.0 / std::f64::consts::SQRT_2 }
    }

    pub fn unit_variance_tophat() -> Self {
        // Variance of the flat profile is half_width^2 / 3.
        ContinuousProfile::Tophat { half_width: 3.0f64.sqrt() }
    }

    pub fn density(&self, y: f64) -> f64 {
        match *self {
            ContinuousProfile::Gaussian { sigma } => {
                (-y * y / (2.0 * sigma * sigma)).exp()
                    / (sigma * (2.0 * std::f64::consts::PI).sqrt())
            }
            ContinuousProfile::Laplace { scale } => {
                (-y.abs() / scale).exp() / (2.0 * scale)
            }
            ContinuousProfile::Tophat { half_width } => {
                let h = 1.0 / (2.0 * half_width);
                if y.abs() < half_width {
                    h
                } else if y.abs() == half_width {
                    // Midpoint convention at the jump.
                    0.5 * h
                } else {
                    0.0
                }
            }
        }
    }

    /// `a = integral of p(y)^2 dy`.
    pub fn autocorrelation(&self) -> f64 {
        match *self {
            ContinuousProfile::Gaussian { sigma } => {
                1.0 / (2.0 * sigma * std::f64::consts::PI.sqrt())
            }
            ContinuousProfile::Laplace { scale } => 1.0 / (4.0 * scale),
            ContinuousProfile::Tophat { half_width } => 1.0 / (2.0 * half_width),
        }
    }

    /// `b(z) = integral of p(y-z) p(y+z) dy`; symmetric in `z`, equal to
    /// `a` at `z = 0`, decreasing in `|z|`.
    pub fn overlap(&self, z: f64) -> f64 {
        let z = z.abs();
        match *self {
            ContinuousProfile::Gaussian { sigma } => {
                self.autocorrelation() * (-(z * z) / (sigma * sigma)).exp()
            }
            ContinuousProfile::Laplace { scale } => {
                (-(2.0 * z) / scale).exp() * (2.0 * z + scale) / (4.0 * scale * scale)
            }
            ContinuousProfile::Tophat { half_width } => {
                if z < half_width {
                    (half_width - z) / (2.0 * half_width * half_width)
                } else {
                    0.0
                }
            }
        }
    }

    /// Locations where the density is not smooth; quadratures should place
    /// segment boundaries here.
    pub fn kinks(&self) -> Vec<f64> {
        match *self {
            ContinuousProfile::Gaussian { .. } => Vec::new(),
            ContinuousProfile::Laplace { .. } => vec![0.0],
            ContinuousProfile::Tophat { half_width } => vec![-half_width, half_width],
        }
    }

    pub fn std_dev(&self) -> f64 {
        match *self {
            ContinuousProfile::Gaussian { sigma } => sigma,
            ContinuousProfile::Laplace { scale } => std::f64::consts::SQRT_2 * scale,
            ContinuousProfile::Tophat { half_width } => half_width / 3.0f64.sqrt(),
        }
    }

    /// Half-width of the numerically significant support.
    pub fn support_radius(&self) -> f64 {
        match *self {
            ContinuousProfile::Gaussian { sigma } => 10.0 * sigma,
            ContinuousProfile::Laplace { scale } => 40.0 * scale,
            ContinuousProfile::Tophat { half_width } => half_width,
        }
    }
}

/// Closed-form contextual-value function for a two-outcome system read out
/// through a shifted continuous pointer: outcome densities `p(y - eps_h)`
/// and `p(y + eps_v)`.
#[derive(Debug, Clone)]
pub struct ContinuousCv {
    pub profile: ContinuousProfile,
    pub eps_h: f64,
    pub eps_v: f64,
    /// Autocorrelation `a`.
    pub a: f64,
    /// Overlap `b` at the effective half-separation `(eps_h + eps_v)/2`.
    pub b: f64,
    /// Target eigenvalues assigned to the two system atoms.
    pub f_h: f64,
    pub f_v: f64,
}

impl ContinuousCv {
    /// Symmetric-normalized even part: `v+ = [p(y-eps_h) + p(y+eps_v)]/(a+b)`.
    pub fn v_plus(&self, y: f64) -> f64 {
        (self.profile.density(y - self.eps_h) + self.profile.density(y + self.eps_v))
            / (self.a + self.b)
    }

    /// Antisymmetric-normalized odd part: `v- = [p(y-eps_h) - p(y+eps_v)]/(a-b)`.
    pub fn v_minus(&self, y: f64) -> f64 {
        (self.profile.density(y - self.eps_h) - self.profile.density(y + self.eps_v))
            / (self.a - self.b)
    }

    /// `f_Y(y) = f_h (v+ + v-)/2 + f_v (v+ - v-)/2`.
    pub fn eval(&self, y: f64) -> f64 {
        let plus = self.v_plus(y);
        let minus = self.v_minus(y);
        self.f_h * 0.5 * (plus + minus) + self.f_v * 0.5 * (plus - minus)
    }

    /// Norm bound `|F_Y|^2 = 2/(a - b)` for a sign target `(+1, -1)`; the
    /// amplification cost of the inversion.
    pub fn sign_norm_bound(&self) -> f64 {
        2.0 / (self.a - self.b)
    }
}

/// Build the closed-form contextual values for a shifted-profile detector.
/// `target` holds the two eigenvalues `(f_h, f_v)`.
pub fn continuous_cv(
    profile: &ContinuousProfile,
    eps_h: f64,
    eps_v: f64,
    target: (f64, f64),
) -> Result<ContinuousCv> {
    if !eps_h.is_finite() || !eps_v.is_finite() {
        return Err(Error::invalid("shifts must be finite"));
    }
    let a = profile.autocorrelation();
    let b = profile.overlap(0.5 * (eps_h + eps_v));
    if a - b <= 1e-14 * a {
        return Err(Error::invalid(
            "degenerate detector: outcome densities coincide (a = b), \
             the observable is not resolvable",
        ));
    }
    Ok(ContinuousCv {
        profile: profile.clone(),
        eps_h,
        eps_v,
        a,
        b,
        f_h: target.0,
        f_v: target.1,
    })
}

/// Quadrature grid: strictly ascending nodes with trapezoid weights.
#[derive(Debug, Clone)]
pub struct Grid {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl Grid {
    pub fn uniform(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::invalid(format!("grid bounds [{lo}, {hi}] must be finite and increasing")));
        }
        if n < 2 {
            return Err(Error::invalid("grid needs at least 2 nodes"));
        }
        let h = (hi - lo) / (n - 1) as f64;
        let nodes: Vec<f64> = (0..n).map(|i| lo + h * i as f64).collect();
        Grid::from_nodes(nodes)
    }

    /// Trapezoid weights for arbitrary ascending nodes.
    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::invalid("grid needs at least 2 nodes"));
        }
        if nodes.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("grid nodes must be finite"));
        }
        if nodes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("grid nodes must be strictly increasing"));
        }
        let n = nodes.len();
        let mut weights = vec![0.0; n];
        for i in 0..n {
            let left = if i == 0 { nodes[0] } else { nodes[i - 1] };
            let right = if i == n - 1 { nodes[n - 1] } else { nodes[i + 1] };
            weights[i] = 0.5 * (right - left);
        }
        Ok(Grid { nodes, weights })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Trapezoid integral of sampled values.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        self.weights.iter().zip(values).map(|(w, v)| w * v).sum()
    }
}

/// Discretized inversion of a shifted-profile detector: build the
/// `2 x N` quadrature-weighted response map on the grid and solve for
/// least-norm grid contextual values. They approximate the closed form of
/// [`continuous_cv`] pointwise.
pub fn grid_cv(
    profile: &ContinuousProfile,
    eps_h: f64,
    eps_v: f64,
    grid: &Grid,
    target: (f64, f64),
) -> Result<CvSolution> {
    let row = |shift: f64| -> Vec<f64> {
        grid.nodes
            .iter()
            .zip(&grid.weights)
            .map(|(y, w)| profile.density(y - shift) * w)
            .collect()
    };
    let mut rows = vec![row(eps_h), row(-eps_v)];
    for (i, r) in rows.iter_mut().enumerate() {
        let sum: f64 = r.iter().sum();
        if sum <= 1e-6 {
            return Err(Error::invalid(format!(
                "grid misses the support of outcome density {i} (row mass {sum:.3e})"
            )));
        }
        // Quadrature rows are renormalized to exact unit mass so the map is
        // a genuine discretized likelihood.
        for v in r.iter_mut() {
            *v /= sum;
        }
    }
    let map = ResponseMap::new_stochastic(rows)?;
    let solution = solve_contextual_values(&map, &[target.0, target.1], None)?;
    if solution.rank < 2 {
        return Err(Error::numerical(
            "grid response map is rank-deficient: the two outcome densities \
             are numerically indistinguishable on this grid",
        ));
    }
    Ok(solution)
}
