//! Normalized volume-element priors and their marginal curves.
//!
//! Every built-in prior is isotropic: its density is `k(q, r) sin θ1 / N`,
//! where `k` is the volume element with the `sin θ1` factor removed and `N`
//! the quadrature-computed normalization. Posteriors (see [`crate::bayes`])
//! reuse the same representation with likelihood factors ("tilts") attached.

use std::f64::consts::PI;
use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;

use crate::bayes::LikelihoodField;
use crate::error::{domain, Error, Result};
use crate::metrics::fisher::fisher_block_c;
use crate::quadrature::{integrate, Axis, IntegrationResult, IntegrationSpec, DEFAULT_ABS_TOL};
use crate::special;

/// Smallest `s = 1 − r` integrated over; the neglected sliver carries relative
/// mass below `1e-11` for every prior here (the worst is `p_B`, `∝ s^{-1/2}`).
pub const S_FLOOR: f64 = 1e-24;
/// Smallest `r` integrated over; every kernel vanishes at least like `r²`.
pub const R_FLOOR: f64 = 1e-12;

const FOUR_PI: f64 = 4.0 * PI;
const NORMALIZATION_TOL_1D: f64 = 1e-13;

/// Printed normalization of the Husimi prior.
pub const P_F_REFERENCE: f64 = 1.39350989;
/// Printed normalization of the q = 1 extended Husimi prior.
pub const P_FQ1_REFERENCE: f64 = 0.24559293;

/// `π(1 + log 4)/24`, the angle- and radius-integrated truncated Bures volume at `q`, times `q`.
pub fn bures_truncated_q_constant() -> f64 {
    PI * (1.0 + 4f64.ln()) / 24.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PriorName {
    PB,
    PBtrunc,
    PF,
    PFq1,
    PBqext4D,
    PFqext4D,
}

impl PriorName {
    pub const RANKED: [PriorName; 4] = [PriorName::PB, PriorName::PBtrunc, PriorName::PF, PriorName::PFq1];
    pub const ALL: [PriorName; 6] = [
        PriorName::PB,
        PriorName::PBtrunc,
        PriorName::PF,
        PriorName::PFq1,
        PriorName::PBqext4D,
        PriorName::PFqext4D,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PriorName::PB => "p_B",
            PriorName::PBtrunc => "p_Btrunc",
            PriorName::PF => "p_F",
            PriorName::PFq1 => "p_Fq1",
            PriorName::PBqext4D => "p_Bqext4D",
            PriorName::PFqext4D => "p_Fqext4D",
        }
    }

    pub fn is_4d(self) -> bool {
        matches!(self, PriorName::PBqext4D | PriorName::PFqext4D)
    }
}

impl fmt::Display for PriorName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PriorName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        PriorName::ALL
            .into_iter()
            .find(|n| n.as_str() == s.trim())
            .ok_or_else(|| Error::UnknownPrior(s.to_string()))
    }
}

/// Density convention for the Bures prior `p_B`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PbConvention {
    /// `r² sin θ1/(π² √(1 − r²))`, the true `√det` of the Bures metric.
    Sqrt,
    /// `r² sin θ1/(1 − r²)`, not normalizable on the full ball; every prior is
    /// then restricted to `r ≤ 1 − delta` so relative entropies stay finite.
    Printed { delta: f64 },
}

impl fmt::Display for PbConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PbConvention::Sqrt => f.write_str("sqrt"),
            PbConvention::Printed { delta } => write!(f, "printed(delta={delta})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriorConfig {
    pub q_min: f64,
    pub q_max: f64,
    pub pb_convention: PbConvention,
    /// Relative tolerance for integrals of up to three dimensions.
    pub rel_tol: f64,
    /// Relative tolerance for genuinely four-dimensional integrals.
    pub rel_tol_4d: f64,
    pub abs_tol: f64,
}

impl Default for PriorConfig {
    fn default() -> Self {
        Self {
            q_min: 0.5,
            q_max: 500.0,
            pb_convention: PbConvention::Sqrt,
            rel_tol: 1e-8,
            rel_tol_4d: 1e-5,
            abs_tol: DEFAULT_ABS_TOL,
        }
    }
}

impl PriorConfig {
    pub fn r_max(&self) -> f64 {
        match self.pb_convention {
            PbConvention::Sqrt => 1.0,
            PbConvention::Printed { delta } => 1.0 - delta,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.q_min > 0.0 && self.q_min < self.q_max) {
            return domain(format!("need 0 < q_min < q_max, got [{}, {}]", self.q_min, self.q_max));
        }
        if !(self.rel_tol > 0.0 && self.rel_tol_4d > 0.0 && self.abs_tol > 0.0) {
            return domain("tolerances must be positive");
        }
        if let PbConvention::Printed { delta } = self.pb_convention {
            if !(delta > 0.0 && delta < 1.0) {
                return domain(format!("truncation delta {delta} outside (0, 1)"));
            }
        }
        Ok(())
    }
}

/// Coordinate box of a prior.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PriorDomain {
    /// `(r, θ1, θ2) ∈ [0, r_max] × [0, π] × [0, 2π]`.
    Bloch { r_max: f64 },
    /// `(q, r, θ1, θ2)` with `q ∈ [q_min, q_max]`.
    BlochQ { r_max: f64, q_min: f64, q_max: f64 },
}

impl PriorDomain {
    pub fn dims(&self) -> usize {
        match self {
            PriorDomain::Bloch { .. } => 3,
            PriorDomain::BlochQ { .. } => 4,
        }
    }

    pub fn r_max(&self) -> f64 {
        match *self {
            PriorDomain::Bloch { r_max } | PriorDomain::BlochQ { r_max, .. } => r_max,
        }
    }

    pub fn q_range(&self) -> Option<(f64, f64)> {
        match *self {
            PriorDomain::Bloch { .. } => None,
            PriorDomain::BlochQ { q_min, q_max, .. } => Some((q_min, q_max)),
        }
    }

    /// Integration axes: `[q,] u, θ1, θ2` with the radial coordinate
    /// `u = ln(s/r)`, `s = 1 − r`. Both the pure-state edge and the centre
    /// become smooth exponential tails, and `r`, `s` are each recovered
    /// without cancellation.
    pub fn axes(&self) -> Vec<Axis> {
        let mut axes = Vec::with_capacity(4);
        if let Some((lo, hi)) = self.q_range() {
            axes.push(Axis::log_scale(lo, hi));
        }
        let s_min = (1.0 - self.r_max()).max(S_FLOOR);
        axes.push(Axis::new((s_min / (1.0 - s_min)).ln(), (1.0 / R_FLOOR).ln()).with_pieces(4));
        axes.push(Axis::new(0.0, PI));
        axes.push(Axis::new(0.0, 2.0 * PI));
        axes
    }

    /// Axes of the angle-integrated (radial) problem: `[q,] u`.
    pub fn radial_axes(&self) -> Vec<Axis> {
        let mut axes = self.axes();
        axes.truncate(axes.len() - 2);
        axes
    }

    /// Coordinates of a point given as `[q,] r, θ1, θ2` (`q = 1` on the Bloch domain).
    pub fn point(&self, x: &[f64]) -> Coords {
        let (q, rest) = match self {
            PriorDomain::Bloch { .. } => (1.0, x),
            PriorDomain::BlochQ { .. } => (x[0], &x[1..]),
        };
        Coords { q, r: rest[0], s: 1.0 - rest[0], theta1: rest[1], theta2: rest[2] }
    }

    /// Coordinates of an integration node `[q,] u, θ1, θ2` on [`Self::axes`],
    /// with the Jacobian `dr/du`.
    pub fn node(&self, x: &[f64]) -> (Coords, f64) {
        let (q, rest) = match self {
            PriorDomain::Bloch { .. } => (1.0, x),
            PriorDomain::BlochQ { .. } => (x[0], &x[1..]),
        };
        let (r, s, jac) = from_u(rest[0]);
        (Coords { q, r, s, theta1: rest[1], theta2: rest[2] }, jac)
    }

    /// Whether `(q, r)` with complement `s` lies inside the box, excluding the
    /// measure-zero sets `r = 0` and `s = 0`.
    pub fn contains(&self, q: f64, r: f64, s: f64) -> bool {
        let q_ok = self.q_range().map_or(true, |(lo, hi)| q >= lo && q <= hi);
        q_ok && r > 0.0 && s > 0.0 && s >= 1.0 - self.r_max()
    }
}

/// `(r, s, dr/du)` at `u = ln(s/r)`.
fn from_u(u: f64) -> (f64, f64, f64) {
    let r = 1.0 / (1.0 + u.exp());
    let s = 1.0 / (1.0 + (-u).exp());
    (r, s, r * s)
}

/// A point of a prior's domain, with the radial complement carried exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coords {
    pub q: f64,
    pub r: f64,
    /// `1 − r`.
    pub s: f64,
    pub theta1: f64,
    pub theta2: f64,
}

type Radial = Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>;

/// A named probability density over a [`PriorDomain`].
#[derive(Clone)]
pub struct PriorDensity {
    name: String,
    domain: PriorDomain,
    radial: Radial,
    tilts: Vec<LikelihoodField>,
    normalization: f64,
    reference: Option<f64>,
    evidence: Option<f64>,
    config: PriorConfig,
}

impl fmt::Debug for PriorDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PriorDensity")
            .field("name", &self.name)
            .field("domain", &self.domain)
            .field("tilts", &self.tilts)
            .field("normalization", &self.normalization)
            .field("evidence", &self.evidence)
            .finish()
    }
}

impl PriorDensity {
    /// A prior from an arbitrary isotropic volume element `k(q, r)` (without
    /// `sin θ1`), normalized by quadrature.
    pub fn custom<F>(name: impl Into<String>, domain: PriorDomain, config: PriorConfig, k: F) -> Result<Self>
    where
        F: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        Self::custom_with_complement(name, domain, config, move |q, r, _| k(q, r))
    }

    /// As [`Self::custom`], with `k(q, r, s)` also receiving `s = 1 − r`.
    pub fn custom_with_complement<F>(
        name: impl Into<String>,
        domain: PriorDomain,
        config: PriorConfig,
        k: F,
    ) -> Result<Self>
    where
        F: Fn(f64, f64, f64) -> f64 + Send + Sync + 'static,
    {
        config.validate()?;
        let mut p = Self {
            name: name.into(),
            domain,
            radial: Arc::new(k),
            tilts: Vec::new(),
            normalization: 1.0,
            reference: None,
            evidence: None,
            config,
        };
        // one-dimensional normalizations are cheap; take them to near round-off
        let tol = if domain.dims() == 3 { NORMALIZATION_TOL_1D.min(config.rel_tol) } else { config.rel_tol };
        let mass = p.radial_integral(|_, _, _| 1.0, tol)?;
        let n = mass.value;
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::NonFiniteNormalization(format!("{}: raw mass {n}", p.name)));
        }
        p.normalization = n;
        Ok(p)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn domain(&self) -> PriorDomain {
        self.domain
    }

    pub fn config(&self) -> &PriorConfig {
        &self.config
    }

    /// Constant dividing the raw volume element (for a posterior, times the evidence).
    pub fn normalization(&self) -> f64 {
        self.normalization
    }

    /// The printed normalization this prior is expected to reproduce, if any.
    pub fn reference_normalization(&self) -> Option<f64> {
        self.reference
    }

    /// Evidence of the last Bayes update, for posteriors.
    pub fn evidence(&self) -> Option<f64> {
        self.evidence
    }

    pub fn likelihoods(&self) -> &[LikelihoodField] {
        &self.tilts
    }

    pub fn is_isotropic(&self) -> bool {
        self.tilts.is_empty()
    }

    /// Raw volume element without `sin θ1` at `(q, r)`; zero outside the domain.
    pub fn raw_radial(&self, q: f64, r: f64) -> f64 {
        self.raw_radial_c(q, r, 1.0 - r)
    }

    /// [`Self::raw_radial`] with the complement `s = 1 − r` supplied.
    pub fn raw_radial_c(&self, q: f64, r: f64, s: f64) -> f64 {
        if !self.domain.contains(q, r, s) {
            return 0.0;
        }
        (self.radial)(q, r, s)
    }

    fn tilt(&self, c: &Coords) -> f64 {
        self.tilts.iter().map(|l| l.eval(c.q, c.r, c.theta1, c.theta2)).product()
    }

    /// Probability density at coordinates `[q,] r, θ1, θ2`, Jacobian included.
    pub fn density(&self, x: &[f64]) -> f64 {
        self.density_at(&self.domain.point(x))
    }

    pub fn density_at(&self, c: &Coords) -> f64 {
        let k = self.raw_radial_c(c.q, c.r, c.s);
        if k == 0.0 {
            return 0.0;
        }
        k * c.theta1.sin() * self.tilt(c) / self.normalization
    }

    pub(crate) fn radial_tol(&self) -> f64 {
        self.config.rel_tol
    }

    pub(crate) fn full_tol(&self) -> f64 {
        if self.domain.dims() >= 4 {
            self.config.rel_tol_4d
        } else {
            self.config.rel_tol
        }
    }

    /// `4π ∫ k(q, r) g(q, r, s) d[q] dr` over the domain.
    pub(crate) fn radial_integral<G>(&self, g: G, rel: f64) -> Result<IntegrationResult>
    where
        G: Fn(f64, f64, f64) -> f64 + Sync,
    {
        let spec = IntegrationSpec::new(self.domain.radial_axes())?.with_tolerances(rel, self.config.abs_tol)?;
        let is_4d = self.domain.dims() == 4;
        let f = |x: &[f64]| {
            let (q, u) = if is_4d { (x[0], x[1]) } else { (1.0, x[0]) };
            let (r, s, jac) = from_u(u);
            let k = self.raw_radial_c(q, r, s);
            if k == 0.0 {
                0.0
            } else {
                FOUR_PI * jac * k * g(q, r, s)
            }
        };
        require(integrate(&f, &spec)?)
    }

    /// `∫ f` over the full domain.
    pub(crate) fn domain_integral<F>(&self, f: F, rel: f64) -> Result<IntegrationResult>
    where
        F: Fn(&Coords) -> f64 + Sync,
    {
        let spec = IntegrationSpec::new(self.domain.axes())?.with_tolerances(rel, self.config.abs_tol)?;
        let d = self.domain;
        require(integrate(
            &|x: &[f64]| {
                let (c, jac) = d.node(x);
                jac * f(&c)
            },
            &spec,
        )?)
    }

    /// Total probability mass by quadrature (should be 1).
    pub fn total_mass(&self) -> Result<f64> {
        if self.is_isotropic() {
            Ok(self.radial_integral(|_, _, _| 1.0, self.radial_tol())?.value / self.normalization)
        } else {
            Ok(self.domain_integral(|c| self.density_at(c), self.full_tol())?.value)
        }
    }

    /// A copy with one more likelihood factor and the given new normalization.
    pub(crate) fn tilted(&self, like: LikelihoodField, evidence: f64, name: String) -> Self {
        let mut p = self.clone();
        p.tilts.push(like);
        p.normalization *= evidence;
        p.evidence = Some(evidence);
        p.reference = None;
        p.name = name;
        p
    }
}

pub(crate) fn require(r: IntegrationResult) -> Result<IntegrationResult> {
    if r.converged {
        Ok(r)
    } else {
        Err(Error::QuadratureFailure { value: r.value, error: r.error_estimate, evals: r.evals })
    }
}

/// Truncated extended Bures volume element without `sin θ1`:
/// `q W^q |log W| (1 − W^q)² / (8 (1 − r²)(1 + W^q)⁴)`.
pub fn bures_truncated_volume(q: f64, r: f64) -> f64 {
    bures_truncated_volume_c(q, r, 1.0 - r)
}

/// [`bures_truncated_volume`] with the complement `s = 1 − r` supplied.
pub fn bures_truncated_volume_c(q: f64, r: f64, s: f64) -> f64 {
    let lw = special::log_w_c(r, s);
    let wq = (q * lw).exp();
    let one_m = -(q * lw).exp_m1();
    q * wq * (-lw) * one_m * one_m / (8.0 * s * (1.0 + r) * (1.0 + wq).powi(4))
}

fn raw_kernel(name: PriorName, config: &PriorConfig) -> Radial {
    match name {
        PriorName::PB => match config.pb_convention {
            PbConvention::Sqrt => Arc::new(|_, r, s| r * r / (s * (1.0 + r)).sqrt()),
            PbConvention::Printed { .. } => Arc::new(|_, r, s| r * r / (s * (1.0 + r))),
        },
        PriorName::PBtrunc => Arc::new(|_, r, s| -r * r * special::log_w_c(r, s) / 32.0),
        PriorName::PF => {
            Arc::new(|_, r, s| special::husimi_radial_c(r, s).sqrt() * special::husimi_tangential_c(r, s))
        }
        PriorName::PFq1 => Arc::new(|_, r, s| {
            special::husimi_q1_block_det_c(r, s).max(0.0).sqrt() * special::husimi_tangential_c(r, s)
        }),
        PriorName::PBqext4D => Arc::new(bures_truncated_volume_c),
        PriorName::PFqext4D => {
            Arc::new(|q, r, s| fisher_block_c(q, r, s).map(|b| b.volume()).unwrap_or(f64::NAN))
        }
    }
}

/// Builds and normalizes a named prior.
pub fn build_prior(name: PriorName, config: &PriorConfig) -> Result<PriorDensity> {
    config.validate()?;
    let r_max = config.r_max();
    let domain = if name.is_4d() {
        if !config.q_max.is_finite() {
            return Err(Error::NonFiniteNormalization(format!(
                "{name}: the q-integral of the volume element diverges for unbounded q"
            )));
        }
        PriorDomain::BlochQ { r_max, q_min: config.q_min, q_max: config.q_max }
    } else {
        PriorDomain::Bloch { r_max }
    };
    let reference = match (name, config.pb_convention) {
        (PriorName::PB, PbConvention::Sqrt) => Some(PI * PI),
        (PriorName::PBtrunc, PbConvention::Sqrt) => Some(bures_truncated_q_constant()),
        (PriorName::PF, PbConvention::Sqrt) => Some(P_F_REFERENCE),
        (PriorName::PFq1, PbConvention::Sqrt) => Some(P_FQ1_REFERENCE),
        (PriorName::PBqext4D, PbConvention::Sqrt) => {
            Some(bures_truncated_q_constant() * (config.q_max / config.q_min).ln())
        }
        _ => None,
    };
    let kernel = raw_kernel(name, config);
    let mut p = PriorDensity::custom_with_complement(name.as_str(), domain, *config, move |q, r, s| kernel(q, r, s))?;
    p.reference = reference;
    Ok(p)
}

/// Builds every prior in `names` concurrently.
pub fn build_priors(names: &[PriorName], config: &PriorConfig) -> Result<Vec<PriorDensity>> {
    names.par_iter().map(|&n| build_prior(n, config)).collect()
}

/// Coordinate of a marginal curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MarginalVar {
    R,
    Q,
}

impl fmt::Display for MarginalVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MarginalVar::R => "r",
            MarginalVar::Q => "q",
        })
    }
}

impl FromStr for MarginalVar {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "r" => Ok(MarginalVar::R),
            "q" => Ok(MarginalVar::Q),
            other => Err(Error::Parse(format!("unknown marginal variable `{other}`"))),
        }
    }
}

/// Whether marginals are divided by the prior's normalization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MarginalMode {
    Normalized,
    /// Integrated raw volume element.
    Raw,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarginalCurve {
    pub prior: String,
    pub variable: MarginalVar,
    pub mode: MarginalMode,
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
}

impl MarginalCurve {
    /// Trapezoid rule over the grid.
    pub fn trapezoid(&self) -> f64 {
        self.grid
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
            .sum()
    }

    /// Grid point with the largest value.
    pub fn argmax(&self) -> Option<(f64, f64)> {
        let k = (0..self.values.len()).max_by(|&a, &b| self.values[a].total_cmp(&self.values[b]))?;
        Some((self.grid[k], self.values[k]))
    }

    /// Whether the values rise to a single maximum and then fall.
    pub fn is_unimodal(&self) -> bool {
        let Some(k) = (0..self.values.len()).max_by(|&a, &b| self.values[a].total_cmp(&self.values[b])) else {
            return false;
        };
        self.values[..=k].windows(2).all(|w| w[1] >= w[0]) && self.values[k..].windows(2).all(|w| w[1] <= w[0])
    }

    /// CSV with header `variable,value,density`, 17 significant digits.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::Parse(format!("CSV output: {e}"));
        w.write_record(["variable", "value", "density"]).map_err(io)?;
        let var = self.variable.to_string();
        for (x, y) in self.grid.iter().zip(&self.values) {
            w.write_record([var.as_str(), &format!("{x:.16e}"), &format!("{y:.16e}")]).map_err(io)?;
        }
        w.flush().map_err(|e| Error::Parse(format!("CSV output: {e}")))?;
        Ok(())
    }
}

/// Default grids: `n` points on `[0, r_max)` for `r`, `n` log-spaced points on `[q_min, q_max]` for `q`.
pub fn default_grid(prior: &PriorDensity, var: MarginalVar, n: usize) -> Result<Vec<f64>> {
    let n = n.max(2);
    match var {
        MarginalVar::R => {
            let r_max = prior.domain.r_max();
            Ok((0..n).map(|i| r_max * i as f64 / n as f64).collect())
        }
        MarginalVar::Q => {
            let (lo, hi) = prior
                .domain
                .q_range()
                .ok_or_else(|| Error::Domain(format!("{} has no q coordinate", prior.name)))?;
            Ok(log_grid(lo, hi, n))
        }
    }
}

pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| {
            if i + 1 == n {
                hi
            } else {
                (a + (b - a) * i as f64 / (n - 1) as f64).exp()
            }
        })
        .collect()
}

/// Marginal density of one coordinate at a single abscissa.
pub fn marginal_at(prior: &PriorDensity, var: MarginalVar, x: f64, mode: MarginalMode) -> Result<f64> {
    let d = prior.domain;
    let in_range = match var {
        MarginalVar::R => x >= 0.0 && x <= d.r_max(),
        MarginalVar::Q => d.q_range().is_some_and(|(lo, hi)| x >= lo && x <= hi),
    };
    if !in_range {
        return domain(format!("{var} = {x} outside the domain of {}", prior.name));
    }
    let scale = match mode {
        MarginalMode::Normalized => 1.0,
        MarginalMode::Raw => prior.normalization,
    };
    let rel = prior.radial_tol();
    let abs = prior.config.abs_tol;
    // axes of the coordinates integrated out, and how to assemble a full point
    let axes = d.axes();
    let fixed = match (var, d.dims()) {
        (MarginalVar::R, 3) | (MarginalVar::Q, _) => 0,
        (MarginalVar::R, _) => 1,
    };
    // the fixed coordinate carries no Jacobian
    let point = |y: &[f64]| -> (Coords, f64) {
        let mut full = [0.0; 4];
        let n = y.len() + 1;
        full[..fixed].copy_from_slice(&y[..fixed]);
        full[fixed + 1..n].copy_from_slice(&y[fixed..]);
        let (mut c, jac) = d.node(&full[..n]);
        match var {
            MarginalVar::R => {
                c.r = x;
                c.s = 1.0 - x;
                (c, 1.0)
            }
            MarginalVar::Q => {
                c.q = x;
                (c, jac)
            }
        }
    };
    let value = if prior.is_isotropic() {
        // only [q,] s remain after the angular 4π
        let rest: Vec<Axis> = d.radial_axes().into_iter().enumerate().filter(|&(i, _)| i != fixed).map(|(_, a)| a).collect();
        if rest.is_empty() {
            FOUR_PI * prior.raw_radial(1.0, x) / prior.normalization
        } else {
            let spec = IntegrationSpec::new(rest)?.with_tolerances(rel, abs)?;
            let f = |y: &[f64]| {
                let (c, jac) = point(&[y[0], 0.0, 0.0]);
                jac * prior.raw_radial_c(c.q, c.r, c.s)
            };
            FOUR_PI * require(integrate(&f, &spec)?)?.value / prior.normalization
        }
    } else {
        let rest: Vec<Axis> = axes.iter().enumerate().filter(|&(i, _)| i != fixed).map(|(_, a)| *a).collect();
        let spec = IntegrationSpec::new(rest)?.with_tolerances(rel, abs)?;
        require(integrate(
            &|y: &[f64]| {
                let (c, jac) = point(y);
                jac * prior.density_at(&c)
            },
            &spec,
        )?)?
        .value
    };
    Ok(value * scale)
}

/// Marginal curve over `grid`, evaluated concurrently.
pub fn marginal(prior: &PriorDensity, var: MarginalVar, grid: &[f64], mode: MarginalMode) -> Result<MarginalCurve> {
    let values = grid.par_iter().map(|&x| marginal_at(prior, var, x, mode)).collect::<Result<Vec<_>>>()?;
    Ok(MarginalCurve { prior: prior.name.clone(), variable: var, mode, grid: grid.to_vec(), values })
}

/// Maximizer of a marginal within `[lo, hi]` by golden-section search.
pub fn marginal_peak(prior: &PriorDensity, var: MarginalVar, lo: f64, hi: f64, mode: MarginalMode) -> Result<(f64, f64)> {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (lo, hi);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = marginal_at(prior, var, c, mode)?;
    let mut fd = marginal_at(prior, var, d, mode)?;
    while (b - a) > 1e-7 * (a.abs() + b.abs()) {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = marginal_at(prior, var, c, mode)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = marginal_at(prior, var, d, mode)?;
        }
    }
    let x = 0.5 * (a + b);
    Ok((x, marginal_at(prior, var, x, mode)?))
}

/// Two-dimensional `(q, r)` marginal of an isotropic four-dimensional prior.
pub fn marginal_qr(prior: &PriorDensity, q_grid: &[f64], r_grid: &[f64], mode: MarginalMode) -> Result<Vec<[f64; 3]>> {
    if prior.domain.q_range().is_none() || !prior.is_isotropic() {
        return domain(format!("{}: (q, r) marginal needs an isotropic prior over q", prior.name));
    }
    let scale = match mode {
        MarginalMode::Normalized => prior.normalization,
        MarginalMode::Raw => 1.0,
    };
    let pts: Vec<(f64, f64)> = q_grid.iter().flat_map(|&q| r_grid.iter().map(move |&r| (q, r))).collect();
    let out = pts
        .par_iter()
        .map(|&(q, r)| {
            let v = FOUR_PI * prior.raw_radial(q, r) / scale;
            if v.is_finite() {
                Ok([q, r, v])
            } else {
                Err(Error::NonFiniteIntegrand { point: vec![q, r], value: v })
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(out)
}

/// The closed `q`-antiderivative of the angle-integrated truncated Bures volume element:
/// `π(q W^q (3 + W^{2q}) log W − (1 + W^q)(2W^q + (1 + W^q)² log(1 + W^q)))
///  / (6 (r² − 1)(1 + W^q)³ log W)`.
///
/// Accuracy degrades as `r → 0`, where the expression is a ratio of two
/// vanishing quantities; only differences in `q` are meaningful there.
pub fn truncated_bures_r_antiderivative(q: f64, r: f64) -> Result<f64> {
    if !(r > 0.0 && r < 1.0) {
        return domain(format!("radius {r} outside (0, 1)"));
    }
    if !(q > 0.0 && q.is_finite()) {
        return domain(format!("escort parameter {q} must be positive"));
    }
    let lw = special::log_w(r);
    let wq = (q * lw).exp();
    let num = q * wq * (3.0 + wq * wq) * lw - (1.0 + wq) * (2.0 * wq + (1.0 + wq).powi(2) * wq.ln_1p());
    Ok(PI * num / (6.0 * (r * r - 1.0) * (1.0 + wq).powi(3) * lw))
}

/// Outcome of the near-pure-state dominance check.
#[derive(Debug, Clone, PartialEq)]
pub struct DominanceReport {
    pub names: Vec<String>,
    pub radii: Vec<f64>,
    /// `values[i][k]`: r-marginal of prior `k` at `radii[i]`.
    pub values: Vec<Vec<f64>>,
    /// Prior indices in decreasing marginal order at each radius.
    pub orders: Vec<Vec<usize>>,
    /// Set when every sample shows the same strict order.
    pub total_order: Option<Vec<String>>,
    /// `(radius, first, second)` for numerically equal marginals.
    pub ties: Vec<(f64, String, String)>,
    pub near_origin_radius: f64,
    pub near_origin_order: Vec<String>,
}

impl DominanceReport {
    /// Whether the order near the origin is exactly the reverse of the pure-state order.
    pub fn near_origin_is_reverse(&self) -> Option<bool> {
        let total = self.total_order.as_ref()?;
        Some(total.iter().rev().eq(self.near_origin_order.iter()))
    }

    /// Fraction of samples whose order equals `expected`.
    pub fn agreement(&self, expected: &[&str]) -> usize {
        self.orders
            .iter()
            .filter(|o| o.iter().map(|&k| self.names[k].as_str()).eq(expected.iter().copied()))
            .count()
    }
}

const TIE_TOL: f64 = 1e-12;
const NEAR_ORIGIN: f64 = 0.01;

fn order_at(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    idx
}

/// Pointwise order of r-marginals at `n` radii `1 − ε + ε i/n`, `i = 0..n`.
pub fn pure_state_dominance(priors: &[PriorDensity], epsilon: f64, n: usize) -> Result<DominanceReport> {
    if priors.is_empty() || n == 0 {
        return domain("dominance check needs at least one prior and one radius");
    }
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return domain(format!("epsilon {epsilon} outside (0, 1]"));
    }
    let dom = priors[0].domain;
    if priors.iter().any(|p| p.domain != dom) {
        return domain("priors do not share a domain");
    }
    let names: Vec<String> = priors.iter().map(|p| p.name.clone()).collect();
    let top = dom.r_max();
    let radii: Vec<f64> = (0..n).map(|i| top - epsilon + epsilon * i as f64 / n as f64).collect();
    let eval = |r: f64| -> Result<Vec<f64>> {
        priors.iter().map(|p| marginal_at(p, MarginalVar::R, r, MarginalMode::Normalized)).collect()
    };
    let values = radii.par_iter().map(|&r| eval(r)).collect::<Result<Vec<_>>>()?;
    let orders: Vec<Vec<usize>> = values.iter().map(|v| order_at(v)).collect();
    let mut ties = Vec::new();
    for (i, v) in values.iter().enumerate() {
        for a in 0..v.len() {
            for b in a + 1..v.len() {
                if (v[a] - v[b]).abs() <= TIE_TOL * v[a].abs().max(v[b].abs()) {
                    ties.push((radii[i], names[a].clone(), names[b].clone()));
                }
            }
        }
    }
    let total_order = if ties.is_empty() && orders.windows(2).all(|w| w[0] == w[1]) {
        Some(orders[0].iter().map(|&k| names[k].clone()).collect())
    } else {
        None
    };
    let near = eval(NEAR_ORIGIN)?;
    let near_origin_order = order_at(&near).into_iter().map(|k| names[k].clone()).collect();
    Ok(DominanceReport {
        names,
        radii,
        values,
        orders,
        total_order,
        ties,
        near_origin_radius: NEAR_ORIGIN,
        near_origin_order,
    })
}

/// Radius in `(lo, hi)` where the r-marginals of `a` and `b` cross, by bisection.
pub fn dominance_crossover(a: &PriorDensity, b: &PriorDensity, lo: f64, hi: f64) -> Result<Option<f64>> {
    let diff = |r: f64| -> Result<f64> {
        Ok(marginal_at(a, MarginalVar::R, r, MarginalMode::Normalized)?
            - marginal_at(b, MarginalVar::R, r, MarginalMode::Normalized)?)
    };
    let (mut x0, mut x1) = (lo, hi);
    let (f0, f1) = (diff(x0)?, diff(x1)?);
    if f0.signum() == f1.signum() {
        return Ok(None);
    }
    for _ in 0..200 {
        let m = 0.5 * (x0 + x1);
        if m == x0 || m == x1 {
            break;
        }
        if diff(m)?.signum() == f0.signum() {
            x0 = m;
        } else {
            x1 = m;
        }
    }
    Ok(Some(0.5 * (x0 + x1)))
}
