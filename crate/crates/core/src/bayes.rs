//! Spin-measurement likelihoods, Bayes updates and information gains.

use std::collections::HashMap;
use std::f64::consts::{LN_2, PI};
use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Mutex, OnceLock};

use crate::error::{Error, Result};
use crate::models::{BlochPoint, EscortPoint};
use crate::noninform::KLResult;
use crate::priors::{Coords, PriorDensity, S_FLOOR};
use crate::quadrature::{integrate, integrate_1d_vec, Axis, IntegrationResult, IntegrationSpec};
use crate::special;

/// Catalan's constant, as it appears in the closed form of the single-measurement gain.
pub const CATALAN: f64 = 0.915965594177;

const AXES: [char; 3] = ['x', 'y', 'z'];

/// Up/down counts along x, y, z and an overall exponent on the likelihood.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementSpec {
    pub counts: [(u32, u32); 3],
    pub power: f64,
}

impl MeasurementSpec {
    pub fn new(counts: [(u32, u32); 3], power: f64) -> Result<Self> {
        if !(power > 0.0 && power.is_finite()) {
            return Err(Error::Parse(format!("power must be positive, got {power}")));
        }
        Ok(Self { counts, power })
    }

    /// One up and one down outcome per axis.
    pub fn canonical() -> Self {
        Self { counts: [(1, 1); 3], power: 1.0 }
    }

    /// The canonical spec under the square-root device.
    pub fn canonical_sqrt() -> Self {
        Self { power: 0.5, ..Self::canonical() }
    }

    /// No measurements; the likelihood is identically one.
    pub fn empty() -> Self {
        Self { counts: [(0, 0); 3], power: 1.0 }
    }

    pub fn with_power(self, power: f64) -> Result<Self> {
        Self::new(self.counts, power)
    }

    pub fn total_counts(&self) -> u32 {
        self.counts.iter().map(|(u, d)| u + d).sum()
    }
}

impl fmt::Display for MeasurementSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (axis, (u, d)) in AXES.iter().zip(self.counts) {
            write!(f, "{axis}:{u},{d} ")?;
        }
        write!(f, "pow:{}", self.power)
    }
}

impl FromStr for MeasurementSpec {
    type Err = Error;

    /// Parses `x:u,d y:u,d z:u,d pow:P`; absent axes count zero and `pow` defaults to 1.
    fn from_str(s: &str) -> Result<Self> {
        let bad = |msg: String| Error::Parse(format!("measurement spec `{s}`: {msg}"));
        let mut counts = [(0u32, 0u32); 3];
        let mut seen = [false; 4];
        let mut power = 1.0;
        for tok in s.split_whitespace() {
            let (key, val) = tok.split_once(':').ok_or_else(|| bad(format!("token `{tok}` lacks ':'")))?;
            if key == "pow" {
                if std::mem::replace(&mut seen[3], true) {
                    return Err(bad("pow given twice".into()));
                }
                power = val.parse().map_err(|_| bad(format!("bad power `{val}`")))?;
                continue;
            }
            let k = AXES
                .iter()
                .position(|a| key.len() == 1 && key.starts_with(*a))
                .ok_or_else(|| bad(format!("unknown axis `{key}`")))?;
            if std::mem::replace(&mut seen[k], true) {
                return Err(bad(format!("axis {key} given twice")));
            }
            let (u, d) = val.split_once(',').ok_or_else(|| bad(format!("`{val}` is not `up,down`")))?;
            let parse = |x: &str| x.trim().parse::<u32>().map_err(|_| bad(format!("bad count `{x}`")));
            counts[k] = (parse(u)?, parse(d)?);
        }
        Self::new(counts, power).map_err(|e| bad(e.to_string()))
    }
}

/// A likelihood as a function of Bloch (or escort) coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LikelihoodField {
    pub spec: MeasurementSpec,
    /// Use the escort Bloch vector `tanh(q atanh r) n` in place of `r n`.
    pub escort: bool,
    /// Constant factor; leaves posteriors unchanged.
    pub scale: f64,
}

impl LikelihoodField {
    pub fn scaled(self, c: f64) -> Self {
        Self { scale: self.scale * c, ..self }
    }

    /// Value at `(q, r, θ1, θ2)`; `q` is ignored unless the field is escort.
    pub fn eval(&self, q: f64, r: f64, theta1: f64, theta2: f64) -> f64 {
        let len = if self.escort { special::escort_length(q, r) } else { r };
        let (s1, c1) = theta1.sin_cos();
        let (s2, c2) = theta2.sin_cos();
        let n = [c1, s1 * c2, s1 * s2];
        let mut v = 1.0;
        for (k, &(u, d)) in self.spec.counts.iter().enumerate() {
            let a = len * n[k];
            if u > 0 {
                v *= (0.5 * (1.0 + a)).powi(u as i32);
            }
            if d > 0 {
                v *= (0.5 * (1.0 - a)).powi(d as i32);
            }
        }
        if self.spec.power == 1.0 {
            self.scale * v
        } else {
            self.scale * v.max(0.0).powf(self.spec.power)
        }
    }

    /// Length `ℓ` of the Bloch vector the outcomes depend on, with its
    /// complement `1 − ℓ`: `r`, or `tanh(q atanh r)` for the escort field.
    /// `s = 1 − r`.
    pub fn length(&self, q: f64, r: f64, s: f64) -> (f64, f64) {
        if self.escort {
            let x = q * special::atanh_c(r, s);
            let e = (-2.0 * x).exp();
            (x.tanh(), 2.0 * e / (1.0 + e))
        } else {
            (r, s)
        }
    }

    pub fn at_point(&self, p: &BlochPoint<f64>) -> f64 {
        self.eval(1.0, p.r, p.theta1, p.theta2)
    }

    pub fn at_escort(&self, p: &EscortPoint<f64>) -> f64 {
        self.eval(p.q, p.base.r, p.base.theta1, p.base.theta2)
    }
}

/// Standard Bloch-vector likelihood.
pub fn likelihood(spec: MeasurementSpec) -> LikelihoodField {
    LikelihoodField { spec, escort: false, scale: 1.0 }
}

/// Escort likelihood, with single-outcome probabilities `(1 ± a(q, r) w)/2`.
pub fn likelihood_q(spec: MeasurementSpec) -> LikelihoodField {
    LikelihoodField { spec, escort: true, scale: 1.0 }
}

fn check_compatible(prior: &PriorDensity, like: &LikelihoodField) -> Result<()> {
    if like.escort && prior.domain().q_range().is_none() {
        return Err(Error::Domain(format!("escort likelihood needs a prior over q; {} has none", prior.name())));
    }
    if !(like.scale > 0.0 && like.scale.is_finite()) {
        return Err(Error::Domain(format!("likelihood scale {} must be positive", like.scale)));
    }
    Ok(())
}

fn like_at(like: &LikelihoodField, c: &Coords) -> f64 {
    like.eval(c.q, c.r, c.theta1, c.theta2)
}

/// `∫ prior · L`.
pub fn evidence(prior: &PriorDensity, like: &LikelihoodField) -> Result<f64> {
    check_compatible(prior, like)?;
    let r = if prior.is_isotropic() {
        let n = prior.normalization();
        let r = moment_integral(prior, like, |_, _, _| [0.0, 1.0 / n, 0.0, 0.0])?;
        IntegrationResult { value: r.value * like.scale, ..r }
    } else {
        prior.domain_integral(|c| prior.density_at(c) * like_at(like, c), prior.full_tol())?
    };
    if !(r.value.is_finite() && r.value > f64::MIN_POSITIVE) {
        return Err(Error::ZeroEvidence);
    }
    Ok(r.value)
}

/// Lower end of `atanh ℓ`; below it the radial kernels carry no resolvable mass.
const Y_FLOOR: f64 = 1e-12;

/// `4π ∫ k · (c₀ + c₁⟨L⟩ + c₂⟨L ln L⟩ + c₃⟨ln L⟩) d[q] dr` for an isotropic
/// prior kernel `k` and coefficients `c(q, r, s)`, with the spherical means
/// of `like` (unscaled) taken at the point's Bloch-vector length.
///
/// For the escort field on a `q` domain the means depend on `(q, r)` only
/// through `ℓ = tanh(q atanh r)`, so the integral is taken over `ℓ` outside
/// and `q` inside; the means are then needed once per outer node.
pub(crate) fn moment_integral<C>(prior: &PriorDensity, like: &LikelihoodField, coef: C) -> Result<IntegrationResult>
where
    C: Fn(f64, f64, f64) -> [f64; 4] + Sync,
{
    let tol = prior.radial_tol();
    let m_tol = (0.1 * tol).max(1e-13);
    let moments = |ell: f64, ell_c: f64| -> Option<[f64; 4]> {
        angular_moments(&like.spec, ell, ell_c, m_tol).ok().map(|m| [1.0, m[0], m[1], m[2]])
    };
    let dot = |a: [f64; 4], m: [f64; 4]| a.iter().zip(m).map(|(x, y)| if *x == 0.0 { 0.0 } else { x * y }).sum::<f64>();
    let (Some((q_lo, q_hi)), true) = (prior.domain().q_range(), like.escort) else {
        return prior.radial_integral(
            |q, r, s| {
                let (ell, ell_c) = like.length(q, r, s);
                moments(ell, ell_c).map_or(f64::NAN, |m| dot(coef(q, r, s), m))
            },
            tol,
        );
    };
    let cfg = prior.config();
    let r_max = prior.domain().r_max();
    let atanh_r_max = special::atanh_c(r_max, (1.0 - r_max).max(S_FLOOR));
    let failed = AtomicBool::new(false);
    // outer variable y = atanh ℓ; at fixed q, r = tanh(y/q) and dr/dy = (1 − r²)/q
    let outer = |x: &[f64]| -> f64 {
        let y = x[0];
        let lo = q_lo.max(y / atanh_r_max);
        if lo >= q_hi {
            return 0.0;
        }
        let inner = integrate_1d_vec(
            |q: f64| {
                let e = (-2.0 * y / q).exp();
                let (r, s) = ((y / q).tanh(), 2.0 * e / (1.0 + e));
                if s < S_FLOOR {
                    return [0.0; 4];
                }
                let k = prior.raw_radial_c(q, r, s);
                if k == 0.0 {
                    return [0.0; 4];
                }
                let jac = s * (1.0 + r) / q;
                coef(q, r, s).map(|c| c * k * jac)
            },
            Axis::log_scale(lo, q_hi),
            (0.1 * tol).max(1e-14),
            cfg.abs_tol,
        );
        let a = match inner {
            Ok(v) if v.converged => v.value,
            _ => {
                failed.store(true, Ordering::Relaxed);
                return 0.0;
            }
        };
        if a.iter().all(|v| *v == 0.0) {
            return 0.0;
        }
        let e = (-2.0 * y).exp();
        moments(y.tanh(), 2.0 * e / (1.0 + e)).map_or(f64::NAN, |m| 4.0 * PI * dot(a, m))
    };
    let y_hi = q_hi * atanh_r_max;
    let spec = IntegrationSpec::new(vec![Axis::log_scale(Y_FLOOR.min(0.5 * y_hi), y_hi)])?.with_tolerances(tol, cfg.abs_tol)?;
    let r = integrate(&outer, &spec)?;
    if failed.load(Ordering::Relaxed) {
        return Err(Error::QuadratureFailure { value: r.value, error: f64::INFINITY, evals: r.evals });
    }
    crate::priors::require(r)
}

/// Bayes update: density `∝ prior · L`, renormalized by quadrature.
pub fn posterior(prior: &PriorDensity, like: &LikelihoodField) -> Result<PriorDensity> {
    if like.spec.total_counts() == 0 {
        check_compatible(prior, like)?;
        let name = format!("post({} | {})", prior.name(), like.spec);
        return Ok(prior.tilted(*like, like.scale, name));
    }
    let e = evidence(prior, like)?;
    let name = format!("post({} | {})", prior.name(), like.spec);
    Ok(prior.tilted(*like, e, name))
}

/// `S_KL(posterior ‖ prior) = E_post[log L] − log E`, in nats.
pub fn info_gain(prior: &PriorDensity, like: &LikelihoodField) -> Result<KLResult> {
    check_compatible(prior, like)?;
    if like.spec.total_counts() == 0 {
        return Ok(KLResult { value: 0.0, error_estimate: 0.0, evals: 0 });
    }
    if prior.is_isotropic() {
        // scale-free: gain = ⟨L ln L⟩/⟨L⟩ − ln⟨L⟩ with L unscaled
        let n = prior.normalization();
        let e = moment_integral(prior, like, |_, _, _| [0.0, 1.0 / n, 0.0, 0.0])?;
        if !(e.value.is_finite() && e.value > f64::MIN_POSITIVE) {
            return Err(Error::ZeroEvidence);
        }
        let g = moment_integral(prior, like, |_, _, _| [0.0, 0.0, 1.0 / n, 0.0])?;
        let value = g.value / e.value - e.value.ln();
        let err = g.error_estimate / e.value + e.error_estimate * (g.value.abs() / e.value + 1.0) / e.value;
        return Ok(KLResult::clamped(value, err, e.evals + g.evals));
    }
    let tol = prior.full_tol();
    let e = prior.domain_integral(|c| prior.density_at(c) * like_at(like, c), tol)?;
    if !(e.value.is_finite() && e.value > f64::MIN_POSITIVE) {
        return Err(Error::ZeroEvidence);
    }
    let g = prior.domain_integral(
        |c| {
            let l = like_at(like, c);
            if l > 0.0 {
                prior.density_at(c) * l * l.ln()
            } else {
                0.0
            }
        },
        tol,
    )?;
    let value = g.value / e.value - e.value.ln();
    let error_estimate = g.error_estimate / e.value + e.error_estimate * (g.value.abs() / e.value + 1.0) / e.value;
    Ok(KLResult::clamped(value, error_estimate, e.evals + g.evals))
}

/// Information gain of the escort likelihood under a prior over `(q, r, θ1, θ2)`.
pub fn info_gain_qext(prior: &PriorDensity, spec: MeasurementSpec) -> Result<KLResult> {
    if prior.domain().q_range().is_none() {
        return Err(Error::Domain(format!("{} is not a prior over q", prior.name())));
    }
    info_gain(prior, &likelihood_q(spec))
}

/// Spherical means `[⟨L⟩, ⟨L ln L⟩, ⟨ln L⟩]` of the likelihood (without
/// its constant scale) for a Bloch vector of length `ell = 1 − ell_c`,
/// averaged over directions with `dΩ/4π`.
///
/// Every integral of an isotropic prior against a likelihood reduces to a
/// radial integral of these means, which depend on the point only through
/// `ell`. Results are memoized per `(spec, ell, tolerance)`; the memo never
/// changes a value, so results stay deterministic.
pub fn angular_moments(spec: &MeasurementSpec, ell: f64, ell_c: f64, rel_tol: f64) -> Result<[f64; 3]> {
    if !(0.0..=1.0).contains(&ell) || !(0.0..=1.0).contains(&ell_c) {
        return Err(Error::Domain(format!("Bloch vector length {ell} outside [0, 1]")));
    }
    let key = MomentKey {
        counts: spec.counts,
        power: spec.power.to_bits(),
        ell: ell.to_bits(),
        ell_c: ell_c.to_bits(),
        tol: rel_tol.to_bits(),
    };
    let cache = MOMENTS.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(v) = cache.lock().unwrap_or_else(|e| e.into_inner()).get(&key) {
        return Ok(*v);
    }
    let v = moments_uncached(spec, ell, ell_c, rel_tol)?;
    let mut map = cache.lock().unwrap_or_else(|e| e.into_inner());
    if map.len() >= MOMENT_CACHE_LIMIT {
        map.clear();
    }
    map.insert(key, v);
    Ok(v)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct MomentKey {
    counts: [(u32, u32); 3],
    power: u64,
    ell: u64,
    ell_c: u64,
    tol: u64,
}

static MOMENTS: OnceLock<Mutex<HashMap<MomentKey, [f64; 3]>>> = OnceLock::new();
const MOMENT_CACHE_LIMIT: usize = 1 << 20;
const MOMENT_ABS_TOL: f64 = 1e-300;

/// `ln L` on the cube face centred on `sigma · e_axis`, at polar angle
/// `theta` from that axis and azimuth `phi`. The factor that vanishes at the
/// face centre is formed as `(1 − ℓ) + 2ℓ sin²(θ/2)` to keep it accurate.
fn face_log_like(spec: &MeasurementSpec, ell: f64, ell_c: f64, axis: usize, sigma: f64, theta: f64, phi: f64) -> f64 {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    let half = 2.0 * (0.5 * theta).sin().powi(2);
    let mut n = [0.0; 3];
    n[axis] = sigma * ct;
    n[(axis + 1) % 3] = st * cp;
    n[(axis + 2) % 3] = st * sp;
    let factor = |k: usize, eps: f64| -> f64 {
        if k == axis && eps * sigma < 0.0 {
            ell_c + ell * half
        } else if k == axis {
            1.0 + ell * ct
        } else {
            1.0 + eps * ell * n[k]
        }
    };
    let mut acc = 0.0;
    for (k, &(u, d)) in spec.counts.iter().enumerate() {
        if u > 0 {
            acc += u as f64 * (factor(k, 1.0).ln() - LN_2);
        }
        if d > 0 {
            acc += d as f64 * (factor(k, -1.0).ln() - LN_2);
        }
    }
    spec.power * acc
}

/// Cubed-sphere quadrature: six faces, each in polar coordinates about its
/// axis and split into eight azimuthal sectors, so the only places where a
/// factor of `L` can vanish sit at endpoints of the polar integrals.
fn moments_uncached(spec: &MeasurementSpec, ell: f64, ell_c: f64, rel: f64) -> Result<[f64; 3]> {
    if spec.total_counts() == 0 {
        return Ok([1.0, 0.0, 0.0]);
    }
    let failed = AtomicBool::new(false);
    let inner_rel = (0.1 * rel).max(1e-14);
    let mut total = [0.0; 3];
    let mut err = [0.0; 3];
    let mut evals = 0;
    for axis in 0..3 {
        for sigma in [1.0, -1.0] {
            for sector in 0..8 {
                let lo = sector as f64 * PI / 4.0;
                let outer = integrate_1d_vec(
                    |phi: f64| {
                        let m = phi.cos().abs().max(phi.sin().abs());
                        let theta_max = (1.0 / m).atan();
                        let inner = integrate_1d_vec(
                            |theta: f64| {
                                let ll = face_log_like(spec, ell, ell_c, axis, sigma, theta, phi);
                                let w = theta.sin();
                                if ll == f64::NEG_INFINITY {
                                    return [0.0; 3];
                                }
                                let l = ll.exp();
                                [w * l, w * l * ll, w * ll]
                            },
                            Axis::sqrt_lower(0.0, theta_max),
                            inner_rel,
                            MOMENT_ABS_TOL,
                        );
                        match inner {
                            Ok(r) if r.converged => r.value,
                            _ => {
                                failed.store(true, Ordering::Relaxed);
                                [0.0; 3]
                            }
                        }
                    },
                    Axis::new(lo, lo + PI / 4.0),
                    rel,
                    MOMENT_ABS_TOL,
                )?;
                if failed.load(Ordering::Relaxed) || !outer.converged {
                    let k = (0..3).max_by(|&a, &b| outer.error[a].total_cmp(&outer.error[b])).unwrap_or(0);
                    return Err(Error::QuadratureFailure { value: outer.value[k], error: outer.error[k], evals: outer.evals });
                }
                for k in 0..3 {
                    total[k] += outer.value[k];
                    err[k] += outer.error[k];
                }
                evals += outer.evals;
            }
        }
    }
    let _ = (err, evals);
    Ok(total.map(|v| v / (4.0 * PI)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::priors::{build_prior, PriorConfig, PriorDomain, PriorName};

    #[test]
    fn spec_round_trip() {
        let s: MeasurementSpec = "x:1,1 y:1,1 z:1,1 pow:0.5".parse().unwrap();
        assert_eq!(s, MeasurementSpec::canonical_sqrt());
        assert_eq!(s.to_string().parse::<MeasurementSpec>().unwrap(), s);
        let z: MeasurementSpec = "z:1,0".parse().unwrap();
        assert_eq!(z.counts, [(0, 0), (0, 0), (1, 0)]);
        assert_eq!(z.power, 1.0);
        for bad in ["x:1", "w:1,1", "x:1,1 x:0,1", "pow:0", "pow:-1", "z:a,1", "x1,1"] {
            assert!(bad.parse::<MeasurementSpec>().is_err(), "{bad}");
        }
    }

    #[test]
    fn canonical_likelihood_values() {
        let l = likelihood(MeasurementSpec::canonical());
        assert!((l.eval(1.0, 0.0, 0.3, 0.2) - 1.0 / 64.0).abs() < 1e-16);
        assert!(l.eval(1.0, 1.0, 0.0, 0.0).abs() < 1e-16);
        // product form (1 − x²)(1 − y²)(1 − z²)/64
        let p = BlochPoint::new(0.7, 1.1, 2.3).unwrap();
        let [x, y, z] = p.cartesian();
        let want = (1.0 - x * x) * (1.0 - y * y) * (1.0 - z * z) / 64.0;
        assert!((l.at_point(&p) - want).abs() < 1e-15);
        let h = likelihood(MeasurementSpec::canonical_sqrt());
        assert!((h.at_point(&p) - want.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn escort_likelihood() {
        let spec: MeasurementSpec = "z:1,1".parse().unwrap();
        let l = likelihood_q(spec);
        // z = r sinθ1 sinθ2 = 0.5 at r = 0.5
        let (t1, t2) = (std::f64::consts::FRAC_PI_2, std::f64::consts::FRAC_PI_2);
        assert!((l.eval(2.0, 0.5, t1, t2) - 0.09).abs() < 1e-14);
        assert!((l.eval(1.0, 0.5, t1, t2) - (1.0 - 0.25) / 4.0).abs() < 1e-15);
        let v = l.eval(3.0, 1e-12, t1, t2);
        assert!(v.is_finite() && (v - 0.25).abs() < 1e-12);
    }

    #[test]
    fn uniform_prior_posterior_is_normalized_likelihood() {
        let cfg = PriorConfig::default();
        let uni = PriorDensity::custom("uniform", PriorDomain::Bloch { r_max: 1.0 }, cfg, |_, r| r * r).unwrap();
        let l = likelihood(MeasurementSpec::canonical());
        let post = posterior(&uni, &l).unwrap();
        let e = post.evidence().unwrap();
        let x = [0.4, 1.0, 2.0];
        let want = l.eval(1.0, x[0], x[1], x[2]) * x[0] * x[0] * x[1].sin() / (e * 4.0 * std::f64::consts::PI / 3.0);
        assert!((post.density(&x) - want).abs() < 1e-12 * want);
        assert!((post.total_mass().unwrap() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn constant_likelihood_leaves_prior() {
        let p = build_prior(PriorName::PF, &PriorConfig::default()).unwrap();
        let post = posterior(&p, &likelihood(MeasurementSpec::empty()).scaled(3.0)).unwrap();
        let x = [0.6, 0.9, 1.4];
        assert!((post.density(&x) - p.density(&x)).abs() < 1e-10 * p.density(&x));
        assert_eq!(info_gain(&p, &likelihood(MeasurementSpec::empty())).unwrap().value, 0.0);
    }

    #[test]
    fn scaled_likelihood_same_posterior() {
        let p = build_prior(PriorName::PBtrunc, &PriorConfig::default()).unwrap();
        let l = likelihood("z:1,0".parse().unwrap());
        let a = posterior(&p, &l).unwrap();
        let b = posterior(&p, &l.scaled(7.5)).unwrap();
        for x in [[0.3, 0.5, 1.0], [0.9, 2.0, 4.0]] {
            assert!((a.density(&x) - b.density(&x)).abs() < 1e-10 * a.density(&x));
        }
    }

    #[test]
    fn moments_match_polynomial_means() {
        // canonical field: ⟨Π(1 − ℓ² n_k²)⟩/64 from the sphere moments
        // ⟨n²⟩ = 1/3, ⟨n_i² n_j²⟩ = 1/15, ⟨n_x² n_y² n_z²⟩ = 1/105
        for ell in [0.0, 0.3, 0.9, 1.0] {
            let l2: f64 = ell * ell;
            let want = (1.0 - l2 + 3.0 * l2 * l2 / 15.0 - l2 * l2 * l2 / 105.0) / 64.0;
            let m = angular_moments(&MeasurementSpec::canonical(), ell, 1.0 - ell, 1e-10).unwrap();
            assert!((m[0] - want).abs() < 1e-12, "ell={ell}: {} vs {want}", m[0]);
        }
        let m = angular_moments(&MeasurementSpec::empty(), 0.5, 0.5, 1e-10).unwrap();
        assert_eq!(m, [1.0, 0.0, 0.0]);
    }

    #[test]
    fn isotropic_fast_path_matches_full_integral() {
        let p = build_prior(PriorName::PBtrunc, &PriorConfig { rel_tol: 1e-6, ..PriorConfig::default() }).unwrap();
        let l = likelihood("x:1,0 z:0,2".parse().unwrap());
        let fast = evidence(&p, &l).unwrap();
        let full = p.domain_integral(|c| p.density_at(c) * like_at(&l, c), 1e-6).unwrap().value;
        assert!((fast - full).abs() < 1e-6 * full, "{fast} vs {full}");
    }

    #[test]
    fn escort_substitution_preserves_mass() {
        for name in [PriorName::PBqext4D, PriorName::PFqext4D] {
            let p = build_prior(name, &PriorConfig::default()).unwrap();
            let n = p.normalization();
            let l = likelihood_q("z:1,1".parse().unwrap());
            let mass = moment_integral(&p, &l, |_, _, _| [1.0 / n, 0.0, 0.0, 0.0]).unwrap().value;
            assert!((mass - 1.0).abs() < 1e-7, "{name}: {mass}");
        }
    }

    #[test]
    fn escort_likelihood_needs_q() {
        let p = build_prior(PriorName::PB, &PriorConfig::default()).unwrap();
        assert!(info_gain_qext(&p, MeasurementSpec::canonical()).is_err());
    }
}
