//! Deterministic adaptive integration over boxes of dimension 1–5.
//!
//! Each axis is integrated with adaptive 21-point Gauss–Kronrod panels
//! (QUADPACK `qk21` error scaling), nested from the first axis inwards.
//! The inner tolerance tightens by a factor of ten per level so that inner
//! noise does not dominate outer error estimates. Node evaluations of the
//! outermost level run on the rayon pool; results are collected in node order
//! and panels are summed by position, so values are bit-identical run to run.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{domain, Error, Result};

const XGK: [f64; 11] = [
    0.995_657_163_025_808_1,
    0.973_906_528_517_171_7,
    0.930_157_491_355_708_2,
    0.865_063_366_688_984_5,
    0.780_817_726_586_416_9,
    0.679_409_568_299_024_4,
    0.562_757_134_668_604_7,
    0.433_395_394_129_247_2,
    0.294_392_862_701_460_2,
    0.148_874_338_981_631_2,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874,
    0.032_558_162_307_964_73,
    0.054_755_896_574_352,
    0.075_039_674_810_919_95,
    0.093_125_454_583_697_6,
    0.109_387_158_802_297_64,
    0.123_491_976_262_065_85,
    0.134_709_217_311_473_33,
    0.142_775_938_577_060_08,
    0.147_739_104_901_338_5,
    0.149_445_554_002_916_9,
];

/// Ten-point Gauss weights at `XGK[1], XGK[3], …, XGK[9]`.
const WG: [f64; 5] = [
    0.066_671_344_308_688_14,
    0.149_451_349_150_580_6,
    0.219_086_362_515_982_04,
    0.269_266_719_309_996_35,
    0.295_524_224_714_752_87,
];

const NODES: usize = 21;

/// Change of variables applied to one axis before integration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Transform {
    #[default]
    None,
    /// `x = hi − (hi − lo) u²`, `u ∈ [0, 1]`; removes `1/√(hi − x)` and
    /// `log(hi − x)` endpoint singularities.
    SqrtBoundaryUpper,
    /// `x = lo + (hi − lo) u²`, `u ∈ [0, 1]`; the same at the lower end.
    SqrtBoundaryLower,
    /// `x = e^t`; for ranges spanning several decades.
    LogScale,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub transform: Transform,
    /// Number of equal initial panels in the transformed variable.
    pub pieces: usize,
}

impl Axis {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi, transform: Transform::None, pieces: 1 }
    }

    pub fn sqrt_upper(lo: f64, hi: f64) -> Self {
        Self { transform: Transform::SqrtBoundaryUpper, ..Self::new(lo, hi) }
    }

    pub fn sqrt_lower(lo: f64, hi: f64) -> Self {
        Self { transform: Transform::SqrtBoundaryLower, ..Self::new(lo, hi) }
    }

    pub fn log_scale(lo: f64, hi: f64) -> Self {
        Self { transform: Transform::LogScale, ..Self::new(lo, hi) }
    }

    pub fn with_pieces(mut self, pieces: usize) -> Self {
        self.pieces = pieces.max(1);
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite() && self.lo < self.hi) {
            return domain(format!("degenerate interval [{}, {}]", self.lo, self.hi));
        }
        if self.transform == Transform::LogScale && self.lo <= 0.0 {
            return domain(format!("log-scaled axis needs lo > 0, got {}", self.lo));
        }
        Ok(())
    }

    fn param_range(&self) -> (f64, f64) {
        match self.transform {
            Transform::None => (self.lo, self.hi),
            Transform::SqrtBoundaryUpper | Transform::SqrtBoundaryLower => (0.0, 1.0),
            Transform::LogScale => (self.lo.ln(), self.hi.ln()),
        }
    }

    /// Original coordinate and Jacobian at parameter `t`.
    fn map(&self, t: f64) -> (f64, f64) {
        match self.transform {
            Transform::None => (t, 1.0),
            Transform::SqrtBoundaryUpper => {
                let w = self.hi - self.lo;
                (self.hi - w * t * t, 2.0 * w * t)
            }
            Transform::SqrtBoundaryLower => {
                let w = self.hi - self.lo;
                (self.lo + w * t * t, 2.0 * w * t)
            }
            Transform::LogScale => {
                let x = t.exp();
                (x.clamp(self.lo, self.hi), x)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegrationSpec {
    pub axes: Vec<Axis>,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_evals: u64,
    /// Panel limit per one-dimensional sweep.
    pub max_subdivisions: usize,
    /// Evaluate outermost nodes on the rayon pool.
    pub parallel: bool,
}

pub const DEFAULT_REL_TOL_LOW_DIM: f64 = 1e-8;
pub const DEFAULT_REL_TOL_4D: f64 = 1e-5;
pub const DEFAULT_ABS_TOL: f64 = 1e-13;
pub const DEFAULT_MAX_EVALS: u64 = 100_000_000;
pub const DEFAULT_MAX_SUBDIVISIONS: usize = 200;
pub const MAX_DIMS: usize = 5;

impl IntegrationSpec {
    pub fn new(axes: Vec<Axis>) -> Result<Self> {
        if axes.is_empty() || axes.len() > MAX_DIMS {
            return domain(format!("{} axes; expected 1..={MAX_DIMS}", axes.len()));
        }
        for a in &axes {
            a.validate()?;
        }
        let rel_tol = if axes.len() >= 4 { DEFAULT_REL_TOL_4D } else { DEFAULT_REL_TOL_LOW_DIM };
        Ok(Self {
            axes,
            rel_tol,
            abs_tol: DEFAULT_ABS_TOL,
            max_evals: DEFAULT_MAX_EVALS,
            max_subdivisions: DEFAULT_MAX_SUBDIVISIONS,
            parallel: true,
        })
    }

    pub fn with_tolerances(mut self, rel_tol: f64, abs_tol: f64) -> Result<Self> {
        if !(rel_tol > 0.0 && abs_tol > 0.0) {
            return domain("tolerances must be positive");
        }
        self.rel_tol = rel_tol;
        self.abs_tol = abs_tol;
        Ok(self)
    }

    pub fn dims(&self) -> usize {
        self.axes.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrationResult {
    pub value: f64,
    pub error_estimate: f64,
    pub evals: u64,
    pub converged: bool,
}

/// Vector-valued one-dimensional result.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VecResult<const N: usize> {
    pub value: [f64; N],
    pub error: [f64; N],
    pub evals: u64,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy)]
struct NodeVal<const N: usize> {
    val: [f64; N],
    err: [f64; N],
    conv: bool,
    evals: u64,
}

#[derive(Debug, Clone, Copy)]
struct Panel<const N: usize> {
    a: f64,
    b: f64,
    val: [f64; N],
    err: [f64; N],
    /// `∫|f|` estimate; bounds the attainable accuracy.
    mag: [f64; N],
    conv: bool,
}

struct Sweep {
    rel: f64,
    abs: f64,
    max_sub: usize,
    max_evals: u64,
    parallel: bool,
    pieces: usize,
}

fn nodes_of(a: f64, b: f64) -> [f64; NODES] {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut x = [c; NODES];
    for j in 0..10 {
        x[1 + 2 * j] = c - h * XGK[j];
        x[2 + 2 * j] = c + h * XGK[j];
    }
    x
}

fn combine<const N: usize>(a: f64, b: f64, f: &[NodeVal<N>]) -> Panel<N> {
    let h = 0.5 * (b - a);
    let dh = h.abs();
    let mut val = [0.0; N];
    let mut err = [0.0; N];
    let mut mag = [0.0; N];
    let mut conv = true;
    for k in 0..N {
        let fc = f[0].val[k];
        let mut resk = WGK[10] * fc;
        let mut resg = 0.0;
        let mut resabs = resk.abs();
        let mut inner = WGK[10] * f[0].err[k];
        for j in 0..10 {
            let (f1, f2) = (f[1 + 2 * j].val[k], f[2 + 2 * j].val[k]);
            resk += WGK[j] * (f1 + f2);
            resabs += WGK[j] * (f1.abs() + f2.abs());
            inner += WGK[j] * (f[1 + 2 * j].err[k] + f[2 + 2 * j].err[k]);
            if j % 2 == 1 {
                resg += WG[j / 2] * (f1 + f2);
            }
        }
        let reskh = 0.5 * resk;
        let mut resasc = WGK[10] * (fc - reskh).abs();
        for j in 0..10 {
            resasc += WGK[j] * ((f[1 + 2 * j].val[k] - reskh).abs() + (f[2 + 2 * j].val[k] - reskh).abs());
        }
        let resabs = resabs * dh;
        let resasc = resasc * dh;
        let mut e = ((resk - resg) * h).abs();
        if resasc != 0.0 && e != 0.0 {
            e = resasc * (200.0 * e / resasc).powf(1.5).min(1.0);
        }
        if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
            e = e.max(50.0 * f64::EPSILON * resabs);
        }
        val[k] = resk * h;
        err[k] = e + inner * dh;
        mag[k] = resabs;
    }
    for n in f {
        conv &= n.conv;
    }
    Panel { a, b, val, err, mag, conv }
}

fn eval_panels<const N: usize, G>(g: &G, spans: &[(f64, f64)], parallel: bool) -> Result<(Vec<Panel<N>>, u64)>
where
    G: Fn(f64) -> Result<NodeVal<N>> + Sync,
{
    let xs: Vec<f64> = spans.iter().flat_map(|&(a, b)| nodes_of(a, b)).collect();
    let vals: Vec<Result<NodeVal<N>>> = if parallel {
        xs.par_iter().map(|&x| g(x)).collect()
    } else {
        xs.iter().map(|&x| g(x)).collect()
    };
    let mut ok = Vec::with_capacity(vals.len());
    for v in vals {
        ok.push(v?);
    }
    let evals = ok.iter().map(|n| n.evals).sum();
    let panels = spans
        .iter()
        .enumerate()
        .map(|(i, &(a, b))| combine(a, b, &ok[i * NODES..(i + 1) * NODES]))
        .collect();
    Ok((panels, evals))
}

fn totals<const N: usize>(panels: &[Panel<N>]) -> ([f64; N], [f64; N], [f64; N]) {
    let mut v = [0.0; N];
    let mut e = [0.0; N];
    let mut m = [0.0; N];
    for p in panels {
        for k in 0..N {
            v[k] += p.val[k];
            e[k] += p.err[k];
            m[k] += p.mag[k];
        }
    }
    (v, e, m)
}

/// Requested accuracy, floored at the round-off level of the panel sums.
fn tolerance(s: &Sweep, val: f64, mag: f64) -> f64 {
    s.abs.max(s.rel * val.abs()).max(100.0 * f64::EPSILON * mag)
}

fn adapt<const N: usize, G>(g: &G, lo: f64, hi: f64, s: &Sweep) -> Result<VecResult<N>>
where
    G: Fn(f64) -> Result<NodeVal<N>> + Sync,
{
    let n0 = s.pieces.max(1);
    let w = (hi - lo) / n0 as f64;
    let spans: Vec<(f64, f64)> = (0..n0)
        .map(|i| (lo + w * i as f64, if i + 1 == n0 { hi } else { lo + w * (i + 1) as f64 }))
        .collect();
    let (mut panels, mut evals) = eval_panels(g, &spans, s.parallel)?;
    loop {
        let (val, err, mag) = totals(&panels);
        let tol: Vec<f64> = (0..N).map(|k| tolerance(s, val[k], mag[k])).collect();
        if (0..N).all(|k| err[k] <= tol[k])
            || panels.len() >= s.max_sub
            || evals >= s.max_evals
        {
            break;
        }
        // worst splittable panel, measured against the per-component tolerance
        let mut worst: Option<(usize, f64)> = None;
        for (i, p) in panels.iter().enumerate() {
            let width_ok = (p.b - p.a).abs() > 8.0 * f64::EPSILON * p.a.abs().max(p.b.abs()).max(f64::MIN_POSITIVE);
            if !width_ok {
                continue;
            }
            let score = (0..N).map(|k| p.err[k] / tol[k]).fold(0.0, f64::max);
            if worst.map_or(true, |(_, sc)| score > sc) {
                worst = Some((i, score));
            }
        }
        let Some((i, _)) = worst else { break };
        let p = panels[i];
        let m = 0.5 * (p.a + p.b);
        let (halves, e) = eval_panels(g, &[(p.a, m), (m, p.b)], s.parallel)?;
        evals += e;
        panels.splice(i..=i, halves);
    }
    let (value, error, mag) = totals(&panels);
    let met = (0..N).all(|k| error[k] <= tolerance(s, value[k], mag[k]));
    Ok(VecResult {
        value,
        error,
        evals,
        converged: met && panels.iter().all(|p| p.conv),
    })
}

fn check_finite(point: &[f64], v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFiniteIntegrand { point: point.to_vec(), value: v })
    }
}

fn nested<F>(f: &F, spec: &IntegrationSpec, level: usize, prefix: &[f64]) -> Result<VecResult<1>>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let axis = spec.axes[level];
    let last = level + 1 == spec.dims();
    let g = |t: f64| -> Result<NodeVal<1>> {
        let (x, jac) = axis.map(t);
        let mut pt = Vec::with_capacity(spec.dims());
        pt.extend_from_slice(prefix);
        pt.push(x);
        if jac == 0.0 {
            return Ok(NodeVal { val: [0.0], err: [0.0], conv: true, evals: 0 });
        }
        if last {
            let v = f(&pt);
            check_finite(&pt, v)?;
            Ok(NodeVal { val: [v * jac], err: [0.0], conv: true, evals: 1 })
        } else {
            let r = nested(f, spec, level + 1, &pt)?;
            Ok(NodeVal { val: [r.value[0] * jac], err: [r.error[0] * jac], conv: r.converged, evals: r.evals })
        }
    };
    let shrink = 0.1f64.powi(level as i32);
    let sweep = Sweep {
        rel: (spec.rel_tol * shrink).max(1e-14),
        abs: spec.abs_tol * shrink,
        max_sub: spec.max_subdivisions,
        max_evals: if level == 0 { spec.max_evals } else { u64::MAX },
        parallel: spec.parallel && level == 0,
        pieces: axis.pieces,
    };
    let (lo, hi) = axis.param_range();
    adapt(&g, lo, hi, &sweep)
}

/// Adaptive integral of `f` over the box described by `spec`.
///
/// Returns `converged = false` rather than an error when the tolerance is
/// not met within the panel or evaluation budget.
pub fn integrate<F>(f: &F, spec: &IntegrationSpec) -> Result<IntegrationResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if spec.axes.is_empty() || spec.dims() > MAX_DIMS {
        return domain(format!("{} axes; expected 1..={MAX_DIMS}", spec.dims()));
    }
    for a in &spec.axes {
        a.validate()?;
    }
    let r = nested(f, spec, 0, &[])?;
    Ok(IntegrationResult {
        value: r.value[0],
        error_estimate: r.error[0],
        evals: r.evals,
        converged: r.converged,
    })
}

/// One-dimensional convenience wrapper (serial).
pub fn integrate_1d<F>(f: F, axis: Axis, rel_tol: f64, abs_tol: f64) -> Result<IntegrationResult>
where
    F: Fn(f64) -> f64 + Sync,
{
    let mut spec = IntegrationSpec::new(vec![axis])?.with_tolerances(rel_tol, abs_tol)?;
    spec.parallel = false;
    integrate(&|x: &[f64]| f(x[0]), &spec)
}

/// Adaptive integral of a vector-valued function sharing nodes across components.
pub fn integrate_1d_vec<const N: usize, F>(
    f: F,
    axis: Axis,
    rel_tol: f64,
    abs_tol: f64,
) -> Result<VecResult<N>>
where
    F: Fn(f64) -> [f64; N] + Sync,
{
    axis.validate()?;
    let g = |t: f64| -> Result<NodeVal<N>> {
        let (x, jac) = axis.map(t);
        if jac == 0.0 {
            return Ok(NodeVal { val: [0.0; N], err: [0.0; N], conv: true, evals: 0 });
        }
        let mut v = f(x);
        for e in v.iter_mut() {
            check_finite(&[x], *e)?;
            *e *= jac;
        }
        Ok(NodeVal { val: v, err: [0.0; N], conv: true, evals: 1 })
    };
    let (lo, hi) = axis.param_range();
    adapt(
        &g,
        lo,
        hi,
        &Sweep {
            rel: rel_tol,
            abs: abs_tol,
            max_sub: DEFAULT_MAX_SUBDIVISIONS,
            max_evals: DEFAULT_MAX_EVALS,
            parallel: false,
            pieces: axis.pieces,
        },
    )
}

/// Plain Monte-Carlo estimate in the transformed variables, with its
/// standard error as `error_estimate`. Seeded and deterministic.
pub fn mc_check<F>(f: &F, spec: &IntegrationSpec, seed: u64, n: u64) -> Result<IntegrationResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if n < 1000 {
        return domain(format!("Monte-Carlo check needs at least 1000 samples, got {n}"));
    }
    let ranges: Vec<(f64, f64)> = spec.axes.iter().map(|a| a.param_range()).collect();
    let volume: f64 = ranges.iter().map(|(a, b)| b - a).product();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pt = vec![0.0; spec.dims()];
    let (mut mean, mut m2) = (0.0, 0.0);
    for i in 0..n {
        let mut w = volume;
        for (k, axis) in spec.axes.iter().enumerate() {
            let t = rng.gen_range(ranges[k].0..ranges[k].1);
            let (x, jac) = axis.map(t);
            pt[k] = x;
            w *= jac;
        }
        let y = if w == 0.0 { 0.0 } else { f(&pt) * w };
        check_finite(&pt, y)?;
        let d = y - mean;
        mean += d / (i + 1) as f64;
        m2 += d * (y - mean);
    }
    let var = m2 / (n - 1) as f64;
    Ok(IntegrationResult {
        value: mean,
        error_estimate: (var / n as f64).sqrt(),
        evals: n,
        converged: true,
    })
}
