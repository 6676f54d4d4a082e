use std::path::Path;

use anyhow::Result;
use qprior::metrics::closed::{
    aberaj_metric_q1, bures_bloch_closed, bures_extended_closed, spin1_bures_closed,
};
use qprior::metrics::degeneracy::{
    degeneracy_scan, sample_aberaj, sample_bloch, sample_escort, sample_spin1, sample_spin1_escort,
};
use qprior::metrics::hubner::{
    hubner_metric_richardson, BlochFamily, EscortFamily, SpinOneEscortFamily, SpinOneFamily, RICHARDSON_STEP,
};
use qprior::noninform::test_likelihood;
use qprior::priors::default_grid;
use qprior::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::Config;
use crate::output::{csv_table, emit, num};
use crate::{Family, Format, MetricAction, Mode, PriorAction, Usage};

fn parse_point(s: Option<&str>, arity: &[usize]) -> Result<Vec<f64>, Usage> {
    let s = s.ok_or_else(|| Usage("`--point` is required for `metric eval`".into()))?;
    let v = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| Usage(format!("bad coordinate `{t}` in --point"))))
        .collect::<Result<Vec<_>, _>>()?;
    if !arity.contains(&v.len()) {
        return Err(Usage(format!("--point needs {arity:?} coordinates, got {}", v.len())));
    }
    Ok(v)
}

fn escort_point(x: &[f64]) -> qprior::Result<EscortPoint> {
    EscortPoint::new(x[0], BlochPoint::new(x[1], x[2], x[3])?)
}

fn spin_point(x: &[f64]) -> qprior::Result<SpinOneFamilyPoint> {
    SpinOneFamilyPoint::new(x[0], x[1], x[2], x[3])
}

/// Closed-form tensor of a family at `x`; the 5-coordinate spin-1 point is the
/// escort extension, which only has a numeric form.
fn closed_metric(family: Family, x: &[f64], truncated: bool) -> qprior::Result<MetricTensor> {
    match family {
        Family::Bloch => bures_bloch_closed(&BlochPoint::new(x[0], x[1], x[2])?),
        Family::Escort => bures_extended_closed(&escort_point(x)?, truncated),
        Family::Spin1 if x.len() == 5 => hubner_metric_richardson(&SpinOneEscortFamily, x, RICHARDSON_STEP),
        Family::Spin1 => spin1_bures_closed(&spin_point(x)?),
        Family::Aberaj => aberaj_metric_q1(&AbeRajPoint::new(x[0], x[1])?),
    }
}

fn numeric_metric(family: Family, x: &[f64], step: f64) -> Result<MetricTensor> {
    Ok(match family {
        Family::Bloch => hubner_metric_richardson(&BlochFamily, x, step)?,
        Family::Escort => hubner_metric_richardson(&EscortFamily, x, step)?,
        Family::Spin1 if x.len() == 5 => hubner_metric_richardson(&SpinOneEscortFamily, x, step)?,
        Family::Spin1 => hubner_metric_richardson(&SpinOneFamily, x, step)?,
        Family::Aberaj => {
            return Err(qprior::Error::Domain("the Abe-Rajagopal family has no density matrix to difference".into()).into())
        }
    })
}

fn arity(family: Family) -> &'static [usize] {
    match family {
        Family::Bloch => &[3],
        Family::Escort => &[4],
        Family::Spin1 => &[4, 5],
        Family::Aberaj => &[2],
    }
}

pub fn metric(
    cfg: &Config,
    action: MetricAction,
    family: Family,
    point: Option<&str>,
    samples: usize,
    numeric: bool,
    truncated: bool,
) -> Result<()> {
    if samples == 0 && action != MetricAction::Eval {
        return Err(Usage("--samples must be positive".into()).into());
    }
    match action {
        MetricAction::Eval => {
            let x = parse_point(point, arity(family))?;
            let g = if numeric { numeric_metric(family, &x, RICHARDSON_STEP)? } else { closed_metric(family, &x, truncated)? };
            let labels: Vec<String> = g.labels().iter().map(|l| l.to_string()).collect();
            let mut rows = Vec::new();
            for i in 0..g.dim() {
                for j in 0..g.dim() {
                    rows.push(vec![format!("g_{}_{}", labels[i], labels[j]), num(g.get(i, j))]);
                }
            }
            let v = g.volume_element();
            rows.push(vec!["det".into(), num(v.det)]);
            rows.push(vec!["volume_element".into(), num(v.value)]);
            rows.push(vec!["degeneracy_ratio".into(), num(g.degeneracy_ratio())]);
            rows.push(vec!["degenerate".into(), v.degenerate.to_string()]);
            emit(None, &csv_table(&["quantity", "value"], &rows)?)
        }
        MetricAction::Check => {
            let sampler = match family {
                Family::Bloch => sample_bloch,
                Family::Escort => sample_escort,
                Family::Spin1 => sample_spin1,
                Family::Aberaj => {
                    return Err(qprior::Error::Domain("the Abe-Rajagopal tensor has no numeric counterpart".into()).into())
                }
            };
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let (mut worst, mut skipped, mut n) = (0.0f64, 0usize, 0usize);
            while n < samples {
                let x = sampler(&mut rng);
                if family == Family::Escort && escort_min_eigenvalue(&x) <= MIN_CHECK_EIGENVALUE {
                    skipped += 1;
                    continue;
                }
                n += 1;
                let dev = numeric_metric(family, &x, RICHARDSON_STEP)?.max_relative_deviation(&closed_metric(family, &x, false)?)?;
                worst = worst.max(dev);
            }
            let row = vec![format!("{family:?}").to_lowercase(), samples.to_string(), skipped.to_string(), num(worst), cfg.seed.to_string()];
            emit(None, &csv_table(&["family", "samples", "skipped_ill_conditioned", "max_relative_deviation", "seed"], &[row])?)
        }
        MetricAction::Detnull => {
            let (report, tol) = detnull_scan(family, samples, cfg.seed)?;
            let row = vec![
                format!("{family:?}").to_lowercase(),
                samples.to_string(),
                num(report.max_ratio),
                report.failures.to_string(),
                num(tol),
                report.is_null(tol).to_string(),
            ];
            emit(None, &csv_table(&["family", "samples", "max_det_over_scale", "failures", "tolerance", "null"], &[row])?)
        }
    }
}

/// Escort points are compared only where the smaller eigenvalue of `ρ` exceeds this;
/// below it the state is rank-deficient to working precision.
const MIN_CHECK_EIGENVALUE: f64 = 1e-8;

fn escort_min_eigenvalue(x: &[f64]) -> f64 {
    let w = ((1.0 - x[1]) / (1.0 + x[1])).powf(x[0]);
    w / (1.0 + w)
}

/// Determinant scan with the tolerance that applies to each family. The
/// spin-1 scan uses the escort-extended 3×3 tensor; Bloch is the non-null control.
pub fn detnull_scan(family: Family, samples: usize, seed: u64) -> Result<(metrics::DegeneracyReport, f64)> {
    Ok(match family {
        Family::Bloch => (
            degeneracy_scan(|x| closed_metric(Family::Bloch, x, false), sample_bloch, samples, seed)?,
            1e-10,
        ),
        Family::Escort => (
            degeneracy_scan(|x| closed_metric(Family::Escort, x, false), sample_escort, samples, seed)?,
            1e-10,
        ),
        Family::Spin1 => (
            degeneracy_scan(
                |x| hubner_metric_richardson(&SpinOneEscortFamily, x, RICHARDSON_STEP),
                sample_spin1_escort,
                samples,
                seed,
            )?,
            1e-7,
        ),
        Family::Aberaj => (
            degeneracy_scan(|x| aberaj_metric_q1(&AbeRajPoint::new(x[0], x[1])?), sample_aberaj, samples, seed)?,
            1e-10,
        ),
    })
}

pub fn mode(m: Mode) -> MarginalMode {
    match m {
        Mode::Normalized => MarginalMode::Normalized,
        Mode::Raw => MarginalMode::Raw,
    }
}

pub fn prior(
    cfg: &Config,
    action: PriorAction,
    name: PriorName,
    var: MarginalVar,
    points: usize,
    m: Mode,
    out: Option<&Path>,
) -> Result<()> {
    let p = build_prior(name, &cfg.prior_config()?)?;
    match action {
        PriorAction::Normalize => {
            let reference = p.reference_normalization().map(num).unwrap_or_default();
            let mass = p.total_mass()?;
            let row = vec![name.to_string(), num(p.normalization()), reference, num(mass), cfg.convention()?.to_string()];
            emit(out, &csv_table(&["prior", "normalization", "reference", "total_mass", "pb_convention"], &[row])?)
        }
        PriorAction::Marginal => {
            if points < 2 {
                return Err(Usage("--points must be at least 2".into()).into());
            }
            let grid = default_grid(&p, var, points)?;
            let curve = marginal(&p, var, &grid, mode(m))?;
            let mut buf = Vec::new();
            curve.write_csv(&mut buf)?;
            emit(out, std::str::from_utf8(&buf)?)
        }
    }
}

pub fn kl(cfg: &Config, p: PriorName, q: PriorName, power: Option<f64>) -> Result<()> {
    let pc = cfg.prior_config()?;
    let (a, b) = rayon::join(|| build_prior(p, &pc), || build_prior(q, &pc));
    let (a, b) = (a?, b?);
    let (a, stage) = match power {
        None => (a, "prior".to_string()),
        Some(pw) => {
            let spec = MeasurementSpec::canonical().with_power(pw).map_err(|e| Usage(e.to_string()))?;
            (posterior(&a, &test_likelihood(&a, spec))?, format!("posterior pow {pw}"))
        }
    };
    let r = qprior::kl(&a, &b)?;
    let row = vec![p.to_string(), q.to_string(), stage, num(r.value), num(r.error_estimate)];
    emit(None, &csv_table(&["p", "q", "stage", "kl_nats", "error_estimate"], &[row])?)
}

pub fn rank(cfg: &Config, names: &[PriorName], format: Format) -> Result<()> {
    if names.len() < 2 {
        return Err(Usage("--priors needs at least two names".into()).into());
    }
    let priors = qprior::priors::build_priors(names, &cfg.prior_config()?)?;
    let report = qprior::rank(&priors, MeasurementSpec::canonical_sqrt())?;
    match format {
        Format::Md => emit(None, &report.to_markdown()),
        Format::Csv => {
            let mut buf = Vec::new();
            report.write_csv(&mut buf)?;
            emit(None, std::str::from_utf8(&buf)?)
        }
    }
}

/// The q-extended counterpart of a three-dimensional prior.
pub fn q_extended(name: PriorName) -> Option<PriorName> {
    match name {
        PriorName::PB | PriorName::PBtrunc | PriorName::PBqext4D => Some(PriorName::PBqext4D),
        PriorName::PF | PriorName::PFq1 | PriorName::PFqext4D => Some(PriorName::PFqext4D),
    }
}

pub fn infogain(cfg: &Config, name: PriorName, spec: MeasurementSpec, extended: bool) -> Result<()> {
    let pc = cfg.prior_config()?;
    let (used, r) = if extended || name.is_4d() {
        let n = q_extended(name).expect("every prior has a q-extended form");
        (n, info_gain_qext(&build_prior(n, &pc)?, spec)?)
    } else {
        (name, info_gain(&build_prior(name, &pc)?, &likelihood(spec))?)
    };
    let row = vec![used.to_string(), spec.to_string(), num(r.value), num(r.error_estimate)];
    emit(None, &csv_table(&["prior", "spec", "gain_nats", "error_estimate"], &[row])?)
}
