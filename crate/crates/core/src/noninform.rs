//! Relative entropy between priors and the comparative noninformativity test.
//!
//! Prior `p1` is judged more noninformative than `p2` when conditioning `p1`
//! on (formal) data brings it closer to `p2`, while conditioning `p2` moves it
//! further from `p1`.

use std::fmt;
use std::io::Write;
use std::sync::Mutex;

use rayon::prelude::*;

use crate::bayes::{likelihood, likelihood_q, posterior, LikelihoodField, MeasurementSpec};
use crate::error::{domain, Error, Result};
use crate::priors::PriorDensity;

/// Values this far below zero are clamped to zero.
pub const NEGATIVE_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KLResult {
    /// Nats.
    pub value: f64,
    pub error_estimate: f64,
    pub evals: u64,
}

impl KLResult {
    pub(crate) fn clamped(value: f64, error_estimate: f64, evals: u64) -> Self {
        let value = if value < 0.0 && value >= -(NEGATIVE_SLACK + error_estimate) { 0.0 } else { value };
        Self { value, error_estimate, evals }
    }
}

/// `S_KL(p ‖ q) = ∫ p log(p/q)`, in nats.
pub fn kl(p: &PriorDensity, q: &PriorDensity) -> Result<KLResult> {
    if p.domain() != q.domain() {
        return domain(format!("{} and {} live on different domains", p.name(), q.name()));
    }
    let bad: Mutex<Option<Vec<f64>>> = Mutex::new(None);
    let flag = |pt: Vec<f64>| {
        let mut g = bad.lock().unwrap_or_else(|e| e.into_inner());
        if g.is_none() {
            *g = Some(pt);
        }
    };
    let moment_path = match (p.likelihoods(), q.likelihoods()) {
        ([lp], []) => Some((Some(*lp), None)),
        ([], [lq]) => Some((None, Some(*lq))),
        ([lp], [lq]) if lp.spec == lq.spec && lp.escort == lq.escort => Some((Some(*lp), Some(*lq))),
        _ => None,
    };
    let r = if let Some((lp, lq)) = moment_path {
        // log(p/q) = log(k_p N_q / k_q N_p) + ln L_p − ln L_q; only the
        // spherical means of L, L ln L and ln L are needed.
        let (np, nq) = (p.normalization(), q.normalization());
        let like = lp.or(lq).expect("one tilt present");
        crate::bayes::moment_integral(p, &like, |qq, r, s| {
            let kq = q.raw_radial_c(qq, r, s);
            if kq <= 0.0 {
                flag(vec![qq, r]);
                return [0.0; 4];
            }
            let logk = (p.raw_radial_c(qq, r, s) * nq / (kq * np)).ln();
            match (lp, lq) {
                (Some(a), None) => [0.0, a.scale * (logk + a.scale.ln()) / np, a.scale / np, 0.0],
                (None, Some(b)) => [(logk - b.scale.ln()) / np, 0.0, 0.0, -1.0 / np],
                (Some(a), Some(b)) => [0.0, a.scale * (logk + (a.scale / b.scale).ln()) / np, 0.0, 0.0],
                (None, None) => unreachable!(),
            }
        })?
    } else if p.is_isotropic() && q.is_isotropic() {
        let (np, nq) = (p.normalization(), q.normalization());
        p.radial_integral(
            |qq, r, s| {
                let kq = q.raw_radial_c(qq, r, s);
                if kq <= 0.0 {
                    flag(vec![qq, r]);
                    return 0.0;
                }
                let ratio = p.raw_radial_c(qq, r, s) * nq / (kq * np);
                ratio.ln() / np
            },
            p.radial_tol().max(q.radial_tol()),
        )?
    } else {
        p.domain_integral(
            |c| {
                let a = p.density_at(c);
                if a <= 0.0 {
                    return 0.0;
                }
                let b = q.density_at(c);
                if b <= 0.0 {
                    flag(vec![c.q, c.r, c.theta1, c.theta2]);
                    return 0.0;
                }
                a * (a / b).ln()
            },
            p.full_tol().max(q.full_tol()),
        )?
    };
    if let Some(pt) = bad.into_inner().unwrap_or_else(|e| e.into_inner()) {
        return Err(Error::Divergent(format!(
            "{} vanishes at {pt:?} where {} has positive density",
            q.name(),
            p.name()
        )));
    }
    Ok(KLResult::clamped(r.value, r.error_estimate, r.evals))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Verdict {
    FirstMoreNoninformative,
    SecondMoreNoninformative,
    Inconclusive,
}

impl Verdict {
    pub fn from_stats(s12: f64, s21: f64, s12_post: f64, s21_post: f64) -> Self {
        if s12_post < s12 && s21_post > s21 {
            Verdict::FirstMoreNoninformative
        } else if s21_post < s21 && s12_post > s12 {
            Verdict::SecondMoreNoninformative
        } else {
            Verdict::Inconclusive
        }
    }

    pub fn mirrored(self) -> Self {
        match self {
            Verdict::FirstMoreNoninformative => Verdict::SecondMoreNoninformative,
            Verdict::SecondMoreNoninformative => Verdict::FirstMoreNoninformative,
            Verdict::Inconclusive => Verdict::Inconclusive,
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::FirstMoreNoninformative => "first_more_noninformative",
            Verdict::SecondMoreNoninformative => "second_more_noninformative",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

/// Posterior-to-prior relative entropies under one likelihood.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClarkeStage {
    pub spec: MeasurementSpec,
    pub s12_post: f64,
    pub s21_post: f64,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClarkeVerdict {
    pub first: String,
    pub second: String,
    pub s12: f64,
    pub s21: f64,
    /// `S_KL(post_1 ‖ p2)` under the test likelihood.
    pub s12_post: f64,
    /// `S_KL(post_2 ‖ p1)` under the test likelihood.
    pub s21_post: f64,
    pub verdict: Verdict,
    /// Every stage computed; the test stage is one of them.
    pub stages: Vec<ClarkeStage>,
}

impl ClarkeVerdict {
    pub fn mirrored(&self) -> Self {
        Self {
            first: self.second.clone(),
            second: self.first.clone(),
            s12: self.s21,
            s21: self.s12,
            s12_post: self.s21_post,
            s21_post: self.s12_post,
            verdict: self.verdict.mirrored(),
            stages: self
                .stages
                .iter()
                .map(|s| ClarkeStage {
                    spec: s.spec,
                    s12_post: s.s21_post,
                    s21_post: s.s12_post,
                    verdict: s.verdict.mirrored(),
                })
                .collect(),
        }
    }

    pub fn stage(&self, power: f64) -> Option<&ClarkeStage> {
        self.stages.iter().find(|s| s.spec.power == power)
    }

    /// Name of the more noninformative prior, if decided.
    pub fn winner(&self) -> Option<&str> {
        match self.verdict {
            Verdict::FirstMoreNoninformative => Some(&self.first),
            Verdict::SecondMoreNoninformative => Some(&self.second),
            Verdict::Inconclusive => None,
        }
    }
}

/// The likelihood matching a prior's domain: escort for priors over `q`.
pub fn test_likelihood(prior: &PriorDensity, spec: MeasurementSpec) -> LikelihoodField {
    if prior.domain().q_range().is_some() {
        likelihood_q(spec)
    } else {
        likelihood(spec)
    }
}

/// Stage specs computed for a test spec: the spec itself, plus its power-1 version.
fn stage_specs(test: MeasurementSpec) -> Result<Vec<MeasurementSpec>> {
    let mut v = vec![test];
    if test.power != 1.0 {
        v.push(test.with_power(1.0)?);
    }
    Ok(v)
}

fn posteriors(p: &PriorDensity, specs: &[MeasurementSpec]) -> Result<Vec<PriorDensity>> {
    specs.par_iter().map(|&s| posterior(p, &test_likelihood(p, s))).collect()
}

fn compare_with(
    p1: &PriorDensity,
    p2: &PriorDensity,
    post1: &[PriorDensity],
    post2: &[PriorDensity],
    specs: &[MeasurementSpec],
) -> Result<ClarkeVerdict> {
    let (s12, s21) = rayon::join(|| kl(p1, p2), || kl(p2, p1));
    let (s12, s21) = (s12?.value, s21?.value);
    let stages = specs
        .par_iter()
        .enumerate()
        .map(|(k, &spec)| {
            let (a, b) = rayon::join(|| kl(&post1[k], p2), || kl(&post2[k], p1));
            let (a, b) = (a?.value, b?.value);
            Ok(ClarkeStage { spec, s12_post: a, s21_post: b, verdict: Verdict::from_stats(s12, s21, a, b) })
        })
        .collect::<Result<Vec<_>>>()?;
    let test = stages[0];
    Ok(ClarkeVerdict {
        first: p1.name().to_string(),
        second: p2.name().to_string(),
        s12,
        s21,
        s12_post: test.s12_post,
        s21_post: test.s21_post,
        verdict: test.verdict,
        stages,
    })
}

/// Runs the comparative test for one pair. The verdict follows `test`; the
/// power-1 stage is reported alongside when `test` has another power.
pub fn clarke_compare(p1: &PriorDensity, p2: &PriorDensity, test: MeasurementSpec) -> Result<ClarkeVerdict> {
    let specs = stage_specs(test)?;
    let (a, b) = rayon::join(|| posteriors(p1, &specs), || posteriors(p2, &specs));
    compare_with(p1, p2, &a?, &b?, &specs)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankingReport {
    pub names: Vec<String>,
    /// One entry per unordered pair `(i, j)`, `i < j`, with `first = names[i]`.
    pub pairs: Vec<ClarkeVerdict>,
    /// `matrix[i][j]`: verdict of `names[i]` against `names[j]`.
    pub matrix: Vec<Vec<Verdict>>,
    pub inconclusive: Vec<(String, String)>,
    pub transitive: bool,
    /// Most to least noninformative, when every pair is decided and consistent.
    pub total_order: Option<Vec<String>>,
}

impl RankingReport {
    /// One row per ordered pair.
    pub fn ordered_rows(&self) -> Vec<ClarkeVerdict> {
        self.pairs.iter().flat_map(|v| [v.clone(), v.mirrored()]).collect()
    }

    pub fn ranking_line(&self) -> String {
        match &self.total_order {
            Some(o) => format!("ranking: {}", o.join(" > ")),
            None if !self.transitive => "ranking: none (pairwise verdicts are not transitive)".to_string(),
            None => "ranking: none (inconclusive pairs)".to_string(),
        }
    }

    pub fn to_markdown(&self) -> String {
        let mut s = String::from(
            "| first | second | S12 | S21 | S12_post | S21_post | verdict |\n|---|---|---|---|---|---|---|\n",
        );
        for v in self.ordered_rows() {
            s.push_str(&format!(
                "| {} | {} | {:.6} | {:.6} | {:.6} | {:.6} | {} |\n",
                v.first, v.second, v.s12, v.s21, v.s12_post, v.s21_post, v.verdict
            ));
        }
        s.push('\n');
        s.push_str(&self.ranking_line());
        s.push('\n');
        s
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let io = |e: csv::Error| Error::Parse(format!("CSV output: {e}"));
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["first", "second", "S12", "S21", "S12_post", "S21_post", "verdict", "power"]).map_err(io)?;
        for v in self.ordered_rows() {
            for st in &v.stages {
                w.write_record([
                    v.first.as_str(),
                    v.second.as_str(),
                    &format!("{:.16e}", v.s12),
                    &format!("{:.16e}", v.s21),
                    &format!("{:.16e}", st.s12_post),
                    &format!("{:.16e}", st.s21_post),
                    &st.verdict.to_string(),
                    &st.spec.power.to_string(),
                ])
                .map_err(io)?;
            }
        }
        w.flush().map_err(|e| Error::Parse(format!("CSV output: {e}")))?;
        Ok(())
    }
}

/// Pairwise comparisons over all priors, with a transitivity check.
pub fn rank(priors: &[PriorDensity], test: MeasurementSpec) -> Result<RankingReport> {
    if priors.len() < 2 {
        return domain("ranking needs at least two priors");
    }
    let specs = stage_specs(test)?;
    let posts = priors.par_iter().map(|p| posteriors(p, &specs)).collect::<Result<Vec<_>>>()?;
    let n = priors.len();
    let idx: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let pairs = idx
        .par_iter()
        .map(|&(i, j)| compare_with(&priors[i], &priors[j], &posts[i], &posts[j], &specs))
        .collect::<Result<Vec<_>>>()?;
    let names: Vec<String> = priors.iter().map(|p| p.name().to_string()).collect();
    let mut matrix = vec![vec![Verdict::Inconclusive; n]; n];
    let mut inconclusive = Vec::new();
    for (&(i, j), v) in idx.iter().zip(&pairs) {
        matrix[i][j] = v.verdict;
        matrix[j][i] = v.verdict.mirrored();
        if v.verdict == Verdict::Inconclusive {
            inconclusive.push((names[i].clone(), names[j].clone()));
        }
    }
    let beats = |a: usize, b: usize| matrix[a][b] == Verdict::FirstMoreNoninformative;
    // transitive: a > b and b > c imply a > c
    let transitive = (0..n).all(|a| {
        (0..n).all(|b| (0..n).all(|c| !(beats(a, b) && beats(b, c)) || beats(a, c)))
    });
    let total_order = if inconclusive.is_empty() && transitive {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&a| std::cmp::Reverse((0..n).filter(|&b| beats(a, b)).count()));
        Some(order.into_iter().map(|k| names[k].clone()).collect())
    } else {
        None
    };
    Ok(RankingReport { names, pairs, matrix, inconclusive, transitive, total_order })
}
