//! `report --all`: every table and figure dataset, plus a summary comparing
//! computed values with reference values.
//!
//! Sections run concurrently and only return file contents; writing happens
//! afterwards, each file atomically, in a fixed order. Nothing time- or
//! host-dependent is written, so reruns with one configuration are identical.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use anyhow::Result;
use qprior::metrics::f_eval;
use qprior::metrics::FFunctionId;
use qprior::priors::{
    dominance_crossover, log_grid, marginal_at, marginal_peak, marginal_qr,
    truncated_bures_r_antiderivative,
};
use qprior::*;
use rayon::prelude::*;

use crate::commands::detnull_scan;
use crate::config::Config;
use crate::output::{csv_table, num, write_atomic};
use crate::Family;

/// One line of the summary table.
struct Row {
    quantity: String,
    computed: String,
    reference: String,
    status: &'static str,
}

impl Row {
    fn compare(quantity: impl Into<String>, got: f64, want: f64, rel: f64) -> Self {
        let dev = (got - want).abs() / want.abs();
        Row {
            quantity: quantity.into(),
            computed: format!("{got:.7}"),
            reference: format!("{want} (rel. dev. {dev:.1e}, tol {rel:.0e})"),
            status: if dev <= rel { "match" } else { "differs" },
        }
    }

    fn check(quantity: impl Into<String>, computed: impl Into<String>, reference: impl Into<String>, ok: bool) -> Self {
        Row { quantity: quantity.into(), computed: computed.into(), reference: reference.into(), status: if ok { "match" } else { "differs" } }
    }

    fn info(quantity: impl Into<String>, computed: impl Into<String>) -> Self {
        Row { quantity: quantity.into(), computed: computed.into(), reference: String::new(), status: "" }
    }
}

#[derive(Default)]
struct Section {
    title: &'static str,
    rows: Vec<Row>,
    notes: Vec<String>,
    files: Vec<(String, String)>,
}

impl Section {
    fn new(title: &'static str) -> Self {
        Section { title, ..Default::default() }
    }

    fn file(&mut self, name: &str, contents: String) {
        self.files.push((name.to_string(), contents));
    }
}

const RANKED_ORDER: [&str; 4] = ["p_Fq1", "p_B", "p_Btrunc", "p_F"];

/// `(first, second, power or 0 for the priors, S12, S21)`.
const KL_REFERENCE: &[(&str, &str, f64, f64, f64)] = &[
    ("p_B", "p_Btrunc", 0.0, 0.101846, 0.0661775),
    ("p_B", "p_Btrunc", 1.0, 0.169782, 0.197657),
    ("p_B", "p_Btrunc", 0.5, 0.093849, 0.114669),
    ("p_F", "p_Fq1", 0.0, 0.229666, 0.170145),
    ("p_F", "p_Fq1", 1.0, 0.70766, 0.0641738),
    ("p_B", "p_Fq1", 0.0, 0.148269, 0.0989669),
    ("p_B", "p_Fq1", 0.5, 0.283218, 0.0842879),
    ("p_Btrunc", "p_Fq1", 0.0, 0.105463, 0.0914175),
    ("p_Btrunc", "p_F", 0.0, 0.0191948, 0.0234599),
    ("p_Btrunc", "p_F", 0.5, 0.0143147, 0.1047772),
];

const GAIN_SPECS: [&str; 3] = ["z:1,1", "z:1,0", "z:2,0"];
const GAIN_EXTENDED: [f64; 3] = [0.0597923, 0.134651, 0.349601];

fn gain_closed() -> [f64; 3] {
    [7.0 / 6.0 - 3f64.ln(), 0.140186, 59.0 / 30.0 - 5f64.ln()]
}

fn ranked(cfg: &PriorConfig) -> Result<Vec<PriorDensity>> {
    Ok(qprior::priors::build_priors(&PriorName::RANKED, cfg)?)
}

fn lookup(report: &RankingReport, a: &str, b: &str) -> Option<ClarkeVerdict> {
    report.ordered_rows().into_iter().find(|v| v.first == a && v.second == b)
}

fn kl_stats(v: &ClarkeVerdict, power: f64) -> Option<(f64, f64)> {
    if power == 0.0 {
        Some((v.s12, v.s21))
    } else {
        v.stage(power).map(|s| (s.s12_post, s.s21_post))
    }
}

fn markdown_table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut s = format!("| {} |\n|{}\n", header.join(" | "), "---|".repeat(header.len()));
    for r in rows {
        let _ = writeln!(s, "| {} |", r.join(" | "));
    }
    s
}

fn normalizations(cfg: &PriorConfig) -> Result<Section> {
    let mut sec = Section::new("Normalization constants");
    let mut rows = Vec::new();
    for name in PriorName::ALL {
        let p = build_prior(name, cfg)?;
        let mass = p.total_mass()?;
        let reference = p.reference_normalization();
        rows.push(vec![name.to_string(), num(p.normalization()), reference.map(num).unwrap_or_default(), num(mass)]);
        if let Some(r) = reference {
            sec.rows.push(Row::compare(format!("{name} normalization"), p.normalization(), r, 1e-4));
        }
        sec.rows.push(Row::check(format!("{name} total mass"), format!("{mass:.10}"), "1 (tol 1e-6)", (mass - 1.0).abs() < 1e-6));
    }
    sec.file("normalizations.csv", csv_table(&["prior", "normalization", "reference", "total_mass"], &rows)?);
    Ok(sec)
}

fn closed_marginals(cfg: &PriorConfig) -> Result<Section> {
    let mut sec = Section::new("Closed marginals of the truncated extended Bures volume element");
    let p = build_prior(PriorName::PBqext4D, cfg)?;
    let mut rows = Vec::new();
    for q in [1.0, 2.0, 10.0] {
        let got = marginal_at(&p, MarginalVar::Q, q, MarginalMode::Raw)?;
        let want = PI * (1.0 + 4f64.ln()) / (24.0 * q);
        rows.push(vec!["q".into(), num(q), num(got), num(want)]);
        sec.rows.push(Row::compare(format!("∫ volume element d³x at q = {q}"), got, want, 1e-4));
    }
    for r in [0.1, 0.5, 0.9] {
        let got = marginal_at(&p, MarginalVar::R, r, MarginalMode::Raw)?;
        let want = truncated_bures_r_antiderivative(cfg.q_max, r)? - truncated_bures_r_antiderivative(cfg.q_min, r)?;
        rows.push(vec!["r".into(), num(r), num(got), num(want)]);
        sec.rows.push(Row::check(
            format!("q-integrated volume element at r = {r}"),
            format!("{got:.10}"),
            format!("{want:.10} from the q-antiderivative (tol 1e-5)"),
            (got - want).abs() < 1e-5,
        ));
    }
    sec.file("closed_marginals.csv", csv_table(&["variable", "value", "quadrature", "closed_form"], &rows)?);
    Ok(sec)
}

/// KL table under the configured convention.
fn kl_table(cfg: &PriorConfig) -> Result<Section> {
    let mut sec = Section::new("Relative entropies and ranking");
    let priors = ranked(cfg)?;
    let report = rank(&priors, MeasurementSpec::canonical_sqrt())?;
    let mut buf = Vec::new();
    report.write_csv(&mut buf)?;
    sec.file("kl_table.csv", String::from_utf8(buf)?);
    sec.file("kl_table.md", report.to_markdown());
    for &(a, b, pw, w12, w21) in KL_REFERENCE {
        let v = lookup(&report, a, b).expect("every pair is ranked");
        let (s12, s21) = kl_stats(&v, pw).expect("stage computed");
        let stage = if pw == 0.0 { "priors".to_string() } else { format!("posteriors, power {pw}") };
        sec.rows.push(Row::compare(format!("S({a}‖{b}), {stage}"), s12, w12, 0.02));
        sec.rows.push(Row::compare(format!("S({b}‖{a}), {stage}"), s21, w21, 0.02));
    }
    let got = report.total_order.clone().unwrap_or_default();
    sec.rows.push(Row::check("ranking", report.ranking_line(), RANKED_ORDER.join(" > "), got == RANKED_ORDER));
    Ok(sec)
}

/// Pure-state dominance table and the four r-marginal curves.
fn dominance(cfg: &PriorConfig) -> Result<Section> {
    let mut sec = Section::new("Pointwise dominance near pure states");
    let priors = ranked(cfg)?;
    let ordered: Vec<PriorDensity> =
        RANKED_ORDER.iter().map(|n| priors.iter().find(|p| p.name() == *n).unwrap().clone()).collect();
    let d = pure_state_dominance(&ordered, 0.005, 20)?;
    let mut rows = Vec::new();
    for (i, r) in d.radii.iter().enumerate() {
        let mut row = vec![num(*r)];
        row.extend(d.values[i].iter().map(|v| num(*v)));
        row.push(d.orders[i].iter().map(|&k| d.names[k].as_str()).collect::<Vec<_>>().join(" > "));
        rows.push(row);
    }
    let mut header = vec!["r"];
    header.extend(RANKED_ORDER);
    header.push("order");
    sec.file("dominance.csv", csv_table(&header, &rows)?);
    let agree = d.agreement(&RANKED_ORDER);
    sec.rows.push(Row::check(
        "radii in [0.995, 1) ordered as the ranking",
        format!("{agree}/{}", d.radii.len()),
        format!("{}/{}", d.radii.len(), d.radii.len()),
        agree == d.radii.len(),
    ));
    if let Some(c) = dominance_crossover(&ordered[0], &ordered[1], 1.0 - 0.005, 1.0 - 1e-5)? {
        sec.rows.push(Row::info("r where the p_Fq1 and p_B r-marginals cross", format!("{c:.6}")));
        sec.notes.push(format!(
            "Below r ≈ {c:.5} the p_B r-marginal exceeds p_Fq1's, so the order p_Fq1 > p_B holds pointwise only closer to r = 1; the near-pure window [0.995, 1) straddles the crossing."
        ));
    }
    let reverse = d.near_origin_order.iter().rev().eq(RANKED_ORDER.iter());
    sec.rows.push(Row::check(
        format!("order at r = {}", d.near_origin_radius),
        d.near_origin_order.join(" > "),
        "not the exact reverse of the ranking",
        !reverse,
    ));

    // r-marginals over the full range plus a dense near-pure grid
    let mut grid: Vec<f64> = (0..200).map(|i| i as f64 / 200.0 * 0.995).collect();
    grid.extend((0..100).map(|i| 0.995 + 0.005 * (1.0 - (-(i as f64) / 12.0).exp())));
    let curves = ordered
        .par_iter()
        .map(|p| marginal(p, MarginalVar::R, &grid, MarginalMode::Normalized))
        .collect::<qprior::Result<Vec<_>>>()?;
    let rows: Vec<Vec<String>> = grid
        .iter()
        .enumerate()
        .map(|(i, r)| std::iter::once(num(*r)).chain(curves.iter().map(|c| num(c.values[i]))).collect())
        .collect();
    let mut header = vec!["r"];
    header.extend(RANKED_ORDER);
    sec.file("r_marginals.csv", csv_table(&header, &rows)?);
    Ok(sec)
}

fn info_gains(cfg: &PriorConfig) -> Result<Section> {
    let mut sec = Section::new("Expected information gains (nats)");
    let pb = build_prior(PriorName::PB, cfg)?;
    let p4 = build_prior(PriorName::PBqext4D, cfg)?;
    let closed = gain_closed();
    let mut rows = Vec::new();
    for (i, s) in GAIN_SPECS.iter().enumerate() {
        let spec: MeasurementSpec = s.parse()?;
        let g = info_gain(&pb, &likelihood(spec))?.value;
        let gq = info_gain_qext(&p4, spec)?.value;
        rows.push(vec![s.to_string(), num(g), num(closed[i]), num(gq), num(GAIN_EXTENDED[i])]);
        sec.rows.push(Row::check(
            format!("p_B, {s}"),
            format!("{g:.7}"),
            format!("{:.7} (abs. tol 1e-4)", closed[i]),
            (g - closed[i]).abs() < 1e-4,
        ));
        sec.rows.push(Row::compare(format!("p_Bqext4D (q-extended), {s}"), gq, GAIN_EXTENDED[i], 0.02));
        sec.rows.push(Row::check(format!("unextended exceeds extended, {s}"), format!("{:.7}", g - gq), "> 0", g > gq));
    }
    sec.file("info_gains.csv", csv_table(&["spec", "p_B", "p_B_reference", "p_Bqext4D", "p_Bqext4D_reference"], &rows)?);
    Ok(sec)
}

fn metric_checks(seed: u64) -> Result<Section> {
    let mut sec = Section::new("Metric tensors");
    let mut rows = Vec::new();
    for (family, n) in [(Family::Escort, 1000), (Family::Spin1, 200), (Family::Aberaj, 1000), (Family::Bloch, 200)] {
        let (r, tol) = detnull_scan(family, n, seed)?;
        let name = format!("{family:?}").to_lowercase();
        rows.push(vec![name.clone(), n.to_string(), num(r.max_ratio), r.failures.to_string(), num(tol), r.is_null(tol).to_string()]);
        let want_null = family != Family::Bloch;
        sec.rows.push(Row::check(
            format!("{name}: max |det g|/Π g_ii over {n} points"),
            format!("{:.1e}", r.max_ratio),
            if want_null { format!("< {tol:.0e} (null)") } else { "non-null control".into() },
            r.failures == 0 && r.is_null(tol) == want_null,
        ));
    }
    sec.file("degeneracy.csv", csv_table(&["family", "samples", "max_det_over_scale", "failures", "tolerance", "null"], &rows)?);
    Ok(sec)
}

/// The Bures q-generalization and the truncated extended Bures marginals.
fn bures_figures(cfg: &PriorConfig) -> Result<Section> {
    let mut sec = Section::new("Extended Bures figure data");
    let mut rows = Vec::new();
    for q in [0.5, 1.5, 2.0, 5.0, 10.0] {
        for i in 1..100 {
            let t = i as f64 / 100.0;
            rows.push(vec![num(q), num(t), num(f_eval(FFunctionId::BuresQ(q), t)?)]);
        }
    }
    sec.file("f_bures_q.csv", csv_table(&["q", "t", "f"], &rows)?);
    let p = build_prior(PriorName::PBqext4D, cfg)?;
    sec.file("bures_q_r.csv", qr_csv(&p, cfg)?);
    let grid = log_grid(cfg.q_min, cfg.q_max, 101);
    let c = marginal(&p, MarginalVar::Q, &grid, MarginalMode::Raw)?;
    let rows: Vec<Vec<String>> = grid
        .iter()
        .zip(&c.values)
        .map(|(q, v)| vec![num(*q), num(*v), num(PI * (1.0 + 4f64.ln()) / (24.0 * q))])
        .collect();
    sec.file("bures_q_marginal.csv", csv_table(&["q", "raw", "closed_form"], &rows)?);
    let grid = open_unit_grid(100);
    let c = marginal(&p, MarginalVar::R, &grid, MarginalMode::Raw)?;
    let mut rows = Vec::new();
    for (r, v) in grid.iter().zip(&c.values) {
        let closed = truncated_bures_r_antiderivative(cfg.q_max, *r)? - truncated_bures_r_antiderivative(cfg.q_min, *r)?;
        rows.push(vec![num(*r), num(*v), num(closed)]);
    }
    sec.file("bures_r_marginal.csv", csv_table(&["r", "raw", "closed_form"], &rows)?);
    Ok(sec)
}

/// `n` equally spaced radii strictly inside `(0, 1)`.
fn open_unit_grid(n: usize) -> Vec<f64> {
    (1..=n).map(|i| i as f64 / (n + 1) as f64).collect()
}

fn qr_csv(p: &PriorDensity, cfg: &PriorConfig) -> Result<String> {
    let qs = log_grid(cfg.q_min, cfg.q_max, 41);
    let rs: Vec<f64> = (1..=40).map(|i| i as f64 / 41.0).collect();
    let pts = marginal_qr(p, &qs, &rs, MarginalMode::Normalized)?;
    let rows: Vec<Vec<String>> = pts.iter().map(|t| t.iter().map(|x| num(*x)).collect()).collect();
    csv_table(&["q", "r", "density"], &rows)
}

/// The q-extended Husimi prior, its q-marginal peak and the r-marginal near pure states.
fn husimi_figures(cfg: &PriorConfig) -> Result<Section> {
    let mut sec = Section::new("Extended Husimi marginals");
    let p = build_prior(PriorName::PFqext4D, cfg)?;
    sec.file("husimi_q_r.csv", qr_csv(&p, cfg)?);
    let grid = log_grid(cfg.q_min, cfg.q_max, 101);
    let (raw, norm) = rayon::join(
        || marginal(&p, MarginalVar::Q, &grid, MarginalMode::Raw),
        || marginal(&p, MarginalVar::Q, &grid, MarginalMode::Normalized),
    );
    let (raw, norm) = (raw?, norm?);
    let rows: Vec<Vec<String>> =
        grid.iter().enumerate().map(|(i, q)| vec![num(*q), num(raw.values[i]), num(norm.values[i])]).collect();
    sec.file("husimi_q_marginal.csv", csv_table(&["q", "raw", "normalized"], &rows)?);
    let hi = cfg.q_max.min(10.0);
    let (q_star, v) = marginal_peak(&p, MarginalVar::Q, 1.0, hi, MarginalMode::Raw)?;
    sec.rows.push(Row::check("q-marginal peak location", format!("{q_star:.5}"), "3.59782 ± 0.05", (q_star - 3.59782).abs() <= 0.05));
    sec.rows.push(Row::compare("q-marginal peak value (raw: volume element integrated over the ball)", v, 0.448488, 0.05));
    sec.rows.push(Row::info("q-marginal peak value, normalized over the q range", format!("{:.7}", v / p.normalization())));

    let tight_cfg = PriorConfig { rel_tol: cfg.rel_tol.min(1e-11), ..*cfg };
    let tight = build_prior(PriorName::PFqext4D, &tight_cfg)?;
    let mut grid = open_unit_grid(99);
    grid.extend([0.995, 0.999, 0.9999, 0.99999]);
    let (a, b) = rayon::join(
        || marginal(&p, MarginalVar::R, &grid, MarginalMode::Normalized),
        || marginal(&tight, MarginalVar::R, &grid, MarginalMode::Normalized),
    );
    let (a, b) = (a?, b?);
    let rows: Vec<Vec<String>> =
        grid.iter().enumerate().map(|(i, r)| vec![num(*r), num(a.values[i]), num(b.values[i])]).collect();
    sec.file("husimi_r_marginal.csv", csv_table(&["r", "density", "density_tight_tolerance"], &rows)?);
    let tail: Vec<usize> = (0..grid.len()).filter(|&i| grid[i] >= 0.99).collect();
    let worst = tail.iter().map(|&i| (a.values[i] - b.values[i]).abs() / b.values[i]).fold(0.0, f64::max);
    let rising = tail.windows(2).all(|w| b.values[w[1]] > b.values[w[0]]);
    sec.rows.push(Row::info(
        format!("r-marginal near r = 1 at rel_tol {:.0e} vs {:.0e}", cfg.rel_tol, tight_cfg.rel_tol),
        format!("max rel. change {worst:.1e}; {}", if rising { "rising toward r = 1" } else { "not monotone" }),
    ));
    sec.notes.push(if rising && worst < 1e-6 {
        "The rise of the Husimi r-marginal toward r = 1 is stable under a thousandfold tighter tolerance; it belongs to the density, not to the quadrature.".into()
    } else {
        "The rise of the Husimi r-marginal toward r = 1 changes with the tolerance; treat it with caution.".into()
    });
    Ok(sec)
}

/// Relative entropies under the printed p_B density, truncated at `1 − delta`.
fn convention_appendix(cfg: &PriorConfig) -> Result<Section> {
    let mut sec = Section::new("Appendix: sensitivity to the p_B density convention");
    let deltas = [1e-2, 1e-3];
    let runs = std::iter::once(PbConvention::Sqrt)
        .chain(deltas.iter().map(|&delta| PbConvention::Printed { delta }))
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|conv| {
            let c = PriorConfig { pb_convention: conv, ..*cfg };
            let r = rank(&ranked(&c)?, MeasurementSpec::canonical_sqrt())?;
            Ok((conv, r))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    for &(a, b, pw, w12, w21) in KL_REFERENCE {
        let mut row = vec![format!("S({a}‖{b})"), format!("S({b}‖{a})"), if pw == 0.0 { "prior".into() } else { pw.to_string() }];
        row.push(format!("{w12} / {w21}"));
        for (_, r) in &runs {
            let v = lookup(r, a, b).expect("pair ranked");
            let (x, y) = kl_stats(&v, pw).expect("stage computed");
            row.push(format!("{x:.6} / {y:.6}"));
        }
        rows.push(row);
    }
    let mut header = vec!["statistic".to_string(), "mirror".into(), "stage".into(), "reference".into()];
    header.extend(runs.iter().map(|(c, _)| c.to_string()));
    let h: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut order_rows = Vec::new();
    for (c, r) in &runs {
        order_rows.push(vec![c.to_string(), r.ranking_line()]);
    }
    let mut md = markdown_table(&h, &rows);
    md.push('\n');
    md.push_str(&markdown_table(&["convention", "ranking"], &order_rows));
    sec.file("convention_sensitivity.md", md);
    let mut csv_rows = Vec::new();
    for (c, r) in &runs {
        for v in r.ordered_rows() {
            for st in &v.stages {
                csv_rows.push(vec![
                    c.to_string(),
                    v.first.clone(),
                    v.second.clone(),
                    num(v.s12),
                    num(v.s21),
                    st.spec.power.to_string(),
                    num(st.s12_post),
                    num(st.s21_post),
                ]);
            }
        }
    }
    sec.file(
        "convention_sensitivity.csv",
        csv_table(&["convention", "first", "second", "S12", "S21", "power", "S12_post", "S21_post"], &csv_rows)?,
    );
    for (c, r) in &runs {
        sec.rows.push(Row::info(format!("ranking under {c}"), r.ranking_line()));
    }
    Ok(sec)
}

fn summary(cfg: &Config, sections: &[Section]) -> String {
    let mut s = String::from("# qprior report\n\n## Configuration\n\n```\n");
    s.push_str(&cfg.to_string());
    s.push_str("```\n");
    for sec in sections {
        if sec.rows.is_empty() && sec.notes.is_empty() {
            continue;
        }
        let _ = write!(s, "\n## {}\n\n", sec.title);
        if !sec.rows.is_empty() {
            let rows: Vec<Vec<String>> = sec
                .rows
                .iter()
                .map(|r| vec![r.quantity.clone(), r.computed.clone(), r.reference.clone(), r.status.to_string()])
                .collect();
            s.push_str(&markdown_table(&["quantity", "computed", "reference", "status"], &rows));
        }
        for n in &sec.notes {
            let _ = write!(s, "\n{n}\n");
        }
    }
    let files: Vec<&str> = sections.iter().flat_map(|x| x.files.iter().map(|f| f.0.as_str())).collect();
    let _ = write!(s, "\n## Files\n\n{}\n", files.iter().map(|f| format!("- `{f}`")).collect::<Vec<_>>().join("\n"));
    s
}

pub fn run_all(cfg: &Config, dir: &Path) -> Result<()> {
    let pc = cfg.prior_config()?;
    let seed = cfg.seed;
    type Job<'a> = Box<dyn Fn() -> Result<Section> + Send + Sync + 'a>;
    let jobs: Vec<Job> = vec![
        Box::new(|| metric_checks(seed)),
        Box::new(|| normalizations(&pc)),
        Box::new(|| closed_marginals(&pc)),
        Box::new(|| kl_table(&pc)),
        Box::new(|| dominance(&pc)),
        Box::new(|| info_gains(&pc)),
        Box::new(|| bures_figures(&pc)),
        Box::new(|| husimi_figures(&pc)),
        Box::new(|| convention_appendix(&pc)),
    ];
    let sections = jobs.par_iter().map(|j| j()).collect::<Result<Vec<_>>>()?;
    std::fs::create_dir_all(dir)?;
    for sec in &sections {
        for (name, contents) in &sec.files {
            write_atomic(&dir.join(name), contents.as_bytes())?;
        }
    }
    write_atomic(&dir.join("summary.md"), summary(cfg, &sections).as_bytes())?;
    let listing: Vec<String> = sections.iter().flat_map(|s| s.files.iter().map(|f| dir.join(&f.0).display().to_string())).collect();
    println!("{}", listing.join("\n"));
    println!("{}", dir.join("summary.md").display());
    Ok(())
}
