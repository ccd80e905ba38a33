use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use dinistat::algos::{
    self, check_contract, stability_experiment, AlgoParams, Algorithm, ExperimentConfig,
};
use dinistat::dini::{self, DirectionalQuery, GfOptions};
use dinistat::expr::canonical::format_pattern;
use dinistat::expr::dsl;
use dinistat::scan::{self, Counterexample, ShrinkageProfile, CENSUS_DELTA, DEFAULT_LADDER};
use dinistat::stability::{self, StabilityCertificate};
use dinistat::zoo::{self, ZooEntry};
use dinistat::{BoxDomain, Error, Expr, GridSpec};

use crate::config::Params;
use crate::UsageError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    /// Nothing to judge, or the outcome matched `--expect`.
    None,
    Pass,
    Fail,
}

impl Verdict {
    pub fn exit_code(self) -> u8 {
        match self {
            Verdict::Fail => 1,
            _ => 0,
        }
    }

    fn from_bool(ok: bool) -> Verdict {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    fn word(self) -> &'static str {
        match self {
            Verdict::Fail => "FAIL",
            _ => "PASS",
        }
    }

    fn against(self, expect: Option<&str>) -> Verdict {
        match (expect, self) {
            (_, Verdict::None) | (None, _) => self,
            (Some("pass"), Verdict::Pass) | (Some("fail"), Verdict::Fail) => Verdict::None,
            _ => Verdict::Fail,
        }
    }
}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

/// The function under study and, for zoo entries, the entry itself.
struct Source {
    expr: Expr,
    entry: Option<ZooEntry>,
}

fn parse_domain(spec: &str, dim: usize) -> Result<BoxDomain> {
    let mut lo = Vec::new();
    let mut hi = Vec::new();
    for part in spec.split(',') {
        let (a, b) = part
            .split_once(':')
            .ok_or_else(|| usage(format!("domain interval `{part}` is not of the form lo:hi")))?;
        let parse = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| usage(format!("bad number `{s}` in domain")))
        };
        lo.push(parse(a)?);
        hi.push(parse(b)?);
    }
    if lo.len() == 1 && dim > 1 {
        lo = vec![lo[0]; dim];
        hi = vec![hi[0]; dim];
    }
    Ok(BoxDomain::new(lo, hi)?)
}

fn load_source(p: &Params) -> Result<Source> {
    let (expr, entry) = match (&p.zoo, &p.dsl) {
        (Some(name), None) => {
            let entry = zoo::get(name)?;
            (entry.expr.clone(), Some(entry))
        }
        (None, Some(path)) => {
            let text =
                fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            (dsl::parse(&text, None)?, None)
        }
        (Some(_), Some(_)) => return Err(usage("give either --zoo or --dsl, not both")),
        (None, None) => return Err(usage("a function is required: --zoo NAME or --dsl FILE")),
    };
    let expr = match &p.domain {
        Some(spec) => expr.with_domain(parse_domain(spec, expr.dim())?)?,
        None => expr,
    };
    Ok(Source { expr, entry })
}

fn fmt_point(x: &[f64]) -> String {
    x.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
}

/// `A..B` gives the decades from A down to B; otherwise a comma list.
pub fn parse_deltas(spec: &str) -> Result<Vec<f64>> {
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| usage(format!("bad delta `{s}`")))
    };
    if let Some((a, b)) = spec.split_once("..") {
        let (a, b) = (num(a)?, num(b)?);
        if !(a > 0.0 && b > 0.0 && b <= a) {
            return Err(usage("delta range needs 0 < B <= A"));
        }
        let mut out = vec![a];
        let mut d = a;
        while d / 10.0 >= b * (1.0 - 1e-9) {
            d /= 10.0;
            out.push(d);
        }
        return Ok(out);
    }
    spec.split(',').map(num).collect()
}

/// Where a command's CSV goes: a file under `--out`, or stdout.
struct Output {
    dir: Option<PathBuf>,
}

impl Output {
    fn new(p: &Params) -> Result<Output> {
        if let Some(dir) = &p.out {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        }
        Ok(Output { dir: p.out.clone() })
    }

    fn csv(
        &self,
        name: &str,
        write: impl FnOnce(&mut dyn Write) -> dinistat::Result<()>,
    ) -> Result<()> {
        match &self.dir {
            Some(dir) => {
                let path = dir.join(name);
                let mut w = BufWriter::new(
                    File::create(&path).with_context(|| format!("creating {}", path.display()))?,
                );
                write(&mut w)?;
                w.flush()?;
            }
            None => {
                let stdout = io::stdout();
                let mut lock = stdout.lock();
                write(&mut lock)?;
            }
        }
        Ok(())
    }

    fn text(&self, name: &str, body: &str) -> Result<()> {
        if let Some(dir) = &self.dir {
            fs::write(dir.join(name), body)?;
        }
        Ok(())
    }

    fn echo_config(&self, p: &Params) -> Result<()> {
        self.text("config.toml", &p.to_toml())
    }

    /// The one-line summary goes to stdout when CSVs go to files, else to stderr.
    fn summary(&self, line: &str) {
        if self.dir.is_some() {
            println!("{line}");
        } else {
            eprintln!("{line}");
        }
    }
}

pub fn dispatch(name: &str, mut p: Params) -> Result<Verdict> {
    for path in [&mut p.dsl, &mut p.out].into_iter().flatten() {
        *path = std::path::absolute(&*path)?;
    }
    let verdict = match name {
        "eval" => eval(&mut p)?,
        "scan" => scan_cmd(&mut p)?,
        "profile" => profile(&mut p)?,
        "certify" => certify(&mut p)?,
        "run" if p.experiment == Some(true) => experiment(&mut p)?,
        "run" => run_one(&mut p)?,
        "census" => census(&mut p)?,
        "verify" => verify(&mut p)?,
        other => bail!("unknown command {other}"),
    };
    Ok(verdict.against(p.expect.as_deref()))
}

pub fn zoo_list() {
    println!("name,dim,domain,analytic,description");
    for e in zoo::all() {
        let d = e.domain();
        let dom: Vec<String> = d
            .lo()
            .iter()
            .zip(d.hi())
            .map(|(a, b)| format!("{a}:{b}"))
            .collect();
        println!(
            "{},{},\"{}\",{},\"{}\"",
            e.name,
            e.expr.dim(),
            dom.join(","),
            e.is_analytic(),
            e.description
        );
    }
}

fn default_steps(dim: usize) -> usize {
    match dim {
        1 => 2001,
        2 => 201,
        _ => 41,
    }
}

/// Spacing for grids of radius `radius` around a point.
fn spacing(p: &Params, radius: f64, dim: usize) -> f64 {
    match (p.h, p.grid) {
        (Some(h), _) => h,
        (None, Some(steps)) if steps >= 2 => 2.0 * radius / (steps - 1) as f64,
        _ => {
            radius
                * match dim {
                    1 => 1e-3,
                    2 => 1e-2,
                    _ => 5e-2,
                }
        }
    }
}

fn center_or_default(p: &Params, src: &Source) -> Result<Vec<f64>> {
    match (&p.center, &src.entry) {
        (Some(c), _) => Ok(c.clone()),
        (None, Some(e)) => Ok(e.x_star.clone()),
        (None, None) => Err(usage("--center is required for DSL functions")),
    }
}

fn eval(p: &mut Params) -> Result<Verdict> {
    let src = load_source(p)?;
    let x = p.at.clone().ok_or_else(|| usage("--at is required"))?;
    let zeta = p.zeta.unwrap_or(0.0);
    let f = src.expr.evaluate(&x)?;
    let prog = src.expr.canonical();
    let signs = prog.sign_vector(&x, zeta)?;
    let v = dini::gf(&src.expr, &x, &GfOptions::with_zeta(zeta))?;
    println!("f = {f}");
    println!("sign = {}", format_pattern(&signs.signs));
    println!(
        "G_f = {} ({}, {} directions)",
        v.gf_estimate,
        if v.decisive {
            "exact"
        } else {
            "sampled upper bound"
        },
        v.directions_used
    );
    if src.expr.dim() == 1 {
        let d = src.expr.domain();
        if x[0] < d.hi()[0] {
            let right = dini::dini_directional(
                &src.expr,
                &DirectionalQuery::raw(x.clone(), vec![1.0]).with_zeta(zeta),
            )?;
            println!("f'+ = {right}");
        }
        if x[0] > d.lo()[0] {
            let left = -dini::dini_directional(
                &src.expr,
                &DirectionalQuery::raw(x.clone(), vec![-1.0]).with_zeta(zeta),
            )?;
            println!("f'- = {left}");
        }
    }
    if v.decisive {
        println!(
            "verdict = {}",
            if v.gf_estimate >= 0.0 {
                "stationary"
            } else {
                "not stationary"
            }
        );
    }
    if let Some(delta) = p.delta {
        println!("stationary(delta={delta}) = {}", dini::classify(&v, delta));
    }
    Ok(Verdict::None)
}

fn full_grid(p: &mut Params, expr: &Expr) -> Result<GridSpec> {
    let steps = p.grid.unwrap_or_else(|| default_steps(expr.dim()));
    p.grid = Some(steps);
    let zeta = p.zeta.unwrap_or(1e-12);
    p.zeta = Some(zeta);
    Ok(GridSpec::over_box(expr.domain(), steps)?.with_zeta(zeta))
}

fn scan_cmd(p: &mut Params) -> Result<Verdict> {
    let src = load_source(p)?;
    let delta = p.delta.ok_or_else(|| usage("--delta is required"))?;
    let grid = full_grid(p, &src.expr)?;
    let pts = scan::delta_scan(&src.expr, &grid, delta)?;
    let out = Output::new(p)?;
    out.csv("scan.csv", |w| {
        scan::write_scan_csv(w, src.expr.dim(), delta, &pts)
    })?;
    out.echo_config(p)?;
    let unknown = pts
        .iter()
        .filter(|s| s.verdict == dini::Tri::Unknown)
        .count();
    out.summary(&format!(
        "scan: {} of {} grid points delta-stationary ({} undecided), delta={delta}, resolution {:.3e}",
        pts.len() - unknown,
        grid.len(),
        unknown,
        grid.resolution_bound()
    ));
    Ok(Verdict::None)
}

fn profile(p: &mut Params) -> Result<Verdict> {
    let src = load_source(p)?;
    let center = center_or_default(p, &src)?;
    let r1 = p.r1.ok_or_else(|| usage("--r1 is required"))?;
    let deltas = match &p.deltas {
        Some(spec) => parse_deltas(spec)?,
        None => DEFAULT_LADDER.to_vec(),
    };
    let h = spacing(p, r1, src.expr.dim());
    let zeta = p.zeta.unwrap_or(1e-12);
    let grid = GridSpec::around(&center, r1, h, src.expr.domain())?.with_zeta(zeta);
    let mut prof = scan::shrinkage_profile(&src.expr, &center, r1, &deltas, &grid)?;
    let witnesses = add_witness_grids(&mut prof, &src, h, zeta)?;
    p.center = Some(center);
    p.h = Some(h);
    p.zeta = Some(zeta);
    p.deltas = Some(
        deltas
            .iter()
            .map(f64::to_string)
            .collect::<Vec<_>>()
            .join(","),
    );
    let out = Output::new(p)?;
    out.csv("profile.csv", |w| prof.write_csv(w))?;
    out.echo_config(p)?;
    let shrinks = prof.is_monotone(h) && prof.last().sup_distance < 0.1 * r1;
    out.summary(&format!(
        "profile: sup distance {:.3e} at delta={} -> {:.3e} at delta={} (r1={r1}, h={h}{}): {}",
        prof.rows[0].sup_distance,
        prof.rows[0].delta,
        prof.last().sup_distance,
        prof.last().delta,
        if witnesses {
            ", witness grids added"
        } else {
            ""
        },
        if shrinks {
            "PASS shrinks"
        } else {
            "FAIL-to-shrink"
        }
    ));
    Ok(Verdict::from_bool(shrinks))
}

/// The stationary points of the two counterexamples sit in intervals far
/// narrower than any practical uniform grid, so for those entries every δ is
/// also scanned on a grid through the known witness point.
fn add_witness_grids(prof: &mut ShrinkageProfile, src: &Source, h: f64, zeta: f64) -> Result<bool> {
    let which = match src.entry.as_ref().map(|e| e.name) {
        Some("diff_cx") => Counterexample::Differentiable,
        Some("smooth_cx") => Counterexample::Smooth,
        _ => return Ok(false),
    };
    if prof.center != [0.0] {
        return Ok(false);
    }
    for row in &mut prof.rows {
        let w = scan::counterexample_witness(which, prof.r1, row.delta)?;
        let grid =
            GridSpec::around(&[w.x0], prof.r1 + w.x0.abs(), h, src.expr.domain())?.with_zeta(zeta);
        let extra = scan::shrinkage_profile(&src.expr, &[0.0], prof.r1, &[row.delta], &grid)?;
        let e = &extra.rows[0];
        if e.sup_distance > row.sup_distance {
            row.sup_distance = e.sup_distance;
        }
        row.count = row.count.max(e.count);
    }
    Ok(true)
}

fn issue_certificate(
    p: &mut Params,
    src: &Source,
) -> Result<std::result::Result<StabilityCertificate, (Error, String)>> {
    let center = center_or_default(p, src)?;
    let r = match (p.r, &src.entry) {
        (Some(r), _) => r,
        (None, Some(e)) => e.r,
        (None, None) => return Err(usage("--r is required for DSL functions")),
    };
    let h = spacing(p, r, src.expr.dim());
    p.center = Some(center.clone());
    p.r = Some(r);
    p.h = Some(h);
    let grid = GridSpec::around(&center, r, h, src.expr.domain())?;
    match stability::certify(&src.expr, &center, r, &grid) {
        Ok(c) => Ok(Ok(c)),
        Err(e @ Error::CertificationRefused { .. }) => {
            let record = stability::refusal_record(&center, r, h, &e);
            Ok(Err((e, record)))
        }
        Err(e) => Err(e.into()),
    }
}

fn certify(p: &mut Params) -> Result<Verdict> {
    let src = load_source(p)?;
    let result = issue_certificate(p, &src)?;
    let out = Output::new(p)?;
    out.echo_config(p)?;
    match result {
        Ok(cert) => {
            let record = cert.to_record();
            out.text("certificate.txt", &record)?;
            print!("{record}");
            out.summary(&format!(
                "certify: PASS lambda0={} r1={}",
                cert.lambda0, cert.r1
            ));
            Ok(Verdict::Pass)
        }
        Err((err, record)) => {
            out.text("certificate.txt", &record)?;
            print!("{record}");
            out.summary(&format!("certify: FAIL {err}"));
            Ok(Verdict::Fail)
        }
    }
}

fn algo_params(p: &mut Params) -> AlgoParams {
    let d = AlgoParams::default();
    let a = AlgoParams {
        delta: p.delta.unwrap_or(d.delta),
        lambda: p.lambda.unwrap_or(d.lambda),
        eta: p.eta.unwrap_or(d.eta),
        max_iter: p.max_iter.unwrap_or(d.max_iter),
        seed: p.seed.unwrap_or(d.seed),
        samples: p.samples.unwrap_or(d.samples),
        sample_radius: p.radius.unwrap_or(d.sample_radius),
        zeta: p.zeta.unwrap_or(d.zeta),
    };
    p.delta = Some(a.delta);
    p.lambda = Some(a.lambda);
    p.eta = Some(a.eta);
    p.max_iter = Some(a.max_iter);
    p.seed = Some(a.seed);
    p.samples = Some(a.samples);
    p.radius = Some(a.sample_radius);
    p.zeta = Some(a.zeta);
    a
}

fn parse_algo(name: &str) -> Result<Algorithm> {
    match name {
        "subgradient" => Ok(Algorithm::Subgradient),
        "gradient-sampling" | "gradient_sampling" => Ok(Algorithm::GradientSampling),
        other => Err(usage(format!(
            "unknown algorithm `{other}` (subgradient, gradient-sampling)"
        ))),
    }
}

fn run_one(p: &mut Params) -> Result<Verdict> {
    let src = load_source(p)?;
    let algo = parse_algo(p.algo.get_or_insert_with(|| "subgradient".into()))?;
    let start = p
        .start
        .clone()
        .ok_or_else(|| usage("--start is required (or --experiment)"))?;
    let params = algo_params(p);
    let traj = algo.run(&src.expr, &start, &params)?;
    let report = check_contract(
        &traj,
        &src.expr,
        params.delta,
        params.lambda,
        algos::SEGMENT_SAMPLES,
        params.zeta,
    )?;
    let out = Output::new(p)?;
    out.csv("trajectory.csv", |w| traj.write_csv(w))?;
    if out.dir.is_some() {
        out.csv("contract.csv", |w| report.write_csv(w))?;
    }
    out.echo_config(p)?;
    let verdict = Verdict::from_bool(report.all_hold());
    out.summary(&format!(
        "run: {} from {} -> {} after {} steps ({}); contract {}: largest rise {:.2e}, G_f at limit points {:.3e} (needs >= -{}), path max {:.4} (needs <= f(x0)+{})",
        algo.name(),
        fmt_point(&start),
        fmt_point(traj.last()),
        traj.len() - 1,
        traj.termination.as_str(),
        verdict.word(),
        report.worst_increase,
        report.worst_gf,
        params.delta,
        report.max_segment_value,
        params.lambda
    ));
    Ok(verdict)
}

fn experiment(p: &mut Params) -> Result<Verdict> {
    let src = load_source(p)?;
    let cert = match (p.lambda0, p.r1) {
        (Some(lambda0), Some(r1)) => {
            let center = center_or_default(p, &src)?;
            let r =
                p.r.or(src.entry.as_ref().map(|e| e.r))
                    .ok_or_else(|| usage("--r is required for DSL functions"))?;
            p.center = Some(center.clone());
            p.r = Some(r);
            StabilityCertificate::manual(center, r, lambda0, r1)
        }
        _ => match issue_certificate(p, &src)? {
            Ok(c) => c,
            Err((err, _)) => {
                return Err(usage(format!(
                    "{err}; pass --lambda0 and --r1 to run against a chosen certificate"
                )))
            }
        },
    };
    let eps = p
        .eps
        .ok_or_else(|| usage("--eps is required for --experiment"))?;
    let mut cfg = ExperimentConfig::new(eps);
    cfg.starts = *p.starts.get_or_insert(cfg.starts);
    cfg.seeds = *p.seeds.get_or_insert(cfg.seeds);
    cfg.base_seed = *p.seed.get_or_insert(0);
    cfg.max_iter = *p.max_iter.get_or_insert(cfg.max_iter);
    cfg.samples = *p.samples.get_or_insert(cfg.samples);
    cfg.delta = p.delta;
    cfg.lambda = p.lambda;
    cfg.eta = p.eta;
    cfg.sample_radius = p.radius;
    if let Some(s) = &p.start {
        cfg.explicit_starts.push(s.clone());
    }
    let rep = stability_experiment(&src.expr, &cert, &cfg)?;
    p.delta = Some(rep.delta);
    p.lambda = Some(rep.lambda);
    p.eta = Some(rep.eta);
    let out = Output::new(p)?;
    out.csv("experiment.csv", |w| rep.write_csv(w))?;
    out.text("certificate.txt", &cert.to_record())?;
    out.echo_config(p)?;
    let verdict = Verdict::from_bool(rep.pass());
    out.summary(&format!(
        "experiment: {} runs, delta1={} lambda1={} eta={}, max limsup distance {:.4e} vs eps {eps}: {}",
        rep.rows.len(),
        rep.delta,
        rep.lambda,
        rep.eta,
        rep.max_limsup(),
        verdict.word()
    ));
    Ok(verdict)
}

fn census(p: &mut Params) -> Result<Verdict> {
    let src = load_source(p)?;
    let grid = full_grid(p, &src.expr)?;
    let delta = *p.delta.get_or_insert(CENSUS_DELTA);
    let c = scan::value_census(&src.expr, &grid, delta, p.cluster_tol)?;
    p.cluster_tol = Some(c.cluster_tol);
    let out = Output::new(p)?;
    out.csv("census.csv", |w| c.write_csv(w))?;
    out.echo_config(p)?;
    let values: Vec<String> = c
        .clusters
        .iter()
        .map(|k| format!("{:.6e}", k.value))
        .collect();
    out.summary(&format!(
        "census: {} value cluster(s) [{}] at delta={delta}, tol {:.2e}, {} undecided points",
        c.clusters.len(),
        values.join(", "),
        c.cluster_tol,
        c.unknown
    ));
    Ok(Verdict::None)
}

fn verify(p: &mut Params) -> Result<Verdict> {
    let entries = match (p.all, &p.zoo) {
        (Some(true), _) => zoo::all(),
        (_, Some(name)) => vec![zoo::get(name)?],
        _ => return Err(usage("give --all or --zoo NAME")),
    };
    let tol = *p.tol.get_or_insert(1e-9);
    let reports = entries
        .iter()
        .map(|e| zoo::verify_entry(e, tol))
        .collect::<dinistat::Result<Vec<_>>>()?;
    let out = Output::new(p)?;
    out.csv("verify.csv", |w| {
        let mut w = csv::Writer::from_writer(w);
        w.write_record([
            "entry",
            "fact",
            "provenance",
            "computed",
            "reference",
            "residual",
            "tol",
            "verdict",
        ])?;
        for r in &reports {
            for o in &r.outcomes {
                w.write_record([
                    r.name.as_str(),
                    o.label.as_str(),
                    o.provenance.as_str(),
                    &o.computed.to_string(),
                    &o.reference.to_string(),
                    &o.residual.to_string(),
                    &o.tol.to_string(),
                    if o.pass { "PASS" } else { "FAIL" },
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    })?;
    out.echo_config(p)?;
    let total: usize = reports.iter().map(|r| r.outcomes.len()).sum();
    let failed: Vec<String> = reports
        .iter()
        .flat_map(|r| {
            r.outcomes
                .iter()
                .filter(|o| !o.pass)
                .map(move |o| format!("{}: {}", r.name, o.label))
        })
        .collect();
    let published_ok = reports.iter().all(|r| r.published_facts_pass());
    out.summary(&format!(
        "verify: {} of {total} facts pass over {} entries; published facts {}{}",
        total - failed.len(),
        reports.len(),
        if published_ok { "PASS" } else { "FAIL" },
        if failed.is_empty() {
            String::new()
        } else {
            format!("; failing: {}", failed.join("; "))
        }
    ));
    Ok(Verdict::from_bool(published_ok))
}
