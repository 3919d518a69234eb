use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use polytope_metropolis::builtin::triangle_vertex_name;
use polytope_metropolis::chain::{run_chain, ChainConfig};
use polytope_metropolis::diagnostics::{
    fit_rate, gap_sweep, transient_steps, tv_empirical, tv_exact, tv_exact_binned, write_sweep_csv, Bins,
    ResolutionRule,
};
use polytope_metropolis::geometry::{is_weakly_incoming, span_check};
use polytope_metropolis::spectral::{
    assemble_laplacian, assemble_metropolis, neumann_spectrum, spectrum, weyl_count, Grid,
};
use polytope_metropolis::Execution;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::{self, ExperimentConfig, PolytopeSpec, TvModeSpec};

/// Exit status of a command that ran to completion.
pub const EXIT_OK: i32 = 0;
pub const EXIT_ASSERT: i32 = 2;
pub const EXIT_NOT_WEAKLY_INCOMING: i32 = 3;

pub struct RunContext {
    pub config: ExperimentConfig,
    pub config_hash: String,
    pub seed: u64,
    pub out: PathBuf,
    pub assert: bool,
    pub tol: Option<f64>,
}

impl RunContext {
    pub fn load(path: &Path, seed: Option<u64>, out: Option<PathBuf>, assert: bool, tol: Option<f64>) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let config = config::parse(&text)?;
        let config_hash = hex::encode(Sha256::digest(text.as_bytes()));
        let seed = seed.or(config.seed).unwrap_or(0);
        let out = out
            .or_else(|| config.output.clone())
            .unwrap_or_else(|| PathBuf::from("out"));
        Ok(RunContext {
            config,
            config_hash,
            seed,
            out,
            assert,
            tol,
        })
    }

    fn tol_or(&self, default: f64) -> f64 {
        self.tol.unwrap_or(default)
    }

    fn create(&self, name: &str) -> Result<(BufWriter<File>, String)> {
        fs::create_dir_all(&self.out).with_context(|| format!("creating {}", self.out.display()))?;
        let path = self.out.join(name);
        let f = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        Ok((BufWriter::new(f), path.display().to_string()))
    }
}

#[derive(Debug, Serialize)]
struct Check {
    name: String,
    passed: bool,
    detail: String,
}

struct Run<'a> {
    ctx: &'a RunContext,
    command: &'static str,
    started: Instant,
    outputs: Vec<String>,
    checks: Vec<Check>,
}

impl<'a> Run<'a> {
    fn new(ctx: &'a RunContext, command: &'static str) -> Self {
        Run {
            ctx,
            command,
            started: Instant::now(),
            outputs: Vec::new(),
            checks: Vec::new(),
        }
    }

    fn check(&mut self, name: &str, passed: bool, detail: String) {
        self.checks.push(Check {
            name: name.to_string(),
            passed,
            detail,
        });
    }

    /// Writes the summary JSON and returns the exit status.
    fn finish(self, results: Value, status: i32) -> Result<i32> {
        let failed: Vec<&Check> = self.checks.iter().filter(|c| !c.passed).collect();
        let status = if status == EXIT_OK && self.ctx.assert && !failed.is_empty() {
            EXIT_ASSERT
        } else {
            status
        };
        if self.ctx.assert {
            for c in &self.checks {
                println!("assert {}: {} ({})", c.name, if c.passed { "pass" } else { "FAIL" }, c.detail);
            }
        }
        let summary_name = format!("{}_summary.json", self.command);
        let mut outputs = self.outputs.clone();
        outputs.push(self.ctx.out.join(&summary_name).display().to_string());
        let summary = json!({
            "command": self.command,
            "config_sha256": self.ctx.config_hash,
            "seed": self.ctx.seed,
            "outputs": outputs,
            "wall_time_s": self.started.elapsed().as_secs_f64(),
            "results": results,
            "assertions": self.checks,
            "exit_code": status,
        });
        let (mut w, _) = self.ctx.create(&summary_name)?;
        serde_json::to_writer_pretty(&mut w, &summary)?;
        use std::io::Write;
        writeln!(w)?;
        Ok(status)
    }
}

pub fn check(ctx: &RunContext) -> Result<i32> {
    let run = Run::new(ctx, "check");
    let b = config::build(&ctx.config)?;
    let report = is_weakly_incoming(&b.polytope, &b.family)?;
    let spans = span_check(b.family.check_vectors(), b.polytope.dim());
    println!("weakly incoming: {}", report.weakly_incoming);
    println!("spans: {spans}");
    println!("faces checked: {}", report.faces.len());
    let mut failing = Vec::new();
    for f in report.failing_faces() {
        let vertex = if ctx.config.polytope.is_triangle() {
            triangle_vertex_name(&f.active)
        } else {
            None
        };
        match vertex {
            Some(v) => println!("failing face: vertex {v}, facets {:?}, witness {:?}", f.active, f.witness),
            None => println!("failing face: facets {:?}, witness {:?}", f.active, f.witness),
        }
        failing.push(json!({"active": f.active, "witness": f.witness, "vertex": vertex}));
    }
    let status = if report.weakly_incoming {
        EXIT_OK
    } else {
        EXIT_NOT_WEAKLY_INCOMING
    };
    run.finish(
        json!({"weakly_incoming": report.weakly_incoming, "spans": spans, "faces": report.faces.len(), "failing": failing}),
        status,
    )
}

pub fn sample(ctx: &RunContext) -> Result<i32> {
    let mut run = Run::new(ctx, "sample");
    let b = config::build(&ctx.config)?;
    let Some(section) = &ctx.config.chain else {
        bail!("config has no \"chain\" section");
    };
    let start = section
        .start
        .clone()
        .unwrap_or_else(|| ctx.config.polytope.default_start(&b.polytope));
    let cfg = ChainConfig {
        h: section.h,
        seed: ctx.seed,
        thinning: section.thinning,
        burn_in: section.burn_in,
    };
    let traj = run_chain(&b.polytope, &b.family, &cfg, &start, section.steps)?;
    let (w, path) = ctx.create("trajectory.csv")?;
    traj.write_csv(w)?;
    run.outputs.push(path);

    let mean = traj.mean();
    println!("steps: {}, records: {}", section.steps, traj.num_records());
    println!("acceptance rate: {:.6}", traj.acceptance_rate());
    println!("mean: {}", fmt_vec(&mean));
    let mut results = json!({
        "steps": section.steps,
        "records": traj.num_records(),
        "acceptance_rate": traj.acceptance_rate(),
        "mean": mean,
    });
    if b.polytope.embedding().is_some() && traj.num_records() > 0 {
        let ambient = b.polytope.embed(&mean);
        println!("ambient mean: {}", fmt_vec(&ambient));
        results["ambient_mean"] = json!(ambient);
        if let PolytopeSpec::Birkhoff { n } = ctx.config.polytope {
            let mut drift = 0.0_f64;
            for x in traj.records() {
                let a = b.polytope.embed(x);
                for i in 0..n {
                    let r: f64 = (0..n).map(|j| a[i * n + j]).sum();
                    let c: f64 = (0..n).map(|j| a[j * n + i]).sum();
                    drift = drift.max((r - 1.0).abs()).max((c - 1.0).abs());
                }
            }
            println!("margin drift: {drift:e}");
            results["margin_drift"] = json!(drift);
            let tol = ctx.tol_or(0.01);
            let worst = ambient.iter().map(|v| (v - 1.0 / n as f64).abs()).fold(0.0, f64::max);
            run.check("entry_means", worst <= tol, format!("max |mean - 1/N| = {worst:.3e}, tol {tol}"));
            run.check("margin_drift", drift <= 1e-12, format!("{drift:e}"));
        }
    }
    run.finish(results, EXIT_OK)
}

fn fmt_vec(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.6}")).collect();
    format!("[{}]", parts.join(", "))
}

fn nu1_reference(ctx: &RunContext, b: &config::Built) -> Result<Option<f64>> {
    let Some(section) = &ctx.config.spectral else {
        return Ok(None);
    };
    if let Some(nu) = section.nu1_reference {
        return Ok(Some(nu));
    }
    match section.laplacian_cell_size {
        Some(s) => {
            let grid = Grid::new(&b.polytope, s)?;
            let l = assemble_laplacian(&b.polytope, &b.family, &grid)?;
            let spec = neumann_spectrum(&l, 4.min(grid.len()))?;
            Ok(spec.nu1())
        }
        None => Ok(None),
    }
}

fn cell_size_for(section: &config::SpectralSection, h: f64) -> f64 {
    section.cell_size.unwrap_or(h / section.divisor)
}

pub fn spectrum_cmd(ctx: &RunContext) -> Result<i32> {
    let mut run = Run::new(ctx, "spectrum");
    let b = config::build(&ctx.config)?;
    let Some(section) = &ctx.config.spectral else {
        bail!("config has no \"spectral\" section");
    };
    let nu1 = nu1_reference(ctx, &b)?;
    let mut per_h = Vec::new();
    for &h in &section.h {
        let grid = Grid::new(&b.polytope, cell_size_for(section, h))?;
        let m = assemble_metropolis(&b.polytope, &b.family, h, &grid)?;
        let k = section.eigen_count.min(grid.len());
        let report = spectrum(&m, k)?;
        let (w, path) = ctx.create(&format!("spectrum_h{h}.csv"))?;
        report.write_csv(w)?;
        run.outputs.push(path);
        if section.export_matrix {
            let (w, path) = ctx.create(&format!("matrix_h{h}.txt"))?;
            m.matrix.write_coordinate(w)?;
            run.outputs.push(path);
        }
        let weyl: Vec<Value> = section
            .lambdas
            .iter()
            .map(|&l| match weyl_count(&report, l) {
                Ok(c) => json!({"lambda": l, "count": c}),
                Err(e) => json!({"lambda": l, "error": e.to_string()}),
            })
            .collect();
        let lambda2 = report.eigenvalues.get(1).copied().unwrap_or(f64::NAN);
        println!(
            "h={h} cells={} gap={:.6e} gap/h^2={:.6} bottom={:.6} nu1_reference={}",
            grid.len(),
            report.gap,
            report.gap / (h * h),
            report.bottom,
            nu1.map(|v| format!("{v:.6}")).unwrap_or_else(|| "-".into())
        );
        run.check(
            &format!("simple_top_h{h}"),
            lambda2 < 1.0 - 1e-8,
            format!("lambda2 = {lambda2}"),
        );
        run.check(
            &format!("spectral_floor_h{h}"),
            report.bottom >= -0.9,
            format!("bottom = {}", report.bottom),
        );
        per_h.push(json!({
            "h": h,
            "cells": grid.len(),
            "gap": report.gap,
            "gap_over_h2": report.gap / (h * h),
            "bottom": report.bottom,
            "clusters": report.clusters.iter().map(|c| json!({"center": c.center, "multiplicity": c.multiplicity})).collect::<Vec<_>>(),
            "weyl": weyl,
        }));
    }
    if let (Some(nu), Some(last)) = (nu1, per_h.last()) {
        let g = last["gap_over_h2"].as_f64().unwrap_or(f64::NAN);
        let rel = (g - nu).abs() / nu;
        let tol = ctx.tol_or(0.10);
        run.check("gap_vs_nu1", rel <= tol, format!("relative error {rel:.4} at smallest h, tol {tol}"));
    }
    run.finish(json!({"nu1_reference": nu1, "spectra": per_h}), EXIT_OK)
}

pub fn tv_cmd(ctx: &RunContext) -> Result<i32> {
    let mut run = Run::new(ctx, "tv");
    let b = config::build(&ctx.config)?;
    let Some(d) = &ctx.config.diagnostics else {
        bail!("config has no \"diagnostics\" section");
    };
    let fine = Grid::new(&b.polytope, d.cell_size)?;
    let m = assemble_metropolis(&b.polytope, &b.family, d.h, &fine)?;
    let start_cell = fine
        .nearest_cell(&d.start, 8)
        .context("start point has no grid cell")?;
    let report = spectrum(&m, 2.min(fine.len()))?;
    let lambda2 = report.eigenvalues.get(1).copied().unwrap_or(f64::NAN);
    let mut results = json!({"cells": fine.len(), "gap": report.gap, "lambda2": lambda2});

    let mut curves = Vec::new();
    if matches!(d.mode, TvModeSpec::Exact | TvModeSpec::Both) {
        let mut curve = tv_exact(&m, start_cell, d.n_max)?;
        let values = curve.values();
        let monotone = values.windows(2).all(|w| w[1] <= w[0] + 1e-12);
        run.check("exact_monotone", monotone, "TV_n nonincreasing".into());
        let window = d.window.unwrap_or_else(|| {
            let lo = transient_steps(report.gap);
            let hi = curve
                .points
                .iter()
                .rev()
                .find(|p| p.1 > 1e-10)
                .map(|p| p.0)
                .unwrap_or(0);
            (lo, hi)
        });
        match fit_rate(&curve, window) {
            Ok(fit) => {
                let reference = -lambda2.ln();
                let rel = (fit.rate - reference).abs() / reference;
                println!(
                    "fitted rate {:.6e} over {:?}, -log(lambda2) = {:.6e}, C = {:.4}",
                    fit.rate, window, reference, fit.constant
                );
                let tol = ctx.tol_or(0.05);
                run.check("rate_vs_lambda2", rel <= tol, format!("relative error {rel:.4}, tol {tol}"));
                results["fit"] = json!(fit);
                curve.fit = Some(fit);
            }
            Err(e) => {
                println!("rate fit skipped: {e}");
                run.check("rate_vs_lambda2", false, e.to_string());
            }
        }
        curves.push(curve);
    }
    if matches!(d.mode, TvModeSpec::Empirical | TvModeSpec::Both) {
        let bins = Bins::new(Grid::new(&b.polytope, d.bin_size.unwrap_or(d.cell_size))?);
        let checkpoints = if d.checkpoints.is_empty() {
            vec![0, 4, 16, 64]
        } else {
            d.checkpoints.clone()
        };
        let emp = tv_empirical(
            &b.polytope,
            &b.family,
            d.h,
            &d.start,
            &checkpoints,
            d.replicas,
            &bins,
            ctx.seed,
            Execution::default(),
        )?;
        println!(
            "empirical TV over {} bins is a lower-bound estimator; noise scale {:.3e}",
            bins.len(),
            emp.noise_scale.unwrap_or(f64::NAN)
        );
        let binned = tv_exact_binned(&m, &fine, &bins, start_cell, &checkpoints)?;
        let (w, path) = ctx.create("tv_binned.csv")?;
        binned.write_csv(w)?;
        run.outputs.push(path);
        let mut worst = 0.0_f64;
        for (a, e) in binned.points.iter().zip(&emp.points) {
            println!("n={} exact_binned={:.6} empirical={:.6}", a.0, a.1, e.1);
            worst = worst.max((a.1 - e.1).abs());
        }
        run.check("empirical_vs_exact", worst <= 0.05, format!("max difference {worst:.4}"));
        results["empirical_max_difference"] = json!(worst);
        curves.push(emp);
    }
    let (mut w, path) = ctx.create("tv.csv")?;
    {
        let mut cw = csv::Writer::from_writer(&mut w);
        cw.write_record(["n", "tv", "mode"])?;
        for c in &curves {
            for (n, tv) in &c.points {
                cw.write_record([n.to_string(), tv.to_string(), c.mode.as_str().to_string()])?;
            }
        }
        cw.flush()?;
    }
    run.outputs.push(path);
    println!("gap {:.6e}", report.gap);
    run.finish(results, EXIT_OK)
}

pub fn sweep_cmd(ctx: &RunContext) -> Result<i32> {
    let mut run = Run::new(ctx, "sweep");
    let b = config::build(&ctx.config)?;
    let Some(section) = &ctx.config.spectral else {
        bail!("config has no \"spectral\" section");
    };
    let nu1 = nu1_reference(ctx, &b)?;
    let rows = gap_sweep(
        &b.polytope,
        &b.family,
        &section.h,
        ResolutionRule {
            divisor: section.divisor,
        },
        nu1,
    )?;
    let (w, path) = ctx.create("sweep.csv")?;
    write_sweep_csv(&rows, w)?;
    run.outputs.push(path);
    for r in &rows {
        println!(
            "h={} cells={} gap={:.6e} gap/h^2={:.6} nu1_reference={}",
            r.h,
            r.cells,
            r.gap,
            r.gap_over_h2,
            r.nu1_reference.map(|v| format!("{v:.6}")).unwrap_or_else(|| "-".into())
        );
    }
    if nu1.is_some() {
        let errs: Vec<f64> = rows.iter().filter_map(|r| r.relative_error()).collect();
        let tol = ctx.tol_or(0.10);
        let last = *errs.last().unwrap_or(&f64::NAN);
        run.check("final_relative_error", last <= tol, format!("{last:.4}, tol {tol}"));
        let decreasing = errs.windows(2).all(|w| w[1] < w[0]);
        run.check("error_decreasing", decreasing, format!("{errs:?}"));
    } else if rows.len() >= 2 {
        let a = rows[rows.len() - 2].gap_over_h2;
        let z = rows[rows.len() - 1].gap_over_h2;
        let change = (z - a).abs() / a;
        run.check("stabilizes", change < 0.15, format!("relative change {change:.4} between the last two h"));
    }
    run.finish(json!({"rows": rows}), EXIT_OK)
}
