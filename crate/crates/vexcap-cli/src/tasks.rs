//! Task execution and artifact writing.

use std::fs;
use std::path::{Path, PathBuf};

use vexcap::capacity::CapacityResult;
use vexcap::mask::{RegionKind, RegionMask};
use vexcap::modular;
use vexcap::solver::SolverOptions;
use vexcap::verify::standard::run_all;
use vexcap::{ExponentField, Result, WeightField};

use crate::config::{ExperimentConfig, MaskSpec, TaskSection};

/// Highest-severity outcome of a run, mapped to the process exit code.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Ok,
    VerificationFailed,
    SolverFailed,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Ok => 0,
            Outcome::VerificationFailed => 1,
            Outcome::SolverFailed => 3,
        }
    }

    fn merge(self, other: Outcome) -> Outcome {
        use Outcome::*;
        match (self, other) {
            (SolverFailed, _) | (_, SolverFailed) => SolverFailed,
            (VerificationFailed, _) | (_, VerificationFailed) => VerificationFailed,
            _ => Ok,
        }
    }
}

pub struct RunContext {
    pub cfg: ExperimentConfig,
    pub out_dir: PathBuf,
    pub grid_scale: usize,
    pub config_hash: String,
    pub workers: Option<usize>,
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents)?;
    Ok(())
}

struct Prepared {
    p: ExponentField,
    w: WeightField,
    opts: SolverOptions<f64>,
}

fn prepare(ctx: &RunContext, scale: usize) -> Result<Prepared> {
    let grid = ctx.cfg.grid.build(scale)?;
    let p = vexcap::sample_exponent(&ctx.cfg.exponent.to_spec(), &grid)?;
    let w = vexcap::sample_weight(&ctx.cfg.weight.to_spec(), &grid, &p)?;
    Ok(Prepared {
        p,
        w,
        opts: ctx.cfg.solver.to_options(),
    })
}

/// One scalar outcome of a value-producing task.
struct ValueRow {
    name: String,
    value: f64,
    iterations: usize,
    converged: bool,
}

fn capacity_rows(name: &str, r: &CapacityResult<f64>) -> ValueRow {
    ValueRow {
        name: name.to_string(),
        value: r.value,
        iterations: r.iterations,
        converged: r.converged,
    }
}

/// Runs a value-producing task at the given refinement scale; the first
/// row is the task's headline value (used by convergence studies).
fn run_value_task(
    ctx: &RunContext,
    task: &TaskSection,
    scale: usize,
    export: bool,
) -> Result<(Vec<ValueRow>, Outcome)> {
    let env = prepare(ctx, scale)?;
    let grid = *env.p.grid();
    let full = RegionMask::full(&grid, RegionKind::Arbitrary);
    let mut outcome = Outcome::Ok;

    let rows = match task {
        TaskSection::Modular { field, mask } => {
            let f = field.build(&grid)?;
            let m = match mask {
                Some(spec) => spec.build(&grid)?,
                None => full.clone(),
            };
            let value = modular::modular(&f, &env.p, &env.w, &m)?;
            vec![ValueRow {
                name: "modular".into(),
                value,
                iterations: 0,
                converged: true,
            }]
        }
        TaskSection::Norm { field } => {
            let f = field.build(&grid)?;
            let lux = modular::luxemburg_norm(&f, &env.p, &env.w, &full)?;
            let sob = modular::sobolev_norm(&f, &env.p, &env.w)?;
            vec![
                ValueRow {
                    name: "luxemburg_norm".into(),
                    value: lux,
                    iterations: 0,
                    converged: true,
                },
                ValueRow {
                    name: "sobolev_norm".into(),
                    value: sob,
                    iterations: 0,
                    converged: true,
                },
            ]
        }
        TaskSection::SobolevCap { set } => {
            let e = set.build(&grid)?;
            let r = vexcap::sobolev_capacity(&e, &env.p, &env.w, &env.opts)?;
            if !r.converged {
                outcome = Outcome::SolverFailed;
            }
            if export {
                export_minimizer(ctx, &r)?;
            }
            for note in &r.notes {
                eprintln!("warning: {note}");
            }
            vec![capacity_rows("sobolev_capacity", &r)]
        }
        TaskSection::RelativeCap { inner, outer } => {
            let k = inner.build(&grid)?.with_kind(RegionKind::Compact);
            let omega = match outer {
                MaskSpec::Full {} => RegionMask::full(&grid, RegionKind::Open).erode(),
                other => other.build(&grid)?.with_kind(RegionKind::Open),
            };
            let r = vexcap::relative_capacity(&k, &omega, &env.p, &env.w, &env.opts)?;
            if !r.converged {
                outcome = Outcome::SolverFailed;
            }
            if export {
                export_minimizer(ctx, &r)?;
            }
            vec![capacity_rows("relative_capacity", &r)]
        }
        TaskSection::Wiener { set, center, i_max } => {
            let a = set.build(&grid)?.with_kind(RegionKind::Arbitrary);
            let profile = vexcap::classify_thinness(&a, center, &env.p, &env.w, *i_max, &env.opts)?;
            if export {
                let mut buf = Vec::new();
                profile.write_csv(&mut buf)?;
                write(
                    &ctx.out_dir.join("wiener_profile.csv"),
                    &String::from_utf8_lossy(&buf),
                )?;
                write(
                    &ctx.out_dir.join("wiener_verdict.txt"),
                    &format!("{}\n", profile.verdict_line()),
                )?;
            }
            vec![
                ValueRow {
                    name: "wiener_sum".into(),
                    value: profile.wiener_sum(),
                    iterations: 0,
                    converged: true,
                },
                ValueRow {
                    name: "wiener_integral".into(),
                    value: profile.integral_estimate.unwrap_or(f64::NAN),
                    iterations: 0,
                    converged: true,
                },
                ValueRow {
                    name: format!("verdict_{}", profile.verdict),
                    value: f64::NAN,
                    iterations: 0,
                    converged: true,
                },
            ]
        }
        TaskSection::VerifyAll {} | TaskSection::ConvergenceStudy { .. } => {
            unreachable!("dispatched separately")
        }
    };
    Ok((rows, outcome))
}

fn export_minimizer(ctx: &RunContext, r: &CapacityResult<f64>) -> Result<()> {
    if !ctx.cfg.output.write_minimizer {
        return Ok(());
    }
    let mut bin = Vec::new();
    vexcap::io::write_field(&r.minimizer, &mut bin)?;
    fs::write(ctx.out_dir.join("minimizer.bin"), bin)?;
    let mut csv = Vec::new();
    vexcap::io::write_field_csv(&r.minimizer, &mut csv)?;
    fs::write(ctx.out_dir.join("minimizer.csv"), csv)?;
    let mut diag = String::new();
    diag.push_str(&r.diagnostics());
    diag.push('\n');
    write(&ctx.out_dir.join("solver_diagnostics.txt"), &diag)?;
    if r.energy_trace.is_some() {
        let mut trace = Vec::new();
        r.write_energy_trace_csv(&mut trace)?;
        fs::write(ctx.out_dir.join("energy_trace.csv"), trace)?;
    }
    Ok(())
}

fn results_csv(rows: &[ValueRow]) -> String {
    let mut s = String::from("name,value,iterations,converged\n");
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{}\n",
            r.name, r.value, r.iterations, r.converged
        ));
    }
    s
}

fn run_verify_all(ctx: &RunContext) -> Result<Outcome> {
    let env = prepare(ctx, ctx.grid_scale)?;
    let (est, reports) = run_all(&env.p, &env.w, ctx.cfg.seed, &env.opts)?;

    let mut results = String::from("check,instances,violations,worst_margin,passed\n");
    let mut summary = String::new();
    let mut outcome = Outcome::Ok;
    for report in &reports {
        results.push_str(&format!(
            "{},{},{},{},{}\n",
            report.check_name,
            report.instances,
            report.violations,
            report.worst_margin,
            report.passed
        ));
        summary.push_str(&report.summary());
        summary.push('\n');
        let mut buf = Vec::new();
        report.write_csv(&mut buf)?;
        write(
            &ctx.out_dir.join(format!("check_{}.csv", report.check_name)),
            &String::from_utf8_lossy(&buf),
        )?;
        if !report.passed {
            outcome = outcome.merge(Outcome::VerificationFailed);
        }
    }
    summary.push_str(&format!("constants: {}\n", est.describe()));
    write(&ctx.out_dir.join("results.csv"), &results)?;
    write(&ctx.out_dir.join("summary.txt"), &summary)?;
    write_manifest(ctx, Some(&est.describe()))?;
    Ok(outcome)
}

fn run_study(
    ctx: &RunContext,
    target: &TaskSection,
    levels: usize,
    reference: Option<f64>,
) -> Result<Outcome> {
    if matches!(
        target,
        TaskSection::VerifyAll {} | TaskSection::ConvergenceStudy { .. }
    ) {
        return Err(vexcap::Error::InvalidGrid(
            "convergence_study target must be a value-producing task".into(),
        ));
    }
    let levels = levels.max(2);
    let mut outcome = Outcome::Ok;
    let mut hs = Vec::new();
    let mut values = Vec::new();
    for level in 0..levels {
        let scale = ctx.grid_scale * (1usize << level);
        let grid = ctx.cfg.grid.build(scale)?;
        let (rows, o) = run_value_task(ctx, target, scale, false)?;
        outcome = outcome.merge(o);
        hs.push(grid.min_spacing());
        values.push(rows[0].value);
    }

    let mut csv = String::from("h,value,error,estimated_order\n");
    for i in 0..levels {
        let error = reference.map(|r| (values[i] - r).abs());
        // with a reference: observed order from consecutive errors;
        // without: Richardson estimate from consecutive triples
        let order = if let Some(r) = reference {
            if i + 1 < levels {
                let e0 = (values[i] - r).abs();
                let e1 = (values[i + 1] - r).abs();
                (e0 > 0.0 && e1 > 0.0).then(|| (e0 / e1).log2())
            } else {
                None
            }
        } else if i + 2 < levels {
            let d0 = values[i] - values[i + 1];
            let d1 = values[i + 1] - values[i + 2];
            (d0.abs() > 0.0 && d1.abs() > 0.0).then(|| (d0 / d1).abs().log2())
        } else {
            None
        };
        csv.push_str(&format!(
            "{},{},{},{}\n",
            hs[i],
            values[i],
            error.map(|e| e.to_string()).unwrap_or_default(),
            order.map(|o| o.to_string()).unwrap_or_default()
        ));
    }
    write(&ctx.out_dir.join("study.csv"), &csv)?;
    write(&ctx.out_dir.join("results.csv"), &csv)?;
    write_manifest(ctx, None)?;
    Ok(outcome)
}

fn write_manifest(ctx: &RunContext, constants: Option<&str>) -> Result<()> {
    let mut m = String::new();
    m.push_str(&format!(
        "tool = \"vexcap {}\"\n",
        env!("CARGO_PKG_VERSION")
    ));
    m.push_str(&format!("config_sha256 = \"{}\"\n", ctx.config_hash));
    m.push_str(&format!("seed = {}\n", ctx.cfg.seed));
    m.push_str(&format!("grid_scale = {}\n", ctx.grid_scale));
    m.push_str(&format!(
        "workers = {}\n",
        ctx.workers
            .map(|w| w.to_string())
            .unwrap_or_else(|| "auto".into())
    ));
    if let Some(c) = constants {
        m.push_str(&format!("constants = \"{c}\"\n"));
    }
    write(&ctx.out_dir.join("manifest.txt"), &m)?;
    Ok(())
}

/// Executes the configured task, writing all artifacts into the output
/// directory.
pub fn execute(ctx: &RunContext) -> Result<Outcome> {
    fs::create_dir_all(&ctx.out_dir)?;
    match &ctx.cfg.task.clone() {
        TaskSection::VerifyAll {} => run_verify_all(ctx),
        TaskSection::ConvergenceStudy {
            target,
            levels,
            reference,
        } => run_study(ctx, target, *levels, *reference),
        task => {
            let (rows, outcome) = run_value_task(ctx, task, ctx.grid_scale, true)?;
            write(&ctx.out_dir.join("results.csv"), &results_csv(&rows))?;
            write_manifest(ctx, None)?;
            Ok(outcome)
        }
    }
}
