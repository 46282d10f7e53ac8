use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{bail, ensure, Context, Result};
use turbmodes::coupling::{b_hg_fixed, AcceptanceSpectrum};
use turbmodes::evolution::io::{write_grouped_csv, write_matrix_csv, write_matrix_json, write_power_csv};
use turbmodes::evolution::{lambda_matrix, scaling_law_check, Channel, Damping, QuadratureSettings};
use turbmodes::simulator::io::{write_ensemble_csv, write_ensemble_groups_csv, write_ensemble_json, write_screen};
use turbmodes::simulator::{run_ensemble, EnsembleConfig, Grid, ScreenGenerator, ScreenSpec};
use turbmodes::turbulence::{cn2_from_r0, fried_r0, rytov_sigma2};
use turbmodes::{Basis, CouplingMatrix, Family, ModeId, PowerVector};

use crate::config::{ExperimentConfig, SegmentPlan, Strength};
use crate::ToleranceFailure;

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    let path = dir.join(name);
    Ok(BufWriter::new(File::create(&path).with_context(|| format!("cannot create {}", path.display()))?))
}

pub fn prepare_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create output directory {}", dir.display()))
}

/// Writes the effective configuration plus a `[run]` table.
pub fn write_metadata(config: &ExperimentConfig, command: &str) -> Result<()> {
    let stamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let text = format!(
        "{}\n[run]\ncommand = \"{command}\"\nversion = \"{}\"\ntimestamp = {stamp}\n",
        config.to_toml()?,
        env!("CARGO_PKG_VERSION")
    );
    fs::write(config.output.dir.join("metadata.toml"), text).context("cannot write metadata.toml")
}

/// `Cn^2` of a unit-weight segment.
fn resolve_cn2(config: &ExperimentConfig, plan: &[SegmentPlan]) -> Result<f64> {
    let weighted: f64 = plan.iter().map(|s| s.weight * s.length).sum();
    if weighted == 0.0 {
        return Ok(0.0);
    }
    let k = 2.0 * std::f64::consts::PI / config.beam.wavelength;
    match config.strength.resolve()? {
        Strength::Cn2(v) => Ok(v),
        Strength::R0(r0) => Ok(cn2_from_r0(r0, k, weighted)?),
        Strength::Lambda00L(target) => {
            let fundamental = Basis::enumerate(config.family()?, 0);
            let unit = config.turbulence(1.0)?;
            let mut per_cn2 = 0.0;
            for s in plan {
                let m = lambda_matrix(&fundamental, &unit, &s.geometry, &QuadratureSettings::default())?;
                per_cn2 += m.lambda()[(0, 0)].abs() * s.weight * s.length;
            }
            Ok(target / per_cn2)
        }
    }
}

struct Built {
    cn2: f64,
    plan: Vec<SegmentPlan>,
    matrices: Vec<CouplingMatrix>,
}

fn build_channel(config: &ExperimentConfig) -> Result<Built> {
    let basis = config.basis()?;
    let plan = config.segments()?;
    let cn2 = resolve_cn2(config, &plan)?;
    let settings = QuadratureSettings::default();
    let unit = config.turbulence(1.0)?;
    let mut cache: Vec<(Damping, CouplingMatrix)> = Vec::new();
    let mut matrices = Vec::new();
    for s in &plan {
        let damping = Damping::for_beam(&unit, &s.geometry);
        let integrals = match cache.iter().find(|(d, _)| *d == damping) {
            Some((_, m)) => m.clone(),
            None => {
                let m = lambda_matrix(&basis, &unit, &s.geometry, &settings)?;
                cache.push((damping, m.clone()));
                m
            }
        };
        matrices.push(CouplingMatrix::from_integrals(
            basis.clone(),
            integrals.integrals().clone(),
            integrals.integral_errors().clone(),
            config.turbulence(cn2 * s.weight)?,
            s.geometry,
            settings,
        )?);
    }
    Ok(Built { cn2, plan, matrices })
}

fn print_strength(config: &ExperimentConfig, built: &Built) -> Result<()> {
    let k = 2.0 * std::f64::consts::PI / config.beam.wavelength;
    let weighted: f64 = built.plan.iter().map(|s| s.weight * s.length).sum();
    println!("Cn2 = {:.6e} m^-2/3 (unit weight)", built.cn2);
    if built.cn2 > 0.0 && weighted > 0.0 {
        println!(
            "r0 = {:.6} m, sigma_R^2 = {:.4}",
            fried_r0(built.cn2 * weighted / config.channel.length, k, config.channel.length)?,
            rytov_sigma2(built.cn2 * weighted / config.channel.length, k, config.channel.length)?
        );
    }
    let mut total = 0.0;
    for (i, (s, m)) in built.plan.iter().zip(&built.matrices).enumerate() {
        let i00 = m.fundamental_integral()?;
        let l00 = m.strength(s.length)?;
        total += l00;
        println!(
            "segment {}: length {} m, w = {:.6} m, I00 = {:.6}, Lambda00 L = {:.6}",
            i + 1,
            s.length,
            s.geometry.width(),
            i00,
            l00
        );
    }
    println!("|Lambda00 L| total = {:.6}", total.abs());
    Ok(())
}

pub fn lambda(config: &ExperimentConfig) -> Result<()> {
    let built = build_channel(config)?;
    let dir = &config.output.dir;
    prepare_dir(dir)?;
    let single = built.matrices.len() == 1;
    for (i, m) in built.matrices.iter().enumerate() {
        m.check_invariants()?;
        let stem = if single { "lambda".to_string() } else { format!("lambda_{:02}", i + 1) };
        write_matrix_csv(create(dir, &format!("{stem}.csv"))?, m.basis(), m.lambda())?;
        write_matrix_json(create(dir, &format!("{stem}.json"))?, m)?;
    }
    print_strength(config, &built)?;
    write_metadata(config, "lambda")
}

pub fn propagate(config: &ExperimentConfig) -> Result<()> {
    let built = build_channel(config)?;
    let parts: Vec<(f64, &CouplingMatrix)> = built.plan.iter().map(|s| s.length).zip(&built.matrices).collect();
    let channel = Channel::from_matrices(&parts)?;
    let input = config.input_mode()?;
    let v = channel.apply(&PowerVector::unit(channel.basis().clone(), input)?)?;
    let dir = &config.output.dir;
    prepare_dir(dir)?;
    write_power_csv(create(dir, "power.csv")?, &v)?;
    write_grouped_csv(create(dir, "groups.csv")?, &v.grouped())?;
    print_strength(config, &built)?;
    println!("P[{input}] = {:.6}, tracked total = {:.6}", v.get(input).unwrap_or(0.0), v.total());
    write_metadata(config, "propagate")
}

pub fn ensemble_config(config: &ExperimentConfig) -> Result<EnsembleConfig> {
    ensure!(config.channel.segments.is_empty(), "simulate supports uniform channels only (remove channel.segments)");
    let plan = config.segments()?;
    let cn2 = resolve_cn2(config, &plan)?;
    let sim = &config.simulation;
    let length = config.channel.length;
    ensure!(length > 0.0, "simulate needs a positive channel.length");
    let grid = Grid::new(sim.points, sim.pitch)?;
    let mut screen = ScreenSpec::new(
        config.turbulence(cn2)?,
        length / sim.screens as f64,
        config.beam.wavelength,
        grid,
        config.seed,
    );
    screen.lowest_frequency = sim.lowest_frequency;
    screen.components = sim.components;
    screen.subharmonic_levels = sim.subharmonic_levels;
    let (z, step) = if sim.propagate {
        (config.start(), length / sim.screens as f64)
    } else {
        (config.start() + length / 2.0, 0.0)
    };
    Ok(EnsembleConfig {
        screen,
        geometry: config.geometry_at(z)?,
        input: config.input_mode()?,
        basis: config.basis()?,
        screens_per_realization: sim.screens,
        step,
        realizations: sim.realizations,
    })
}

pub fn simulate(config: &ExperimentConfig) -> Result<()> {
    let ens = ensemble_config(config)?;
    let result = run_ensemble(&ens)?;
    for w in &result.warnings {
        eprintln!("warning: {w}");
    }
    let dir = &config.output.dir;
    prepare_dir(dir)?;
    write_ensemble_csv(create(dir, "ensemble.csv")?, &result)?;
    write_ensemble_groups_csv(create(dir, "ensemble_groups.csv")?, &result)?;
    write_ensemble_json(create(dir, "ensemble.json")?, &result)?;
    if config.output.dump_screens > 0 {
        let gen = ScreenGenerator::new(&ens.screen)?;
        for i in 0..config.output.dump_screens {
            write_screen(&dir.join(format!("screen_{i:04}.bin")), &gen.screen(i as u64))?;
        }
    }
    println!(
        "{} realizations, {} screen(s) each, per-screen Rytov {:.4}",
        result.realizations, ens.screens_per_realization, result.step_rytov
    );
    for g in &result.groups {
        println!("N = {:2}: {:.6} +- {:.6}", g.order, g.mean, g.stderr);
    }
    write_metadata(config, "simulate")
}

/// Per-mode and per-group values read from any of the output files.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub basis: Basis,
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
    pub groups: Vec<(u32, f64, f64)>,
}

fn group_table(basis: Basis, mean: Vec<f64>, stderr: Vec<f64>) -> Result<Table> {
    // Without per-realization data the group error assumes independent modes.
    let m = turbmodes::modes::group_by_order(&basis, &mean)?;
    let var: Vec<f64> = stderr.iter().map(|s| s * s).collect();
    let v = turbmodes::modes::group_by_order(&basis, &var)?;
    let groups = m.iter().zip(&v).map(|(&(n, g), &(_, s2))| (n, g, s2.sqrt())).collect();
    Ok(Table { basis, mean, stderr, groups })
}

pub fn load_table(path: &Path) -> Result<Table> {
    let ctx = || format!("cannot read {}", path.display());
    if path.extension().is_some_and(|e| e == "json") {
        let r = turbmodes::simulator::io::read_ensemble_json(File::open(path).with_context(ctx)?).with_context(ctx)?;
        let groups = r.groups.iter().map(|g| (g.order, g.mean, g.stderr)).collect();
        return Ok(Table { basis: r.basis, mean: r.mean, stderr: r.stderr, groups });
    }
    let text = fs::read_to_string(path).with_context(ctx)?;
    let header = text.lines().next().unwrap_or("").trim();
    match header {
        "mode,order,power" => {
            let v = turbmodes::evolution::io::read_power_csv(text.as_bytes()).with_context(ctx)?;
            let n = v.values().len();
            group_table(v.basis().clone(), v.values().to_vec(), vec![0.0; n])
        }
        "mode,order,mean,stderr" => {
            let t = turbmodes::simulator::io::read_ensemble_csv(text.as_bytes()).with_context(ctx)?;
            group_table(t.basis, t.mean, t.stderr)
        }
        other => bail!("{}: unrecognised header '{other}'", path.display()),
    }
}

fn z_score(theory: f64, sim: f64, sigma: f64) -> f64 {
    let d = sim - theory;
    if sigma > 0.0 {
        d / sigma
    } else if d.abs() <= 1e-12 {
        0.0
    } else {
        d.signum() * f64::INFINITY
    }
}

pub struct CompareOptions {
    pub theory: PathBuf,
    pub sim: PathBuf,
    pub sigma: f64,
    pub max_order: Option<u32>,
}

/// Writes `compare.csv`; fails with [`ToleranceFailure`] when a group
/// deviates by more than `sigma` standard errors.
pub fn compare(config: &ExperimentConfig, opts: &CompareOptions) -> Result<()> {
    let theory = load_table(&opts.theory)?;
    let sim = load_table(&opts.sim)?;
    if theory.basis != sim.basis {
        return Err(turbmodes::Error::BasisMismatch(format!(
            "{} and {} use different bases",
            opts.theory.display(),
            opts.sim.display()
        ))
        .into());
    }
    let dir = &config.output.dir;
    prepare_dir(dir)?;
    let mut w = csv::Writer::from_writer(create(dir, "compare.csv")?);
    w.write_record(["level", "label", "theory", "sim", "stderr", "z"])?;
    for (i, mode) in theory.basis.modes().iter().enumerate() {
        let s = theory.stderr[i].hypot(sim.stderr[i]);
        let z = z_score(theory.mean[i], sim.mean[i], s);
        w.write_record(["mode".into(), mode.to_string(), theory.mean[i].to_string(), sim.mean[i].to_string(), s.to_string(), z.to_string()])?;
    }
    let mut failures = Vec::new();
    println!("{:>3} {:>12} {:>12} {:>12} {:>8}", "N", "theory", "sim", "stderr", "z");
    for (&(n, t, ts), &(_, s, ss)) in theory.groups.iter().zip(&sim.groups) {
        let sigma = ts.hypot(ss);
        let z = z_score(t, s, sigma);
        w.write_record(["group".into(), n.to_string(), t.to_string(), s.to_string(), sigma.to_string(), z.to_string()])?;
        let checked = opts.max_order.is_none_or(|m| n <= m);
        let flag = if checked && z.abs() > opts.sigma {
            failures.push(n);
            " *"
        } else {
            ""
        };
        println!("{n:>3} {t:>12.6} {s:>12.6} {sigma:>12.6} {z:>8.2}{flag}");
    }
    w.flush()?;
    if failures.is_empty() {
        println!("all checked groups within {} standard errors", opts.sigma);
        Ok(())
    } else {
        Err(ToleranceFailure(format!("groups {failures:?} deviate by more than {} standard errors", opts.sigma)).into())
    }
}

pub fn table1(config: &ExperimentConfig, n_max: u32) -> Result<()> {
    let dir = &config.output.dir;
    prepare_dir(dir)?;
    let mut w = csv::Writer::from_writer(create(dir, "table1.csv")?);
    w.write_record(["family", "mode", "order", "integral", "approximation", "relative_error"])?;
    let settings = QuadratureSettings::default();
    println!("{:<10} {:>3} {:>10} {:>12} {:>9}", "mode", "N", "|I|", "12(N+1)^5/6", "rel err");
    for family in [Family::Lg, Family::Hg] {
        for row in scaling_law_check(family, n_max, &settings)? {
            w.write_record([
                family.to_string(),
                row.mode.to_string(),
                row.mode.order().to_string(),
                row.integral.to_string(),
                row.approximation.to_string(),
                row.relative_error.to_string(),
            ])?;
            println!(
                "{:<10} {:>3} {:>10.3} {:>12.3} {:>8.2}%",
                row.mode.to_string(),
                row.mode.order(),
                row.integral.abs(),
                row.approximation,
                100.0 * row.relative_error
            );
        }
    }
    w.flush()?;
    Ok(())
}

pub struct DumpOptions {
    pub a: String,
    pub b: String,
    pub theta_max: f64,
    pub points: usize,
    pub xi: Option<f64>,
}

fn file_label(mode: ModeId) -> String {
    mode.to_string().replace(['(', ')'], "").replace(',', "_")
}

pub fn dump_b(config: &ExperimentConfig, opts: &DumpOptions) -> Result<PathBuf> {
    let a: ModeId = opts.a.parse()?;
    let b: ModeId = opts.b.parse()?;
    ensure!(opts.points >= 2, "--points must be at least 2");
    ensure!(opts.theta_max > 0.0, "--theta-max must be positive");
    let eval: Box<dyn Fn(f64) -> f64> = match (opts.xi, a, b) {
        (None, _, _) => {
            let spec = AcceptanceSpectrum::new(a, b)?;
            Box::new(move |t| spec.eval(t))
        }
        (Some(xi), ModeId::Hg { m, n }, ModeId::Hg { m: k, n: t }) => Box::new(move |th| b_hg_fixed(m, n, k, t, th, xi)),
        (Some(_), _, _) => bail!("--xi applies to HG pairs only"),
    };
    let dir = &config.output.dir;
    prepare_dir(dir)?;
    let name = format!("b_{}_{}.csv", file_label(a), file_label(b));
    let mut w = csv::Writer::from_writer(create(dir, &name)?);
    w.write_record(["theta", "value"])?;
    for i in 0..opts.points {
        let th = opts.theta_max * i as f64 / (opts.points - 1) as f64;
        w.write_record([th.to_string(), eval(th).to_string()])?;
    }
    w.flush()?;
    Ok(dir.join(name))
}
