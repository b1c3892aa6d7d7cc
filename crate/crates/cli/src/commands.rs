use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use spectral_mcmc::derivcheck::{compare_engines, uniform_points};
use spectral_mcmc::diagnostics::{summarize, Summary};
use spectral_mcmc::mcmc::{effective_engine, Posterior, Sampler};
use spectral_mcmc::simulate::simulate_observations;
use spectral_mcmc::spectral::periodogram;
use spectral_mcmc::{run_chain, HarmonicOscillator, StableSde};

use crate::config::{Derivatives, Init, Loaded, SamplerKind};
use crate::data::{create_dir, read_series, write_series, write_text, Manifest};
use crate::error::{CliError, CliResult};

pub const MANIFEST: &str = "manifest.toml";

pub struct Context {
    pub loaded: Loaded,
    pub quiet: bool,
}

impl Context {
    fn say(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            println!("{}", msg.as_ref());
        }
    }
}

fn condition_file(c: usize) -> PathBuf {
    PathBuf::from(format!("condition_{}.csv", c + 1))
}

pub fn simulate(ctx: &Context) -> CliResult<()> {
    let cfg = &ctx.loaded.config;
    let sim = cfg
        .simulate
        .as_ref()
        .ok_or_else(|| CliError::Config("`simulate` needs a [simulate] block".into()))?;
    let model = cfg.model()?;
    let spec = cfg.spec()?;
    let ys = simulate_observations(
        &model,
        &spec,
        &sim.truth,
        sim.duration,
        cfg.model.delta_t,
        cfg.seed,
        &cfg.sim_options(),
    )?;
    let out = ctx.loaded.output_dir();
    create_dir(&out)?;
    let mut files = vec![];
    for (c, y) in ys.iter().enumerate() {
        let name = condition_file(c);
        write_series(&out.join(&name), y, cfg.model.delta_t, cfg.seed)?;
        files.push(name);
    }
    Manifest {
        model: model.name().to_string(),
        sigma_obs: cfg.model.sigma_obs,
        delta_t: cfg.model.delta_t,
        duration: sim.duration,
        seed: cfg.seed,
        substeps: sim.substeps,
        parameters: spec.flat_names(),
        truth: sim.truth.clone(),
        files,
    }
    .write(&out.join(MANIFEST))?;
    ctx.say(format!(
        "wrote {} series of {} samples to {}",
        ys.len(),
        ys.first().map_or(0, Vec::len),
        out.display()
    ));
    Ok(())
}

struct Dataset {
    series: Vec<Vec<f64>>,
    truth: Option<Vec<f64>>,
}

fn load_data(loaded: &Loaded) -> CliResult<Dataset> {
    let cfg = &loaded.config;
    if let Some(sim) = &cfg.simulate {
        let series = simulate_observations(
            &cfg.model()?,
            &cfg.spec()?,
            &sim.truth,
            sim.duration,
            cfg.model.delta_t,
            cfg.seed,
            &cfg.sim_options(),
        )?;
        return Ok(Dataset {
            series,
            truth: Some(sim.truth.clone()),
        });
    }
    let data = cfg
        .data
        .as_ref()
        .ok_or_else(|| CliError::Config("a [data] or [simulate] block is required".into()))?;
    let (paths, mut truth) = match &data.manifest {
        Some(m) => {
            let path = loaded.resolve(m);
            let manifest = Manifest::read(&path)?;
            if (manifest.delta_t - cfg.model.delta_t).abs() > 1e-12 * cfg.model.delta_t {
                return Err(CliError::Precondition(format!(
                    "{}: delta_t {} differs from model.delta_t {}",
                    path.display(),
                    manifest.delta_t,
                    cfg.model.delta_t
                )));
            }
            let dir = path.parent().unwrap_or(Path::new("."));
            let files = manifest.files.iter().map(|f| dir.join(f)).collect();
            (files, Some(manifest.truth))
        }
        None => (
            data.paths
                .iter()
                .map(|p| loaded.resolve(p))
                .collect::<Vec<_>>(),
            None,
        ),
    };
    if data.truth.is_some() {
        truth.clone_from(&data.truth);
    }
    if paths.len() != cfg.model.conditions {
        return Err(CliError::Precondition(format!(
            "{} data files for {} conditions",
            paths.len(),
            cfg.model.conditions
        )));
    }
    let series = paths
        .iter()
        .map(|p| read_series(p, cfg.model.delta_t))
        .collect::<CliResult<_>>()?;
    Ok(Dataset { series, truth })
}

fn posterior(loaded: &Loaded, data: &Dataset) -> CliResult<Posterior<HarmonicOscillator>> {
    let cfg = &loaded.config;
    let spectra = data
        .series
        .iter()
        .map(|y| periodogram(y, cfg.model.delta_t))
        .collect::<Result<_, _>>()?;
    Ok(Posterior::new(cfg.model()?, cfg.spec()?, spectra)?)
}

fn initial_point(loaded: &Loaded, truth: Option<&Vec<f64>>) -> CliResult<Option<Vec<f64>>> {
    match &loaded.config.init {
        None => Ok(None),
        Some(Init::Values(v)) => Ok(Some(v.clone())),
        Some(Init::Named(_)) => truth.cloned().map(Some).ok_or_else(|| {
            CliError::Precondition("init = \"truth\" but the true parameters are unknown".into())
        }),
    }
}

pub fn sample(ctx: &Context) -> CliResult<()> {
    let loaded = &ctx.loaded;
    let cfg = &loaded.config;
    let data = load_data(loaded)?;
    let target = posterior(loaded, &data)?;
    let init = initial_point(loaded, data.truth.as_ref())?;
    let sampler = cfg.sampler(cfg.sampler);
    let engine = effective_engine(&target, cfg.engine(cfg.derivatives));
    ctx.say(format!(
        "running {} with {} derivatives for {} iterations",
        sampler.name(),
        engine.name(),
        sampler.n_iterations()
    ));
    let chain = run_chain(
        &target,
        &sampler,
        engine,
        init.as_deref(),
        cfg.burn_in(cfg.sampler),
        0,
    )?;
    let actual = data.truth.as_deref().filter(|t| t.len() == chain.dim());
    let summary = summarize(&chain, actual)?;
    let out = loaded.output_dir();
    create_dir(&out)?;
    write_text(&out.join("chain.csv"), &chain.to_csv())?;
    write_text(&out.join("summary.txt"), &summary.to_text())?;
    write_text(&out.join("summary.csv"), &summary.to_csv())?;
    ctx.say(format!(
        "kept {} draws, acceptance rate {:.3}\n{}",
        chain.len(),
        chain.acceptance_rate(),
        summary.to_text()
    ));
    Ok(())
}

/// One cell of the sampler × derivative grid.
pub struct Cell {
    pub sampler: &'static str,
    pub derivatives: &'static str,
    pub outcome: Result<Summary, String>,
}

pub fn benchmark_table(cells: &[Cell]) -> (String, String) {
    let mut text = format!(
        "{:<8} {:<24} {:>12} {:>10} {:>16}\n",
        "sampler", "derivative implementation", "cpu time (s)", "min N Eff", "min N Eff/s"
    );
    let mut csv = String::from("sampler,derivatives,cpu_time_s,min_n_eff,min_n_eff_per_s,error\n");
    for c in cells {
        match &c.outcome {
            Ok(s) => {
                let _ = writeln!(
                    text,
                    "{:<8} {:<24} {:>12.2} {:>10.1} {:>16.2}",
                    c.sampler, c.derivatives, s.cpu_seconds, s.min_n_eff, s.min_n_eff_per_sec
                );
                let _ = writeln!(
                    csv,
                    "{},{},{},{},{},",
                    c.sampler, c.derivatives, s.cpu_seconds, s.min_n_eff, s.min_n_eff_per_sec
                );
            }
            Err(e) => {
                let _ = writeln!(text, "{:<8} {:<24} failed: {e}", c.sampler, c.derivatives);
                let _ = writeln!(
                    csv,
                    "{},{},,,,\"{}\"",
                    c.sampler,
                    c.derivatives,
                    e.replace('"', "'")
                );
            }
        }
    }
    (text, csv)
}

fn derivative_label(d: Derivatives) -> &'static str {
    match d {
        Derivatives::Fd => "finite differences",
        Derivatives::Ad => "automatic differentiation",
    }
}

pub fn benchmark(ctx: &Context) -> CliResult<()> {
    let loaded = &ctx.loaded;
    let cfg = &loaded.config;
    let data = load_data(loaded)?;
    let target = posterior(loaded, &data)?;
    let init = initial_point(loaded, data.truth.as_ref())?;
    // Cells run one after another so process CPU time is attributable.
    let mut cells = vec![];
    for kind in [SamplerKind::Smmala, SamplerKind::Nuts] {
        for d in [Derivatives::Fd, Derivatives::Ad] {
            let sampler: Sampler = cfg.sampler(kind);
            ctx.say(format!(
                "running {} with {}",
                sampler.name(),
                derivative_label(d)
            ));
            let outcome = run_chain(
                &target,
                &sampler,
                cfg.engine(d),
                init.as_deref(),
                cfg.burn_in(kind),
                0,
            )
            .and_then(|chain| summarize(&chain, None))
            .map_err(|e| e.to_string());
            cells.push(Cell {
                sampler: sampler.name(),
                derivatives: derivative_label(d),
                outcome,
            });
        }
    }
    let (text, csv) = benchmark_table(&cells);
    let out = loaded.output_dir();
    create_dir(&out)?;
    write_text(&out.join("benchmark.txt"), &text)?;
    write_text(&out.join("benchmark.csv"), &csv)?;
    if !ctx.quiet {
        print!("{text}");
    }
    let failed = cells.iter().filter(|c| c.outcome.is_err()).count();
    if failed > 0 {
        return Err(CliError::Numerical(format!(
            "{failed} of {} benchmark cells failed",
            cells.len()
        )));
    }
    Ok(())
}

pub fn check_derivatives(ctx: &Context) -> CliResult<()> {
    let loaded = &ctx.loaded;
    let cfg = &loaded.config;
    let data = load_data(loaded)?;
    let target = posterior(loaded, &data)?;
    let (lo, hi) = target.spec().bounds();
    let points = uniform_points(&lo, &hi, cfg.check.points, cfg.seed);
    let report = compare_engines(&target, &points, cfg.engine(Derivatives::Fd))?;
    // The report is the command's product, so it is printed even when quiet.
    print!("{}", report.to_text());
    if report.max_gradient_discrepancy > cfg.check.gradient_tolerance {
        return Err(CliError::Numerical(format!(
            "gradient discrepancy {:.3e} exceeds {:.1e}",
            report.max_gradient_discrepancy, cfg.check.gradient_tolerance
        )));
    }
    Ok(())
}
