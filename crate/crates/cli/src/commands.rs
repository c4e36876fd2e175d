use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use oam_eraser::analysis::{
    count_lobes, fit_fringe, render_azimuthal_pattern, theoretical_visibility, visibility, FringeFit,
};
use oam_eraser::experiment::{
    linspace, run_pipeline, scan_state, simulate_counts, simulate_counts_repetition, simulate_timeline_repetition,
    ExperimentConfig, ScanSeries, ScanVariable,
};
use oam_eraser::hilbert::Arm;
use oam_eraser::Error;

use crate::config::{parse_document, ConfigDocument, ScanVariableName};
use crate::output::{
    fmt_g, line_plot_svg, polar_plot_svg, read_series_csv, series_csv, summary_csv, table_csv, write_file,
};
use crate::CliError;

#[derive(Debug, Parser)]
#[command(name = "oam-eraser", version, about = "OAM quantum-eraser simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    /// TOML experiment document.
    pub config: PathBuf,
    /// Overrides `counting.seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Sample Poisson counts and fit them instead of exact probabilities.
    #[arg(long, overrides_with = "no_counts")]
    pub counts: bool,
    #[arg(long, overrides_with = "counts")]
    pub no_counts: bool,
    /// Also write SVG plots.
    #[arg(long)]
    pub svg: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// θ-scan of the hologram at the configured polarizer angle.
    ScanTheta(ScanArgs),
    /// α-scan, with a fitted visibility per α (visibility.csv).
    ScanAlpha(ScanArgs),
    /// Conditional probability over an α × θ grid.
    ScanGrid(ScanArgs),
    /// Event-level simulation with coincidence gating.
    Timeline {
        #[command(flatten)]
        config: ConfigArgs,
        /// Simulated time per run, seconds.
        #[arg(long, default_value_t = 1.0)]
        duration: f64,
        #[arg(long, default_value_t = 1)]
        repetitions: u64,
    },
    /// Azimuthal intensity of the |ℓ| sector state.
    RenderPattern {
        #[arg(long, allow_hyphen_values = true)]
        l: i32,
        /// Relative phase between |ℓ⟩ and |−ℓ⟩, radians.
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        phase: f64,
        #[arg(long, default_value_t = 720)]
        grid: usize,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        #[arg(long)]
        svg: bool,
    },
    /// Fits a fringe to a series CSV written by a scan.
    Fit {
        input: PathBuf,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::ScanTheta(a) => scan_theta(&a),
        Command::ScanAlpha(a) => scan_alpha(&a),
        Command::ScanGrid(a) => scan_grid(&a),
        Command::Timeline {
            config,
            duration,
            repetitions,
        } => timeline(&config, duration, repetitions),
        Command::RenderPattern {
            l,
            phase,
            grid,
            out_dir,
            svg,
        } => render_pattern(l, phase, grid, &out_dir, svg),
        Command::Fit { input, out_dir } => fit(&input, out_dir.as_deref()),
    }
}

fn load(args: &ConfigArgs) -> Result<(ConfigDocument, ExperimentConfig), CliError> {
    let text = fs::read_to_string(&args.config).map_err(|e| CliError::Io(format!("{}: {e}", args.config.display())))?;
    let mut doc = parse_document(&text)?;
    if let Some(seed) = args.seed {
        doc.counting.seed = seed;
    }
    let cfg = doc.to_experiment()?;
    fs::create_dir_all(&args.out_dir).map_err(|e| CliError::Io(format!("{}: {e}", args.out_dir.display())))?;
    Ok((doc, cfg))
}

fn settings(doc: &ConfigDocument, variable: ScanVariableName) -> Vec<f64> {
    let (start, stop, endpoint) = doc.scan.range(variable);
    linspace(start, stop, doc.scan.points, endpoint)
}

/// θ samples used for per-α visibility fits.
fn fit_thetas(doc: &ConfigDocument) -> Vec<f64> {
    linspace(0.0, 2.0 * PI, doc.scan.theta_points, false)
}

fn fit_or_warn(series: &ScanSeries) -> Option<FringeFit> {
    match fit_fringe(&series.settings, &series.fit_values()) {
        Ok(f) => Some(f),
        Err(e) => {
            eprintln!("warning: no fringe fit: {e}");
            None
        }
    }
}

/// Exact θ-scan, with counts drawn from repetition `counts` when given.
pub fn theta_series(cfg: &ExperimentConfig, alpha: f64, thetas: &[f64], counts: Option<u64>) -> Result<ScanSeries, CliError> {
    let state = run_pipeline(cfg)?.state;
    let mut series = scan_state(&state, cfg, ScanVariable::Theta, alpha, thetas)?;
    if let Some(rep) = counts {
        series = simulate_counts_repetition(cfg, &series, rep);
    }
    Ok(series)
}

fn scan_theta(a: &ScanArgs) -> Result<(), CliError> {
    let (doc, cfg) = load(&a.config)?;
    let thetas = settings(&doc, ScanVariableName::Theta);
    let mut series = theta_series(&cfg, cfg.analyzer_a.alpha, &thetas, a.counts.then_some(0))?;
    series.fit = fit_or_warn(&series);
    let out = &a.config.out_dir;
    write_file(&out.join("scan_theta.csv"), &series_csv(&series)?)?;
    let v = visibility(&series)?;
    if let Some(f) = &series.fit {
        write_file(&out.join("summary.csv"), &summary_csv(f, v)?)?;
    }
    if a.svg {
        let svg = line_plot_svg("coincidences vs θ", &series.settings, &series.fit_values(), series.fit.as_ref());
        write_file(&out.join("fringe.svg"), svg.as_bytes())?;
    }
    println!("visibility {}", fmt_g(v));
    Ok(())
}

fn scan_alpha(a: &ScanArgs) -> Result<(), CliError> {
    let (doc, cfg) = load(&a.config)?;
    let alphas = settings(&doc, ScanVariableName::Alpha);
    let state = run_pipeline(&cfg)?.state;
    let mut series = scan_state(&state, &cfg, ScanVariable::Alpha, cfg.analyzer_b.theta, &alphas)?;
    if a.counts {
        series = simulate_counts(&cfg, &series);
    }
    let thetas = fit_thetas(&doc);
    let mut rows = Vec::with_capacity(alphas.len());
    for (k, &alpha) in alphas.iter().enumerate() {
        let mut s = scan_state(&state, &cfg, ScanVariable::Theta, alpha, &thetas)?;
        if a.counts {
            s = simulate_counts_repetition(&cfg, &s, k as u64 + 1);
        }
        let v = fit_fringe(&s.settings, &s.fit_values())?.visibility();
        rows.push(vec![alpha, v, theoretical_visibility(alpha)]);
    }
    let out = &a.config.out_dir;
    write_file(&out.join("scan_alpha.csv"), &series_csv(&series)?)?;
    write_file(
        &out.join("visibility.csv"),
        &table_csv(&["alpha_rad", "visibility", "abs_sin_2alpha"], &rows)?,
    )?;
    if a.svg {
        let xs: Vec<f64> = rows.iter().map(|r| r[0]).collect();
        let ys: Vec<f64> = rows.iter().map(|r| r[1]).collect();
        write_file(&out.join("visibility.svg"), line_plot_svg("visibility vs α", &xs, &ys, None).as_bytes())?;
    }
    for r in &rows {
        println!("alpha {} visibility {}", fmt_g(r[0]), fmt_g(r[1]));
    }
    Ok(())
}

fn scan_grid(a: &ScanArgs) -> Result<(), CliError> {
    let (doc, cfg) = load(&a.config)?;
    let alphas = settings(&doc, ScanVariableName::Grid);
    let thetas = linspace(0.0, 2.0 * PI, doc.scan.theta_points, true);
    let state = run_pipeline(&cfg)?.state;
    let mut rows = Vec::with_capacity(alphas.len() * thetas.len());
    let mut all_counts = Vec::new();
    for (k, &alpha) in alphas.iter().enumerate() {
        let mut s = scan_state(&state, &cfg, ScanVariable::Theta, alpha, &thetas)?;
        if a.counts {
            s = simulate_counts_repetition(&cfg, &s, k as u64);
            all_counts.extend(s.counts.clone().unwrap_or_default());
        }
        for i in 0..s.len() {
            rows.push(vec![alpha, s.settings[i], s.joint[i], s.conditional[i]]);
        }
    }
    let mut header = vec!["alpha_rad", "theta_rad", "p_joint", "p_conditional"];
    if a.counts {
        header.push("counts");
        for (row, n) in rows.iter_mut().zip(&all_counts) {
            row.push(*n as f64);
        }
    }
    write_file(&a.config.out_dir.join("grid.csv"), &table_csv(&header, &rows)?)?;
    println!("grid {} x {}", alphas.len(), thetas.len());
    Ok(())
}

fn timeline(args: &ConfigArgs, duration: f64, repetitions: u64) -> Result<(), CliError> {
    let (_, cfg) = load(args)?;
    if repetitions == 0 {
        return Err(CliError::Config {
            key: "--repetitions".into(),
            message: "must be ≥ 1".into(),
        });
    }
    let (alpha, theta) = (cfg.analyzer_a.alpha, cfg.analyzer_b.theta);
    let mut rows = Vec::new();
    for rep in 0..repetitions {
        let t = simulate_timeline_repetition(&cfg, alpha, theta, duration, rep).map_err(|e| match e {
            Error::InvalidParameter { .. } => CliError::Config {
                key: "--duration".into(),
                message: e.to_string(),
            },
            other => other.into(),
        })?;
        rows.push(vec![
            rep as f64,
            t.pairs_emitted as f64,
            t.clicks_a as f64,
            t.clicks_b as f64,
            t.coincidences as f64,
            t.true_coincidences as f64,
            t.accidental_floor(),
        ]);
    }
    let header = [
        "repetition",
        "pairs_emitted",
        "clicks_a",
        "clicks_b",
        "coincidences",
        "true_coincidences",
        "accidental_floor",
    ];
    write_file(&args.out_dir.join("timeline.csv"), &table_csv(&header, &rows)?)?;
    let mean = rows.iter().map(|r| r[4]).sum::<f64>() / rows.len() as f64;
    println!("delay_a_ns {}", fmt_g(cfg.delay(Arm::A) * 1e9));
    println!("mean_coincidence_rate {}", fmt_g(mean / duration));
    Ok(())
}

fn render_pattern(l: i32, phase: f64, grid: usize, out_dir: &Path, svg: bool) -> Result<(), CliError> {
    let intensity = render_azimuthal_pattern(l, phase, grid).map_err(|e| CliError::Config {
        key: "--grid".into(),
        message: e.to_string(),
    })?;
    fs::create_dir_all(out_dir).map_err(|e| CliError::Io(format!("{}: {e}", out_dir.display())))?;
    let phis = linspace(0.0, 2.0 * PI, grid, false);
    let rows: Vec<Vec<f64>> = phis.iter().zip(&intensity).map(|(&p, &i)| vec![p, i]).collect();
    write_file(&out_dir.join("pattern.csv"), &table_csv(&["phi_rad", "intensity"], &rows)?)?;
    if svg {
        write_file(&out_dir.join("pattern.svg"), polar_plot_svg(&format!("ℓ = {l}"), &intensity).as_bytes())?;
    }
    println!("lobes {}", count_lobes(&intensity));
    Ok(())
}

fn fit(input: &Path, out_dir: Option<&Path>) -> Result<(), CliError> {
    let series = read_series_csv(input)?;
    let f = fit_fringe(&series.settings, &series.fit_values()).map_err(|e| CliError::Input(e.to_string()))?;
    let v = f.visibility();
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        write_file(&dir.join("summary.csv"), &summary_csv(&f, v)?)?;
    }
    print!("{}", String::from_utf8(summary_csv(&f, v)?).expect("ascii csv"));
    Ok(())
}
