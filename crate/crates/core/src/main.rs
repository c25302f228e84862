//! Command-line experiment runner.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dpbandit::design::{compute_near_g_optimal, support_bound};
use dpbandit::harness::{
    preset_configs, resolve_workers, run_experiment, sweep_configs, write_outputs,
    ExperimentConfig, RawConfig,
};
use dpbandit::privatizer::{
    central_privatize, local_privatize, scalar_shuffle_params, scalar_shuffle_sum_with,
    shuffle_aggregate, shuffle_params, sigma_nc, sigma_nl, PrivacyModel, PrivacyParams,
};
use dpbandit::rng::SimRng;
use dpbandit::stats::{mean, sample_variance};

#[derive(Parser)]
#[command(name = "dpbandit", version, about = "Phased-elimination linear bandit simulator with pluggable privacy mechanisms")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Overrides {
    /// Configuration file (flat key = value pairs, TOML syntax).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Single replicate seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated replicate seeds.
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    /// Privacy model: none | central | local | shuffle.
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Output directory for CSV and summary files.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker pool size (falls back to DPBANDIT_WORKERS, then machine
    /// parallelism).
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configuration or a named preset.
    Run {
        #[command(flatten)]
        overrides: Overrides,
        /// Preset name: fig2a-desk | fig2b-desk | fig2c-desk.
        #[arg(long)]
        preset: Option<String>,
    },
    /// Run a grid of cells over models/epsilons/alphas.
    Sweep {
        #[command(flatten)]
        overrides: Overrides,
        /// Comma-separated privacy models for the grid.
        #[arg(long, value_delimiter = ',')]
        models: Option<Vec<String>>,
        /// Comma-separated epsilon values for the grid.
        #[arg(long, value_delimiter = ',')]
        epsilons: Option<Vec<f64>>,
        /// Comma-separated alpha values for the grid.
        #[arg(long, value_delimiter = ',')]
        alphas: Option<Vec<f64>>,
    },
    /// Report design quality on random action sets.
    CheckDesign {
        /// Dimensions to test, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "2,5,10")]
        dims: Vec<usize>,
        /// Action counts to test, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "10,50")]
        ks: Vec<usize>,
        /// Random sets per (d, k) combination.
        #[arg(long, default_value_t = 20)]
        sets: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Monte Carlo unbiasedness and variance checks for the privatizers.
    CheckPrivacy {
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Print the version.
    Version,
}

fn build_config(overrides: &Overrides) -> Result<ExperimentConfig, dpbandit::Error> {
    let mut cfg = ExperimentConfig::default();
    if let Some(path) = &overrides.config {
        RawConfig::from_file(path)?.apply(&mut cfg)?;
    }
    let flag_raw = RawConfig {
        model: overrides.model.clone(),
        epsilon: overrides.epsilon,
        delta: overrides.delta,
        alpha: overrides.alpha,
        seed: overrides.seed,
        seeds: overrides.seeds.clone(),
        ..Default::default()
    };
    flag_raw.apply(&mut cfg)?;
    Ok(cfg)
}

fn apply_flag_overrides(cfg: &mut ExperimentConfig, overrides: &Overrides) -> Result<(), dpbandit::Error> {
    let flag_raw = RawConfig {
        model: overrides.model.clone(),
        epsilon: overrides.epsilon,
        delta: overrides.delta,
        alpha: overrides.alpha,
        seed: overrides.seed,
        seeds: overrides.seeds.clone(),
        ..Default::default()
    };
    flag_raw.apply(cfg)
}

fn run_cells(
    cells: Vec<ExperimentConfig>,
    overrides: &Overrides,
) -> Result<(), dpbandit::Error> {
    let workers = resolve_workers(overrides.workers);
    let mut results = Vec::new();
    for cell in &cells {
        eprintln!("running {} ({} seeds, {} workers)...", cell.label, cell.seeds.len(), workers);
        results.push(run_experiment(cell, workers)?);
    }
    print!("{}", dpbandit::harness::render_text_summary(&results));
    if let Some(dir) = &overrides.out {
        let written = write_outputs(dir, &results)?;
        for p in written {
            eprintln!("wrote {}", p.display());
        }
    }
    Ok(())
}

fn cmd_run(overrides: Overrides, preset: Option<String>) -> Result<(), dpbandit::Error> {
    let cells = match preset {
        Some(name) => {
            let mut cells = preset_configs(&name)?;
            for c in cells.iter_mut() {
                apply_flag_overrides(c, &overrides)?;
            }
            cells
        }
        None => vec![build_config(&overrides)?],
    };
    run_cells(cells, &overrides)
}

fn cmd_sweep(
    overrides: Overrides,
    models: Option<Vec<String>>,
    epsilons: Option<Vec<f64>>,
    alphas: Option<Vec<f64>>,
) -> Result<(), dpbandit::Error> {
    let base = build_config(&overrides)?;
    let models = models
        .unwrap_or_default()
        .iter()
        .map(|m| PrivacyModel::parse(m))
        .collect::<Result<Vec<_>, _>>()?;
    let cells = sweep_configs(
        &base,
        &models,
        &epsilons.unwrap_or_default(),
        &alphas.unwrap_or_default(),
    );
    run_cells(cells, &overrides)
}

fn cmd_check_design(dims: Vec<usize>, ks: Vec<usize>, sets: usize, seed: u64) -> bool {
    let mut rng = SimRng::seed_from(seed);
    let mut all_ok = true;
    println!("design quality report ({sets} random sets per cell)");
    for &d in &dims {
        for &k in &ks {
            let mut worst_g_ratio = 0.0f64;
            let mut worst_support = 0usize;
            let mut ok = true;
            for _ in 0..sets {
                let actions: Vec<Vec<f64>> = (0..k).map(|_| rng.unit_sphere(d)).collect();
                match compute_near_g_optimal(&actions) {
                    Ok(design) => {
                        let r = design.d_eff() as f64;
                        worst_g_ratio = worst_g_ratio.max(design.g_value() / r);
                        worst_support = worst_support.max(design.support().len());
                        if design.g_value() > 2.0 * r + 1e-9
                            || design.g_value() < r - 1e-6
                            || design.support().len() > support_bound(design.d_eff())
                        {
                            ok = false;
                        }
                    }
                    Err(e) => {
                        println!("  d={d} k={k}: solver error: {e}");
                        ok = false;
                    }
                }
            }
            all_ok &= ok;
            println!(
                "  d={d} k={k}: worst g/d_eff = {worst_g_ratio:.4} (bound 2), worst support = {worst_support} (bound {}) ... {}",
                support_bound(d),
                if ok { "PASS" } else { "FAIL" }
            );
        }
    }
    all_ok
}

fn cmd_check_privacy(trials: usize, seed: u64) -> bool {
    let mut rng = SimRng::seed_from(seed);
    let mut all_ok = true;
    let mut report = |name: &str, ok: bool, detail: String| {
        println!("  {name}: {detail} ... {}", if ok { "PASS" } else { "FAIL" });
        all_ok &= ok;
    };

    // Central/local Gaussian scales and their exact ratio |U|.
    let (b, s, delta, eps, n) = (1.0, 4, 0.1, 1.0, 10usize);
    let snc = sigma_nc(b, s, delta, eps, n);
    let snl = sigma_nl(b, s, delta, eps);
    report(
        "noise-scale ratio",
        (snl / snc - n as f64).abs() < 1e-12,
        format!("sigma_nl/sigma_nc = {:.6} (expect {n})", snl / snc),
    );

    // Monte Carlo: central mechanism variance against sigma_nc^2.
    let params = PrivacyParams::new(PrivacyModel::Central, eps, delta, b).unwrap();
    let reports: Vec<Vec<f64>> = (0..n).map(|i| vec![0.1 * i as f64 % 0.9; s]).collect();
    let mut outs = Vec::with_capacity(trials);
    for _ in 0..trials {
        outs.push(central_privatize(&reports, &params, &mut rng).unwrap().values[0]);
    }
    let var = sample_variance(&outs);
    let ok = (var / (snc * snc) - 1.0).abs() < 0.1;
    report(
        "central variance",
        ok,
        format!("empirical/nominal = {:.4}", var / (snc * snc)),
    );

    // Monte Carlo: local mechanism variance of the mean, sigma_nl^2 / |U|.
    let params_l = PrivacyParams::new(PrivacyModel::Local, eps, delta, b).unwrap();
    let mut outs = Vec::with_capacity(trials);
    for _ in 0..trials {
        outs.push(local_privatize(&reports, &params_l, &mut rng).unwrap().values[0]);
    }
    let var = sample_variance(&outs);
    let nominal = snl * snl / n as f64;
    report(
        "local variance",
        (var / nominal - 1.0).abs() < 0.1,
        format!("empirical/nominal = {:.4}", var / nominal),
    );

    // Shuffle vector mechanism: unbiasedness and the variance bound.
    let (eps_s, delta_s, s_s, n_s) = (10.0, 0.25, 4usize, 16usize);
    let delta2 = (s_s as f64).sqrt();
    let sp = shuffle_params(eps_s, delta_s, s_s, n_s, delta2).unwrap();
    let inputs: Vec<Vec<f64>> = (0..n_s)
        .map(|i| {
            (0..s_s)
                .map(|j| 0.9 * ((i + j) as f64 / (n_s + s_s) as f64 - 0.5))
                .collect()
        })
        .collect();
    let truth: Vec<f64> = (0..s_s)
        .map(|j| inputs.iter().map(|v| v[j]).sum::<f64>() / n_s as f64)
        .collect();
    let mut per_coord: Vec<Vec<f64>> = vec![Vec::with_capacity(trials); s_s];
    for _ in 0..trials {
        let out = shuffle_aggregate(&inputs, &sp, &mut rng, false).unwrap();
        for (j, v) in out.values.iter().enumerate() {
            per_coord[j].push(*v);
        }
    }
    let mut unbiased = true;
    let mut var_ok = true;
    let bound = sp.variance_bound();
    for (j, xs) in per_coord.iter().enumerate() {
        let m = mean(xs);
        let sd = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64;
        unbiased &= (m - truth[j]).abs() < 3.0 * sd.sqrt() / (trials as f64).sqrt();
        var_ok &= sd <= 1.1 * bound;
    }
    report(
        "shuffle unbiasedness",
        unbiased,
        format!("{} coordinates within 3 standard errors", s_s),
    );
    report(
        "shuffle variance bound",
        var_ok,
        format!("bound {bound:.4}"),
    );

    // Scalar sum protocol unbiasedness.
    let values: Vec<f64> = (0..n_s).map(|i| 0.8 * (i as f64 / n_s as f64 - 0.5)).collect();
    let true_sum: f64 = values.iter().sum();
    let ssp = scalar_shuffle_params(1.0, eps_s, delta_s, values.len()).unwrap();
    let mut sums = Vec::with_capacity(trials);
    for _ in 0..trials {
        sums.push(scalar_shuffle_sum_with(&values, &ssp, &mut rng).unwrap());
    }
    let m = mean(&sums);
    let sd = sample_variance(&sums).sqrt();
    report(
        "scalar sum unbiasedness",
        (m - true_sum).abs() < 3.0 * sd / (trials as f64).sqrt(),
        format!("mean {m:.4} vs true {true_sum:.4}"),
    );

    all_ok
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run { overrides, preset } => cmd_run(overrides, preset).map(|_| true),
        Command::Sweep {
            overrides,
            models,
            epsilons,
            alphas,
        } => cmd_sweep(overrides, models, epsilons, alphas).map(|_| true),
        Command::CheckDesign { dims, ks, sets, seed } => Ok(cmd_check_design(dims, ks, sets, seed)),
        Command::CheckPrivacy { trials, seed } => Ok(cmd_check_privacy(trials, seed)),
        Command::Version => {
            println!("dpbandit {}", dpbandit::VERSION);
            Ok(true)
        }
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
