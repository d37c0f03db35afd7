use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use log::info;

use ecl_sim::harness::{
    run_experiment, summarize, AlgorithmSpec, ExperimentConfig, Preset, RunRecord, SweepPoint,
};
use ecl_sim::mixing::example1_alpha;
use ecl_sim::objectives::{generate_quadratic, NoiseStream};
use ecl_sim::topology::TopologySpec;
use ecl_sim::verification::{
    check_gt_form, check_lemma1, check_mixing, check_theorem1, coupled_deviation, Coupling,
};
use ecl_sim::Result;

#[derive(Parser)]
#[command(name = "sim", version, about = "Decentralized optimization simulator")]
struct Cli {
    /// Directory for CSV output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Repetitions per sweep point.
    #[arg(long, global = true)]
    reps: Option<usize>,
    /// Override the number of rounds.
    #[arg(long, global = true)]
    rounds: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the sweep described by a TOML config.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run one of the built-in experiment grids.
    Preset {
        #[arg(value_parser = parse_preset)]
        name: Preset,
    },
    /// Check a structural property and exit nonzero if it fails.
    Verify { check: Check },
}

#[derive(Clone, Copy, ValueEnum)]
enum Check {
    Theorem1,
    Lemma1,
    Mixing,
    GtForm,
}

fn parse_preset(s: &str) -> std::result::Result<Preset, String> {
    s.parse().map_err(|e: ecl_sim::Error| e.to_string())
}

const TOPOLOGIES: [TopologySpec; 3] = [
    TopologySpec::Ring,
    TopologySpec::Torus(None),
    TopologySpec::Complete,
];

fn print_summary(records: &[RunRecord]) -> Result<()> {
    println!(
        "{:<8} {:<12} {:>8} {:>8} {:>5} {:>14}",
        "algo", "topology", "zeta_sq", "sigma_sq", "reps", "final_error"
    );
    for row in summarize(records)? {
        println!(
            "{:<8} {:<12} {:>8} {:>8} {:>5} {:>14.6e}",
            row.algorithm, row.topology, row.zeta_sq, row.sigma_sq, row.reps, row.mean_final_error
        );
    }
    Ok(())
}

fn sweep(mut cfg: ExperimentConfig, cli: &Cli, default_out: Option<PathBuf>) -> Result<()> {
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(r) = cli.reps {
        cfg.reps = r;
    }
    if let Some(r) = cli.rounds {
        cfg.rounds = r;
    }
    let out = cli.out.clone().or(cfg.out.clone()).or(default_out);
    let records = run_experiment(&cfg, out.as_deref())?;
    if let Some(dir) = &out {
        info!("wrote {} records to {}", records.len(), dir.display());
    }
    print_summary(&records)
}

fn write_series(
    dir: Option<&Path>,
    name: &str,
    header: &[&str],
    rows: Vec<Vec<String>>,
) -> Result<()> {
    let Some(dir) = dir else { return Ok(()) };
    fs::create_dir_all(dir)?;
    let mut w = csv::Writer::from_path(dir.join(name))?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

fn verify(check: Check, cli: &Cli) -> Result<bool> {
    let seed = cli.seed.unwrap_or(0);
    let rounds = cli.rounds.unwrap_or(10_000);
    let out = cli.out.as_deref();
    let (zeta_sq, sigma_sq, eta, alpha_total) = (10.0, 10.0, 0.5, 1e3);
    let point = SweepPoint {
        algorithm: AlgorithmSpec::ecl(eta, alpha_total),
        topology: TopologySpec::Ring,
        zeta_sq,
        sigma_sq,
        rep: 0,
    };
    let problem = generate_quadratic(50, 25, zeta_sq, point.problem_seed(seed))?;
    let noise = NoiseStream::new(point.noise_seed(seed), sigma_sq, 50)?;
    let mut all = true;

    match check {
        Check::Theorem1 | Check::GtForm => {
            println!(
                "{:<12} {:<10} {:>14} {:>8}",
                "topology", "theta", "max_dev", "result"
            );
            for topo in TOPOLOGIES {
                let g = topo.build(25)?;
                let a = example1_alpha(&g, alpha_total)?;
                let coupling = |theta| Coupling {
                    graph: &g,
                    objective: &problem,
                    noise: &noise,
                    alpha: &a,
                    eta,
                    theta,
                    rounds,
                    x0: None,
                };
                if let Check::Theorem1 = check {
                    let rep = check_theorem1(&coupling(0.5))?;
                    all &= rep.passed();
                    println!(
                        "{:<12} {:<10} {:>14.3e} {:>8}",
                        topo.label(),
                        0.5,
                        rep.max_x_deviation,
                        verdict(rep.passed())
                    );
                    let control = coupled_deviation(&coupling(0.9))?;
                    // the control is expected to diverge
                    println!(
                        "{:<12} {:<10} {:>14.3e} {:>8}",
                        topo.label(),
                        "0.9 (ctl)",
                        control.max_x_deviation,
                        verdict(!control.passed())
                    );
                    all &= !control.passed();
                    let rows = rep
                        .per_round_deviation
                        .iter()
                        .enumerate()
                        .map(|(r, d)| vec![r.to_string(), format!("{d:e}")])
                        .collect();
                    write_series(
                        out,
                        &format!("theorem1_{}.csv", topo.label().replace(':', "-")),
                        &["round", "deviation"],
                        rows,
                    )?;
                } else {
                    let rep = check_gt_form(&coupling(0.5))?;
                    all &= rep.passed();
                    println!(
                        "{:<12} {:<10} {:>14.3e} {:>8}",
                        topo.label(),
                        0.5,
                        rep.max_residual(),
                        verdict(rep.passed())
                    );
                    let rows = rep
                        .residual
                        .iter()
                        .zip(&rep.t_norm)
                        .enumerate()
                        .map(|(r, (res, t))| {
                            vec![r.to_string(), format!("{res:e}"), format!("{t:e}")]
                        })
                        .collect();
                    write_series(
                        out,
                        &format!("gt_form_{}.csv", topo.label().replace(':', "-")),
                        &["round", "residual", "t_norm"],
                        rows,
                    )?;
                }
            }
        }
        Check::Lemma1 => {
            let mut cfg = Preset::Fig2.config(seed, 1);
            cfg.algorithms = vec![AlgorithmSpec::gecl(1e-3)];
            cfg.rounds = rounds;
            let records = run_experiment(&cfg, out)?;
            println!(
                "{:<12} {:>8} {:>8} {:>14} {:>14} {:>8}",
                "topology", "zeta_sq", "sigma_sq", "max_sum_c", "max_avg_res", "result"
            );
            for rec in &records {
                let rep = check_lemma1(rec)?;
                all &= rep.passed();
                println!(
                    "{:<12} {:>8} {:>8} {:>14.3e} {:>14.3e} {:>8}",
                    rec.meta["topology"],
                    rec.meta["zeta_sq"],
                    rec.meta["sigma_sq"],
                    rep.max_sum_c_norm,
                    rep.max_average_residual,
                    verdict(rep.passed())
                );
            }
        }
        Check::Mixing => {
            println!(
                "{:<12} {:>6} {:>6} {:>6} {:>6} {:>12} {:>12} {:>8}",
                "topology", "eta", "sym", "dstoch", "nonneg", "violation", "eta'_spread", "result"
            );
            let rows = check_mixing(&TOPOLOGIES, 25, alpha_total, &[0.5, 0.01])?;
            for r in &rows {
                all &= r.passed();
                println!(
                    "{:<12} {:>6} {:>6} {:>6} {:>6} {:>12.3e} {:>12.3e} {:>8}",
                    r.topology,
                    r.eta,
                    r.symmetric,
                    r.doubly_stochastic,
                    r.nonneg,
                    r.max_violation,
                    r.eta_prime_spread,
                    verdict(r.passed())
                );
            }
        }
    }
    Ok(all)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run { config } => fs::read_to_string(config)
            .map_err(Into::into)
            .and_then(|text| ExperimentConfig::from_toml(&text))
            .and_then(|cfg| sweep(cfg, &cli, None))
            .map(|_| true),
        Command::Preset { name } => {
            let cfg = name.config(cli.seed.unwrap_or(0), cli.reps.unwrap_or(1));
            sweep(cfg, &cli, Some(PathBuf::from("results").join(name.name()))).map(|_| true)
        }
        Command::Verify { check } => verify(*check, &cli),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
