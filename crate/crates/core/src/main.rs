use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use flocktrack::data::load_initial_data;
use flocktrack::driver::{run, sweep, SimConfig};
use flocktrack::Error;

/// Wave-front tracking for damped isothermal flocking hydrodynamics.
#[derive(Debug, Parser)]
#[command(name = "flocktrack", version)]
struct Cli {
    /// Initial data: JSON object {a0, b0, cells: [{len, rho, v}, ...]}.
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// Refinement index: dt and eta halve with each increment.
    #[arg(long, default_value_t = 4)]
    nu: u32,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long, default_value_t = 10.0)]
    t_end: f64,
    /// Shock weight of L_xi; defaults to 1/c(q).
    #[arg(long)]
    xi: Option<f64>,
    #[arg(long, default_value_t = 32)]
    kmax: usize,
    /// Probe positions in mass coordinates, comma separated.
    #[arg(long, value_delimiter = ',')]
    probes: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0.05)]
    sample_dt: f64,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 50_000_000)]
    event_cap: u64,
    /// Export Eulerian positions and velocities in the original frame.
    #[arg(long)]
    deshift: bool,
    /// Sweep over an inclusive range of nu, e.g. 4..8.
    #[arg(long)]
    sweep: Option<String>,
    /// Evaluate the generation, decay and rate checks of the flocking estimate.
    #[arg(long)]
    check_flocking: bool,
    /// Relative jitter used to separate simultaneous interactions.
    #[arg(long)]
    seed_perturb: Option<f64>,
    /// Size below which reflected waves created at time steps are pruned.
    #[arg(long)]
    prune_tol: Option<f64>,
    /// Also write events.csv with one row per front event.
    #[arg(long)]
    event_log: bool,
    /// Skip frames.jsonl.
    #[arg(long)]
    no_frames: bool,
}

const EXIT_REJECTED: u8 = 2;
const EXIT_EVENT_CAP: u8 = 3;
const EXIT_VIOLATION: u8 = 4;

fn parse_range(s: &str) -> Result<Vec<u32>, String> {
    let (a, b) = s.split_once("..").ok_or_else(|| format!("expected a..b, got {s}"))?;
    let a: u32 = a.trim().parse().map_err(|e| format!("bad range start: {e}"))?;
    let b: u32 = b.trim().trim_start_matches('=').parse().map_err(|e| format!("bad range end: {e}"))?;
    if a > b {
        return Err(format!("empty range {s}"));
    }
    Ok((a..=b).collect())
}

fn exit_for(err: &Error) -> u8 {
    match err {
        Error::EventCapExceeded { .. } => EXIT_EVENT_CAP,
        Error::ConfigRejected(_) | Error::Schema(_) | Error::NonPositiveDensity(_) | Error::EmptySupport => {
            EXIT_REJECTED
        }
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let data = match load_initial_data(&cli.data) {
        Ok(d) => d,
        Err(e) => {
            eprintln!("flocktrack: {e}");
            return ExitCode::from(exit_for(&e));
        }
    };
    let mut cfg = SimConfig {
        alpha: cli.alpha,
        nu: cli.nu,
        dt: cli.dt,
        eta: cli.eta,
        t_end: cli.t_end,
        xi: cli.xi,
        k_max: cli.kmax,
        probes: cli.probes.clone(),
        sample_dt: cli.sample_dt,
        event_cap: cli.event_cap,
        deshift: cli.deshift,
        prune_tol: cli.prune_tol,
        check_flocking: cli.check_flocking,
        write_frames: !cli.no_frames,
        event_log: cli.event_log,
        ..SimConfig::default()
    };
    if let Some(j) = cli.seed_perturb {
        cfg.jitter = j;
    }

    if let Some(range) = &cli.sweep {
        let nus = match parse_range(range) {
            Ok(n) => n,
            Err(e) => {
                eprintln!("flocktrack: {e}");
                return ExitCode::from(EXIT_REJECTED);
            }
        };
        return match sweep(&cfg, &data, &nus, Some(&cli.out_dir)) {
            Ok((report, _)) => {
                for e in &report.entries {
                    println!(
                        "nu={} dt={} eta={} rh_max={:.3e} momentum_tail={:.3e} events={} max_fronts={} {:.1}s",
                        e.nu, e.dt, e.eta, e.rh_max, e.momentum_sup_tail, e.events, e.max_fronts, e.wall_time_s
                    );
                }
                for d in &report.distances {
                    println!(
                        "L1(u) nu {} vs {}: max {:.3e}, final {:.3e}",
                        d.nu_coarse, d.nu_fine, d.l1_max, d.l1_final
                    );
                }
                println!("rh slope vs eta: {:?}; momentum slope vs eta: {:?}", report.rh_slope, report.momentum_slope);
                if report.entries.iter().any(|e| !e.fatal_failures.is_empty()) {
                    ExitCode::from(EXIT_VIOLATION)
                } else {
                    ExitCode::SUCCESS
                }
            }
            Err(e) => {
                eprintln!("flocktrack: {e}");
                ExitCode::from(exit_for(&e))
            }
        };
    }

    match run(&cfg, &data, Some(&cli.out_dir)) {
        Ok(out) => {
            let r = &out.report;
            println!(
                "nu={} dt={} eta={} q={:.6} steps={} events={} max_fronts={} L(end)={:.6e} osc_v(end)={:.3e} rh_max={:.3e} {:.1}s",
                r.nu,
                r.resolved.dt,
                r.resolved.eta,
                r.resolved.q,
                r.steps,
                r.events,
                r.stats.max_active,
                r.final_diag.l,
                r.final_diag.osc_v,
                r.rh_max,
                r.wall_time_s
            );
            let fc = &r.flocking;
            if cli.check_flocking {
                println!(
                    "flocking condition {}: M*T1 = {:.6}, xi_bar = {:.6}, lambda(xi_bar) = {:?}",
                    if fc.condition_holds { "holds" } else { "fails" },
                    fc.mass * fc.t1,
                    fc.xi_bar,
                    fc.lambda_of_xi_bar
                );
                if let Some(fit) = &r.fit {
                    println!("decay fit from t = {:.4}: C = {:.4e}, lambda_hat = {:.6}", fit.t0, fit.c, fit.lambda_hat);
                }
                if let Some(fk) = &r.flocking_check {
                    println!(
                        "generation violations {}, decay violations {}, rate {}",
                        fk.generation_violations,
                        fk.decay_violations,
                        if fk.rate_ok { "ok" } else { "too slow" }
                    );
                }
            }
            for (name, c) in &r.checks.checks {
                if c.violations > 0 {
                    println!(
                        "check {name}: {} of {} violated, max excess {:e}",
                        c.violations, c.evaluations, c.max_excess
                    );
                }
            }
            if r.fatal_failures.is_empty() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_VIOLATION)
            }
        }
        Err(e) => {
            eprintln!("flocktrack: {e}");
            ExitCode::from(exit_for(&e))
        }
    }
}
