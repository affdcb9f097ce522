//! Command-line surface for the equilibrium engine: solving, family
//! enumeration, comparative statics, and verification, with CSV/JSON
//! emitters for the figure datasets.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use eqport::equilibrium::{OptimalOutcome, Regime, StrategyCurve};
use eqport::statics::{
    convex_combination_compare, crossing_sensitivity, find_crossing, reversal_horizon,
    sample_mean_aggregation, CrossingOutcome, ReversalOutcome, SweepParam, TwoPointLaw,
};
use eqport::verify::{equilibrium_certificate, mc_objective, CertificateConfig, SimConfig};
use eqport::{
    classify, compare_pointwise, kernel_sequence_convergence, optimal_equilibrium,
    solve_family_member, solve_unique, EqportError, MarketModel, PreferenceKernel,
    RiskAversionDistribution, Tolerances,
};

const SCHEMA: &str = "eqport.report/1";

#[derive(Parser)]
#[command(name = "eqport", version, about = "Deterministic equilibrium portfolio strategies under random risk aversion")]
struct Cli {
    /// Tolerance override file, one `key = value` per line
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Emit a JSON report on stdout instead of human-readable text
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Classify the regime and solve for the equilibrium curve
    Solve {
        #[arg(long)]
        dist: String,
        #[arg(long)]
        market: String,
        #[arg(long)]
        grid: Option<usize>,
        /// Write the curve CSV (t,v,a_1..d,pi_1..d,J0) here
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Enumerate members of the T0-indexed family
    Enumerate {
        #[arg(long)]
        dist: String,
        #[arg(long)]
        market: String,
        /// Number of eta samples across the admissible interval
        #[arg(long, default_value_t = 11)]
        eta_grid: usize,
        #[arg(long)]
        grid: Option<usize>,
        /// Write one CSV per member as <prefix>-<index>.csv
        #[arg(long)]
        out_prefix: Option<PathBuf>,
    },
    /// Select the optimal equilibrium of the family
    Optimal {
        #[arg(long)]
        dist: String,
        #[arg(long)]
        market: String,
        #[arg(long)]
        grid: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Pointwise exposure comparison of two investors
    Compare {
        #[arg(long)]
        dist1: String,
        #[arg(long)]
        dist2: String,
        #[arg(long)]
        market: String,
        #[arg(long)]
        grid: Option<usize>,
        /// Write t,|a1|,|a2| CSV here
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Single-crossing time for two two-point laws sharing r0
    Crossing {
        #[arg(long)]
        r0: f64,
        #[arg(long)]
        delta1: f64,
        #[arg(long)]
        delta2: f64,
        #[arg(long)]
        p1: f64,
        #[arg(long)]
        p2: f64,
        #[arg(long)]
        market: String,
    },
    /// Smallest horizon at which investor 1 overtakes investor 2
    Reversal {
        #[arg(long)]
        r0: f64,
        #[arg(long)]
        delta1: f64,
        #[arg(long)]
        delta2: f64,
        #[arg(long)]
        p1: f64,
        #[arg(long)]
        p2: f64,
        /// Constant price of risk extended to [0, inf)
        #[arg(long)]
        lambda: f64,
    },
    /// Crossing-time sensitivity sweep over atom masses
    SweepCrossing {
        #[arg(long)]
        r0: f64,
        #[arg(long)]
        delta1: f64,
        #[arg(long)]
        delta2: f64,
        #[arg(long)]
        p1: f64,
        #[arg(long)]
        p2: f64,
        /// Which mass moves: both, p1, or p2
        #[arg(long)]
        which: String,
        /// Comma-separated p values
        #[arg(long)]
        p_grid: String,
        #[arg(long)]
        market: String,
    },
    /// Convex-combination or sample-mean aggregation experiment
    Aggregate {
        /// Mixture spec, e.g. mix:0.5*discrete:0.1=0.2,8=0.8,0.5*point:1.5
        #[arg(long, conflicts_with_all = ["base", "ns"])]
        mix: Option<String>,
        /// Base law for the sample-mean experiment
        #[arg(long, requires = "ns")]
        base: Option<String>,
        /// Comma-separated group sizes for the sample-mean experiment
        #[arg(long)]
        ns: Option<String>,
        #[arg(long)]
        market: String,
        #[arg(long)]
        grid: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte Carlo cross-check and perturbation certificate
    Verify {
        #[arg(long)]
        dist: String,
        #[arg(long)]
        market: String,
        #[arg(long)]
        grid: Option<usize>,
        #[arg(long, default_value_t = 200_000)]
        paths: usize,
        #[arg(long, default_value_t = 0x5eed)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        directions: usize,
        #[arg(long, default_value_t = 10)]
        times: usize,
    },
    /// Convergence of quantile discretizations toward a target law
    Converge {
        /// Target law with a closed-form quantile
        #[arg(long)]
        base: String,
        #[arg(long, default_value = "4,8,16,32")]
        ns: String,
        #[arg(long)]
        market: String,
        #[arg(long)]
        grid: Option<usize>,
    },
    /// Reproduce the first figure dataset (two-point pair, lambda = 0.4, T = 20)
    Fig1 {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Reproduce the second figure dataset (mixture trio, lambda = 0.5, T = 50)
    Fig2 {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    if let Ok(threads) = std::env::var("EQPORT_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let kind = match e {
                EqportError::NonConvergence(_) => "nonconvergence",
                _ => "precondition",
            };
            eprintln!(
                "{}",
                json!({
                    "schema": "eqport.error/1",
                    "kind": kind,
                    "message": e.to_string(),
                })
            );
            match e {
                EqportError::NonConvergence(_) => ExitCode::from(3),
                _ => ExitCode::from(2),
            }
        }
    }
}

fn load_tol(cli: &Cli) -> Result<Tolerances, EqportError> {
    match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| EqportError::Parse {
                pos: 0,
                msg: format!("cannot read config `{}`: {e}", path.display()),
            })?;
            Tolerances::from_config_text(&text)
        }
        None => Ok(Tolerances::default()),
    }
}

fn kernel(spec: &str, tol: &Tolerances) -> Result<PreferenceKernel, EqportError> {
    PreferenceKernel::new(spec.parse()?, tol.clone())
}

fn curve_csv(curve: &StrategyCurve) -> String {
    let d = curve.a.first().map(|a| a.len()).unwrap_or(0);
    let mut header = String::from("t,v");
    for i in 1..=d {
        header.push_str(&format!(",a_{i}"));
    }
    for i in 1..=d {
        header.push_str(&format!(",pi_{i}"));
    }
    header.push_str(",J0");
    let mut out = header;
    out.push('\n');
    for i in 0..curve.len() {
        out.push_str(&format!("{},{}", curve.t[i], curve.v[i]));
        for j in 0..d {
            out.push_str(&format!(",{}", curve.a[i][j]));
        }
        for j in 0..d {
            out.push_str(&format!(",{}", curve.pi[i][j]));
        }
        out.push_str(&format!(",{}\n", curve.j0[i]));
    }
    out
}

fn write_out(path: &PathBuf, text: &str) -> Result<(), EqportError> {
    std::fs::write(path, text)
        .map_err(|e| EqportError::Precondition(format!("cannot write `{}`: {e}", path.display())))
}

fn curve_summary(curve: &StrategyCurve) -> serde_json::Value {
    json!({
        "points": curve.len(),
        "t0": curve.t0,
        "v_at_0": curve.v[0],
        "a_at_0": curve.a[0].iter().copied().collect::<Vec<f64>>(),
        "j0_at_0": curve.j0[0],
    })
}

fn emit(cli: &Cli, report: serde_json::Value, human: String) {
    if cli.json {
        println!("{report}");
    } else {
        println!("{human}");
    }
}

fn parse_f64_list(s: &str, what: &str) -> Result<Vec<f64>, EqportError> {
    s.split(',')
        .map(|x| {
            x.trim().parse::<f64>().map_err(|_| EqportError::Parse {
                pos: 0,
                msg: format!("invalid {what} entry `{x}`"),
            })
        })
        .collect()
}

fn run(cli: &Cli) -> Result<(), EqportError> {
    let tol = load_tol(cli)?;
    match &cli.cmd {
        Cmd::Solve {
            dist,
            market,
            grid,
            out,
        } => {
            let m: MarketModel = market.parse()?;
            let k = kernel(dist, &tol)?;
            let grid = grid.unwrap_or(tol.grid_points);
            let report = classify(&k, &m);
            let curve = match &report.regime {
                Regime::UniqueFinite => Some(solve_unique(&k, &m, grid)?),
                Regime::FamilyInfinite => match optimal_equilibrium(&k, &m, grid)? {
                    OptimalOutcome::Optimal { curve, .. } => Some(curve),
                    OptimalOutcome::NoOptimal { .. } => None,
                },
                _ => None,
            };
            if let (Some(path), Some(c)) = (out, &curve) {
                write_out(path, &curve_csv(c))?;
            }
            let mut body = json!({
                "schema": SCHEMA,
                "command": "solve",
                "report": report,
            });
            if let Some(c) = &curve {
                body["curve"] = curve_summary(c);
            }
            emit(
                cli,
                body,
                match &curve {
                    Some(c) => format!(
                        "regime: {:?}\nLambda(0) = {}\nv(0) = {}\n|a(0)| = {}\nJ0(0) = {}",
                        report.regime,
                        report.lambda0,
                        c.v[0],
                        c.a[0].norm(),
                        c.j0[0]
                    ),
                    None => format!("regime: {:?}\nLambda(0) = {}", report.regime, report.lambda0),
                },
            );
            Ok(())
        }
        Cmd::Enumerate {
            dist,
            market,
            eta_grid,
            grid,
            out_prefix,
        } => {
            let m: MarketModel = market.parse()?;
            let k = kernel(dist, &tol)?;
            let grid = grid.unwrap_or(tol.grid_points);
            let report = classify(&k, &m);
            let tee = report.tee_set.ok_or_else(|| {
                EqportError::RegimeMismatch(format!(
                    "enumerate needs the family regime, found {:?}",
                    report.regime
                ))
            })?;
            let opp = m.opportunity();
            let n = (*eta_grid).max(2);
            let mut members = Vec::new();
            for i in 0..n {
                let frac = i as f64 / (n - 1) as f64;
                let eta = tee.eta_lo + frac * (tee.eta_hi - tee.eta_lo);
                if tee.lo_open && i == 0 {
                    continue;
                }
                let t0 = opp.phi(eta)?;
                let curve = solve_family_member(&k, &m, t0, grid)?;
                if let Some(prefix) = out_prefix {
                    let path = PathBuf::from(format!("{}-{i}.csv", prefix.display()));
                    write_out(&path, &curve_csv(&curve))?;
                }
                members.push(json!({
                    "eta": eta,
                    "t0": t0,
                    "j0_at_0": curve.j0[0],
                    "v_at_0": curve.v[0],
                }));
            }
            let human = members
                .iter()
                .map(|m| {
                    format!(
                        "T0 = {:<22} eta = {:<22} J0(0) = {}",
                        m["t0"], m["eta"], m["j0_at_0"]
                    )
                })
                .collect::<Vec<_>>()
                .join("\n");
            emit(
                cli,
                json!({
                    "schema": SCHEMA,
                    "command": "enumerate",
                    "tee_set": tee,
                    "members": members,
                }),
                human,
            );
            Ok(())
        }
        Cmd::Optimal {
            dist,
            market,
            grid,
            out,
        } => {
            let m: MarketModel = market.parse()?;
            let k = kernel(dist, &tol)?;
            let grid = grid.unwrap_or(tol.grid_points);
            match optimal_equilibrium(&k, &m, grid)? {
                OptimalOutcome::Optimal {
                    curve,
                    t0,
                    uniformly_optimal,
                    uniformly_strictly_optimal,
                } => {
                    if let Some(path) = out {
                        write_out(path, &curve_csv(&curve))?;
                    }
                    emit(
                        cli,
                        json!({
                            "schema": SCHEMA,
                            "command": "optimal",
                            "t0": t0,
                            "uniformly_optimal": uniformly_optimal,
                            "uniformly_strictly_optimal": uniformly_strictly_optimal,
                            "curve": curve_summary(&curve),
                        }),
                        format!(
                            "optimal member at T0 = {t0}\nuniformly optimal: {uniformly_optimal}\nuniformly strictly optimal: {uniformly_strictly_optimal}\nJ0(0) = {}",
                            curve.j0[0]
                        ),
                    );
                    Ok(())
                }
                OptimalOutcome::NoOptimal { tee_set } => Err(EqportError::NoSolution {
                    h_infinity: match k.h_infinity() {
                        eqport::HInfinity::Finite(v) => v,
                        _ => f64::INFINITY,
                    },
                    level: tee_set.eta_hi,
                }),
            }
        }
        Cmd::Compare {
            dist1,
            dist2,
            market,
            grid,
            out,
        } => {
            let m: MarketModel = market.parse()?;
            let k1 = kernel(dist1, &tol)?;
            let k2 = kernel(dist2, &tol)?;
            let grid = grid.unwrap_or(tol.grid_points);
            let report = compare_pointwise(&k1, &k2, &m, grid)?;
            if let Some(path) = out {
                let mut csv = String::from("t,a1,a2\n");
                for i in 0..report.t.len() {
                    csv.push_str(&format!(
                        "{},{},{}\n",
                        report.t[i], report.a1[i], report.a2[i]
                    ));
                }
                write_out(path, &csv)?;
            }
            emit(
                cli,
                json!({
                    "schema": SCHEMA,
                    "command": "compare",
                    "rh": report.rh,
                    "fsd": report.fsd,
                    "violations": report.violations.len(),
                    "first_violation": report.violations.first(),
                    "crossings": report.crossings,
                }),
                format!(
                    "rh order: {:?}\nfsd order: {:?}\n|a1| > |a2| at {} of {} grid points\ncrossings near: {:?}",
                    report.rh,
                    report.fsd,
                    report.violations.len(),
                    report.t.len(),
                    report.crossings
                ),
            );
            Ok(())
        }
        Cmd::Crossing {
            r0,
            delta1,
            delta2,
            p1,
            p2,
            market,
        } => {
            let m: MarketModel = market.parse()?;
            let tp1 = TwoPointLaw::new(*r0, *delta1, *p1)?;
            let tp2 = TwoPointLaw::new(*r0, *delta2, *p2)?;
            match find_crossing(&tp1, &tp2, &m, &tol)? {
                CrossingOutcome::Found(rep) => {
                    emit(
                        cli,
                        json!({
                            "schema": SCHEMA,
                            "command": "crossing",
                            "crossing": rep,
                        }),
                        format!("t* = {}\nD'(t*) = {}", rep.t_star, rep.d_prime),
                    );
                    Ok(())
                }
                CrossingOutcome::NoCrossing { d_at_zero } => {
                    emit(
                        cli,
                        json!({
                            "schema": SCHEMA,
                            "command": "crossing",
                            "crossing": null,
                            "d_at_zero": d_at_zero,
                        }),
                        format!("no crossing: D(0) = {d_at_zero} >= 0"),
                    );
                    Ok(())
                }
            }
        }
        Cmd::Reversal {
            r0,
            delta1,
            delta2,
            p1,
            p2,
            lambda,
        } => {
            let tp1 = TwoPointLaw::new(*r0, *delta1, *p1)?;
            let tp2 = TwoPointLaw::new(*r0, *delta2, *p2)?;
            match reversal_horizon(&tp1, &tp2, *lambda, &tol)? {
                ReversalOutcome::Found { lo, hi } => {
                    emit(
                        cli,
                        json!({
                            "schema": SCHEMA,
                            "command": "reversal",
                            "bracket": [lo, hi],
                        }),
                        format!("reversal horizon in [{lo}, {hi}]"),
                    );
                    Ok(())
                }
                ReversalOutcome::NotFoundUpTo(t_max) => {
                    emit(
                        cli,
                        json!({
                            "schema": SCHEMA,
                            "command": "reversal",
                            "bracket": null,
                            "searched_up_to": t_max,
                        }),
                        format!("no reversal up to T = {t_max}"),
                    );
                    Ok(())
                }
            }
        }
        Cmd::SweepCrossing {
            r0,
            delta1,
            delta2,
            p1,
            p2,
            which,
            p_grid,
            market,
        } => {
            let m: MarketModel = market.parse()?;
            let tp1 = TwoPointLaw::new(*r0, *delta1, *p1)?;
            let tp2 = TwoPointLaw::new(*r0, *delta2, *p2)?;
            let param = match which.as_str() {
                "both" => SweepParam::BothP,
                "p1" => SweepParam::P1,
                "p2" => SweepParam::P2,
                other => {
                    return Err(EqportError::Parse {
                        pos: 0,
                        msg: format!("--which must be both, p1 or p2, got `{other}`"),
                    })
                }
            };
            let grid = parse_f64_list(p_grid, "p-grid")?;
            let trace = crossing_sensitivity(&tp1, &tp2, param, &grid, &m, &tol)?;
            let human = trace
                .iter()
                .map(|(p, t)| format!("p = {p:<8} t* = {t}"))
                .collect::<Vec<_>>()
                .join("\n");
            emit(
                cli,
                json!({
                    "schema": SCHEMA,
                    "command": "sweep-crossing",
                    "which": which,
                    "trace": trace,
                }),
                human,
            );
            Ok(())
        }
        Cmd::Aggregate {
            mix,
            base,
            ns,
            market,
            grid,
            out,
        } => {
            let m: MarketModel = market.parse()?;
            let grid = grid.unwrap_or(tol.grid_points);
            match (mix, base, ns) {
                (Some(spec), None, None) => {
                    let d: RiskAversionDistribution = spec.parse()?;
                    let parts = match d.kind() {
                        eqport::riskdist::Kind::Mix { parts } => parts.clone(),
                        _ => {
                            return Err(EqportError::Parse {
                                pos: 0,
                                msg: "--mix requires a mix: spec".into(),
                            })
                        }
                    };
                    let report = convex_combination_compare(&parts, &m, grid, &tol)?;
                    if let Some(path) = out {
                        let mut csv = String::from("t,mix");
                        for i in 1..=report.components.len() {
                            csv.push_str(&format!(",a_{i}"));
                        }
                        csv.push('\n');
                        for i in 0..report.t.len() {
                            csv.push_str(&format!("{},{}", report.t[i], report.mix[i]));
                            for comp in &report.components {
                                csv.push_str(&format!(",{}", comp[i]));
                            }
                            csv.push('\n');
                        }
                        write_out(path, &csv)?;
                    }
                    emit(
                        cli,
                        json!({
                            "schema": SCHEMA,
                            "command": "aggregate",
                            "mode": "mix",
                            "exceeds_all_points": report.exceeds_all.len(),
                            "first_exceeds": report.exceeds_all.first(),
                        }),
                        format!(
                            "mixture exceeds every component at {} of {} grid points",
                            report.exceeds_all.len(),
                            report.t.len()
                        ),
                    );
                    Ok(())
                }
                (None, Some(base), Some(ns)) => {
                    let d: RiskAversionDistribution = base.parse()?;
                    let ns: Vec<u32> = parse_f64_list(ns, "ns")?
                        .into_iter()
                        .map(|x| x as u32)
                        .collect();
                    let trace = sample_mean_aggregation(&d, &ns, &m, grid, &tol)?;
                    if let Some(path) = out {
                        let mut csv = String::from("t");
                        for n in &trace.n {
                            csv.push_str(&format!(",a_n{n}"));
                        }
                        csv.push_str(",limit\n");
                        for i in 0..trace.t.len() {
                            csv.push_str(&format!("{}", trace.t[i]));
                            for mags in &trace.magnitudes {
                                csv.push_str(&format!(",{}", mags[i]));
                            }
                            csv.push_str(&format!(",{}\n", trace.limit[i]));
                        }
                        write_out(path, &csv)?;
                    }
                    emit(
                        cli,
                        json!({
                            "schema": SCHEMA,
                            "command": "aggregate",
                            "mode": "sample-mean",
                            "n": trace.n,
                            "a_at_0": trace.magnitudes.iter().map(|m| m[0]).collect::<Vec<f64>>(),
                            "limit_at_0": trace.limit[0],
                        }),
                        format!(
                            "|a_n(0)| over n = {:?}: {:?} (limit {})",
                            trace.n,
                            trace.magnitudes.iter().map(|m| m[0]).collect::<Vec<f64>>(),
                            trace.limit[0]
                        ),
                    );
                    Ok(())
                }
                _ => Err(EqportError::Parse {
                    pos: 0,
                    msg: "aggregate needs either --mix or --base with --ns".into(),
                }),
            }
        }
        Cmd::Verify {
            dist,
            market,
            grid,
            paths,
            seed,
            directions,
            times,
        } => {
            let m: MarketModel = market.parse()?;
            let d: RiskAversionDistribution = dist.parse()?;
            let k = PreferenceKernel::new(d.clone(), tol.clone())?;
            let grid = grid.unwrap_or(tol.grid_points);
            let report = classify(&k, &m);
            let curve = match &report.regime {
                Regime::UniqueFinite => solve_unique(&k, &m, grid)?,
                Regime::FamilyInfinite => match optimal_equilibrium(&k, &m, grid)? {
                    OptimalOutcome::Optimal { curve, .. } => curve,
                    OptimalOutcome::NoOptimal { .. } => {
                        return Err(EqportError::RegimeMismatch(
                            "family has no optimal member to verify".into(),
                        ))
                    }
                },
                Regime::TrivialOnly => StrategyCurve::zero(&m, grid),
                other => {
                    return Err(EqportError::RegimeMismatch(format!(
                        "nothing to verify in regime {other:?}"
                    )))
                }
            };
            let cfg = CertificateConfig {
                directions: *directions,
                times: *times,
                seed: *seed,
            };
            let cert = equilibrium_certificate(&curve, &m, &d, &cfg, &tol)?;
            let sim = SimConfig {
                paths: *paths,
                seed: *seed,
                ..SimConfig::default()
            };
            let mc = mc_objective(&curve, &d, 0.0, &sim)?;
            let closed = curve.j0[0];
            let sigmas = if mc.stderr > 0.0 {
                (mc.value - closed).abs() / mc.stderr
            } else {
                0.0
            };
            emit(
                cli,
                json!({
                    "schema": SCHEMA,
                    "command": "verify",
                    "certificate": cert,
                    "mc": mc,
                    "closed_form_j0": closed,
                    "mc_sigmas": sigmas,
                }),
                format!(
                    "certificate: {} (worst slope {:.3e} at t = {:.4})\nMC J0(0) = {} +- {} vs closed form {} ({:.2} stderr)",
                    if cert.pass { "PASS" } else { "FAIL" },
                    cert.worst_slope,
                    cert.worst_time,
                    mc.value,
                    mc.stderr,
                    closed,
                    sigmas
                ),
            );
            if cert.pass && sigmas <= 3.0 {
                Ok(())
            } else {
                Err(EqportError::Precondition(
                    "verification failed: see the report".into(),
                ))
            }
        }
        Cmd::Converge {
            base,
            ns,
            market,
            grid,
        } => {
            let m: MarketModel = market.parse()?;
            let target: RiskAversionDistribution = base.parse()?;
            let ns: Vec<usize> = parse_f64_list(ns, "ns")?
                .into_iter()
                .map(|x| x as usize)
                .collect();
            let grid = grid.unwrap_or(tol.grid_points);
            let dists = ns
                .iter()
                .map(|&n| target.quantile_discretization(n))
                .collect::<Result<Vec<_>, _>>()?;
            let sups = kernel_sequence_convergence(&dists, &target, &m, grid, &tol)?;
            let human = ns
                .iter()
                .zip(&sups)
                .map(|(n, s)| format!("n = {n:<6} sup|a_n - a| = {s:.6e}"))
                .collect::<Vec<_>>()
                .join("\n");
            emit(
                cli,
                json!({
                    "schema": SCHEMA,
                    "command": "converge",
                    "n": ns,
                    "sup_error": sups,
                }),
                human,
            );
            Ok(())
        }
        Cmd::Fig1 { out } => {
            let m: MarketModel = "const:lambda=0.4,sigma=0.2,T=20".parse()?;
            let tp1 = TwoPointLaw::new(1.0, 2.0, 0.9)?;
            let tp2 = TwoPointLaw::new(1.0, 1.0, 0.9)?;
            let k1 = PreferenceKernel::new(tp1.dist(), tol.clone())?;
            let k2 = PreferenceKernel::new(tp2.dist(), tol.clone())?;
            let report = compare_pointwise(&k1, &k2, &m, tol.grid_points)?;
            if let Some(path) = out {
                let mut csv = String::from("t,a1,a2\n");
                for i in 0..report.t.len() {
                    csv.push_str(&format!(
                        "{},{},{}\n",
                        report.t[i], report.a1[i], report.a2[i]
                    ));
                }
                write_out(path, &csv)?;
            }
            let crossing = match find_crossing(&tp1, &tp2, &m, &tol)? {
                CrossingOutcome::Found(rep) => Some(rep),
                CrossingOutcome::NoCrossing { .. } => None,
            };
            emit(
                cli,
                json!({
                    "schema": SCHEMA,
                    "command": "fig1",
                    "fsd": report.fsd,
                    "reversal_points": report.violations.len(),
                    "crossing": crossing,
                }),
                match &crossing {
                    Some(rep) => format!(
                        "|a1| > |a2| at {} grid points; t* = {}",
                        report.violations.len(),
                        rep.t_star
                    ),
                    None => "no crossing found".into(),
                },
            );
            Ok(())
        }
        Cmd::Fig2 { out } => {
            let m: MarketModel = "const:lambda=0.5,sigma=0.2,T=50".parse()?;
            let parts = vec![
                (
                    0.5,
                    RiskAversionDistribution::finite_discrete(vec![(0.1, 0.2), (8.0, 0.8)])?,
                ),
                (0.5, RiskAversionDistribution::point_mass(1.5)?),
            ];
            let report = convex_combination_compare(&parts, &m, tol.grid_points, &tol)?;
            if let Some(path) = out {
                let mut csv = String::from("t,mix,a1,a2\n");
                for i in 0..report.t.len() {
                    csv.push_str(&format!(
                        "{},{},{},{}\n",
                        report.t[i], report.mix[i], report.components[0][i], report.components[1][i]
                    ));
                }
                write_out(path, &csv)?;
            }
            emit(
                cli,
                json!({
                    "schema": SCHEMA,
                    "command": "fig2",
                    "exceeds_all_points": report.exceeds_all.len(),
                    "first_exceeds": report.exceeds_all.first(),
                }),
                format!(
                    "mixture exceeds both components at {} of {} grid points",
                    report.exceeds_all.len(),
                    report.t.len()
                ),
            );
            Ok(())
        }
    }
}
