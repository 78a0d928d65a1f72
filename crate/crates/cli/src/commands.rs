use std::path::{Path, PathBuf};

use serde::Serialize;
use wmr_core::io::{self, sci, to_document};
use wmr_core::martingale::{self, Coupling, MartingaleCoupling};
use wmr_core::measures::{self, DiscreteMeasure};
use wmr_core::stability::{self, LadderGenerator, PerturbationLadder, Side};
use wmr_core::wmr::{self, CostSpec, WeakSolution};
use wmr_core::{reverse, Error};

use crate::plot;
use crate::{Command, Common, CostKind, Format, LadderKind, Pair, SideArg};

pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Parse { .. } | Error::Io(_) => 2,
            _ => 1,
        };
        Failure { code, message: e.to_string() }
    }
}

fn usage(message: String) -> Failure {
    Failure { code: 2, message }
}

type Outcome = std::result::Result<(), Failure>;

fn load(path: &Path) -> std::result::Result<DiscreteMeasure, Failure> {
    io::read_measure(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn load_pair(pair: &Pair) -> std::result::Result<(DiscreteMeasure, DiscreteMeasure), Failure> {
    Ok((load(&pair.mu)?, load(&pair.nu)?))
}

fn cost_of(opts: &Common) -> std::result::Result<CostSpec, Failure> {
    match (opts.cost, opts.rho) {
        (CostKind::Quadratic, None) => Ok(CostSpec::Quadratic),
        (CostKind::Quartic, None) => Ok(CostSpec::Quartic),
        (CostKind::Power, Some(rho)) => CostSpec::power(rho).map_err(|e| usage(e.to_string())),
        (CostKind::Power, None) => Err(usage("--cost power needs --rho".into())),
        (_, Some(_)) => Err(usage("--rho only applies to --cost power".into())),
    }
}

fn emit(opts: &Common, text: &str) -> Outcome {
    match &opts.out {
        Some(p) => std::fs::write(p, text).map_err(|e| usage(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn format_or(opts: &Common, default: Format, allowed: &[Format]) -> std::result::Result<Format, Failure> {
    let f = opts.format.unwrap_or(default);
    if allowed.contains(&f) {
        Ok(f)
    } else {
        Err(usage(format!("format {f:?} is not available for this command")))
    }
}

fn tol_for(opts: &Common, default: f64) -> f64 {
    opts.tol.unwrap_or(default)
}

pub fn run(cmd: Command) -> Outcome {
    match cmd {
        Command::Potential { measure, opts } => potential(&measure, &opts),
        Command::CheckOrder { pair, opts } => check_order(&pair, &opts),
        Command::Irreducible { pair, opts } => irreducible(&pair, &opts),
        Command::Wmr { pair, opts } => solve(&pair, &opts),
        Command::Value { pair, opts } => value(&pair, &opts),
        Command::Reverse { pair, opts } => reverse_cmd(&pair, &opts),
        Command::Compose { pair, coupling, opts } => compose(&pair, coupling.as_deref(), &opts),
        Command::Certify { pair, coupling, opts } => certify(&pair, &coupling, &opts),
        Command::Stability { pair, ladder, side, rungs, ladder_rho, opts } => {
            stability_cmd(&pair, ladder, side, rungs, ladder_rho, &opts)
        }
        Command::Plot { pair, csv, opts } => plot_cmd(&pair, csv, &opts),
    }
}

fn potential(path: &Path, opts: &Common) -> Outcome {
    let m = load(path)?;
    let u = m.potential();
    match format_or(opts, Format::Csv, &[Format::Csv, Format::Json])? {
        Format::Csv => {
            let mut s = String::from("y,u\n");
            for (&y, &v) in u.breakpoints().iter().zip(u.values()) {
                s.push_str(&format!("{},{}\n", sci(y), sci(v)));
            }
            emit(opts, &s)
        }
        _ => emit(opts, &to_document("potential", &u)?),
    }
}

#[derive(Serialize)]
struct OrderVerdict {
    leq: bool,
    mean_gap: f64,
    potential_gap: f64,
    witness: f64,
    tol: f64,
}

fn check_order(pair: &Pair, opts: &Common) -> Outcome {
    let (a, b) = load_pair(pair)?;
    let tol = tol_for(opts, measures::order_tol(&a, &b));
    let (gap, at) = measures::order_violation(&a, &b);
    let v = OrderVerdict {
        leq: measures::convex_order_leq(&a, &b, tol),
        mean_gap: a.mean() - b.mean(),
        potential_gap: gap,
        witness: at,
        tol,
    };
    match opts.format {
        Some(Format::Json) => emit(opts, &to_document("order", &v)?),
        Some(f) => Err(usage(format!("format {f:?} is not available for this command"))),
        None if v.leq => emit(opts, "true\n"),
        None => emit(
            opts,
            &format!("false\nmean_gap {}\npotential_gap {} at {}\n", sci(v.mean_gap), sci(v.potential_gap), sci(v.witness)),
        ),
    }
}

fn irreducible(pair: &Pair, opts: &Common) -> Outcome {
    let (a, b) = load_pair(pair)?;
    let tol = tol_for(opts, measures::order_tol(&a, &b));
    let comps = measures::irreducible_components(&a, &b, tol)?;
    match format_or(opts, Format::Csv, &[Format::Csv, Format::Json])? {
        Format::Csv => {
            let mut s = String::from("lo,hi\n");
            for c in &comps {
                s.push_str(&format!("{},{}\n", sci(c.lo), sci(c.hi)));
            }
            emit(opts, &s)
        }
        _ => {
            #[derive(Serialize)]
            struct Doc<'a> {
                intervals: &'a [wmr_core::Interval],
            }
            emit(opts, &to_document("irreducible", &Doc { intervals: &comps })?)
        }
    }
}

#[derive(Serialize)]
struct Verification {
    admissibility: wmr::AdmissibilityReport,
    characterization: wmr::Slope1Report,
    certificate: martingale::OptimalityReport,
    passed: bool,
}

fn verification(sol: &WeakSolution, mu: &DiscreteMeasure, nu: &DiscreteMeasure, opts: &Common) -> Result<Verification, Failure> {
    let tol = tol_for(opts, 1e-7 * measures::scale(mu, nu));
    let admissibility = wmr::verify_admissible(&sol.map, mu, nu, tol);
    let characterization = wmr::verify_slope1_characterization(sol, mu, nu, tol);
    let mg = martingale::build_martingale_coupling(&sol.pushforward, nu)?;
    let pi = martingale::compose_with_map(mu, &sol.map, &mg)?;
    let certificate = martingale::optimality_certificate(&pi, mu, nu, sol.cost, tol)?;
    let passed = admissibility.admissible() && characterization.passed() && certificate.optimal();
    Ok(Verification { admissibility, characterization, certificate, passed })
}

#[derive(Serialize)]
struct ThetaCheck {
    costs: Vec<String>,
    /// W1 distance of each pushforward to the first one
    w1_gaps: Vec<f64>,
    tol: f64,
    passed: bool,
}

fn theta_check(sol: &WeakSolution, mu: &DiscreteMeasure, nu: &DiscreteMeasure, opts: &Common) -> Result<ThetaCheck, Failure> {
    let tol = tol_for(opts, 1e-6 * measures::scale(mu, nu));
    let mut costs = vec![sol.cost];
    for c in [CostSpec::Quadratic, CostSpec::Quartic, CostSpec::Power { rho: 3.0 }] {
        if !costs.contains(&c) {
            costs.push(c);
        }
    }
    let mut w1_gaps = vec![0.0];
    for &c in &costs[1..] {
        let other = wmr::solve_weak_transport(mu, nu, c)?;
        w1_gaps.push(measures::wasserstein(&sol.pushforward, &other.pushforward, 1.0)?);
    }
    let passed = w1_gaps.iter().all(|&g| g <= tol);
    Ok(ThetaCheck { costs: costs.iter().map(CostSpec::name).collect(), w1_gaps, tol, passed })
}

#[derive(Serialize)]
struct SolveDoc<'a, T: Serialize> {
    #[serde(flatten)]
    body: &'a T,
    #[serde(skip_serializing_if = "Option::is_none")]
    verification: Option<Verification>,
    #[serde(skip_serializing_if = "Option::is_none")]
    theta_check: Option<ThetaCheck>,
}

/// Runs the requested checks; a failed check is reported in the document and
/// turns the exit code to 1.
fn checks(
    sol: &WeakSolution,
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    opts: &Common,
) -> Result<(Option<Verification>, Option<ThetaCheck>, bool), Failure> {
    let v = if opts.verify { Some(verification(sol, mu, nu, opts)?) } else { None };
    let t = if opts.verify_theta { Some(theta_check(sol, mu, nu, opts)?) } else { None };
    let ok = v.as_ref().is_none_or(|v| v.passed) && t.as_ref().is_none_or(|t| t.passed);
    Ok((v, t, ok))
}

fn check_failed() -> Failure {
    Failure { code: 1, message: "verification failed; see the report".into() }
}

fn solve(pair: &Pair, opts: &Common) -> Outcome {
    let (mu, nu) = load_pair(pair)?;
    let cost = cost_of(opts)?;
    format_or(opts, Format::Json, &[Format::Json])?;
    let sol = wmr::solve_weak_transport(&mu, &nu, cost)?;
    let (verification, theta_check, ok) = checks(&sol, &mu, &nu, opts)?;
    emit(opts, &to_document("weak_solution", &SolveDoc { body: &sol, verification, theta_check })?)?;
    if ok {
        Ok(())
    } else {
        Err(check_failed())
    }
}

fn value(pair: &Pair, opts: &Common) -> Outcome {
    let (mu, nu) = load_pair(pair)?;
    let cost = cost_of(opts)?;
    let sol = wmr::solve_weak_transport(&mu, &nu, cost)?;
    let (verification, theta_check, ok) = checks(&sol, &mu, &nu, opts)?;
    #[derive(Serialize)]
    struct ValueDoc {
        value: f64,
        cost: CostSpec,
    }
    match opts.format {
        None => {
            let mut s = format!("{}\n", sci(sol.value));
            if let Some(t) = &theta_check {
                for (c, g) in t.costs.iter().zip(&t.w1_gaps) {
                    s.push_str(&format!("# {c} pushforward W1 gap {}\n", sci(*g)));
                }
            }
            emit(opts, &s)?;
        }
        Some(Format::Json) => {
            let body = ValueDoc { value: sol.value, cost };
            emit(opts, &to_document("value", &SolveDoc { body: &body, verification, theta_check })?)?;
        }
        Some(f) => return Err(usage(format!("format {f:?} is not available for this command"))),
    }
    if ok {
        Ok(())
    } else {
        Err(check_failed())
    }
}

fn reverse_cmd(pair: &Pair, opts: &Common) -> Outcome {
    let (mu, nu) = load_pair(pair)?;
    let cost = cost_of(opts)?;
    format_or(opts, Format::Json, &[Format::Json])?;
    let r = reverse::reverse_optimizer(&mu, &nu, cost)?;
    emit(opts, &to_document("reverse_solution", &r)?)
}

#[derive(Serialize)]
struct CouplingDoc {
    triplets: Vec<(f64, f64, f64)>,
    weak_cost: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    certificate: Option<martingale::OptimalityReport>,
}

fn compose(pair: &Pair, coupling: Option<&Path>, opts: &Common) -> Outcome {
    let (mu, nu) = load_pair(pair)?;
    let cost = cost_of(opts)?;
    let sol = wmr::solve_weak_transport(&mu, &nu, cost)?;
    let mg = match coupling {
        Some(p) => {
            let c = io::read_coupling(p).map_err(|e| usage(format!("{}: {e}", p.display())))?;
            MartingaleCoupling::new(c)?
        }
        None => martingale::build_martingale_coupling(&sol.pushforward, &nu)?,
    };
    let pi = martingale::compose_with_map(&mu, &sol.map, &mg)?;
    let tol = tol_for(opts, 1e-7 * measures::scale(&mu, &nu));
    let certificate = if opts.verify { Some(martingale::optimality_certificate(&pi, &mu, &nu, cost, tol)?) } else { None };
    let ok = certificate.as_ref().is_none_or(|c| c.optimal());
    match format_or(opts, Format::Json, &[Format::Json, Format::Csv])? {
        Format::Csv => emit(opts, &io::coupling_to_csv(&pi))?,
        _ => emit(
            opts,
            &to_document("coupling", &CouplingDoc { triplets: pi.triplets(), weak_cost: pi.weak_cost(cost), certificate })?,
        )?,
    }
    if ok {
        Ok(())
    } else {
        Err(check_failed())
    }
}

fn certify(pair: &Pair, coupling: &Path, opts: &Common) -> Outcome {
    let (mu, nu) = load_pair(pair)?;
    let cost = cost_of(opts)?;
    format_or(opts, Format::Json, &[Format::Json])?;
    let pi: Coupling = io::read_coupling(coupling).map_err(|e| usage(format!("{}: {e}", coupling.display())))?;
    let tol = tol_for(opts, 1e-7 * measures::scale(&mu, &nu));
    let report = martingale::optimality_certificate(&pi, &mu, &nu, cost, tol)?;
    #[derive(Serialize)]
    struct Doc<'a> {
        optimal: bool,
        #[serde(flatten)]
        report: &'a martingale::OptimalityReport,
    }
    emit(opts, &to_document("certificate", &Doc { optimal: report.optimal(), report: &report })?)
}

fn stability_cmd(pair: &Pair, kind: LadderKind, side: SideArg, rungs: usize, rho: f64, opts: &Common) -> Outcome {
    let (mu, nu) = load_pair(pair)?;
    let cost = cost_of(opts)?;
    if rungs == 0 {
        return Err(usage("--rungs must be positive".into()));
    }
    let ks = 1..=rungs;
    let generator = match kind {
        LadderKind::Shift => LadderGenerator::Shift { h: ks.map(|k| 1.0 / k as f64).collect() },
        LadderKind::Empirical => {
            LadderGenerator::Empirical { sizes: ks.map(|k| 1usize << k.min(24)).collect(), seed: opts.seed }
        }
        LadderKind::Quantize => {
            let s = measures::scale(&mu, &nu);
            LadderGenerator::Quantize { deltas: ks.map(|k| s * 0.5f64.powi(k as i32)).collect() }
        }
    };
    let side = match side {
        SideArg::Mu => Side::Mu,
        SideArg::Nu => Side::Nu,
        SideArg::Both => Side::Both,
    };
    let ladder = PerturbationLadder { mu, nu, generator, side, rho };
    let report = stability::run_stability_experiment(&ladder, cost)?;
    match format_or(opts, Format::Csv, &[Format::Csv, Format::Json])? {
        Format::Csv => emit(opts, &report.to_csv()?),
        _ => emit(opts, &to_document("stability_report", &report)?),
    }
}

fn plot_cmd(pair: &Pair, csv: Option<PathBuf>, opts: &Common) -> Outcome {
    let (mu, nu) = load_pair(pair)?;
    let cost = cost_of(opts)?;
    let sol = wmr::solve_weak_transport(&mu, &nu, cost)?;
    let tol = tol_for(opts, 1e-7 * measures::scale(&mu, &nu));
    let pieces = plot::partition(&sol.map, &sol.irreducibles, tol);
    let table = plot::to_csv(&pieces);
    match format_or(opts, Format::Svg, &[Format::Svg, Format::Csv])? {
        Format::Csv => emit(opts, &table),
        _ => {
            let title = format!("weak monotone rearrangement, {} cost", cost.name());
            emit(opts, &plot::to_svg(&pieces, &title))?;
            let companion = csv.or_else(|| opts.out.as_ref().map(|p| p.with_extension("csv")));
            match companion {
                Some(p) => std::fs::write(&p, table).map_err(|e| usage(format!("{}: {e}", p.display()))),
                None => Ok(()),
            }
        }
    }
}
