//! The `relres` command line.
//!
//! [`run`] parses an argument vector, executes one subcommand and returns
//! the exit code with the rendered report. Exit codes: 0 success, 2 bad
//! arguments or input files, 3 numerically rejected input, 4 a solver that
//! missed its tolerance (the report is still produced).

mod report;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sha2::{Digest, Sha256};

use relres::ecbounds::{
    bipartite_bound, bipartite_bound_oscillator, entropy_ceiling, g_min_envelope, g_oscillator,
    multipartite_bound_sqrt, multipartite_bound_t, BoundRequest, BoundValue, HamiltonianSpec,
};
use relres::entropy::{relative_entropy, von_neumann_entropy};
use relres::freesets::{separable_witness_from_pure, FreeSetSpec};
use relres::gaussian::{gaussian_entropy, moments, relent_non_gaussianity, symplectic_eigenvalues, FockRep};
use relres::io::{parse_dims, parse_partitions, parse_reals, parse_split, parse_sweep, write_state_file, StateFile};
use relres::opcore::{eig_hermitian, partial_trace};
use relres::solver::{auto_candidate_x, dual_certificate, minimize_primal, SolverConfig};
use relres::HermitianOp;

pub use report::{fmt_real, Report, Value};

pub const EXIT_OK: i32 = 0;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
pub const EXIT_NO_CONVERGENCE: i32 = 4;

#[derive(Parser, Debug)]
#[command(name = "relres", version, about = "Relative entropy of resource and energy-constrained continuity bounds")]
struct Cli {
    /// Progress logs on standard error.
    #[arg(long, global = true)]
    verbose: bool,
    /// Append a JSON copy of the report.
    #[arg(long, global = true)]
    json: bool,
    /// Write the command's output state (or parsed input) to this file.
    #[arg(long, global = true, value_name = "PATH")]
    dump: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SetKind {
    Sep,
    Pisep,
    Ppt,
    Rains,
}

#[derive(Args, Debug)]
struct SetArgs {
    #[arg(long, value_enum)]
    set: SetKind,
    /// Factors on the first side of the cut, e.g. `0,2`.
    #[arg(long, default_value = "0")]
    split: String,
    /// Allowed partitions for `pisep`, e.g. `0|1|2;0,1|2`.
    #[arg(long)]
    partitions: Option<String>,
}

#[derive(Args, Debug)]
struct SolverArgs {
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, default_value_t = 500)]
    max_iters: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 8)]
    restarts: usize,
    /// Skip the dual certificates.
    #[arg(long)]
    no_certify: bool,
}

impl SolverArgs {
    fn config(&self) -> SolverConfig {
        SolverConfig {
            max_iters: self.max_iters,
            tol: self.tol,
            lmo_restarts: self.restarts,
            seed: self.seed,
            certify: !self.no_certify,
            ..SolverConfig::default()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum BoundKind {
    Bipartite,
    Multipartite,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum GKind {
    Gmin,
    Oscillator,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Form {
    T,
    Sqrt,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Relative entropy D(X || Y) of two operator files.
    Relent { x: PathBuf, y: PathBuf },
    /// Relative entropy of resource with a certified bracket.
    Measure {
        state: PathBuf,
        #[command(flatten)]
        set: SetArgs,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Dual lower bound for a given or ansatz-generated X.
    Certify {
        state: PathBuf,
        #[command(flatten)]
        set: SetArgs,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long)]
        x_file: Option<PathBuf>,
        /// Regularization of the ansatz.
        #[arg(long, default_value_t = 1e-4)]
        eps: f64,
    },
    /// Relative entropy of non-Gaussianity of a Fock-basis state.
    Nongauss {
        state: PathBuf,
        #[arg(long)]
        modes: usize,
        #[arg(long)]
        cutoff: usize,
    },
    /// Energy-constrained continuity bounds.
    Bound {
        #[arg(value_enum)]
        kind: BoundKind,
        /// Trace distance.
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        energy: f64,
        #[arg(long)]
        d0: Option<u64>,
        /// Oscillator modes per party.
        #[arg(long, default_value_t = 1)]
        modes: usize,
        /// Oscillator frequencies, one per mode (default all 1).
        #[arg(long)]
        freqs: Option<String>,
        /// Explicit grounded spectrum instead of an oscillator.
        #[arg(long, conflicts_with = "freqs")]
        spectrum: Option<String>,
        /// Number of parties.
        #[arg(long = "m")]
        m: Option<usize>,
        /// Number of energy-constrained parties.
        #[arg(long = "s")]
        s: Option<usize>,
        #[arg(long, value_enum)]
        g: Option<GKind>,
        /// Multipartite form.
        #[arg(long, value_enum, default_value = "t")]
        form: Form,
        /// `eps=a:b:n[:log]` or `energy=a:b:n[:log]`.
        #[arg(long)]
        sweep: Option<String>,
    },
    /// Separable state built from the Schmidt structure of a pure state.
    Witness {
        state: PathBuf,
        /// Factorization overriding the file's dims.
        #[arg(long)]
        dims: Option<String>,
    },
}

#[derive(Debug)]
enum Failure {
    Parse(String),
    Lib(relres::Error),
}

impl From<relres::Error> for Failure {
    fn from(e: relres::Error) -> Self {
        Failure::Lib(e)
    }
}

impl Failure {
    fn code(&self) -> i32 {
        use relres::Error as E;
        match self {
            Failure::Parse(_) => EXIT_PARSE,
            Failure::Lib(E::Parse(_) | E::InvalidArgument(_) | E::InvalidPartition(_) | E::InvalidIndex { .. }) => {
                EXIT_PARSE
            }
            Failure::Lib(E::NoConvergence { .. }) => EXIT_NO_CONVERGENCE,
            Failure::Lib(_) => EXIT_NUMERIC,
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Parse(s) => s.clone(),
            Failure::Lib(e) => e.to_string(),
        }
    }
}

type Res<T> = std::result::Result<T, Failure>;

#[derive(Debug)]
pub struct Outcome {
    pub code: i32,
    /// The rendered report; empty when the command failed before producing one.
    pub stdout: String,
    pub stderr: String,
}

struct Ctx {
    digest: Sha256,
    dump: Option<PathBuf>,
}

impl Ctx {
    fn read(&mut self, path: &Path) -> Res<String> {
        let text = fs::read_to_string(path).map_err(|e| Failure::Parse(format!("{}: {e}", path.display())))?;
        self.digest.update((text.len() as u64).to_le_bytes());
        self.digest.update(text.as_bytes());
        Ok(text)
    }

    fn read_op(&mut self, path: &Path) -> Res<HermitianOp> {
        let text = self.read(path)?;
        let file: StateFile = serde_json::from_str(&text).map_err(|e| Failure::Parse(format!("{}: {e}", path.display())))?;
        Ok(file.operator()?)
    }

    fn dump(&self, op: &HermitianOp) -> Res<()> {
        if let Some(p) = &self.dump {
            fs::write(p, write_state_file(op) + "\n").map_err(|e| Failure::Parse(format!("{}: {e}", p.display())))?;
        }
        Ok(())
    }
}

/// Runs one command; `argv[0]` is the program name.
pub fn run<I, T>(argv: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args: Vec<std::ffi::OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_PARSE } else { EXIT_OK };
            let text = e.render().to_string();
            return if e.use_stderr() {
                Outcome { code, stdout: String::new(), stderr: text }
            } else {
                Outcome { code, stdout: text, stderr: String::new() }
            };
        }
    };
    let level = if cli.verbose { log::LevelFilter::Debug } else { log::LevelFilter::Warn };
    let _ = env_logger::Builder::new().filter_level(level).target(env_logger::Target::Stderr).try_init();
    log::set_max_level(level);

    let start = Instant::now();
    let echo: Vec<String> = args.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect();
    let mut report = Report::default();
    report.str("command", echo.join(" "));
    report.str("version", env!("CARGO_PKG_VERSION"));
    let mut ctx = Ctx { digest: Sha256::new(), dump: cli.dump.clone() };
    let result = dispatch(&cli.command, &mut ctx, &mut report);
    match result {
        Ok(code) => {
            report.str("inputs_sha256", hex::encode(ctx.digest.finalize()));
            report.real("wall_time_s", start.elapsed().as_secs_f64());
            Outcome { code, stdout: report.render(cli.json), stderr: String::new() }
        }
        Err(f) => Outcome { code: f.code(), stdout: String::new(), stderr: format!("error: {}\n", f.message()) },
    }
}

fn dispatch(cmd: &Command, ctx: &mut Ctx, r: &mut Report) -> Res<i32> {
    match cmd {
        Command::Relent { x, y } => relent(ctx, r, x, y),
        Command::Measure { state, set, solver } => measure(ctx, r, state, set, solver),
        Command::Certify { state, set, solver, x_file, eps } => {
            certify(ctx, r, state, set, solver, x_file.as_deref(), *eps)
        }
        Command::Nongauss { state, modes, cutoff } => nongauss(ctx, r, state, *modes, *cutoff),
        Command::Bound { .. } => bound(r, cmd),
        Command::Witness { state, dims } => witness(ctx, r, state, dims.as_deref()),
    }
}

fn relent(ctx: &mut Ctx, r: &mut Report, x: &Path, y: &Path) -> Res<i32> {
    let a = ctx.read_op(x)?;
    let b = ctx.read_op(y)?;
    let rep = relative_entropy(&a, &b)?;
    r.real("value", rep.value.to_f64());
    r.bool("support_ok", rep.support_ok);
    r.real("trace_x", a.trace());
    r.real("trace_y", b.trace());
    ctx.dump(&a)?;
    Ok(EXIT_OK)
}

fn free_set(set: &SetArgs, dims: &[usize]) -> Res<FreeSetSpec> {
    let m = dims.len();
    let spec = match set.set {
        SetKind::Sep => FreeSetSpec::sep(dims, parse_split(&set.split, m)?.a_side())?,
        SetKind::Ppt => FreeSetSpec::ppt(dims, parse_split(&set.split, m)?.a_side())?,
        SetKind::Rains => FreeSetSpec::rains(dims, parse_split(&set.split, m)?.a_side())?,
        SetKind::Pisep => {
            let p = set.partitions.as_deref().ok_or_else(|| Failure::Parse("--set pisep needs --partitions".into()))?;
            FreeSetSpec::pi_sep(dims, parse_partitions(p, m)?)?
        }
    };
    Ok(spec)
}

fn dims_text(dims: &[usize]) -> String {
    dims.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(",")
}

fn measure(ctx: &mut Ctx, r: &mut Report, state: &Path, set: &SetArgs, solver: &SolverArgs) -> Res<i32> {
    let rho = ctx.read_op(state)?;
    let free = free_set(set, rho.dims())?;
    let cfg = solver.config();
    let res = minimize_primal(&rho, &free, &cfg)?;
    r.str("set", free.name());
    r.str("dims", dims_text(rho.dims()));
    r.int("seed", cfg.seed as usize);
    r.real("upper", res.upper);
    r.real("lower", res.lower);
    r.real("gap", res.gap);
    r.bool("lower_rigorous", res.lower_rigorous);
    r.int("iterations", res.iterations);
    r.bool("converged", res.converged);
    r.real("primal_gap", res.primal_gap);
    if let Some(c) = &res.certificate {
        r.real("certificate_bound", c.bound);
        r.real("certificate_residual", c.inner_sup_residual);
        r.bool("certificate_reliable", c.reliable);
    }
    if let Some(a) = &res.decomposition {
        r.int("decomposition_atoms", a.len());
    }
    ctx.dump(&res.minimizer)?;
    Ok(if res.converged { EXIT_OK } else { EXIT_NO_CONVERGENCE })
}

fn certify(
    ctx: &mut Ctx,
    r: &mut Report,
    state: &Path,
    set: &SetArgs,
    solver: &SolverArgs,
    x_file: Option<&Path>,
    eps: f64,
) -> Res<i32> {
    let rho = ctx.read_op(state)?;
    let free = free_set(set, rho.dims())?;
    let cfg = solver.config();
    let x = match x_file {
        Some(p) => {
            r.str("x_source", "file");
            ctx.read_op(p)?
        }
        None => {
            let primal = minimize_primal(&rho, &free, &SolverConfig { certify: false, ..cfg.clone() })?;
            r.str("x_source", "ansatz");
            r.real("ansatz_eps", eps);
            r.real("primal_upper", primal.upper);
            auto_candidate_x(&rho, &primal.minimizer, eps)?
        }
    };
    let c = dual_certificate(&rho, &free, &x, &cfg)?;
    r.str("set", free.name());
    r.str("dims", dims_text(rho.dims()));
    r.int("seed", cfg.seed as usize);
    r.real("inner_sup_value", c.inner_sup_value);
    r.real("bound", c.bound);
    r.real("inner_sup_residual", c.inner_sup_residual);
    r.real("certified_bound", c.certified_bound());
    r.bool("reliable", c.reliable);
    r.bool("rigorous", c.rigorous);
    r.int("inner_iterations", c.inner_iterations);
    ctx.dump(&x)?;
    Ok(if c.reliable { EXIT_OK } else { EXIT_NO_CONVERGENCE })
}

fn nongauss(ctx: &mut Ctx, r: &mut Report, state: &Path, modes: usize, cutoff: usize) -> Res<i32> {
    let op = ctx.read_op(state)?;
    let want = vec![cutoff; modes];
    let op = if op.dims() == want.as_slice() { op } else { op.with_dims(want)? };
    let rep = FockRep::new(modes, cutoff, op)?;
    let md = moments(&rep);
    let nus = symplectic_eigenvalues(&md.covariance)?;
    let delta = relent_non_gaussianity(&rep)?;
    r.int("modes", modes);
    r.int("cutoff", cutoff);
    r.real("delta_r", delta);
    r.real("gaussian_entropy", gaussian_entropy(&md.covariance)?);
    r.real("entropy", von_neumann_entropy(rep.state())?);
    r.reals("symplectic_eigenvalues", nus);
    r.reals("mean", md.mean.iter().copied().collect());
    r.real("leakage", md.leakage);
    r.bool("leakage_warning", md.leakage_warning);
    ctx.dump(rep.state())?;
    Ok(EXIT_OK)
}

fn bound(r: &mut Report, cmd: &Command) -> Res<i32> {
    let Command::Bound { kind, eps, energy, d0, modes, freqs, spectrum, m, s, g, form, sweep } = cmd else {
        unreachable!("dispatched on Bound")
    };
    let h = match spectrum {
        Some(text) => HamiltonianSpec::spectrum(parse_reals(text)?)?,
        None => {
            let omegas = match freqs {
                Some(text) => parse_reals(text)?,
                None => vec![1.0; *modes],
            };
            if omegas.len() != *modes {
                return Err(Failure::Parse(format!("--freqs has {} entries for {modes} modes", omegas.len())));
            }
            HamiltonianSpec::oscillator(omegas)?
        }
    };
    let g_kind = match (g, &h) {
        (Some(GKind::Oscillator), HamiltonianSpec::Spectrum(_)) => {
            return Err(Failure::Parse("--g oscillator needs an oscillator Hamiltonian".into()))
        }
        (Some(k), _) => *k,
        (None, HamiltonianSpec::Oscillator(_)) => GKind::Oscillator,
        (None, HamiltonianSpec::Spectrum(_)) => GKind::Gmin,
    };
    let parties = m.unwrap_or(2);
    let s_val = s.unwrap_or(parties - 1);

    let eval = |eps: f64, energy: f64| -> Res<BoundValue> {
        match kind {
            BoundKind::Bipartite => {
                let req = BoundRequest::bipartite(eps, energy, *d0);
                match (&h, g_kind) {
                    (HamiltonianSpec::Oscillator(o), GKind::Oscillator) => Ok(bipartite_bound_oscillator(&req, o)?),
                    _ => Ok(bipartite_bound(&req, &g_min_envelope(&h))?),
                }
            }
            BoundKind::Multipartite => {
                let req = BoundRequest::multipartite(eps, energy, parties, s_val);
                match form {
                    Form::Sqrt => {
                        let value = multipartite_bound_sqrt(&req, &|e| entropy_ceiling(&h, e))?;
                        Ok(BoundValue { value, t_star: f64::NAN })
                    }
                    Form::T => match (&h, g_kind) {
                        (HamiltonianSpec::Oscillator(o), GKind::Oscillator) => {
                            Ok(multipartite_bound_t(&req, &|e| g_oscillator(o, e))?)
                        }
                        _ => Ok(multipartite_bound_t(&req, &g_min_envelope(&h))?),
                    },
                }
            }
        }
    };

    let v = eval(*eps, *energy)?;
    r.str("kind", format!("{kind:?}").to_lowercase());
    r.str("envelope", format!("{g_kind:?}").to_lowercase());
    if *kind == BoundKind::Multipartite {
        r.int("parties", parties);
        r.int("s", s_val);
        r.str("form", format!("{form:?}").to_lowercase());
    }
    r.real("eps", *eps);
    r.real("energy", *energy);
    r.real("value", v.value);
    if v.t_star.is_finite() {
        r.real("t_star", v.t_star);
    }
    if let Some(text) = sweep {
        let sw = parse_sweep(text)?;
        let mut rows = Vec::with_capacity(sw.values.len());
        for &p in &sw.values {
            let b = match sw.parameter.as_str() {
                "eps" => eval(p, *energy)?,
                "energy" => eval(*eps, p)?,
                other => return Err(Failure::Parse(format!("cannot sweep {other:?}; use eps or energy"))),
            };
            rows.push(vec![p, b.value, b.t_star]);
        }
        r.set_table(vec![sw.parameter.clone(), "value".into(), "t_star".into()], rows);
    }
    Ok(EXIT_OK)
}

fn witness(ctx: &mut Ctx, r: &mut Report, state: &Path, dims: Option<&str>) -> Res<i32> {
    let text = ctx.read(state)?;
    let file: StateFile =
        serde_json::from_str(&text).map_err(|e| Failure::Parse(format!("{}: {e}", state.display())))?;
    let psi = if file.vector.is_some() {
        file.vector_data()?
    } else {
        let op = file.operator()?;
        let e = eig_hermitian(&op);
        let d = op.dim();
        if (e.values[d - 1] - 1.0).abs() > 1e-10 || (op.trace() - 1.0).abs() > 1e-10 {
            return Err(relres::Error::NotAState("witness input is not a pure state".into()).into());
        }
        e.vectors.column(d - 1).into_owned()
    };
    let dims = match dims {
        Some(t) => parse_dims(t)?,
        None => file.dims.clone(),
    };
    let sigma = separable_witness_from_pure(&psi, &dims)?;
    let proj = HermitianOp::projector(&dims, &psi)?;
    let d = relative_entropy(&proj, &sigma)?;
    let marginals: f64 = (0..dims.len() - 1)
        .map(|k| partial_trace(&proj, &[k]).and_then(|m| von_neumann_entropy(&m)))
        .sum::<relres::Result<f64>>()?;
    r.str("dims", dims_text(&dims));
    r.real("relative_entropy", d.value.to_f64());
    r.real("marginal_entropy_sum", marginals);
    ctx.dump(&sigma)?;
    Ok(EXIT_OK)
}
