use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use rfddes::ddes::{prepare, rf_ddes_solve, RfDdesConfig};
use rfddes::error::{Error, Phase};
use rfddes::filter::{QuadratureRule, RationalFilter};
use rfddes::krylov::{rf_krylov_solve, IterConfig};
use rfddes::mesh::{gen_fd_laplacian, random_grid_pencil, FdMesh};
use rfddes::mm::{load_matrix_market, write_matrix_market_to};
use rfddes::oracle::{self, dense_gen_eig, FullEigenReference};
use rfddes::report::{accuracy_grid, grid_csv, max_relative_error, RunRecord};
use rfddes::sparse::{SparseSym, DEFAULT_DENSE_CAP};
use serde::Serialize;
use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

const EXIT_CODES: &str = "\
Exit codes:
  0  success
  2  invalid command line
  3  input could not be read or parsed
  4  partitioning failed
  5  a shifted factorization failed
  6  the solver failed in another phase
  7  output could not be written
  8  a verification suite found a violation
  9  no reference eigenvalues are available (use --mesh for analytic values)";

#[derive(Parser)]
#[command(
    name = "rfddes",
    version,
    about = "Rational filtering eigensolvers for sparse symmetric pencils"
)]
#[command(after_help = EXIT_CODES)]
struct Cli {
    /// Worker threads for factorizations and per-subdomain work.
    #[arg(long, global = true, env = "RFDDES_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the 5-point finite-difference Laplacian of an NX×NY grid.
    Gen {
        nx: usize,
        ny: usize,
        /// Output file (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compute the eigenpairs inside an interval.
    Solve(SolveArgs),
    /// Tabulate the maximum relative error over a grid of nev_B and ψ.
    Compare(CompareArgs),
    /// Report subdomain and interface sizes of the partition.
    PartitionStats(PartitionArgs),
    /// Sample the rational filter on a line.
    FilterPlot(FilterPlotArgs),
    /// Check the solver's identities, rank structure or interior bounds
    /// against a dense reference.
    Verify(VerifyArgs),
}

#[derive(Args)]
#[command(group(ArgGroup::new("source").required(true).args(["a", "mesh"])))]
struct Problem {
    /// Matrix Market file holding A.
    #[arg(long)]
    a: Option<PathBuf>,
    /// Matrix Market file holding M (identity when omitted).
    #[arg(long, requires = "a")]
    m: Option<PathBuf>,
    /// Generate the Laplacian of an NXxNY grid instead of reading files.
    #[arg(long, value_parser = parse_grid)]
    mesh: Option<(usize, usize)>,
}

#[derive(Args)]
struct Interval {
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    beta: Option<f64>,
    /// Choose the interval holding the K lowest eigenvalues (analytic with
    /// --mesh, dense reference otherwise).
    #[arg(long, conflicts_with_all = ["alpha", "beta"])]
    lowest: Option<usize>,
}

#[derive(Args)]
struct SolverOpts {
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    sigma: f64,
    /// Number of subdomains.
    #[arg(long, default_value_t = 2)]
    p: usize,
    /// Quadrature nodes in the upper half plane.
    #[arg(long, default_value_t = 2)]
    nc: usize,
    #[arg(long, default_value = "midpoint")]
    rule: QuadratureRule,
    /// Interior eigenvectors per subdomain.
    #[arg(long, default_value_t = 100)]
    nevb: usize,
    /// Resolvent expansion depth.
    #[arg(long, default_value_t = 2)]
    psi: usize,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, default_value_t = 10)]
    check_every: usize,
    #[arg(long, default_value_t = 1000)]
    max_iter: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Rfddes,
    Rfkrylov,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long, value_enum, default_value = "rfddes")]
    method: Method,
    #[command(flatten)]
    problem: Problem,
    #[command(flatten)]
    interval: Interval,
    #[command(flatten)]
    opts: SolverOpts,
    /// Leave wall-clock timings out of the record.
    #[arg(long)]
    omit_timings: bool,
    /// Output file (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    problem: Problem,
    #[command(flatten)]
    interval: Interval,
    #[command(flatten)]
    opts: SolverOpts,
    /// Comma-separated nev_B values (rows); empty for no rows.
    #[arg(long = "grid-nevb", value_parser = parse_list, default_value = "50,100,200")]
    grid_nevb: List,
    /// Comma-separated ψ values (columns).
    #[arg(long = "grid-psi", value_parser = parse_list, default_value = "1,2,3")]
    grid_psi: List,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PartitionArgs {
    #[command(flatten)]
    problem: Problem,
    #[arg(long, default_value_t = 2)]
    p: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FilterPlotArgs {
    #[arg(long, default_value_t = -1.0, allow_hyphen_values = true)]
    alpha: f64,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    beta: f64,
    #[arg(long, default_value_t = 2)]
    nc: usize,
    #[arg(long, default_value = "midpoint")]
    rule: QuadratureRule,
    /// Sampling range (defaults to three interval widths around the center).
    #[arg(long, allow_hyphen_values = true)]
    lo: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    hi: Option<f64>,
    #[arg(long, default_value_t = 401)]
    count: usize,
    /// Normalize so the value at the interval ends is 1/2.
    #[arg(long)]
    scaled: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Suite {
    Identity,
    Rank,
    Bounds,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, value_enum)]
    suite: Suite,
    #[arg(long)]
    a: Option<PathBuf>,
    #[arg(long, requires = "a")]
    m: Option<PathBuf>,
    /// Random pencil NXxNY (used when no files are given).
    #[arg(long, value_parser = parse_grid, default_value = "10x5")]
    random: (usize, usize),
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 2)]
    p: usize,
    #[arg(long, default_value_t = 8)]
    nc: usize,
    /// Filter interval holds this many of the lowest eigenvalues.
    #[arg(long, default_value_t = 10)]
    lowest: usize,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    sigma: f64,
    #[arg(long, default_value_t = 2)]
    psi: usize,
    /// Interior eigenvectors added to the bound subspace.
    #[arg(long, default_value_t = 5)]
    kappa: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_grid(s: &str) -> Result<(usize, usize), String> {
    let (x, y) = s
        .split_once(['x', 'X', ','])
        .ok_or_else(|| format!("expected NXxNY, got {s:?}"))?;
    let nx = x.trim().parse::<usize>().map_err(|e| e.to_string())?;
    let ny = y.trim().parse::<usize>().map_err(|e| e.to_string())?;
    Ok((nx, ny))
}

#[derive(Clone)]
struct List(Vec<usize>);

fn parse_list(s: &str) -> Result<List, String> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<usize>().map_err(|e| format!("{t:?}: {e}")))
        .collect::<Result<_, _>>()
        .map(List)
}

struct Failure {
    code: u8,
    msg: String,
}

type CliResult<T> = Result<T, Failure>;

fn fail(code: u8, msg: impl Into<String>) -> Failure {
    Failure {
        code,
        msg: msg.into(),
    }
}

fn from_solver(e: Error) -> Failure {
    let code = match e.phase() {
        Some(Phase::Ingestion) => 3,
        Some(Phase::Partition | Phase::Blocks) => 4,
        Some(Phase::Factorization) => 5,
        _ => match e {
            Error::Io(_) | Error::Parse { .. } | Error::Unsupported(_) => 3,
            Error::SingularPivot { .. } => 5,
            _ => 6,
        },
    };
    fail(code, e.to_string())
}

fn emit(out: &Option<PathBuf>, text: &str) -> CliResult<()> {
    let res = match out {
        Some(path) => std::fs::write(path, text),
        None => std::io::stdout().write_all(text.as_bytes()),
    };
    res.map_err(|e| fail(7, format!("output phase failed: {e}")))
}

struct Loaded {
    a: SparseSym,
    m: SparseSym,
    mesh: Option<FdMesh>,
}

fn load(problem: &Problem) -> CliResult<Loaded> {
    let ingest = |e: Error| fail(3, format!("ingestion phase failed: {e}"));
    if let Some((nx, ny)) = problem.mesh {
        let mesh = FdMesh::new(nx, ny);
        let a = mesh.matrix().map_err(ingest)?;
        let m = SparseSym::identity(a.n());
        return Ok(Loaded {
            a,
            m,
            mesh: Some(mesh),
        });
    }
    let path = problem.a.as_ref().expect("clap enforces a source");
    let a = load_matrix_market(path).map_err(|e| {
        fail(
            3,
            format!("ingestion phase failed: {}: {e}", path.display()),
        )
    })?;
    let m = match &problem.m {
        Some(p) => load_matrix_market(p)
            .map_err(|e| fail(3, format!("ingestion phase failed: {}: {e}", p.display())))?,
        None => SparseSym::identity(a.n()),
    };
    if a.n() != m.n() {
        return Err(fail(
            3,
            format!(
                "ingestion phase failed: A is {}×{} but M is {}×{}",
                a.n(),
                a.n(),
                m.n(),
                m.n()
            ),
        ));
    }
    Ok(Loaded { a, m, mesh: None })
}

fn dense_reference(p: &Loaded) -> CliResult<FullEigenReference> {
    if p.a.n() > DEFAULT_DENSE_CAP {
        return Err(fail(
            9,
            format!(
                "reference unavailable: n={} exceeds the dense limit of {DEFAULT_DENSE_CAP}; use --mesh for analytic eigenvalues",
                p.a.n()
            ),
        ));
    }
    dense_gen_eig(&p.a, &p.m).map_err(from_solver)
}

/// Resolves the interval and, when available, the reference eigenvalues
/// inside it.
fn resolve_interval(
    p: &Loaded,
    iv: &Interval,
    need_reference: bool,
) -> CliResult<(f64, f64, Option<Vec<f64>>)> {
    if let Some(k) = iv.lowest {
        if k == 0 || k > p.a.n() {
            return Err(fail(2, format!("--lowest must lie in 1..={}", p.a.n())));
        }
        if let Some(mesh) = &p.mesh {
            let (lo, hi) = mesh.interval_for_lowest(k);
            return Ok((
                lo,
                hi,
                Some(mesh.lowest(k).iter().map(|md| md.value).collect()),
            ));
        }
        let r = dense_reference(p)?;
        let v = &r.values;
        let lo = v[0] - 0.5 * v.get(1).map_or(1.0, |x| x - v[0]).max(1e-12);
        let hi = if k < v.len() {
            0.5 * (v[k - 1] + v[k])
        } else {
            v[k - 1] + 0.5 * (v[k - 1] - lo).abs().max(1.0)
        };
        return Ok((lo, hi, Some(v[..k].to_vec())));
    }
    let (Some(lo), Some(hi)) = (iv.alpha, iv.beta) else {
        return Err(fail(2, "give --alpha and --beta, or --lowest"));
    };
    if !need_reference {
        return Ok((lo, hi, None));
    }
    let reference = match &p.mesh {
        Some(mesh) => mesh
            .modes()
            .into_iter()
            .map(|md| md.value)
            .filter(|&v| v >= lo && v <= hi)
            .collect(),
        None => {
            let r = dense_reference(p)?;
            r.inside(lo, hi).into_iter().map(|i| r.values[i]).collect()
        }
    };
    Ok((lo, hi, Some(reference)))
}

fn ddes_config(lo: f64, hi: f64, o: &SolverOpts) -> RfDdesConfig {
    RfDdesConfig {
        alpha: lo,
        beta: hi,
        sigma: o.sigma,
        p: o.p,
        nc: o.nc,
        rule: o.rule,
        nev_b: o.nevb,
        nev_b_per_subdomain: None,
        psi: o.psi,
        tol: o.tol,
        check_every: o.check_every,
        max_iter: o.max_iter,
        seed: o.seed,
    }
}

#[derive(Serialize)]
struct KrylovConfigEcho {
    alpha: f64,
    beta: f64,
    nc: usize,
    rule: QuadratureRule,
    tol: f64,
    check_every: usize,
    max_iter: usize,
    seed: u64,
}

fn cmd_solve(args: &SolveArgs) -> CliResult<()> {
    let p = load(&args.problem)?;
    let (lo, hi, reference) = resolve_interval(&p, &args.interval, false)?;
    let o = &args.opts;
    let timings = !args.omit_timings;
    let mut record = match args.method {
        Method::Rfddes => {
            let cfg = ddes_config(lo, hi, o);
            cfg.validate().map_err(|e| fail(2, e.to_string()))?;
            let res = rf_ddes_solve(&cfg, &p.a, &p.m).map_err(from_solver)?;
            RunRecord::new("rfddes", p.a.n(), &cfg, &res, timings)
        }
        Method::Rfkrylov => {
            let filter =
                RationalFilter::new(lo, hi, o.nc, o.rule).map_err(|e| fail(2, e.to_string()))?;
            let cfg = IterConfig {
                tol: o.tol,
                max_iter: o.max_iter,
                check_every: o.check_every,
                seed: o.seed,
            };
            cfg.validate().map_err(|e| fail(2, e.to_string()))?;
            let res = rf_krylov_solve(&p.a, &p.m, &filter, &cfg).map_err(from_solver)?;
            let echo = KrylovConfigEcho {
                alpha: lo,
                beta: hi,
                nc: o.nc,
                rule: o.rule,
                tol: o.tol,
                check_every: o.check_every,
                max_iter: o.max_iter,
                seed: o.seed,
            };
            RunRecord::new("rfkrylov", p.a.n(), &echo, &res, timings)
        }
    };
    if let Some(r) = reference {
        record.max_rel_error = Some(max_relative_error(&record.values, &r));
    }
    emit(&args.out, &(record.to_json() + "\n"))
}

fn cmd_compare(args: &CompareArgs) -> CliResult<()> {
    let p = load(&args.problem)?;
    if args.grid_nevb.0.is_empty() || args.grid_psi.0.is_empty() {
        return emit(&args.out, &grid_csv(&[]));
    }
    let (lo, hi, reference) = resolve_interval(&p, &args.interval, true)?;
    let reference = reference.expect("reference requested");
    let cfg = ddes_config(lo, hi, &args.opts);
    cfg.validate().map_err(|e| fail(2, e.to_string()))?;
    let dd = prepare(&p.a, &p.m, cfg.p, cfg.seed).map_err(from_solver)?;
    let cells = accuracy_grid(
        &cfg,
        &dd,
        &p.a,
        &p.m,
        &reference,
        &args.grid_nevb.0,
        &args.grid_psi.0,
    )
    .map_err(from_solver)?;
    emit(&args.out, &grid_csv(&cells))
}

#[derive(Serialize)]
struct PartitionStats {
    n: usize,
    p: usize,
    s: usize,
    s_over_n: f64,
    d: Vec<usize>,
    interface_per_subdomain: Vec<usize>,
    coupled_interface_per_subdomain: Vec<usize>,
}

fn cmd_partition_stats(args: &PartitionArgs) -> CliResult<()> {
    let p = load(&args.problem)?;
    let meta = rfddes::ddes::partition(&p.a, &p.m, args.p, args.seed)
        .map_err(|e| fail(4, format!("partition phase failed: {e}")))?;
    let stats = PartitionStats {
        n: meta.n(),
        p: meta.p,
        s: meta.s_total(),
        s_over_n: meta.s_total() as f64 / meta.n().max(1) as f64,
        d: meta.d.clone(),
        interface_per_subdomain: meta.s.clone(),
        coupled_interface_per_subdomain: (0..meta.p).map(|j| meta.nu(j)).collect(),
    };
    emit(
        &args.out,
        &(serde_json::to_string_pretty(&stats).expect("stats serialize") + "\n"),
    )
}

fn cmd_filter_plot(args: &FilterPlotArgs) -> CliResult<()> {
    let f = RationalFilter::new(args.alpha, args.beta, args.nc, args.rule)
        .map_err(|e| fail(2, e.to_string()))?;
    let (c, r) = (f.center(), f.radius());
    let lo = args.lo.unwrap_or(c - 3.0 * r);
    let hi = args.hi.unwrap_or(c + 3.0 * r);
    let mut out = String::from("x,rho\n");
    for (x, v) in f.sample(lo, hi, args.count, args.scaled) {
        let _ = writeln!(out, "{x:e},{v:e}");
    }
    emit(&args.out, &out)
}

#[derive(Serialize)]
struct Check {
    name: String,
    value: f64,
    limit: f64,
    pass: bool,
}

impl Check {
    fn new(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            value,
            limit,
            pass: value <= limit,
        }
    }
}

fn cmd_verify(args: &VerifyArgs) -> CliResult<()> {
    let (a, m) = match &args.a {
        Some(path) => {
            let pr = Problem {
                a: Some(path.clone()),
                m: args.m.clone(),
                mesh: None,
            };
            let l = load(&pr)?;
            (l.a, l.m)
        }
        None => random_grid_pencil(args.random.0, args.random.1, args.seed)
            .map_err(|e| fail(2, format!("cannot build the random pencil: {e}")))?,
    };
    let loaded = Loaded { a, m, mesh: None };
    let reference = dense_reference(&loaded)?;
    let (a, m) = (&loaded.a, &loaded.m);
    let n = a.n();
    let k = args.lowest.clamp(1, n);
    let v = &reference.values;
    let lo = v[0] - 0.5 * v.get(1).map_or(1.0, |x| x - v[0]).max(1e-12);
    let hi = if k < n {
        0.5 * (v[k - 1] + v[k])
    } else {
        v[k - 1] + 1.0
    };
    let filter = RationalFilter::new(lo, hi, args.nc, QuadratureRule::Midpoint)
        .map_err(|e| fail(2, e.to_string()))?;
    let dd = prepare(a, m, args.p, args.seed).map_err(from_solver)?;

    let (text, ok) = match args.suite {
        Suite::Identity => {
            let mut checks = vec![Check::new(
                "filtered-schur",
                oracle::filtered_schur_identity(&dd, &reference, &filter).map_err(from_solver)?,
                1e-9,
            )];
            for (l, z) in filter.poles.iter().enumerate() {
                let e = oracle::block_inverse_error(&dd, *z).map_err(from_solver)?;
                checks.push(Check::new(format!("block-inverse-pole-{l}"), e, 1e-9));
            }
            let gap = if n > 1 {
                0.5 * (v[0] + v[1])
            } else {
                v[0] - 1.0
            };
            let e = oracle::spectral_expansion_error(a, m, &reference, gap).map_err(from_solver)?;
            checks.push(Check::new("spectral-expansion", e, 1e-9));
            let ok = checks.iter().all(|c| c.pass);
            (
                serde_json::to_string_pretty(&checks).expect("checks serialize") + "\n",
                ok,
            )
        }
        Suite::Rank => {
            let inside = reference.inside(lo, hi);
            let ry = oracle::y_rank(&reference.y_matrix(&dd.meta, &inside)).map_err(from_solver)?;
            let rep = oracle::rank_filtered_schur(&dd, &filter).map_err(from_solver)?;
            #[derive(Serialize)]
            struct RankOut<'a> {
                y_rank: usize,
                filtered_rank: usize,
                s: usize,
                singular_values: &'a [f64],
            }
            let ok = ry <= rep.rank && rep.rank <= dd.s();
            let out = RankOut {
                y_rank: ry,
                filtered_rank: rep.rank,
                s: dd.s(),
                singular_values: &rep.singular_values,
            };
            (
                serde_json::to_string_pretty(&out).expect("rank serializes") + "\n",
                ok,
            )
        }
        Suite::Bounds => {
            let rep =
                oracle::theorem_bound_report(&dd, &reference, args.sigma, args.psi, args.kappa)
                    .map_err(from_solver)?;
            let bad = rep.violation_count();
            if bad > 0 {
                eprintln!("{bad} bound violations");
            }
            (rep.to_csv(), bad == 0)
        }
    };
    emit(&args.out, &text)?;
    if ok {
        Ok(())
    } else {
        Err(fail(8, "verification failed"))
    }
}

fn cmd_gen(nx: usize, ny: usize, out: &Option<PathBuf>) -> CliResult<()> {
    let a = gen_fd_laplacian(nx, ny).map_err(|e| fail(2, e.to_string()))?;
    let mut buf = Vec::new();
    write_matrix_market_to(&mut buf, &a)
        .map_err(|e| fail(7, format!("output phase failed: {e}")))?;
    emit(
        out,
        &String::from_utf8(buf).expect("matrix market is ASCII"),
    )
}

fn run(cli: Cli) -> CliResult<()> {
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| fail(2, format!("cannot configure {t} threads: {e}")))?;
    }
    match &cli.command {
        Command::Gen { nx, ny, out } => cmd_gen(*nx, *ny, out),
        Command::Solve(a) => cmd_solve(a),
        Command::Compare(a) => cmd_compare(a),
        Command::PartitionStats(a) => cmd_partition_stats(a),
        Command::FilterPlot(a) => cmd_filter_plot(a),
        Command::Verify(a) => cmd_verify(a),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}
