//! `teim`: snapshot generation, basis construction, point selection and the
//! approximation, reduced-order and timing studies.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use teim_core::approx::{build_deim_from_pod, time_online_all};
use teim_core::experiments::{
    build_allen_cahn_with, build_snapshot_tensor, AllenCahnConfig, ApproxStudy, Example1Config, Example2Config,
    MorResult, MorStudy, SnapshotConfig, ALLEN_CAHN_MATRIX_CONFIGS, ALLEN_CAHN_VECTOR_CONFIGS,
};
use teim_core::io::{
    grid_to_json, indices_to_json, load_basis, load_tensor, read_config, save_factor_basis, save_pod_basis,
    save_tensor, write_report, BasisFile, Method, ReportRow,
};
use teim_core::mor::simulate_full;
use teim_core::testing::{random_matrix, random_orthonormal, rng};
use teim_core::verify::run_all;
use teim_core::{
    center, deim, grid_of, hosvd_factors, standard_pod, teim, two_d_deim, FactorBasis, Matrix, PodBasis, Result,
    TeimApproximator, TeimError,
};

#[derive(Parser, Debug)]
#[command(
    name = "teim",
    version,
    about = "Tensor empirical interpolation for matrix-valued functions"
)]
struct Cli {
    /// Seed for randomized bases and inputs.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Worker threads for parallel sweeps (default: all cores).
    #[arg(long, global = true, env = "TEIM_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a snapshot tensor.
    Snapshots(SnapshotsArgs),
    /// Build factor (HOSVD) or POD bases from a snapshot tensor.
    Basis(BasisArgs),
    /// Select interpolation points for a basis.
    Points(PointsArgs),
    /// Relative average error sweep for the function examples.
    Approx(ApproxArgs),
    /// Reduced-order Allen-Cahn simulations.
    Mor(MorArgs),
    /// Median online time of TEIM (both orders) and DEIM on random data.
    Bench(BenchArgs),
    /// Run the seeded property suites.
    Verify,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Experiment {
    Ex1,
    Ex2,
    AllenCahn,
}

#[derive(Args, Debug)]
struct SnapshotsArgs {
    #[arg(long, value_enum)]
    experiment: Experiment,
    /// JSON experiment definition overriding the built-in defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Write the test set instead of the training set (ex1, ex2).
    #[arg(long)]
    test: bool,
    /// Also write the nonlinear-term snapshots here (allen-cahn).
    #[arg(long)]
    nonlinear: Option<PathBuf>,
    /// Grid size per axis (allen-cahn).
    #[arg(long)]
    n: Option<usize>,
}

#[derive(Args, Debug)]
struct BasisArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, required_unless_present = "pod")]
    m1: Option<usize>,
    #[arg(long, required_unless_present = "pod")]
    m2: Option<usize>,
    /// Subtract the snapshot mean first.
    #[arg(long)]
    center: bool,
    /// Standard POD of the vectorized snapshots instead of factor bases.
    #[arg(long, requires = "k")]
    pod: bool,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum PointMethod {
    Teim,
    #[value(name = "2ddeim")]
    TwoDDeim,
    Deim,
}

#[derive(Args, Debug)]
struct PointsArgs {
    #[arg(long)]
    basis: PathBuf,
    #[arg(long, value_enum)]
    method: PointMethod,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct ApproxArgs {
    #[arg(long, value_enum)]
    experiment: Experiment,
    /// JSON experiment definition overriding the built-in defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Factor sizes; without them every published configuration is run.
    #[arg(long, requires = "m2")]
    m1: Option<usize>,
    #[arg(long, requires = "m1")]
    m2: Option<usize>,
    /// POD modes for the vectorized methods (default m1 m2).
    #[arg(long, requires = "m1")]
    m: Option<usize>,
    /// Report file (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct MorArgs {
    #[arg(long, value_enum)]
    experiment: Experiment,
    /// JSON experiment definition overriding the built-in defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    k1: Option<usize>,
    #[arg(long)]
    k2: Option<usize>,
    #[arg(long)]
    m1: Option<usize>,
    #[arg(long)]
    m2: Option<usize>,
    /// Vector form: POD state basis of `k` modes.
    #[arg(long)]
    vector: bool,
    #[arg(long)]
    k: Option<usize>,
    /// POD-DEIM nonlinear modes (vector form).
    #[arg(long)]
    m: Option<usize>,
    /// Reduce the mean-subtracted trajectory.
    #[arg(long)]
    center: bool,
    /// Grid size per axis.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[arg(long, default_value_t = 400)]
    n: usize,
    #[arg(long, default_value_t = 5)]
    m1: usize,
    #[arg(long, default_value_t = 5)]
    m2: usize,
    #[arg(long, default_value_t = 200)]
    reps: usize,
}

fn usage(msg: impl Into<String>) -> TeimError {
    TeimError::InvalidArgument(msg.into())
}

fn writer(out: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(io::BufWriter::new(fs::File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn function_config(e: Experiment, file: Option<&Path>) -> Result<SnapshotConfig> {
    let config = match (e, file) {
        (Experiment::AllenCahn, _) => return Err(usage("allen-cahn is a dynamical model; use `mor`")),
        (_, Some(p)) => read_config(p)?,
        (Experiment::Ex1, None) => SnapshotConfig::Ex1(Example1Config::default()),
        (Experiment::Ex2, None) => SnapshotConfig::Ex2(Example2Config::default()),
    };
    let matches = matches!(
        (e, &config),
        (Experiment::Ex1, SnapshotConfig::Ex1(_)) | (Experiment::Ex2, SnapshotConfig::Ex2(_))
    );
    if !matches {
        return Err(usage(format!("config is for {}, not {e:?}", config.name())));
    }
    Ok(config)
}

fn allen_cahn(file: Option<&Path>, n: Option<usize>) -> Result<teim_core::SemiLinearMatrixModel> {
    let mut cfg: AllenCahnConfig = match file {
        Some(p) => read_config(p)?,
        None => AllenCahnConfig::default(),
    };
    if let Some(n) = n {
        cfg.n = n;
    }
    build_allen_cahn_with(&cfg)
}

fn snapshots(a: &SnapshotsArgs) -> Result<()> {
    if a.experiment == Experiment::AllenCahn {
        let fom = simulate_full(&allen_cahn(a.config.as_deref(), a.n)?)?;
        save_tensor(&a.out, &fom.states)?;
        if let Some(p) = &a.nonlinear {
            save_tensor(p, &fom.nonlinear)?;
        }
        return Ok(());
    }
    if a.nonlinear.is_some() {
        return Err(usage("--nonlinear only applies to allen-cahn"));
    }
    let config = function_config(a.experiment, a.config.as_deref())?;
    let t = if a.test {
        config.test_tensor()
    } else {
        build_snapshot_tensor(&config)
    };
    save_tensor(&a.out, &t)
}

fn basis(a: &BasisArgs) -> Result<()> {
    let mut t = load_tensor(&a.input)?;
    if a.center {
        t = center(&t).0;
    }
    if a.pod {
        let k = a.k.ok_or_else(|| usage("--pod needs --k"))?;
        save_pod_basis(&a.out, &standard_pod(&t.snapshot_matrix(), k)?)
    } else {
        let (m1, m2) = (a.m1.unwrap_or_default(), a.m2.unwrap_or_default());
        save_factor_basis(&a.out, &hosvd_factors(&t, m1, m2)?)
    }
}

fn points(a: &PointsArgs) -> Result<()> {
    let text = match (load_basis(&a.basis)?, a.method) {
        (BasisFile::Tensor(b), PointMethod::Teim) => {
            let trace = teim(&b.u1, &b.u2)?;
            grid_to_json(&grid_of(&trace)?, Some(&trace))?
        }
        (BasisFile::Tensor(b), PointMethod::TwoDDeim) => grid_to_json(&two_d_deim(&b.u1, &b.u2)?, None)?,
        (BasisFile::Pod(p), PointMethod::Deim) => indices_to_json(&deim(&p.v)?.0)?,
        (BasisFile::Pod(_), _) => return Err(usage("teim and 2ddeim need a factor basis (two records)")),
        (BasisFile::Tensor(_), PointMethod::Deim) => return Err(usage("deim needs a POD basis (one record)")),
    };
    fs::write(&a.out, text + "\n")?;
    Ok(())
}

fn approx(a: &ApproxArgs) -> Result<()> {
    let config = function_config(a.experiment, a.config.as_deref())?;
    let configs: Vec<(usize, usize, usize)> = match (a.m1, a.m2) {
        (Some(m1), Some(m2)) => vec![(m1, m2, a.m.unwrap_or(m1 * m2))],
        _ => config
            .table_configs()
            .iter()
            .map(|&(m1, m2)| (m1, m2, m1 * m2))
            .collect(),
    };
    let (train, test) = rayon::join(|| build_snapshot_tensor(&config), || config.test_tensor());
    let max1 = configs.iter().map(|c| c.0).max().unwrap_or(1);
    let max2 = configs.iter().map(|c| c.1).max().unwrap_or(1);
    let maxm = configs.iter().map(|c| c.2).max().unwrap_or(1);
    let study = ApproxStudy::with_sizes(&train, &test, (max1, max2), maxm)?;
    let results = configs
        .par_iter()
        .map(|&(m1, m2, m)| study.run_with(m1, m2, m))
        .collect::<Result<Vec<_>>>()?;
    let rows: Vec<ReportRow> = results.iter().flat_map(|r| r.rows(config.name())).collect();
    write_report(writer(a.out.as_deref())?, &rows)
}

fn mor_row(method: Method, sizes: [Option<usize>; 6], r: MorResult) -> ReportRow {
    let [m1, m2, m, k1, k2, k] = sizes;
    ReportRow {
        experiment: "allen-cahn".into(),
        method,
        m1,
        m2,
        m,
        k1,
        k2,
        k,
        xi: r.xi,
        wall_ns_per_eval: Some(r.wall_ns_per_step),
    }
}

fn mor(a: &MorArgs) -> Result<()> {
    if a.experiment != Experiment::AllenCahn {
        return Err(usage("mor supports --experiment allen-cahn only"));
    }
    let study = MorStudy::new(allen_cahn(a.config.as_deref(), a.n)?)?;
    let mut rows = Vec::new();
    if a.vector {
        // (k, POD-DEIM m, TEIM grid)
        type VectorRow = (usize, Option<usize>, Option<(usize, usize)>);
        let configs: Vec<VectorRow> = match a.k {
            Some(k) => vec![(k, a.m, a.m1.zip(a.m2))],
            None if a.m.is_none() && a.m1.is_none() && a.m2.is_none() => ALLEN_CAHN_VECTOR_CONFIGS
                .iter()
                .map(|&(k, m, m1, m2)| (k, Some(m), Some((m1, m2))))
                .collect(),
            None => return Err(usage("--vector with sizes needs --k")),
        };
        for (k, m, grid) in configs {
            if m.is_none() && grid.is_none() {
                return Err(usage("--vector needs --m, or --m1 and --m2"));
            }
            if let Some(m) = m {
                let r = study.pod_deim(k, m, a.center)?;
                rows.push(mor_row(Method::Deim, [None, None, Some(m), None, None, Some(k)], r));
            }
            if let Some((m1, m2)) = grid {
                let r = study.teim_vector(k, m1, m2, a.center)?;
                rows.push(mor_row(
                    Method::Teim,
                    [Some(m1), Some(m2), None, None, None, Some(k)],
                    r,
                ));
            }
        }
    } else {
        let given = [a.k1, a.k2, a.m1, a.m2];
        let configs: Vec<(usize, usize, usize, usize)> = match given {
            [Some(k1), Some(k2), Some(m1), Some(m2)] => vec![(k1, k2, m1, m2)],
            [None, None, None, None] => ALLEN_CAHN_MATRIX_CONFIGS.to_vec(),
            _ => return Err(usage("matrix form needs all of --k1 --k2 --m1 --m2, or none")),
        };
        for (k1, k2, m1, m2) in configs {
            let r = study.teim_matrix(k1, k2, m1, m2, a.center)?;
            rows.push(mor_row(
                Method::Teim,
                [Some(m1), Some(m2), None, Some(k1), Some(k2), None],
                r,
            ));
        }
    }
    write_report(writer(a.out.as_deref())?, &rows)
}

fn bench(a: &BenchArgs, seed: u64) -> Result<()> {
    let mut r = rng(seed);
    let basis = FactorBasis::from_factors(
        random_orthonormal(&mut r, a.n, a.m1),
        random_orthonormal(&mut r, a.n, a.m2),
    )?;
    let teim = TeimApproximator::build(&basis, &two_d_deim(&basis.u1, &basis.u2)?)?;
    let deim = build_deim_from_pod(&PodBasis::from_columns(random_orthonormal(
        &mut r,
        a.n * a.n,
        a.m1 * a.m2,
    ))?)?;
    let stream: Vec<Matrix> = (0..8).map(|_| random_matrix(&mut r, a.n, a.n)).collect();
    let t = time_online_all(&teim, &deim, &stream, a.reps)?;
    let mut w = io::stdout().lock();
    writeln!(w, "method,n,m1,m2,m,median_ns_per_eval")?;
    writeln!(w, "teim_left_first,{},{},{},,{:.0}", a.n, a.m1, a.m2, t.teim_left_first)?;
    writeln!(
        w,
        "teim_right_first,{},{},{},,{:.0}",
        a.n, a.m1, a.m2, t.teim_right_first
    )?;
    writeln!(w, "deim,{},,,{},{:.0}", a.n, a.m1 * a.m2, t.deim)?;
    eprintln!(
        "preferred order {:?}; DEIM/TEIM ratio {:.2}",
        teim.direction(),
        t.deim / t.teim(teim.direction())
    );
    Ok(())
}

fn verify(seed: u64) -> Result<bool> {
    let outcomes = run_all(seed)?;
    let mut w = io::stdout().lock();
    for o in &outcomes {
        writeln!(
            w,
            "{:<15} {} ({})",
            o.name,
            if o.passed { "PASS" } else { "FAIL" },
            o.detail
        )?;
    }
    Ok(outcomes.iter().all(|o| o.passed))
}

fn run(cli: &Cli) -> Result<ExitCode> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(usage("thread count must be positive"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| usage(format!("thread pool: {e}")))?;
    }
    match &cli.command {
        Command::Snapshots(a) => snapshots(a)?,
        Command::Basis(a) => basis(a)?,
        Command::Points(a) => points(a)?,
        Command::Approx(a) => approx(a)?,
        Command::Mor(a) => mor(a)?,
        Command::Bench(a) => bench(a, cli.seed)?,
        Command::Verify => {
            if !verify(cli.seed)? {
                return Ok(ExitCode::from(2));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 2 } else { 1 })
        }
    }
}
