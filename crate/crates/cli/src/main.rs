use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use l2disc::discretize::{
    condition_e_constant, discretize_continuous, discretize_equal_weight, discretize_weighted,
    verify_certificate, verify_continuous, DiscretizationCertificate, DiscretizeConfig,
    SampledSystem, Verification,
};
use l2disc::io::{self, CertificateDocument, RunSettings};
use l2disc::systems::{make_system, SystemDescriptor, TrigSystem};
use l2disc::{Error, Field, Strategy};

/// Certified sampling discretization of L2 norms.
#[derive(Parser, Debug)]
#[command(name = "l2disc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a built-in system and write it as CSV plus a JSON header.
    Gen {
        #[command(flatten)]
        generator: Generator,
        #[arg(long)]
        out: PathBuf,
    },
    /// Nikol'skii constant t of a sampled orthonormal system.
    Nikolskii {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Equal-weight point selection.
    Select {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        continuous: Continuous,
        #[command(flatten)]
        run: RunFlags,
    },
    /// Weighted point selection.
    SelectWeighted {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        run: RunFlags,
    },
    /// Recompute a certificate's constants from the system (exit 2 on mismatch).
    Verify {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        continuous: Continuous,
        #[arg(long)]
        cert: PathBuf,
    },
    /// Equal-weight selection over a range of N, summarized as CSV.
    Sweep {
        #[arg(long, value_enum)]
        kind: Kind,
        /// Comma-separated dimensions.
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<usize>,
        /// Number of points (fixed across the sweep).
        #[arg(long, conflicts_with = "m_per_n")]
        m: Option<usize>,
        /// Number of points as a multiple of N.
        #[arg(long)]
        m_per_n: Option<usize>,
        #[arg(long, value_enum, default_value = "real")]
        field: FieldArg,
        #[command(flatten)]
        run: RunFlags,
    },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Kind {
    Trig,
    Dft,
    Walsh,
    RandomOrthonormal,
    Indicator,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum FieldArg {
    Real,
    Complex,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum StrategyArg {
    Auto,
    Exhaustive,
    Randomized,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum ContinuousKind {
    Trig,
}

#[derive(Args, Debug)]
struct Generator {
    #[arg(long, value_enum)]
    kind: Kind,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    m: usize,
    /// Seed for random_orthonormal.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Field for random_orthonormal.
    #[arg(long, value_enum, default_value = "real")]
    field: FieldArg,
}

#[derive(Args, Debug)]
struct Input {
    /// System CSV (with its JSON header next to it).
    #[arg(long, conflicts_with = "kind")]
    system: Option<PathBuf>,
    /// Built-in system instead of a file.
    #[arg(long, value_enum)]
    kind: Option<Kind>,
    #[arg(long, requires = "kind")]
    n: Option<usize>,
    #[arg(long, requires = "kind")]
    m: Option<usize>,
    #[arg(long, value_enum, requires = "kind", default_value = "real")]
    field: FieldArg,
    /// Seed of a random_orthonormal input.
    #[arg(long, requires = "kind", default_value_t = 0)]
    system_seed: u64,
}

#[derive(Args, Debug)]
struct Continuous {
    /// Continuous system on a measure space instead of a sampled one.
    #[arg(long, value_enum, conflicts_with_all = ["system", "kind"])]
    continuous: Option<ContinuousKind>,
    /// Dimension of the continuous system.
    #[arg(long = "dim", requires = "continuous")]
    dim: Option<usize>,
}

#[derive(Args, Debug)]
struct RunFlags {
    /// Required with the randomized strategy.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value = "auto")]
    strategy: StrategyArg,
    #[arg(long, default_value_t = l2disc::partition::DEFAULT_BUDGET)]
    budget: usize,
    /// Gram deviation target of the sampling stage (continuous input), or
    /// the halving parameter theta N / M (sampled input).
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long, conflicts_with = "delta")]
    theta: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl FieldArg {
    fn field(self) -> Field {
        match self {
            FieldArg::Real => Field::Real,
            FieldArg::Complex => Field::Complex,
        }
    }
}

fn descriptor(kind: Kind, n: usize, m: usize, seed: u64, field: Field) -> SystemDescriptor {
    match kind {
        Kind::Trig => SystemDescriptor::Trig { n, m },
        Kind::Dft => SystemDescriptor::Dft { n, m },
        Kind::Walsh => SystemDescriptor::Walsh { n, m },
        Kind::RandomOrthonormal => SystemDescriptor::RandomOrthonormal { n, m, seed, field },
        Kind::Indicator => SystemDescriptor::Indicator { n, m },
    }
}

fn source_label(d: &SystemDescriptor) -> String {
    match d {
        SystemDescriptor::File { path } => format!("file {}", path.display()),
        SystemDescriptor::RandomOrthonormal { n, m, seed, field } => {
            format!("random_orthonormal n={n} m={m} seed={seed} field={}", field.as_str())
        }
        SystemDescriptor::Trig { n, m }
        | SystemDescriptor::Dft { n, m }
        | SystemDescriptor::Walsh { n, m }
        | SystemDescriptor::Indicator { n, m } => format!("{} n={n} m={m}", d.name()),
    }
}

impl Input {
    fn descriptor(&self) -> Result<Option<SystemDescriptor>> {
        if let Some(p) = &self.system {
            return Ok(Some(SystemDescriptor::File { path: p.clone() }));
        }
        let Some(kind) = self.kind else {
            return Ok(None);
        };
        let (Some(n), Some(m)) = (self.n, self.m) else {
            bail!("--kind needs both --n and --m");
        };
        Ok(Some(descriptor(kind, n, m, self.system_seed, self.field.field())))
    }

    fn load(&self) -> Result<(SampledSystem, String)> {
        let d = self
            .descriptor()?
            .context("no input: pass --system <csv> or --kind with --n and --m")?;
        let s = make_system(&d).with_context(|| format!("loading {}", source_label(&d)))?;
        Ok((s, source_label(&d)))
    }
}

impl Continuous {
    fn spec(&self) -> Result<Option<(TrigSystem, String)>> {
        match self.continuous {
            None => Ok(None),
            Some(ContinuousKind::Trig) => {
                let n = self.dim.context("--continuous trig needs --dim")?;
                Ok(Some((TrigSystem::with_dim(n)?, format!("continuous trig n={n}"))))
            }
        }
    }
}

impl RunFlags {
    fn config(&self) -> Result<DiscretizeConfig> {
        let strategy = match self.strategy {
            StrategyArg::Auto => Strategy::Auto,
            StrategyArg::Exhaustive => Strategy::Exhaustive,
            StrategyArg::Randomized => Strategy::Randomized,
        };
        if strategy == Strategy::Randomized && self.seed.is_none() {
            bail!("--strategy randomized needs --seed");
        }
        let mut cfg = DiscretizeConfig::with_seed(self.seed.unwrap_or(0));
        cfg.oracle.strategy = strategy;
        cfg.oracle.budget = self.budget;
        cfg.theta = self.theta;
        Ok(cfg)
    }

    fn settings(&self, command: &str, cfg: &DiscretizeConfig) -> RunSettings {
        RunSettings {
            command: command.into(),
            seed: cfg.oracle.seed,
            strategy: cfg.oracle.strategy,
            budget: cfg.oracle.budget,
            theta: self.theta,
            delta: self.delta,
        }
    }
}

fn print_certificate(c: &DiscretizationCertificate) {
    println!("kind      {:?}", c.kind);
    println!("points    m = {} (budget {})", c.m, c.budget);
    println!("c         {}", c.constants.lower);
    println!("C         {}", c.constants.upper);
    println!("C/c       {}", c.ratio());
}

fn emit(doc: &CertificateDocument, out: &Option<PathBuf>) -> Result<()> {
    print_certificate(&doc.certificate);
    if let Some(p) = out {
        io::save_certificate(doc, p).with_context(|| format!("writing {}", p.display()))?;
        println!("wrote     {}", p.display());
    }
    Ok(())
}

fn select(input: &Input, continuous: &Continuous, run: &RunFlags) -> Result<()> {
    let mut cfg = run.config()?;
    if let Some((spec, label)) = continuous.spec()? {
        if let Some(d) = run.delta {
            cfg.monte_carlo.delta = d;
        }
        let cert = discretize_continuous(&spec, &cfg)?;
        let doc = CertificateDocument::new(cert, run.settings("select", &cfg), label);
        return emit(&doc, &run.out);
    }
    let (system, label) = input.load()?;
    if let Some(d) = run.delta {
        cfg.theta = Some(d * system.m() as f64 / system.n() as f64);
    }
    let cert = discretize_equal_weight(&system, &cfg)?;
    emit(&CertificateDocument::new(cert, run.settings("select", &cfg), label), &run.out)
}

fn select_weighted(input: &Input, run: &RunFlags) -> Result<()> {
    if run.theta.is_some() || run.delta.is_some() {
        bail!("select-weighted fixes theta itself; drop --theta/--delta");
    }
    let cfg = run.config()?;
    let (system, label) = input.load()?;
    let cert = discretize_weighted(&system, &cfg)?;
    emit(
        &CertificateDocument::new(cert, run.settings("select-weighted", &cfg), label),
        &run.out,
    )
}

fn nikolskii(input: &Input, out: &Option<PathBuf>) -> Result<()> {
    let (system, _) = input.load()?;
    let r = condition_e_constant(&system)?;
    println!("N         {}", r.n);
    println!("M         {}", r.m);
    println!("t         {}", r.t);
    println!("t^2       {}", r.t_squared);
    println!("argmax    {} at {:?}", r.argmax, r.argmax_point);
    if let Some(p) = out {
        fs::write(p, serde_json::to_string_pretty(&r)? + "\n")?;
        println!("wrote     {}", p.display());
    }
    Ok(())
}

enum Outcome {
    Passed,
    Failed,
}

fn report(v: &Verification) -> Outcome {
    println!("stored      c = {}  C = {}", v.stored.lower, v.stored.upper);
    println!("recomputed  c = {}  C = {}", v.recomputed.lower, v.recomputed.upper);
    if v.passed() {
        println!("PASS");
        Outcome::Passed
    } else {
        for p in &v.problems {
            println!("problem: {p}");
        }
        println!("FAIL");
        Outcome::Failed
    }
}

fn verify(input: &Input, continuous: &Continuous, cert: &Path) -> Result<Outcome> {
    let doc = io::load_certificate(cert).with_context(|| format!("reading {}", cert.display()))?;
    if doc.fingerprint != doc.certificate.system_fingerprint {
        println!("problem: document fingerprint differs from the certificate's");
        println!("FAIL");
        return Ok(Outcome::Failed);
    }
    let result = if let Some((spec, _)) = continuous.spec()? {
        verify_continuous(&doc.certificate, &spec)
    } else {
        let (system, _) = input.load()?;
        verify_certificate(&doc.certificate, &system)
    };
    match result {
        Ok(v) => Ok(report(&v)),
        Err(e @ Error::MappingMismatch(_)) => {
            println!("problem: {e}");
            println!("FAIL");
            Ok(Outcome::Failed)
        }
        Err(e) => Err(e.into()),
    }
}

fn sweep(
    kind: Kind,
    ns: &[usize],
    m: Option<usize>,
    m_per_n: Option<usize>,
    field: FieldArg,
    run: &RunFlags,
) -> Result<()> {
    let cfg = run.config()?;
    let mut rows = vec!["N,M,t,m,m_over_N,c,C,ratio,seed".to_string()];
    println!("{:>5} {:>7} {:>8} {:>6} {:>9} {:>12} {:>12} {:>9}", "N", "M", "t", "m", "m/N", "c", "C", "C/c");
    for &n in ns {
        let mm = match (m, m_per_n) {
            (Some(m), _) => m,
            (None, Some(k)) => k * n,
            (None, None) => bail!("sweep needs --m or --m-per-n"),
        };
        let system = make_system(&descriptor(kind, n, mm, cfg.oracle.seed, field.field()))?;
        let mut cfg_n = cfg;
        if let Some(d) = run.delta {
            cfg_n.theta = Some(d * mm as f64 / n as f64);
        }
        let t = condition_e_constant(&system)?.t;
        let c = discretize_equal_weight(&system, &cfg_n).with_context(|| format!("N = {n}"))?;
        let ratio_n = c.m as f64 / n as f64;
        println!(
            "{:>5} {:>7} {:>8.5} {:>6} {:>9.3} {:>12.6e} {:>12.6e} {:>9.3}",
            n, mm, t, c.m, ratio_n, c.constants.lower, c.constants.upper, c.ratio()
        );
        rows.push(format!(
            "{n},{mm},{t:?},{},{ratio_n:?},{:?},{:?},{:?},{}",
            c.m,
            c.constants.lower,
            c.constants.upper,
            c.ratio(),
            cfg.oracle.seed
        ));
    }
    if let Some(p) = &run.out {
        fs::write(p, rows.join("\n") + "\n")?;
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn run(cli: Cli) -> Result<Outcome> {
    match &cli.command {
        Command::Gen { generator: g, out } => {
            let d = descriptor(g.kind, g.n, g.m, g.seed, g.field.field());
            let s = make_system(&d)?;
            io::save_system(&s, out).with_context(|| format!("writing {}", out.display()))?;
            println!("{} -> {} (+ {})", source_label(&d), out.display(), io::sidecar_path(out).display());
        }
        Command::Nikolskii { input, out } => nikolskii(input, out)?,
        Command::Select { input, continuous, run } => select(input, continuous, run)?,
        Command::SelectWeighted { input, run } => select_weighted(input, run)?,
        Command::Verify { input, continuous, cert } => return verify(input, continuous, cert),
        Command::Sweep { kind, n, m, m_per_n, field, run } => sweep(*kind, n, *m, *m_per_n, *field, run)?,
    }
    Ok(Outcome::Passed)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(Outcome::Passed) => ExitCode::SUCCESS,
        Ok(Outcome::Failed) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
