use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use pluriperiod_core::fuchsian::{generators_csv, octagon_group, octagon_svg};
use pluriperiod_core::suite::{run_suite, RunConfig, Suite};

#[derive(Parser)]
#[command(name = "pluriperiod", version, about = "Numerical checks of period relations for pluricanonical forms")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a verification suite and write a JSON report.
    Run(RunArgs),
    /// Write the genus-2 fundamental octagon as SVG and its generators as CSV.
    ExportOctagon {
        #[arg(long)]
        svg: PathBuf,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// bol, antiderivative, periods, cocycle, cohomology, bilinear,
    /// edge-moments, cross-weight, classical or all.
    #[arg(long)]
    suite: Option<String>,
    /// JSON configuration; command-line flags override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Report path; the report goes to stdout when neither this nor the
    /// configuration names one.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for parallel kernels.
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    radius: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    m: Option<i32>,
    #[arg(long, allow_negative_numbers = true)]
    n: Option<i32>,
    /// Comma-separated seed exponents.
    #[arg(long, value_delimiter = ',')]
    nu: Option<Vec<u32>>,
    #[arg(long)]
    tol: Option<f64>,
    /// Base point as `re,im`.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    tau1: Option<Vec<f64>>,
    #[arg(long)]
    cap: Option<usize>,
    #[arg(long)]
    lambda: Option<f64>,
    /// Six comma-separated real branch points.
    #[arg(long = "branch-points", value_delimiter = ',', allow_negative_numbers = true)]
    branch_points: Option<Vec<f64>>,
}

impl RunArgs {
    fn config(&self) -> Result<RunConfig> {
        let mut config = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
            }
            None => RunConfig::default(),
        };
        if let Some(s) = &self.suite {
            config.suite = s.parse::<Suite>()?;
        }
        if let Some(out) = &self.out {
            config.out = Some(out.clone());
        }
        if let Some(r) = self.radius {
            config.radius = r;
        }
        if let Some(m) = self.m {
            config.m = m;
        }
        if let Some(n) = self.n {
            config.n = n;
        }
        if let Some(nu) = &self.nu {
            config.nu = nu.clone();
        }
        if let Some(tol) = self.tol {
            config.tol = tol;
        }
        if let Some(t) = &self.tau1 {
            let [re, im] = t[..] else { bail!("--tau1 takes two numbers, got {}", t.len()) };
            config.tau1 = Some([re, im]);
        }
        if let Some(cap) = self.cap {
            config.cap = cap;
        }
        if let Some(l) = self.lambda {
            config.lambda = l;
        }
        if let Some(b) = &self.branch_points {
            let points: [f64; 6] = b[..].try_into().map_err(|_| anyhow::anyhow!("--branch-points takes six numbers, got {}", b.len()))?;
            config.branch_points = Some(points);
        }
        Ok(config)
    }
}

fn run(args: RunArgs) -> Result<bool> {
    if let Some(n) = args.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let config = args.config()?;
    let report = run_suite(&config)?;
    let json = report.to_json();
    match &config.out {
        Some(path) => fs::write(path, json + "\n").with_context(|| format!("writing {}", path.display()))?,
        None => println!("{json}"),
    }
    let failed: Vec<_> = report.failures().collect();
    for f in &failed {
        eprintln!("FAIL [{}] {}", f.suite, serde_json::to_string(&f.record)?);
    }
    eprintln!(
        "{} records, {} failed, {:.1} s",
        report.records.len(),
        failed.len(),
        report.wall_clock_seconds
    );
    Ok(report.pass)
}

fn export(svg: PathBuf, csv: Option<PathBuf>) -> Result<()> {
    let (group, polygon) = octagon_group()?;
    fs::write(&svg, octagon_svg(&polygon)).with_context(|| format!("writing {}", svg.display()))?;
    if let Some(csv) = csv {
        fs::write(&csv, generators_csv(&group)).with_context(|| format!("writing {}", csv.display()))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let outcome = match Cli::parse().command {
        Command::Run(args) => run(args),
        Command::ExportOctagon { svg, csv } => export(svg, csv).map(|()| true),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
