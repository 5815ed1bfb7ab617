use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use ctmg_cli::bench::{run_benchmark, write_csv, write_traces, BenchConfig};
use ctmg_cli::config::RunConfig;
use ctmg_cli::oracle::{run_oracle, OracleOptions};
use ctmg_cli::png_io::{load_any, save_png};
use ctmg_cli::report::RunReport;
use ctmg_cli::scenes::ImageSource;
use ctmg_core::eten;
use ctmg_core::multigrid::EdgeThreshold;
use ctmg_core::{degrade, Method, NoiseSpec, RestorationReport, SmootherKind};

#[derive(Parser)]
#[command(name = "ctmg", version, about = "Cascadic tensor multigrid restoration of blurred color images")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Blur an image with a 3D Gaussian and add uniform noise.
    Blur(BlurArgs),
    /// Restore a degraded image.
    Restore(RestoreArgs),
    /// Sweep images x sigmas x methods x smoothers into a CSV.
    Benchmark(BenchArgs),
    /// Run the built-in consistency checks.
    Oracle {
        /// Nudge one kernel tap so the blur check must fail.
        #[arg(long, hide = true)]
        perturb_kernel: bool,
    },
}

#[derive(Args)]
struct BlurArgs {
    /// PNG path or `synth:<name>[:<size>]`.
    #[arg(long)]
    input: String,
    #[arg(long, default_value_t = 0.9)]
    sigma: f64,
    #[arg(long)]
    radius: Option<usize>,
    #[arg(long, default_value_t = 0.001)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// The image sides must be divisible by 2^(levels - 1).
    #[arg(long, default_value_t = 4)]
    levels: usize,
    #[arg(long)]
    out_png: Option<PathBuf>,
    #[arg(long)]
    out_eten: Option<PathBuf>,
    /// Also write the undegraded input as PNG.
    #[arg(long)]
    out_reference: Option<PathBuf>,
}

#[derive(Args)]
struct PmArgs {
    /// Diffusion time step.
    #[arg(long, default_value_t = 0.25)]
    tau: f64,
    /// Fixed edge threshold k (overrides --pm-k-rel).
    #[arg(long)]
    pm_k: Option<f64>,
    /// Edge threshold as a fraction of the per-channel max gradient.
    #[arg(long, default_value_t = 0.1)]
    pm_k_rel: f64,
    #[arg(long, default_value_t = 10)]
    pm_iters: usize,
}

#[derive(Args)]
struct RestoreArgs {
    #[arg(long, default_value = "ctmg")]
    method: Method,
    #[arg(long, default_value = "cr")]
    smoother: SmootherKind,
    #[arg(long, default_value_t = 4)]
    levels: usize,
    /// Degraded image, `.eten` (exact) or PNG.
    #[arg(long)]
    input: PathBuf,
    /// Original image for PSNR and RE.
    #[arg(long)]
    reference: Option<PathBuf>,
    #[arg(long, default_value_t = 0.9)]
    sigma: f64,
    #[arg(long)]
    radius: Option<usize>,
    #[arg(long)]
    out_png: Option<PathBuf>,
    #[arg(long)]
    out_eten: Option<PathBuf>,
    /// JSON report; a text copy is written next to it with a `.txt` extension.
    #[arg(long)]
    report: Option<PathBuf>,
    #[command(flatten)]
    pm: PmArgs,
    #[arg(long, default_value_t = 1)]
    m_star: u32,
    #[arg(long, default_value_t = 1.0)]
    m0: f64,
    #[arg(long, default_value_t = 4.0)]
    beta: f64,
    #[arg(long, default_value_t = 0.5)]
    eps0: f64,
    /// Baseline stopping tolerance.
    #[arg(long, default_value_t = 1e-6)]
    rel_tol: f64,
    #[arg(long, default_value_t = 2000)]
    max_iters: usize,
    /// Baseline runs exactly --max-iters sweeps.
    #[arg(long)]
    fixed_iters: bool,
}

#[derive(Args)]
struct BenchArgs {
    /// Comma-separated PNG paths or `synth:<name>[:<size>]` entries.
    #[arg(long, value_delimiter = ',', default_value = "synth:shapes,synth:stripes,synth:rings")]
    images: Vec<String>,
    #[arg(long, value_delimiter = ',', default_value = "0.7,0.8,0.9")]
    sigmas: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "baseline,ctmg,ectmg")]
    methods: Vec<Method>,
    #[arg(long, value_delimiter = ',', default_value = "bicg,cgs,cr")]
    smoothers: Vec<SmootherKind>,
    #[arg(long, default_value_t = 4)]
    levels: usize,
    #[arg(long, default_value_t = 0.001)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    pm: PmArgs,
    #[arg(long, default_value_t = 1e-6)]
    rel_tol: f64,
    /// Run the baseline for exactly this many sweeps instead of to --rel-tol.
    #[arg(long)]
    baseline_iters: Option<usize>,
    #[arg(long)]
    out: PathBuf,
    /// Per-iteration residual traces.
    #[arg(long)]
    traces: Option<PathBuf>,
}

impl PmArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        cfg.pm.tau = self.tau;
        cfg.pm.iters = self.pm_iters;
        cfg.pm.threshold = match self.pm_k {
            Some(k) => EdgeThreshold::Fixed(k),
            None => EdgeThreshold::RelativeToMaxGradient(self.pm_k_rel),
        };
    }
}

fn blur(a: BlurArgs) -> Result<()> {
    let src: ImageSource = a.input.parse()?;
    let f = src.load()?;
    let d = f.dims();
    let step = 1usize << a.levels.saturating_sub(1).min(30);
    if d.rows % step != 0 || d.cols % step != 0 {
        bail!("{}x{} is not divisible by 2^{} = {step}", d.rows, d.cols, a.levels.saturating_sub(1));
    }
    let cfg = RunConfig {
        sigma: a.sigma,
        radius: a.radius,
        noise: a.noise,
        seed: a.seed,
        ..RunConfig::default()
    };
    let g = degrade(&f, &cfg.psf()?, &NoiseSpec::new(a.noise, a.seed)?);
    if let Some(p) = &a.out_eten {
        eten::save_image(p, &g).with_context(|| format!("writing {}", p.display()))?;
    }
    if let Some(p) = &a.out_png {
        save_png(p, &g)?;
    }
    if let Some(p) = &a.out_reference {
        save_png(p, &f)?;
    }
    println!("blurred {src} ({}) with sigma {} and noise {} (seed {})", d, a.sigma, a.noise, a.seed);
    Ok(())
}

fn restore(a: RestoreArgs) -> Result<()> {
    let mut cfg = RunConfig {
        input: Some(a.input.clone()),
        reference: a.reference.clone(),
        sigma: a.sigma,
        radius: a.radius,
        noise: 0.0,
        method: a.method,
        smoother: a.smoother,
        levels: a.levels,
        m_star: a.m_star,
        m0: a.m0,
        beta: a.beta,
        eps0: a.eps0,
        rel_tol: a.rel_tol,
        max_iters: a.max_iters,
        fixed_iters: a.fixed_iters,
        out_png: a.out_png.clone(),
        out_eten: a.out_eten.clone(),
        report: a.report.clone(),
        ..RunConfig::default()
    };
    a.pm.apply(&mut cfg);
    cfg.validate()?;
    let g = load_any(&a.input)?;
    let reference = a.reference.as_deref().map(load_any).transpose()?;
    let out = cfg.restore(&g, false)?;
    let result = RestorationReport::assemble(cfg.method, cfg.smoother, cfg.sigma, &out, reference.as_ref())?;
    if let Some(p) = &a.out_png {
        save_png(p, &out.restored)?;
    }
    if let Some(p) = &a.out_eten {
        eten::save_image(p, &out.restored).with_context(|| format!("writing {}", p.display()))?;
    }
    let report = RunReport::new(cfg, result);
    let text = report.to_text();
    if let Some(p) = &a.report {
        std::fs::write(p, report.to_json()?).with_context(|| format!("writing {}", p.display()))?;
        let txt = p.with_extension("txt");
        std::fs::write(&txt, &text).with_context(|| format!("writing {}", txt.display()))?;
    }
    print!("{text}");
    Ok(())
}

fn benchmark(a: BenchArgs) -> Result<()> {
    let mut run = RunConfig {
        levels: a.levels,
        noise: a.noise,
        seed: a.seed,
        rel_tol: a.rel_tol,
        ..RunConfig::default()
    };
    if let Some(m) = a.baseline_iters {
        run.max_iters = m;
        run.fixed_iters = true;
    }
    a.pm.apply(&mut run);
    let cfg = BenchConfig {
        images: a.images,
        sigmas: a.sigmas,
        methods: a.methods,
        smoothers: a.smoothers,
        run,
    };
    let rows = run_benchmark(&cfg);
    let file = File::create(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    write_csv(BufWriter::new(file), &rows)?;
    if let Some(p) = &a.traces {
        let file = File::create(p).with_context(|| format!("creating {}", p.display()))?;
        write_traces(BufWriter::new(file), &rows)?;
    }
    let failed = rows.iter().filter(|r| r.error.is_some()).count();
    println!("{} rows written to {} ({failed} failed)", rows.len(), a.out.display());
    let mut seen = std::collections::BTreeSet::new();
    for e in rows.iter().filter_map(|r| r.error.as_deref()) {
        if seen.insert(e) {
            eprintln!("error: {e}");
        }
    }
    Ok(())
}

fn oracle(perturb_kernel: bool) -> bool {
    let results = run_oracle(&OracleOptions { perturb_kernel });
    for r in &results {
        println!("{} {:<32} {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    println!("{} checks, {failed} failed", results.len());
    failed == 0
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.command {
        Command::Blur(a) => blur(a),
        Command::Restore(a) => restore(a),
        Command::Benchmark(a) => benchmark(a),
        Command::Oracle { perturb_kernel } => {
            return if oracle(perturb_kernel) { ExitCode::SUCCESS } else { ExitCode::FAILURE };
        }
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
