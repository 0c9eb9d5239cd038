mod io;
mod svg;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use twistor_core::checks::{run_suite, Check, SuiteConfig, SuiteOutput};
use twistor_core::discriminant::discriminant_locus_polys;
use twistor_core::lines::{fiber_images_coplanar_or_cospherical, find_twistor_fibers, FiberSearchConfig, TwistorFiberSet};
use twistor_core::numeric::LocusSystem;
use twistor_core::topology::{reconstruct, TopologyConfig, TopologyReport};
use twistor_core::tracer::{slice, slices, SeedCharts, TraceConfig};

use io::{configured, load_surface, polys_for, write_csv, write_json, write_polys, CurveDoc, RunManifest};
use svg::View;

const FLAGSHIP: &str = "preset:transformed-fermat";
const SECTIONS: [&str; 4] = ["trace", "topology", "fibers", "suite"];

#[derive(Parser, Debug)]
#[command(name = "twistor", version, about = "Discriminant loci of cubic surfaces under the twistor fibration")]
struct Cli {
    /// JSON file with config overrides, in sections `trace`, `topology`, `fibers` and `suite`.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for randomized sampling.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compute the real polynomials P, Q cutting out the discriminant locus.
    Discriminant {
        #[arg(long, default_value = FLAGSHIP)]
        surface: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Find the twistor fibers contained in a surface.
    Fibers {
        #[arg(long, default_value = FLAGSHIP)]
        surface: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Trace the slice x4 = t of the discriminant locus.
    Slice {
        #[arg(long, default_value = FLAGSHIP)]
        surface: String,
        /// Directory with P.json and Q.json; skips the discriminant.
        #[arg(long)]
        polys: Option<PathBuf>,
        #[arg(long, allow_hyphen_values = true)]
        t: f64,
        #[arg(long, value_enum, default_value_t = ChartArg::Atlas)]
        chart: ChartArg,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Slices at evenly spaced times, with pictures from above and from the side.
    Sweep {
        #[arg(long, default_value = FLAGSHIP)]
        surface: String,
        #[arg(long)]
        polys: Option<PathBuf>,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        t0: f64,
        #[arg(long, default_value_t = 0.1, allow_hyphen_values = true)]
        t1: f64,
        #[arg(long, default_value_t = 8)]
        frames: usize,
        #[arg(long, value_enum, default_value_t = ChartArg::Atlas)]
        chart: ChartArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Reconstruct the topology of the discriminant locus from a slice sweep.
    Topology {
        /// Surface whose twistor fibers are matched against the pinch points;
        /// defaults to the flagship unless --polys is given.
        #[arg(long)]
        surface: Option<String>,
        #[arg(long)]
        polys: Option<PathBuf>,
        #[arg(long, allow_hyphen_values = true)]
        t0: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        t1: Option<f64>,
        #[arg(long)]
        frames: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the verification suite; exits nonzero if any check fails.
    Verify {
        /// Criteria to run, e.g. `--only 2,5`.
        #[arg(long, value_delimiter = ',')]
        only: Vec<u8>,
        /// Check P.json and Q.json in this directory against a fresh computation.
        #[arg(long)]
        polys: Option<PathBuf>,
        /// Surface the stored polynomials belong to.
        #[arg(long, default_value = FLAGSHIP)]
        surface: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Draw slice JSON files as SVG.
    Render {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Execute a JSON run manifest.
    Run { manifest: PathBuf },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ChartArg {
    Atlas,
    Standard,
    Inverted,
}

impl From<ChartArg> for SeedCharts {
    fn from(c: ChartArg) -> Self {
        match c {
            ChartArg::Atlas => SeedCharts::Atlas,
            ChartArg::Standard => SeedCharts::Standard,
            ChartArg::Inverted => SeedCharts::Inverted,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

/// Everything a command needs beyond its own flags.
struct Ctx {
    config: Value,
    seed: Option<u64>,
    manifest: RunManifest,
}

impl Ctx {
    fn section(&self, name: &str) -> Option<&Value> {
        self.config.get(name)
    }

    fn trace(&self) -> Result<TraceConfig> {
        configured(TraceConfig::default(), self.section("trace")).context("trace config")
    }

    fn fibers(&self) -> Result<FiberSearchConfig> {
        let mut c = configured(FiberSearchConfig::default(), self.section("fibers")).context("fibers config")?;
        if let Some(s) = self.seed {
            c.seed = s;
        }
        Ok(c)
    }

    fn topology(&self) -> Result<TopologyConfig> {
        let mut c = configured(TopologyConfig::default(), self.section("topology")).context("topology config")?;
        if self.section("trace").is_some() {
            c.trace = self.trace()?;
        }
        Ok(c)
    }

    fn write_manifest(&self, dir: &Path) -> Result<()> {
        write_json(&dir.join("manifest.json"), &self.manifest)
    }
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    match dispatch(argv) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(argv: Vec<String>) -> Result<ExitCode> {
    let cli = Cli::try_parse_from(&argv).unwrap_or_else(|e| e.exit());
    let (cli, argv, mut config) = match &cli.command {
        Command::Run { manifest } => {
            let m = RunManifest::read(manifest)?;
            if m.command == "run" {
                bail!("a manifest cannot run another manifest");
            }
            let argv = m.argv();
            let inner = Cli::try_parse_from(&argv).with_context(|| format!("manifest {}", manifest.display()))?;
            (inner, argv, m.config)
        }
        _ => (cli, argv, Value::Null),
    };
    if let Some(path) = &cli.config {
        let src = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let file: Value = serde_json::from_str(&src).with_context(|| format!("decoding {}", path.display()))?;
        if config.is_null() {
            config = file;
        } else {
            io::merge(&mut config, &file);
        }
    }
    match &config {
        Value::Null => {}
        Value::Object(m) => {
            if let Some(k) = m.keys().find(|k| !SECTIONS.contains(&k.as_str())) {
                bail!("unknown config section `{k}`; expected one of {SECTIONS:?}");
            }
        }
        _ => bail!("config overrides must be a JSON object"),
    }
    let ctx = Ctx { manifest: effective_manifest(&argv, &config), config, seed: cli.seed };
    match cli.command {
        Command::Discriminant { surface, out } => discriminant(&ctx, &surface, &out),
        Command::Fibers { surface, out } => fibers(&ctx, &surface, out.as_deref()),
        Command::Slice { surface, polys, t, chart, format, out } => {
            cmd_slice(&ctx, &surface, polys.as_deref(), t, chart, format, out.as_deref())
        }
        Command::Sweep { surface, polys, t0, t1, frames, chart, out } => {
            sweep(&ctx, &surface, polys.as_deref(), (t0, t1, frames), chart, &out)
        }
        Command::Topology { surface, polys, t0, t1, frames, out } => {
            topology(&ctx, surface.as_deref(), polys.as_deref(), (t0, t1, frames), &out)
        }
        Command::Verify { only, polys, surface, out } => verify(&ctx, only, polys.as_deref(), &surface, out.as_deref()),
        Command::Render { files, out } => render(&ctx, &files, &out),
        Command::Run { .. } => unreachable!("handled above"),
    }
}

/// The manifest that reproduces this invocation.
fn effective_manifest(argv: &[String], config: &Value) -> RunManifest {
    let mut m = RunManifest {
        command: argv.get(1).cloned().unwrap_or_default(),
        surface: None,
        out: None,
        seed: None,
        config: config.clone(),
        args: Vec::new(),
    };
    let mut it = argv.iter().skip(2);
    while let Some(a) = it.next() {
        let (flag, inline) = match a.split_once('=') {
            Some((f, v)) if f.starts_with("--") => (f, Some(v.to_string())),
            _ => (a.as_str(), None),
        };
        if !matches!(flag, "--surface" | "--out" | "--seed" | "--config") {
            m.args.push(a.clone());
            continue;
        }
        let Some(v) = inline.or_else(|| it.next().cloned()) else { break };
        match flag {
            "--surface" => m.surface = Some(v),
            "--out" => m.out = Some(v.into()),
            "--seed" => m.seed = v.parse().ok(),
            // its contents are already in `config`
            _ => {}
        }
    }
    m
}

fn discriminant(ctx: &Ctx, surface: &str, out: &Path) -> Result<ExitCode> {
    let f = load_surface(surface)?;
    let start = Instant::now();
    let polys = discriminant_locus_polys(&f)?;
    let secs = start.elapsed().as_secs_f64();
    write_polys(out, &polys)?;
    ctx.write_manifest(out)?;
    for (name, p) in [("P", &polys.p), ("Q", &polys.q)] {
        match p.total_degree() {
            Some(d) => println!("{name}: degree {d}, {} terms", p.len()),
            None => println!("{name}: zero polynomial"),
        }
    }
    if polys.p.is_zero() && polys.q.is_zero() {
        println!("every fiber cubic is degenerate: the locus is all of S^4");
    }
    println!("computed in {secs:.2} s; wrote {}", out.display());
    Ok(ExitCode::SUCCESS)
}

fn fibers(ctx: &Ctx, surface: &str, out: Option<&Path>) -> Result<ExitCode> {
    let f = load_surface(surface)?;
    let set = find_twistor_fibers(&f, &ctx.fibers()?)?;
    let doc = json!({
        "fibers": set.records(),
        "certified": set.certified_count(),
        "images_coplanar_or_cospherical": fiber_images_coplanar_or_cospherical(&set.images()),
    });
    match out {
        Some(path) => {
            write_json(path, &doc)?;
            println!("{} certified twistor fibers; wrote {}", set.certified_count(), path.display());
        }
        None => println!("{}", serde_json::to_string_pretty(&doc)?),
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_slice(
    ctx: &Ctx,
    surface: &str,
    polys: Option<&Path>,
    t: f64,
    chart: ChartArg,
    format: Format,
    out: Option<&Path>,
) -> Result<ExitCode> {
    if !t.is_finite() {
        bail!("slice time must be finite");
    }
    let sys = LocusSystem::new(polys_for(surface, polys)?);
    let cfg = TraceConfig { chart: chart.into(), ..ctx.trace()? };
    let docs: Vec<CurveDoc> = slice(&sys, t, &cfg)?.iter().map(CurveDoc::from_curve).collect();
    match (format, out) {
        (Format::Json, Some(path)) => write_json(path, &docs)?,
        (Format::Json, None) => println!("{}", serde_json::to_string_pretty(&docs)?),
        (Format::Csv, Some(path)) => {
            let file = fs::File::create(path).with_context(|| format!("writing {}", path.display()))?;
            write_csv(file, t, &docs)?
        }
        (Format::Csv, None) => write_csv(std::io::stdout().lock(), t, &docs)?,
    }
    if let Some(path) = out {
        let closed = docs.iter().filter(|c| c.closed).count();
        println!("t = {t}: {} curves ({closed} closed); wrote {}", docs.len(), path.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn frame_times(t0: f64, t1: f64, frames: usize) -> Vec<f64> {
    TopologyConfig { t0, t1, frames, ..TopologyConfig::default() }.times()
}

fn write_pictures(dir: &Path, stem: &str, docs: &[CurveDoc], t: Option<f64>) -> Result<()> {
    for view in [View::Above, View::Side] {
        let path = dir.join(format!("{stem}_{}.svg", view.suffix()));
        fs::write(&path, svg::render(docs, t, view)).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn sweep(ctx: &Ctx, surface: &str, polys: Option<&Path>, range: (f64, f64, usize), chart: ChartArg, out: &Path) -> Result<ExitCode> {
    let (t0, t1, frames) = range;
    if frames < 2 || !(t0 < t1) {
        bail!("need at least two frames over a nonempty time range");
    }
    let sys = LocusSystem::new(polys_for(surface, polys)?);
    let cfg = TraceConfig { chart: chart.into(), ..ctx.trace()? };
    let times = frame_times(t0, t1, frames);
    let all = slices(&sys, &times, &cfg)?;
    fs::create_dir_all(out)?;
    let mut index = Vec::new();
    for (k, (t, curves)) in times.iter().zip(&all).enumerate() {
        let docs: Vec<CurveDoc> = curves.iter().map(CurveDoc::from_curve).collect();
        let stem = format!("frame_{k:03}");
        write_json(&out.join(format!("{stem}.json")), &docs)?;
        write_pictures(out, &stem, &docs, Some(*t))?;
        let loops = docs.iter().filter(|c| c.closed && c.chart == "standard").count();
        println!("frame {k:3}  t = {t:<10.6}  {:3} curves, {loops:3} closed loops in the standard chart", docs.len());
        index.push(json!({ "frame": k, "t": t, "file": format!("{stem}.json"), "curves": docs.len(), "standard_loops": loops }));
    }
    write_json(&out.join("sweep.json"), &index)?;
    ctx.write_manifest(out)?;
    println!("wrote {} frames to {}", times.len(), out.display());
    Ok(ExitCode::SUCCESS)
}

fn summary(rep: &TopologyReport) -> String {
    let yes = |b: bool| if b { "yes" } else { "no" };
    let mut s = String::new();
    s += &format!("Euler characteristic {} = {} - {} + {}\n", rep.chi, rep.vertices, rep.edges, rep.faces);
    s += &format!("connected: {}, orientable: {}\n", yes(rep.connected), yes(rep.orientable));
    s += &format!("pinch points: {} with sheets {:?}\n", rep.pinch_points.len(), rep.sheets_per_pinch);
    s += &format!("components after pinch removal: {}\n", rep.components_after_pinch_removal.len());
    for c in &rep.components_after_pinch_removal {
        let genus = c.genus.map_or("n/a".to_string(), |g| g.to_string());
        s += &format!("  chi {}, {} boundary circles, genus {genus}\n", c.chi, c.boundaries);
    }
    s += &format!("fiber images without a pinch point: {}\n", rep.unmatched_fiber_images);
    s += &format!("frames: {} used, {} dropped; critical levels {:?}\n", rep.frames, rep.dropped_frames.len(), rep.critical_levels);
    s += &format!("births {}, deaths {}, tracks {}\n", rep.births, rep.deaths, rep.tracks);
    s
}

fn topology(ctx: &Ctx, surface: Option<&str>, polys: Option<&Path>, range: (Option<f64>, Option<f64>, Option<usize>), out: &Path) -> Result<ExitCode> {
    let mut cfg = ctx.topology()?;
    let (t0, t1, frames) = range;
    cfg.t0 = t0.unwrap_or(cfg.t0);
    cfg.t1 = t1.unwrap_or(cfg.t1);
    cfg.frames = frames.unwrap_or(cfg.frames);
    let surface = match (surface, polys) {
        (Some(s), _) => Some(s),
        (None, None) => Some(FLAGSHIP),
        (None, Some(_)) => None,
    };
    let sys = LocusSystem::new(polys_for(surface.unwrap_or(FLAGSHIP), polys)?);
    let fibers = match surface {
        Some(s) => find_twistor_fibers(&load_surface(s)?, &ctx.fibers()?)?,
        None => TwistorFiberSet::default(),
    };
    let (_, _, rep) = reconstruct(&sys, &fibers, &cfg)?;
    fs::create_dir_all(out)?;
    write_json(&out.join("topology.json"), &rep)?;
    let text = summary(&rep);
    fs::write(out.join("summary.txt"), &text)?;
    ctx.write_manifest(out)?;
    print!("{text}");
    Ok(ExitCode::SUCCESS)
}

/// Stored `P, Q` must decode and equal a fresh computation.
fn integrity(dir: &Path, surface: &str) -> Check {
    let mut c = Check::new(0, "serialization integrity");
    let stored = match io::read_polys(dir) {
        Ok(p) => p,
        Err(e) => {
            c.part(false, format!("serialization-integrity error: {e:#}"));
            return c;
        }
    };
    match load_surface(surface).and_then(|f| Ok(discriminant_locus_polys(&f)?)) {
        Ok(fresh) => {
            c.part(stored.p == fresh.p, "P.json equals the recomputed P");
            c.part(stored.q == fresh.q, "Q.json equals the recomputed Q");
            if !c.passed {
                c.part(false, "serialization-integrity error: stored polynomials differ");
            }
        }
        Err(e) => c.part(false, format!("cannot recompute: {e:#}")),
    }
    c
}

fn verify(ctx: &Ctx, only: Vec<u8>, polys: Option<&Path>, surface: &str, out: Option<&Path>) -> Result<ExitCode> {
    if let Some(k) = only.iter().find(|k| !(1..=8).contains(*k)) {
        bail!("no criterion {k}; choose from 1 to 8");
    }
    let mut cfg = configured(SuiteConfig::default(), ctx.section("suite")).context("suite config")?;
    if !only.is_empty() {
        cfg.only = only;
    }
    if let Some(s) = ctx.seed {
        cfg.seed = s;
    }
    let mut checks = Vec::new();
    if let Some(dir) = polys {
        checks.push(integrity(dir, surface));
    }
    let SuiteOutput { checks: suite, report } = run_suite(&cfg);
    checks.extend(suite);
    let passed = checks.iter().all(|c| c.passed);
    for c in &checks {
        eprintln!("{}", c.line());
        for d in &c.details {
            eprintln!("       {d}");
        }
    }
    let doc = json!({ "passed": passed, "checks": checks, "report": report });
    match out {
        Some(path) => write_json(path, &doc)?,
        None => println!("{}", serde_json::to_string_pretty(&doc)?),
    }
    Ok(if passed { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

fn render(ctx: &Ctx, files: &[PathBuf], out: &Path) -> Result<ExitCode> {
    fs::create_dir_all(out)?;
    for f in files {
        let src = fs::read_to_string(f).with_context(|| format!("reading {}", f.display()))?;
        let docs: Vec<CurveDoc> = serde_json::from_str(&src).with_context(|| format!("{} is not a slice file", f.display()))?;
        let stem = f.file_stem().and_then(|s| s.to_str()).unwrap_or("slice");
        write_pictures(out, stem, &docs, docs.first().map(|c| c.t))?;
    }
    ctx.write_manifest(out)?;
    println!("rendered {} files to {}", files.len(), out.display());
    Ok(ExitCode::SUCCESS)
}
