mod svg;

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use gsbv_core::analysis::slicing::CellBox;
use gsbv_core::fixtures::{runaway, staircase};
use gsbv_core::io::{self as gio, to_json};
use gsbv_core::partition::cell_values;
use gsbv_core::report::failures;
use gsbv_core::{
    build_partition, compactness_report, concentration_profile, energy, extract_bubbles,
    lsc_report, reduce_by_datum, renormalize, select_radii, vanishing_certificate, CellSet,
    DomainPartition, Error, ExtractionParams, GridFunction, RadiusParams, SequenceParams,
};
use serde::Serialize;

#[derive(Parser)]
#[command(
    name = "gsbv",
    version,
    about = "Concentration compactness diagnostics for grid GSBV functions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Opts,
}

#[derive(clap::Args)]
struct Opts {
    /// Trace window half-width w [default: 1.0, or the manifest value]
    #[arg(long, global = true)]
    window: Option<f64>,
    /// Relative bubble threshold; for `verify`, replaces the manifest ladder [default: 0.1]
    #[arg(long, global = true)]
    eps: Option<f64>,
    /// Bulk exponent p > 1 [default: 2.0]
    #[arg(long, global = true)]
    p: Option<f64>,
    /// Reference radius R of the Lévy window [default: 1.0]
    #[arg(long, global = true)]
    ref_radius: Option<f64>,
    /// Annulus width used when growing bubbles [default: 2.0]
    #[arg(long, global = true)]
    gap_delta: Option<f64>,
    /// Lower end of the radius search interval [default: 0.0]
    #[arg(long, global = true)]
    base_radius: Option<f64>,
    /// Length of the radius search interval [default: 1.0]
    #[arg(long, global = true)]
    radius_width: Option<f64>,
    /// Write the artifact here instead of stdout
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Also write an SVG view to this path
    #[arg(long, global = true)]
    svg: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Emit a built-in fixture
    #[command(subcommand)]
    Fixture(FixtureKind),
    /// Bulk and jump energy
    Energy { input: Option<PathBuf> },
    /// Concentration profile f(t; u)
    Profile {
        input: Option<PathBuf>,
        /// Restrict to a cell mask
        #[arg(long)]
        domain: Option<PathBuf>,
    },
    /// Bubble decomposition of the profile
    Decompose { input: Option<PathBuf> },
    /// Main, gap and vanishing partition of the domain
    Partition {
        input: Option<PathBuf>,
        #[arg(long)]
        domain: Option<PathBuf>,
    },
    /// Piecewise-constant renormalization; emits the new function
    Renormalize {
        input: Option<PathBuf>,
        #[arg(long)]
        domain: Option<PathBuf>,
        /// Boundary datum h, subtracted first
        #[arg(long)]
        datum: Option<PathBuf>,
    },
    /// Full sequence report from a manifest
    Verify { manifest: PathBuf },
    /// Volume certificate for a weakly vanishing region
    Vanishing {
        input: Option<PathBuf>,
        #[arg(long)]
        region: PathBuf,
    },
    /// Jump-set lower semicontinuity by slicing, for a manifest sequence
    SliceLsc {
        manifest: PathBuf,
        /// Cell box lo0,lo1,hi0,hi1 for the local check
        #[arg(long = "box", value_delimiter = ',')]
        bbox: Option<Vec<usize>>,
    },
}

#[derive(Subcommand)]
enum FixtureKind {
    /// Staircase with a thin strip of n steps
    Staircase {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        cells_per_step: usize,
    },
    /// Two halves at 0 and n separated by a crack
    Runaway {
        #[arg(long)]
        n: f64,
        #[arg(long, default_value_t = 8)]
        resolution: usize,
    },
}

/// Output of a command before anything is written.
struct Artifact {
    body: String,
    svg: Option<String>,
    violations: Vec<String>,
}

impl Artifact {
    fn new(body: String) -> Self {
        Self {
            body,
            svg: None,
            violations: Vec::new(),
        }
    }
}

impl Opts {
    fn window(&self) -> f64 {
        self.window.unwrap_or(1.0)
    }

    fn extraction(&self) -> ExtractionParams {
        ExtractionParams::new(
            self.eps.unwrap_or(0.1),
            self.gap_delta.unwrap_or(2.0),
            self.ref_radius.unwrap_or(1.0),
        )
    }

    fn radius(&self) -> RadiusParams {
        let mut r = RadiusParams::new(self.window());
        if let Some(b) = self.base_radius {
            r.base_radius = b;
        }
        if let Some(w) = self.radius_width {
            r.width = w;
        }
        r
    }

    fn sequence(&self, mut p: SequenceParams) -> SequenceParams {
        p.window = self.window.unwrap_or(p.window);
        p.p = self.p.unwrap_or(p.p);
        p.ref_radius = self.ref_radius.unwrap_or(p.ref_radius);
        p.gap_delta = self.gap_delta.unwrap_or(p.gap_delta);
        p.base_radius = self.base_radius.unwrap_or(p.base_radius);
        p.radius_width = self.radius_width.unwrap_or(p.radius_width);
        if let Some(e) = self.eps {
            p.eps = vec![e];
        }
        p
    }
}

fn read_text(path: Option<&Path>) -> anyhow::Result<String> {
    match path {
        Some(p) if p != Path::new("-") => {
            fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))
        }
        _ => {
            let mut s = String::new();
            io::stdin()
                .read_to_string(&mut s)
                .context("reading stdin")?;
            Ok(s)
        }
    }
}

fn read_function(path: Option<&Path>) -> anyhow::Result<GridFunction> {
    let text = read_text(path)?;
    gio::function_from_json(&text).context("parsing grid function")
}

fn read_mask(path: Option<&PathBuf>) -> anyhow::Result<Option<CellSet>> {
    path.map(|p| gio::read_mask(p).with_context(|| format!("reading mask {}", p.display())))
        .transpose()
}

fn csv_unsupported(what: &str) -> anyhow::Error {
    anyhow::anyhow!("--format csv is not available for `{what}`")
}

fn json_only(opts: &Opts, what: &str) -> anyhow::Result<()> {
    if opts.format == Format::Csv {
        return Err(csv_unsupported(what));
    }
    Ok(())
}

fn no_svg(opts: &Opts, what: &str) -> anyhow::Result<()> {
    if opts.svg.is_some() {
        bail!("--svg is not available for `{what}`");
    }
    Ok(())
}

fn partition_of(
    u: &GridFunction,
    domain: Option<&CellSet>,
    opts: &Opts,
) -> anyhow::Result<DomainPartition> {
    let w = opts.window();
    let f = concentration_profile(u, None, w)?;
    let d = extract_bubbles(&f, &opts.extraction())?;
    let radii = select_radii(&f, &d, &opts.radius(), &cell_values(u))?;
    Ok(build_partition(u, &radii, w, domain)?)
}

#[derive(Serialize)]
struct PartitionOut<'a> {
    labels: Vec<String>,
    bands: &'a [gsbv_core::partition::Band],
    datum_piece: Option<usize>,
    stats: &'a gsbv_core::partition::PartitionStats,
}

fn label_csv(u: &GridFunction, part: &DomainPartition) -> String {
    let row = u.geom().shape().last().copied().unwrap_or(1);
    let mut out = String::new();
    for chunk in part.labels.chunks(row) {
        let line: Vec<String> = chunk.iter().map(ToString::to_string).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

fn run(cli: &Cli) -> anyhow::Result<Artifact> {
    let opts = &cli.opts;
    match &cli.command {
        Command::Fixture(kind) => {
            json_only(opts, "fixture")?;
            no_svg(opts, "fixture")?;
            let u = match kind {
                FixtureKind::Staircase { n, cells_per_step } => staircase(*n, *cells_per_step)?,
                FixtureKind::Runaway { n, resolution } => runaway(*n, *resolution)?,
            };
            Ok(Artifact::new(gio::function_to_json(&u)))
        }
        Command::Energy { input } => {
            no_svg(opts, "energy")?;
            let u = read_function(input.as_deref())?;
            let e = energy(&u, opts.p.unwrap_or(2.0))?;
            Ok(Artifact::new(match opts.format {
                Format::Json => to_json(&e),
                Format::Csv => format!(
                    "bulk,jump,p,total\n{},{},{},{}\n",
                    e.bulk, e.jump, e.p, e.total
                ),
            }))
        }
        Command::Profile { input, domain } => {
            let u = read_function(input.as_deref())?;
            let domain = read_mask(domain.as_ref())?;
            let f = concentration_profile(&u, domain.as_ref(), opts.window())?;
            let mut a = Artifact::new(match opts.format {
                Format::Json => to_json(&f),
                Format::Csv => f.to_csv(),
            });
            a.svg = opts.svg.as_ref().map(|_| svg::profile(&f));
            Ok(a)
        }
        Command::Decompose { input } => {
            no_svg(opts, "decompose")?;
            let u = read_function(input.as_deref())?;
            let f = concentration_profile(&u, None, opts.window())?;
            let d = extract_bubbles(&f, &opts.extraction())?;
            Ok(Artifact::new(match opts.format {
                Format::Json => to_json(&d),
                Format::Csv => {
                    let mut s = String::from("center,inner_radius,outer_radius,mass,leakage\n");
                    for b in &d.bubbles {
                        let _ = writeln!(
                            s,
                            "{},{},{},{},{}",
                            b.center, b.inner_radius, b.outer_radius, b.mass, b.leakage
                        );
                    }
                    s
                }
            }))
        }
        Command::Partition { input, domain } => {
            let u = read_function(input.as_deref())?;
            let domain = read_mask(domain.as_ref())?;
            let part = partition_of(&u, domain.as_ref(), opts)?;
            let body = match opts.format {
                Format::Json => to_json(&PartitionOut {
                    labels: part.labels.iter().map(ToString::to_string).collect(),
                    bands: &part.bands,
                    datum_piece: part.datum_piece,
                    stats: &part.stats,
                }),
                Format::Csv => label_csv(&u, &part),
            };
            let mut a = Artifact::new(body);
            a.svg = opts.svg.as_ref().map(|_| svg::labels(&u, &part.labels));
            a.violations = failures(&part.stats.checks);
            Ok(a)
        }
        Command::Renormalize {
            input,
            domain,
            datum,
        } => {
            json_only(opts, "renormalize")?;
            let u = read_function(input.as_deref())?;
            let domain = read_mask(domain.as_ref())?;
            let v = match datum {
                Some(p) => reduce_by_datum(&u, &gio::read_function(p)?, domain.as_ref())?,
                None => u,
            };
            let part = partition_of(&v, domain.as_ref(), opts)?;
            let r = renormalize(&v, &part, None)?;
            let mut a = Artifact::new(gio::function_to_json(&r.function));
            a.svg = opts
                .svg
                .as_ref()
                .map(|_| svg::labels(&r.function, &part.labels));
            a.violations = failures(&r.checks);
            Ok(a)
        }
        Command::Verify { manifest } => {
            let m = gio::load_manifest(manifest)
                .with_context(|| format!("loading {}", manifest.display()))?;
            let params = opts.sequence(m.params);
            let r = compactness_report(
                &m.sequence,
                m.datum.as_ref(),
                m.domain.as_ref(),
                m.limit.as_ref(),
                &params,
            )?;
            let body = match opts.format {
                Format::Json => to_json(&r),
                Format::Csv => {
                    let mut s = String::from("eps,index,partition_outside_jump,v_eps_volume,jump_measure,gradient_norm,bubbles\n");
                    for l in &r.ladder {
                        for (i, m) in l.members.iter().enumerate() {
                            let _ = writeln!(
                                s,
                                "{},{},{},{},{},{},{}",
                                l.eps,
                                i,
                                l.conclusion_4.partition_outside_jump[i],
                                l.conclusion_4.v_eps_volume[i],
                                l.conclusion_3.sequence_measures[i],
                                l.conclusion_2.norms[i],
                                m.decomposition.bubbles.len()
                            );
                        }
                    }
                    s
                }
            };
            let mut a = Artifact::new(body);
            a.svg = opts.svg.as_ref().map(|_| {
                let series: Vec<(String, Vec<f64>)> = r
                    .ladder
                    .iter()
                    .flat_map(|l| {
                        [
                            (
                                format!("V_eps volume, eps={}", l.eps),
                                l.conclusion_4.v_eps_volume.clone(),
                            ),
                            (
                                format!("outside jump, eps={}", l.eps),
                                l.conclusion_4.partition_outside_jump.clone(),
                            ),
                        ]
                    })
                    .collect();
                svg::trends(&series)
            });
            a.violations = r.violations.clone();
            Ok(a)
        }
        Command::Vanishing { input, region } => {
            json_only(opts, "vanishing")?;
            no_svg(opts, "vanishing")?;
            let u = read_function(input.as_deref())?;
            let region = gio::read_mask(region)
                .with_context(|| format!("reading mask {}", region.display()))?;
            let eps = opts.eps.unwrap_or(0.1);
            match vanishing_certificate(
                &u,
                &region,
                eps,
                opts.ref_radius.unwrap_or(1.0),
                opts.window(),
            ) {
                Ok(c) => {
                    let mut a = Artifact::new(to_json(&c));
                    a.violations = failures(&c.checks);
                    Ok(a)
                }
                Err(e @ Error::NotWeaklyVanishing { .. }) => Ok(Artifact {
                    body: to_json(
                        &serde_json::json!({ "certified": false, "hypothesis": e.to_string() }),
                    ),
                    svg: None,
                    violations: vec![e.to_string()],
                }),
                Err(e) => Err(e.into()),
            }
        }
        Command::SliceLsc { manifest, bbox } => {
            json_only(opts, "slice-lsc")?;
            no_svg(opts, "slice-lsc")?;
            let m = gio::load_manifest(manifest)
                .with_context(|| format!("loading {}", manifest.display()))?;
            let limit = m
                .limit
                .as_ref()
                .or(m.sequence.last())
                .expect("manifest has members");
            let cell_box = match bbox.as_deref() {
                None => None,
                Some(&[a, b, c, d]) => Some(CellBox {
                    lo: [a, b],
                    hi: [c, d],
                }),
                Some(other) => bail!("--box takes 4 comma-separated indices, got {}", other.len()),
            };
            let r = lsc_report(&m.sequence, limit, cell_box.as_ref())?;
            let mut a = Artifact::new(to_json(&r));
            if !r.holds {
                a.violations
                    .push(format!("negative jump LSC margin {}", r.margin));
            }
            Ok(a)
        }
    }
}

/// Write via a sibling temporary file so a failed run leaves nothing behind.
fn write_atomic(path: &Path, body: &str) -> anyhow::Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, body).with_context(|| format!("writing {}", path.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("writing {}", path.display()))
}

fn emit(opts: &Opts, a: &Artifact) -> anyhow::Result<()> {
    if let (Some(path), Some(body)) = (&opts.svg, &a.svg) {
        write_atomic(path, body)?;
    }
    match &opts.out {
        Some(path) => write_atomic(path, &a.body),
        None => {
            let mut out = io::stdout().lock();
            out.write_all(a.body.as_bytes())?;
            out.flush()?;
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(u8::from(e.use_stderr()));
        }
    };
    let artifact = match run(&cli).and_then(|a| emit(&cli.opts, &a).map(|()| a)) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(1);
        }
    };
    if artifact.violations.is_empty() {
        ExitCode::SUCCESS
    } else {
        eprint!(
            "{}",
            to_json(&serde_json::json!({ "violations": artifact.violations }))
        );
        ExitCode::from(2)
    }
}
