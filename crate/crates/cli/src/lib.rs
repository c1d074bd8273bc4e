//! `netcap`: norm measures, rewrites, constructions and capacity bounds for
//! ReLU networks from the command line.

pub mod report;
pub mod verify;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use netcap_core::constructions::{
    halfspace_gamma, halfspace_intersection_net, hypercube_inputs, hypercube_vertex,
    shattering_layers, ShatterSpec,
};
use netcap_core::norms::{gamma_pq, mu_pq, NormParams, NormReport};
use netcap_core::rademacher::{
    antisym_bound, empirical_rademacher_lower, exact_rademacher_hull, linear_rademacher_bound,
    linear_rademacher_exact, network_rademacher_bound, shatter_check, Capacity, Labelings,
    LowerBoundConfig, NetworkBound, SampleSet,
};
use netcap_core::rebalance::{balance_layers, unitize_units};
use netcap_core::transforms::{convex_combine, layerize, treeify, DEFAULT_MAX_NODES};
use netcap_core::{LayeredNet, Network};

use crate::report::{cases_csv, sweep_csv, SweepRow};

#[derive(Debug, Parser)]
#[command(
    name = "netcap",
    version,
    about = "Norm-based capacity measures for ReLU networks"
)]
pub struct Cli {
    /// Seed for every randomized computation.
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,
    /// Relative tolerance for function equality checks.
    #[arg(long, global = true, default_value_t = 1e-9)]
    pub tol_rel: f64,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub report: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Include wall-clock time in verify reports (makes them non-reproducible).
    #[arg(long, global = true)]
    pub timing: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    ExactHull,
    Linear,
    LinearBound,
    BoundThm1,
    BoundAntisym,
    OptLower,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// mu, gamma (layered nets only) and the path norm of a network.
    Norms {
        #[arg(long)]
        net: PathBuf,
        #[arg(long)]
        p: f64,
        #[arg(long, value_parser = parse_exponent)]
        q: f64,
    },
    /// Rescale layers so every layer has the same group norm.
    Balance {
        #[arg(long)]
        net: PathBuf,
        #[arg(long)]
        p: f64,
        #[arg(long, value_parser = parse_exponent)]
        q: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Rescale every hidden unit to unit incoming l_p norm.
    Unitize {
        #[arg(long)]
        net: PathBuf,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Copy shared units until every hidden node has one consumer.
    Treeify {
        #[arg(long)]
        net: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_MAX_NODES)]
        max_nodes: usize,
    },
    /// Turn a DAG into a layered net of the given depth.
    Layerize {
        #[arg(long)]
        net: PathBuf,
        #[arg(long)]
        depth: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_MAX_NODES)]
        max_nodes: usize,
    },
    /// One layered net computing alpha*A + (1-alpha)*B.
    Combine {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        p: f64,
        #[arg(long, value_parser = parse_exponent)]
        q: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build hypercube shattering nets and check their margins.
    Shatter {
        #[arg(long = "D")]
        dim: usize,
        #[arg(long)]
        depth: usize,
        #[arg(long = "H", default_value_t = 1)]
        width: usize,
        #[arg(long)]
        p: f64,
        #[arg(long, value_parser = parse_exponent)]
        q: f64,
        /// JSON list of label vectors, or `all`.
        #[arg(long)]
        labels: String,
    },
    /// Build the halfspace-intersection net and check it on the hypercube.
    Halfspaces {
        /// JSON k x D matrix of +-1 entries.
        #[arg(long)]
        normals: PathBuf,
        #[arg(long)]
        p: f64,
        #[arg(long, value_parser = parse_exponent)]
        q: f64,
    },
    /// Rademacher complexities and bounds.
    Rademacher {
        #[arg(long, value_enum)]
        mode: Mode,
        /// JSON list of points (vertex evaluation vectors for exact-hull).
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        #[arg(long, value_parser = parse_exponent, default_value = "inf")]
        q: f64,
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long)]
        mu: Option<f64>,
        #[arg(long, default_value_t = 1)]
        depth: usize,
        #[arg(long = "H")]
        width: Option<usize>,
        #[arg(long, default_value_t = 32)]
        restarts: usize,
        #[arg(long, default_value_t = 200)]
        steps: usize,
    },
    /// Run the verification suites.
    Verify {
        #[arg(long, default_value = "all", value_parser = suite_names())]
        suite: String,
    },
    /// gamma of shattering nets across widths, as CSV by default.
    Sweep {
        #[arg(long = "D")]
        dim: usize,
        #[arg(long)]
        depth: usize,
        /// Comma-separated widths.
        #[arg(long = "H", value_delimiter = ',', required = true)]
        widths: Vec<usize>,
        #[arg(long)]
        p: f64,
        #[arg(long, value_parser = parse_exponent)]
        q: f64,
    },
}

fn suite_names() -> clap::builder::PossibleValuesParser {
    let mut names = verify::SUITES.to_vec();
    names.push("all");
    clap::builder::PossibleValuesParser::new(names)
}

/// Parses a norm exponent; accepts `inf`.
pub fn parse_exponent(s: &str) -> Result<f64, String> {
    match s.to_ascii_lowercase().as_str() {
        "inf" | "infinity" => Ok(f64::INFINITY),
        other => other
            .parse::<f64>()
            .map_err(|e| format!("not a number or 'inf': {e}")),
    }
}

/// What a command produced: the report text and whether its checks passed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub body: String,
    pub passed: bool,
}

impl Outcome {
    fn json<T: Serialize>(value: &T, passed: bool) -> Result<Self> {
        let mut body = serde_json::to_string_pretty(value)?;
        body.push('\n');
        Ok(Outcome { body, passed })
    }
}

/// A network file: layered if the JSON has a `layers` key, a DAG otherwise.
pub enum NetFile {
    Layered(LayeredNet),
    Dag(Network),
}

impl NetFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text =
            fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let value: serde_json::Value =
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        let net = if value.get("layers").is_some() {
            NetFile::Layered(serde_json::from_value(value)?)
        } else {
            NetFile::Dag(serde_json::from_value(value)?)
        };
        Ok(net)
    }

    fn into_dag(self) -> Network {
        match self {
            NetFile::Layered(l) => l.to_dag(),
            NetFile::Dag(n) => n,
        }
    }

    fn into_layered(self, path: &Path) -> Result<LayeredNet> {
        match self {
            NetFile::Layered(l) => Ok(l),
            NetFile::Dag(_) => bail!(
                "{} is a DAG; this command needs a layered net (run layerize first)",
                path.display()
            ),
        }
    }
}

fn load_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn params(p: f64, q: f64) -> Result<NormParams> {
    Ok(NormParams::new(p, q)?)
}

/// Runs the parsed command and returns its report without writing it.
pub fn execute(cli: &Cli) -> Result<Outcome> {
    let format = cli.format;
    let structured_only = || -> Result<()> {
        if format == Some(Format::Csv) {
            bail!("--format csv is only available for verify and sweep");
        }
        Ok(())
    };
    match &cli.command {
        Command::Norms { net, p, q } => {
            structured_only()?;
            let params = params(*p, *q)?;
            let report = match NetFile::load(net)? {
                NetFile::Layered(l) => NormReport::for_layered(&l, params)?,
                NetFile::Dag(n) => NormReport::for_network(&n, params)?,
            };
            Outcome::json(&report, true)
        }
        Command::Balance { net, p, q, out } => {
            structured_only()?;
            let params = params(*p, *q)?;
            let layered = NetFile::load(net)?.into_layered(net)?;
            let balanced = balance_layers(&layered, params)?;
            write_json(out, &balanced)?;
            Outcome::json(
                &json!({
                    "mu_before": mu_pq(&layered, params),
                    "mu_after": mu_pq(&balanced, params),
                    "gamma": gamma_pq(&balanced, params),
                    "depth": balanced.depth(),
                    "params": params,
                }),
                true,
            )
        }
        Command::Unitize { net, p, out } => {
            structured_only()?;
            let dag = NetFile::load(net)?.into_dag();
            let unit = unitize_units(&dag, *p)?;
            write_json(out, &unit)?;
            let params = NormParams::per_unit(*p)?;
            Outcome::json(&NormReport::for_network(&unit, params)?, true)
        }
        Command::Treeify {
            net,
            out,
            max_nodes,
        } => {
            structured_only()?;
            let dag = NetFile::load(net)?.into_dag();
            let t = treeify(&dag, *max_nodes)?;
            write_json(out, &t.net)?;
            Outcome::json(
                &json!({
                    "nodes": t.net.nodes().len(),
                    "edges": t.net.edges().len(),
                    "copies": t.copies,
                    "provenance": t.provenance,
                }),
                true,
            )
        }
        Command::Layerize {
            net,
            depth,
            out,
            max_nodes,
        } => {
            structured_only()?;
            let dag = NetFile::load(net)?.into_dag();
            let l = layerize(&dag, *depth, *max_nodes)?;
            write_json(out, &l.layered)?;
            let widths: Vec<usize> = l.layered.layers().iter().map(|w| w.rows()).collect();
            Outcome::json(
                &json!({
                    "depth": l.layered.depth(),
                    "widths": widths,
                    "subdivisions": l.subdivisions,
                    "nonnegative_inputs_required": l.nonnegative_inputs_required,
                }),
                true,
            )
        }
        Command::Combine {
            a,
            b,
            alpha,
            p,
            q,
            out,
        } => {
            structured_only()?;
            let params = params(*p, *q)?;
            let u = NetFile::load(a)?.into_layered(a)?;
            let v = NetFile::load(b)?.into_layered(b)?;
            let w = convex_combine(&u, &v, *alpha, params)?;
            write_json(out, &w)?;
            Outcome::json(
                &json!({
                    "alpha": alpha,
                    "gamma_a": gamma_pq(&u, params),
                    "gamma_b": gamma_pq(&v, params),
                    "gamma_combined": gamma_pq(&w, params),
                    "params": params,
                }),
                true,
            )
        }
        Command::Shatter {
            dim,
            depth,
            width,
            p,
            q,
            labels,
        } => {
            structured_only()?;
            let spec = ShatterSpec::new(*dim, *depth, *width, params(*p, *q)?)?;
            let labelings = if labels == "all" {
                Labelings::All
            } else {
                Labelings::List(load_json(Path::new(labels))?)
            };
            let check = shatter_check(
                |l| shattering_layers(&spec, l),
                &hypercube_inputs(*dim),
                &labelings,
            )?;
            let ones = vec![1.0; spec.points()];
            let gamma = gamma_pq(&shattering_layers(&spec, &ones)?, spec.params);
            let passed = check.passed;
            Outcome::json(
                &json!({
                    "spec": spec,
                    "gamma_measured": gamma,
                    "gamma_formula": spec.gamma_formula(),
                    "labelings": check.worst_margins.len(),
                    "check": check,
                }),
                passed,
            )
        }
        Command::Halfspaces { normals, p, q } => {
            structured_only()?;
            let params = params(*p, *q)?;
            let normals: Vec<Vec<f64>> = load_json(normals)?;
            let net = halfspace_intersection_net(&normals)?;
            let dim = normals[0].len();
            let mut min_margin = f64::INFINITY;
            for (j, x) in hypercube_inputs(dim).iter().enumerate() {
                let v = hypercube_vertex(dim, j);
                let inside = normals
                    .iter()
                    .all(|w| w.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>() > 0.0);
                let y = if inside { 1.0 } else { -1.0 };
                min_margin = min_margin.min(y * net.forward(x)?);
            }
            let passed = min_margin >= 1.0 - netcap_core::rademacher::SHATTER_TOL;
            Outcome::json(
                &json!({
                    "k": normals.len(),
                    "D": dim,
                    "min_margin": min_margin,
                    "passed": passed,
                    "gamma": halfspace_gamma(&net, params)?,
                    "params": params,
                }),
                passed,
            )
        }
        Command::Rademacher {
            mode,
            input,
            p,
            q,
            gamma,
            mu,
            depth,
            width,
            restarts,
            steps,
        } => {
            structured_only()?;
            let points: Vec<Vec<f64>> = load_json(input)?;
            let need_gamma = || gamma.context("this mode needs --gamma");
            let report = match mode {
                Mode::ExactHull => exact_rademacher_hull(&points)?,
                Mode::Linear => {
                    linear_rademacher_exact(&SampleSet::new(points)?, *p, need_gamma()?, cli.seed)?
                }
                Mode::LinearBound => {
                    linear_rademacher_bound(&SampleSet::new(points)?, *p, need_gamma()?)?
                }
                Mode::BoundThm1 => {
                    let capacity = match (gamma, mu) {
                        (Some(g), None) => Capacity::Gamma(*g),
                        (None, Some(m)) => Capacity::Mu(*m),
                        _ => bail!("bound-thm1 needs exactly one of --gamma and --mu"),
                    };
                    let bound = NetworkBound {
                        depth: *depth,
                        width: *width,
                        params: params(*p, *q)?,
                        capacity,
                    };
                    network_rademacher_bound(&bound, &SampleSet::new(points)?)?
                }
                Mode::BoundAntisym => {
                    let mu = mu.context("bound-antisym needs --mu")?;
                    antisym_bound(*depth, mu, &SampleSet::new(points)?)?
                }
                Mode::OptLower => {
                    let mut cfg = LowerBoundConfig::new(
                        *depth,
                        width.unwrap_or(1),
                        params(*p, *q)?,
                        need_gamma()?,
                        cli.seed,
                    );
                    cfg.restarts = *restarts;
                    cfg.steps = *steps;
                    empirical_rademacher_lower(&cfg, &SampleSet::new(points)?)?
                }
            };
            Outcome::json(&report, true)
        }
        Command::Verify { suite } => {
            let start = Instant::now();
            let mut report = verify::run(suite, cli.seed, cli.tol_rel)?;
            if cli.timing {
                report.wall_time = Some(start.elapsed().as_secs_f64());
            }
            let passed = report.failed == 0;
            match format {
                Some(Format::Csv) => Ok(Outcome {
                    body: cases_csv(&report.cases)?,
                    passed,
                }),
                _ => Outcome::json(&report, passed),
            }
        }
        Command::Sweep {
            dim,
            depth,
            widths,
            p,
            q,
        } => {
            let params = params(*p, *q)?;
            let rows = widths
                .iter()
                .map(|&h| {
                    let spec = ShatterSpec::new(*dim, *depth, h, params)?;
                    let net = shattering_layers(&spec, &vec![1.0; spec.points()])?;
                    Ok(SweepRow {
                        dim: *dim,
                        d: *depth,
                        width: h,
                        p: *p,
                        q: *q,
                        gamma_measured: gamma_pq(&net, params),
                        gamma_formula: spec.gamma_formula(),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            match format {
                Some(Format::Json) => Outcome::json(&rows, true),
                _ => Ok(Outcome {
                    body: sweep_csv(&rows)?,
                    passed: true,
                }),
            }
        }
    }
}

/// Runs the command and writes its report to `--report` or stdout.
pub fn run(cli: &Cli) -> Result<bool> {
    let outcome = execute(cli)?;
    match &cli.report {
        Some(path) => {
            fs::write(path, &outcome.body).with_context(|| format!("writing {}", path.display()))?
        }
        None => print!("{}", outcome.body),
    }
    Ok(outcome.passed)
}
