//! `gic` — sum-capacity classification and regime maps for Gaussian
//! many-to-one and one-to-many interference channels.
//!
//! Subcommands: `classify`, `sumrate`, `region`, `sweep`, `verify-fm`.
//! Exit codes: 0 on success (known regime for `classify`), 2 on usage or
//! input errors, 3 when `classify` lands in the Unknown regime.

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use gic_core::capacity::classify;
use gic_core::channel::{Channel, ManyToOneChannel, OneToManyChannel};
use gic_core::fmcheck::{run_verify, VerifyConfig, MAX_VERIFY_USERS};
use gic_core::hk::{
    m2o_full_system, m2o_region, m2o_sumrate_constraints, o2m_full_system, o2m_region,
    o2m_sumrate_constraints_full_decode, DecodeSet, SumRateLabel, Topology,
};
use gic_core::sweep::{run_sweep, write_csv, Axis, SweepGrid, SweepParam};

const EXIT_UNKNOWN_REGIME: u8 = 3;
const EXIT_USAGE: u8 = 2;

#[derive(Parser)]
#[command(
    name = "gic",
    about = "Han-Kobayashi rate regions and sum capacities for one-sided Gaussian interference channels",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classify a channel into a capacity-known regime (JSON on stdout).
    ///
    /// Exits 0 when the regime is known, 3 when it is Unknown.
    Classify(ChannelArgs),
    /// Print the sum-rate constraint family and its binding bound.
    Sumrate {
        #[command(flatten)]
        channel: ChannelArgs,
        /// Decode set, e.g. "2,3" (many-to-one) or "1,2" (one-to-many);
        /// "none" for the empty set. Defaults to decoding everything.
        #[arg(long)]
        decode_set: Option<String>,
        /// Emit JSON instead of text.
        #[arg(long)]
        json: bool,
    },
    /// Print the achievable rate region as inequality text.
    Region {
        #[command(flatten)]
        channel: ChannelArgs,
        /// Decode set (see `sumrate`). Defaults to decoding everything.
        #[arg(long)]
        decode_set: Option<String>,
        /// Dump the pre-elimination system (with common-part rates) instead.
        #[arg(long)]
        pre_elimination: bool,
    },
    /// Classify every cell of a gain grid and emit CSV.
    Sweep {
        /// Base channel descriptor file (alternative to --kind/--powers/--gains).
        #[arg(long, conflicts_with_all = ["kind", "powers", "gains"])]
        channel: Option<PathBuf>,
        /// Channel topology.
        #[arg(long, value_enum)]
        kind: Option<Kind>,
        /// Fixed powers, e.g. "2,2,2". Defaults to the standard maps:
        /// P=2 (many-to-one), P=1 (one-to-many), K=3.
        #[arg(long)]
        powers: Option<String>,
        /// Base gains for parameters not swept (default all 0).
        #[arg(long)]
        gains: Option<String>,
        /// Axes "x:lo:hi:step[,y:lo:hi:step]" with x,y parameter names like
        /// h2 or p1. Defaults to the full gain plane [0,4] at step 0.01.
        #[arg(long)]
        grid: Option<String>,
        /// Pin a parameter, e.g. --fix h1=0.5 (repeatable).
        #[arg(long = "fix")]
        fixes: Vec<String>,
        /// Recorded for reproducibility; sweeps are deterministic.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check that eliminating the pre-systems reproduces the closed forms
    /// on random channels.
    VerifyFm {
        /// Channel topology.
        #[arg(long, value_enum)]
        kind: Kind,
        /// Number of users (2..=5; row growth is exponential in K).
        #[arg(long, default_value_t = 3)]
        k: usize,
        /// Random channels to draw.
        #[arg(long, default_value_t = 50)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Membership samples per equivalence check.
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Kind {
    #[value(name = "many-to-one")]
    ManyToOne,
    #[value(name = "one-to-many")]
    OneToMany,
}

#[derive(Args)]
struct ChannelArgs {
    /// JSON channel descriptor file
    /// {"kind":"many-to-one","powers":[...],"gains":[...]}.
    #[arg(long)]
    channel: Option<PathBuf>,
    /// Channel topology (with --powers/--gains).
    #[arg(long, value_enum)]
    kind: Option<Kind>,
    /// Comma-separated transmit powers P1..PK.
    #[arg(long)]
    powers: Option<String>,
    /// Comma-separated cross gains (h2..hK or h1..h(K-1)).
    #[arg(long)]
    gains: Option<String>,
}

impl ChannelArgs {
    fn load(&self) -> Result<Channel> {
        if let Some(path) = &self.channel {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            return serde_json::from_str(&text).context("parsing channel descriptor");
        }
        let kind = self.kind.ok_or_else(|| anyhow!("missing --channel or --kind"))?;
        let powers = parse_f64_list(
            self.powers.as_deref().ok_or_else(|| anyhow!("missing --powers"))?,
        )?;
        let gains = parse_f64_list(
            self.gains.as_deref().ok_or_else(|| anyhow!("missing --gains"))?,
        )?;
        build_channel(kind, powers, gains)
    }
}

fn build_channel(kind: Kind, powers: Vec<f64>, gains: Vec<f64>) -> Result<Channel> {
    let describe = |errs: Vec<gic_core::channel::ChannelError>| {
        anyhow!(errs.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))
    };
    Ok(match kind {
        Kind::ManyToOne => {
            Channel::ManyToOne(ManyToOneChannel::new(powers, gains).map_err(describe)?)
        }
        Kind::OneToMany => {
            Channel::OneToMany(OneToManyChannel::new(powers, gains).map_err(describe)?)
        }
    })
}

fn parse_f64_list(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse::<f64>().with_context(|| format!("bad number {s:?}")))
        .collect()
}

fn parse_usize_list(text: &str) -> Result<Vec<usize>> {
    if text.trim() == "none" {
        return Ok(Vec::new());
    }
    text.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse::<usize>().with_context(|| format!("bad index {s:?}")))
        .collect()
}

fn decode_set_for(channel: &Channel, spec: Option<&str>) -> Result<DecodeSet> {
    let indices = match spec {
        Some(spec) => parse_usize_list(spec)?,
        None => match channel {
            Channel::ManyToOne(c) => (2..=c.users()).collect(),
            Channel::OneToMany(c) => (1..c.users()).collect(),
        },
    };
    Ok(match channel {
        Channel::ManyToOne(_) => DecodeSet::many_to_one(indices),
        Channel::OneToMany(_) => DecodeSet::one_to_many(indices),
    })
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            if err
                .chain()
                .filter_map(|e| e.downcast_ref::<std::io::Error>())
                .any(|e| e.kind() == std::io::ErrorKind::BrokenPipe)
            {
                return ExitCode::SUCCESS;
            }
            eprintln!("error: {err:#}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Classify(args) => {
            let channel = args.load()?;
            let result = classify(&channel);
            println!("{}", serde_json::to_string_pretty(&result.to_json())?);
            Ok(if result.is_known() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_UNKNOWN_REGIME)
            })
        }
        Command::Sumrate { channel, decode_set, json } => {
            let channel = channel.load()?;
            let set = decode_set_for(&channel, decode_set.as_deref())?;
            let bounds = match &channel {
                Channel::ManyToOne(c) => m2o_sumrate_constraints(c, &set)?,
                Channel::OneToMany(c) => {
                    if set.len() + 1 != c.users() {
                        bail!("one-to-many sum-rate bounds are for the full decode set");
                    }
                    o2m_sumrate_constraints_full_decode(c)
                }
            };
            let best = bounds.min_bound().clone();
            if json {
                let rows: Vec<serde_json::Value> = bounds
                    .bounds
                    .iter()
                    .map(|b| {
                        serde_json::json!({
                            "label": label_text(&b.label),
                            "bits": b.bits,
                            "binding": b.label == best.label,
                        })
                    })
                    .collect();
                println!(
                    "{}",
                    serde_json::to_string_pretty(&serde_json::json!({
                        "bounds": rows,
                        "achievable_sum_rate_bits": best.bits,
                    }))?
                );
            } else {
                for b in &bounds.bounds {
                    let marker = if b.label == best.label { "  <- min" } else { "" };
                    println!("{:<18} {:.9}{marker}", label_text(&b.label), b.bits);
                }
                println!("achievable sum rate: {:.9} bits/use", best.bits);
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Region { channel, decode_set, pre_elimination } => {
            let channel = channel.load()?;
            let set = decode_set_for(&channel, decode_set.as_deref())?;
            let system = match (&channel, pre_elimination) {
                (Channel::ManyToOne(c), false) => m2o_region(c, &set)?,
                (Channel::ManyToOne(c), true) => m2o_full_system(c, &set)?,
                (Channel::OneToMany(c), false) => o2m_region(c, &set)?,
                (Channel::OneToMany(c), true) => o2m_full_system(c, &set)?,
            };
            print!("{system}");
            Ok(ExitCode::SUCCESS)
        }
        Command::Sweep { channel, kind, powers, gains, grid, fixes, seed: _, out } => {
            let base = match (channel, kind) {
                (Some(path), _) => {
                    let text = fs::read_to_string(&path)
                        .with_context(|| format!("reading {}", path.display()))?;
                    serde_json::from_str(&text).context("parsing channel descriptor")?
                }
                (None, Some(kind)) => default_base(kind, powers, gains)?,
                (None, None) => bail!("missing --channel or --kind"),
            };
            let grid = build_grid(base, grid, &fixes)?;
            let cells = run_sweep(&grid)?;
            match out {
                Some(path) => {
                    let file = fs::File::create(&path)
                        .with_context(|| format!("creating {}", path.display()))?;
                    let mut buffered = std::io::BufWriter::new(file);
                    write_csv(&cells, &mut buffered)?;
                    buffered.flush()?;
                }
                None => {
                    let stdout = std::io::stdout();
                    let mut buffered = std::io::BufWriter::new(stdout.lock());
                    write_csv(&cells, &mut buffered)?;
                    buffered.flush()?;
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::VerifyFm { kind, k, trials, seed, samples } => {
            if k > MAX_VERIFY_USERS {
                bail!("K={k} refused: verification supports K <= {MAX_VERIFY_USERS}");
            }
            let topology = match kind {
                Kind::ManyToOne => Topology::ManyToOne,
                Kind::OneToMany => Topology::OneToMany,
            };
            let cfg = VerifyConfig { topology, users: k, trials, samples, seed };
            let report = run_verify(&cfg)?;
            for trial in &report.trials {
                let status = if trial.passed() { "PASS" } else { "FAIL" };
                let pipelines = trial.outcomes.len();
                println!("trial {:>3}: {status} ({pipelines} pipelines)", trial.trial);
                for o in trial.outcomes.iter().filter(|o| !o.equivalent) {
                    println!(
                        "    mismatch: {:?} decode set {:?} ({} vs {} rows)",
                        o.pipeline, o.decode_set, o.eliminated_rows, o.closed_form_rows
                    );
                    if let Some(dump) = &o.mismatch_dump {
                        print!("{dump}");
                    }
                }
            }
            println!("{}/{} trials passed", report.passed(), report.total());
            Ok(if report.all_passed() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
    }
}

fn label_text(label: &SumRateLabel) -> String {
    match label {
        SumRateLabel::Subset(m) => format!(
            "M={{{}}}",
            m.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
        ),
        SumRateLabel::AllSingleUser => "all-single-user".to_string(),
        SumRateLabel::JointWith(i) => format!("joint-with-{i}"),
    }
}

fn default_base(kind: Kind, powers: Option<String>, gains: Option<String>) -> Result<Channel> {
    let powers = match powers {
        Some(p) => parse_f64_list(&p)?,
        None => match kind {
            Kind::ManyToOne => vec![2.0, 2.0, 2.0],
            Kind::OneToMany => vec![1.0, 1.0, 1.0],
        },
    };
    let gains = match gains {
        Some(g) => parse_f64_list(&g)?,
        None => vec![0.0; powers.len().saturating_sub(1)],
    };
    build_channel(kind, powers, gains)
}

fn build_grid(base: Channel, grid: Option<String>, fixes: &[String]) -> Result<SweepGrid> {
    let kind = match &base {
        Channel::ManyToOne(_) => Kind::ManyToOne,
        Channel::OneToMany(_) => Kind::OneToMany,
    };
    let users = base.users();
    let (mut fixed_powers, mut base_gains) = match &base {
        Channel::ManyToOne(c) => (c.powers().to_vec(), c.gains().to_vec()),
        Channel::OneToMany(c) => (c.powers().to_vec(), c.gains().to_vec()),
    };
    // --fix pins base parameters before the axes take over.
    for fix in fixes {
        let (name, value) = fix
            .split_once('=')
            .ok_or_else(|| anyhow!("--fix expects name=value, got {fix:?}"))?;
        let value: f64 = value.trim().parse().with_context(|| format!("bad value in {fix:?}"))?;
        let param = SweepParam::parse(name)
            .ok_or_else(|| anyhow!("unknown parameter {name:?} in --fix"))?;
        match param {
            SweepParam::Power(i) if (1..=users).contains(&i) => fixed_powers[i - 1] = value,
            SweepParam::Gain(i) => {
                let slot = match kind {
                    Kind::ManyToOne if (2..=users).contains(&i) => i - 2,
                    Kind::OneToMany if (1..users).contains(&i) => i - 1,
                    _ => bail!("gain h{i} does not exist for this topology"),
                };
                base_gains[slot] = value;
            }
            _ => bail!("parameter {name:?} out of range in --fix"),
        }
    }

    let base = build_channel(kind, fixed_powers, base_gains)?;

    let axes_text = grid.unwrap_or_else(|| match kind {
        Kind::ManyToOne => "h2:0:4:0.01,h3:0:4:0.01".to_string(),
        Kind::OneToMany => "h1:0:4:0.01,h2:0:4:0.01".to_string(),
    });
    let mut axes = Vec::new();
    for part in axes_text.split(',') {
        axes.push(parse_axis(part)?);
    }
    let (x, y) = match axes.len() {
        1 => (axes[0], None),
        2 => (axes[0], Some(axes[1])),
        n => bail!("--grid takes one or two axes, got {n}"),
    };
    Ok(SweepGrid { base, x, y })
}

fn parse_axis(text: &str) -> Result<Axis> {
    let parts: Vec<&str> = text.split(':').collect();
    let [name, lo, hi, step] = parts.as_slice() else {
        bail!("axis must be name:lo:hi:step, got {text:?}");
    };
    let param =
        SweepParam::parse(name).ok_or_else(|| anyhow!("unknown axis parameter {name:?}"))?;
    let lo: f64 = lo.parse().with_context(|| format!("bad lo in {text:?}"))?;
    let hi: f64 = hi.parse().with_context(|| format!("bad hi in {text:?}"))?;
    let step: f64 = step.parse().with_context(|| format!("bad step in {text:?}"))?;
    Ok(Axis::new(param, lo, hi, step)?)
}
