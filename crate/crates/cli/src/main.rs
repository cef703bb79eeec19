use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Mutex;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use diqka::attack::{cc_boundary, cc_rate_upper, h_cc};
use diqka::boxes::{family_box, FamilyPoint, NonlocalBox};
use diqka::conic::SolverConfig;
use diqka::entropy_sdp::{build_relaxation_with, export_sdpa, ConstraintMode, RelaxationOptions};
use diqka::rates::{chsh, cond_entropy_ab, qber};
use diqka::search::{
    activation_pipeline, distill_search_over, distillation_catalog, rate_report, sample_candidates, PipelineConfig,
    SearchConfig,
};
use diqka::wirings::{apply_wiring, wired_params, xor_pair, xor_wired_family, WiringPair, WiringParams};
use diqka::Error;

/// Worker count for the grid and the per-node SDP solves.
const THREADS_ENV: &str = "DIQKA_THREADS";

#[derive(Parser)]
#[command(
    name = "diqka",
    version,
    about = "Device-independent key activation with wired nonlocal boxes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Key-rate bounds of one family point, optionally XOR-wired.
    Rate(RateArgs),
    /// Rate bounds over an (alpha, v, copies) grid as CSV.
    Grid(GridArgs),
    /// Per-copy rates r/k for k = 1..3 across v as CSV.
    Boost(BoostArgs),
    /// Exhaustive distillation search over the two-input wiring catalog.
    Search(SearchArgs),
    /// Wire copies of a box and write the resulting box.
    Wire(WireArgs),
    /// Rate before wiring and, when needed, after distillation.
    Activate(ActivateArgs),
    /// Write one node SDP of the entropy relaxation in SDPA sparse format.
    ExportSdp(ExportArgs),
    /// Write the family box in box text format.
    Family(FamilyArgs),
    /// Seeded candidate boxes near the quantum boundary as CSV.
    Sample(SampleArgs),
}

#[derive(Args, Clone, Copy)]
struct SdpOpts {
    /// Gauss-Radau nodes m.
    #[arg(long, default_value_t = 12)]
    nodes: usize,
    /// Relaxation level.
    #[arg(long, default_value_t = 2)]
    level: usize,
    /// Box constraints: full or coarse (CHSH and QBER only).
    #[arg(long, default_value = "full")]
    mode: ConstraintMode,
    /// Solver gap and feasibility tolerance.
    #[arg(long, default_value_t = 1e-8)]
    tolerance: f64,
}

impl SdpOpts {
    fn pipeline(&self) -> Result<PipelineConfig> {
        if self.nodes < 2 {
            bail!(Error::InvalidParameter(format!(
                "need at least 2 nodes, got {}",
                self.nodes
            )));
        }
        Ok(PipelineConfig {
            nodes: self.nodes,
            level: self.level,
            mode: self.mode,
            solver: SolverConfig {
                tolerance: self.tolerance,
                ..SolverConfig::default()
            },
        })
    }
}

#[derive(Args)]
struct RateArgs {
    #[arg(long)]
    alpha: f64,
    #[arg(long)]
    v: f64,
    /// Number of XOR-wired copies (1, 2 or 3).
    #[arg(long, default_value_t = 1)]
    copies: usize,
    #[command(flatten)]
    sdp: SdpOpts,
    /// Print the report as JSON instead of a CSV row.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct GridArgs {
    /// Alpha values: `a,b,c` or `start:stop:count`.
    #[arg(long, default_value = "0.02")]
    alpha: String,
    /// Visibilities: `a,b,c` or `start:stop:count`.
    #[arg(long, default_value = "0.895,0.9,0.90236,0.905")]
    v: String,
    /// Copy counts.
    #[arg(long, default_value = "1,2")]
    copies: String,
    /// Solve the entropy SDP at every n-th (alpha, v) point; 0 disables it.
    #[arg(long, default_value_t = 1)]
    sdp_stride: usize,
    #[command(flatten)]
    sdp: SdpOpts,
    /// Output file (stdout if absent).
    #[arg(long)]
    output: Option<PathBuf>,
    /// Omit the timestamp comment line.
    #[arg(long)]
    no_timestamp: bool,
}

#[derive(Args)]
struct BoostArgs {
    #[arg(long, default_value_t = 0.01)]
    alpha: f64,
    /// Visibilities: `a,b,c` or `start:stop:count`.
    #[arg(long, default_value = "0.9,0.915,0.93,0.95")]
    v: String,
    /// Largest copy count.
    #[arg(long, default_value_t = 3)]
    max_copies: usize,
    #[command(flatten)]
    sdp: SdpOpts,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    no_timestamp: bool,
}

#[derive(Args, Clone)]
struct BoxSource {
    /// Box text file.
    #[arg(long = "box", conflicts_with_all = ["alpha", "v"])]
    box_file: Option<PathBuf>,
    /// Family point instead of a file.
    #[arg(long, requires = "v")]
    alpha: Option<f64>,
    #[arg(long, requires = "alpha")]
    v: Option<f64>,
}

impl BoxSource {
    fn load(&self) -> Result<NonlocalBox> {
        match (&self.box_file, self.alpha, self.v) {
            (Some(path), _, _) => {
                let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                Ok(NonlocalBox::from_text(&text)?)
            }
            (None, Some(alpha), Some(v)) => Ok(family_box(FamilyPoint::new(alpha, v)?)),
            _ => bail!(Error::InvalidParameter("give --box FILE or --alpha and --v".into())),
        }
    }
}

#[derive(Args)]
struct SearchArgs {
    #[command(flatten)]
    source: BoxSource,
    /// Scan every CHSH variant, not only the one the input violates most.
    #[arg(long)]
    all_variants: bool,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct WireArgs {
    #[command(flatten)]
    source: BoxSource,
    /// XOR wiring on every setting of both parties.
    #[arg(long, conflicts_with_all = ["alice", "bob"])]
    xor: bool,
    /// Alice's wirings per setting, `;`-separated, e.g. `xor(0,0,0);xor(1,1,0)`.
    #[arg(long, requires = "bob")]
    alice: Option<String>,
    /// Bob's wirings per setting, `;`-separated.
    #[arg(long, requires = "alice")]
    bob: Option<String>,
    #[arg(long, default_value_t = 2)]
    copies: usize,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ActivateArgs {
    #[command(flatten)]
    source: BoxSource,
    #[command(flatten)]
    sdp: SdpOpts,
}

#[derive(Args)]
struct ExportArgs {
    #[arg(long)]
    alpha: f64,
    #[arg(long)]
    v: f64,
    #[arg(long, default_value_t = 1)]
    copies: usize,
    /// Node index (0-based, below nodes - 1).
    #[arg(long, default_value_t = 0)]
    node: usize,
    #[command(flatten)]
    sdp: SdpOpts,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
struct FamilyArgs {
    #[arg(long)]
    alpha: f64,
    #[arg(long)]
    v: f64,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long, default_value_t = 10)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

/// `a,b,c` or `start:stop:count` (inclusive, evenly spaced).
fn parse_values(spec: &str) -> Result<Vec<f64>> {
    let bad = |msg: String| Error::Parse {
        line: 1,
        column: 1,
        message: msg,
    };
    if let Some((head, count)) = spec.rsplit_once(':') {
        let (start, stop) = head
            .split_once(':')
            .ok_or_else(|| bad(format!("range {spec:?} is not start:stop:count")))?;
        let start: f64 = start
            .trim()
            .parse()
            .map_err(|_| bad(format!("bad start in {spec:?}")))?;
        let stop: f64 = stop.trim().parse().map_err(|_| bad(format!("bad stop in {spec:?}")))?;
        let count: usize = count
            .trim()
            .parse()
            .map_err(|_| bad(format!("bad count in {spec:?}")))?;
        return Ok(match count {
            0 => bail!(bad(format!("empty range {spec:?}"))),
            1 => vec![start],
            _ => (0..count)
                .map(|i| start + (stop - start) * i as f64 / (count - 1) as f64)
                .collect(),
        });
    }
    spec.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| bad(format!("{t:?} is not a number")).into())
        })
        .collect()
}

fn parse_copies(spec: &str) -> Result<Vec<usize>> {
    spec.split(',')
        .map(|t| match t.trim().parse::<usize>() {
            Ok(k @ 1..=3) => Ok(k),
            _ => Err(Error::Parse {
                line: 1,
                column: 1,
                message: format!("copies must be 1, 2 or 3, got {t:?}"),
            }
            .into()),
        })
        .collect()
}

/// 12 significant digits; empty for missing values.
fn num(x: Option<f64>) -> String {
    match x {
        Some(v) => format!("{v:.11e}"),
        None => String::new(),
    }
}

fn timestamp_line() -> String {
    let secs = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    format!("# generated at unix time {secs}\n")
}

fn open_output(path: &Option<PathBuf>) -> Result<Box<dyn Write + Send>> {
    Ok(match path {
        Some(p) => Box::new(fs::File::create(p).with_context(|| format!("creating {}", p.display()))?),
        None => Box::new(io::stdout()),
    })
}

/// Computes rows in parallel and writes them in index order, flushing each
/// contiguous run so an interrupted run keeps every finished prefix.
fn write_ordered<T: Sync>(
    out: Box<dyn Write + Send>,
    items: &[T],
    row: impl Fn(&T) -> Result<String> + Sync,
) -> Result<()> {
    let state = Mutex::new((out, 0usize, BTreeMap::<usize, String>::new()));
    items.par_iter().enumerate().try_for_each(|(i, item)| -> Result<()> {
        let line = row(item)?;
        let mut guard = state.lock().map_err(|_| anyhow!("writer poisoned"))?;
        let (out, next, pending) = &mut *guard;
        pending.insert(i, line);
        while let Some(line) = pending.remove(next) {
            out.write_all(line.as_bytes())?;
            *next += 1;
        }
        out.flush()?;
        Ok(())
    })
}

const RATE_HEADER: &str = "alpha,v,copies,S,Q,H_AE_lb,H_cc_ub,H_AB,r_lb,r_ub\n";
const GRID_HEADER: &str = "alpha,v,copies,S,Q,H_AE_lb,H_cc_ub,H_AB,r_lb,r_ub,v_cc\n";

#[derive(Clone, Copy)]
struct GridPoint {
    alpha: f64,
    v: f64,
    copies: usize,
    with_sdp: bool,
}

fn grid_row(pt: &GridPoint, config: &PipelineConfig) -> Result<String> {
    let p = FamilyPoint::new(pt.alpha, pt.v)?;
    let b = xor_wired_family(p, pt.copies)?;
    let h_ab = cond_entropy_ab(&b, 0, 2)?;
    let h_up = h_cc(wired_params(p, pt.copies)?);
    let r_up = cc_rate_upper(p, pt.copies)?;
    let h_lb = if pt.with_sdp {
        Some(rate_report(&b, config, None)?.h_ae_lower)
    } else {
        None
    };
    let boundary = if pt.alpha > 0.0 {
        match cc_boundary(pt.alpha, pt.copies) {
            Ok(v) => Some(v),
            Err(Error::NoRoot { .. }) => None,
            Err(e) => return Err(e.into()),
        }
    } else {
        None
    };
    Ok(format!(
        "{},{},{},{},{},{},{},{},{},{},{}\n",
        num(Some(pt.alpha)),
        num(Some(pt.v)),
        pt.copies,
        num(Some(chsh(&b)?)),
        num(Some(qber(&b)?)),
        num(h_lb),
        num(Some(h_up)),
        num(Some(h_ab)),
        num(h_lb.map(|h| h - h_ab)),
        num(Some(r_up)),
        num(boundary),
    ))
}

fn cmd_rate(args: &RateArgs) -> Result<()> {
    let config = args.sdp.pipeline()?;
    let p = FamilyPoint::new(args.alpha, args.v)?;
    let b = xor_wired_family(p, args.copies)?;
    let h_up = h_cc(wired_params(p, args.copies)?);
    let report = rate_report(&b, &config, Some(h_up))?;
    let r_up = cc_rate_upper(p, args.copies)?;
    if args.json {
        let mut value = serde_json::to_value(&report)?;
        value["alpha"] = args.alpha.into();
        value["v"] = args.v.into();
        value["copies"] = args.copies.into();
        value["rate_upper"] = r_up.into();
        println!("{}", serde_json::to_string_pretty(&value)?);
    } else {
        print!("{RATE_HEADER}");
        println!(
            "{},{},{},{},{},{},{},{},{},{}",
            num(Some(args.alpha)),
            num(Some(args.v)),
            args.copies,
            num(Some(report.chsh)),
            num(Some(report.qber)),
            num(Some(report.h_ae_lower)),
            num(Some(h_up)),
            num(Some(report.h_ab)),
            num(Some(report.rate_lower)),
            num(Some(r_up)),
        );
        eprintln!(
            "solver: {} (m = {}, level {})",
            report.meta.status, report.meta.nodes, report.meta.level
        );
    }
    Ok(())
}

fn cmd_grid(args: &GridArgs) -> Result<()> {
    let config = args.sdp.pipeline()?;
    let alphas = parse_values(&args.alpha)?;
    let vs = parse_values(&args.v)?;
    let copies = parse_copies(&args.copies)?;
    let mut points = Vec::new();
    let mut index = 0usize;
    for &alpha in &alphas {
        for &v in &vs {
            FamilyPoint::new(alpha, v)?;
            let with_sdp = args.sdp_stride > 0 && index.is_multiple_of(args.sdp_stride);
            index += 1;
            for &k in &copies {
                points.push(GridPoint {
                    alpha,
                    v,
                    copies: k,
                    with_sdp,
                });
            }
        }
    }
    let mut out = open_output(&args.output)?;
    if !args.no_timestamp {
        out.write_all(timestamp_line().as_bytes())?;
    }
    out.write_all(GRID_HEADER.as_bytes())?;
    out.flush()?;
    write_ordered(out, &points, |pt| grid_row(pt, &config))
}

fn cmd_boost(args: &BoostArgs) -> Result<()> {
    let config = args.sdp.pipeline()?;
    if !(1..=3).contains(&args.max_copies) {
        bail!(Error::InvalidParameter(format!(
            "max copies must be 1..=3, got {}",
            args.max_copies
        )));
    }
    let vs = parse_values(&args.v)?;
    let points = vs
        .iter()
        .map(|&v| FamilyPoint::new(args.alpha, v))
        .collect::<diqka::Result<Vec<_>>>()?;
    let mut out = open_output(&args.output)?;
    if !args.no_timestamp {
        out.write_all(timestamp_line().as_bytes())?;
    }
    let cols: Vec<String> = (1..=args.max_copies).map(|k| format!("r{k}")).collect();
    writeln!(out, "alpha,v,{}", cols.join(","))?;
    out.flush()?;
    let max = args.max_copies;
    write_ordered(out, &points, |&p| {
        let mut fields = vec![num(Some(p.alpha)), num(Some(p.v))];
        for k in 1..=max {
            let b = xor_wired_family(p, k)?;
            let r = rate_report(&b, &config, None)?.rate_lower / k as f64;
            fields.push(num(Some(r)));
        }
        Ok(fields.join(",") + "\n")
    })
}

fn cmd_search(args: &SearchArgs) -> Result<()> {
    let b = args.source.load()?;
    let catalog = distillation_catalog();
    let r = distill_search_over(
        &b,
        &catalog,
        SearchConfig {
            all_variants: args.all_variants,
        },
    )?;
    if args.json {
        let value = serde_json::json!({
            "best_pair": r.best_pair,
            "wirings": r.best_indices.map(|i| catalog[i].describe()),
            "variant": r.variant,
            "s_before": r.s_before,
            "s_after": r.s_after,
            "elapsed": r.elapsed,
        });
        println!("{}", serde_json::to_string_pretty(&value)?);
    } else {
        let [a0, a1, b0, b1] = r.best_indices.map(|i| catalog[i].describe());
        println!(
            "best_pair: {} {} {} {}",
            r.best_pair[0], r.best_pair[1], r.best_pair[2], r.best_pair[3]
        );
        println!("alice: x=0 {a0}, x=1 {a1}");
        println!("bob: y=0 {b0}, y=1 {b1}");
        println!("variant: {:?}", r.variant);
        println!("s_before: {}", num(Some(r.s_before)));
        println!("s_after: {}", num(Some(r.s_after)));
        println!("elapsed: {:.3} s", r.elapsed);
    }
    Ok(())
}

fn parse_wirings(spec: &str, inputs: usize) -> Result<Vec<diqka::wirings::Wiring>> {
    spec.split(';')
        .map(|s| Ok(WiringParams::parse(s)?.build(inputs)?))
        .collect()
}

fn cmd_wire(args: &WireArgs) -> Result<()> {
    let b = args.source.load()?;
    let s = b.scenario();
    let pair = match (&args.alice, &args.bob) {
        _ if args.xor => xor_pair(args.copies, s)?,
        (Some(a), Some(bob)) => {
            if args.copies != 2 {
                bail!(Error::InvalidParameter("catalog wirings act on 2 copies".into()));
            }
            WiringPair::new(parse_wirings(a, s.nx)?, parse_wirings(bob, s.ny)?)?
        }
        _ => bail!(Error::InvalidParameter("give --xor or both --alice and --bob".into())),
    };
    let wired = apply_wiring(&pair, &vec![b; pair.copies()])?;
    let text = wired.to_text();
    match &args.output {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn cmd_activate(args: &ActivateArgs) -> Result<()> {
    let config = args.sdp.pipeline()?;
    let b = args.source.load()?;
    let report = activation_pipeline(&b, &config)?;
    let line = |name: &str, r: &diqka::RateReport| {
        println!(
            "{name}: S {} Q {} H_AE_lb {} H_AB {} r_lb {}",
            num(Some(r.chsh)),
            num(Some(r.qber)),
            num(Some(r.h_ae_lower)),
            num(Some(r.h_ab)),
            num(Some(r.rate_lower))
        )
    };
    line("before", &report.before);
    match (&report.after, &report.search, &report.key_wiring) {
        (Some(after), Some(search), Some(key)) => {
            println!(
                "wirings: {:?}, bob key wiring {}",
                search.best_pair,
                key.wiring.describe()
            );
            line("after", after);
            println!("activated: {}", report.activated());
        }
        _ => println!("no activation needed"),
    }
    Ok(())
}

fn cmd_export(args: &ExportArgs) -> Result<()> {
    let p = FamilyPoint::new(args.alpha, args.v)?;
    let b = xor_wired_family(p, args.copies)?;
    let opts = RelaxationOptions {
        mode: args.sdp.mode,
        ..RelaxationOptions::new(args.sdp.nodes, args.sdp.level)
    };
    let r = build_relaxation_with(&b, opts)?;
    export_sdpa(&r, args.node, &args.output)?;
    Ok(())
}

fn cmd_family(args: &FamilyArgs) -> Result<()> {
    let text = family_box(FamilyPoint::new(args.alpha, args.v)?).to_text();
    match &args.output {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn cmd_sample(args: &SampleArgs) -> Result<()> {
    println!("alpha,v,S,alice0,alice1,bob0,bob1,bob2");
    for c in sample_candidates(args.n, args.seed)? {
        let a = c.angles;
        println!(
            "{},{},{},{},{},{},{},{}",
            num(Some(c.point.alpha)),
            num(Some(c.point.v)),
            num(Some(chsh(&c.boxed)?)),
            num(Some(a.alice[0])),
            num(Some(a.alice[1])),
            num(Some(a.bob[0])),
            num(Some(a.bob[1])),
            num(Some(a.bob[2])),
        );
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::Parse { .. } | Error::InvalidParameter(_) | Error::DomainError(_) | Error::InvalidWiring(_)) => 2,
        Some(Error::SolverFailure(_) | Error::NumericalInstability { .. }) => 3,
        Some(Error::NegativeProbability { .. } | Error::NotNormalized { .. } | Error::ShapeMismatch { .. }) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Ok(n) = std::env::var(THREADS_ENV) {
        match n.parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => {
                eprintln!("error: {THREADS_ENV} must be a positive integer, got {n:?}");
                return ExitCode::from(2);
            }
        }
    }
    let result = match &cli.command {
        Command::Rate(a) => cmd_rate(a),
        Command::Grid(a) => cmd_grid(a),
        Command::Boost(a) => cmd_boost(a),
        Command::Search(a) => cmd_search(a),
        Command::Wire(a) => cmd_wire(a),
        Command::Activate(a) => cmd_activate(a),
        Command::ExportSdp(a) => cmd_export(a),
        Command::Family(a) => cmd_family(a),
        Command::Sample(a) => cmd_sample(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn value_lists_and_ranges() {
        assert_eq!(parse_values("0.1, 0.2").unwrap(), vec![0.1, 0.2]);
        assert_eq!(parse_values("0:1:3").unwrap(), vec![0.0, 0.5, 1.0]);
        assert_eq!(parse_values("0.3:1:1").unwrap(), vec![0.3]);
        assert!(parse_values("0:1:0").is_err());
        assert!(parse_values("0:1").is_err());
        assert!(parse_copies("1,4").is_err());
    }

    #[test]
    fn error_kinds_map_to_exit_codes() {
        let code = |e: Error| exit_code(&anyhow::Error::from(e));
        assert_eq!(
            code(Error::Parse {
                line: 1,
                column: 1,
                message: String::new()
            }),
            2
        );
        assert_eq!(code(Error::InvalidParameter(String::new())), 2);
        assert_eq!(code(Error::SolverFailure(String::new())), 3);
        assert_eq!(
            code(Error::NumericalInstability {
                residual: 1.0,
                threshold: 1e-6
            }),
            3
        );
        assert_eq!(exit_code(&anyhow!("io")), 1);
    }

    #[test]
    fn numbers_carry_twelve_significant_digits() {
        assert_eq!(num(Some(0.1)), "1.00000000000e-1");
        assert_eq!(num(None), "");
    }
}
