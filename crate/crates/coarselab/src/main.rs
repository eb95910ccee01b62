//! Command-line front end: ball construction, growth, bigon search and
//! counting, divergence, hyperbolicity estimates, coarse-map transport,
//! small-cancellation diagnostics, and the linear-divergence experiment.

use std::collections::HashMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use num_rational::Ratio;
use serde_json::json;

use coarselab::bigons::{
    count_bigons, find_bigon, parse_ratio, ratio_string, verify_bigon, BigonParams,
    BigonWitness, CountMode, CountOptions, SearchStrategy, DEFAULT_K_SHORTEST,
};
use coarselab::divergence::{
    construct_bigon_from_divergence, divergence_function, divergence_pair, divergence_rel,
    CandidateMode, DivLength, DivergenceParams, PairMode,
};
use coarselab::embeddings::{
    push_bigon, rebase_bigon, verify_coarse, CoarseMap, MapFile,
};
use coarselab::error::{Error, Result};
use coarselab::graph::{growth_report, vertex_budget, BallGraph};
use coarselab::hyperbolicity::{
    detour_statistics, four_point_delta, projection_defect_check, thin_triangle_delta, DeltaMode,
};
use coarselab::models::{GroupSpec, Model};
use coarselab::smallcanc::{
    check_metric_condition, generate_rw_family, pieces, relator_to_bigon,
    reduced_words_of_length, Presentation, RwFamilyOptions,
};

const SCHEMA: &str = "coarselab/1";

#[derive(Parser)]
#[command(name = "coarselab", version, about = "graph-scale coarse geometry toolkit")]
struct Cli {
    /// optional key=value config file (precedence: flags > config > defaults)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// worker pool size (default: available parallelism)
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// vertex budget override (also via COARSELAB_VERTEX_BUDGET)
    #[arg(long, global = true)]
    budget: Option<usize>,
    /// write the report here instead of stdout
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// build a ball graph and emit it as JSON
    Ball {
        #[command(subcommand)]
        cmd: BallCmd,
    },
    /// growth counts |B_n| with a log-linear fit
    Growth(GraphArgs),
    /// bigon search, verification and counting
    Bigons {
        #[command(subcommand)]
        cmd: BigonCmd,
    },
    /// path lengths around forbidden balls
    Divergence {
        #[command(subcommand)]
        cmd: DivCmd,
    },
    /// hyperbolicity constants and the quantitative geodesic checks
    Hyperbolicity {
        #[command(subcommand)]
        cmd: HypCmd,
    },
    /// coarse maps: control functions and bigon transport
    Embed {
        #[command(subcommand)]
        cmd: EmbedCmd,
    },
    /// small-cancellation presentations
    Sc {
        #[command(subcommand)]
        cmd: ScCmd,
    },
    /// multi-stage experiments
    Experiment {
        #[command(subcommand)]
        cmd: ExpCmd,
    },
}

#[derive(Subcommand)]
enum BallCmd {
    Build(GraphArgs),
}

#[derive(Args, Clone)]
struct GraphArgs {
    /// group spec, e.g. free(2), abelian(2), lamplighter, bs(1,2),
    /// product(free(1),abelian(1)), presentation(FILE)
    #[arg(long)]
    group: Option<String>,
    /// previously built ball graph (JSON)
    #[arg(long)]
    graph: Option<PathBuf>,
    /// plain "i j" edge list (loaded as an exact graph)
    #[arg(long)]
    edges: Option<PathBuf>,
    #[arg(long)]
    radius: Option<u32>,
    /// treat the ball as the whole space when certifying separations
    #[arg(long, default_value_t = false)]
    assume_exact: bool,
}

#[derive(Args, Clone)]
struct ParamArgs {
    /// multiplicative length bound L (rational, e.g. 2 or 5/2)
    #[arg(short = 'L', long = "length-factor")]
    l: Option<String>,
    /// separation s
    #[arg(short = 's', long = "separation")]
    s: Option<u32>,
    /// basepoint-neighbourhood radius C
    #[arg(short = 'C', long = "cutoff")]
    c: Option<u32>,
}

#[derive(Subcommand)]
enum BigonCmd {
    Count {
        #[command(flatten)]
        graph: GraphArgs,
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, default_value_t = false)]
        exact: bool,
        #[arg(long)]
        n_max: Option<u32>,
        #[arg(long)]
        none_bound: Option<u32>,
    },
    Find {
        #[command(flatten)]
        graph: GraphArgs,
        #[command(flatten)]
        params: ParamArgs,
        /// target vertex as a word in the generators
        #[arg(long)]
        x: String,
    },
    Verify {
        #[command(flatten)]
        graph: GraphArgs,
        /// witness JSON file
        #[arg(long)]
        witness: PathBuf,
    },
}

#[derive(Args, Clone)]
struct DivParamArgs {
    /// forbidden-ball fraction delta (rational, default 1/2)
    #[arg(long)]
    delta: Option<String>,
    /// forbidden-ball slack gamma (rational, default 2)
    #[arg(long)]
    gamma: Option<String>,
}

#[derive(Subcommand)]
enum DivCmd {
    Rel {
        #[command(flatten)]
        graph: GraphArgs,
        #[command(flatten)]
        params: DivParamArgs,
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
        #[arg(long)]
        c: String,
    },
    Pair {
        #[command(flatten)]
        graph: GraphArgs,
        #[command(flatten)]
        params: DivParamArgs,
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
        /// try every center instead of only geodesic-blocking ones
        #[arg(long, default_value_t = false)]
        exact_centers: bool,
    },
    Function {
        #[command(flatten)]
        graph: GraphArgs,
        #[command(flatten)]
        params: DivParamArgs,
        #[arg(long)]
        n_max: Option<u32>,
        /// sample pairs instead of exhausting them
        #[arg(long, default_value_t = false)]
        sampled: bool,
        #[arg(long)]
        pairs_per_n: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// also emit CSV lines n,DivX_n,status
        #[arg(long, default_value_t = false)]
        csv: bool,
    },
    Construct {
        #[command(flatten)]
        graph: GraphArgs,
        #[command(flatten)]
        params: DivParamArgs,
        #[arg(long)]
        x: String,
        /// linear divergence coefficient D (rational ≥ 1)
        #[arg(long)]
        d_factor: String,
        #[arg(short = 's', long)]
        s: Option<u32>,
    },
}

#[derive(Subcommand)]
enum HypCmd {
    Delta {
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long, default_value = "thin-triangle")]
        method: String,
        #[arg(long, default_value_t = false)]
        exhaustive: bool,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// projection-defect and detour checks against a measured delta
    Claims {
        #[command(flatten)]
        graph: GraphArgs,
        /// delta to test against (rational); measured if omitted
        #[arg(long)]
        delta: Option<String>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// detour endpoints (words); defaults to a diameter-ish pair
        #[arg(long)]
        detour_x: Option<String>,
        #[arg(long)]
        detour_y: Option<String>,
        #[arg(short = 's', long)]
        s: Option<u32>,
        #[arg(short = 'k', long)]
        k: Option<usize>,
    },
}

#[derive(Subcommand)]
enum EmbedCmd {
    Verify {
        #[command(flatten)]
        map: MapArgs,
    },
    Push {
        #[command(flatten)]
        map: MapArgs,
        #[arg(long)]
        witness: PathBuf,
        /// A_ε threshold (rational, default 1/2)
        #[arg(long)]
        epsilon: Option<String>,
    },
    Rebase {
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long)]
        witness: PathBuf,
        /// the witness's own basepoint, as a word
        #[arg(long)]
        old_basepoint: String,
    },
}

#[derive(Args, Clone)]
struct MapArgs {
    #[arg(long)]
    source: String,
    #[arg(long)]
    target: String,
    #[arg(long)]
    radius: Option<u32>,
    /// "identity", "factor-inclusion", or a JSON map file
    #[arg(long, default_value = "factor-inclusion")]
    map: String,
    #[arg(long)]
    pair_budget: Option<usize>,
}

#[derive(Subcommand)]
enum ScCmd {
    Parse {
        #[command(flatten)]
        input: ScInput,
    },
    /// per-relator piece lengths (CSV: relator_index,length,max_piece,ratio)
    Pieces {
        #[command(flatten)]
        input: ScInput,
    },
    /// metric small-cancellation check C'(lambda)
    Check {
        #[command(flatten)]
        input: ScInput,
        #[arg(long, default_value = "1/6")]
        lambda: String,
    },
    /// generate the c-interleaved relator family over words of one length
    Generate {
        #[arg(long)]
        word_length: usize,
        #[arg(long)]
        exponent_bound: Option<u32>,
        #[arg(long, default_value_t = false)]
        exclude_proper_powers: bool,
        /// keep only words whose length lies in this comma-separated list
        #[arg(long)]
        lacunary: Option<String>,
    },
    /// trace relator cycles in the presentation's own Cayley ball
    Bigons {
        #[command(flatten)]
        input: ScInput,
        #[arg(long)]
        radius: Option<u32>,
        #[arg(short = 's', long)]
        s: Option<u32>,
    },
}

#[derive(Args, Clone)]
struct ScInput {
    /// presentation file
    #[arg(long)]
    file: Option<PathBuf>,
    /// inline presentation text, e.g. "<a,b | a b a^-1 b^-1>"
    #[arg(long)]
    presentation: Option<String>,
}

#[derive(Subcommand)]
enum ExpCmd {
    /// growth → divergence → constructed bigons → counts → verdict
    PropLindiv {
        #[command(flatten)]
        graph: GraphArgs,
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long)]
        n_max: Option<u32>,
        #[arg(long)]
        exact_check_radius: Option<u32>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

/// key=value file, '#' comments
struct Config(HashMap<String, String>);

impl Config {
    fn load(path: Option<&Path>) -> Result<Config> {
        let mut map = HashMap::new();
        if let Some(p) = path {
            for line in std::fs::read_to_string(p)?.lines() {
                let line = line.split('#').next().unwrap_or("").trim();
                if line.is_empty() {
                    continue;
                }
                let (k, v) = line.split_once('=').ok_or_else(|| {
                    Error::Parse(format!("config line is not key=value: {line:?}"))
                })?;
                map.insert(k.trim().to_string(), v.trim().to_string());
            }
        }
        Ok(Config(map))
    }

    fn get<T: FromStr>(&self, key: &str, flag: Option<T>, default: T) -> Result<T> {
        if let Some(v) = flag {
            return Ok(v);
        }
        match self.0.get(key) {
            Some(raw) => raw.parse().map_err(|_| {
                Error::Parse(format!("config key {key} has unusable value {raw:?}"))
            }),
            None => Ok(default),
        }
    }

    fn get_opt<T: FromStr>(&self, key: &str, flag: Option<T>) -> Result<Option<T>> {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.0.get(key) {
            Some(raw) => raw
                .parse()
                .map(Some)
                .map_err(|_| Error::Parse(format!("config key {key} has unusable value {raw:?}"))),
            None => Ok(None),
        }
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            // clap's own exit code for usage errors is 2; this tool reserves
            // 2 for horizon/resource failures
            let is_help = matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            );
            let _ = e.print();
            std::process::exit(if is_help { 0 } else { 1 });
        }
    };
    match run(cli) {
        Ok(()) => {}
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let cfg = Config::load(cli.config.as_deref())?;
    let threads = cfg.get("threads", cli.threads, 0)?;
    if threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Error::Unsupported(format!("thread pool: {e}")))?;
    }
    let budget = vertex_budget(cfg.get_opt("budget", cli.budget)?);
    let out = cli.out.clone();
    let emit = |report: serde_json::Value| -> Result<()> {
        let text = serde_json::to_string_pretty(&report).map_err(Error::Json)?;
        match &out {
            Some(p) => {
                let mut f = std::fs::File::create(p)?;
                writeln!(f, "{text}")?;
            }
            None => println!("{text}"),
        }
        Ok(())
    };

    match cli.cmd {
        Cmd::Ball { cmd: BallCmd::Build(g) } => {
            let (_, graph) = load_graph(&g, &cfg, budget)?;
            let parsed: serde_json::Value = serde_json::from_str(&graph.to_json())?;
            emit(json!({
                "schema": SCHEMA,
                "version": env!("CARGO_PKG_VERSION"),
                "spec": graph.spec,
                "generators": graph.generators,
                "params": {"radius": graph.radius, "budget": budget},
                "graph": parsed,
            }))
        }
        Cmd::Growth(g) => {
            let (_, graph) = load_graph(&g, &cfg, budget)?;
            let rep = growth_report(&graph);
            emit(json!({
                "schema": SCHEMA,
                "version": env!("CARGO_PKG_VERSION"),
                "spec": graph.spec,
                "generators": graph.generators,
                "params": {"radius": graph.radius},
                "report": rep,
            }))
        }
        Cmd::Bigons { cmd } => run_bigons(cmd, &cfg, budget, emit),
        Cmd::Divergence { cmd } => run_divergence(cmd, &cfg, budget, emit),
        Cmd::Hyperbolicity { cmd } => run_hyperbolicity(cmd, &cfg, budget, emit),
        Cmd::Embed { cmd } => run_embed(cmd, &cfg, budget, emit),
        Cmd::Sc { cmd } => run_sc(cmd, &cfg, budget, emit),
        Cmd::Experiment { cmd } => run_experiment(cmd, &cfg, budget, emit),
    }
}

fn load_graph(args: &GraphArgs, cfg: &Config, budget: usize) -> Result<(Option<Model>, BallGraph)> {
    let group = cfg.get_opt("group", args.group.clone())?;
    let mut pair: (Option<Model>, BallGraph) = if let Some(path) = &args.graph {
        (None, BallGraph::from_json(&std::fs::read_to_string(path)?)?)
    } else if let Some(path) = &args.edges {
        (None, BallGraph::from_edge_list(path)?)
    } else if let Some(spec_text) = group {
        let radius = cfg.get("radius", args.radius, 6)?;
        let spec = GroupSpec::parse(&spec_text)?;
        let model = Model::from_spec(&spec)?;
        let graph = BallGraph::build(&model, &spec_text, radius, budget)?;
        (Some(model), graph)
    } else {
        return Err(Error::Precondition(
            "provide --group, --graph or --edges".into(),
        ));
    };
    if args.assume_exact {
        pair.1 = pair.1.assume_exact();
    }
    Ok(pair)
}

fn bigon_params(p: &ParamArgs, cfg: &Config) -> Result<BigonParams> {
    let l = parse_ratio(&cfg.get("L", p.l.clone(), "2".into())?)?;
    let s = cfg.get("s", p.s, 1)?;
    let c = cfg.get("C", p.c, 0)?;
    BigonParams::new(l, s, c)
}

fn envelope(g: &BallGraph, params: serde_json::Value, report: serde_json::Value) -> serde_json::Value {
    json!({
        "schema": SCHEMA,
        "version": env!("CARGO_PKG_VERSION"),
        "spec": g.spec,
        "generators": g.generators,
        "params": params,
        "report": report,
    })
}

fn vertex_arg(g: &BallGraph, model: &Option<Model>, text: &str) -> Result<u32> {
    match model {
        Some(m) => g.vertex_of_word(m, text),
        None => {
            // graphs without a model accept raw indices or labels
            if let Ok(ix) = text.parse::<u32>() {
                if (ix as usize) < g.len() {
                    return Ok(ix);
                }
            }
            g.vertex_by_label(text).ok_or_else(|| {
                Error::Precondition(format!("no vertex with label or index {text:?}"))
            })
        }
    }
}

fn run_bigons(
    cmd: BigonCmd,
    cfg: &Config,
    budget: usize,
    emit: impl Fn(serde_json::Value) -> Result<()>,
) -> Result<()> {
    match cmd {
        BigonCmd::Count { graph, params, exact, n_max, none_bound } => {
            let (_, g) = load_graph(&graph, cfg, budget)?;
            let p = bigon_params(&params, cfg)?;
            let opts = CountOptions {
                mode: if exact { CountMode::Exact } else { CountMode::Heuristic },
                none_bound,
                ..CountOptions::default()
            };
            let n_max = cfg.get("n_max", n_max, g.radius)?;
            let rep = count_bigons(&g, p, n_max, &opts)?;
            emit(envelope(
                &g,
                json!({"L": ratio_string(p.l), "s": p.s, "C": p.c, "exact": exact, "n_max": n_max}),
                serde_json::to_value(&rep)?,
            ))
        }
        BigonCmd::Find { graph, params, x } => {
            let (model, g) = load_graph(&graph, cfg, budget)?;
            let p = bigon_params(&params, cfg)?;
            let xv = vertex_arg(&g, &model, &x)?;
            let strategies =
                [SearchStrategy::Geodesic, SearchStrategy::KShortest(DEFAULT_K_SHORTEST)];
            let found = find_bigon(&g, xv, p, &strategies)?;
            let report = match &found {
                Some(w) => json!({
                    "found": true,
                    "witness": serde_json::from_str::<serde_json::Value>(&w.to_json())?,
                }),
                None => json!({"found": false}),
            };
            emit(envelope(
                &g,
                json!({"L": ratio_string(p.l), "s": p.s, "C": p.c, "x": x}),
                report,
            ))
        }
        BigonCmd::Verify { graph, witness } => {
            let (_, g) = load_graph(&graph, cfg, budget)?;
            let w = BigonWitness::from_json(&std::fs::read_to_string(&witness)?)?;
            let ok = verify_bigon(&g, &w)?;
            emit(envelope(
                &g,
                json!({"witness": witness.display().to_string()}),
                json!({"valid": ok}),
            ))
        }
    }
}

fn div_params(p: &DivParamArgs, cfg: &Config) -> Result<DivergenceParams> {
    Ok(DivergenceParams {
        delta: parse_ratio(&cfg.get("delta", p.delta.clone(), "1/2".into())?)?,
        gamma: parse_ratio(&cfg.get("gamma", p.gamma.clone(), "2".into())?)?,
    })
}

fn div_length_json(l: &DivLength) -> serde_json::Value {
    match l {
        DivLength::Finite(n) => json!(n),
        DivLength::UnboundedInBall => json!("UNBOUNDED-IN-BALL"),
    }
}

fn run_divergence(
    cmd: DivCmd,
    cfg: &Config,
    budget: usize,
    emit: impl Fn(serde_json::Value) -> Result<()>,
) -> Result<()> {
    match cmd {
        DivCmd::Rel { graph, params, a, b, c } => {
            let (model, g) = load_graph(&graph, cfg, budget)?;
            let dp = div_params(&params, cfg)?;
            let rec = divergence_rel(
                &g,
                vertex_arg(&g, &model, &a)?,
                vertex_arg(&g, &model, &b)?,
                vertex_arg(&g, &model, &c)?,
                &dp,
            )?;
            emit(envelope(
                &g,
                json!({"a": a, "b": b, "c": c, "delta": ratio_string(dp.delta), "gamma": ratio_string(dp.gamma)}),
                serde_json::to_value(&rec)?,
            ))
        }
        DivCmd::Pair { graph, params, a, b, exact_centers } => {
            let (model, g) = load_graph(&graph, cfg, budget)?;
            let dp = div_params(&params, cfg)?;
            let mode = if exact_centers { CandidateMode::Exact } else { CandidateMode::Fast };
            let rec = divergence_pair(
                &g,
                vertex_arg(&g, &model, &a)?,
                vertex_arg(&g, &model, &b)?,
                &dp,
                mode,
            )?;
            emit(envelope(
                &g,
                json!({"a": a, "b": b, "exact_centers": exact_centers,
                       "delta": ratio_string(dp.delta), "gamma": ratio_string(dp.gamma)}),
                serde_json::to_value(&rec)?,
            ))
        }
        DivCmd::Function { graph, params, n_max, sampled, pairs_per_n, seed, csv } => {
            let (_, g) = load_graph(&graph, cfg, budget)?;
            let dp = div_params(&params, cfg)?;
            let n_max = cfg.get("n_max", n_max, 12.min(g.radius))?;
            let mode = if sampled {
                PairMode::Sampled {
                    pairs_per_n: cfg.get("pairs_per_n", pairs_per_n, 64)?,
                    seed: cfg.get("seed", seed, 0)?,
                }
            } else {
                PairMode::Exhaustive
            };
            let rep = divergence_function(&g, n_max, &dp, mode)?;
            if csv {
                println!("n,DivX_n,status");
                for e in &rep.entries {
                    match e.value {
                        DivLength::Finite(v) => println!("{},{},>=", e.n, v),
                        DivLength::UnboundedInBall => {
                            println!("{},,UNBOUNDED-IN-BALL", e.n)
                        }
                    }
                }
            }
            emit(envelope(
                &g,
                json!({"n_max": n_max, "sampled": sampled,
                       "delta": ratio_string(dp.delta), "gamma": ratio_string(dp.gamma),
                       "seed": rep.seed}),
                serde_json::to_value(&rep)?,
            ))
        }
        DivCmd::Construct { graph, params, x, d_factor, s } => {
            let (model, g) = load_graph(&graph, cfg, budget)?;
            let dp = div_params(&params, cfg)?;
            let d = parse_ratio(&cfg.get("d_factor", Some(d_factor), "1".into())?)?;
            let s = cfg.get("s", s, 1)?;
            let w = construct_bigon_from_divergence(
                &g,
                vertex_arg(&g, &model, &x)?,
                d,
                s,
                &dp,
            )?;
            emit(envelope(
                &g,
                json!({"x": x, "D": ratio_string(d), "s": s}),
                serde_json::from_str::<serde_json::Value>(&w.to_json())?,
            ))
        }
    }
}

fn run_hyperbolicity(
    cmd: HypCmd,
    cfg: &Config,
    budget: usize,
    emit: impl Fn(serde_json::Value) -> Result<()>,
) -> Result<()> {
    match cmd {
        HypCmd::Delta { graph, method, exhaustive, samples, seed } => {
            let (_, g) = load_graph(&graph, cfg, budget)?;
            let mode = if exhaustive {
                DeltaMode::Exhaustive
            } else {
                DeltaMode::Sampled {
                    samples: cfg.get("samples", samples, 5000)?,
                    seed: cfg.get("seed", seed, 0)?,
                }
            };
            let rep = match method.as_str() {
                "thin-triangle" => thin_triangle_delta(&g, mode)?,
                "four-point" => four_point_delta(&g, mode)?,
                other => {
                    return Err(Error::Unsupported(format!(
                        "unknown delta method {other:?} (thin-triangle | four-point)"
                    )))
                }
            };
            emit(envelope(&g, json!({"method": method}), rep.to_json()))
        }
        HypCmd::Claims { graph, delta, samples, seed, detour_x, detour_y, s, k } => {
            let (model, g) = load_graph(&graph, cfg, budget)?;
            let samples = cfg.get("samples", samples, 1000)?;
            let seed = cfg.get("seed", seed, 0)?;
            let delta = match cfg.get_opt("hyp_delta", delta)? {
                Some(text) => parse_ratio(&text)?,
                None => {
                    let mode = if g.len() <= 120 {
                        DeltaMode::Exhaustive
                    } else {
                        DeltaMode::Sampled { samples: 5000, seed }
                    };
                    thin_triangle_delta(&g, mode)?.delta
                }
            };
            let delta_checked = delta.max(Ratio::from_integer(1));
            let proj = projection_defect_check(&g, delta_checked, samples, seed)?;
            // detour endpoints: supplied, or the lexicographically first
            // deepest vertex against the basepoint
            let deepest = (0..g.len() as u32)
                .max_by_key(|&v| (g.depth[v as usize], std::cmp::Reverse(v)))
                .unwrap_or(0);
            let x = match &detour_x {
                Some(t) => vertex_arg(&g, &model, t)?,
                None => g.basepoint,
            };
            let y = match &detour_y {
                Some(t) => vertex_arg(&g, &model, t)?,
                None => deepest,
            };
            let s = cfg.get("s", s, 1)?;
            let k = cfg.get("k", k, 1)?;
            let detour = detour_statistics(&g, x, y, s, k);
            let detour_json = match &detour {
                Ok(rec) => json!({
                    "s": rec.s, "k": rec.k, "centers": rec.centers,
                    "length": div_length_json(&rec.length),
                }),
                Err(e) => json!({"error": e.to_string()}),
            };
            emit(envelope(
                &g,
                json!({"delta": ratio_string(delta), "samples": samples, "seed": seed, "s": s, "k": k}),
                json!({
                    "projection": {
                        "max_defect": proj.max_defect,
                        "bound": ratio_string(proj.bound),
                        "defect_violations": proj.defect_violations,
                        "midpoint_violations": proj.midpoint_violations,
                    },
                    "detour": detour_json,
                }),
            ))
        }
    }
}

fn load_map(
    args: &MapArgs,
    cfg: &Config,
    budget: usize,
) -> Result<(Model, BallGraph, Model, BallGraph, CoarseMap)> {
    let radius = cfg.get("radius", args.radius, 6)?;
    let src_spec = GroupSpec::parse(&args.source)?;
    let tgt_spec = GroupSpec::parse(&args.target)?;
    let src_model = Model::from_spec(&src_spec)?;
    let tgt_model = Model::from_spec(&tgt_spec)?;
    let src = BallGraph::build(&src_model, &args.source, radius, budget)?;
    let tgt = BallGraph::build(&tgt_model, &args.target, radius, budget)?;
    let map = match args.map.as_str() {
        "identity" => {
            if args.source != args.target {
                return Err(Error::Precondition(
                    "identity map needs identical source and target".into(),
                ));
            }
            CoarseMap::identity(&src)
        }
        "factor-inclusion" => CoarseMap::factor_inclusion(&src, &tgt, &tgt_model)?,
        path => {
            let file: MapFile = serde_json::from_str(&std::fs::read_to_string(path)?)?;
            if file.source_spec != args.source || file.target_spec != args.target {
                return Err(Error::Precondition(format!(
                    "map file is for {} → {}, not {} → {}",
                    file.source_spec, file.target_spec, args.source, args.target
                )));
            }
            CoarseMap::from_pairs(&src, &tgt, &file.pairs)?
        }
    };
    Ok((src_model, src, tgt_model, tgt, map))
}

fn run_embed(
    cmd: EmbedCmd,
    cfg: &Config,
    budget: usize,
    emit: impl Fn(serde_json::Value) -> Result<()>,
) -> Result<()> {
    match cmd {
        EmbedCmd::Verify { map } => {
            let (_, src, _, tgt, m) = load_map(&map, cfg, budget)?;
            let pair_budget = cfg.get("pair_budget", map.pair_budget, 64)?;
            let rep = verify_coarse(&src, &tgt, &m, pair_budget)?;
            emit(json!({
                "schema": SCHEMA,
                "version": env!("CARGO_PKG_VERSION"),
                "spec": {"source": src.spec, "target": tgt.spec},
                "params": {"map": m.name, "pair_budget": pair_budget},
                "report": rep,
            }))
        }
        EmbedCmd::Push { map, witness, epsilon } => {
            let (_, src, _, tgt, m) = load_map(&map, cfg, budget)?;
            let pair_budget = cfg.get("pair_budget", map.pair_budget, 64)?;
            let rep = verify_coarse(&src, &tgt, &m, pair_budget)?;
            let w = BigonWitness::from_json(&std::fs::read_to_string(&witness)?)?;
            let eps = parse_ratio(&cfg.get("epsilon", epsilon, "1/2".into())?)?;
            let out_w = push_bigon(&src, &tgt, &m, &rep, &w, eps)?;
            emit(json!({
                "schema": SCHEMA,
                "version": env!("CARGO_PKG_VERSION"),
                "spec": {"source": src.spec, "target": tgt.spec},
                "params": {"map": m.name, "epsilon": ratio_string(eps),
                            "K": rep.k, "rho_s": rep.rho_at(w.params.s)?},
                "report": serde_json::from_str::<serde_json::Value>(&out_w.to_json())?,
            }))
        }
        EmbedCmd::Rebase { graph, witness, old_basepoint } => {
            let (model, g) = load_graph(&graph, cfg, budget)?;
            let w = BigonWitness::from_json(&std::fs::read_to_string(&witness)?)?;
            let x0p = vertex_arg(&g, &model, &old_basepoint)?;
            let out_w = rebase_bigon(&g, &w, x0p)?;
            emit(envelope(
                &g,
                json!({"old_basepoint": old_basepoint}),
                serde_json::from_str::<serde_json::Value>(&out_w.to_json())?,
            ))
        }
    }
}

fn load_presentation(input: &ScInput) -> Result<Presentation> {
    match (&input.file, &input.presentation) {
        (Some(p), _) => Presentation::parse(&std::fs::read_to_string(p)?),
        (None, Some(text)) => Presentation::parse(text),
        (None, None) => Err(Error::Precondition(
            "provide --file or --presentation".into(),
        )),
    }
}

fn presentation_text(p: &Presentation) -> String {
    let rel: Vec<String> =
        p.relators.iter().map(|r| r.display(&p.generators)).collect();
    format!("<{} | {}>", p.generators.join(","), rel.join(", "))
}

fn run_sc(
    cmd: ScCmd,
    cfg: &Config,
    budget: usize,
    emit: impl Fn(serde_json::Value) -> Result<()>,
) -> Result<()> {
    match cmd {
        ScCmd::Parse { input } => {
            let p = load_presentation(&input)?;
            emit(json!({
                "schema": SCHEMA,
                "version": env!("CARGO_PKG_VERSION"),
                "generators": p.generators,
                "relator_lengths": p.relators.iter().map(|r| r.len()).collect::<Vec<_>>(),
                "presentation": presentation_text(&p),
            }))
        }
        ScCmd::Pieces { input } => {
            let p = load_presentation(&input)?;
            let rep = pieces(&p)?;
            println!("relator_index,length,max_piece,ratio");
            for e in &rep.entries {
                println!(
                    "{},{},{},{}/{}",
                    e.relator_index, e.relator_len, e.max_piece, e.max_piece, e.relator_len
                );
            }
            emit(json!({
                "schema": SCHEMA,
                "version": env!("CARGO_PKG_VERSION"),
                "max_piece": rep.entries.iter().map(|e| e.max_piece).max().unwrap_or(0),
                "lambda_ratio": format!("{}/{}", rep.lambda_ratio.0, rep.lambda_ratio.1),
            }))
        }
        ScCmd::Check { input, lambda } => {
            let p = load_presentation(&input)?;
            let lam = parse_ratio(&lambda)?;
            let (ok, rep) = check_metric_condition(&p, lam)?;
            emit(json!({
                "schema": SCHEMA,
                "version": env!("CARGO_PKG_VERSION"),
                "lambda": lambda,
                "satisfied": ok,
                "max_piece": rep.entries.iter().map(|e| e.max_piece).max().unwrap_or(0),
            }))
        }
        ScCmd::Generate { word_length, exponent_bound, exclude_proper_powers, lacunary } => {
            let words = reduced_words_of_length(word_length);
            let opts = RwFamilyOptions {
                exponent_bound: exponent_bound.unwrap_or(24),
                exclude_proper_powers,
                lacunary_lengths: match lacunary {
                    Some(text) => Some(
                        text.split(',')
                            .map(|t| {
                                t.trim().parse::<usize>().map_err(|_| {
                                    Error::Parse(format!("bad lacunary length {t:?}"))
                                })
                            })
                            .collect::<Result<Vec<_>>>()?,
                    ),
                    None => None,
                },
            };
            let p = generate_rw_family(&words, &opts)?;
            println!("{}", presentation_text(&p));
            emit(json!({
                "schema": SCHEMA,
                "version": env!("CARGO_PKG_VERSION"),
                "params": {"word_length": word_length,
                            "exponent_bound": opts.exponent_bound,
                            "exclude_proper_powers": exclude_proper_powers},
                "relators": p.relators.len(),
                "relator_lengths": p.relators.iter().map(|r| r.len()).collect::<Vec<_>>(),
            }))
        }
        ScCmd::Bigons { input, radius, s } => {
            let p = load_presentation(&input)?;
            let s = cfg.get("s", s, 1)?;
            let max_r = p.relators.iter().map(|r| r.len()).max().unwrap_or(0);
            let radius =
                cfg.get("radius", radius, (max_r.div_ceil(2) + s as usize) as u32)?;
            let relators = p.relators.clone();
            let model = Model::from_presentation(p)?;
            let g = BallGraph::build(&model, "presentation", radius, budget)?;
            let mut results = Vec::new();
            for (i, r) in relators.iter().enumerate() {
                match relator_to_bigon(&g, &model, r, s) {
                    Ok(w) => results.push(json!({
                        "relator": i,
                        "witness": serde_json::from_str::<serde_json::Value>(&w.to_json())?,
                    })),
                    Err(e) => results.push(json!({"relator": i, "error": e.to_string()})),
                }
            }
            emit(envelope(&g, json!({"s": s, "radius": radius}), json!(results)))
        }
    }
}

fn run_experiment(
    cmd: ExpCmd,
    cfg: &Config,
    budget: usize,
    emit: impl Fn(serde_json::Value) -> Result<()>,
) -> Result<()> {
    match cmd {
        ExpCmd::PropLindiv { graph, params, n_max, exact_check_radius, seed } => {
            let mut graph = graph;
            if graph.group.is_none() && graph.graph.is_none() && graph.edges.is_none() {
                graph.group = Some("lamplighter".into());
            }
            let (_, g) = load_graph(&graph, cfg, budget)?;
            let seed = cfg.get("seed", seed, 0)?;
            // stage 1: growth
            let growth = growth_report(&g);
            // stage 2: divergence at a sampled horizon
            let dp = DivergenceParams::default();
            let div_n = (g.radius / 2).clamp(2, 8);
            let div = divergence_function(
                &g,
                div_n,
                &dp,
                PairMode::Sampled { pairs_per_n: 16, seed },
            )?;
            // stage 3: an explicitly constructed witness at small depth
            // (the construction needs depth ≤ radius/10)
            let p = {
                let mut p = params;
                if p.l.is_none() {
                    p.l = Some("2".into());
                }
                if p.s.is_none() {
                    p.s = Some(1);
                }
                if p.c.is_none() {
                    p.c = Some(4);
                }
                bigon_params(&p, cfg)?
            };
            let construct_depth = (g.radius / 10).min(4 * p.s);
            let constructed = if construct_depth >= 1 {
                let x = (0..g.len() as u32)
                    .find(|&v| g.depth[v as usize] == construct_depth)
                    .unwrap_or(g.basepoint);
                match construct_bigon_from_divergence(
                    &g,
                    x,
                    Ratio::from_integer(2),
                    p.s,
                    &dp,
                ) {
                    Ok(w) => json!({"x": w.x, "verified": true,
                                     "L": ratio_string(w.params.l)}),
                    Err(e) => json!({"error": e.to_string()}),
                }
            } else {
                json!({"skipped": "radius too small"})
            };
            // stage 4: certified-witness counts
            let n_max = cfg.get("n_max", n_max, g.radius.saturating_sub(2))?;
            let counts = count_bigons(&g, p, n_max, &CountOptions::default())?;
            // stage 5: exact cross-check at a shallow horizon
            let exact_r = cfg.get(
                "exact_check_radius",
                exact_check_radius,
                7.min(n_max),
            )?;
            let exact = count_bigons(
                &g,
                p,
                exact_r,
                &CountOptions { mode: CountMode::Exact, ..CountOptions::default() },
            )?;
            let exact_matches = counts.counts[..=exact_r as usize] == exact.counts[..];
            let verdict = if counts.verdict == "exponential-at-horizon"
                && exact_matches
                && growth.log_slope > 0.05
            {
                "exponential-at-horizon"
            } else {
                "inconclusive"
            };
            emit(envelope(
                &g,
                json!({"L": ratio_string(p.l), "s": p.s, "C": p.c,
                        "n_max": n_max, "seed": seed, "exact_check_radius": exact_r}),
                json!({
                    "growth": growth,
                    "divergence": div,
                    "constructed_witness": constructed,
                    "counts": counts,
                    "exact_counts": exact,
                    "exact_matches": exact_matches,
                    "verdict": verdict,
                }),
            ))
        }
    }
}