//! Command-line front end: ring reports, chain trees, resolutions, global
//! dimensions and the verification suites.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use endochain::chain::ChainTree;
use endochain::endo::{family_global_dimension, fcmt_check, DEFAULT_PD_CAP};
use endochain::io::{self, ModuleDefinition, RingDefinition, RingRef};
use endochain::resolver::Resolver;
use endochain::suite::{self, CorpusEntry, SuiteConfig, SUITES};
use endochain::{CurveRing, Error, Lattice, RingOptions};

#[derive(Parser, Debug)]
#[command(
    name = "endochain",
    version,
    about = "Iterated endomorphism rings of curve singularities"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Recompute with every window doubled and require identical reports.
    #[arg(long, global = true)]
    double_check: bool,
    /// Cap on projective dimension searches.
    #[arg(long, global = true, env = "ENDOCHAIN_PD_CAP", default_value_t = DEFAULT_PD_CAP as u64,
          value_parser = clap::value_parser!(u64).range(1..))]
    pd_cap: u64,
    #[arg(long, global = true, value_enum, default_value_t = Output::Text)]
    output: Output,
    /// Seed for the randomized suites.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Output {
    Text,
    Json,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Invariants of a ring.
    Ring { input: PathBuf },
    /// The chain tree of iterated endomorphism rings.
    Chain { input: PathBuf },
    /// Resolve a module by sums of chain rings.
    Resolve {
        module: PathBuf,
        /// Ring file; defaults to the module file's `ring` entry.
        #[arg(long)]
        ring: Option<PathBuf>,
    },
    /// Global dimension of the endomorphism algebra.
    Gldim {
        input: PathBuf,
        /// JSON list of module definitions to use instead of the chain family.
        #[arg(long)]
        modules: Option<PathBuf>,
    },
    /// Run verification suites on the built-in corpus or on ring files.
    Verify {
        /// A ring file or a directory of ring files.
        input: Option<PathBuf>,
        #[arg(long, default_value = "all")]
        suite: String,
    },
}

enum Failure {
    Engine(Error, Value),
    Input(String, Value),
}

type Outcome = Result<(Value, String, bool), Failure>;

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let ctx = json!({ "path": path.display().to_string() });
    let text = fs::read_to_string(path).map_err(|e| Failure::Input(format!("cannot read file: {e}"), ctx.clone()))?;
    serde_json::from_str(&text).map_err(|e| Failure::Input(format!("schema error: {e}"), ctx))
}

fn engine<T>(r: endochain::Result<T>, ctx: &Value) -> Result<T, Failure> {
    r.map_err(|e| Failure::Engine(e, ctx.clone()))
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("serializable report")
}

fn load_ring(path: &Path, options: RingOptions) -> Result<std::sync::Arc<CurveRing>, Failure> {
    let def: RingDefinition = read_json(path)?;
    engine(def.build_with(options), &json!({ "path": path.display().to_string() }))
}

struct Ctx {
    options: RingOptions,
    pd_cap: usize,
    seed: u64,
}

fn cmd_ring(input: &Path, c: &Ctx) -> Outcome {
    let ring = load_ring(input, c.options)?;
    let out = io::ring_output(&ring);
    let mut text = format!(
        "branches: {}\nconductor: {:?}\ndelta: {}\n",
        out.branches, out.conductor, out.delta
    );
    match &out.report {
        Some(r) => text.push_str(&format!(
            "multiplicity: {}\nembedding dimension: {}\nnormal: {}\n",
            r.multiplicity, r.embedding_dim, r.is_dvr_product
        )),
        None => text.push_str("not local\n"),
    }
    if let Some(s) = &out.value_semigroup {
        text.push_str(&format!("value semigroup generators: {s:?}\n"));
    }
    Ok((to_value(&out), text, true))
}

fn cmd_chain(input: &Path, c: &Ctx) -> Outcome {
    let ring = load_ring(input, c.options)?;
    let ctx = json!({ "path": input.display().to_string() });
    let tree = engine(ChainTree::build(&ring), &ctx)?;
    let e = engine(ring.report(), &ctx)?.multiplicity;
    let out = io::ChainOutput {
        n: tree.depth(),
        e,
        delta: ring.delta(),
        normalization_check: tree.normalization_check(),
        tree: tree.summary(),
        family: tree
            .family()
            .members
            .iter()
            .map(|m| endochain::chain::describe(m))
            .collect(),
    };
    let mut text = format!("n = {}, e = {}, delta = {}\n", out.n, out.e, out.delta);
    for (i, node) in out.tree.nodes.iter().enumerate() {
        text.push_str(&format!("{}[{i}] {}\n", "  ".repeat(node.depth), node.description));
    }
    text.push_str(&format!("normalization check: {}\n", out.normalization_check));
    let ok = out.normalization_check;
    Ok((to_value(&out), text, ok))
}

fn cmd_resolve(module: &Path, ring_path: Option<&Path>, c: &Ctx) -> Outcome {
    let def: ModuleDefinition = read_json(module)?;
    let ring = match (ring_path, &def.ring) {
        (Some(p), _) => load_ring(p, c.options)?,
        (None, Some(RingRef::Path(p))) => {
            let p = module.parent().unwrap_or(Path::new(".")).join(p);
            load_ring(&p, c.options)?
        }
        (None, Some(RingRef::Inline(d))) => engine(
            d.build_with(c.options),
            &json!({ "path": module.display().to_string() }),
        )?,
        (None, None) => {
            return Err(Failure::Input(
                "module file names no ring; pass --ring".into(),
                json!({ "path": module.display().to_string() }),
            ))
        }
    };
    let ctx = json!({ "path": module.display().to_string() });
    let lattice = engine(def.build(ring.clone()), &ctx)?;
    let tree = engine(ChainTree::build(&ring), &ctx)?;
    let resolver = Resolver::new(&tree);
    let res = engine(resolver.resolve(&lattice), &ctx)?;
    let out = io::resolution_output(&resolver, &res);
    let mut text = format!("length {} (chain length {})\n", out.length, tree.depth());
    for (j, t) in out.terms.iter().enumerate() {
        text.push_str(&format!("C_{j}: {}\n", t.summands.join(" + ")));
    }
    let cert = &out.certificate;
    text.push_str(&format!(
        "exact: {}\nHom-exact: {:?}\ndecomposition: {}\n",
        cert.exact, cert.hom_exact, cert.decomposition
    ));
    let ok = cert.passed();
    Ok((to_value(&out), text, ok))
}

fn cmd_gldim(input: &Path, modules: Option<&Path>, c: &Ctx) -> Outcome {
    let ring = load_ring(input, c.options)?;
    let ctx = json!({ "path": input.display().to_string() });
    let rep = match modules {
        None => {
            let tree = engine(ChainTree::build(&ring), &ctx)?;
            engine(family_global_dimension(&tree, c.pd_cap), &ctx)?
        }
        Some(p) => {
            let defs: Vec<ModuleDefinition> = read_json(p)?;
            let list = defs
                .iter()
                .map(|d| d.build(ring.clone()))
                .collect::<endochain::Result<Vec<Lattice>>>();
            let list = engine(list, &ctx)?;
            engine(fcmt_check(list, c.pd_cap), &ctx)?
        }
    };
    let pds: Vec<String> = rep.pd_per_simple.iter().map(|p| p.to_string()).collect();
    let mut text = format!("gldim {}\npd of simples: [{}]\n", rep.gldim, pds.join(", "));
    if let Some(b) = rep.chain_bound {
        text.push_str(&format!("chain bound n + 1 = {b}\n"));
    }
    text.push_str(&format!(
        "dimension bound {}\nmultiplicity e = {}\n",
        rep.dimension_bound, rep.multiplicity_bound
    ));
    for a in &rep.assumptions {
        text.push_str(&format!("assumption: {a}\n"));
    }
    let ok = rep.gldim.exact().is_some() && rep.within_chain_bound.unwrap_or(true);
    Ok((to_value(&rep), text, ok))
}

fn load_corpus(input: &Path) -> Result<Vec<CorpusEntry>, Failure> {
    let mut paths: Vec<PathBuf> = if input.is_dir() {
        fs::read_dir(input)
            .map_err(|e| {
                Failure::Input(
                    format!("cannot read directory: {e}"),
                    json!({ "path": input.display().to_string() }),
                )
            })?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect()
    } else {
        vec![input.to_path_buf()]
    };
    paths.sort();
    paths
        .iter()
        .map(|p| {
            Ok(CorpusEntry {
                name: p
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_default(),
                definition: read_json(p)?,
            })
        })
        .collect()
}

fn cmd_verify(input: Option<&Path>, which: &str, c: &Ctx) -> Outcome {
    let corpus = match input {
        Some(p) => load_corpus(p)?,
        None => suite::corpus(),
    };
    let names: Vec<&str> = if which == "all" {
        SUITES.to_vec()
    } else {
        which.split(',').map(str::trim).collect()
    };
    let cfg = SuiteConfig {
        seed: c.seed,
        pd_cap: c.pd_cap,
        options: c.options,
    };
    let mut reports = Vec::new();
    for name in names {
        match suite::run_suite(name, &corpus, &cfg) {
            Some(r) => reports.push(r),
            None => {
                return Err(Failure::Input(
                    format!("unknown suite {name:?}"),
                    json!({ "known": SUITES, "requested": which }),
                ))
            }
        }
    }
    let ok = reports.iter().all(|r| r.passed);
    let mut text = String::new();
    for r in &reports {
        text.push_str(&format!(
            "{} {} ({} cases)\n",
            if r.passed { "PASS" } else { "FAIL" },
            r.name,
            r.cases
        ));
        for f in &r.failures {
            text.push_str(&format!("  counterexample: {f}\n"));
        }
        for n in &r.notes {
            text.push_str(&format!("  {n}\n"));
        }
    }
    Ok((json!({ "passed": ok, "suites": reports }), text, ok))
}

fn dispatch(cli: &Cli, c: &Ctx) -> Outcome {
    match &cli.command {
        Command::Ring { input } => cmd_ring(input, c),
        Command::Chain { input } => cmd_chain(input, c),
        Command::Resolve { module, ring } => cmd_resolve(module, ring.as_deref(), c),
        Command::Gldim { input, modules } => cmd_gldim(input, modules.as_deref(), c),
        Command::Verify { input, suite } => cmd_verify(input.as_deref(), suite, c),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let ctx = Ctx {
        options: RingOptions::default(),
        pd_cap: cli.pd_cap as usize,
        seed: cli.seed,
    };
    let mut outcome = dispatch(&cli, &ctx);
    if cli.double_check && !matches!(cli.command, Command::Verify { .. }) {
        if let Ok((first, _, _)) = &outcome {
            let doubled = Ctx {
                options: RingOptions::doubled(),
                ..ctx
            };
            match dispatch(&cli, &doubled) {
                Ok((second, _, _)) if strip_windows(second.clone()) == strip_windows(first.clone()) => {}
                Ok(_) => {
                    outcome = Err(Failure::Engine(
                        Error::CertificateFailed("report changed under a doubled window".into()),
                        json!({ "double_check": true }),
                    ))
                }
                Err(f) => outcome = Err(f),
            }
        }
    }
    match outcome {
        Ok((value, text, ok)) => {
            match cli.output {
                Output::Json => println!("{}", serde_json::to_string_pretty(&value).unwrap()),
                Output::Text => print!("{text}"),
            }
            if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(Failure::Engine(e, context)) => {
            let obj = json!({ "code": e.code(), "message": e.to_string(), "context": context });
            let e = &e;
            eprintln!("{}", serde_json::to_string_pretty(&obj).unwrap());
            ExitCode::from(if matches!(e, Error::Parse(_)) { 2 } else { 1 })
        }
        Err(Failure::Input(message, context)) => {
            let obj = json!({ "code": "InputError", "message": message, "context": context });
            eprintln!("{}", serde_json::to_string_pretty(&obj).unwrap());
            ExitCode::from(2)
        }
    }
}

/// Reports minus fields that legitimately depend on the window.
fn strip_windows(mut v: Value) -> Value {
    if let Some(o) = v.as_object_mut() {
        o.remove("definition");
    }
    v
}
