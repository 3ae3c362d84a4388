use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use openmaps::frontend::commands::{self, BisimArgs, SampleArgs, Translation};
use openmaps::frontend::Outcome;

const SCHEMAS: &str = "\
MODEL FILES
  Every input is {\"format_version\": 1, \"kind\": K, \"payload\": P}. Unknown fields are rejected.
  Rationals are \"num/den\" strings; integers and decimal strings are accepted too.

  lts       {\"states\": [id], \"initial\": id, \"transitions\": [{\"src\", \"label\", \"dst\"}]}
  obs       lts fields plus \"space\" and \"observations\": {state: point}
            space: {\"kind\": \"real-vector\", \"dim\": n, \"metric\": \"sup\" | \"euclidean\"}
                   or {\"kind\": \"discrete\", \"labels\": [..]}
            point: [rational, ...] for vectors, a label for discrete spaces
  prob      {\"states\", \"initial\", \"transitions\": [{\"src\", \"label\", \"dst\", \"p\"}]}
            each (state, label) has total probability at most 1
  tts       {\"states\", \"initial\", \"clocks\": [name],
             \"transitions\": [{\"src\", \"action\", \"dst\", \"guard\"?: {clock: interval}, \"reset\"?: [clock]}]}
            interval: \"[a,b]\", \"(a,b]\", \"[a,inf)\", ...; an omitted guard is [0,inf)
  hybrid    {\"subsystems\": [{\"name\", \"vars\", \"init\"}], \"initial\": mode,
             \"modes\": {name: {\"flow\"?: {subsystem: [expr]}, \"invariant\"?: pred, \"observation\": [expr]}},
             \"events\"?: [{\"src\", \"action\", \"dst\", \"guard\"?: pred, \"reset\"?: {subsystem: [expr]}}],
             \"params\"?: {name: number}, \"metric\"?: \"sup\" | \"euclidean\"}
            expr: + - * / unary -, parentheses, sin cos exp min max, variables, parameters and t;
            pred: comparisons joined by not, and, or; true and false. A missing flow is zero,
            a missing reset the identity, a missing invariant or guard true.
  tree      an obs payload over timed labels [action, time] that is a tree
  morphism  {\"map\": {source: target}, \"clock_map\"?: {target clock: source clock},
             \"subsystem_map\"?: {target: source}, \"epsilon\"?: bound}
  words     [[[action, time], ...], ...]
  samples   {\"objects\": [payload], \"rich\": [payload],
             \"arrows\": [{\"source\": i, \"target\": j, \"rich\"?: bool, \"map\", \"clock_map\"?, \"subsystem_map\"?, \"epsilon\"?}],
             \"words\"?: words, \"grid\"?: [rational], \"templates\"?: [{\"name\", \"vars\", \"init\", \"flow\", \"reset\"?}]}
            prob: objects lts, rich prob. timed: objects trees over timed labels (lts payloads), rich tts.
            hybrid: objects tree payloads, rich hybrid.

OUTPUT
  One JSON object with sorted keys and a \"verdict\"; evidence goes under \"witness\",
  tagged by \"kind\": bisimulation-relation, distinguishing-word, lifting-counterexample,
  law-violation or morphism-violation. Feed it back with check-witness.

EXIT CODES
  0 a verdict was reached (negative verdicts included), 1 inconclusive, 2 input error.

ENVIRONMENT
  OPENMAPS_SEED  seed of the point sampler used by hybrid morphism checks (default 0).";

#[derive(Parser)]
#[command(name = "openmaps", version, about = "Bisimilarity, morphisms and coreflection laws for transition systems", after_long_help = SCHEMAS)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate a model file.
    Validate { file: PathBuf },
    /// Apply a translation between system kinds.
    Translate {
        #[command(subcommand)]
        how: TranslateCmd,
    },
    /// Unfold a system into its tree of runs, up to a depth.
    Unfold {
        file: PathBuf,
        #[arg(long)]
        depth: usize,
        /// Words file steering timed and hybrid unfoldings.
        #[arg(long)]
        words: Option<PathBuf>,
    },
    /// Decide (or, for timed and hybrid systems, refute within bounds) bisimilarity.
    Bisim {
        a: PathBuf,
        b: PathBuf,
        /// Observation bound for obs, tree and hybrid systems.
        #[arg(long)]
        epsilon: Option<String>,
        /// Rounds of the bounded game (timed and hybrid).
        #[arg(long)]
        depth: Option<usize>,
        /// Timed delays: `canonical` or `grid:t1,t2,...`.
        #[arg(long)]
        policy: Option<String>,
        /// Words Spoiler may follow in hybrid games.
        #[arg(long)]
        words: Option<PathBuf>,
    },
    /// Check that a map is a morphism between two models.
    MorphismCheck {
        f: PathBuf,
        a: PathBuf,
        b: PathBuf,
        /// Depth of the sample runs for hybrid systems.
        #[arg(long, default_value_t = commands::DEFAULT_HYBRID_DEPTH)]
        depth: usize,
        /// Words along which hybrid sample runs are taken.
        #[arg(long)]
        words: Option<PathBuf>,
    },
    /// Check the coreflection laws of an instance on sample objects and arrows.
    LawsCheck {
        #[arg(long, value_parser = ["prob", "timed", "hybrid"])]
        instance: String,
        #[arg(long)]
        samples: PathBuf,
        #[arg(long, default_value_t = 2)]
        depth: usize,
    },
    /// Decide openness of a morphism by two independent routes.
    OpenCheck {
        f: PathBuf,
        a: PathBuf,
        b: PathBuf,
        #[arg(long)]
        max_len: Option<usize>,
    },
    /// Re-validate a witness (or a whole command output) against its inputs.
    CheckWitness { witness: PathBuf, files: Vec<PathBuf> },
}

#[derive(Subcommand)]
enum TranslateCmd {
    /// Drop probabilities.
    ForgetProb { file: PathBuf },
    /// Successors of a timed configuration under (action, delay).
    ThetaStep {
        file: PathBuf,
        #[arg(long)]
        action: String,
        #[arg(long)]
        time: String,
        /// Start state; the initial state by default.
        #[arg(long)]
        state: Option<String>,
        /// Clock values `v1,v2,...` in clock order; zero by default.
        #[arg(long)]
        valuation: Option<String>,
    },
    /// Successors of a hybrid configuration under (action, duration).
    KStep {
        file: PathBuf,
        #[arg(long)]
        action: String,
        #[arg(long)]
        time: String,
        #[arg(long)]
        mode: Option<String>,
        /// `x1,x2;y1,...`: subsystems separated by `;`.
        #[arg(long)]
        valuation: Option<String>,
    },
}

fn seed() -> Result<u64, String> {
    match std::env::var("OPENMAPS_SEED") {
        Err(_) => Ok(0),
        Ok(s) => s.trim().parse().map_err(|_| format!("OPENMAPS_SEED must be an unsigned integer, got `{s}`")),
    }
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Validate { file } => commands::validate(&file),
        Command::Translate { how } => {
            let (file, t) = match how {
                TranslateCmd::ForgetProb { file } => (file, Translation::ForgetProb),
                TranslateCmd::ThetaStep { file, action, time, state, valuation } => {
                    (file, Translation::ThetaStep { action, time, state, valuation })
                }
                TranslateCmd::KStep { file, action, time, mode, valuation } => (file, Translation::KStep { action, time, mode, valuation }),
            };
            commands::translate(&file, &t)
        }
        Command::Unfold { file, depth, words } => commands::unfold(&file, depth, words.as_deref()),
        Command::Bisim { a, b, epsilon, depth, policy, words } => commands::bisim(&a, &b, &BisimArgs { epsilon, depth, policy, words }),
        Command::MorphismCheck { f, a, b, depth, words } => match seed() {
            Ok(seed) => commands::morphism_check(&f, &a, &b, &SampleArgs { seed, depth, words }),
            Err(e) => commands::CommandError::Usage(e).outcome(),
        },
        Command::LawsCheck { instance, samples, depth } => commands::laws_check(&instance, &samples, depth),
        Command::OpenCheck { f, a, b, max_len } => commands::open_check(&f, &a, &b, max_len),
        Command::CheckWitness { witness, files } => commands::check_witness(&witness, &files),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let out = run(cli);
    let mut stdout = std::io::stdout().lock();
    if stdout.write_all(out.render().as_bytes()).is_err() {
        return ExitCode::from(2);
    }
    ExitCode::from(out.code)
}
