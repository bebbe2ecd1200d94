//! Command-line front end. Exit codes: 0 for yes/true/proven, 1 for
//! no/false/refuted, 2 for errors, 3 when the syntactic search gives up.

use std::io::{Read, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::bisim::DecideOptions;
use crate::grammar::{build_grammar, to_gnf};
use crate::kinding::Kinder;
use crate::lts::{format_trace, k_bisimilar, reachable_transitions};
use crate::parse::{parse_signature, parse_type};
use crate::pipeline::{type_equiv_in, CheckVerdict};
use crate::syntactic::{syntactic_check, Verdict};
use crate::types::{Kind, KindContext, Signature, TypeExpr};
use crate::wellformed::validate_signature;

#[derive(Parser, Debug)]
#[command(name = "session-equiv", version, about = "Equivalence of context-free session types")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Env {
    /// File of equations `X = type`, one per line.
    #[arg(long, value_name = "FILE")]
    sig: Option<PathBuf>,
    /// Kinds of free indices 0, 1, .. as a comma separated list of S and T.
    #[arg(long, value_name = "KINDS")]
    ctx: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Decide whether two types are equivalent; prints YES or NO.
    Check {
        a: String,
        b: String,
        #[command(flatten)]
        env: Env,
        /// Print the distinguishing trace on NO.
        #[arg(long)]
        explain: bool,
        /// Print the grammar and certificate on YES, the trace on NO.
        #[arg(long)]
        certificate: bool,
        /// Also run the syntactic proof search and print its outcome.
        #[arg(long)]
        explain_syntactic: bool,
        /// Upper bound on decision steps.
        #[arg(long, default_value_t = DecideOptions::default().budget)]
        budget: usize,
    },
    /// Print the kind of a type: S or T.
    Kind {
        t: String,
        #[command(flatten)]
        env: Env,
    },
    /// Print the grammar of a type.
    Grammar {
        t: String,
        #[command(flatten)]
        env: Env,
        /// Before normalization.
        #[arg(long, conflicts_with = "gnf")]
        raw: bool,
        /// After normalization, reachable part only (default).
        #[arg(long)]
        gnf: bool,
        /// Also print the subterm each nonterminal stands for.
        #[arg(long)]
        names: bool,
    },
    /// Print the transitions reachable from a type.
    Lts {
        t: String,
        #[arg(long)]
        sig: Option<PathBuf>,
        #[arg(long)]
        depth: usize,
    },
    /// Bounded bisimilarity on the type transition system; prints true or false.
    Oracle {
        a: String,
        b: String,
        #[arg(long)]
        sig: Option<PathBuf>,
        #[arg(long)]
        depth: usize,
    },
    /// Search for a syntactic equivalence derivation.
    Syntactic {
        a: String,
        b: String,
        #[arg(long)]
        sig: Option<PathBuf>,
        #[arg(long, default_value_t = 10_000)]
        fuel: usize,
    },
}

/// Runs the program on `args` (including the program name) and returns
/// the exit code.
pub fn run<I, S>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{text}");
                return 2;
            }
            let _ = write!(out, "{text}");
            return code;
        }
    };
    let mut stdin = Stdin::default();
    match execute(cli.command, &mut stdin, out) {
        Ok(code) => code,
        Err(msg) => {
            let _ = writeln!(err, "error: {msg}");
            2
        }
    }
}

/// [`run`] on the process arguments and standard streams.
pub fn cmd_dispatch(argv: Vec<String>) -> i32 {
    run(argv, &mut std::io::stdout().lock(), &mut std::io::stderr().lock())
}

/// Type arguments given as `-` are read from standard input: the whole
/// input if there is one such argument, one line each otherwise.
#[derive(Default)]
struct Stdin {
    lines: Option<Vec<String>>,
}

impl Stdin {
    fn resolve(&mut self, args: &[&String]) -> Result<Vec<String>, String> {
        let dashes = args.iter().filter(|a| a.as_str() == "-").count();
        if dashes == 0 {
            return Ok(args.iter().map(|a| a.to_string()).collect());
        }
        if self.lines.is_none() {
            let mut s = String::new();
            std::io::stdin()
                .read_to_string(&mut s)
                .map_err(|e| format!("stdin: {e}"))?;
            self.lines = Some(if dashes == 1 {
                vec![s]
            } else {
                s.lines().filter(|l| !l.trim().is_empty()).map(str::to_string).collect()
            });
        }
        let mut lines = self.lines.take().unwrap_or_default().into_iter();
        args.iter()
            .map(|a| {
                if a.as_str() == "-" {
                    lines.next().ok_or_else(|| "stdin: not enough types".to_string())
                } else {
                    Ok(a.to_string())
                }
            })
            .collect()
    }
}

fn load_sig(path: &Option<PathBuf>) -> Result<Signature, String> {
    let Some(path) = path else {
        return Ok(Signature::new());
    };
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let sig = parse_signature(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    let diags = validate_signature(&sig);
    if diags.is_empty() {
        Ok(sig)
    } else {
        Err(diags.iter().map(ToString::to_string).collect::<Vec<_>>().join("\n"))
    }
}

fn load_ctx(ctx: &Option<String>) -> Result<KindContext, String> {
    let Some(ctx) = ctx else {
        return Ok(KindContext::empty());
    };
    let kinds = ctx
        .split(',')
        .map(|k| match k.trim() {
            "S" => Ok(Kind::Session),
            "T" => Ok(Kind::Functional),
            other => Err(format!("--ctx: expected S or T, found `{other}`")),
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(KindContext::from_kinds(kinds))
}

fn types(stdin: &mut Stdin, args: &[&String]) -> Result<Vec<TypeExpr>, String> {
    stdin
        .resolve(args)?
        .iter()
        .map(|s| parse_type(s).map_err(|e| e.to_string()))
        .collect()
}

fn io(e: std::io::Error) -> String {
    e.to_string()
}

fn execute(cmd: Command, stdin: &mut Stdin, out: &mut dyn Write) -> Result<i32, String> {
    match cmd {
        Command::Check {
            a,
            b,
            env,
            explain,
            certificate,
            explain_syntactic,
            budget,
        } => {
            let sig = load_sig(&env.sig)?;
            let ctx = load_ctx(&env.ctx)?;
            let ts = types(stdin, &[&a, &b])?;
            let opts = DecideOptions {
                budget,
                ..DecideOptions::default()
            };
            let report = type_equiv_in(&ts[0], &ts[1], &ctx, &sig, opts);
            let code = match &report.verdict {
                CheckVerdict::Error(es) => {
                    return Err(es.iter().map(ToString::to_string).collect::<Vec<_>>().join("\n"));
                }
                CheckVerdict::Equivalent(cert) => {
                    writeln!(out, "YES").map_err(io)?;
                    if certificate {
                        let (g, l, r) = report.grammar.as_ref().expect("grammar with verdict");
                        write!(out, "{}", g.dump_reachable()).map_err(io)?;
                        writeln!(
                            out,
                            "start {} ~ {}",
                            crate::grammar::format_word(l),
                            crate::grammar::format_word(r)
                        )
                        .map_err(io)?;
                        write!(out, "{cert}").map_err(io)?;
                    }
                    0
                }
                CheckVerdict::NotEquivalent(w) => {
                    writeln!(out, "NO").map_err(io)?;
                    if explain || certificate {
                        writeln!(out, "{}", format_trace(w)).map_err(io)?;
                    }
                    1
                }
            };
            if explain_syntactic {
                let v = syntactic_check(&ts[0], &ts[1], &sig, 10_000).map_err(|e| e.to_string())?;
                write_syntactic(out, &v).map_err(io)?;
            }
            Ok(code)
        }
        Command::Kind { t, env } => {
            let sig = load_sig(&env.sig)?;
            let ctx = load_ctx(&env.ctx)?;
            let t = types(stdin, &[&t])?.remove(0);
            let k = Kinder::new(&sig)
                .and_then(|mut k| k.kind(&t, &ctx))
                .map_err(|e| e.to_string())?;
            writeln!(out, "{k}").map_err(io)?;
            Ok(0)
        }
        Command::Grammar {
            t,
            env,
            raw,
            gnf: _,
            names,
        } => {
            let sig = load_sig(&env.sig)?;
            let t = types(stdin, &[&t])?.remove(0);
            let g = build_grammar(&t, &sig).map_err(|e| e.to_string())?;
            let (g, text) = if raw {
                let text = g.dump();
                (g, text)
            } else {
                let g = to_gnf(&g).map_err(|e| e.to_string())?;
                let text = g.dump_reachable();
                (g, text)
            };
            write!(out, "{text}").map_err(io)?;
            if names {
                let heads = if raw { g.nonterminals() } else { g.reachable() };
                write!(out, "{}", g.names(&heads)).map_err(io)?;
            }
            Ok(0)
        }
        Command::Lts { t, sig, depth } => {
            let sig = load_sig(&sig)?;
            let t = types(stdin, &[&t])?.remove(0);
            for (s, l, s2) in reachable_transitions(&t, depth, &sig).map_err(|e| e.to_string())? {
                writeln!(out, "{s} --{l}--> {s2}").map_err(io)?;
            }
            Ok(0)
        }
        Command::Oracle { a, b, sig, depth } => {
            let sig = load_sig(&sig)?;
            let ts = types(stdin, &[&a, &b])?;
            let ok = k_bisimilar(&ts[0], &ts[1], depth, &sig).map_err(|e| e.to_string())?;
            writeln!(out, "{ok}").map_err(io)?;
            Ok(if ok { 0 } else { 1 })
        }
        Command::Syntactic { a, b, sig, fuel } => {
            let sig = load_sig(&sig)?;
            let ts = types(stdin, &[&a, &b])?;
            let v = syntactic_check(&ts[0], &ts[1], &sig, fuel).map_err(|e| e.to_string())?;
            write_syntactic(out, &v).map_err(io)?;
            Ok(match v {
                Verdict::Proven(_) => 0,
                Verdict::Refuted(_) => 1,
                Verdict::Unknown => 3,
            })
        }
    }
}

fn write_syntactic(out: &mut dyn Write, v: &Verdict) -> std::io::Result<()> {
    match v {
        Verdict::Proven(d) => {
            writeln!(out, "proven")?;
            write!(out, "{d}")
        }
        Verdict::Refuted(g) => writeln!(out, "refuted at {g}"),
        Verdict::Unknown => writeln!(out, "unknown"),
    }
}
