use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use pwchange::adversary::{attack_offline_guess, mitm_channel, GuessOptions, Parties, Protocol, TamperPlan};
use pwchange::harness::{run_scenario, parse_leaks, AttackSpec, DictionarySource, PasswordStore, Scenario};
use pwchange::{golden, Password, Preset};

/// Password-change protocols under attack: run scenarios, attacks and
/// dictionary sweeps.
///
/// Exit status: 0 when everything ran and matched expectations, 1 when an
/// attack outcome or golden file disagrees with what was expected, 2 on
/// configuration or I/O errors.
#[derive(Parser)]
#[command(name = "pwchange", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file.
    Run {
        scenario: PathBuf,
        /// Password store to read Bob's record from and update on acceptance.
        #[arg(long)]
        store: Option<PathBuf>,
        /// Directory for `<name>.transcript` and `<name>.report`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one attack against one protocol.
    Attack {
        #[arg(value_parser = ["offline-guess", "dos", "known-key"])]
        kind: String,
        #[command(flatten)]
        session: SessionArgs,
        /// DoS mask, hex, exactly byte_len bytes. Drawn from the seed if omitted.
        #[arg(long)]
        c: Option<String>,
        /// Known-key leaks: comma list of key1, key2, pw.
        #[arg(long, default_value = "key1")]
        compromised: String,
        /// Skip the subgroup check when filtering guesses.
        #[arg(long)]
        no_subgroup_filter: bool,
        #[arg(long, value_enum)]
        expect: Option<Expect>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Offline-guess reduction ratios over growing dictionary prefixes.
    Sweep {
        #[command(flatten)]
        session: SessionArgs,
    },
    /// Regenerate golden files and compare with the frozen copies.
    VerifyGolden {
        /// Write fresh golden files into this directory instead of comparing.
        #[arg(long)]
        bless: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SessionArgs {
    #[arg(long, value_parser = ["chang", "proposed"])]
    target: String,
    #[arg(long, default_value = "desk")]
    preset: String,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value = "07")]
    pw: String,
    #[arg(long, default_value = "0b")]
    new_pw: String,
    /// Dictionary file or `seq:WIDTH:START:COUNT`.
    #[arg(long, default_value = "seq:1:0:256")]
    dict: String,
}

#[derive(Clone, Copy, ValueEnum)]
enum Expect {
    Success,
    Failure,
}

impl SessionArgs {
    fn scenario(&self, name: &str) -> Result<Scenario> {
        let pw = |s: &str| Password::from_hex(s).map_err(|e| anyhow!("password `{s}`: {e}"));
        let mut s = Scenario::new(
            name,
            self.target.parse::<Protocol>().map_err(|e| anyhow!(e))?,
            self.preset.parse::<Preset>()?,
            self.seed,
            pw(&self.pw)?,
            pw(&self.new_pw)?,
        );
        s.dictionary = Some(DictionarySource::parse(&self.dict, &std::env::current_dir()?)?);
        Ok(s)
    }
}

/// Failures that are not configuration errors.
struct Mismatch(String);

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(None) => ExitCode::SUCCESS,
        Ok(Some(Mismatch(msg))) => {
            eprintln!("mismatch: {msg}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<Option<Mismatch>> {
    match cli.command {
        Command::Run { scenario, store, out } => {
            let s = Scenario::load(&scenario).with_context(|| format!("loading {}", scenario.display()))?;
            execute(&s, store, out)
        }
        Command::Attack { kind, session, c, compromised, no_subgroup_filter, expect, out } => {
            let mut s = session.scenario(&format!("{kind}-{}", session.target))?;
            s.attack = Some(match kind.as_str() {
                "offline-guess" => AttackSpec::OfflineGuess { subgroup_filter: !no_subgroup_filter },
                "dos" => AttackSpec::DoS { c: c.map(|c| hex::decode(&c)).transpose().context("--c")? },
                _ => AttackSpec::KnownKey { leaks: parse_leaks(&compromised)? },
            });
            s.expect_success = expect.map(|e| matches!(e, Expect::Success));
            execute(&s, None, out)
        }
        Command::Sweep { session } => sweep(&session),
        Command::VerifyGolden { bless: Some(dir) } => {
            golden::bless(&dir)?;
            println!("wrote {} files to {}", golden::FILES.len(), dir.display());
            Ok(None)
        }
        Command::VerifyGolden { bless: None } => {
            let checks = golden::verify();
            for c in &checks {
                match c.first_diff {
                    None => println!("ok       {}", c.name),
                    Some(line) => println!("DIFFERS  {} (line {line})", c.name),
                }
            }
            let bad = checks.iter().filter(|c| !c.matches).count();
            Ok((bad > 0).then(|| Mismatch(format!("{bad} golden file(s) differ"))))
        }
    }
}

fn execute(s: &Scenario, store: Option<PathBuf>, out: Option<PathBuf>) -> Result<Option<Mismatch>> {
    let mut store = match &store {
        Some(path) => PasswordStore::open(path)?,
        None => PasswordStore::in_memory(),
    };
    let report = run_scenario(s, &mut store, out.as_deref())?;
    print!("{}", report.render(true));
    Ok(match report.expectation_met {
        Some(false) => Some(Mismatch(format!("attack outcome differs from `expect` in {}", s.name))),
        _ => None,
    })
}

fn sweep(session: &SessionArgs) -> Result<Option<Mismatch>> {
    let s = session.scenario("sweep")?;
    let params = s.preset.load_from_env()?;
    let dictionary = s.dictionary.as_ref().expect("set above").load()?;
    let parties = Parties::seeded(&params, s.pw.clone(), s.new_pw.clone(), s.seed, dictionary.clone());
    let run = mitm_channel(s.protocol, &parties, &TamperPlan::new());

    println!("size\ttotal_pairs\tbaseline_pairs\tsurvivors\tratio\tratio_vs_baseline\ttrue_pair_kept");
    let mut n = 16.min(dictionary.len());
    loop {
        let prefix = dictionary.truncated(n);
        let report = attack_offline_guess(&run.transcript, &prefix, GuessOptions::default())?;
        let in_prefix = prefix.position(&s.pw).is_some() && prefix.position(&s.new_pw).is_some();
        let kept = if in_prefix { report.candidates.contains(&s.pw, &s.new_pw).to_string() } else { "n/a".into() };
        println!(
            "{n}\t{}\t{}\t{}\t{:.6}\t{:.6}\t{kept}",
            report.total_pairs,
            report.baseline_pairs,
            report.candidates.len(),
            report.reduction_ratio(),
            report.ratio_vs_baseline()
        );
        if n == dictionary.len() {
            break;
        }
        n = (n * 2).min(dictionary.len());
    }
    Ok(None)
}
