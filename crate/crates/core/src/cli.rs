//! Command-line front end. Every result is exact text (`n/2^k`, quoted bit
//! strings, sorted cylinder lists) or JSON with `--format json`.
//!
//! Exit codes: 0 ok, 1 domain violation, 2 I/O or parse error.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::cantor::ratio::format_rational;
use crate::cantor::{BitString, ClopenSet};
use crate::error::{Error, Result};
use crate::export::{Digests, InstanceExport};
use crate::fixture::{Fixture, FixtureKind};
use crate::mltest::{fail_region, tau_clopen, test_value};
use crate::pct::{apply, preimage_clopen, preimage_cylinder};
use crate::reduction::{build_instance, decode, find_witness, verify_chain, ReductionInstance};
use crate::semimeasure::{mixture, round_up_monotone, PowerOfTwo, StagedKind};
use crate::verify::{report, verify_instance, Check};

pub const DEFAULT_MAX_DEPTH: usize = 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Parser, Debug)]
#[command(name = "kforge", version, about = "Exact finite-stage reductions to test-passing inputs")]
struct Cli {
    /// Stage to evaluate at; defaults to the last stage.
    #[arg(long, global = true)]
    stage: Option<usize>,
    /// Fail-region depth; defaults to the exactness depth of the instance.
    #[arg(long, global = true)]
    depth: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Write the result here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check a fixture against its kind's axioms.
    Validate { path: PathBuf },
    /// Print the weighted mixture of a family.
    Mixture { path: PathBuf },
    /// Print the rounded-up semimeasure M'.
    RoundUp {
        #[arg(long)]
        family_s: PathBuf,
        #[arg(long)]
        family_omega: PathBuf,
    },
    /// Build an instance file (written to --out, or printed).
    Build {
        #[arg(long)]
        family_s: PathBuf,
        #[arg(long)]
        family_omega: PathBuf,
    },
    /// Longest output certified by an input prefix.
    Apply {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        beta: BitString,
    },
    /// B(x), the preimage of a clopen set, or the whole allocation.
    Preimage {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, conflicts_with = "set")]
        x: Option<BitString>,
        #[arg(long)]
        set: Option<String>,
    },
    /// Inputs mapping into xΩ that pass the test at level c.
    Witness {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        x: BitString,
    },
    /// Nested witness sets along the prefixes of a target.
    Chain {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        a: BitString,
    },
    /// Output recovered from an input prefix at the last stage.
    Decode {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        beta: BitString,
    },
    /// Integral of the test over a clopen set.
    Tau {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        set: String,
    },
    /// Value of the test on a cylinder.
    TestValue {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        beta: BitString,
    },
    /// Cylinders where the test exceeds c (the instance constant by default).
    FailRegion {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        c: Option<String>,
    },
    /// The dominance constant c.
    Dominance {
        #[arg(long)]
        instance: PathBuf,
    },
    /// Run every invariant on an instance; with both families, also check
    /// that rebuilding reproduces the file byte for byte.
    Verify {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, requires = "family_omega")]
        family_s: Option<PathBuf>,
        #[arg(long, requires = "family_s")]
        family_omega: Option<PathBuf>,
    },
}

/// Result of a command before it is written out.
struct Outcome {
    text: String,
    code: i32,
}

impl Outcome {
    fn ok(text: String) -> Self {
        Outcome { text, code: 0 }
    }
}

fn max_depth() -> Result<usize> {
    match std::env::var("KFORGE_MAX_DEPTH") {
        Err(_) => Ok(DEFAULT_MAX_DEPTH),
        Ok(v) => v.trim().parse().map_err(|_| Error::Parse {
            position: "KFORGE_MAX_DEPTH".into(),
            message: format!("{v:?} is not a nonnegative integer"),
        }),
    }
}

fn parse_set(text: &str) -> Result<ClopenSet> {
    let raw: Vec<String> = serde_json::from_str(text).map_err(|e| Error::Parse {
        position: "--set".into(),
        message: e.to_string(),
    })?;
    raw.iter()
        .map(|s| s.parse::<BitString>())
        .collect::<Result<Vec<_>>>()
        .map(ClopenSet::from_cylinders)
}

fn load_instance(path: &Path) -> Result<ReductionInstance> {
    InstanceExport::parse(&std::fs::read_to_string(path)?)?.to_instance()
}

fn load_families(family_s: &Path, family_omega: &Path) -> Result<(Fixture, Fixture)> {
    Ok((Fixture::load(family_s)?, Fixture::load(family_omega)?))
}

fn build_export(fs: &Fixture, fo: &Fixture) -> Result<(ReductionInstance, InstanceExport)> {
    let inst = build_instance(&fs.distributions()?, &fo.semimeasures()?)?;
    let digests = Digests {
        family_s: fs.digest(),
        family_omega: fo.digest(),
    };
    let export = InstanceExport::from_instance(&inst, digests)?;
    Ok((inst, export))
}

fn stage_of(cli: &Cli, s_max: usize) -> Result<usize> {
    match cli.stage {
        Some(stage) if stage > s_max => Err(Error::StageOutOfRange { stage, s_max }),
        Some(stage) => Ok(stage),
        None => Ok(s_max),
    }
}

fn depth_of(cli: &Cli, inst: &ReductionInstance) -> Result<usize> {
    let depth = cli.depth.unwrap_or_else(|| inst.default_depth());
    let cap = max_depth()?;
    if depth > cap {
        return Err(Error::DepthCap { depth, cap });
    }
    Ok(depth)
}

fn quoted(x: &BitString) -> String {
    format!("{x:?}")
}

fn lines<I: IntoIterator<Item = String>>(items: I) -> String {
    items.into_iter().map(|l| l + "\n").collect()
}

fn render(cli: &Cli, text: String, value: serde_json::Value) -> String {
    match cli.format {
        Format::Text => text,
        Format::Json => serde_json::to_string_pretty(&value).expect("json output") + "\n",
    }
}

fn clopen_json(set: &ClopenSet) -> serde_json::Value {
    serde_json::to_value(set).expect("clopen json")
}

fn cmd_validate(cli: &Cli, path: &Path) -> Result<Outcome> {
    let fixture = Fixture::load(path)?;
    if fixture.members.is_empty() {
        return Err(Error::EmptyFamily);
    }
    let result = match fixture.kind {
        FixtureKind::Distribution => fixture
            .distributions()?
            .iter()
            .zip(&fixture.members)
            .find_map(|(g, m)| g.validate().err().map(|v| (m.id.clone(), Error::NotDistribution(v)))),
        FixtureKind::Semimeasure => fixture
            .semimeasures()?
            .iter()
            .zip(&fixture.members)
            .find_map(|(g, m)| g.validate().err().map(|v| (m.id.clone(), Error::NotSemimeasure(v)))),
    };
    Ok(match result {
        None => Outcome::ok(render(cli, "valid\n".into(), json!({ "valid": true }))),
        Some((id, e)) => Outcome {
            text: render(
                cli,
                format!("member {id}: {e}\n"),
                json!({ "valid": false, "member": id, "violation": e.to_string() }),
            ),
            code: 1,
        },
    })
}

fn cmd_mixture(cli: &Cli, path: &Path) -> Result<Outcome> {
    let fixture = Fixture::load(path)?;
    let (kind, staged) = match fixture.kind {
        FixtureKind::Distribution => (fixture.kind, mixture(&fixture.distributions()?)?.staged().clone()),
        FixtureKind::Semimeasure => (fixture.kind, mixture(&fixture.semimeasures()?)?.staged().clone()),
    };
    let s = stage_of(cli, staged.s_max())?;
    match cli.format {
        Format::Text => Ok(Outcome::ok(lines(
            staged
                .support_shortlex()
                .iter()
                .map(|x| format!("{} {}", quoted(x), format_rational(&staged.value(x, s)))),
        ))),
        Format::Json => {
            let mixed = Fixture {
                kind,
                members: vec![crate::fixture::Member {
                    id: "mixture".into(),
                    values: staged,
                }],
            };
            Ok(Outcome::ok(mixed.to_json() + "\n"))
        }
    }
}

fn cmd_round_up(cli: &Cli, family_s: &Path, family_omega: &Path) -> Result<Outcome> {
    let (fs, fo) = load_families(family_s, family_omega)?;
    let m = mixture(&fs.distributions()?)?;
    let big_m = mixture(&fo.semimeasures()?)?;
    let s = stage_of(cli, m.s_max().max(big_m.s_max()))?;
    let snap = round_up_monotone(&big_m, &m, s)?;
    let mut order: Vec<_> = snap.iter().collect();
    order.sort_by(|a, b| a.0.shortlex_cmp(b.0));
    let text = lines(order.iter().map(|(x, v)| format!("{} {v}", quoted(x))));
    let value = json!({
        "stage": s,
        "values": order.iter().map(|(x, v)| (x.to_string(), json!(v.to_string()))).collect::<serde_json::Map<_, _>>(),
    });
    Ok(Outcome::ok(render(cli, text, value)))
}

fn cmd_build(cli: &Cli, family_s: &Path, family_omega: &Path) -> Result<Outcome> {
    let (fs, fo) = load_families(family_s, family_omega)?;
    let (inst, export) = build_export(&fs, &fo)?;
    let body = export.to_json();
    let levels: Vec<String> = inst.bound().levels().iter().map(u32::to_string).collect();
    let summary = format!("c = {}\nt_level = [{}]\n", inst.c(), levels.join(", "));
    match &cli.out {
        Some(path) => {
            std::fs::write(path, body)?;
            let value = json!({ "c": inst.c().to_string(), "t_level": inst.bound().levels() });
            Ok(Outcome::ok(render(cli, summary, value)))
        }
        None => Ok(Outcome::ok(body)),
    }
}

fn cmd_verify(
    cli: &Cli,
    instance: &Path,
    families: Option<(&Path, &Path)>,
) -> Result<Outcome> {
    let text = std::fs::read_to_string(instance)?;
    let inst = InstanceExport::parse(&text)?.to_instance()?;
    let cap = cli.depth.into_iter().fold(max_depth()?, usize::min);
    let mut checks = verify_instance(&inst, cap);
    if let Some((fs, fo)) = families {
        let (fs, fo) = load_families(fs, fo)?;
        let (_, export) = build_export(&fs, &fo)?;
        checks.push(Check {
            name: "rebuild reproduces instance",
            ok: export.to_json() == text,
            detail: "rebuilt export differs from the file".into(),
        });
    }
    let failed = checks.iter().filter(|c| !c.ok).count();
    let value = json!({
        "ok": failed == 0,
        "checks": checks.iter().map(|c| json!({ "name": c.name, "ok": c.ok, "detail": c.detail })).collect::<Vec<_>>(),
    });
    let mut text = report(&checks);
    text.push_str(&format!("{} checks, {failed} failed\n", checks.len()));
    Ok(Outcome {
        text: render(cli, text, value),
        code: i32::from(failed > 0),
    })
}

fn parse_power(text: &str) -> Result<PowerOfTwo> {
    let err = || Error::Parse {
        position: "--c".into(),
        message: format!("{text:?} is not a power of two"),
    };
    let v: u64 = text.parse().map_err(|_| err())?;
    if !v.is_power_of_two() {
        return Err(err());
    }
    Ok(PowerOfTwo(v.trailing_zeros()))
}

fn execute(cli: &Cli) -> Result<Outcome> {
    match &cli.command {
        Command::Validate { path } => cmd_validate(cli, path),
        Command::Mixture { path } => cmd_mixture(cli, path),
        Command::RoundUp { family_s, family_omega } => cmd_round_up(cli, family_s, family_omega),
        Command::Build { family_s, family_omega } => cmd_build(cli, family_s, family_omega),
        Command::Verify { instance, family_s, family_omega } => cmd_verify(
            cli,
            instance,
            family_s.as_deref().zip(family_omega.as_deref()),
        ),
        Command::Apply { instance, beta } => {
            let inst = load_instance(instance)?;
            let s = stage_of(cli, inst.s_max())?;
            let out = apply(inst.allocation(), beta, s);
            Ok(Outcome::ok(render(cli, quoted(&out) + "\n", json!(out))))
        }
        Command::Preimage { instance, x, set } => {
            let inst = load_instance(instance)?;
            let s = stage_of(cli, inst.s_max())?;
            let result = match (x, set) {
                (Some(x), _) => preimage_cylinder(inst.allocation(), x, s)?,
                (None, Some(set)) => preimage_clopen(inst.allocation(), &parse_set(set)?, s)?,
                (None, None) => {
                    let export = inst.allocation().export(s);
                    return Ok(Outcome::ok(
                        serde_json::to_string_pretty(&export).expect("allocation json") + "\n",
                    ));
                }
            };
            Ok(Outcome::ok(render(cli, format!("{result}\n"), clopen_json(&result))))
        }
        Command::Witness { instance, x } => {
            let inst = load_instance(instance)?;
            let w = find_witness(&inst, x, depth_of(cli, &inst)?)?;
            Ok(Outcome::ok(render(cli, format!("{w}\n"), clopen_json(&w))))
        }
        Command::Chain { instance, a } => {
            let inst = load_instance(instance)?;
            let chain = verify_chain(&inst, a, depth_of(cli, &inst)?)?;
            let text = lines(chain.iter().map(|(p, set)| format!("{} {set}", quoted(p))));
            let value = json!(chain
                .iter()
                .map(|(p, set)| json!({ "prefix": p, "set": clopen_json(set) }))
                .collect::<Vec<_>>());
            Ok(Outcome::ok(render(cli, text, value)))
        }
        Command::Decode { instance, beta } => {
            let inst = load_instance(instance)?;
            let out = decode(&inst, beta);
            Ok(Outcome::ok(render(cli, quoted(&out) + "\n", json!(out))))
        }
        Command::Tau { instance, set } => {
            let inst = load_instance(instance)?;
            let s = stage_of(cli, inst.s_max())?;
            let v = format_rational(&tau_clopen(&inst.test(), &parse_set(set)?, s));
            Ok(Outcome::ok(render(cli, format!("{v}\n"), json!(v))))
        }
        Command::TestValue { instance, beta } => {
            let inst = load_instance(instance)?;
            let s = stage_of(cli, inst.s_max())?;
            let v = format_rational(&test_value(&inst.test(), beta, s));
            Ok(Outcome::ok(render(cli, format!("{v}\n"), json!(v))))
        }
        Command::FailRegion { instance, c } => {
            let inst = load_instance(instance)?;
            let s = stage_of(cli, inst.s_max())?;
            let c = match c {
                Some(text) => parse_power(text)?,
                None => inst.c(),
            };
            let depth = depth_of(cli, &inst)?;
            let region = fail_region(&inst.test(), &c.to_rational(), s, depth)?;
            Ok(Outcome::ok(render(cli, format!("{region}\n"), clopen_json(&region))))
        }
        Command::Dominance { instance } => {
            let inst = load_instance(instance)?;
            let c = inst.c().to_string();
            Ok(Outcome::ok(render(cli, format!("c = {c}\n"), json!({ "c": c }))))
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    if e.is_input_error() {
        2
    } else {
        1
    }
}

/// Runs the CLI on `args` (including the program name) and returns the exit
/// code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let rendered = e.render().to_string();
            let _ = if code == 0 {
                out.write_all(rendered.as_bytes())
            } else {
                err.write_all(rendered.as_bytes())
            };
            return code;
        }
    };
    let outcome = match execute(&cli) {
        Ok(o) => o,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return exit_code(&e);
        }
    };
    let to_file = !matches!(cli.command, Command::Build { .. });
    match (&cli.out, to_file) {
        (Some(path), true) => {
            if let Err(e) = std::fs::write(path, &outcome.text) {
                let _ = writeln!(err, "error: io: {e}");
                return 2;
            }
        }
        _ => {
            let _ = out.write_all(outcome.text.as_bytes());
        }
    }
    outcome.code
}
