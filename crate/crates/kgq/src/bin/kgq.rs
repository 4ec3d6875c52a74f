//! Thin command-line front end over the kgq library. Each subcommand maps
//! onto one library entry point; all real work lives in the library.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use kgq::combine::{
    fixed_violations, overlap_table, violations, violations_with_removals, write_key_set,
    write_low_quality, write_overlap, IndicatorResult, PAYLOAD_COLUMNS,
};
use kgq::config::{read_config, read_manifest, PipelineConfig};
use kgq::constraints::{
    build_closure, build_dump_index, ingest_constraints, read_specs, validate_all,
    violation_ratio_table, write_report_files, write_specs, ConstraintType,
};
use kgq::deprecation::{aggregate_deprecated, extract_deprecated};
use kgq::diff::{accumulate, diff_files_to, read_ledger, write_ledger, DumpDiff, FileDiffOptions};
use kgq::fetch::{fetch, FetchOptions};
use kgq::model::edge_io::{load_dump, write_tsv, ParseIssue};
use kgq::model::{Dump, IdentityMode, Statement, StatementKey};
use kgq::pipeline::{
    run_pipeline, write_classifications, write_counts, write_histogram, write_switches,
};
use kgq::updates::{classify_removals, taxonomy_switch_report};

#[derive(Parser)]
#[command(
    name = "kgq",
    version,
    about = "Detect and analyze low-quality statements in knowledge-graph dumps"
)]
struct Cli {
    /// Configuration file (flat key = value lines).
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Worker threads for parallel stages; at least 1.
    #[arg(long, global = true, value_name = "N")]
    workers: Option<usize>,
    /// Scratch directory for spill files and the run lock.
    #[arg(long, global = true, value_name = "DIR")]
    scratch: Option<PathBuf>,
    /// How statements are identified across dumps.
    #[arg(long, global = true, value_enum, value_name = "MODE")]
    identity_mode: Option<IdentityModeArg>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum IdentityModeArg {
    /// Subject, property and object value identify a statement.
    Content,
    /// The statement id column identifies a statement.
    Id,
}

impl From<IdentityModeArg> for IdentityMode {
    fn from(arg: IdentityModeArg) -> IdentityMode {
        match arg {
            IdentityModeArg::Content => IdentityMode::Content,
            IdentityModeArg::Id => IdentityMode::Id,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Diff two dumps into added.tsv and removed.tsv.
    Diff {
        /// Earlier dump edge file.
        #[arg(long)]
        old: PathBuf,
        /// Later dump edge file.
        #[arg(long)]
        new: PathBuf,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Accumulate permanent removals over a chronological dump list.
    Accumulate {
        /// File listing dump paths, oldest first, one per line.
        #[arg(long)]
        manifest: PathBuf,
        /// Ledger output path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Classify ledger removals against per-interval added statements.
    ClassifyUpdates {
        /// Ledger written by accumulate.
        #[arg(long)]
        ledger: PathBuf,
        /// Directory of added-statement files, one per dump transition,
        /// each named after the later dump's label.
        #[arg(long)]
        added: PathBuf,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Extract deprecated statements and aggregate them by property and class.
    Deprecated {
        /// Dump edge file.
        #[arg(long)]
        dump: PathBuf,
        /// Edge file holding the dump's typing statements.
        #[arg(long)]
        instances: PathBuf,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Constraint tooling.
    #[command(subcommand)]
    Constraints(ConstraintsCommand),
    /// Validate a dump against compiled constraint specs.
    Validate {
        /// Spec table written by constraints compile.
        #[arg(long)]
        specs: PathBuf,
        /// Dump edge file.
        #[arg(long)]
        dump: PathBuf,
        /// Constraint types to check (default: all).
        #[arg(long, value_delimiter = ',', value_name = "TYPE,..")]
        types: Vec<String>,
        /// Output directory for per-property reports and summaries.
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-validate with removals restored and combine the three indicators.
    Combine {
        /// Live dump edge file.
        #[arg(long)]
        dump: PathBuf,
        /// Ledger written by accumulate.
        #[arg(long)]
        ledger: PathBuf,
        /// Spec table written by constraints compile.
        #[arg(long)]
        specs: PathBuf,
        /// Deprecated-statement edge file.
        #[arg(long)]
        deprecated: PathBuf,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run every stage over the configured dump sequence.
    Run {
        /// Report bundle directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Download a dump with resume and checksum verification.
    Fetch {
        /// Source: http(s) URL, file:// URL, or local path.
        url: String,
        /// Destination file.
        #[arg(long)]
        out: PathBuf,
        /// Expected sha256 of the complete file, lowercase hex.
        #[arg(long, value_name = "HEX")]
        sha256: Option<String>,
        /// Extra attempts after a failed network attempt.
        #[arg(long, default_value_t = 3)]
        retries: usize,
    },
}

#[derive(Subcommand)]
enum ConstraintsCommand {
    /// Compile a dump's constraint declarations into a spec table.
    Compile {
        /// Dump edge file carrying the declarations.
        #[arg(long)]
        dump: PathBuf,
        /// Spec table output path.
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let config = effective_config(&cli)?;
    match cli.command {
        Command::Diff { old, new, out } => cmd_diff(&config, &old, &new, &out),
        Command::Accumulate { manifest, out } => cmd_accumulate(&config, &manifest, &out),
        Command::ClassifyUpdates { ledger, added, out } => {
            cmd_classify_updates(&config, &ledger, &added, &out)
        }
        Command::Deprecated {
            dump,
            instances,
            out,
        } => cmd_deprecated(&config, &dump, &instances, &out),
        Command::Constraints(ConstraintsCommand::Compile { dump, out }) => {
            cmd_compile(&config, &dump, &out)
        }
        Command::Validate {
            specs,
            dump,
            types,
            out,
        } => cmd_validate(&config, &specs, &dump, &types, &out),
        Command::Combine {
            dump,
            ledger,
            specs,
            deprecated,
            out,
        } => cmd_combine(&config, &dump, &ledger, &specs, &deprecated, &out),
        Command::Run { out } => cmd_run(&config, &out),
        Command::Fetch {
            url,
            out,
            sha256,
            retries,
        } => cmd_fetch(&url, &out, sha256, retries),
    }
}

/// Configuration file values with command-line flags layered on top.
fn effective_config(cli: &Cli) -> Result<PipelineConfig> {
    let mut config = match &cli.config {
        Some(path) => read_config(path).with_context(|| format!("reading {}", path.display()))?,
        None => PipelineConfig::default(),
    };
    if let Some(workers) = cli.workers {
        if workers == 0 {
            bail!("--workers must be at least 1");
        }
        config.workers = workers;
    }
    if let Some(scratch) = &cli.scratch {
        config.scratch = Some(scratch.clone());
    }
    if let Some(mode) = cli.identity_mode {
        config.identity_mode = mode.into();
    }
    Ok(config)
}

fn report_issues(issues: &[ParseIssue]) {
    for issue in issues {
        eprintln!("warning: {issue}");
    }
}

fn load(path: &Path, mode: IdentityMode) -> Result<Dump> {
    let (dump, issues) =
        load_dump(path, mode).with_context(|| format!("reading {}", path.display()))?;
    report_issues(&issues);
    Ok(dump)
}

fn cmd_diff(config: &PipelineConfig, old: &Path, new: &Path, out: &Path) -> Result<()> {
    let opts = FileDiffOptions {
        identity_mode: config.identity_mode,
        max_in_memory: config.max_in_memory,
        scratch: config.scratch.clone(),
    };
    let summary = diff_files_to(old, new, out, &opts)?;
    report_issues(&summary.issues);
    println!(
        "{}: {} added, {} removed",
        out.display(),
        summary.added,
        summary.removed
    );
    Ok(())
}

fn cmd_accumulate(config: &PipelineConfig, manifest: &Path, out: &Path) -> Result<()> {
    let paths = read_manifest(manifest)?;
    let mut dumps = Vec::new();
    for path in &paths {
        dumps.push(load(path, config.identity_mode)?);
    }
    let ledger = accumulate(&dumps)?;
    write_ledger(out, &ledger)?;
    println!(
        "{}: {} permanent removals as of {}",
        out.display(),
        ledger.entries.len(),
        ledger.as_of
    );
    Ok(())
}

/// Added-statement files become one synthetic diff per transition: the file
/// stem names the later dump, and removals are not needed because the
/// ledger already carries them.
fn added_diffs(dir: &Path, mode: IdentityMode) -> Result<Vec<DumpDiff>> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .map(|entry| entry.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    paths.sort();
    let mut diffs = Vec::new();
    for path in paths {
        let name = path.file_name().unwrap_or_default().to_string_lossy();
        if !name.ends_with(".tsv")
            || name.ends_with(".quals.tsv")
            || name.ends_with(".redirects.tsv")
        {
            continue;
        }
        let dump = load(&path, mode)?;
        diffs.push(DumpDiff {
            old_label: String::new(),
            new_label: dump.label.clone(),
            added: dump
                .keyed_statements()
                .into_iter()
                .map(|(key, stmt)| (key, stmt.clone()))
                .collect(),
            removed: BTreeMap::new(),
        });
    }
    Ok(diffs)
}

fn cmd_classify_updates(
    config: &PipelineConfig,
    ledger_path: &Path,
    added: &Path,
    out: &Path,
) -> Result<()> {
    let ledger = read_ledger(ledger_path)?;
    let diffs = added_diffs(added, ledger.identity_mode)?;
    let report = classify_removals(&ledger, &diffs, &config.thresholds, config.histogram_cap);
    let switches = taxonomy_switch_report(
        &ledger,
        &diffs,
        &config.roles.instance_property,
        &config.roles.subclass_property,
        config.example_cap,
    );
    std::fs::create_dir_all(out)?;
    write_classifications(&out.join("classifications.tsv"), &report)?;
    write_histogram(&out.join("levenshtein_histogram.tsv"), &report)?;
    write_switches(&out.join("taxonomy_switches.tsv"), &switches)?;
    println!(
        "{}: {} removals classified, {} in the community low-quality set",
        out.display(),
        report.classifications.len(),
        report.low_quality_keys().len()
    );
    Ok(())
}

fn cmd_deprecated(
    config: &PipelineConfig,
    dump_path: &Path,
    instances: &Path,
    out: &Path,
) -> Result<()> {
    let dump = load(dump_path, config.identity_mode)?;
    let typing = load(instances, config.identity_mode)?;
    let instance_index = typing.instance_index(&config.roles.instance_property);
    let set = extract_deprecated(&dump);
    let aggregate = aggregate_deprecated(&set, &instance_index);
    std::fs::create_dir_all(out)?;
    write_tsv(
        &out.join("deprecated.tsv"),
        &PAYLOAD_COLUMNS,
        set.statements.iter().map(kgq::combine::payload_row),
    )?;
    write_counts(
        &out.join("by_property.tsv"),
        ["property", "count"],
        &aggregate.by_property,
    )?;
    write_counts(
        &out.join("by_class.tsv"),
        ["class", "count"],
        &aggregate.by_class,
    )?;
    println!("{}: {} deprecated statements", out.display(), set.len());
    Ok(())
}

fn cmd_compile(config: &PipelineConfig, dump_path: &Path, out: &Path) -> Result<()> {
    let dump = load(dump_path, config.identity_mode)?;
    let report = ingest_constraints(&dump, &config.roles);
    for issue in &report.issues {
        eprintln!("warning: {issue}");
    }
    write_specs(out, &report.specs)?;
    println!(
        "{}: {} specs compiled, {} declarations skipped",
        out.display(),
        report.specs.len(),
        report.skipped_total()
    );
    Ok(())
}

fn parse_types(types: &[String]) -> Result<Option<BTreeSet<ConstraintType>>> {
    if types.is_empty() {
        return Ok(None);
    }
    let mut set = BTreeSet::new();
    for name in types {
        let ctype: ConstraintType = name.parse().map_err(|e| anyhow::anyhow!("--types: {e}"))?;
        set.insert(ctype);
    }
    Ok(Some(set))
}

fn cmd_validate(
    config: &PipelineConfig,
    specs_path: &Path,
    dump_path: &Path,
    types: &[String],
    out: &Path,
) -> Result<()> {
    let specs = read_specs(specs_path)?;
    let filter = parse_types(types)?;
    let dump = load(dump_path, config.identity_mode)?;
    let closure = build_closure(&dump, &config.roles);
    let index = build_dump_index(&dump);
    let reports = validate_all(
        &specs,
        &dump,
        &closure,
        &index,
        filter.as_ref(),
        config.workers,
    );
    std::fs::create_dir_all(out)?;
    write_report_files(out, &reports, &dump)?;
    let table = violation_ratio_table(&reports);
    table.write_summary(&out.join("summary.tsv"))?;
    table.write_ranked(&out.join("vr_ranked.tsv"))?;
    let incorrect: usize = reports.iter().map(|r| r.incorrect.len()).sum();
    let total: usize = reports.iter().map(|r| r.total()).sum();
    println!(
        "{}: {} of {} in-scope statements violating across {} specs",
        out.display(),
        incorrect,
        total,
        reports.len()
    );
    Ok(())
}

fn cmd_combine(
    config: &PipelineConfig,
    dump_path: &Path,
    ledger_path: &Path,
    specs_path: &Path,
    deprecated_path: &Path,
    out: &Path,
) -> Result<()> {
    let dump = load(dump_path, config.identity_mode)?;
    let ledger = read_ledger(ledger_path)?;
    let specs = read_specs(specs_path)?;
    let deprecated = load(deprecated_path, config.identity_mode)?;

    let (live, _) = violations(&dump, &specs, &config.roles, config.workers);
    let (with_removals, del_reports) =
        violations_with_removals(&dump, &ledger, &specs, &config.roles, config.workers)?;
    let fixed = fixed_violations(&live, &with_removals)?;
    let removed_keys: BTreeSet<StatementKey> = ledger.entries.keys().cloned().collect();
    let overlap = overlap_table(&removed_keys, &specs, &del_reports);

    // Without classifications the community indicator is the full removal
    // set; the run pipeline narrows it to pure removals and significant
    // updates.
    let indicators = IndicatorResult {
        community: removed_keys,
        deprecated: deprecated
            .statements
            .iter()
            .map(|s| s.key(config.identity_mode))
            .collect(),
        violating: live.keys.clone(),
        fixed: fixed.clone(),
    };
    let union = indicators.low_quality();

    let mut payloads: BTreeMap<StatementKey, &Statement> = deprecated
        .statements
        .iter()
        .map(|s| (s.key(config.identity_mode), s))
        .collect();
    for (key, entry) in &ledger.entries {
        payloads.insert(key.clone(), &entry.statement);
    }
    for (key, stmt) in dump.keyed_statements() {
        payloads.insert(key, stmt);
    }

    std::fs::create_dir_all(out)?;
    write_key_set(&out.join("v.tsv"), &live.keys, &payloads)?;
    write_key_set(&out.join("v_del.tsv"), &with_removals.keys, &payloads)?;
    write_key_set(&out.join("v_fixed.tsv"), &fixed, &payloads)?;
    write_overlap(&out.join("overlap.tsv"), &overlap)?;
    write_low_quality(&out.join("low_quality.tsv"), &union, &payloads)?;
    println!(
        "{}: {} live violations, {} fixed by removals, {} low-quality statements",
        out.display(),
        live.len(),
        fixed.len(),
        union.len()
    );
    Ok(())
}

fn cmd_run(config: &PipelineConfig, out: &Path) -> Result<()> {
    let report = run_pipeline(config, out)?;
    println!(
        "{}: {} dumps, {} removals, {} deprecated, {} specs, {} live violations \
         ({} fixed by removals), {} low-quality statements, {} bundle files",
        report.out_dir.display(),
        report.dump_count,
        report.ledger_entries,
        report.deprecated_count,
        report.spec_count,
        report.live_violations,
        report.fixed_violations,
        report.low_quality,
        report.files.len()
    );
    if report.parse_issues > 0 {
        eprintln!(
            "warning: {} parse issues, see parse_issues.tsv",
            report.parse_issues
        );
    }
    Ok(())
}

fn cmd_fetch(url: &str, out: &Path, sha256: Option<String>, retries: usize) -> Result<()> {
    let options = FetchOptions {
        retries,
        expected_sha256: sha256,
    };
    let summary = fetch(url, out, &options)?;
    let how = if summary.attempts == 0 {
        "already present".to_string()
    } else if summary.resumed {
        format!("resumed, {} attempts", summary.attempts)
    } else {
        format!("{} attempts", summary.attempts)
    };
    println!(
        "{}: {} bytes, sha256 {} ({how})",
        summary.path.display(),
        summary.bytes,
        summary.sha256
    );
    Ok(())
}
