//! End-to-end runs of the command-line binary against the bundled toy
//! dump sequence. Every success path must exit zero and every failure
//! path nonzero.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn toy(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data/toy")
        .join(name)
}

fn kgq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kgq"))
        .args(args)
        .output()
        .expect("spawn kgq")
}

fn kgq_ok(args: &[&str]) -> String {
    let output = kgq(args);
    assert!(
        output.status.success(),
        "kgq {args:?} failed:\n{}{}",
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn line_count(path: &Path) -> usize {
    fs::read_to_string(path).unwrap().lines().count()
}

fn path_str(path: &Path) -> String {
    path.to_str().unwrap().to_string()
}

#[test]
fn diff_writes_added_and_removed() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("diff");
    let stdout = kgq_ok(&[
        "diff",
        "--old",
        &path_str(&toy("dump-2020-01-01.tsv")),
        "--new",
        &path_str(&toy("dump-2020-02-01.tsv")),
        "--out",
        &path_str(&out),
    ]);
    assert!(stdout.contains("2 added, 6 removed"), "stdout: {stdout}");
    assert_eq!(line_count(&out.join("added.tsv")), 3);
    assert_eq!(line_count(&out.join("removed.tsv")), 7);
}

#[test]
fn accumulate_then_classify_then_combine() {
    let tmp = tempfile::tempdir().unwrap();

    // Accumulate over a manifest of absolute paths.
    let manifest = tmp.path().join("dumps.txt");
    fs::write(
        &manifest,
        format!(
            "{}\n{}\n",
            path_str(&toy("dump-2020-01-01.tsv")),
            path_str(&toy("dump-2020-02-01.tsv"))
        ),
    )
    .unwrap();
    let ledger = tmp.path().join("ledger.tsv");
    let stdout = kgq_ok(&[
        "accumulate",
        "--manifest",
        &path_str(&manifest),
        "--out",
        &path_str(&ledger),
    ]);
    assert!(
        stdout.contains("6 permanent removals as of dump-2020-02-01"),
        "stdout: {stdout}"
    );
    assert!(ledger.exists());
    assert!(tmp.path().join("ledger.quals.tsv").exists());
    assert!(tmp.path().join("ledger.tsv.meta").exists());

    // Classify removals against the later dump's statements as the added
    // set for its transition.
    let added_dir = tmp.path().join("added");
    fs::create_dir(&added_dir).unwrap();
    fs::copy(
        toy("dump-2020-02-01.tsv"),
        added_dir.join("dump-2020-02-01.tsv"),
    )
    .unwrap();
    let classify_out = tmp.path().join("classify");
    kgq_ok(&[
        "classify-updates",
        "--ledger",
        &path_str(&ledger),
        "--added",
        &path_str(&added_dir),
        "--out",
        &path_str(&classify_out),
    ]);
    assert_eq!(line_count(&classify_out.join("classifications.tsv")), 7);
    assert!(classify_out.join("levenshtein_histogram.tsv").exists());
    assert!(classify_out.join("taxonomy_switches.tsv").exists());

    // Compile constraint declarations.
    let specs = tmp.path().join("specs.tsv");
    let stdout = kgq_ok(&[
        "constraints",
        "compile",
        "--dump",
        &path_str(&toy("dump-2020-01-01.tsv")),
        "--out",
        &path_str(&specs),
    ]);
    assert!(stdout.contains("2"), "stdout: {stdout}");
    // Header plus one spec per retained declaration.
    assert_eq!(line_count(&specs), 3);

    // Extract deprecated statements from the earlier dump.
    let dep_out = tmp.path().join("deprecated");
    let stdout = kgq_ok(&[
        "deprecated",
        "--dump",
        &path_str(&toy("dump-2020-01-01.tsv")),
        "--instances",
        &path_str(&toy("dump-2020-01-01.tsv")),
        "--out",
        &path_str(&dep_out),
    ]);
    assert!(stdout.contains("1 deprecated"), "stdout: {stdout}");
    assert_eq!(line_count(&dep_out.join("deprecated.tsv")), 2);
    assert!(dep_out.join("by_property.tsv").exists());
    assert!(dep_out.join("by_class.tsv").exists());

    // Validate the later dump against the compiled specs.
    let validate_out = tmp.path().join("validate");
    let stdout = kgq_ok(&[
        "validate",
        "--specs",
        &path_str(&specs),
        "--dump",
        &path_str(&toy("dump-2020-02-01.tsv")),
        "--out",
        &path_str(&validate_out),
    ]);
    assert!(stdout.contains("2"), "stdout: {stdout}");
    assert!(validate_out.join("summary.tsv").exists());
    assert!(validate_out.join("vr_ranked.tsv").exists());

    // Restrict validation to one constraint type.
    let typed_out = tmp.path().join("validate-typed");
    kgq_ok(&[
        "validate",
        "--specs",
        &path_str(&specs),
        "--dump",
        &path_str(&toy("dump-2020-02-01.tsv")),
        "--types",
        "type",
        "--out",
        &path_str(&typed_out),
    ]);
    // Only the type constraint row remains in the summary.
    assert!(typed_out.join("summary.tsv").exists());

    // Combine the three indicators.
    let combine_out = tmp.path().join("combine");
    kgq_ok(&[
        "combine",
        "--dump",
        &path_str(&toy("dump-2020-02-01.tsv")),
        "--ledger",
        &path_str(&ledger),
        "--specs",
        &path_str(&specs),
        "--deprecated",
        &path_str(&dep_out.join("deprecated.tsv")),
        "--out",
        &path_str(&combine_out),
    ]);
    assert_eq!(line_count(&combine_out.join("v.tsv")), 3);
    assert_eq!(line_count(&combine_out.join("v_del.tsv")), 3);
    assert_eq!(line_count(&combine_out.join("v_fixed.tsv")), 2);
    assert!(combine_out.join("overlap.tsv").exists());
    assert_eq!(line_count(&combine_out.join("low_quality.tsv")), 9);
}

#[test]
fn run_produces_manifest_and_fails_with_marker() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("bundle");
    kgq_ok(&[
        "--config",
        &path_str(&toy("run.cfg")),
        "--scratch",
        &path_str(&tmp.path().join("scratch")),
        "run",
        "--out",
        &path_str(&out),
    ]);
    assert!(out.join("MANIFEST.tsv").exists());
    assert!(out.join("report.txt").exists());
    assert!(!out.join("FAILED").exists());

    // A manifest entry that does not exist fails the run and leaves the
    // failure marker in the bundle directory.
    let broken_dir = tmp.path().join("broken");
    fs::create_dir(&broken_dir).unwrap();
    fs::write(broken_dir.join("dumps.txt"), "missing-dump.tsv\n").unwrap();
    fs::write(
        broken_dir.join("run.cfg"),
        "kgq_config_version = 1\nmanifest = dumps.txt\n",
    )
    .unwrap();
    let bad_out = tmp.path().join("bad-bundle");
    let output = kgq(&[
        "--config",
        &path_str(&broken_dir.join("run.cfg")),
        "run",
        "--out",
        &path_str(&bad_out),
    ]);
    assert!(!output.status.success());
    let marker = fs::read_to_string(bad_out.join("FAILED")).unwrap();
    assert!(marker.contains("does not exist"), "marker: {marker}");
}

#[test]
fn fetch_copies_local_files_and_rejects_bad_checksums() {
    let tmp = tempfile::tempdir().unwrap();
    let source = tmp.path().join("source.tsv");
    fs::write(&source, b"id\tnode1\tlabel\tnode2\trank\n").unwrap();
    let url = format!("file://{}", source.display());

    let dest = tmp.path().join("fetched.tsv");
    let stdout = kgq_ok(&["fetch", &url, "--out", &path_str(&dest)]);
    assert!(stdout.contains("sha256"), "stdout: {stdout}");
    assert_eq!(fs::read(&source).unwrap(), fs::read(&dest).unwrap());

    let bad_dest = tmp.path().join("rejected.tsv");
    let output = kgq(&[
        "fetch",
        &url,
        "--out",
        &path_str(&bad_dest),
        "--sha256",
        &"0".repeat(64),
    ]);
    assert!(!output.status.success());
    assert!(!bad_dest.exists());
}

#[test]
fn invalid_invocations_exit_nonzero() {
    // Zero workers is rejected before any work starts.
    let output = kgq(&[
        "--workers",
        "0",
        "diff",
        "--old",
        "a.tsv",
        "--new",
        "b.tsv",
        "--out",
        "out",
    ]);
    assert!(!output.status.success());

    // Unknown subcommands are a usage error.
    let output = kgq(&["frobnicate"]);
    assert!(!output.status.success());

    // A missing input file is reported, not silently ignored.
    let output = kgq(&[
        "diff",
        "--old",
        "no-such-file.tsv",
        "--new",
        "also-missing.tsv",
        "--out",
        "out",
    ]);
    assert!(!output.status.success());

    // An unknown constraint type filter is rejected.
    let tmp = tempfile::tempdir().unwrap();
    let specs = tmp.path().join("specs.tsv");
    fs::write(&specs, "").unwrap();
    let output = kgq(&[
        "validate",
        "--specs",
        &path_str(&specs),
        "--dump",
        &path_str(&toy("dump-2020-02-01.tsv")),
        "--types",
        "bogus",
        "--out",
        &path_str(&tmp.path().join("out")),
    ]);
    assert!(!output.status.success());
}
