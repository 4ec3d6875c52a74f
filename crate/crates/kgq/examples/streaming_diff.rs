//! Diff dump files too large to load by sorting key runs on disk.
//!
//! `diff_files_to` reads both edge files once, spills sorted runs of at
//! most `max_in_memory` statements to the scratch directory, and merges
//! them, so memory use is bounded regardless of dump size.
//!
//! ```bash
//! cargo run --example streaming_diff
//! ```

use std::fmt::Write as _;

use kgq::diff::{diff_files_to, FileDiffOptions};
use kgq::model::IdentityMode;

fn write_dump(path: &std::path::Path, range: std::ops::Range<u32>) -> anyhow::Result<()> {
    let mut text = String::from("id\tnode1\tlabel\tnode2\trank\n");
    for i in range {
        writeln!(text, "s{i}\tQ{}\tP1082\t+{}\tnormal", 1 + i % 5_000, i)?;
    }
    std::fs::write(path, text)?;
    Ok(())
}

fn main() -> anyhow::Result<()> {
    let tmp = tempfile::tempdir()?;
    let old = tmp.path().join("2024-01-01.tsv");
    let new = tmp.path().join("2024-02-01.tsv");
    // 50,000 rows each, overlapping in the middle.
    write_dump(&old, 0..50_000)?;
    write_dump(&new, 20_000..70_000)?;

    let options = FileDiffOptions {
        identity_mode: IdentityMode::Content,
        // Absurdly small on purpose: forces dozens of spill runs.
        max_in_memory: 4_096,
        scratch: Some(tmp.path().join("scratch")),
    };
    let out = tmp.path().join("diff");
    let summary = diff_files_to(&old, &new, &out, &options)?;

    println!(
        "{} added, {} removed, {} parse issues",
        summary.added,
        summary.removed,
        summary.issues.len()
    );
    println!("added.tsv and removed.tsv written to {}", out.display());
    Ok(())
}
