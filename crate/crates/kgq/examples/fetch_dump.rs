//! Fetch a dump file with checksum verification and resume support.
//!
//! The example uses a file:// source so it runs offline; http(s) URLs go
//! through the same retry and resume path, and a partial download left by
//! an interrupted run is continued with a range request.
//!
//! ```bash
//! cargo run --example fetch_dump
//! ```

use kgq::fetch::{fetch, FetchOptions};
use kgq::model::edge_io::sha256_file;

fn main() -> anyhow::Result<()> {
    let tmp = tempfile::tempdir()?;
    let source = tmp.path().join("remote-dump.tsv");
    std::fs::write(
        &source,
        "id\tnode1\tlabel\tnode2\trank\ns1\tQ42\tP31\tQ5\tnormal\n",
    )?;
    let (expected, _) = sha256_file(&source)?;

    let dest = tmp.path().join("local-dump.tsv");
    let options = FetchOptions {
        expected_sha256: Some(expected.clone()),
        ..FetchOptions::default()
    };
    let summary = fetch(&format!("file://{}", source.display()), &dest, &options)?;

    println!(
        "fetched {} bytes to {}",
        summary.bytes,
        summary.path.display()
    );
    println!("sha256 {} verified", summary.sha256);

    // Fetching again is a no-op: the existing file already matches.
    let again = fetch(&format!("file://{}", source.display()), &dest, &options)?;
    println!("second fetch made {} attempts", again.attempts);
    Ok(())
}
