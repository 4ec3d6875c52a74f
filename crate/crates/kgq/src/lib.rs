//! Batch analysis of statement quality in hyperrelational knowledge-graph
//! dumps.
//!
//! Statements carry qualifiers and ranks, so a dump row is an edge
//! (subject, property, value) plus its statement id, rank, and qualifier
//! set. Three independent signals mark a statement as low quality:
//!
//! - it was permanently removed over a sequence of dumps and never came
//!   back ([`diff`], refined by [`updates`], which filters out removals
//!   that were really small value edits),
//! - it is still in the dump but deprecated by rank ([`deprecation`]),
//! - it violates a property constraint declared in the graph itself
//!   ([`constraints`]).
//!
//! [`combine`] joins the three sets, re-validates with removed statements
//! restored to see which violations the removals fixed, and [`pipeline`]
//! runs everything end to end into a deterministic report bundle.
//! [`model`] holds the statement model and TSV edge-file format, [`fetch`]
//! downloads dumps, [`extsort`] keeps file diffs within bounded memory,
//! and [`config`] reads the flat key = value run configuration.
//!
//! Each capability has a runnable example:
//!
//! ```bash
//! cargo run --example diff_dumps          # added/removed between two dumps
//! cargo run --example streaming_diff      # same, on files, bounded memory
//! cargo run --example accumulate_ledger   # permanent removals over a sequence
//! cargo run --example classify_updates    # removals vs. equivalent edits
//! cargo run --example taxonomy_switches   # where removed typing went
//! cargo run --example extract_deprecated  # deprecated-rank statements
//! cargo run --example compile_constraints # declarations -> validator specs
//! cargo run --example validate_constraints# violation reports and ratios
//! cargo run --example combine_indicators  # the three signals joined
//! cargo run --example run_pipeline        # full run over a bundled fixture
//! cargo run --example fetch_dump          # checksummed download with resume
//! ```

pub mod combine;
pub mod config;
pub mod constraints;
pub mod deprecation;
pub mod diff;
pub mod extsort;
pub mod fetch;
pub mod model;
pub mod pipeline;
pub mod updates;
