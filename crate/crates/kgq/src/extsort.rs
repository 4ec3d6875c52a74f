//! External merge sort for record streams larger than memory.
//!
//! Records are buffered up to a configurable count, sorted, and spilled to
//! newline-delimited JSON run files in a scratch directory. Finishing the
//! sort returns a stream that either drains the in-memory buffer (when
//! nothing spilled) or performs a k-way merge across the run files, so peak
//! memory stays proportional to the buffer size regardless of input size.
//! The scratch directory is removed when the stream is dropped.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::PathBuf;

use serde::de::DeserializeOwned;
use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum SortError {
    #[error("scratch file error: {0}")]
    Io(#[from] std::io::Error),
    #[error("scratch record error: {0}")]
    Codec(#[from] serde_json::Error),
}

/// Accumulates records, spilling sorted runs to disk past the buffer limit.
///
/// `key_fn` is evaluated once per pushed record and once per record read
/// back during the merge. Records with equal keys keep their push order
/// within a run; across runs they surface in run order.
pub struct ExternalSorter<T, K, F> {
    key_fn: F,
    max_in_memory: usize,
    scratch_parent: Option<PathBuf>,
    buffer: Vec<(K, T)>,
    scratch: Option<tempfile::TempDir>,
    runs: Vec<PathBuf>,
}

impl<T, K, F> ExternalSorter<T, K, F>
where
    T: Serialize + DeserializeOwned,
    K: Ord,
    F: Fn(&T) -> K,
{
    /// `max_in_memory` is the largest number of records held at once and
    /// must be nonzero.
    pub fn new(key_fn: F, max_in_memory: usize) -> ExternalSorter<T, K, F> {
        assert!(max_in_memory > 0, "buffer limit must be nonzero");
        ExternalSorter {
            key_fn,
            max_in_memory,
            scratch_parent: None,
            buffer: Vec::new(),
            scratch: None,
            runs: Vec::new(),
        }
    }

    /// Put run files under `dir` instead of the system temp directory.
    pub fn with_scratch_parent(mut self, dir: impl Into<PathBuf>) -> ExternalSorter<T, K, F> {
        self.scratch_parent = Some(dir.into());
        self
    }

    pub fn push(&mut self, item: T) -> Result<(), SortError> {
        let key = (self.key_fn)(&item);
        self.buffer.push((key, item));
        if self.buffer.len() >= self.max_in_memory {
            self.spill()?;
        }
        Ok(())
    }

    /// Number of runs spilled so far.
    pub fn run_count(&self) -> usize {
        self.runs.len()
    }

    fn spill(&mut self) -> Result<(), SortError> {
        if self.buffer.is_empty() {
            return Ok(());
        }
        if self.scratch.is_none() {
            let dir = match &self.scratch_parent {
                Some(parent) => {
                    std::fs::create_dir_all(parent)?;
                    tempfile::tempdir_in(parent)?
                }
                None => tempfile::tempdir()?,
            };
            self.scratch = Some(dir);
        }
        self.buffer.sort_by(|a, b| a.0.cmp(&b.0));
        let path = self
            .scratch
            .as_ref()
            .unwrap()
            .path()
            .join(format!("run-{:05}.jsonl", self.runs.len()));
        let mut out = BufWriter::new(File::create(&path)?);
        for (_, item) in self.buffer.drain(..) {
            serde_json::to_writer(&mut out, &item)?;
            out.write_all(b"\n")?;
        }
        out.flush()?;
        self.runs.push(path);
        Ok(())
    }

    /// Sort whatever remains and return the merged stream.
    pub fn finish(mut self) -> Result<SortedStream<T, K, F>, SortError> {
        if self.runs.is_empty() {
            self.buffer.sort_by(|a, b| a.0.cmp(&b.0));
            let items: Vec<T> = self.buffer.into_iter().map(|(_, item)| item).collect();
            return Ok(SortedStream {
                inner: StreamInner::Memory(items.into_iter()),
            });
        }
        self.spill()?;
        let mut readers = Vec::with_capacity(self.runs.len());
        for path in &self.runs {
            readers.push(RunReader {
                lines: BufReader::new(File::open(path)?).lines(),
            });
        }
        let mut heap = BinaryHeap::with_capacity(readers.len());
        for (run, reader) in readers.iter_mut().enumerate() {
            if let Some(item) = reader.next_item::<T>()? {
                heap.push(MergeHead {
                    key: (self.key_fn)(&item),
                    run,
                    item,
                });
            }
        }
        Ok(SortedStream {
            inner: StreamInner::Merge {
                key_fn: self.key_fn,
                readers,
                heap,
                // Keeps the run files alive until the stream is dropped.
                _scratch: self.scratch.expect("runs imply a scratch dir"),
            },
        })
    }
}

/// Sorted output of an [`ExternalSorter`], yielding records in key order.
pub struct SortedStream<T, K, F> {
    inner: StreamInner<T, K, F>,
}

enum StreamInner<T, K, F> {
    Memory(std::vec::IntoIter<T>),
    Merge {
        key_fn: F,
        readers: Vec<RunReader>,
        heap: BinaryHeap<MergeHead<T, K>>,
        _scratch: tempfile::TempDir,
    },
}

impl<T, K, F> Iterator for SortedStream<T, K, F>
where
    T: DeserializeOwned,
    K: Ord,
    F: Fn(&T) -> K,
{
    type Item = Result<T, SortError>;

    fn next(&mut self) -> Option<Result<T, SortError>> {
        match &mut self.inner {
            StreamInner::Memory(iter) => iter.next().map(Ok),
            StreamInner::Merge {
                key_fn,
                readers,
                heap,
                ..
            } => {
                let head = heap.pop()?;
                match readers[head.run].next_item::<T>() {
                    Ok(Some(item)) => heap.push(MergeHead {
                        key: key_fn(&item),
                        run: head.run,
                        item,
                    }),
                    Ok(None) => {}
                    Err(err) => return Some(Err(err)),
                }
                Some(Ok(head.item))
            }
        }
    }
}

struct RunReader {
    lines: std::io::Lines<BufReader<File>>,
}

impl RunReader {
    fn next_item<T: DeserializeOwned>(&mut self) -> Result<Option<T>, SortError> {
        match self.lines.next() {
            Some(line) => Ok(Some(serde_json::from_str(&line?)?)),
            None => Ok(None),
        }
    }
}

/// Smallest element of one run, ordered as a min-heap entry. Equal keys
/// break ties by run index, so the merge is deterministic.
struct MergeHead<T, K> {
    key: K,
    run: usize,
    item: T,
}

impl<T, K: Ord> PartialEq for MergeHead<T, K> {
    fn eq(&self, other: &Self) -> bool {
        self.key == other.key && self.run == other.run
    }
}

impl<T, K: Ord> Eq for MergeHead<T, K> {}

impl<T, K: Ord> PartialOrd for MergeHead<T, K> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<T, K: Ord> Ord for MergeHead<T, K> {
    fn cmp(&self, other: &Self) -> Ordering {
        // Reversed so BinaryHeap pops the smallest key first.
        (&other.key, other.run).cmp(&(&self.key, self.run))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sort_strings(items: Vec<String>, max_in_memory: usize) -> (Vec<String>, usize) {
        let mut sorter = ExternalSorter::new(|s: &String| s.clone(), max_in_memory);
        for item in items {
            sorter.push(item).unwrap();
        }
        let spilled = sorter.run_count();
        let stream = sorter.finish().unwrap();
        let sorted: Result<Vec<String>, SortError> = stream.collect();
        (sorted.unwrap(), spilled)
    }

    #[test]
    fn small_input_stays_in_memory() {
        let (sorted, spilled) = sort_strings(vec!["c".into(), "a".into(), "b".into()], 10);
        assert_eq!(sorted, vec!["a", "b", "c"]);
        assert_eq!(spilled, 0);
    }

    #[test]
    fn large_input_spills_and_merges() {
        let items: Vec<String> = (0..1000).rev().map(|i| format!("k{i:04}")).collect();
        let mut expected = items.clone();
        expected.sort();
        let (sorted, spilled) = sort_strings(items, 64);
        assert!(spilled > 1, "expected multiple spilled runs, got {spilled}");
        assert_eq!(sorted, expected);
    }

    #[test]
    fn empty_input_yields_empty_stream() {
        let (sorted, _) = sort_strings(Vec::new(), 4);
        assert!(sorted.is_empty());
    }

    #[test]
    fn scratch_parent_is_honored() {
        let dir = tempfile::tempdir().unwrap();
        let parent = dir.path().join("scratch");
        let mut sorter =
            ExternalSorter::new(|s: &String| s.clone(), 2).with_scratch_parent(&parent);
        for i in 0..10 {
            sorter.push(format!("k{i}")).unwrap();
        }
        assert!(parent.is_dir());
        let stream = sorter.finish().unwrap();
        assert_eq!(stream.count(), 10);
    }

    #[test]
    fn equal_keys_all_survive() {
        let items = vec!["a".to_string(); 37];
        let (sorted, spilled) = sort_strings(items, 5);
        assert!(spilled > 0);
        assert_eq!(sorted.len(), 37);
    }

    proptest! {
        #[test]
        fn matches_std_sort(
            items in proptest::collection::vec("[a-z]{0,8}", 0..300),
            max_in_memory in 1usize..40,
        ) {
            let mut expected = items.clone();
            expected.sort();
            let (sorted, _) = sort_strings(items, max_in_memory);
            prop_assert_eq!(sorted, expected);
        }
    }
}
