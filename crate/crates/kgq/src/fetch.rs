//! Dump retrieval with resume and checksum verification.
//!
//! Downloads stream into a `.part` sidecar next to the destination. A rerun
//! continues the sidecar with an HTTP range request; a server that ignores
//! ranges answers 200 and the sidecar restarts from scratch. The file moves
//! to its final name only after the whole body arrived and, when a checksum
//! was given, the sha256 matched. `file://` sources and plain paths copy
//! locally through the same sidecar.

use std::fs::{self, File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::model::edge_io::sha256_file;

#[derive(Debug, Error)]
pub enum FetchError {
    /// Transport or server failure. The partial file stays for a resume.
    #[error("fetching {url}: {detail}")]
    Network { url: String, detail: String },
    /// The complete download does not hash to the expected value. The
    /// partial file is discarded; retrying would download the same bytes.
    #[error("checksum mismatch for {url}: expected {expected}, got {actual}")]
    ChecksumMismatch {
        url: String,
        expected: String,
        actual: String,
    },
    #[error("accessing {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

impl FetchError {
    /// Whether a retry could plausibly succeed.
    pub fn is_retriable(&self) -> bool {
        matches!(self, FetchError::Network { .. })
    }
}

#[derive(Clone, Debug)]
pub struct FetchOptions {
    /// Extra attempts after a failed network attempt.
    pub retries: usize,
    /// Expected sha256 of the complete file, lowercase hex.
    pub expected_sha256: Option<String>,
}

impl Default for FetchOptions {
    fn default() -> FetchOptions {
        FetchOptions {
            retries: 3,
            expected_sha256: None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct FetchSummary {
    pub path: PathBuf,
    pub bytes: u64,
    pub sha256: String,
    /// Connection attempts made; 0 when the destination already matched
    /// the expected checksum.
    pub attempts: usize,
    /// Whether the successful attempt continued a partial file.
    pub resumed: bool,
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> FetchError + '_ {
    move |source| FetchError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn part_path(dest: &Path) -> PathBuf {
    let mut name = dest.file_name().unwrap_or_default().to_os_string();
    name.push(".part");
    dest.with_file_name(name)
}

/// Retrieve `source` into `dest`. Sources are `http://` and `https://`
/// URLs, `file://` URLs, or plain local paths.
pub fn fetch(
    source: &str,
    dest: &Path,
    options: &FetchOptions,
) -> Result<FetchSummary, FetchError> {
    if let Some(expected) = &options.expected_sha256 {
        if dest.is_file() {
            let (digest, bytes) = sha256_file(dest).map_err(io_err(dest))?;
            if digest == *expected {
                return Ok(FetchSummary {
                    path: dest.to_path_buf(),
                    bytes,
                    sha256: digest,
                    attempts: 0,
                    resumed: false,
                });
            }
        }
    }
    if let Some(parent) = dest.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(io_err(dest))?;
        }
    }
    let part = part_path(dest);

    let (attempts, resumed) = if let Some(local) = local_source(source) {
        copy_local(&local, &part)?;
        (1, false)
    } else {
        download(source, &part, options.retries)?
    };

    let (digest, bytes) = sha256_file(&part).map_err(io_err(&part))?;
    if let Some(expected) = &options.expected_sha256 {
        if digest != *expected {
            let _ = fs::remove_file(&part);
            return Err(FetchError::ChecksumMismatch {
                url: source.to_string(),
                expected: expected.clone(),
                actual: digest,
            });
        }
    }
    fs::rename(&part, dest).map_err(io_err(dest))?;
    Ok(FetchSummary {
        path: dest.to_path_buf(),
        bytes,
        sha256: digest,
        attempts,
        resumed,
    })
}

fn local_source(source: &str) -> Option<PathBuf> {
    if let Some(path) = source.strip_prefix("file://") {
        return Some(PathBuf::from(path));
    }
    if source.contains("://") {
        return None;
    }
    Some(PathBuf::from(source))
}

fn copy_local(src: &Path, part: &Path) -> Result<(), FetchError> {
    let mut reader = File::open(src).map_err(io_err(src))?;
    let mut writer = File::create(part).map_err(io_err(part))?;
    io::copy(&mut reader, &mut writer).map_err(io_err(part))?;
    Ok(())
}

fn download(url: &str, part: &Path, retries: usize) -> Result<(usize, bool), FetchError> {
    let mut attempts = 0;
    loop {
        attempts += 1;
        match attempt(url, part) {
            Ok(resumed) => return Ok((attempts, resumed)),
            Err(err) if err.is_retriable() && attempts <= retries => continue,
            Err(err) => return Err(err),
        }
    }
}

/// One download attempt. Continues the partial file when the server honors
/// the range request (206); a 200 restarts it.
fn attempt(url: &str, part: &Path) -> Result<bool, FetchError> {
    let net = |detail: String| FetchError::Network {
        url: url.to_string(),
        detail,
    };
    // A fresh agent per attempt: a pooled connection the server already
    // closed would fail the retry that is meant to recover.
    let agent = ureq::config::Config::builder()
        .http_status_as_error(false)
        .build()
        .new_agent();

    let existing = fs::metadata(part).map(|m| m.len()).unwrap_or(0);
    let mut request = agent.get(url);
    if existing > 0 {
        request = request.header("Range", format!("bytes={existing}-"));
    }
    let mut response = request.call().map_err(|e| net(e.to_string()))?;
    let status = response.status().as_u16();
    let (mut file, resumed) = match status {
        206 if existing > 0 => {
            let file = OpenOptions::new()
                .append(true)
                .open(part)
                .map_err(io_err(part))?;
            (file, true)
        }
        200 => (File::create(part).map_err(io_err(part))?, false),
        _ => return Err(net(format!("unexpected http status {status}"))),
    };
    // A short body (connection lost before Content-Length bytes) errors
    // here; the bytes written so far stay in the partial file.
    io::copy(&mut response.body_mut().as_reader(), &mut file).map_err(|e| net(e.to_string()))?;
    file.flush().map_err(io_err(part))?;
    Ok(resumed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Read;
    use std::net::{SocketAddr, TcpListener};
    use std::sync::{Arc, Mutex};
    use std::thread::JoinHandle;

    /// Minimal HTTP server: answers one connection per canned response,
    /// records request heads, closes each connection after writing.
    struct StubServer {
        addr: SocketAddr,
        requests: Arc<Mutex<Vec<String>>>,
        handle: Option<JoinHandle<()>>,
    }

    impl StubServer {
        fn start(responses: Vec<Vec<u8>>) -> StubServer {
            let listener = TcpListener::bind("127.0.0.1:0").unwrap();
            let addr = listener.local_addr().unwrap();
            let requests = Arc::new(Mutex::new(Vec::new()));
            let seen = Arc::clone(&requests);
            let handle = std::thread::spawn(move || {
                for response in responses {
                    let (mut sock, _) = listener.accept().unwrap();
                    let mut head = Vec::new();
                    let mut buf = [0u8; 4096];
                    loop {
                        let n = sock.read(&mut buf).unwrap();
                        head.extend_from_slice(&buf[..n]);
                        if n == 0 || head.windows(4).any(|w| w == b"\r\n\r\n") {
                            break;
                        }
                    }
                    seen.lock()
                        .unwrap()
                        .push(String::from_utf8_lossy(&head).into_owned());
                    sock.write_all(&response).unwrap();
                }
            });
            StubServer {
                addr,
                requests,
                handle: Some(handle),
            }
        }

        fn url(&self) -> String {
            format!("http://{}/dump.tsv", self.addr)
        }

        fn request(&self, i: usize) -> String {
            self.requests.lock().unwrap()[i].clone()
        }
    }

    impl Drop for StubServer {
        fn drop(&mut self) {
            if let Some(handle) = self.handle.take() {
                handle.join().unwrap();
            }
        }
    }

    fn response(status_line: &str, body: &[u8]) -> Vec<u8> {
        let mut bytes = format!(
            "HTTP/1.1 {status_line}\r\nContent-Length: {}\r\nConnection: close\r\n\r\n",
            body.len()
        )
        .into_bytes();
        bytes.extend_from_slice(body);
        bytes
    }

    /// Response whose Content-Length promises more than it delivers; the
    /// connection closes mid-body.
    fn truncated_response(claimed: usize, body: &[u8]) -> Vec<u8> {
        let mut bytes =
            format!("HTTP/1.1 200 OK\r\nContent-Length: {claimed}\r\nConnection: close\r\n\r\n")
                .into_bytes();
        bytes.extend_from_slice(body);
        bytes
    }

    fn sha256_hex(data: &[u8]) -> String {
        use sha2::Digest as _;
        sha2::Sha256::digest(data)
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    #[test]
    fn copies_local_files_and_file_urls() {
        let dir = tempfile::tempdir().unwrap();
        let src = dir.path().join("src.tsv");
        fs::write(&src, "id\tnode1\n").unwrap();

        let plain = dir.path().join("plain.tsv");
        let summary = fetch(src.to_str().unwrap(), &plain, &FetchOptions::default()).unwrap();
        assert_eq!(fs::read(&plain).unwrap(), b"id\tnode1\n");
        assert_eq!(summary.bytes, 9);
        assert_eq!(summary.sha256, sha256_hex(b"id\tnode1\n"));

        let via_url = dir.path().join("url.tsv");
        let url = format!("file://{}", src.display());
        fetch(&url, &via_url, &FetchOptions::default()).unwrap();
        assert_eq!(fs::read(&via_url).unwrap(), b"id\tnode1\n");
    }

    #[test]
    fn downloads_over_http() {
        let server = StubServer::start(vec![response("200 OK", b"hello world")]);
        let dir = tempfile::tempdir().unwrap();
        let dest = dir.path().join("dump.tsv");
        let options = FetchOptions {
            expected_sha256: Some(sha256_hex(b"hello world")),
            ..FetchOptions::default()
        };
        let summary = fetch(&server.url(), &dest, &options).unwrap();
        assert_eq!(fs::read(&dest).unwrap(), b"hello world");
        assert_eq!(summary.attempts, 1);
        assert!(!summary.resumed);
        assert!(!part_path(&dest).exists());
    }

    #[test]
    fn resumes_a_partial_file_with_a_range_request() {
        let server = StubServer::start(vec![response("206 Partial Content", b" world")]);
        let dir = tempfile::tempdir().unwrap();
        let dest = dir.path().join("dump.tsv");
        fs::write(part_path(&dest), b"hello").unwrap();

        let summary = fetch(&server.url(), &dest, &FetchOptions::default()).unwrap();
        assert_eq!(fs::read(&dest).unwrap(), b"hello world");
        assert!(summary.resumed);
        assert!(server.request(0).to_lowercase().contains("range: bytes=5-"));
    }

    #[test]
    fn restarts_when_the_server_ignores_the_range() {
        let server = StubServer::start(vec![response("200 OK", b"hello world")]);
        let dir = tempfile::tempdir().unwrap();
        let dest = dir.path().join("dump.tsv");
        fs::write(part_path(&dest), b"stale bytes").unwrap();

        let summary = fetch(&server.url(), &dest, &FetchOptions::default()).unwrap();
        assert_eq!(fs::read(&dest).unwrap(), b"hello world");
        assert!(!summary.resumed);
    }

    #[test]
    fn recovers_from_a_truncated_body_by_resuming() {
        let server = StubServer::start(vec![
            truncated_response(11, b"hello"),
            response("206 Partial Content", b" world"),
        ]);
        let dir = tempfile::tempdir().unwrap();
        let dest = dir.path().join("dump.tsv");
        let options = FetchOptions {
            expected_sha256: Some(sha256_hex(b"hello world")),
            ..FetchOptions::default()
        };
        let summary = fetch(&server.url(), &dest, &options).unwrap();
        assert_eq!(fs::read(&dest).unwrap(), b"hello world");
        assert_eq!(summary.attempts, 2);
        assert!(summary.resumed);
        assert!(server.request(1).to_lowercase().contains("range: bytes=5-"));
    }

    #[test]
    fn checksum_mismatch_is_fatal_and_discards_the_partial_file() {
        let server = StubServer::start(vec![response("200 OK", b"tampered")]);
        let dir = tempfile::tempdir().unwrap();
        let dest = dir.path().join("dump.tsv");
        let options = FetchOptions {
            expected_sha256: Some(sha256_hex(b"expected content")),
            ..FetchOptions::default()
        };
        let err = fetch(&server.url(), &dest, &options).unwrap_err();
        assert!(matches!(err, FetchError::ChecksumMismatch { .. }));
        assert!(!err.is_retriable());
        assert!(!dest.exists());
        assert!(!part_path(&dest).exists());
    }

    #[test]
    fn exhausting_retries_returns_the_network_error() {
        // Three empty responses: the initial attempt plus two retries all
        // see the connection close before a status line.
        let server = StubServer::start(vec![Vec::new(), Vec::new(), Vec::new()]);
        let dir = tempfile::tempdir().unwrap();
        let dest = dir.path().join("dump.tsv");
        let options = FetchOptions {
            retries: 2,
            expected_sha256: None,
        };
        let err = fetch(&server.url(), &dest, &options).unwrap_err();
        assert!(err.is_retriable());
        assert!(!dest.exists());
    }

    #[test]
    fn matching_destination_short_circuits() {
        let dir = tempfile::tempdir().unwrap();
        let dest = dir.path().join("dump.tsv");
        fs::write(&dest, b"already here").unwrap();
        let options = FetchOptions {
            expected_sha256: Some(sha256_hex(b"already here")),
            ..FetchOptions::default()
        };
        // The source URL is never contacted; any value works.
        let summary = fetch("http://127.0.0.1:1/unused", &dest, &options).unwrap();
        assert_eq!(summary.attempts, 0);
        assert_eq!(summary.bytes, 12);
    }

    #[test]
    fn http_error_status_is_a_network_error() {
        let server = StubServer::start(vec![response("503 Service Unavailable", b"")]);
        let dir = tempfile::tempdir().unwrap();
        let dest = dir.path().join("dump.tsv");
        let options = FetchOptions {
            retries: 0,
            expected_sha256: None,
        };
        let err = fetch(&server.url(), &dest, &options).unwrap_err();
        match &err {
            FetchError::Network { detail, .. } => {
                assert!(detail.contains("503"), "unexpected detail: {detail}");
            }
            other => panic!("expected a network error, got {other:?}"),
        }
        assert!(err.is_retriable());
    }
}
