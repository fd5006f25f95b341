//! Archive download with optional integrity check. Everything downstream
//! works from local files; this is a convenience for first-time setup.

use std::path::Path;

use super::DatasetError;

/// Where the released annotation archive lives.
pub const DEFAULT_DATASET_URL: &str = "https://osf.io/5aupt/";

/// Fetches `url` to `dest`. `file://` URLs are copied locally, which keeps
/// tests and offline runs off the network. When a checksum is given and
/// does not match, `dest` is removed so a bad download cannot be mistaken
/// for a good one.
pub fn fetch_archive(
    url: &str,
    dest: &Path,
    expected_sha256: Option<&str>,
) -> Result<(), DatasetError> {
    if let Some(src) = url.strip_prefix("file://") {
        std::fs::copy(src, dest)?;
    } else if url.starts_with("http://") || url.starts_with("https://") {
        let net = |e: reqwest::Error| DatasetError::NetworkFailure(e.to_string());
        let response = reqwest::blocking::get(url)
            .map_err(net)?
            .error_for_status()
            .map_err(net)?;
        let bytes = response.bytes().map_err(net)?;
        std::fs::write(dest, &bytes)?;
    } else {
        return Err(DatasetError::NetworkFailure(format!(
            "unsupported scheme in {url:?}; use http(s):// or file://"
        )));
    }
    if let Some(expected) = expected_sha256 {
        let expected = expected.trim().to_ascii_lowercase();
        let actual = sha256_hex(dest)?;
        if actual != expected {
            let _ = std::fs::remove_file(dest);
            return Err(DatasetError::ChecksumMismatch { expected, actual });
        }
    }
    Ok(())
}

fn sha256_hex(path: &Path) -> Result<String, DatasetError> {
    use sha2::{Digest, Sha256};
    let bytes = std::fs::read(path)?;
    let digest = Sha256::digest(&bytes);
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}
