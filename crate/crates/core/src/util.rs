use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// `⌈ratio·n⌉` clamped to `[1, n]` for `n ≥ 1`.
///
/// Products within 1e-9 (relative) of an integer snap to it, so that e.g.
/// 0.7·10 gives 7 rather than 8 from the binary representation of 0.7.
pub fn ceil_fraction(n: usize, ratio: f64) -> usize {
    if n == 0 {
        return 0;
    }
    let x = ratio * n as f64;
    let nearest = x.round();
    let v = if (x - nearest).abs() <= 1e-9 * x.abs().max(1.0) { nearest } else { x.ceil() };
    (v.max(1.0) as usize).min(n)
}

/// Writes `bytes` to a sibling temp file and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    {
        let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
        f.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
        f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    }
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}
