//! Small file-output helpers shared by checkpoints, grids, and CSV logs.

use std::io::Write;
use std::path::Path;

use crate::error::Result;

/// Writes via a temp file in the same directory, then renames into place,
/// so readers never observe a partially written artifact.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let tmp = match dir {
        Some(d) => tempfile_path(d, path),
        None => tempfile_path(Path::new("."), path),
    };
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

fn tempfile_path(dir: &Path, target: &Path) -> std::path::PathBuf {
    let name = target
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".into());
    dir.join(format!(".{}.tmp-{}", name, std::process::id()))
}
