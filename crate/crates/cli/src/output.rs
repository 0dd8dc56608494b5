use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::Context;

/// Write `contents` to a sibling temporary file, then rename it over `path`,
/// so readers never see a partial file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> anyhow::Result<()> {
    let name = path
        .file_name()
        .with_context(|| format!("output path `{}` has no file name", path.display()))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(format!(".tmp{}", std::process::id()));
    let tmp = path.with_file_name(tmp_name);

    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result
        .map_err(funcirc::Error::from)
        .with_context(|| format!("writing `{}`", path.display()))
}

pub fn read_input(path: &Path) -> anyhow::Result<Vec<u8>> {
    fs::read(path)
        .map_err(funcirc::Error::from)
        .with_context(|| format!("reading `{}`", path.display()))
}

/// Build a CSV document in memory from a header and rows of fields.
pub fn csv_bytes<I, R>(header: &[&str], rows: I) -> anyhow::Result<Vec<u8>>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    Ok(w.into_inner().map_err(|e| e.into_error())?)
}
