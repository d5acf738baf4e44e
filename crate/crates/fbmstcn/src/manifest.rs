//! Training manifest: one `clean noise snr_db seed` record per line.
//!
//! Paths are whitespace-free and relative to the manifest's directory;
//! `#` starts a comment.

use crate::error::{AppError, Result};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub clean: PathBuf,
    pub noise: PathBuf,
    pub snr_db: f64,
    pub seed: u64,
}

pub fn parse(text: &str, base: &Path) -> Result<Vec<Record>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |what: &str| AppError::Usage(format!("manifest line {}: {what}", i + 1));
        let f: Vec<&str> = line.split_whitespace().collect();
        let [clean, noise, snr, seed] = f[..] else {
            return Err(err("expected `clean noise snr_db seed`"));
        };
        let snr_db: f64 = snr.parse().map_err(|_| err("bad snr"))?;
        if !snr_db.is_finite() {
            return Err(err("snr must be finite"));
        }
        out.push(Record {
            clean: base.join(clean),
            noise: base.join(noise),
            snr_db,
            seed: seed.parse().map_err(|_| err("bad seed"))?,
        });
    }
    Ok(out)
}

pub fn load(path: &Path) -> Result<Vec<Record>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| AppError::io(format!("reading {}", path.display()), e))?;
    parse(&text, path.parent().unwrap_or(Path::new(".")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_records_and_comments() {
        let m = parse(
            "# header\nc.wav n.wav -5 7\n\n a.wav b.wav 10.5 0 # tail\n",
            Path::new("/d"),
        )
        .unwrap();
        assert_eq!(m.len(), 2);
        assert_eq!(m[0].clean, Path::new("/d/c.wav"));
        assert_eq!((m[0].snr_db, m[0].seed), (-5.0, 7));
        assert_eq!(m[1].snr_db, 10.5);
    }

    #[test]
    fn rejects_malformed_lines() {
        assert!(parse("a b 3", Path::new(".")).is_err());
        assert!(parse("a b x 1", Path::new(".")).is_err());
        assert!(parse("a b 1 -1", Path::new(".")).is_err());
    }
}
