//! Line-oriented block format: `label:length` pairs separated by whitespace.

use std::io::BufRead;

use crate::error::{Error, Result};
use crate::system::{Run, RunString};
use crate::weight::{Constants, Weight};

/// Parses one block line such as `0:1 1:3/2 2:pi`.
pub fn parse_run_string(line: &str, constants: &Constants) -> Result<RunString> {
    let runs = line
        .split_whitespace()
        .map(|pair| {
            let (label, length) = pair
                .split_once(':')
                .ok_or_else(|| Error::Parse(format!("expected label:length, got {pair:?}")))?;
            if label.is_empty() {
                return Err(Error::Parse(format!("missing label in {pair:?}")));
            }
            Ok(Run::new(label, Weight::parse(length, constants)?))
        })
        .collect::<Result<Vec<_>>>()?;
    RunString::new(runs)
}

/// One block per line; blank lines and lines starting with `#` are skipped.
pub fn read_blocks<R: BufRead>(reader: R, constants: &Constants) -> Result<Vec<RunString>> {
    let mut out = Vec::new();
    for (no, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        out.push(
            parse_run_string(line, constants)
                .map_err(|e| Error::Parse(format!("line {}: {e}", no + 1)))?,
        );
    }
    Ok(out)
}
