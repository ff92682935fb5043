use std::fmt;
use std::path::Path;

#[derive(Debug)]
pub enum CliError {
    /// Bad flag value or inconsistent parameters; exit 2.
    Param(String),
    /// Unreadable or malformed input; exit 3.
    Input(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Param(_) => 2,
            CliError::Input(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Param(m) | CliError::Input(m) => f.write_str(m),
        }
    }
}

pub fn at_line(path: &Path, line: usize, msg: impl fmt::Display) -> CliError {
    CliError::Input(format!("{}:{line}: {msg}", path.display()))
}

fn read_bytes(path: &Path) -> Result<Vec<u8>, CliError> {
    std::fs::read(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// One record per line, CR stripped, trailing newline optional.
pub fn read_lines(path: &Path) -> Result<Vec<String>, CliError> {
    let bytes = read_bytes(path)?;
    let mut pieces: Vec<&[u8]> = bytes.split(|&b| b == b'\n').collect();
    if pieces.last().is_some_and(|p| p.is_empty()) {
        pieces.pop();
    }
    pieces
        .into_iter()
        .enumerate()
        .map(|(k, raw)| {
            let raw = raw.strip_suffix(b"\r").unwrap_or(raw);
            String::from_utf8(raw.to_vec()).map_err(|_| at_line(path, k + 1, "invalid UTF-8"))
        })
        .collect()
}

/// Whole file as one document, CR removed and one trailing newline dropped.
pub fn read_document(path: &Path) -> Result<String, CliError> {
    let lines = read_lines(path)?;
    Ok(lines.join("\n"))
}

/// One set per line, tokens separated by single spaces; repeated tokens are collapsed.
pub fn read_sets(path: &Path) -> Result<Vec<Vec<String>>, CliError> {
    let lines = read_lines(path)?;
    let mut out = Vec::with_capacity(lines.len());
    for (k, line) in lines.iter().enumerate() {
        if line.is_empty() {
            return Err(at_line(path, k + 1, "empty set"));
        }
        let mut set: Vec<String> = Vec::new();
        let mut dup = false;
        for tok in line.split(' ') {
            if tok.is_empty() {
                return Err(at_line(path, k + 1, "tokens must be separated by single spaces"));
            }
            if set.iter().any(|t| t == tok) {
                dup = true;
            } else {
                set.push(tok.to_string());
            }
        }
        if dup {
            eprintln!("warning: {}:{}: duplicate tokens collapsed", path.display(), k + 1);
        }
        out.push(set);
    }
    Ok(out)
}
