use std::fmt;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Map, Value};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Input(String),
    Library { stage: String, source: distilkit::Error },
    /// A check that ran but did not meet its tolerance.
    Numerical(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Input(_) => 2,
            CliError::Library { source, .. } if source.is_input_error() => 2,
            CliError::Library { .. } | CliError::Numerical(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage: {m}"),
            CliError::Input(m) => write!(f, "input: {m}"),
            CliError::Library { stage, source } => write!(f, "{stage}: {source}"),
            CliError::Numerical(m) => write!(f, "numerical: {m}"),
        }
    }
}

/// Attaches a stage label to library errors.
pub trait Staged<T> {
    fn stage(self, stage: &str) -> Result<T, CliError>;
}

impl<T> Staged<T> for distilkit::Result<T> {
    fn stage(self, stage: &str) -> Result<T, CliError> {
        self.map_err(|source| CliError::Library {
            stage: stage.to_string(),
            source,
        })
    }
}

pub struct Context {
    pub command: &'static str,
    pub seed: u64,
    pub out: Option<PathBuf>,
}

impl Context {
    pub fn envelope<O: Serialize>(&self, options: &O) -> Value {
        json!({
            "seed": self.seed,
            "version": distilkit::VERSION,
            "command": self.command,
            "options": options,
        })
    }

    /// Writes `result` merged with the run metadata to `--out`, if given.
    pub fn write_json<O: Serialize, R: Serialize>(&self, options: &O, result: &R) -> Result<(), CliError> {
        let Some(path) = &self.out else {
            return Ok(());
        };
        let mut doc = match serde_json::to_value(result).map_err(|e| CliError::Numerical(e.to_string()))? {
            Value::Object(m) => m,
            other => {
                let mut m = Map::new();
                m.insert("result".into(), other);
                m
            }
        };
        if let Value::Object(meta) = self.envelope(options) {
            doc.extend(meta);
        }
        let text = serde_json::to_string_pretty(&Value::Object(doc)).expect("serializable");
        write_file(path, &text)
    }

    pub fn require_out(&self) -> Result<&Path, CliError> {
        self.out
            .as_deref()
            .ok_or_else(|| CliError::Usage(format!("{} needs --out", self.command)))
    }

    pub fn out_note(&self) -> String {
        match &self.out {
            Some(p) => format!(" -> {}", p.display()),
            None => String::new(),
        }
    }
}

pub fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Input(format!("writing {}: {e}", path.display())))
}

/// CSV writer whose first line is a `#` comment holding the run metadata.
pub fn csv_writer<O: Serialize>(
    ctx: &Context,
    options: &O,
) -> Result<csv::Writer<std::fs::File>, CliError> {
    use std::io::Write;
    let path = ctx.require_out()?;
    let mut file = std::fs::File::create(path)
        .map_err(|e| CliError::Input(format!("writing {}: {e}", path.display())))?;
    writeln!(file, "# {}", ctx.envelope(options))
        .map_err(|e| CliError::Input(format!("writing {}: {e}", path.display())))?;
    Ok(csv::Writer::from_writer(file))
}

pub fn csv_err(e: impl fmt::Display) -> CliError {
    CliError::Input(format!("csv: {e}"))
}

/// Float with 12 significant digits.
pub fn sig12(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let rounded: f64 = format!("{x:.11e}").parse().expect("valid float");
    let a = rounded.abs();
    if (1e-5..1e15).contains(&a) {
        format!("{rounded}")
    } else {
        format!("{rounded:e}")
    }
}

#[cfg(test)]
mod tests {
    use super::sig12;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(sig12(0.1 + 0.2), "0.3");
        assert_eq!(sig12(1.0 / 3.0), "0.333333333333");
        assert_eq!(sig12(2.0 / 3.0 * 1e-9), "6.66666666667e-10");
        assert_eq!(sig12(-12345.678901234567), "-12345.6789012");
        assert_eq!(sig12(0.0), "0");
    }
}
