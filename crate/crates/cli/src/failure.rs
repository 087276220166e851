use std::fmt;
use std::path::Path;

/// Exit status contract: 1 for pipeline or data errors, 2 for usage and
/// configuration errors.
#[derive(Debug)]
pub enum Failure {
    Usage(anyhow::Error),
    Data(anyhow::Error),
}

impl Failure {
    pub fn code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Data(_) => 1,
        }
    }

    pub fn usage(msg: impl fmt::Display) -> Self {
        Failure::Usage(anyhow::anyhow!("{msg}"))
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(e) | Failure::Data(e) => write!(f, "{e:#}"),
        }
    }
}

pub type CliResult<T = ()> = std::result::Result<T, Failure>;

/// Tag an error with its exit class and a context line.
pub trait Classify<T> {
    fn data(self, ctx: impl fmt::Display) -> CliResult<T>;
    fn usage(self, ctx: impl fmt::Display) -> CliResult<T>;
}

impl<T, E> Classify<T> for std::result::Result<T, E>
where
    E: Into<anyhow::Error>,
{
    fn data(self, ctx: impl fmt::Display) -> CliResult<T> {
        self.map_err(|e| Failure::Data(e.into().context(ctx.to_string())))
    }

    fn usage(self, ctx: impl fmt::Display) -> CliResult<T> {
        self.map_err(|e| Failure::Usage(e.into().context(ctx.to_string())))
    }
}

pub fn require_file(path: &Path) -> CliResult {
    if path.is_file() {
        Ok(())
    } else {
        Err(Failure::usage(format!("input file not found: {}", path.display())))
    }
}

pub fn require_dir(path: &Path) -> CliResult {
    if path.is_dir() {
        Ok(())
    } else {
        Err(Failure::usage(format!("input directory not found: {}", path.display())))
    }
}
