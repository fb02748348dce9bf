use std::fmt;

use jpeg_noise::{Error, ErrorKind};

pub const EXIT_OTHER: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_PARSE: i32 = 3;
pub const EXIT_INTEGRITY: i32 = 4;

#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    pub fn config(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_CONFIG,
            message: message.into(),
        }
    }

    pub fn integrity(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_INTEGRITY,
            message: message.into(),
        }
    }
}

pub fn exit_code(kind: ErrorKind) -> i32 {
    match kind {
        ErrorKind::Config => EXIT_CONFIG,
        ErrorKind::Parse => EXIT_PARSE,
        ErrorKind::Integrity => EXIT_INTEGRITY,
        ErrorKind::Domain | ErrorKind::Shape | ErrorKind::Io => EXIT_OTHER,
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Self {
            code: exit_code(e.kind()),
            message: e.to_string(),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

pub type CliResult<T = ()> = Result<T, Failure>;

impl Failure {
    pub fn with_context(mut self, path: &std::path::Path) -> Self {
        self.message = format!("{}: {}", path.display(), self.message);
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn error_kinds_map_to_exit_codes() {
        assert_eq!(Failure::from(Error::Config("x".into())).code, EXIT_CONFIG);
        assert_eq!(Failure::from(Error::Integrity("x".into())).code, EXIT_INTEGRITY);
        assert_eq!(Failure::from(Error::Shape("x".into())).code, EXIT_OTHER);
        assert_eq!(exit_code(ErrorKind::Parse), EXIT_PARSE);
        let f = Failure::config("bad").with_context(std::path::Path::new("a.toml"));
        assert_eq!(f.to_string(), "a.toml: bad");
    }
}
