pub mod benchmark;
pub mod calibrate;
pub mod detect;
pub mod estimate;
pub mod gen_table;
pub mod simulate;
pub mod validate;

use std::path::Path;

use serde::Serialize;

use crate::failure::CliResult;
use crate::inputs::ensure_dir;

/// Writes `rows` as `<dir>/<name>` and returns the path for logging.
pub fn write_rows<S: Serialize>(dir: &Path, name: &str, rows: &[S]) -> CliResult<std::path::PathBuf> {
    ensure_dir(dir)?;
    let path = dir.join(name);
    jpeg_noise::io::write_csv_report(&path, rows)?;
    Ok(path)
}

pub fn parse_list<T: std::str::FromStr>(s: &str) -> Result<Vec<T>, String> {
    s.split(',')
        .map(|t| t.trim().parse().map_err(|_| format!("bad list element '{t}'")))
        .collect()
}

/// Comma list of integers or inclusive ranges, e.g. `1..7,10,13`.
pub fn parse_steps(s: &str) -> Result<Vec<u16>, String> {
    let mut out = Vec::new();
    for t in s.split(',').map(str::trim) {
        match t.split_once("..") {
            Some((a, b)) => {
                let a: u16 = a.parse().map_err(|_| format!("bad range '{t}'"))?;
                let b: u16 = b.trim_start_matches('=').parse().map_err(|_| format!("bad range '{t}'"))?;
                if a > b {
                    return Err(format!("empty range '{t}'"));
                }
                out.extend(a..=b);
            }
            None => out.push(t.parse().map_err(|_| format!("bad step '{t}'"))?),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_lists() {
        assert_eq!(parse_steps("1..3,10, 13").unwrap(), vec![1, 2, 3, 10, 13]);
        assert_eq!(parse_steps("2..=4").unwrap(), vec![2, 3, 4]);
        assert!(parse_steps("5..2").is_err());
        assert!(parse_steps("a").is_err());
        assert_eq!(parse_list::<usize>("256, 32").unwrap(), vec![256, 32]);
        assert!(parse_list::<u8>("100,300").is_err());
    }
}
