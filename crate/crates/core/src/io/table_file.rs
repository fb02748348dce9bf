//! Quantization tables as text: either one integer (a constant table) or 64
//! integers in row-major order. Separators are whitespace or commas; `#`
//! starts a comment.

use std::path::Path;

use crate::codec::QuantTable;
use crate::error::{Error, Result};
use crate::transform::BLOCK_LEN;

pub fn parse_table_text(text: &str) -> Result<QuantTable> {
    let mut steps = Vec::new();
    for line in text.lines() {
        let line = line.split('#').next().unwrap_or("");
        for tok in line.split(|c: char| c.is_whitespace() || c == ',').filter(|t| !t.is_empty()) {
            if steps.len() == BLOCK_LEN {
                return Err(Error::parse("table", "more than 64 values"));
            }
            let v: u16 = tok
                .parse()
                .map_err(|_| Error::parse("table", format!("'{tok}' is not an integer in 0..=65535")))?;
            steps.push(v);
        }
    }
    let table = match steps.len() {
        1 => QuantTable::constant(steps[0]),
        BLOCK_LEN => QuantTable::from_slice(&steps),
        n => return Err(Error::parse("table", format!("expected 1 or 64 values, found {n}"))),
    };
    table.map_err(|e| Error::parse("table", e.to_string()))
}

pub fn format_table_text(table: &QuantTable) -> String {
    let mut out = format!("# quantization table {}\n", table.digest());
    for row in table.steps().chunks(8) {
        let cells: Vec<String> = row.iter().map(|s| format!("{s:>3}")).collect();
        out.push_str(&cells.join(" "));
        out.push('\n');
    }
    out
}

pub fn read_table(path: impl AsRef<Path>) -> Result<QuantTable> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_table_text(&text)
}

pub fn write_table(path: impl AsRef<Path>, table: &QuantTable) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, format_table_text(table)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_and_full() {
        assert_eq!(parse_table_text("5\n").unwrap(), QuantTable::constant(5).unwrap());
        let t = QuantTable::ijg_luminance(75).unwrap();
        assert_eq!(parse_table_text(&format_table_text(&t)).unwrap(), t);
        let csv: Vec<String> = t.steps().iter().map(|s| s.to_string()).collect();
        assert_eq!(parse_table_text(&csv.join(",")).unwrap(), t);
    }

    #[test]
    fn rejects() {
        for bad in ["", "# only comment", "0", "1 2", "-3", "2.5", "70000", &"1 ".repeat(65)] {
            assert!(matches!(parse_table_text(bad), Err(Error::Parse { .. })), "{bad}");
        }
    }
}
