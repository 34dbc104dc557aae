//! Matrix Market coordinate I/O for real symmetric matrices.

use crate::error::{Error, Result};
use crate::sparse::SparseSym;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Symmetry {
    General,
    Symmetric,
}

pub fn load_matrix_market(path: impl AsRef<Path>) -> Result<SparseSym> {
    let file = File::open(path.as_ref())?;
    read_matrix_market(BufReader::new(file))
}

pub fn read_matrix_market<R: BufRead>(reader: R) -> Result<SparseSym> {
    let mut lines = reader.lines().enumerate();
    let parse_err = |line: usize, msg: &str| Error::Parse {
        line: line + 1,
        msg: msg.to_string(),
    };

    let (ln, header) = match lines.next() {
        Some((ln, l)) => (ln, l?),
        None => return Err(parse_err(0, "empty file")),
    };
    let tokens: Vec<String> = header
        .split_whitespace()
        .map(|t| t.to_ascii_lowercase())
        .collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" {
        return Err(parse_err(ln, "missing %%MatrixMarket matrix header"));
    }
    if tokens[2] != "coordinate" {
        return Err(Error::Unsupported(format!(
            "format '{}' (only coordinate)",
            tokens[2]
        )));
    }
    match tokens[3].as_str() {
        "real" | "double" | "integer" => {}
        "complex" => return Err(Error::Unsupported("complex-valued matrices".into())),
        other => return Err(Error::Unsupported(format!("field '{other}'"))),
    }
    let symmetry = match tokens[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        other => return Err(Error::Unsupported(format!("symmetry '{other}'"))),
    };

    let mut size: Option<(usize, usize, usize)> = None;
    let mut triplets = Vec::new();
    for (ln, line) in lines {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        let fields: Vec<&str> = t.split_whitespace().collect();
        match size {
            None => {
                if fields.len() != 3 {
                    return Err(parse_err(ln, "size line needs rows, cols and entry count"));
                }
                let nums: std::result::Result<Vec<usize>, _> =
                    fields.iter().map(|f| f.parse()).collect();
                let nums = nums.map_err(|_| parse_err(ln, "bad size line"))?;
                if nums[0] != nums[1] {
                    return Err(Error::Unsupported(format!(
                        "matrix is {}x{}, not square",
                        nums[0], nums[1]
                    )));
                }
                size = Some((nums[0], nums[1], nums[2]));
                triplets.reserve(nums[2] * 2);
            }
            Some((n, _, nnz)) => {
                if fields.len() < 3 {
                    return Err(parse_err(ln, "entry needs row, column and value"));
                }
                let i: usize = fields[0]
                    .parse()
                    .map_err(|_| parse_err(ln, "bad row index"))?;
                let j: usize = fields[1]
                    .parse()
                    .map_err(|_| parse_err(ln, "bad column index"))?;
                let v: f64 = fields[2].parse().map_err(|_| parse_err(ln, "bad value"))?;
                if i == 0 || j == 0 || i > n || j > n {
                    return Err(parse_err(ln, "index out of range"));
                }
                if triplets.len() >= nnz {
                    return Err(parse_err(ln, "more entries than declared"));
                }
                triplets.push((i - 1, j - 1, v));
            }
        }
    }
    let (n, _, nnz) = size.ok_or_else(|| parse_err(0, "missing size line"))?;
    if triplets.len() != nnz {
        return Err(Error::Parse {
            line: 0,
            msg: format!(
                "header declares {nnz} entries but file contains {}",
                triplets.len()
            ),
        });
    }
    match symmetry {
        Symmetry::Symmetric => SparseSym::from_triangle(n, triplets),
        Symmetry::General => SparseSym::from_triplets(n, triplets),
    }
}

/// Writes the full stored pattern with a `general` qualifier.
pub fn write_matrix_market(path: impl AsRef<Path>, a: &SparseSym) -> Result<()> {
    let file = File::create(path.as_ref())?;
    let mut w = BufWriter::new(file);
    write_matrix_market_to(&mut w, a)?;
    w.flush()?;
    Ok(())
}

pub fn write_matrix_market_to<W: Write>(w: &mut W, a: &SparseSym) -> Result<()> {
    writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(w, "{} {} {}", a.n(), a.n(), a.nnz())?;
    for (i, j, v) in a.csr().triplets() {
        writeln!(w, "{} {} {:e}", i + 1, j + 1, v)?;
    }
    Ok(())
}
