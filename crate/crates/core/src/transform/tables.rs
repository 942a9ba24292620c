//! Whole-modulus table emitters: the cipher map `m -> c` for `m = 1..n-1` and
//! its grouping into root classes, with byte-stable CSV renderings.

use super::{encrypt, ParamSet, TransformError, TABLE_GUARD};
use serde::Serialize;
use std::collections::BTreeMap;
use std::fmt::Write;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CipherRow {
    pub m: u64,
    pub c: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ClassRow {
    pub c: u64,
    pub roots: Vec<u64>,
}

/// One row per message `m = 1..n-1` with its cipher.
pub fn table_cipher_map(params: &ParamSet) -> Result<Vec<CipherRow>, TransformError> {
    if params.n() > TABLE_GUARD {
        return Err(TransformError::TableScale {
            n: params.n(),
            guard: TABLE_GUARD,
        });
    }
    (1..params.n())
        .map(|m| {
            Ok(CipherRow {
                m,
                c: encrypt(m, params)?,
            })
        })
        .collect()
}

/// The cipher map grouped by cipher: classes ordered by cipher value, roots
/// ascending within each class.
pub fn table_root_classes(params: &ParamSet) -> Result<Vec<ClassRow>, TransformError> {
    let mut classes: BTreeMap<u64, Vec<u64>> = BTreeMap::new();
    for row in table_cipher_map(params)? {
        classes.entry(row.c).or_default().push(row.m);
    }
    Ok(classes
        .into_iter()
        .map(|(c, roots)| ClassRow { c, roots })
        .collect())
}

/// Renders `m,c` rows with a header line and one trailing newline.
pub fn cipher_map_csv(rows: &[CipherRow]) -> String {
    let mut out = String::from("m,c\n");
    for row in rows {
        writeln!(out, "{},{}", row.m, row.c).expect("string write");
    }
    out
}

/// Renders one `c,root1,...,rootk` line per class; the header names the
/// variable-length layout.
pub fn root_classes_csv(rows: &[ClassRow]) -> String {
    let mut out = String::from("c,root1,...,rootk\n");
    for row in rows {
        write!(out, "{}", row.c).expect("string write");
        for root in &row.roots {
            write!(out, ",{root}").expect("string write");
        }
        out.push('\n');
    }
    out
}
