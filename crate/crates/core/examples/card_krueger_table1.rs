//! Reproduce the minimum-wage employment table from the public fast-food
//! survey file:
//!
//! ```text
//! cargo run --example card_krueger_table1 -- path/to/public.dat [mapping.toml]
//! ```
//!
//! The mapping defaults to `data/card_krueger_mapping.toml` in the repo
//! root. Treatment is the New Jersey indicator; the outcome per wave is
//! part-time employment plus half the full-time employment.

use std::path::PathBuf;

use crossmoment::cross_moment::{DEFAULT_N_MAX, DEFAULT_TOL};
use crossmoment::dataset::{load_card_krueger, table1, ColumnMapping, OutcomeWeighting};
use crossmoment::Error;

fn main() -> crossmoment::Result<()> {
    let mut args = std::env::args().skip(1);
    let data = PathBuf::from(args.next().ok_or_else(|| {
        Error::InvalidInput("usage: card_krueger_table1 <public.dat> [mapping.toml]".into())
    })?);
    let mapping_path = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("data/card_krueger_mapping.toml"));

    let mapping = ColumnMapping::from_toml_file(&mapping_path)?;
    let ds = load_card_krueger(&data, &mapping, OutcomeWeighting::PartPlusHalfFull)?;
    println!("{} stores after dropping rows with missing values\n", ds.len());

    let table = table1(&ds, DEFAULT_TOL, DEFAULT_N_MAX)?;
    print!("{}", table.to_text());
    Ok(())
}
