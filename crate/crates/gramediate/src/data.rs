//! The embedded clinical-trial dataset: 1343 observations of self-rated
//! fatigue and weakness cross-classified by time point and treatment group.

use crate::error::Result;
use crate::table::{ContingencyTable, Schema, VariableSchema};

pub const FATIGUE: &str = "SSC-F";
pub const WEAKNESS: &str = "SSC-W";
pub const TIME: &str = "TIME";
pub const TREATMENT: &str = "IC";

/// Rows of the source cross-tabulation. Layout per row:
/// [SSC-F, TIME, counts for IC=0 at SSC-W=0..3, counts for IC=1 at SSC-W=0..3].
const CELLS: [[u32; 10]; 12] = [
    [0, 0, 53, 10, 6, 6, 83, 11, 6, 5],
    [1, 0, 10, 35, 7, 0, 15, 39, 13, 1],
    [2, 0, 8, 18, 46, 12, 16, 28, 41, 4],
    [3, 0, 3, 8, 17, 22, 4, 6, 19, 24],
    [0, 1, 45, 5, 5, 4, 69, 9, 6, 3],
    [1, 1, 10, 22, 6, 0, 11, 18, 5, 0],
    [2, 1, 10, 14, 37, 4, 10, 14, 22, 3],
    [3, 1, 4, 1, 4, 17, 6, 4, 13, 12],
    [0, 2, 47, 9, 2, 5, 87, 5, 7, 2],
    [1, 2, 13, 24, 4, 1, 11, 12, 6, 2],
    [2, 2, 15, 12, 22, 4, 12, 12, 14, 1],
    [3, 2, 2, 0, 5, 17, 3, 3, 3, 12],
];

/// Schema of the embedded dataset: SSC-F (4 levels), SSC-W (4), TIME (3),
/// IC (2), in that order.
pub fn embedded_schema() -> Schema {
    Schema::new(vec![
        VariableSchema::new(FATIGUE, &["0", "1", "2", "3"]).unwrap(),
        VariableSchema::new(WEAKNESS, &["0", "1", "2", "3"]).unwrap(),
        VariableSchema::new(TIME, &["0", "1", "2"]).unwrap(),
        VariableSchema::new(TREATMENT, &["0", "1"]).unwrap(),
    ])
    .unwrap()
}

/// The embedded 4x4x3x2 contingency table (96 cells, N = 1343).
pub fn embedded_dataset() -> ContingencyTable {
    let schema = embedded_schema();
    let mut table = ContingencyTable::zeros(schema);
    for row in &CELLS {
        let (f, t) = (row[0] as usize, row[1] as usize);
        for w in 0..4 {
            for ic in 0..2 {
                let idx = table.cell_index(&[f, w, t, ic]);
                table.counts_mut()[idx] = row[2 + 4 * ic + w] as f64;
            }
        }
    }
    debug_assert_eq!(table.total(), 1343.0);
    table
}

/// The embedded dataset marginalized to a named variable subset.
pub fn embedded_marginal(keep: &[&str]) -> Result<ContingencyTable> {
    embedded_dataset().marginalize(keep)
}
