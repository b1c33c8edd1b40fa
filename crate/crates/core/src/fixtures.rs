//! Tiny built-in instances used by documentation, tests and benches.

use crate::mask::BitMask;
use crate::schema::AttributeSchema;
use crate::vector::ContingencyVector;
use crate::workload::{MarginalSpec, Workload};

/// Three binary attributes a, b, c.
pub fn demo_schema() -> AttributeSchema {
    AttributeSchema::new(vec![
        ("a".into(), 2, None),
        ("b".into(), 2, None),
        ("c".into(), 2, None),
    ])
    .expect("static schema is valid")
}

/// The five-record demo table as a contingency vector: x = (1,2,0,1,0,0,1,0).
pub fn demo_vector() -> ContingencyVector {
    ContingencyVector::from_cells(3, vec![1.0, 2.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0])
        .expect("static vector is valid")
}

/// Workload asking for the marginal over a and the marginal over a,b.
pub fn demo_workload() -> Workload {
    let a = BitMask::from_binary_str("100").unwrap();
    let ab = BitMask::from_binary_str("110").unwrap();
    Workload::marginals(vec![MarginalSpec::new(a), MarginalSpec::new(ab)])
        .expect("static workload is valid")
}
