//! Attribute schemas: how named categorical attributes map onto the bits of
//! the cell index space.
//!
//! Attribute bits are packed most-significant-first in schema order, so with
//! three binary attributes A, B, C the cell (A=0,B=0,C=1) linearizes to
//! index 001 = 1.

use crate::error::{Error, Result};
use crate::mask::{BitMask, MAX_DIMENSION};

#[derive(Debug, Clone)]
pub struct Attribute {
    pub name: String,
    pub cardinality: u32,
    /// ceil(log2 cardinality)
    pub bit_width: u8,
    /// Explicit value order pinning the dictionary codes, when given.
    pub pinned_values: Option<Vec<String>>,
}

#[derive(Debug, Clone)]
pub struct AttributeSchema {
    attributes: Vec<Attribute>,
    /// Offset of each attribute's least significant bit within the d-bit index.
    offsets: Vec<u8>,
    d: u8,
}

fn bit_width(cardinality: u32) -> u8 {
    // ceil(log2 c) for c >= 2
    (32 - (cardinality - 1).leading_zeros()) as u8
}

impl AttributeSchema {
    pub fn new(attrs: Vec<(String, u32, Option<Vec<String>>)>) -> Result<Self> {
        if attrs.is_empty() {
            return Err(Error::Schema("schema has no attributes".into()));
        }
        let mut attributes = Vec::with_capacity(attrs.len());
        let mut total: u32 = 0;
        for (name, card, pinned) in attrs {
            if card < 2 {
                return Err(Error::Schema(format!(
                    "attribute '{name}' has cardinality {card}; at least 2 required"
                )));
            }
            if attributes.iter().any(|a: &Attribute| a.name == name) {
                return Err(Error::Schema(format!("duplicate attribute name '{name}'")));
            }
            if let Some(vals) = &pinned {
                if vals.len() != card as usize {
                    return Err(Error::Schema(format!(
                        "attribute '{name}' pins {} values but declares cardinality {card}",
                        vals.len()
                    )));
                }
            }
            let w = bit_width(card);
            total += w as u32;
            attributes.push(Attribute {
                name,
                cardinality: card,
                bit_width: w,
                pinned_values: pinned,
            });
        }
        if total > MAX_DIMENSION as u32 {
            return Err(Error::DimensionTooLarge(total.min(255) as u8));
        }
        let d = total as u8;
        // first attribute occupies the most significant bits
        let mut offsets = Vec::with_capacity(attributes.len());
        let mut used = 0u8;
        for a in &attributes {
            used += a.bit_width;
            offsets.push(d - used);
        }
        Ok(AttributeSchema {
            attributes,
            offsets,
            d,
        })
    }

    pub fn dimension(&self) -> u8 {
        self.d
    }

    pub fn attributes(&self) -> &[Attribute] {
        &self.attributes
    }

    pub fn attribute_index(&self, name: &str) -> Option<usize> {
        self.attributes.iter().position(|a| a.name == name)
    }

    /// Least-significant-bit offset of attribute `i` within the cell index.
    pub fn bit_offset(&self, i: usize) -> u8 {
        self.offsets[i]
    }

    /// The mask selecting all bits of the named attributes.
    pub fn marginal_mask(&self, names: &[&str]) -> Result<BitMask> {
        let mut bits = 0u32;
        for name in names {
            let i = self
                .attribute_index(name)
                .ok_or_else(|| Error::Schema(format!("unknown attribute '{name}'")))?;
            let a = &self.attributes[i];
            let field = ((1u32 << a.bit_width) - 1) << self.offsets[i];
            bits |= field;
        }
        BitMask::new(bits, self.d)
    }

    /// Pack per-attribute codes into a cell index.
    pub fn encode_cell(&self, codes: &[u32]) -> Result<u32> {
        if codes.len() != self.attributes.len() {
            return Err(Error::Ingest(format!(
                "record has {} values, schema has {} attributes",
                codes.len(),
                self.attributes.len()
            )));
        }
        let mut cell = 0u32;
        for (i, (&code, a)) in codes.iter().zip(&self.attributes).enumerate() {
            if code >= a.cardinality {
                return Err(Error::Ingest(format!(
                    "value code {code} out of range for attribute '{}' (cardinality {})",
                    a.name, a.cardinality
                )));
            }
            cell |= code << self.offsets[i];
        }
        Ok(cell)
    }
}
