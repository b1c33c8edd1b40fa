//! Bit-mask algebra over the Boolean hypercube {0,1}^d.
//!
//! A mask selects a subset of the d binary attributes (when used as a
//! marginal index) or identifies a single cell of the contingency vector.
//! Bit i of `bits` corresponds to position i counted from the least
//! significant end; the textual form prints the most significant bit first,
//! so the mask written "110" over d = 3 has `bits == 0b110`.

use std::fmt;

use crate::error::{Error, Result};

pub const MAX_DIMENSION: u8 = 30;

/// A point or attribute subset of {0,1}^d, 1 <= d <= 30.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitMask {
    bits: u32,
    d: u8,
}

impl BitMask {
    pub fn new(bits: u32, d: u8) -> Result<Self> {
        if d == 0 || d > MAX_DIMENSION {
            return Err(Error::DimensionTooLarge(d));
        }
        if bits >= (1u32 << d) {
            return Err(Error::InvalidMask { bits, d });
        }
        Ok(BitMask { bits, d })
    }

    pub fn zero(d: u8) -> Result<Self> {
        BitMask::new(0, d)
    }

    /// Full mask 11...1 over d bits.
    pub fn full(d: u8) -> Result<Self> {
        if d == 0 || d > MAX_DIMENSION {
            return Err(Error::DimensionTooLarge(d));
        }
        Ok(BitMask {
            bits: (1u32 << d) - 1,
            d,
        })
    }

    /// Parse a binary string such as "110"; the leftmost character is the
    /// most significant bit. The string length fixes d.
    pub fn from_binary_str(s: &str) -> Result<Self> {
        let d = s.len() as u8;
        if d == 0 || d > MAX_DIMENSION {
            return Err(Error::DimensionTooLarge(d));
        }
        let mut bits = 0u32;
        for c in s.chars() {
            bits <<= 1;
            match c {
                '0' => {}
                '1' => bits |= 1,
                other => {
                    return Err(Error::InvalidMask {
                        bits: other as u32,
                        d,
                    })
                }
            }
        }
        BitMask::new(bits, d)
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn dimension(&self) -> u8 {
        self.d
    }

    /// Number of set bits, written ||alpha|| throughout.
    pub fn weight(&self) -> u32 {
        self.bits.count_ones()
    }

    fn check_dim(&self, other: &BitMask) -> Result<()> {
        if self.d != other.d {
            return Err(Error::DimensionMismatch(format!(
                "mask dimensions {} and {} differ",
                self.d, other.d
            )));
        }
        Ok(())
    }

    /// Bit-wise intersection alpha AND beta.
    pub fn meet(&self, other: &BitMask) -> Result<BitMask> {
        self.check_dim(other)?;
        Ok(BitMask {
            bits: self.bits & other.bits,
            d: self.d,
        })
    }

    /// alpha is dominated by beta when every set bit of alpha is set in beta.
    pub fn dominates_by(&self, other: &BitMask) -> Result<bool> {
        self.check_dim(other)?;
        Ok(self.bits & other.bits == self.bits)
    }

    /// Inner product <alpha, beta> = ||alpha AND beta||.
    pub fn inner(&self, other: &BitMask) -> Result<u32> {
        self.check_dim(other)?;
        Ok((self.bits & other.bits).count_ones())
    }

    /// All masks beta with beta dominated by self, in increasing integer
    /// order. Yields 2^||self|| masks.
    pub fn dominated(&self) -> DominatedIter {
        DominatedIter {
            mask: *self,
            next: Some(0),
        }
    }
}

/// `dominates(alpha, beta)`: true iff alpha is dominated by beta (alpha <= beta).
pub fn dominates(alpha: &BitMask, beta: &BitMask) -> Result<bool> {
    alpha.dominates_by(beta)
}

/// Ascending enumeration of the submasks of a fixed mask.
pub struct DominatedIter {
    mask: BitMask,
    next: Option<u32>,
}

impl Iterator for DominatedIter {
    type Item = BitMask;

    fn next(&mut self) -> Option<BitMask> {
        let cur = self.next?;
        self.next = if cur == self.mask.bits {
            None
        } else {
            // next submask in increasing order
            Some(cur.wrapping_sub(self.mask.bits) & self.mask.bits)
        };
        Some(BitMask {
            bits: cur,
            d: self.mask.d,
        })
    }
}

/// Ascending submask enumeration on raw bits, for hot paths that index
/// vectors directly.
pub fn submasks_ascending(mask: u32) -> impl Iterator<Item = u32> {
    let mut next = Some(0u32);
    std::iter::from_fn(move || {
        let cur = next?;
        next = if cur == mask {
            None
        } else {
            Some(cur.wrapping_sub(mask) & mask)
        };
        Some(cur)
    })
}

impl fmt::Display for BitMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in (0..self.d).rev() {
            write!(f, "{}", (self.bits >> i) & 1)?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitMask({})", self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(s: &str) -> BitMask {
        BitMask::from_binary_str(s).unwrap()
    }

    #[test]
    fn meet_is_bitwise_and() {
        assert_eq!(m("110").meet(&m("011")).unwrap(), m("010"));
        assert_eq!(m("111").meet(&m("101")).unwrap(), m("101"));
        let alpha = m("101");
        assert_eq!(alpha.meet(&m("000")).unwrap(), m("000"));
    }

    #[test]
    fn meet_dimension_mismatch() {
        let a = m("10");
        let b = m("100");
        assert!(a.meet(&b).is_err());
        assert!(a.inner(&b).is_err());
        assert!(dominates(&a, &b).is_err());
    }

    #[test]
    fn domination_examples() {
        assert!(dominates(&m("010"), &m("110")).unwrap());
        assert!(!dominates(&m("001"), &m("110")).unwrap());
        let alpha = m("101");
        assert!(dominates(&alpha, &alpha).unwrap());
    }

    #[test]
    fn inner_product() {
        assert_eq!(m("110").inner(&m("011")).unwrap(), 1);
        assert_eq!(m("101").inner(&m("000")).unwrap(), 0);
        assert_eq!(m("111").inner(&m("111")).unwrap(), 3);
    }

    #[test]
    fn dominated_enumeration_is_ascending_and_complete() {
        let got: Vec<u32> = m("110").dominated().map(|b| b.bits()).collect();
        assert_eq!(got, vec![0b000, 0b010, 0b100, 0b110]);
        let got: Vec<u32> = m("000").dominated().map(|b| b.bits()).collect();
        assert_eq!(got, vec![0]);
        let got: Vec<u32> = m("101").dominated().map(|b| b.bits()).collect();
        assert_eq!(got, vec![0b000, 0b001, 0b100, 0b101]);
    }

    #[test]
    fn dominated_count_matches_weight() {
        for bits in 0u32..64 {
            let mask = BitMask::new(bits, 6).unwrap();
            let all: Vec<BitMask> = mask.dominated().collect();
            assert_eq!(all.len(), 1usize << mask.weight());
            for b in &all {
                assert!(dominates(b, &mask).unwrap());
            }
            // ascending order
            for w in all.windows(2) {
                assert!(w[0].bits() < w[1].bits());
            }
        }
    }

    #[test]
    fn meet_dominates_both_arguments() {
        for a in 0u32..32 {
            for b in 0u32..32 {
                let (a, b) = (BitMask::new(a, 5).unwrap(), BitMask::new(b, 5).unwrap());
                let g = a.meet(&b).unwrap();
                assert!(dominates(&g, &a).unwrap());
                assert!(dominates(&g, &b).unwrap());
            }
        }
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(BitMask::new(8, 3).is_err());
        assert!(BitMask::new(0, 0).is_err());
        assert!(BitMask::new(0, 31).is_err());
        assert!(BitMask::from_binary_str("102").is_err());
    }

    #[test]
    fn display_is_msb_first() {
        assert_eq!(m("110").to_string(), "110");
        assert_eq!(BitMask::new(1, 4).unwrap().to_string(), "0001");
    }
}
