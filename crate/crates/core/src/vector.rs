//! The database vector x: a dense histogram over the 2^d cells.

use crate::error::{Error, Result};
use crate::mask::{BitMask, MAX_DIMENSION};

#[derive(Debug, Clone, PartialEq)]
pub struct ContingencyVector {
    d: u8,
    cells: Vec<f64>,
}

impl ContingencyVector {
    pub fn zeros(d: u8) -> Result<Self> {
        if d == 0 || d > MAX_DIMENSION {
            return Err(Error::DimensionTooLarge(d));
        }
        Ok(ContingencyVector {
            d,
            cells: vec![0.0; 1usize << d],
        })
    }

    pub fn from_cells(d: u8, cells: Vec<f64>) -> Result<Self> {
        if d == 0 || d > MAX_DIMENSION {
            return Err(Error::DimensionTooLarge(d));
        }
        if cells.len() != 1usize << d {
            return Err(Error::DimensionMismatch(format!(
                "expected {} cells for d = {}, got {}",
                1usize << d,
                d,
                cells.len()
            )));
        }
        if cells.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("contingency cells must be finite".into()));
        }
        Ok(ContingencyVector { d, cells })
    }

    pub fn dimension(&self) -> u8 {
        self.d
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        false // always 2^d >= 2 cells
    }

    pub fn cells(&self) -> &[f64] {
        &self.cells
    }

    pub fn get(&self, cell: BitMask) -> Result<f64> {
        if cell.dimension() != self.d {
            return Err(Error::DimensionMismatch(format!(
                "cell mask dimension {} does not match vector dimension {}",
                cell.dimension(),
                self.d
            )));
        }
        Ok(self.cells[cell.bits() as usize])
    }

    pub(crate) fn add_at(&mut self, cell: u32) {
        self.cells[cell as usize] += 1.0;
    }

    pub fn total(&self) -> f64 {
        self.cells.iter().sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn length_is_power_of_two() {
        let v = ContingencyVector::zeros(3).unwrap();
        assert_eq!(v.len(), 8);
        assert!(ContingencyVector::from_cells(3, vec![0.0; 7]).is_err());
        assert!(ContingencyVector::from_cells(3, vec![f64::NAN; 8]).is_err());
    }
}
