//! Walsh-Hadamard analysis over {0,1}^d and exact marginal operators.
//!
//! The basis is orthonormal: f^alpha_beta = 2^{-d/2} (-1)^{<alpha,beta>}, so
//! the transform is its own inverse and a marginal depends only on the
//! coefficients of its dominated masks.

use crate::error::{Error, Result};
use crate::mask::BitMask;
use crate::vector::ContingencyVector;

/// Fourier coefficients <f^beta, x>, indexed by mask. Dense when produced by
/// [`fwht`]; sparse constructors track which masks are present.
#[derive(Debug, Clone)]
pub struct FourierCoefficients {
    d: u8,
    values: Vec<f64>,
    /// None means every coefficient is present.
    present: Option<Vec<bool>>,
}

impl FourierCoefficients {
    pub fn dimension(&self) -> u8 {
        self.d
    }

    pub fn from_dense(d: u8, values: Vec<f64>) -> Result<Self> {
        if values.len() != 1usize << d {
            return Err(Error::DimensionMismatch(format!(
                "expected {} coefficients, got {}",
                1usize << d,
                values.len()
            )));
        }
        Ok(FourierCoefficients {
            d,
            values,
            present: None,
        })
    }

    /// Build from a subset of coefficients; the rest are marked missing.
    pub fn from_entries(d: u8, entries: &[(BitMask, f64)]) -> Result<Self> {
        let n = 1usize << d;
        let mut values = vec![0.0; n];
        let mut present = vec![false; n];
        for (mask, v) in entries {
            if mask.dimension() != d {
                return Err(Error::DimensionMismatch(
                    "coefficient mask dimension mismatch".into(),
                ));
            }
            values[mask.bits() as usize] = *v;
            present[mask.bits() as usize] = true;
        }
        Ok(FourierCoefficients {
            d,
            values,
            present: Some(present),
        })
    }

    pub fn get(&self, beta: BitMask) -> Result<f64> {
        if beta.dimension() != self.d {
            return Err(Error::DimensionMismatch(
                "coefficient mask dimension mismatch".into(),
            ));
        }
        let idx = beta.bits() as usize;
        if let Some(p) = &self.present {
            if !p[idx] {
                return Err(Error::MissingCoefficient(beta.to_string()));
            }
        }
        Ok(self.values[idx])
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// In-place orthonormal Walsh-Hadamard transform; O(d 2^d).
pub fn fwht_in_place(data: &mut [f64]) -> Result<()> {
    let n = data.len();
    if n == 0 || n & (n - 1) != 0 {
        return Err(Error::DimensionMismatch(format!(
            "transform length {n} is not a power of two"
        )));
    }
    let mut h = 1;
    while h < n {
        for block in (0..n).step_by(h * 2) {
            for i in block..block + h {
                let (a, b) = (data[i], data[i + h]);
                data[i] = a + b;
                data[i + h] = a - b;
            }
        }
        h *= 2;
    }
    let scale = 1.0 / (n as f64).sqrt();
    for v in data {
        *v *= scale;
    }
    Ok(())
}

/// Fourier coefficients of a contingency vector.
pub fn fwht(x: &ContingencyVector) -> FourierCoefficients {
    let mut data = x.cells().to_vec();
    fwht_in_place(&mut data).expect("contingency length is a power of two");
    FourierCoefficients {
        d: x.dimension(),
        values: data,
        present: None,
    }
}

/// Closed form for (C^alpha f^beta)_gamma: 2^{d/2 - ||alpha||} (-1)^{<beta,gamma>}
/// when beta is dominated by alpha, else 0. Requires gamma dominated by alpha.
pub fn basis_marginal_entry(alpha: BitMask, beta: BitMask, gamma: BitMask, d: u8) -> Result<f64> {
    if alpha.dimension() != d || beta.dimension() != d || gamma.dimension() != d {
        return Err(Error::DimensionMismatch(
            "basis_marginal_entry mask dimensions must all equal d".into(),
        ));
    }
    if !gamma.dominates_by(&alpha)? {
        return Err(Error::NotDominated {
            gamma: gamma.to_string(),
            alpha: alpha.to_string(),
        });
    }
    if !beta.dominates_by(&alpha)? {
        return Ok(0.0);
    }
    let exponent = d as f64 / 2.0 - alpha.weight() as f64;
    let sign = if beta.inner(&gamma)? % 2 == 0 {
        1.0
    } else {
        -1.0
    };
    Ok(sign * exponent.exp2())
}

/// Extract the bits of `bits` at the set positions of `mask`, packed low.
/// Submasks in increasing integer order map to increasing packed values, so
/// this is also the rank of `bits & mask` within the ascending enumeration.
pub(crate) fn compact_index(bits: u32, mask: u32) -> u32 {
    let mut out = 0u32;
    let mut out_bit = 0u32;
    let mut m = mask;
    while m != 0 {
        let low = m & m.wrapping_neg();
        if bits & low != 0 {
            out |= 1 << out_bit;
        }
        out_bit += 1;
        m &= m - 1;
    }
    out
}

/// Exact marginal C^alpha x, entries in ascending submask order.
pub fn compute_marginal(alpha: BitMask, x: &ContingencyVector) -> Result<Vec<f64>> {
    if alpha.dimension() != x.dimension() {
        return Err(Error::DimensionMismatch(
            "marginal mask dimension does not match vector".into(),
        ));
    }
    let a = alpha.bits();
    let mut out = vec![0.0; 1usize << alpha.weight()];
    for (j, v) in x.cells().iter().enumerate() {
        out[compact_index(j as u32 & a, a) as usize] += v;
    }
    Ok(out)
}

/// Reconstruct C^alpha x from Fourier coefficients:
/// (C^alpha x)_gamma = sum over beta dominated by alpha of
/// coeff(beta) * (C^alpha f^beta)_gamma.
pub fn marginal_from_coeffs(alpha: BitMask, coeffs: &FourierCoefficients) -> Result<Vec<f64>> {
    if alpha.dimension() != coeffs.dimension() {
        return Err(Error::DimensionMismatch(
            "marginal mask dimension does not match coefficients".into(),
        ));
    }
    let d = coeffs.dimension();
    let scale = (d as f64 / 2.0 - alpha.weight() as f64).exp2();
    let betas: Vec<BitMask> = alpha.dominated().collect();
    let coeff_vals: Vec<f64> = betas
        .iter()
        .map(|b| coeffs.get(*b))
        .collect::<Result<_>>()?;
    let mut out = Vec::with_capacity(betas.len());
    for gamma in alpha.dominated() {
        let mut acc = 0.0;
        for (beta, c) in betas.iter().zip(&coeff_vals) {
            let sign = if beta.inner(&gamma)? % 2 == 0 {
                1.0
            } else {
                -1.0
            };
            acc += c * sign;
        }
        out.push(acc * scale);
    }
    Ok(out)
}
