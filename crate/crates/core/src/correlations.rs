//! Ground-state contractions and spin correlators.
//!
//! With Majorana-like operators `A_i = c†_i + c_i`, `B_i = c†_i - c_i`, the
//! only non-vanishing two-point contraction in the Bogoliubov vacuum is
//! `<B_i A_j> = G_ij = -sum_k psi_ki phi_kj`. Every correlator returned here
//! is a Pauli-operator expectation (`sigma`, not `S = sigma/2`).

use alloc::format;

use nalgebra::DMatrix;

use crate::quadratic::BogoliubovModes;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct GMatrix {
    pub g: DMatrix<f64>,
}

pub fn g_matrix(modes: &BogoliubovModes) -> GMatrix {
    GMatrix { g: -(modes.psi.transpose() * &modes.phi) }
}

impl GMatrix {
    pub fn n_sites(&self) -> usize {
        self.g.nrows()
    }

    /// `G_ij` with 1-based site labels.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.g[(i - 1, j - 1)]
    }

    fn check_pair(&self, l: usize, m: usize) -> Result<()> {
        let n = self.n_sites();
        if l < 1 || m > n || l >= m {
            return Err(Error::Domain(format!("pair ({l}, {m}) needs 1 <= l < m <= {n}")));
        }
        Ok(())
    }

    /// `<sigma^x_l sigma^x_m>`: determinant of `G_{i,j}` with rows
    /// `i = l..m-1` and columns `j = l+1..m`.
    pub fn correlator_xx(&self, l: usize, m: usize) -> Result<f64> {
        self.check_pair(l, m)?;
        Ok(self.string_determinant(l - 1, l, m - l))
    }

    /// `<sigma^y_l sigma^y_m>`: determinant of `G_{i,j}` with rows
    /// `i = l+1..m` and columns `j = l..m-1`.
    pub fn correlator_yy(&self, l: usize, m: usize) -> Result<f64> {
        self.check_pair(l, m)?;
        Ok(self.string_determinant(l, l - 1, m - l))
    }

    /// `<sigma^z_l sigma^z_m> = G_ll G_mm - G_ml G_lm`.
    pub fn correlator_zz(&self, l: usize, m: usize) -> Result<f64> {
        let n = self.n_sites();
        if l == m || l < 1 || m < 1 || l > n || m > n {
            return Err(Error::Domain(format!("pair ({l}, {m}) needs distinct sites in 1..={n}")));
        }
        Ok(self.entry(l, l) * self.entry(m, m) - self.entry(m, l) * self.entry(l, m))
    }

    /// `<sigma^z_i> = G_ii`.
    pub fn magnetization(&self, i: usize) -> Result<f64> {
        let n = self.n_sites();
        if i < 1 || i > n {
            return Err(Error::Domain(format!("site {i} outside 1..={n}")));
        }
        Ok(self.entry(i, i))
    }

    /// Mean spin-1/2 moment `(1/N) sum_i G_ii / 2`.
    pub fn average_magnetization(&self) -> f64 {
        0.5 * self.g.trace() / self.n_sites() as f64
    }

    fn string_determinant(&self, row0: usize, col0: usize, size: usize) -> f64 {
        if size == 1 {
            return self.g[(row0, col0)];
        }
        self.g.view((row0, col0), (size, size)).clone_owned().lu().determinant()
    }
}
