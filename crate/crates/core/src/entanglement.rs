//! Two-qubit reduced density matrices and Wootters concurrence.
//!
//! Basis order is `|↑↑>, |↑↓>, |↓↑>, |↓↓>` with `sigma^z |↑> = |↑>`.

use alloc::format;

use nalgebra::{Complex, ComplexField, Matrix4, SMatrix, SymmetricEigen};

use crate::{Error, Result};

type C64 = Complex<f64>;

const TRACE_TOL: f64 = 1e-10;
const PSD_TOL: f64 = 1e-10;
const X_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct TwoSiteRDM {
    pub rho: Matrix4<C64>,
}

impl TwoSiteRDM {
    /// Wraps an arbitrary 4x4 matrix after checking that it is a density
    /// matrix: unit trace, Hermitian, positive semidefinite.
    pub fn from_matrix(rho: Matrix4<C64>) -> Result<Self> {
        let tr = rho.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::Consistency(format!("trace {tr} != 1")));
        }
        let herm = (rho - rho.adjoint()).iter().fold(0.0, |acc: f64, v| acc.max(v.modulus()));
        if herm > TRACE_TOL {
            return Err(Error::Consistency(format!("not Hermitian (deviation {herm:e})")));
        }
        let min = rho.symmetric_eigenvalues().min();
        if min < -PSD_TOL {
            return Err(Error::Consistency(format!("negative eigenvalue {min:e}")));
        }
        Ok(Self { rho })
    }

    /// Largest modulus among the entries outside the diagonal and
    /// anti-diagonal.
    pub fn x_violation(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for r in 0..4 {
            for c in 0..4 {
                if r != c && r + c != 3 {
                    worst = worst.max(self.rho[(r, c)].modulus());
                }
            }
        }
        worst
    }

    pub fn is_x_shaped(&self, tol: f64) -> bool {
        self.x_violation() <= tol
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_deviation(&self, other: &TwoSiteRDM) -> f64 {
        (self.rho - other.rho).iter().fold(0.0, |acc: f64, v| acc.max(v.modulus()))
    }
}

/// Density matrix from the single-site moments and the diagonal two-point
/// correlators; `⟨sigma^x sigma^y⟩` and the odd terms vanish by parity.
pub fn two_site_rdm(mz_i: f64, mz_j: f64, xx: f64, yy: f64, zz: f64) -> Result<TwoSiteRDM> {
    let a = (1.0 + mz_i + mz_j + zz) / 4.0;
    let b = (1.0 + mz_i - mz_j - zz) / 4.0;
    let c = (1.0 - mz_i + mz_j - zz) / 4.0;
    let d = (1.0 - mz_i - mz_j + zz) / 4.0;
    let f = (xx - yy) / 4.0;
    let z = (xx + yy) / 4.0;

    // eigenvalues of the two 2x2 blocks {1,4} and {2,3}
    let lowest = |p: f64, q: f64, off: f64| 0.5 * (p + q) - libm::hypot(0.5 * (p - q), off);
    let min = lowest(a, d, f).min(lowest(b, c, z));
    if !min.is_finite() || min < -PSD_TOL {
        return Err(Error::Consistency(format!(
            "correlators (mz {mz_i}, {mz_j}; xx {xx}, yy {yy}, zz {zz}) give eigenvalue {min:e}"
        )));
    }

    let r = |v: f64| C64::new(v, 0.0);
    let zero = r(0.0);
    #[rustfmt::skip]
    let rho = Matrix4::new(
        r(a), zero, zero, r(f),
        zero, r(b), r(z), zero,
        zero, r(z), r(c), zero,
        r(f), zero, zero, r(d),
    );
    Ok(TwoSiteRDM { rho })
}

fn sigma_yy() -> Matrix4<C64> {
    let r = |v: f64| C64::new(v, 0.0);
    let zero = r(0.0);
    #[rustfmt::skip]
    let m = Matrix4::new(
        zero, zero, zero, r(-1.0),
        zero, zero, r(1.0), zero,
        zero, r(1.0), zero, zero,
        r(-1.0), zero, zero, zero,
    );
    m
}

/// Wootters concurrence `max(0, l1 - l2 - l3 - l4)`, with `l_i` the square
/// roots of the eigenvalues of `rho (sy⊗sy) rho* (sy⊗sy)` in decreasing
/// order.
///
/// With `rho = W W†` the product is similar to `K† K`, `K = W^T (sy⊗sy) W`,
/// so the `l_i` are the singular values of `K`. They are read off the
/// Hermitian embedding `[[0, K], [K†, 0]]`: the non-normal product has
/// ill-conditioned eigenvalues when two `l_i` are small and close (edge
/// pairs of nearly polarized chains), the embedding does not.
pub fn concurrence(rdm: &TwoSiteRDM) -> Result<f64> {
    let eig = SymmetricEigen::try_new(rdm.rho, f64::EPSILON, 0)
        .ok_or_else(|| Error::Consistency("rho eigensolver did not converge".into()))?;
    let mut w = eig.eigenvectors;
    for (k, &p) in eig.eigenvalues.iter().enumerate() {
        if p < -PSD_TOL {
            return Err(Error::Consistency(format!("rho eigenvalue {p:e}")));
        }
        w.column_mut(k).scale_mut(libm::sqrt(p.max(0.0)));
    }
    let k = w.transpose() * sigma_yy() * w;
    let mut big = SMatrix::<C64, 8, 8>::zeros();
    big.fixed_view_mut::<4, 4>(0, 4).copy_from(&k);
    big.fixed_view_mut::<4, 4>(4, 0).copy_from(&k.adjoint());
    let sv = SymmetricEigen::try_new(big, f64::EPSILON, 0)
        .ok_or_else(|| Error::Consistency("singular values of the flipped factor did not converge".into()))?;

    let mut roots = [0.0f64; 8];
    for (slot, v) in roots.iter_mut().zip(sv.eigenvalues.iter()) {
        *slot = *v;
    }
    roots.sort_by(|x, y| y.total_cmp(x));
    let l: [f64; 4] = core::array::from_fn(|i| roots[i].max(0.0));
    Ok((l[0] - l[1] - l[2] - l[3]).clamp(0.0, 1.0))
}

/// Closed-form concurrence of an X-shaped state:
/// `2 max(0, |rho_23| - sqrt(rho_11 rho_44), |rho_14| - sqrt(rho_22 rho_33))`.
pub fn concurrence_xstate(rdm: &TwoSiteRDM) -> Result<f64> {
    let violation = rdm.x_violation();
    if violation > X_TOL {
        return Err(Error::Domain(format!("state is not X-shaped (off-X entry {violation:e})")));
    }
    let diag = |k: usize| rdm.rho[(k, k)].re.max(0.0);
    let inner = rdm.rho[(1, 2)].modulus() - libm::sqrt(diag(0) * diag(3));
    let outer = rdm.rho[(0, 3)].modulus() - libm::sqrt(diag(1) * diag(2));
    Ok((2.0 * inner.max(outer).max(0.0)).min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn polar(r: f64, theta: f64) -> C64 {
        let (s, co) = libm::sincos(theta);
        C64::new(r * co, r * s)
    }

    fn projector(v: [C64; 4]) -> TwoSiteRDM {
        let mut m = Matrix4::zeros();
        for r in 0..4 {
            for k in 0..4 {
                m[(r, k)] = v[r] * v[k].conj();
            }
        }
        TwoSiteRDM::from_matrix(m).unwrap()
    }

    #[test]
    fn polarized_limit_is_up_up() {
        let rdm = two_site_rdm(1.0, 1.0, 0.0, 0.0, 1.0).unwrap();
        let up = projector([c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        assert_eq!(rdm, up);
        assert_eq!(concurrence(&rdm).unwrap(), 0.0);
        assert_eq!(concurrence_xstate(&rdm).unwrap(), 0.0);
    }

    #[test]
    fn bell_state_from_correlators() {
        let rdm = two_site_rdm(0.0, 0.0, 1.0, -1.0, 1.0).unwrap();
        let s = core::f64::consts::FRAC_1_SQRT_2;
        let bell = projector([c(s, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(s, 0.0)]);
        assert!(rdm.max_deviation(&bell) < 1e-15);
        assert!((concurrence(&rdm).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(concurrence_xstate(&rdm).unwrap(), 1.0);
    }

    #[test]
    fn product_states_are_separable() {
        // |+> ⊗ |↓> and a complex-phase product
        let s = core::f64::consts::FRAC_1_SQRT_2;
        let p1 = projector([c(0.0, 0.0), c(s, 0.0), c(0.0, 0.0), c(s, 0.0)]);
        let (a, b) = ([c(0.6, 0.0), c(0.0, 0.8)], [c(s, 0.0), c(0.5, 0.5)]);
        let p2 = projector([a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1]]);
        for p in [p1, p2] {
            assert!(concurrence(&p).unwrap() < 1e-7);
        }
    }

    #[test]
    fn werner_half_mixture() {
        // p |Psi-><Psi-| + (1 - p) I / 4 at p = 1/2: C = (3p - 1) / 2 = 1/4
        let s = core::f64::consts::FRAC_1_SQRT_2;
        let singlet = projector([c(0.0, 0.0), c(s, 0.0), c(-s, 0.0), c(0.0, 0.0)]).rho;
        let rho = singlet * c(0.5, 0.0) + Matrix4::identity() * c(0.125, 0.0);
        let rdm = TwoSiteRDM::from_matrix(rho).unwrap();
        assert!((concurrence(&rdm).unwrap() - 0.25).abs() < 1e-12);
        assert!((concurrence_xstate(&rdm).unwrap() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn classical_mixture_has_no_concurrence() {
        let mut rho = Matrix4::zeros();
        rho[(0, 0)] = c(0.5, 0.0);
        rho[(3, 3)] = c(0.5, 0.0);
        assert_eq!(concurrence_xstate(&TwoSiteRDM { rho }).unwrap(), 0.0);
        assert_eq!(concurrence(&TwoSiteRDM { rho }).unwrap(), 0.0);
    }

    #[test]
    fn inconsistent_correlators_rejected() {
        assert!(matches!(two_site_rdm(1.0, 1.0, 0.5, 0.0, 1.0), Err(Error::Consistency(_))));
        assert!(matches!(two_site_rdm(0.0, 0.0, 1.0, 1.0, -0.5), Err(Error::Consistency(_))));
    }

    #[test]
    fn non_x_state_rejected_by_closed_form() {
        let s = 0.5;
        let plus_plus = projector([c(s, 0.0), c(s, 0.0), c(s, 0.0), c(s, 0.0)]);
        assert!(matches!(concurrence_xstate(&plus_plus), Err(Error::Domain(_))));
        assert!(concurrence(&plus_plus).unwrap() < 1e-7);
    }

    #[test]
    fn from_matrix_checks() {
        let mut rho = Matrix4::<C64>::identity() * c(0.25, 0.0);
        assert!(TwoSiteRDM::from_matrix(rho).is_ok());
        rho[(0, 1)] = c(0.1, 0.0);
        assert!(TwoSiteRDM::from_matrix(rho).is_err());
        let neg = Matrix4::from_diagonal(&nalgebra::Vector4::new(c(0.6, 0.0), c(0.6, 0.0), c(-0.1, 0.0), c(-0.1, 0.0)));
        assert!(TwoSiteRDM::from_matrix(neg).is_err());
        assert!(TwoSiteRDM::from_matrix(Matrix4::identity() * c(0.3, 0.0)).is_err());
    }

    prop_compose! {
        fn x_state()(w in prop::array::uniform4(0.0f64..1.0), u in -1.0f64..1.0, v in -1.0f64..1.0,
                     pf in 0.0f64..6.3, pz in 0.0f64..6.3) -> TwoSiteRDM {
            let total: f64 = w.iter().sum::<f64>() + 1e-12;
            let [a, b, cc, d] = w.map(|x| x / total + 0.0);
            let f = polar(u * libm::sqrt(a * d), pf);
            let z = polar(v * libm::sqrt(b * cc), pz);
            let r = |x: f64| C64::new(x, 0.0);
            let zero = r(0.0);
            #[rustfmt::skip]
            let rho = Matrix4::new(
                r(a), zero, zero, f,
                zero, r(b), z, zero,
                zero, z.conj(), r(cc), zero,
                f.conj(), zero, zero, r(d),
            );
            TwoSiteRDM { rho }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn closed_form_matches_general(rdm in x_state()) {
            let general = concurrence(&rdm).unwrap();
            let closed = concurrence_xstate(&rdm).unwrap();
            prop_assert!((0.0..=1.0).contains(&general));
            prop_assert!((general - closed).abs() < 1e-10, "general {} closed {}", general, closed);
        }

        #[test]
        fn invariant_under_local_z_rotations(rdm in x_state(), t1 in 0.0f64..6.3, t2 in 0.0f64..6.3) {
            let phase = |t: f64, up: bool| polar(1.0, if up { -t / 2.0 } else { t / 2.0 });
            let u = Matrix4::from_diagonal(&nalgebra::Vector4::new(
                phase(t1, true) * phase(t2, true),
                phase(t1, true) * phase(t2, false),
                phase(t1, false) * phase(t2, true),
                phase(t1, false) * phase(t2, false),
            ));
            let rotated = TwoSiteRDM { rho: u * rdm.rho * u.adjoint() };
            prop_assert!((concurrence(&rotated).unwrap() - concurrence(&rdm).unwrap()).abs() < 1e-10);
        }
    }
}
