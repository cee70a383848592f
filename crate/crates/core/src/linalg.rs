//! Small complex linear-algebra helpers shared by the beamformer updates.
//!
//! Every projection in this crate is against a single vector, so the null
//! spaces and principal singular directions reduce to Gram-Schmidt and a
//! normalization instead of full SVDs.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

pub type C64 = Complex64;
pub type CVec = DVector<C64>;
pub type CMat = DMatrix<C64>;

/// `a^H b`.
pub fn inner(a: &CVec, b: &CVec) -> C64 {
    a.dotc(b)
}

pub fn norm_sq(a: &CVec) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}

/// Circularly-symmetric complex Gaussian sample with total variance `var`.
pub fn cn_sample<R: Rng + ?Sized>(rng: &mut R, var: f64) -> C64 {
    let s = (var / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(s * re, s * im)
}

pub fn cn_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize, var: f64) -> CMat {
    // column-major fill keeps the draw order fixed for a given seed
    let mut m = CMat::zeros(rows, cols);
    for c in 0..cols {
        for r in 0..rows {
            m[(r, c)] = cn_sample(rng, var);
        }
    }
    m
}

pub fn cn_vector<R: Rng + ?Sized>(rng: &mut R, len: usize, var: f64) -> CVec {
    CVec::from_fn(len, |_, _| cn_sample(rng, var))
}

/// Random vector on the complex unit sphere.
pub fn random_unit<R: Rng + ?Sized>(rng: &mut R, len: usize) -> CVec {
    loop {
        let v = cn_vector(rng, len, 1.0);
        let n = v.norm();
        if n > 1e-12 {
            return v / C64::from(n);
        }
    }
}

pub fn ones_normalized(len: usize) -> CVec {
    CVec::from_element(len, C64::from((1.0 / len as f64).sqrt()))
}

/// Orthonormal basis (as columns) of `{x : a^H x = 0}`.
///
/// A numerically zero `a` yields the identity. Returns `None` when the
/// complement is empty (length-one nonzero `a`).
pub fn orthogonal_complement(a: &CVec) -> Option<CMat> {
    let n = a.len();
    let a_norm = a.norm();
    if a_norm <= 1e-300 || !a_norm.is_finite() {
        return Some(CMat::identity(n, n));
    }
    if n < 2 {
        return None;
    }
    let mut basis: Vec<CVec> = vec![a / C64::from(a_norm)];
    let mut used = vec![false; n];
    while basis.len() < n {
        // pivot on the canonical vector with the largest residual
        let mut best: Option<(usize, CVec, f64)> = None;
        for (k, taken) in used.iter().enumerate() {
            if *taken {
                continue;
            }
            let mut r = CVec::zeros(n);
            r[k] = C64::from(1.0);
            for _ in 0..2 {
                for b in &basis {
                    let c = inner(b, &r);
                    r -= b * c;
                }
            }
            let rn = r.norm();
            if best.as_ref().is_none_or(|(_, _, bn)| rn > *bn) {
                best = Some((k, r, rn));
            }
        }
        let (k, r, rn) = best.expect("candidate available while basis incomplete");
        used[k] = true;
        basis.push(r / C64::from(rn));
    }
    Some(CMat::from_columns(&basis[1..]))
}

/// Unit vector `c` maximizing `|b^H Z c|`, i.e. the principal right singular
/// direction of the row `b^H Z`, together with the attained gain `|b^H Z c|`.
pub fn principal_direction(z: &CMat, b: &CVec) -> Option<(CVec, f64)> {
    let row_h = z.adjoint() * b;
    let gain = row_h.norm();
    if gain <= 1e-300 || !gain.is_finite() {
        return None;
    }
    Some((row_h / C64::from(gain), gain))
}

/// Projection of `x` onto the orthogonal complement of `a`.
pub fn project_out(x: &CVec, a: &CVec) -> CVec {
    let an = norm_sq(a);
    if an <= 1e-300 {
        return x.clone();
    }
    let c = inner(a, x) / an;
    x - a * c
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn complement_is_orthonormal_and_orthogonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 2..6 {
            let a = cn_vector(&mut rng, n, 1.0);
            let z = orthogonal_complement(&a).unwrap();
            assert_eq!(z.ncols(), n - 1);
            let gram = z.adjoint() * &z;
            assert!((gram - CMat::identity(n - 1, n - 1)).norm() < 1e-12);
            assert!((z.adjoint() * &a).norm() < 1e-12 * a.norm());
        }
    }

    #[test]
    fn complement_of_zero_is_whole_space() {
        let z = orthogonal_complement(&CVec::zeros(3)).unwrap();
        assert_eq!(z.ncols(), 3);
        assert!(orthogonal_complement(&CVec::from_element(1, C64::new(1.0, 0.0))).is_none());
    }

    #[test]
    fn principal_direction_attains_row_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = cn_vector(&mut rng, 4, 1.0);
        let b = cn_vector(&mut rng, 4, 1.0);
        let z = orthogonal_complement(&a).unwrap();
        let (c, gain) = principal_direction(&z, &b).unwrap();
        let attained = inner(&b, &(&z * &c)).norm();
        assert!((attained - gain).abs() < 1e-12);
        for _ in 0..200 {
            let c2 = random_unit(&mut rng, 3);
            assert!(inner(&b, &(&z * &c2)).norm() <= gain + 1e-12);
        }
    }
}
