//! Monomial automorphisms of rational function fields.
//!
//! A map sends each variable to a 9th root of unity times a Laurent
//! monomial: x_i ↦ η^(c_i) · ∏_j x_j^(E_ij). Coefficients live in Z/9 as
//! η-exponents, exponent matrices are integral and invertible. The module
//! provides composition and inversion, fixed-field certificates for
//! diagonal scaling groups (the lattice-index argument), and induced
//! actions on a monomial generating set of the fixed field.

use crate::latalg::{self, IntMatrix, ResMatrix};
use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MonomialError {
    DimensionMismatch,
    NotInvertible,
    NotDiagonal { index: usize },
    OrderOverflow { cap: usize },
    OutsideLattice { index: usize },
    WrongGeneratorCount { expected: usize, got: usize },
}

impl fmt::Display for MonomialError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MonomialError::DimensionMismatch => write!(f, "variable count mismatch"),
            MonomialError::NotInvertible => write!(f, "exponent matrix is not in GL_n(Z)"),
            MonomialError::NotDiagonal { index } => {
                write!(f, "map {index} is not a diagonal scaling")
            }
            MonomialError::OrderOverflow { cap } => write!(f, "order exceeds cap {cap}"),
            MonomialError::OutsideLattice { index } => {
                write!(f, "image of generator {index} lies outside the lattice")
            }
            MonomialError::WrongGeneratorCount { expected, got } => {
                write!(f, "expected {expected} generators, got {got}")
            }
        }
    }
}

impl std::error::Error for MonomialError {}

/// η-power times Laurent monomial: η^coeff · ∏ x_i^exps\[i\].
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct MonomialTerm {
    pub coeff: u8,
    pub exps: Vec<i64>,
}

impl MonomialTerm {
    pub fn new(coeff: i64, exps: Vec<i64>) -> Self {
        MonomialTerm {
            coeff: coeff.rem_euclid(9) as u8,
            exps,
        }
    }

    pub fn one(n: usize) -> Self {
        MonomialTerm {
            coeff: 0,
            exps: vec![0; n],
        }
    }

    pub fn var(n: usize, i: usize) -> Self {
        let mut exps = vec![0; n];
        exps[i] = 1;
        MonomialTerm { coeff: 0, exps }
    }

    pub fn mul(&self, other: &MonomialTerm) -> MonomialTerm {
        assert_eq!(self.exps.len(), other.exps.len());
        MonomialTerm {
            coeff: (self.coeff + other.coeff) % 9,
            exps: self
                .exps
                .iter()
                .zip(&other.exps)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn inv(&self) -> MonomialTerm {
        MonomialTerm {
            coeff: (9 - self.coeff) % 9,
            exps: self.exps.iter().map(|a| -a).collect(),
        }
    }

    pub fn div(&self, other: &MonomialTerm) -> MonomialTerm {
        self.mul(&other.inv())
    }

    pub fn pow(&self, k: i64) -> MonomialTerm {
        MonomialTerm {
            coeff: ((self.coeff as i64 * k).rem_euclid(9)) as u8,
            exps: self.exps.iter().map(|a| a * k).collect(),
        }
    }

    pub fn is_one(&self) -> bool {
        self.coeff == 0 && self.exps.iter().all(|&e| e == 0)
    }
}

/// Field automorphism sending x_i ↦ η^(coeff\[i\]) · ∏_j x_j^(exps\[i\]\[j\]).
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct MonomialMap {
    pub n: usize,
    pub exps: Vec<Vec<i64>>,
    pub coeff: Vec<u8>,
}

impl MonomialMap {
    pub fn identity(n: usize) -> Self {
        MonomialMap {
            n,
            exps: (0..n)
                .map(|i| (0..n).map(|j| i64::from(i == j)).collect())
                .collect(),
            coeff: vec![0; n],
        }
    }

    pub fn from_images(images: Vec<MonomialTerm>) -> Self {
        let n = images.len();
        assert!(images.iter().all(|t| t.exps.len() == n));
        MonomialMap {
            n,
            exps: images.iter().map(|t| t.exps.clone()).collect(),
            coeff: images.iter().map(|t| t.coeff).collect(),
        }
    }

    /// Diagonal scaling x_i ↦ η^(c_i) x_i.
    pub fn diagonal(scalings: &[i64]) -> Self {
        let n = scalings.len();
        let mut m = Self::identity(n);
        for (i, &c) in scalings.iter().enumerate() {
            m.coeff[i] = c.rem_euclid(9) as u8;
        }
        m
    }

    pub fn image(&self, i: usize) -> MonomialTerm {
        MonomialTerm {
            coeff: self.coeff[i],
            exps: self.exps[i].clone(),
        }
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::identity(self.n)
    }

    pub fn is_diagonal(&self) -> bool {
        self.exps == Self::identity(self.n).exps
    }

    /// Image of a term under the map.
    pub fn apply(&self, t: &MonomialTerm) -> MonomialTerm {
        assert_eq!(t.exps.len(), self.n, "term/map variable count mismatch");
        let mut exps = vec![0i64; self.n];
        let mut coeff = t.coeff as i64;
        for (i, &e) in t.exps.iter().enumerate() {
            if e == 0 {
                continue;
            }
            coeff += e * self.coeff[i] as i64;
            for (x, &m) in exps.iter_mut().zip(&self.exps[i]) {
                *x += e * m;
            }
        }
        MonomialTerm {
            coeff: coeff.rem_euclid(9) as u8,
            exps,
        }
    }

    /// Composition (f ∘ g)(x) = f(g(x)).
    pub fn compose(f: &MonomialMap, g: &MonomialMap) -> MonomialMap {
        assert_eq!(f.n, g.n, "composition variable count mismatch");
        let images = (0..g.n).map(|i| f.apply(&g.image(i))).collect();
        MonomialMap::from_images(images)
    }

    pub fn inverse(&self) -> Result<MonomialMap, MonomialError> {
        let e = IntMatrix::from_rows(
            &self
                .exps
                .iter()
                .map(|r| r.iter().map(|&x| BigInt::from(x)).collect::<Vec<_>>())
                .collect::<Vec<_>>(),
        );
        let d = latalg::det(&e).map_err(|_| MonomialError::NotInvertible)?;
        if d.abs() != BigInt::from(1) {
            return Err(MonomialError::NotInvertible);
        }
        // rows of E^{-1} via lattice solves against unit vectors
        let mut inv_rows = Vec::with_capacity(self.n);
        for i in 0..self.n {
            let mut unit = vec![BigInt::zero(); self.n];
            unit[i] = BigInt::from(1);
            let x = latalg::solve_lattice(&e, &unit)
                .map_err(|_| MonomialError::NotInvertible)?
                .ok_or(MonomialError::NotInvertible)?;
            inv_rows.push(
                x.iter()
                    .map(|b| i64::try_from(b).expect("inverse entry fits i64"))
                    .collect::<Vec<i64>>(),
            );
        }
        // coefficients: c' = -E^{-1} c
        let coeff = inv_rows
            .iter()
            .map(|row| {
                let s: i64 = row
                    .iter()
                    .zip(&self.coeff)
                    .map(|(&a, &c)| a * c as i64)
                    .sum();
                (-s).rem_euclid(9) as u8
            })
            .collect();
        Ok(MonomialMap {
            n: self.n,
            exps: inv_rows,
            coeff,
        })
    }

    /// Multiplicative order, or an error if it exceeds `cap`.
    pub fn order(&self, cap: usize) -> Result<usize, MonomialError> {
        let mut p = self.clone();
        for k in 1..=cap {
            if p.is_identity() {
                return Ok(k);
            }
            p = MonomialMap::compose(&p, self);
        }
        Err(MonomialError::OrderOverflow { cap })
    }

    pub fn pow(&self, k: usize) -> MonomialMap {
        let mut p = MonomialMap::identity(self.n);
        for _ in 0..k {
            p = MonomialMap::compose(&p, self);
        }
        p
    }

    /// Commutator f⁻¹g⁻¹fg of two maps.
    pub fn commutator(f: &MonomialMap, g: &MonomialMap) -> MonomialMap {
        let fi = f.inverse().expect("commutator of non-invertible map");
        let gi = g.inverse().expect("commutator of non-invertible map");
        MonomialMap::compose(&MonomialMap::compose(&fi, &gi), &MonomialMap::compose(f, g))
    }

    /// Restriction to a subset of variables. Errors unless every image of a
    /// kept variable only involves kept variables.
    pub fn restrict(&self, keep: &[usize]) -> Result<MonomialMap, MonomialError> {
        for &i in keep {
            for (j, &e) in self.exps[i].iter().enumerate() {
                if e != 0 && !keep.contains(&j) {
                    return Err(MonomialError::OutsideLattice { index: i });
                }
            }
        }
        let exps = keep
            .iter()
            .map(|&i| keep.iter().map(|&j| self.exps[i][j]).collect())
            .collect();
        let coeff = keep.iter().map(|&i| self.coeff[i]).collect();
        Ok(MonomialMap {
            n: keep.len(),
            exps,
            coeff,
        })
    }
}

/// Closure of a set of monomial maps under composition; errors past `cap`.
pub fn map_closure(gens: &[MonomialMap], cap: usize) -> Result<Vec<MonomialMap>, MonomialError> {
    let n = gens.first().map(|g| g.n).unwrap_or(0);
    if gens.iter().any(|g| g.n != n) {
        return Err(MonomialError::DimensionMismatch);
    }
    let mut elems = vec![MonomialMap::identity(n)];
    let mut frontier = vec![0usize];
    while let Some(i) = frontier.pop() {
        for g in gens {
            let prod = MonomialMap::compose(&elems[i], g);
            if !elems.contains(&prod) {
                if elems.len() >= cap {
                    return Err(MonomialError::OrderOverflow { cap });
                }
                elems.push(prod);
                frontier.push(elems.len() - 1);
            }
        }
    }
    Ok(elems)
}

/// Outcome of a fixed-field certificate check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CertificateOutcome {
    /// Certificate holds; records det of the exponent matrix, whose absolute
    /// value equals the order of the scaling character group.
    Holds { det: BigInt, scaling_order: u64 },
    InvarianceFailure { map: usize, generator: usize },
    IndexMismatch { det: BigInt, scaling_order: u64 },
}

impl CertificateOutcome {
    pub fn holds(&self) -> bool {
        matches!(self, CertificateOutcome::Holds { .. })
    }
}

/// Certificate that the monomials `z` generate the fixed field of the
/// diagonal scaling group generated by `d`.
///
/// The check is (a) every z is invariant under every map of `d`, and
/// (b) |det(exponent matrix of z)| equals the order of the group of scaling
/// character vectors. Invariance puts the z-lattice inside the invariant
/// lattice, whose index is the order of the character group, and (b) says
/// the z-lattice already has that index, so the two lattices agree and
/// k(x..)^D = k(z..).
pub fn fixed_field_certificate(
    d: &[MonomialMap],
    z: &[MonomialTerm],
) -> Result<CertificateOutcome, MonomialError> {
    let n = d.first().map(|m| m.n).unwrap_or(z.len());
    for (i, m) in d.iter().enumerate() {
        if m.n != n {
            return Err(MonomialError::DimensionMismatch);
        }
        if !m.is_diagonal() {
            return Err(MonomialError::NotDiagonal { index: i });
        }
    }
    if z.len() != n {
        return Err(MonomialError::WrongGeneratorCount {
            expected: n,
            got: z.len(),
        });
    }
    for (zi, term) in z.iter().enumerate() {
        if term.exps.len() != n {
            return Err(MonomialError::DimensionMismatch);
        }
        for (di, m) in d.iter().enumerate() {
            if m.apply(term) != *term {
                return Ok(CertificateOutcome::InvarianceFailure {
                    map: di,
                    generator: zi,
                });
            }
        }
    }
    // order of the character image: span of the coefficient vectors over Z/9
    let rows: Vec<Vec<u64>> = d
        .iter()
        .map(|m| m.coeff.iter().map(|&c| c as u64).collect())
        .collect();
    let scaling_order = if rows.is_empty() {
        1
    } else {
        latalg::span_order(&ResMatrix::from_rows(&rows, 9).expect("9 = 3^2"))
    };
    let emat = IntMatrix::from_rows(
        &z.iter()
            .map(|t| t.exps.iter().map(|&x| BigInt::from(x)).collect::<Vec<_>>())
            .collect::<Vec<_>>(),
    );
    let det = latalg::det(&emat).expect("square by construction");
    if det.abs() == BigInt::from(scaling_order) {
        Ok(CertificateOutcome::Holds { det, scaling_order })
    } else {
        Ok(CertificateOutcome::IndexMismatch { det, scaling_order })
    }
}

/// Express the action of `f` on the multiplicative lattice spanned by the
/// terms `z` in z-coordinates. Errors if some image falls outside the
/// lattice (which signals a wrong generating set).
pub fn induced_action(f: &MonomialMap, z: &[MonomialTerm]) -> Result<MonomialMap, MonomialError> {
    let emat = IntMatrix::from_rows(
        &z.iter()
            .map(|t| t.exps.iter().map(|&x| BigInt::from(x)).collect::<Vec<_>>())
            .collect::<Vec<_>>(),
    );
    let mut images = Vec::with_capacity(z.len());
    for (i, term) in z.iter().enumerate() {
        let img = f.apply(term);
        let v: Vec<BigInt> = img.exps.iter().map(|&x| BigInt::from(x)).collect();
        let x = latalg::solve_lattice(&emat, &v)
            .map_err(|_| MonomialError::OutsideLattice { index: i })?
            .ok_or(MonomialError::OutsideLattice { index: i })?;
        let xi: Vec<i64> = x
            .iter()
            .map(|b| i64::try_from(b).expect("coordinate fits i64"))
            .collect();
        // transport the coefficient through the z-coefficients
        let carried: i64 = xi.iter().zip(z).map(|(&a, t)| a * t.coeff as i64).sum();
        let coeff = (img.coeff as i64 - carried).rem_euclid(9);
        images.push(MonomialTerm::new(coeff, xi));
    }
    Ok(MonomialMap::from_images(images))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_map() -> MonomialMap {
        MonomialMap::from_images(vec![
            MonomialTerm::new(0, vec![0, 1]),
            MonomialTerm::new(1, vec![1, 0]),
        ])
    }

    #[test]
    fn compose_with_identity() {
        let f = sample_map();
        let id = MonomialMap::identity(2);
        assert_eq!(MonomialMap::compose(&f, &id), f);
        assert_eq!(MonomialMap::compose(&id, &f), f);
    }

    #[test]
    fn inverse_roundtrip() {
        let f = sample_map();
        let fi = f.inverse().unwrap();
        assert!(MonomialMap::compose(&f, &fi).is_identity());
        assert!(MonomialMap::compose(&fi, &f).is_identity());
    }

    #[test]
    fn apply_matches_composition() {
        let f = sample_map();
        let g = MonomialMap::from_images(vec![
            MonomialTerm::new(3, vec![1, 1]),
            MonomialTerm::new(0, vec![0, -1]),
        ]);
        let fg = MonomialMap::compose(&f, &g);
        for i in 0..2 {
            assert_eq!(fg.image(i), f.apply(&g.image(i)));
        }
    }

    #[test]
    fn compose_is_associative() {
        let f = sample_map();
        let g = MonomialMap::from_images(vec![
            MonomialTerm::new(3, vec![1, 1]),
            MonomialTerm::new(0, vec![0, -1]),
        ]);
        let h = MonomialMap::diagonal(&[2, 5]);
        let lhs = MonomialMap::compose(&MonomialMap::compose(&f, &g), &h);
        let rhs = MonomialMap::compose(&f, &MonomialMap::compose(&g, &h));
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn certificate_identity_group() {
        let z = vec![MonomialTerm::var(2, 0), MonomialTerm::var(2, 1)];
        let out = fixed_field_certificate(&[MonomialMap::identity(2)], &z).unwrap();
        match out {
            CertificateOutcome::Holds { det, scaling_order } => {
                assert_eq!(det.abs(), BigInt::from(1));
                assert_eq!(scaling_order, 1);
            }
            other => panic!("unexpected outcome {other:?}"),
        }
    }

    #[test]
    fn certificate_order_three_scaling() {
        // d: x ↦ ζ x, y ↦ ζ² y; z1 = x³ and z2 = x y are invariant, det 3
        let d = MonomialMap::diagonal(&[3, 6]);
        let z = vec![
            MonomialTerm::new(0, vec![3, 0]),
            MonomialTerm::new(0, vec![1, 1]),
        ];
        let out = fixed_field_certificate(&[d], &z).unwrap();
        match out {
            CertificateOutcome::Holds { det, scaling_order } => {
                assert_eq!(det.abs(), BigInt::from(3));
                assert_eq!(scaling_order, 3);
            }
            other => panic!("unexpected outcome {other:?}"),
        }
    }

    #[test]
    fn certificate_detects_shrunk_lattice() {
        // z1 = x⁹, z2 = x y: index 9 exceeds |D| = 3
        let d = MonomialMap::diagonal(&[3, 6]);
        let z = vec![
            MonomialTerm::new(0, vec![9, 0]),
            MonomialTerm::new(0, vec![1, 1]),
        ];
        let out = fixed_field_certificate(&[d], &z).unwrap();
        assert!(matches!(out, CertificateOutcome::IndexMismatch { .. }));
    }

    #[test]
    fn certificate_rejects_nondiagonal() {
        let z = vec![MonomialTerm::var(2, 0), MonomialTerm::var(2, 1)];
        assert_eq!(
            fixed_field_certificate(&[sample_map()], &z),
            Err(MonomialError::NotDiagonal { index: 0 })
        );
    }

    #[test]
    fn induced_action_identity() {
        let z = vec![
            MonomialTerm::new(0, vec![3, 0]),
            MonomialTerm::new(0, vec![1, 1]),
        ];
        let id = MonomialMap::identity(2);
        assert!(induced_action(&id, &z).unwrap().is_identity());
    }

    #[test]
    fn induced_action_outside_lattice() {
        // x ↦ y, y ↦ x does not stabilize the lattice of x³, x y²
        let f = MonomialMap::from_images(vec![
            MonomialTerm::new(0, vec![0, 1]),
            MonomialTerm::new(0, vec![1, 0]),
        ]);
        let z = vec![
            MonomialTerm::new(0, vec![3, 0]),
            MonomialTerm::new(0, vec![1, 2]),
        ];
        assert!(matches!(
            induced_action(&f, &z),
            Err(MonomialError::OutsideLattice { .. })
        ));
    }
}
