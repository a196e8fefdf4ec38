//! Exact arithmetic in the degree-6 cyclotomic field Q(η) where η is a
//! primitive 9th root of unity (so ζ = η³ is a primitive cube root), plus
//! matrices over it and finite matrix-group closure.
//!
//! Elements are stored on the power basis 1, η, ..., η⁵ of Q[x]/(x⁶+x³+1);
//! the identities η⁹ = 1, η⁶ = −η³ − 1 and 1 + ζ + ζ² = 0 hold by
//! construction.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CycError {
    DivisionByZero,
    NotInvertible,
    DimensionMismatch,
    ClosureOverflow { cap: usize },
}

impl fmt::Display for CycError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CycError::DivisionByZero => write!(f, "division by zero"),
            CycError::NotInvertible => write!(f, "matrix is not invertible"),
            CycError::DimensionMismatch => write!(f, "dimension mismatch"),
            CycError::ClosureOverflow { cap } => {
                write!(f, "group closure exceeded cap {cap}")
            }
        }
    }
}

impl std::error::Error for CycError {}

/// Element of Q(η) = Q[x]/(x⁶+x³+1) as six rational coordinates.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct CycNum {
    c: [BigRational; 6],
}

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

impl CycNum {
    pub fn zero() -> Self {
        CycNum {
            c: std::array::from_fn(|_| BigRational::zero()),
        }
    }

    pub fn one() -> Self {
        Self::from_int(1)
    }

    pub fn from_int(n: i64) -> Self {
        let mut z = Self::zero();
        z.c[0] = rat(n, 1);
        z
    }

    pub fn from_rational(q: BigRational) -> Self {
        let mut z = Self::zero();
        z.c[0] = q;
        z
    }

    /// η^k for any integer k (reduced mod 9).
    pub fn eta_pow(k: i64) -> Self {
        let k = k.rem_euclid(9) as usize;
        let mut z = Self::zero();
        if k < 6 {
            z.c[k] = BigRational::one();
        } else {
            // η⁶ = −1 − η³, multiplied by η^(k−6)
            z.c[k - 6] = -BigRational::one();
            z.c[k - 3] = -BigRational::one();
        }
        z
    }

    pub fn eta() -> Self {
        Self::eta_pow(1)
    }

    /// ζ = η³, a primitive cube root of unity.
    pub fn zeta_pow(k: i64) -> Self {
        Self::eta_pow(3 * k)
    }

    pub fn coord(&self, i: usize) -> &BigRational {
        &self.c[i]
    }

    pub fn is_zero(&self) -> bool {
        self.c.iter().all(|x| x.is_zero())
    }

    pub fn is_one(&self) -> bool {
        self.c[0].is_one() && self.c[1..].iter().all(|x| x.is_zero())
    }

    /// Exact inverse; errors on zero.
    pub fn inv(&self) -> Result<CycNum, CycError> {
        if self.is_zero() {
            return Err(CycError::DivisionByZero);
        }
        // solve (multiplication-by-self matrix) * v = e0 over Q
        let mut m: Vec<Vec<BigRational>> = vec![vec![BigRational::zero(); 6]; 6];
        for j in 0..6 {
            let col = self.clone() * CycNum::eta_pow(j as i64);
            for (i, row) in m.iter_mut().enumerate() {
                row[j] = col.c[i].clone();
            }
        }
        let mut rhs = vec![BigRational::zero(); 6];
        rhs[0] = BigRational::one();
        let sol = solve_rational(&mut m, &mut rhs).ok_or(CycError::DivisionByZero)?;
        let mut out = CycNum::zero();
        for (i, v) in sol.into_iter().enumerate() {
            out.c[i] = v;
        }
        Ok(out)
    }

    /// If this is a 9th root of unity η^j, return j.
    pub fn root_log(&self) -> Option<u8> {
        (0..9).find(|&j| *self == CycNum::eta_pow(j as i64))
    }

    /// Canonical text form, also used as a dedup key for group closure.
    pub fn canonical_string(&self) -> String {
        let parts: Vec<String> = self.c.iter().map(|q| q.to_string()).collect();
        parts.join(",")
    }
}

/// Gaussian elimination over Q; consumes its inputs. Returns None if singular.
fn solve_rational(
    m: &mut [Vec<BigRational>],
    rhs: &mut [BigRational],
) -> Option<Vec<BigRational>> {
    let n = m.len();
    for k in 0..n {
        let pivot = (k..n).find(|&r| !m[r][k].is_zero())?;
        m.swap(k, pivot);
        rhs.swap(k, pivot);
        let p = m[k][k].clone();
        for r in 0..n {
            if r == k || m[r][k].is_zero() {
                continue;
            }
            let f = &m[r][k] / &p;
            for c in k..n {
                let s = &f * &m[k][c];
                m[r][c] -= s;
            }
            let s = &f * &rhs[k];
            rhs[r] -= s;
        }
    }
    Some((0..n).map(|i| &rhs[i] / &m[i][i]).collect())
}

impl fmt::Display for CycNum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (i, q) in self.c.iter().enumerate() {
            if q.is_zero() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match i {
                0 => write!(f, "{}", q)?,
                1 => write!(f, "{}*e", q)?,
                _ => write!(f, "{}*e^{}", q, i)?,
            }
        }
        Ok(())
    }
}

impl fmt::Debug for CycNum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl Add for CycNum {
    type Output = CycNum;
    fn add(mut self, rhs: CycNum) -> CycNum {
        for i in 0..6 {
            self.c[i] += rhs.c[i].clone();
        }
        self
    }
}

impl Sub for CycNum {
    type Output = CycNum;
    fn sub(mut self, rhs: CycNum) -> CycNum {
        for i in 0..6 {
            self.c[i] -= rhs.c[i].clone();
        }
        self
    }
}

impl Neg for CycNum {
    type Output = CycNum;
    fn neg(mut self) -> CycNum {
        for i in 0..6 {
            self.c[i] = -self.c[i].clone();
        }
        self
    }
}

impl Mul for CycNum {
    type Output = CycNum;
    fn mul(self, rhs: CycNum) -> CycNum {
        // convolution of degree <= 5 polynomials, then fold x^6 = -x^3 - 1
        let mut conv = vec![BigRational::zero(); 11];
        for i in 0..6 {
            if self.c[i].is_zero() {
                continue;
            }
            for j in 0..6 {
                if rhs.c[j].is_zero() {
                    continue;
                }
                let p = &self.c[i] * &rhs.c[j];
                conv[i + j] += p;
            }
        }
        for k in (6..11).rev() {
            if conv[k].is_zero() {
                continue;
            }
            let v = conv[k].clone();
            conv[k - 3] -= v.clone();
            conv[k - 6] -= v;
            conv[k] = BigRational::zero();
        }
        let mut out = CycNum::zero();
        for i in 0..6 {
            out.c[i] = conv[i].clone();
        }
        out
    }
}

impl Div for CycNum {
    type Output = CycNum;
    fn div(self, rhs: CycNum) -> CycNum {
        self * rhs.inv().expect("division by zero in Q(eta)")
    }
}

/// Square matrix over Q(η).
#[derive(Clone, PartialEq, Eq)]
pub struct CycMatrix {
    n: usize,
    data: Vec<CycNum>,
}

impl fmt::Debug for CycMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CycMatrix {}x{} [", self.n, self.n)?;
        for r in 0..self.n {
            let row: Vec<String> = (0..self.n).map(|c| format!("{}", self[(r, c)])).collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        write!(f, "]")
    }
}

impl std::ops::Index<(usize, usize)> for CycMatrix {
    type Output = CycNum;
    fn index(&self, (r, c): (usize, usize)) -> &CycNum {
        &self.data[r * self.n + c]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CycMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut CycNum {
        &mut self.data[r * self.n + c]
    }
}

impl CycMatrix {
    pub fn zero(n: usize) -> Self {
        assert!(n > 0, "dimension must be positive");
        CycMatrix {
            n,
            data: vec![CycNum::zero(); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zero(n);
        for i in 0..n {
            m[(i, i)] = CycNum::one();
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Scale every entry.
    pub fn scale(&self, s: &CycNum) -> CycMatrix {
        let mut out = self.clone();
        for x in out.data.iter_mut() {
            *x = x.clone() * s.clone();
        }
        out
    }

    pub fn mul(&self, other: &CycMatrix) -> CycMatrix {
        assert_eq!(self.n, other.n, "matrix product dimension mismatch");
        let mut out = CycMatrix::zero(self.n);
        for r in 0..self.n {
            for k in 0..self.n {
                if self[(r, k)].is_zero() {
                    continue;
                }
                for c in 0..self.n {
                    if other[(k, c)].is_zero() {
                        continue;
                    }
                    let p = self[(r, k)].clone() * other[(k, c)].clone();
                    out[(r, c)] = out[(r, c)].clone() + p;
                }
            }
        }
        out
    }

    pub fn pow(&self, e: u32) -> CycMatrix {
        let mut out = CycMatrix::identity(self.n);
        for _ in 0..e {
            out = out.mul(self);
        }
        out
    }

    /// Inverse by Gauss-Jordan over Q(η).
    pub fn inverse(&self) -> Result<CycMatrix, CycError> {
        let n = self.n;
        let mut a = self.clone();
        let mut inv = CycMatrix::identity(n);
        for k in 0..n {
            let pivot = (k..n)
                .find(|&r| !a[(r, k)].is_zero())
                .ok_or(CycError::NotInvertible)?;
            for c in 0..n {
                a.data.swap(k * n + c, pivot * n + c);
                inv.data.swap(k * n + c, pivot * n + c);
            }
            let pinv = a[(k, k)].inv().map_err(|_| CycError::NotInvertible)?;
            for c in 0..n {
                a[(k, c)] = a[(k, c)].clone() * pinv.clone();
                inv[(k, c)] = inv[(k, c)].clone() * pinv.clone();
            }
            for r in 0..n {
                if r == k || a[(r, k)].is_zero() {
                    continue;
                }
                let f = a[(r, k)].clone();
                for c in 0..n {
                    let s = f.clone() * a[(k, c)].clone();
                    a[(r, c)] = a[(r, c)].clone() - s;
                    let s = f.clone() * inv[(k, c)].clone();
                    inv[(r, c)] = inv[(r, c)].clone() - s;
                }
            }
        }
        Ok(inv)
    }

    pub fn is_identity(&self) -> bool {
        *self == CycMatrix::identity(self.n)
    }

    /// Build a matrix from blocks along the diagonal.
    pub fn block_diag(blocks: &[CycMatrix]) -> CycMatrix {
        let n: usize = blocks.iter().map(|b| b.n).sum();
        let mut m = CycMatrix::zero(n);
        let mut off = 0;
        for b in blocks {
            for r in 0..b.n {
                for c in 0..b.n {
                    m[(off + r, off + c)] = b[(r, c)].clone();
                }
            }
            off += b.n;
        }
        m
    }

    /// Build an n·k x n·k matrix from a k x k grid of n x n blocks
    /// (entries of `grid` may be None for zero blocks).
    pub fn from_blocks(grid: &[Vec<Option<CycMatrix>>]) -> CycMatrix {
        let k = grid.len();
        let n = grid
            .iter()
            .flatten()
            .flatten()
            .map(|b| b.n)
            .next()
            .expect("at least one nonzero block");
        let mut m = CycMatrix::zero(n * k);
        for (br, row) in grid.iter().enumerate() {
            assert_eq!(row.len(), k, "block grid must be square");
            for (bc, blk) in row.iter().enumerate() {
                if let Some(b) = blk {
                    assert_eq!(b.n, n);
                    for r in 0..n {
                        for c in 0..n {
                            m[(br * n + r, bc * n + c)] = b[(r, c)].clone();
                        }
                    }
                }
            }
        }
        m
    }

    pub fn canonical_key(&self) -> String {
        let parts: Vec<String> = self.data.iter().map(|x| x.canonical_string()).collect();
        parts.join(";")
    }

    /// Multiplicative order, or None if it exceeds `cap`.
    pub fn order(&self, cap: usize) -> Option<usize> {
        let mut p = self.clone();
        for k in 1..=cap {
            if p.is_identity() {
                return Some(k);
            }
            p = p.mul(self);
        }
        None
    }
}

/// Finite multiplicative closure of a generator list, with a generator word
/// for every element.
pub struct MatrixGroup {
    pub dim: usize,
    pub elements: Vec<CycMatrix>,
    /// index of each element under its canonical serialization
    pub index: HashMap<String, usize>,
    /// elements[i] = product of generators (left to right) named by words[i]
    pub words: Vec<Vec<usize>>,
}

impl MatrixGroup {
    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn position(&self, m: &CycMatrix) -> Option<usize> {
        self.index.get(&m.canonical_key()).copied()
    }
}

/// Full multiplicative closure of the generators, up to `cap` elements.
/// Exceeding the cap is an error: for the representations checked here it
/// signals a wrong matrix.
pub fn closure(gens: &[CycMatrix], cap: usize) -> Result<MatrixGroup, CycError> {
    let dim = gens.first().map(|g| g.dim()).unwrap_or(1);
    if gens.iter().any(|g| g.dim() != dim) {
        return Err(CycError::DimensionMismatch);
    }
    for g in gens {
        g.inverse().map_err(|_| CycError::NotInvertible)?;
    }
    let mut group = MatrixGroup {
        dim,
        elements: Vec::new(),
        index: HashMap::new(),
        words: Vec::new(),
    };
    let id = CycMatrix::identity(dim);
    group.index.insert(id.canonical_key(), 0);
    group.elements.push(id);
    group.words.push(Vec::new());
    let mut frontier = vec![0usize];
    while let Some(i) = frontier.pop() {
        for (gi, g) in gens.iter().enumerate() {
            let prod = group.elements[i].mul(g);
            let key = prod.canonical_key();
            if !group.index.contains_key(&key) {
                if group.elements.len() >= cap {
                    return Err(CycError::ClosureOverflow { cap });
                }
                let mut w = group.words[i].clone();
                w.push(gi);
                group.index.insert(key, group.elements.len());
                group.elements.push(prod);
                group.words.push(w);
                frontier.push(group.elements.len() - 1);
            }
        }
    }
    Ok(group)
}

/// Matrix commutator g⁻¹h⁻¹gh.
pub fn mat_commutator(g: &CycMatrix, h: &CycMatrix) -> CycMatrix {
    let gi = g.inverse().expect("commutator of singular matrix");
    let hi = h.inverse().expect("commutator of singular matrix");
    gi.mul(&hi).mul(g).mul(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn eta_has_order_nine() {
        let e = CycNum::eta();
        let mut p = CycNum::one();
        for k in 1..=9 {
            p = p * e.clone();
            assert_eq!(p.is_one(), k == 9, "eta^{k}");
        }
    }

    #[test]
    fn eta_times_eta8_is_one() {
        assert!((CycNum::eta() * CycNum::eta_pow(8)).is_one());
    }

    #[test]
    fn cube_roots_sum_to_zero() {
        let s = CycNum::one() + CycNum::zeta_pow(1) + CycNum::zeta_pow(2);
        assert!(s.is_zero());
    }

    #[test]
    fn inverse_of_eta() {
        let inv = CycNum::eta().inv().unwrap();
        assert_eq!(inv, CycNum::eta_pow(8));
        assert!((CycNum::eta() * inv).is_one());
    }

    #[test]
    fn inversion_of_zero_rejected() {
        assert_eq!(CycNum::zero().inv(), Err(CycError::DivisionByZero));
    }

    #[test]
    fn root_log_values() {
        assert_eq!(CycNum::zeta_pow(2).root_log(), Some(6));
        assert_eq!(CycNum::one().root_log(), Some(0));
        assert_eq!(CycNum::from_int(2).root_log(), None);
    }

    fn random_cyc(rng: &mut impl Rng) -> CycNum {
        let mut z = CycNum::zero();
        for i in 0..6 {
            z.c[i] = rat(rng.gen_range(-9..=9), 1);
        }
        z
    }

    #[test]
    fn field_axioms_randomized() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(crate::seed_from_env());
        for _ in 0..1000 {
            let a = random_cyc(&mut rng);
            let b = random_cyc(&mut rng);
            let c = random_cyc(&mut rng);
            let lhs = (a.clone() + b.clone()) * c.clone();
            let rhs = a.clone() * c.clone() + b.clone() * c.clone();
            assert_eq!(lhs, rhs);
            let lhs = (a.clone() * b.clone()) * c.clone();
            let rhs = a.clone() * (b.clone() * c.clone());
            assert_eq!(lhs, rhs);
            if !a.is_zero() {
                assert!((a.clone() * a.inv().unwrap()).is_one());
            }
        }
    }

    fn c3() -> CycMatrix {
        let mut m = CycMatrix::zero(3);
        m[(0, 2)] = CycNum::one();
        m[(1, 0)] = CycNum::one();
        m[(2, 1)] = CycNum::one();
        m
    }

    #[test]
    fn closure_identity_only() {
        let g = closure(&[CycMatrix::identity(3)], 10).unwrap();
        assert_eq!(g.order(), 1);
    }

    #[test]
    fn closure_of_c3_has_order_three() {
        // cube the permutation matrix by hand: c3^3 = I
        let c = c3();
        assert!(c.pow(3).is_identity());
        let g = closure(&[c], 10).unwrap();
        assert_eq!(g.order(), 3);
    }

    #[test]
    fn closure_overflow_reported() {
        // a matrix of infinite order blows past any cap
        let mut m = CycMatrix::identity(2);
        m[(0, 1)] = CycNum::one();
        match closure(&[m], 16) {
            Err(CycError::ClosureOverflow { cap }) => assert_eq!(cap, 16),
            other => panic!("expected overflow, got order {:?}", other.map(|g| g.order()).ok()),
        }
    }

    #[test]
    fn matrix_inverse_roundtrip() {
        let mut m = CycMatrix::zero(2);
        m[(0, 0)] = CycNum::eta();
        m[(0, 1)] = CycNum::one();
        m[(1, 0)] = CycNum::zeta_pow(1);
        m[(1, 1)] = CycNum::from_int(2);
        let inv = m.inverse().unwrap();
        assert!(m.mul(&inv).is_identity());
    }
}
