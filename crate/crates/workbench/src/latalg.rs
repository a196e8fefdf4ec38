//! Exact integer and residue-ring linear algebra.
//!
//! Everything here is exact: integer matrices use arbitrary-precision
//! entries, residue matrices work modulo a power of 3. The module provides
//! the lattice-index certificates (determinants, Hermite/Smith forms,
//! lattice membership) and the Howell form over Z/3^m used when reducing
//! tail relations of covering groups.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LatAlgError {
    NotSquare { rows: usize, cols: usize },
    RankDeficient,
    DimensionMismatch,
    BadModulus(u64),
}

impl fmt::Display for LatAlgError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LatAlgError::NotSquare { rows, cols } => {
                write!(f, "matrix is {rows}x{cols}, expected square")
            }
            LatAlgError::RankDeficient => write!(f, "matrix does not have full row rank"),
            LatAlgError::DimensionMismatch => write!(f, "dimension mismatch"),
            LatAlgError::BadModulus(m) => write!(f, "modulus {m} is not a power of 3"),
        }
    }
}

impl std::error::Error for LatAlgError {}

/// Dense matrix over Z with arbitrary-precision entries, row-major.
#[derive(Clone, PartialEq, Eq)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    data: Vec<BigInt>,
}

impl fmt::Debug for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "IntMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            let row: Vec<String> = (0..self.cols).map(|c| self[(r, c)].to_string()).collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        write!(f, "]")
    }
}

impl std::ops::Index<(usize, usize)> for IntMatrix {
    type Output = BigInt;
    fn index(&self, (r, c): (usize, usize)) -> &BigInt {
        &self.data[r * self.cols + c]
    }
}

impl std::ops::IndexMut<(usize, usize)> for IntMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut BigInt {
        &mut self.data[r * self.cols + c]
    }
}

impl IntMatrix {
    pub fn zero(rows: usize, cols: usize) -> Self {
        IntMatrix {
            rows,
            cols,
            data: vec![BigInt::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = IntMatrix::zero(n, n);
        for i in 0..n {
            m[(i, i)] = BigInt::one();
        }
        m
    }

    pub fn from_rows<T: Into<BigInt> + Clone>(rows: &[Vec<T>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        assert!(rows.iter().all(|x| x.len() == c), "ragged rows");
        let data = rows
            .iter()
            .flat_map(|row| row.iter().cloned().map(Into::into))
            .collect();
        IntMatrix { rows: r, cols: c, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[BigInt] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn transpose(&self) -> IntMatrix {
        let mut t = IntMatrix::zero(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t[(c, r)] = self[(r, c)].clone();
            }
        }
        t
    }

    pub fn mul(&self, other: &IntMatrix) -> IntMatrix {
        assert_eq!(self.cols, other.rows, "matrix product shape mismatch");
        let mut out = IntMatrix::zero(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(r, k)];
                if a.is_zero() {
                    continue;
                }
                for c in 0..other.cols {
                    let p = a * &other[(k, c)];
                    out[(r, c)] += p;
                }
            }
        }
        out
    }

    pub fn is_diagonal(&self) -> bool {
        (0..self.rows).all(|r| (0..self.cols).all(|c| r == c || self[(r, c)].is_zero()))
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for c in 0..self.cols {
            self.data.swap(a * self.cols + c, b * self.cols + c);
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for r in 0..self.rows {
            self.data.swap(r * self.cols + a, r * self.cols + b);
        }
    }

    /// row[dst] += q * row[src]
    fn add_row_mul(&mut self, dst: usize, src: usize, q: &BigInt) {
        if q.is_zero() {
            return;
        }
        for c in 0..self.cols {
            let p = q * &self[(src, c)];
            self[(dst, c)] += p;
        }
    }

    fn add_col_mul(&mut self, dst: usize, src: usize, q: &BigInt) {
        if q.is_zero() {
            return;
        }
        for r in 0..self.rows {
            let p = q * &self[(r, src)];
            self[(r, dst)] += p;
        }
    }

    fn negate_row(&mut self, r: usize) {
        for c in 0..self.cols {
            let v = -self[(r, c)].clone();
            self[(r, c)] = v;
        }
    }

}

/// Exact determinant by fraction-free (Bareiss) elimination.
pub fn det(m: &IntMatrix) -> Result<BigInt, LatAlgError> {
    if m.rows != m.cols {
        return Err(LatAlgError::NotSquare {
            rows: m.rows,
            cols: m.cols,
        });
    }
    let n = m.rows;
    if n == 0 {
        return Ok(BigInt::one());
    }
    let mut a = m.clone();
    let mut sign = 1i32;
    let mut prev = BigInt::one();
    for k in 0..n - 1 {
        if a[(k, k)].is_zero() {
            // smallest row index below with a nonzero entry in this column
            match (k + 1..n).find(|&r| !a[(r, k)].is_zero()) {
                Some(r) => {
                    a.swap_rows(k, r);
                    sign = -sign;
                }
                None => return Ok(BigInt::zero()),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let num = &a[(i, j)] * &a[(k, k)] - &a[(i, k)] * &a[(k, j)];
                // Bareiss: division is exact
                a[(i, j)] = num / &prev;
            }
            a[(i, k)] = BigInt::zero();
        }
        prev = a[(k, k)].clone();
    }
    let d = a[(n - 1, n - 1)].clone();
    Ok(if sign < 0 { -d } else { d })
}

/// Result of a Hermite normal form computation: `u * m = h` with `u`
/// unimodular and `h` in row HNF.
pub struct HnfResult {
    pub h: IntMatrix,
    pub u: IntMatrix,
}

/// Row Hermite normal form. Pivots are positive, entries above a pivot are
/// reduced into `[0, pivot)`, zero rows sink to the bottom. Pivot selection
/// takes the smallest row index with a nonzero entry in the current column.
pub fn hnf(m: &IntMatrix) -> HnfResult {
    let mut h = m.clone();
    let mut u = IntMatrix::identity(m.rows);
    let (rows, cols) = (m.rows, m.cols);
    let mut pr = 0; // next pivot row
    for pc in 0..cols {
        if pr == rows {
            break;
        }
        // Euclid down the column until at most one nonzero entry remains at/below pr
        loop {
            let mut nz: Vec<usize> = (pr..rows).filter(|&r| !h[(r, pc)].is_zero()).collect();
            if nz.is_empty() {
                break;
            }
            if nz.len() == 1 {
                h.swap_rows(pr, nz[0]);
                u.swap_rows(pr, nz[0]);
                break;
            }
            // pick the row with smallest nonzero |entry|, ties to smallest index
            nz.sort_by(|&a, &b| {
                h[(a, pc)]
                    .abs()
                    .cmp(&h[(b, pc)].abs())
                    .then(a.cmp(&b))
            });
            let piv = nz[0];
            for &r in &nz[1..] {
                let q = -(&h[(r, pc)] / &h[(piv, pc)]);
                h.add_row_mul(r, piv, &q);
                u.add_row_mul(r, piv, &q);
            }
        }
        if h[(pr, pc)].is_zero() {
            continue;
        }
        if h[(pr, pc)].is_negative() {
            h.negate_row(pr);
            u.negate_row(pr);
        }
        // reduce entries above the pivot into [0, pivot)
        let p = h[(pr, pc)].clone();
        for r in 0..pr {
            let q = -h[(r, pc)].div_floor(&p);
            h.add_row_mul(r, pr, &q);
            u.add_row_mul(r, pr, &q);
        }
        pr += 1;
    }
    HnfResult { h, u }
}

/// Result of a Smith normal form computation: `u * m * v = s` diagonal with
/// the divisibility chain d1 | d2 | ...
pub struct SnfResult {
    pub s: IntMatrix,
    pub u: IntMatrix,
    pub v: IntMatrix,
}

pub fn snf(m: &IntMatrix) -> SnfResult {
    let mut s = m.clone();
    let mut u = IntMatrix::identity(m.rows);
    let mut v = IntMatrix::identity(m.cols);
    let n = m.rows.min(m.cols);
    for k in 0..n {
        loop {
            // move a nonzero entry of the trailing block to (k,k); smallest
            // absolute value keeps the Euclid steps short
            let mut best: Option<(usize, usize)> = None;
            for r in k..s.rows {
                for c in k..s.cols {
                    if !s[(r, c)].is_zero()
                        && best
                            .map(|(br, bc)| s[(r, c)].abs() < s[(br, bc)].abs())
                            .unwrap_or(true)
                    {
                        best = Some((r, c));
                    }
                }
            }
            let Some((br, bc)) = best else { break };
            s.swap_rows(k, br);
            u.swap_rows(k, br);
            s.swap_cols(k, bc);
            v.swap_cols(k, bc);

            let mut dirty = false;
            for r in k + 1..s.rows {
                if !s[(r, k)].is_zero() {
                    let q = -(&s[(r, k)] / &s[(k, k)]);
                    s.add_row_mul(r, k, &q);
                    u.add_row_mul(r, k, &q);
                    if !s[(r, k)].is_zero() {
                        dirty = true;
                    }
                }
            }
            for c in k + 1..s.cols {
                if !s[(k, c)].is_zero() {
                    let q = -(&s[(k, c)] / &s[(k, k)]);
                    s.add_col_mul(c, k, &q);
                    v.add_col_mul(c, k, &q);
                    if !s[(k, c)].is_zero() {
                        dirty = true;
                    }
                }
            }
            if !dirty
                && (k + 1..s.rows).all(|r| s[(r, k)].is_zero())
                && (k + 1..s.cols).all(|c| s[(k, c)].is_zero())
            {
                break;
            }
        }
        if s[(k, k)].is_negative() {
            s.negate_row(k);
            u.negate_row(k);
        }
    }
    // enforce the divisibility chain
    loop {
        let mut fixed = true;
        for i in 0..n.saturating_sub(1) {
            let (a, b) = (s[(i, i)].clone(), s[(i + 1, i + 1)].clone());
            if a.is_zero() && b.is_zero() {
                continue;
            }
            if a.is_zero() || (!b.is_zero() && !(&b % &a).is_zero()) {
                // fold (i+1) into column i and rediagonalize the 2x2 block
                s.add_col_mul(i, i + 1, &BigInt::one());
                v.add_col_mul(i, i + 1, &BigInt::one());
                // local Euclid on the 2x2 block (rows/cols i, i+1)
                loop {
                    if s[(i + 1, i)].is_zero() {
                        break;
                    }
                    let q = -(&s[(i, i)] / &s[(i + 1, i)]);
                    // careful ordering: reduce (i,i) by (i+1,i) and swap
                    s.add_row_mul(i, i + 1, &q);
                    u.add_row_mul(i, i + 1, &q);
                    s.swap_rows(i, i + 1);
                    u.swap_rows(i, i + 1);
                }
                // now clear the (i, i+1) entry
                if !s[(i, i + 1)].is_zero() {
                    let q = -(&s[(i, i + 1)] / &s[(i, i)]);
                    s.add_col_mul(i + 1, i, &q);
                    v.add_col_mul(i + 1, i, &q);
                }
                // the above may leave a remainder in (i+1, i+1) only
                if s[(i, i)].is_negative() {
                    s.negate_row(i);
                    u.negate_row(i);
                }
                if s[(i + 1, i + 1)].is_negative() {
                    s.negate_row(i + 1);
                    u.negate_row(i + 1);
                }
                fixed = false;
            }
        }
        if fixed {
            break;
        }
    }
    SnfResult { s, u, v }
}

/// Solve `x * b = v` for an integer row vector `x`, where `b` has full row
/// rank. Returns `None` when `v` is not in the row lattice of `b`.
pub fn solve_lattice(b: &IntMatrix, v: &[BigInt]) -> Result<Option<Vec<BigInt>>, LatAlgError> {
    if v.len() != b.cols {
        return Err(LatAlgError::DimensionMismatch);
    }
    let HnfResult { h, u } = hnf(b);
    // full row rank: every row of h must be nonzero
    let mut pivots = Vec::with_capacity(b.rows);
    for r in 0..h.rows() {
        match (0..h.cols()).find(|&c| !h[(r, c)].is_zero()) {
            Some(c) => pivots.push(c),
            None => return Err(LatAlgError::RankDeficient),
        }
    }
    // forward-substitute y * h = v (h is in row-echelon form)
    let mut y = vec![BigInt::zero(); h.rows()];
    let mut rem: Vec<BigInt> = v.to_vec();
    for (r, &pc) in pivots.iter().enumerate() {
        let (q, s) = rem[pc].div_rem(&h[(r, pc)]);
        if !s.is_zero() {
            return Ok(None);
        }
        y[r] = q;
        if !y[r].is_zero() {
            for c in 0..h.cols() {
                let p = &y[r] * &h[(r, c)];
                rem[c] -= p;
            }
        }
    }
    if rem.iter().any(|x| !x.is_zero()) {
        return Ok(None);
    }
    // x = y * u
    let mut x = vec![BigInt::zero(); b.rows];
    for r in 0..b.rows {
        for (k, yk) in y.iter().enumerate() {
            if !yk.is_zero() {
                let p = yk * &u[(k, r)];
                x[r] += p;
            }
        }
    }
    Ok(Some(x))
}

/// Abelian-group invariant factors of the quotient L1/L2 of two full-rank
/// integer lattices given by basis matrices (rows), with L2 <= L1.
/// Returns the nontrivial invariant factors (those > 1), in divisibility order.
pub fn lattice_quotient_invariants(
    l1: &IntMatrix,
    l2: &IntMatrix,
) -> Result<Vec<BigInt>, LatAlgError> {
    if l1.cols() != l2.cols() {
        return Err(LatAlgError::DimensionMismatch);
    }
    // express each basis row of L2 in terms of L1's basis
    let mut coords = Vec::with_capacity(l2.rows());
    for r in 0..l2.rows() {
        match solve_lattice(l1, l2.row(r))? {
            Some(x) => coords.push(x),
            None => return Err(LatAlgError::RankDeficient),
        }
    }
    let x = IntMatrix::from_rows(&coords);
    let s = snf(&x).s;
    let n = s.rows().min(s.cols());
    let mut inv: Vec<BigInt> = (0..n)
        .map(|i| s[(i, i)].clone())
        .filter(|d| !d.is_zero() && *d != BigInt::one())
        .collect();
    // zero diagonal entries would mean infinite quotient; both lattices are
    // full rank so that cannot happen if inputs are as documented
    inv.sort();
    Ok(inv)
}

/// Compress a full-rank sublattice description: stack of generating rows ->
/// HNF basis with zero rows dropped.
pub fn row_basis(gens: &IntMatrix) -> IntMatrix {
    let h = hnf(gens).h;
    let rows: Vec<Vec<BigInt>> = (0..h.rows())
        .filter(|&r| (0..h.cols()).any(|c| !h[(r, c)].is_zero()))
        .map(|r| h.row(r).to_vec())
        .collect();
    IntMatrix::from_rows(&rows)
}

// ---------------------------------------------------------------------------
// Residue matrices over Z/3^m and the Howell form
// ---------------------------------------------------------------------------

/// Dense matrix over Z/3^m, entries reduced into [0, 3^m).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResMatrix {
    rows: usize,
    cols: usize,
    pub modulus: u64,
    data: Vec<u64>,
}

fn pow3_exponent(modulus: u64) -> Option<u32> {
    let mut m = modulus;
    let mut e = 0;
    while m % 3 == 0 {
        m /= 3;
        e += 1;
    }
    (m == 1 && e >= 1).then_some(e)
}

/// 3-adic valuation of x in Z/3^m; returns m for x = 0.
fn val3(x: u64, m_exp: u32) -> u32 {
    if x == 0 {
        return m_exp;
    }
    let mut v = 0;
    let mut x = x;
    while x % 3 == 0 {
        x /= 3;
        v += 1;
    }
    v
}

fn inv_unit(x: u64, modulus: u64) -> u64 {
    // unit inverse modulo 3^m by lifting (modulus is tiny; brute scan is fine
    // for correctness but extended Euclid is direct)
    let (mut t, mut new_t): (i128, i128) = (0, 1);
    let (mut r, mut new_r): (i128, i128) = (modulus as i128, (x % modulus) as i128);
    while new_r != 0 {
        let q = r / new_r;
        (t, new_t) = (new_t, t - q * new_t);
        (r, new_r) = (new_r, r - q * new_r);
    }
    assert!(r == 1, "not a unit");
    (t.rem_euclid(modulus as i128)) as u64
}

impl ResMatrix {
    pub fn new(rows: usize, cols: usize, modulus: u64) -> Result<Self, LatAlgError> {
        if pow3_exponent(modulus).is_none() {
            return Err(LatAlgError::BadModulus(modulus));
        }
        Ok(ResMatrix {
            rows,
            cols,
            modulus,
            data: vec![0; rows * cols],
        })
    }

    pub fn from_rows(rows: &[Vec<u64>], modulus: u64) -> Result<Self, LatAlgError> {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        let mut m = ResMatrix::new(r, c, modulus)?;
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), c, "ragged rows");
            for (j, &x) in row.iter().enumerate() {
                m.data[i * c + j] = x % modulus;
            }
        }
        Ok(m)
    }

    pub fn identity(n: usize, modulus: u64) -> Result<Self, LatAlgError> {
        let mut m = ResMatrix::new(n, n, modulus)?;
        for i in 0..n {
            m.data[i * n + i] = 1;
        }
        Ok(m)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[u64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_vecs(&self) -> Vec<Vec<u64>> {
        (0..self.rows).map(|r| self.row(r).to_vec()).collect()
    }
}

/// Row span of a residue matrix as an explicit Howell basis.
///
/// Two matrices over Z/3^m have the same row span iff their Howell forms are
/// identical: pivots (= 3^s up to the forced unit normalization) sit in
/// strictly increasing columns, entries above a pivot are reduced modulo the
/// pivot, and the span is "saturated" (for every row r with pivot 3^s, the
/// row 3^(m-s)·r is again in the span of later rows).
pub fn howell(m: &ResMatrix) -> ResMatrix {
    let modulus = m.modulus;
    let m_exp = pow3_exponent(modulus).expect("checked at construction");
    let mut work: Vec<Vec<u64>> = m.row_vecs();
    let mut basis: Vec<Vec<u64>> = Vec::new(); // kept sorted by pivot column

    fn lead(row: &[u64]) -> Option<usize> {
        row.iter().position(|&x| x != 0)
    }

    // subtract q * src from dst in place
    fn sub_mul(dst: &mut [u64], src: &[u64], q: u64, modulus: u64) {
        if q == 0 {
            return;
        }
        for (d, s) in dst.iter_mut().zip(src) {
            let p = (q as u128 * *s as u128) % modulus as u128;
            *d = ((*d as u128 + modulus as u128 - p) % modulus as u128) as u64;
        }
    }

    while let Some(mut row) = work.pop() {
        loop {
            let Some(c) = lead(&row) else { break };
            // normalize so the entry at c is a power of 3
            let v = val3(row[c], m_exp);
            let unit = row[c] / 3u64.pow(v);
            if unit != 1 {
                let ui = inv_unit(unit, modulus);
                for x in row.iter_mut() {
                    *x = ((*x as u128 * ui as u128) % modulus as u128) as u64;
                }
            }
            match basis.iter().position(|b| lead(b) == Some(c)) {
                Some(bi) => {
                    let bv = val3(basis[bi][c], m_exp);
                    if bv <= v {
                        let q = row[c] / basis[bi][c];
                        let b = basis[bi].clone();
                        sub_mul(&mut row, &b, q, modulus);
                    } else {
                        // row has the shallower pivot: swap them
                        std::mem::swap(&mut basis[bi], &mut row);
                        // saturation row for the newly inserted basis row
                        let s = val3(basis[bi][c], m_exp);
                        if s > 0 {
                            let mult = 3u64.pow(m_exp - s);
                            let mut extra = basis[bi].clone();
                            for x in extra.iter_mut() {
                                *x = ((*x as u128 * mult as u128) % modulus as u128) as u64;
                            }
                            work.push(extra);
                        }
                    }
                }
                None => {
                    let s = val3(row[c], m_exp);
                    if s > 0 {
                        let mult = 3u64.pow(m_exp - s);
                        let mut extra = row.clone();
                        for x in extra.iter_mut() {
                            *x = ((*x as u128 * mult as u128) % modulus as u128) as u64;
                        }
                        work.push(extra);
                    }
                    basis.push(row);
                    basis.sort_by_key(|b| lead(b).unwrap());
                    break;
                }
            }
        }
    }

    // reduce entries above each pivot modulo the pivot; ascending pivot
    // order so a subtraction cannot reintroduce an unreduced deeper entry
    basis.sort_by_key(|b| lead(b).unwrap());
    for j in 0..basis.len() {
        for i in j + 1..basis.len() {
            let c = lead(&basis[i]).unwrap();
            let p = basis[i][c];
            let q = basis[j][c] / p;
            let src = basis[i].clone();
            sub_mul(&mut basis[j], &src, q, modulus);
        }
    }

    ResMatrix::from_rows(&basis, modulus).expect("modulus already validated")
}

/// Reduce a vector to its canonical representative modulo the row span of a
/// Howell basis.
pub fn howell_reduce(basis: &ResMatrix, v: &[u64]) -> Vec<u64> {
    assert_eq!(v.len(), basis.cols());
    let modulus = basis.modulus;
    let mut out: Vec<u64> = v.iter().map(|&x| x % modulus).collect();
    for r in 0..basis.rows() {
        let row = basis.row(r);
        let Some(c) = row.iter().position(|&x| x != 0) else {
            continue;
        };
        let q = out[c] / row[c];
        if q != 0 {
            for (d, s) in out.iter_mut().zip(row) {
                let p = (q as u128 * *s as u128) % modulus as u128;
                *d = ((*d as u128 + modulus as u128 - p) % modulus as u128) as u64;
            }
        }
    }
    out
}

/// Order of the subgroup of (Z/3^m)^n generated by the rows (i.e. the size
/// of the row span).
pub fn span_order(m: &ResMatrix) -> u64 {
    let m_exp = pow3_exponent(m.modulus).expect("checked at construction");
    let h = howell(m);
    let mut order: u64 = 1;
    for r in 0..h.rows() {
        let row = h.row(r);
        if let Some(c) = row.iter().position(|&x| x != 0) {
            let s = val3(row[c], m_exp);
            order *= 3u64.pow(m_exp - s);
        }
    }
    order
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;
    use proptest::prelude::*;

    fn m(rows: &[Vec<i64>]) -> IntMatrix {
        IntMatrix::from_rows(rows)
    }

    #[test]
    fn det_identity() {
        assert_eq!(det(&IntMatrix::identity(9)).unwrap(), BigInt::from(1));
    }

    #[test]
    fn det_rejects_nonsquare() {
        let a = m(&[vec![1, 2, 3], vec![4, 5, 6]]);
        assert!(matches!(det(&a), Err(LatAlgError::NotSquare { .. })));
    }

    #[test]
    fn hnf_already_diagonal() {
        let a = m(&[vec![2, 0], vec![0, 3]]);
        let r = hnf(&a);
        assert_eq!(r.h, a);
        assert_eq!(r.u, IntMatrix::identity(2));
    }

    #[test]
    fn hnf_row_swap() {
        let a = m(&[vec![0, 1], vec![1, 0]]);
        let r = hnf(&a);
        assert_eq!(r.h, IntMatrix::identity(2));
        assert_eq!(r.u.mul(&a), r.h);
        assert_eq!(det(&r.u).unwrap().abs(), BigInt::from(1));
    }

    /// Exhaustive elementary-operation oracle: enumerate all 2x2 unimodular
    /// U with small entries and keep the unique U*M in HNF shape.
    fn hnf_2x2_oracle(a: &IntMatrix) -> IntMatrix {
        let bound = 10i64;
        let mut found: Option<IntMatrix> = None;
        for p in -bound..=bound {
            for q in -bound..=bound {
                for r in -bound..=bound {
                    for s in -bound..=bound {
                        if p * s - q * r != 1 && p * s - q * r != -1 {
                            continue;
                        }
                        let u = m(&[vec![p, q], vec![r, s]]);
                        let h = u.mul(a);
                        if is_hnf_shape(&h) {
                            match &found {
                                None => found = Some(h),
                                Some(prev) => assert_eq!(prev, &h, "HNF not unique"),
                            }
                        }
                    }
                }
            }
        }
        found.expect("oracle found no HNF in search bound")
    }

    fn is_hnf_shape(h: &IntMatrix) -> bool {
        let mut last_pivot: Option<usize> = None;
        let mut seen_zero_row = false;
        for r in 0..h.rows() {
            let pivot = (0..h.cols()).find(|&c| !h[(r, c)].is_zero());
            match pivot {
                None => seen_zero_row = true,
                Some(c) => {
                    if seen_zero_row {
                        return false;
                    }
                    if let Some(lp) = last_pivot {
                        if c <= lp {
                            return false;
                        }
                    }
                    if h[(r, c)].is_negative() {
                        return false;
                    }
                    for rr in 0..r {
                        if h[(rr, c)].is_negative() || h[(rr, c)] >= h[(r, c)] {
                            return false;
                        }
                    }
                    last_pivot = Some(c);
                }
            }
        }
        true
    }

    #[test]
    fn hnf_matches_exhaustive_oracle() {
        let a = m(&[vec![2, 4], vec![6, 8]]);
        let expected = hnf_2x2_oracle(&a);
        // frozen value from the oracle run
        assert_eq!(expected, m(&[vec![2, 0], vec![0, 4]]));
        let r = hnf(&a);
        assert_eq!(r.h, expected);
        assert_eq!(r.u.mul(&a), r.h);
    }

    #[test]
    fn snf_diag_2_3() {
        let a = m(&[vec![2, 0], vec![0, 3]]);
        let r = snf(&a);
        assert_eq!(r.s, m(&[vec![1, 0], vec![0, 6]]));
        assert_eq!(r.u.mul(&a).mul(&r.v), r.s);
        assert_eq!(det(&r.u).unwrap().abs(), BigInt::from(1));
        assert_eq!(det(&r.v).unwrap().abs(), BigInt::from(1));
    }

    #[test]
    fn snf_zero_matrix() {
        let a = IntMatrix::zero(3, 2);
        let r = snf(&a);
        assert_eq!(r.s, IntMatrix::zero(3, 2));
    }

    #[test]
    fn solve_lattice_identity_and_forced() {
        let b = IntMatrix::identity(3);
        let v: Vec<BigInt> = vec![5.into(), (-7).into(), 0.into()];
        assert_eq!(solve_lattice(&b, &v).unwrap().unwrap(), v);

        let b = m(&[vec![3, 0], vec![0, 3]]);
        let v: Vec<BigInt> = vec![3.into(), 0.into()];
        assert_eq!(
            solve_lattice(&b, &v).unwrap().unwrap(),
            vec![BigInt::from(1), BigInt::from(0)]
        );
        let v: Vec<BigInt> = vec![1.into(), 0.into()];
        assert_eq!(solve_lattice(&b, &v).unwrap(), None);
    }

    #[test]
    fn solve_lattice_rejects_rank_deficient() {
        let b = m(&[vec![1, 2], vec![2, 4]]);
        let v: Vec<BigInt> = vec![1.into(), 2.into()];
        assert!(matches!(
            solve_lattice(&b, &v),
            Err(LatAlgError::RankDeficient)
        ));
    }

    #[test]
    fn howell_identity_and_single_row() {
        let id = ResMatrix::identity(2, 9).unwrap();
        assert_eq!(howell(&id), id);
        let single = ResMatrix::from_rows(&[vec![3]], 9).unwrap();
        assert_eq!(howell(&single), single);
    }

    /// Enumerate the full row span over Z/n^k by running through all
    /// coefficient vectors (small cases only).
    fn span_set(rows: &[Vec<u64>], modulus: u64, cols: usize) -> std::collections::BTreeSet<Vec<u64>> {
        let mut set = std::collections::BTreeSet::new();
        let k = rows.len();
        let total = (modulus as usize).pow(k as u32);
        for mut idx in 0..total {
            let mut v = vec![0u64; cols];
            for row in rows {
                let a = (idx as u64) % modulus;
                idx /= modulus as usize;
                for (x, y) in v.iter_mut().zip(row) {
                    *x = (*x + a * *y) % modulus;
                }
            }
            set.insert(v);
        }
        set
    }

    #[test]
    fn howell_matches_span_oracle() {
        let rows = vec![vec![2u64, 4], vec![4, 8]];
        let m9 = ResMatrix::from_rows(&rows, 9).unwrap();
        let h = howell(&m9);
        // span has 9 elements, generated by (1,2); frozen from the oracle
        assert_eq!(h.row_vecs(), vec![vec![1, 2]]);
        let lhs = span_set(&rows, 9, 2);
        let rhs = span_set(&h.row_vecs(), 9, 2);
        assert_eq!(lhs, rhs);
        assert_eq!(lhs.len(), 9);
        assert_eq!(span_order(&m9), 9);
    }

    #[test]
    fn howell_mixed_valuation() {
        // (3,1) needs a saturation row: 3*(3,1) = (0,3) is in the span
        let m9 = ResMatrix::from_rows(&[vec![3, 1]], 9).unwrap();
        let h = howell(&m9);
        let lhs = span_set(&[vec![3, 1]], 9, 2);
        let rhs = span_set(&h.row_vecs(), 9, 2);
        assert_eq!(lhs, rhs);
        // h is idempotent
        assert_eq!(howell(&h), h);
    }

    proptest! {
        #[test]
        fn prop_hnf_unimodular_and_exact(rows in proptest::collection::vec(proptest::collection::vec(-9i64..=9, 3), 1..4)) {
            let a = m(&rows);
            let r = hnf(&a);
            prop_assert_eq!(r.u.mul(&a), r.h.clone());
            prop_assert_eq!(det(&r.u).unwrap().abs(), BigInt::from(1));
            prop_assert!(is_hnf_shape(&r.h));
        }

        #[test]
        fn prop_snf_divisibility_and_det(rows in proptest::collection::vec(proptest::collection::vec(-9i64..=9, 3), 3)) {
            let a = m(&rows);
            let r = snf(&a);
            prop_assert_eq!(r.u.mul(&a).mul(&r.v), r.s.clone());
            prop_assert!(r.s.is_diagonal());
            let d: Vec<BigInt> = (0..3).map(|i| r.s[(i,i)].clone()).collect();
            for i in 0..2 {
                if !d[i].is_zero() {
                    if !d[i+1].is_zero() {
                        prop_assert!((&d[i+1] % &d[i]).is_zero());
                    }
                } else {
                    prop_assert!(d[i+1].is_zero());
                }
            }
            let da = det(&a).unwrap().abs();
            let ds: BigInt = d.iter().product::<BigInt>().abs();
            prop_assert_eq!(da, ds);
        }

        #[test]
        fn prop_howell_span_invariant(rows in proptest::collection::vec(proptest::collection::vec(0u64..27, 3), 1..3)) {
            let a = ResMatrix::from_rows(&rows, 27).unwrap();
            let h = howell(&a);
            prop_assert_eq!(howell(&h), h.clone());
            let lhs = span_set(&rows, 27, 3);
            let rhs = span_set(&h.row_vecs(), 27, 3);
            prop_assert_eq!(&lhs, &rhs);
            // canonical: a redundant extra generator must not change the form
            let mut aug = rows.clone();
            aug.push(h.row(0).to_vec());
            let h2 = howell(&ResMatrix::from_rows(&aug, 27).unwrap());
            prop_assert_eq!(h2, h);
        }

        #[test]
        fn prop_solve_lattice_roundtrip(bmat in proptest::collection::vec(proptest::collection::vec(-5i64..=5, 3), 3),
                                        x in proptest::collection::vec(-5i64..=5, 3)) {
            let b = m(&bmat);
            prop_assume!(!det(&b).unwrap().is_zero());
            let xv: Vec<BigInt> = x.iter().map(|&v| BigInt::from(v)).collect();
            let mut v = vec![BigInt::zero(); 3];
            for c in 0..3 {
                for r in 0..3 {
                    let p = &xv[r] * &b[(r, c)];
                    v[c] += p;
                }
            }
            let sol = solve_lattice(&b, &v).unwrap().unwrap();
            prop_assert_eq!(sol, xv);
        }
    }
}
