//! Finite 3-groups given by weighted power-commutator presentations.
//!
//! Elements are normalized exponent vectors; multiplication is collection
//! from the left. The module covers consistency checking (overlap
//! conditions plus randomized associativity), structural invariants
//! (center, derived subgroup, lower central series, exponent,
//! abelianization), commuting pairs, echelonized subgroups that also work
//! inside covering groups, and an isoclinism decision procedure.

use crate::latalg::{self, IntMatrix};
use num_bigint::BigInt;
use num_traits::One;
use rand::{Rng, SeedableRng};
use std::collections::HashMap;
use std::fmt;

pub type PcElement = Vec<u64>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PcError {
    BadRelation(String),
    Inconsistent(Vec<String>),
}

impl fmt::Display for PcError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PcError::BadRelation(s) => write!(f, "malformed relation: {s}"),
            PcError::Inconsistent(v) => write!(f, "inconsistent presentation: {}", v.join("; ")),
        }
    }
}

impl std::error::Error for PcError {}

/// Weighted power-commutator presentation. Generator i has relative order
/// `orders[i]` (a power of 3); `powers[i]` is the normal form of
/// g_i^orders\[i\] (supported on indices > i); `comm(j, i)` for j > i is the
/// normal form of \[g_j, g_i\] = g_j⁻¹ g_i⁻¹ g_j g_i (supported on
/// indices > j). Omitted commutators are trivial.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct PcPresentation {
    pub label: String,
    orders: Vec<u64>,
    powers: Vec<PcElement>,
    comms: Vec<PcElement>, // indexed by pair_index(j, i), j > i
}

fn pair_index(j: usize, i: usize) -> usize {
    debug_assert!(j > i);
    j * (j - 1) / 2 + i
}

impl PcPresentation {
    /// Build a presentation; power and commutator words are exponent
    /// vectors of full length n. Validates the weighting discipline.
    pub fn new(
        label: &str,
        orders: Vec<u64>,
        powers: Vec<PcElement>,
        comm_list: &[(usize, usize, PcElement)],
    ) -> Result<Self, PcError> {
        let n = orders.len();
        if orders.iter().any(|&o| {
            let mut m = o;
            while m % 3 == 0 {
                m /= 3;
            }
            m != 1 || o < 3
        }) {
            return Err(PcError::BadRelation("orders must be powers of 3".into()));
        }
        if powers.len() != n {
            return Err(PcError::BadRelation("need one power word per generator".into()));
        }
        for (i, w) in powers.iter().enumerate() {
            if w.len() != n {
                return Err(PcError::BadRelation(format!("power word {i} has wrong length")));
            }
            if w.iter().take(i + 1).any(|&e| e != 0) {
                return Err(PcError::BadRelation(format!(
                    "power word of g{} must involve only higher generators",
                    i + 1
                )));
            }
        }
        let mut comms = vec![vec![0; n]; n * (n - 1) / 2];
        for (j, i, w) in comm_list {
            let (j, i) = (*j, *i);
            if j <= i || j >= n || w.len() != n {
                return Err(PcError::BadRelation(format!("bad commutator ({j},{i})")));
            }
            if w.iter().take(j + 1).any(|&e| e != 0) {
                return Err(PcError::BadRelation(format!(
                    "commutator [g{},g{}] must involve only generators above g{}",
                    j + 1,
                    i + 1,
                    j + 1
                )));
            }
            comms[pair_index(j, i)] = w.clone();
        }
        Ok(PcPresentation {
            label: label.to_string(),
            orders,
            powers,
            comms,
        })
    }

    pub fn ngens(&self) -> usize {
        self.orders.len()
    }

    pub fn orders(&self) -> &[u64] {
        &self.orders
    }

    pub fn power_word(&self, i: usize) -> &PcElement {
        &self.powers[i]
    }

    pub fn comm_word(&self, j: usize, i: usize) -> &PcElement {
        &self.comms[pair_index(j, i)]
    }

    pub fn group_order(&self) -> u64 {
        self.orders.iter().product()
    }

    pub fn identity(&self) -> PcElement {
        vec![0; self.ngens()]
    }

    pub fn generator(&self, i: usize) -> PcElement {
        let mut e = self.identity();
        e[i] = 1;
        e
    }

    fn letters_of(&self, e: &PcElement) -> Vec<usize> {
        let mut out = Vec::new();
        for (i, &k) in e.iter().enumerate() {
            for _ in 0..k {
                out.push(i);
            }
        }
        out
    }

    /// Collection from the left: bring a word of positive generator letters
    /// to normal form. Deterministic.
    pub fn collect_letters(&self, letters: &[usize]) -> PcElement {
        let n = self.ngens();
        let mut c = vec![0u64; n];
        let mut stack: Vec<usize> = letters.iter().rev().copied().collect();
        while let Some(i) = stack.pop() {
            // deepest letter currently collected
            let tail = (i + 1..n).rev().find(|&j| c[j] > 0);
            match tail {
                None => {
                    c[i] += 1;
                    if c[i] == self.orders[i] {
                        c[i] = 0;
                        let w = &self.powers[i];
                        for j in (0..n).rev() {
                            for _ in 0..w[j] {
                                stack.push(j);
                            }
                        }
                    }
                }
                Some(j) => {
                    // c = c' g_j ; c' g_j g_i = c' g_i g_j [g_j, g_i]
                    c[j] -= 1;
                    let w = &self.comms[pair_index(j, i)];
                    for k in (0..n).rev() {
                        for _ in 0..w[k] {
                            stack.push(k);
                        }
                    }
                    stack.push(j);
                    stack.push(i);
                }
            }
        }
        c
    }

    /// Collect a word given as (generator, exponent) pairs; negative
    /// exponents are resolved through inverses.
    pub fn collect(&self, word: &[(usize, i64)]) -> PcElement {
        let mut acc = self.identity();
        for &(g, e) in word {
            let gen = self.generator(g);
            let factor = if e >= 0 {
                self.pow(&gen, e as u64)
            } else {
                self.inv(&self.pow(&gen, (-e) as u64))
            };
            acc = self.mul(&acc, &factor);
        }
        acc
    }

    pub fn mul(&self, a: &PcElement, b: &PcElement) -> PcElement {
        let mut letters = self.letters_of(a);
        letters.extend(self.letters_of(b));
        self.collect_letters(&letters)
    }

    pub fn inv(&self, a: &PcElement) -> PcElement {
        // cancel depth by depth: multiplying by g_d^k only disturbs
        // deeper coordinates
        let n = self.ngens();
        let mut x = self.identity();
        for d in 0..n {
            let cur = self.mul(a, &x);
            let e = cur[d];
            if e > 0 {
                let mut step = self.identity();
                step[d] = self.orders[d] - e;
                x = self.mul(&x, &step);
            }
        }
        debug_assert_eq!(self.mul(a, &x), self.identity());
        x
    }

    pub fn pow(&self, a: &PcElement, k: u64) -> PcElement {
        let mut out = self.identity();
        let mut base = a.clone();
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                out = self.mul(&out, &base);
            }
            base = self.mul(&base, &base);
            k >>= 1;
        }
        out
    }

    /// \[a, b\] = a⁻¹ b⁻¹ a b.
    pub fn commutator(&self, a: &PcElement, b: &PcElement) -> PcElement {
        let ai = self.inv(a);
        let bi = self.inv(b);
        self.mul(&self.mul(&ai, &bi), &self.mul(a, b))
    }

    pub fn conjugate(&self, a: &PcElement, g: &PcElement) -> PcElement {
        self.mul(&self.mul(&self.inv(g), a), g)
    }

    pub fn element_order(&self, a: &PcElement) -> u64 {
        let mut p = a.clone();
        let mut k = 1;
        while p != self.identity() {
            p = self.mul(&p, a);
            k += 1;
        }
        k
    }

    /// All group elements in odometer order.
    pub fn enumerate(&self) -> Vec<PcElement> {
        let n = self.ngens();
        let mut out = Vec::with_capacity(self.group_order() as usize);
        let mut cur = self.identity();
        loop {
            out.push(cur.clone());
            let mut d = n;
            while d > 0 {
                d -= 1;
                cur[d] += 1;
                if cur[d] < self.orders[d] {
                    break;
                }
                cur[d] = 0;
                if d == 0 {
                    return out;
                }
            }
        }
    }

    /// Consistency report: the standard overlap conditions plus randomized
    /// associativity triples.
    pub fn verify_consistency(&self, random_triples: usize, seed: u64) -> ConsistencyReport {
        let n = self.ngens();
        let mut violations = Vec::new();
        let gens: Vec<PcElement> = (0..n).map(|i| self.generator(i)).collect();
        // triple overlaps g_k (g_j g_i) = (g_k g_j) g_i for k > j > i
        for k in 0..n {
            for j in 0..k {
                for i in 0..j {
                    let lhs = self.mul(&gens[k], &self.mul(&gens[j], &gens[i]));
                    let rhs = self.mul(&self.mul(&gens[k], &gens[j]), &gens[i]);
                    if lhs != rhs {
                        violations.push(format!("triple overlap (g{},g{},g{})", k + 1, j + 1, i + 1));
                    }
                }
            }
        }
        // power overlaps
        for j in 0..n {
            for i in 0..j {
                let pj = self.pow(&gens[j], self.orders[j]);
                let lhs = self.mul(&pj, &gens[i]);
                let rhs = self.mul(
                    &self.pow(&gens[j], self.orders[j] - 1),
                    &self.mul(&gens[j], &gens[i]),
                );
                if lhs != rhs {
                    violations.push(format!("power overlap g{}^o g{}", j + 1, i + 1));
                }
                let pi = self.pow(&gens[i], self.orders[i]);
                let lhs = self.mul(&gens[j], &pi);
                let rhs = self.mul(
                    &self.mul(&gens[j], &gens[i]),
                    &self.pow(&gens[i], self.orders[i] - 1),
                );
                if lhs != rhs {
                    violations.push(format!("power overlap g{} g{}^o", j + 1, i + 1));
                }
            }
        }
        for i in 0..n {
            let pi = self.pow(&gens[i], self.orders[i]);
            let lhs = self.mul(&gens[i], &pi);
            let rhs = self.mul(&pi, &gens[i]);
            if lhs != rhs {
                violations.push(format!("power overlap g{} g{}^o (self)", i + 1, i + 1));
            }
        }
        // randomized associativity
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut assoc_failures = 0usize;
        for _ in 0..random_triples {
            let rand_elt = |rng: &mut rand_chacha::ChaCha8Rng| -> PcElement {
                (0..n).map(|i| rng.gen_range(0..self.orders[i])).collect()
            };
            let a = rand_elt(&mut rng);
            let b = rand_elt(&mut rng);
            let c = rand_elt(&mut rng);
            if self.mul(&self.mul(&a, &b), &c) != self.mul(&a, &self.mul(&b, &c)) {
                assoc_failures += 1;
            }
        }
        if assoc_failures > 0 {
            violations.push(format!("associativity failed on {assoc_failures} random triples"));
        }
        ConsistencyReport { violations }
    }

    /// Abelianization invariants (nontrivial invariant factors) via the
    /// Smith form of the relation matrix.
    pub fn abelian_invariants(&self) -> Vec<u64> {
        let n = self.ngens();
        let mut rows: Vec<Vec<BigInt>> = Vec::new();
        for i in 0..n {
            // g_i^o_i = w  =>  o_i·e_i − w ≡ 0
            let mut r: Vec<BigInt> = self.powers[i].iter().map(|&e| -BigInt::from(e)).collect();
            r[i] += BigInt::from(self.orders[i]);
            rows.push(r);
        }
        for j in 0..n {
            for i in 0..j {
                let w = &self.comms[pair_index(j, i)];
                if w.iter().any(|&e| e != 0) {
                    rows.push(w.iter().map(|&e| BigInt::from(e)).collect());
                }
            }
        }
        let s = latalg::snf(&IntMatrix::from_rows(&rows)).s;
        let mut inv: Vec<u64> = (0..n.min(s.rows()))
            .map(|i| &s[(i, i)])
            .filter(|d| !d.is_one())
            .map(|d| u64::try_from(d).expect("invariant fits u64"))
            .collect();
        inv.sort();
        inv
    }
}

#[derive(Debug, Clone)]
pub struct ConsistencyReport {
    pub violations: Vec<String>,
}

impl ConsistencyReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

// ---------------------------------------------------------------------------
// Echelonized subgroups
// ---------------------------------------------------------------------------

/// Group operations needed by the echelon machinery; implemented by plain
/// presentations and by covering groups (which reduce tails after every
/// operation).
pub trait GroupOps {
    fn ngens(&self) -> usize;
    fn order_at(&self, d: usize) -> u64;
    fn identity(&self) -> PcElement;
    fn mul(&self, a: &PcElement, b: &PcElement) -> PcElement;
    fn inv(&self, a: &PcElement) -> PcElement;
    fn pow(&self, a: &PcElement, k: u64) -> PcElement {
        let mut out = self.identity();
        for _ in 0..k {
            out = self.mul(&out, a);
        }
        out
    }
    fn commutator(&self, a: &PcElement, b: &PcElement) -> PcElement {
        let ai = self.inv(a);
        let bi = self.inv(b);
        self.mul(&self.mul(&ai, &bi), &self.mul(a, b))
    }
}

impl GroupOps for PcPresentation {
    fn ngens(&self) -> usize {
        PcPresentation::ngens(self)
    }
    fn order_at(&self, d: usize) -> u64 {
        self.orders[d]
    }
    fn identity(&self) -> PcElement {
        PcPresentation::identity(self)
    }
    fn mul(&self, a: &PcElement, b: &PcElement) -> PcElement {
        PcPresentation::mul(self, a, b)
    }
    fn inv(&self, a: &PcElement) -> PcElement {
        PcPresentation::inv(self, a)
    }
    fn pow(&self, a: &PcElement, k: u64) -> PcElement {
        PcPresentation::pow(self, a, k)
    }
}

fn val3(mut x: u64) -> u32 {
    assert!(x > 0);
    let mut v = 0;
    while x % 3 == 0 {
        x /= 3;
        v += 1;
    }
    v
}

fn unit_part(x: u64) -> u64 {
    x / 3u64.pow(val3(x))
}

fn inv_mod(x: u64, m: u64) -> u64 {
    let (mut t, mut new_t): (i128, i128) = (0, 1);
    let (mut r, mut new_r): (i128, i128) = (m as i128, (x % m) as i128);
    while new_r != 0 {
        let q = r / new_r;
        (t, new_t) = (new_t, t - q * new_t);
        (r, new_r) = (new_r, r - q * new_r);
    }
    assert_eq!(r, 1, "not a unit mod {m}");
    t.rem_euclid(m as i128) as u64
}

/// Echelonized generating sequence: at most one generator per leading
/// depth, leading exponents normalized to powers of 3, closed under
/// sifting, cubes and inverses (so sifting is a membership test).
pub struct SubgroupEchelon<'g, G: GroupOps> {
    group: &'g G,
    /// generator at each depth (indexed by depth)
    slots: Vec<Option<PcElement>>,
}

impl<'g, G: GroupOps> SubgroupEchelon<'g, G> {
    pub fn new(group: &'g G) -> Self {
        SubgroupEchelon {
            slots: vec![None; group.ngens()],
            group,
        }
    }

    pub fn generators(&self) -> Vec<PcElement> {
        self.slots.iter().flatten().cloned().collect()
    }

    fn lead(x: &PcElement) -> Option<usize> {
        x.iter().position(|&e| e > 0)
    }

    /// Sift an element; inserts the residue (normalized) if it is new.
    /// Returns true when the subgroup grew.
    pub fn sift(&mut self, x: &PcElement) -> bool {
        let mut grew = false;
        let mut queue = vec![x.clone()];
        while let Some(mut x) = queue.pop() {
            loop {
                let Some(d) = Self::lead(&x) else { break };
                let e = x[d];
                let ve = val3(e);
                match &self.slots[d] {
                    Some(y) => {
                        let vy = val3(y[d]);
                        if vy <= ve {
                            let q = e / y[d];
                            let yq = self.group.pow(y, q);
                            x = self.group.mul(&self.group.inv(&yq), &x);
                            debug_assert!(Self::lead(&x).map_or(true, |d2| d2 > d));
                        } else {
                            // x has the shallower valuation: swap
                            let xn = Self::normalize_lead(self.group, &x, d, ve);
                            let old = self.slots[d].replace(xn.clone());
                            queue.push(self.group.pow(&xn, 3));
                            if let Some(o) = old {
                                queue.push(o);
                            }
                            grew = true;
                            break;
                        }
                    }
                    None => {
                        let xn = Self::normalize_lead(self.group, &x, d, ve);
                        self.slots[d] = Some(xn.clone());
                        queue.push(self.group.pow(&xn, 3));
                        grew = true;
                        break;
                    }
                }
            }
        }
        grew
    }

    fn normalize_lead(group: &G, x: &PcElement, d: usize, ve: u32) -> PcElement {
        let o = group.order_at(d);
        let u = unit_part(x[d]);
        if u == 1 {
            return x.clone();
        }
        let m_exp = val3(o);
        let modulus = 3u64.pow(m_exp - ve);
        let ui = inv_mod(u % modulus, modulus);
        let out = group.pow(x, ui);
        debug_assert_eq!(out[d], 3u64.pow(ve));
        out
    }

    pub fn contains(&self, x: &PcElement) -> bool {
        let mut x = x.clone();
        loop {
            let Some(d) = Self::lead(&x) else { return true };
            match &self.slots[d] {
                Some(y) if val3(y[d]) <= val3(x[d]) => {
                    let q = x[d] / y[d];
                    let yq = self.group.pow(y, q);
                    x = self.group.mul(&self.group.inv(&yq), &x);
                }
                _ => return false,
            }
        }
    }

    /// Close under inverses and pairwise products so that `contains` is a
    /// complete membership test; returns when stable.
    pub fn saturate(&mut self) {
        loop {
            let gens = self.generators();
            let mut grew = false;
            for a in &gens {
                grew |= self.sift(&self.group.inv(a));
                for b in &gens {
                    grew |= self.sift(&self.group.mul(a, b));
                }
            }
            if !grew {
                break;
            }
        }
    }

    /// Close under conjugation by the given elements (typically the full
    /// generator list, producing a normal subgroup).
    pub fn close_under_conjugation(&mut self, conjugators: &[PcElement]) {
        loop {
            let gens = self.generators();
            let mut grew = false;
            for a in &gens {
                for g in conjugators {
                    let c = self
                        .group
                        .mul(&self.group.mul(&self.group.inv(g), a), g);
                    grew |= self.sift(&c);
                }
            }
            if !grew {
                break;
            }
            self.saturate();
        }
    }

    /// Subgroup order, as the product of the cyclic factor sizes of the
    /// echelon generators (each contributes order-of-lead within its depth).
    pub fn order(&self) -> u64 {
        let mut o = 1u64;
        for (d, slot) in self.slots.iter().enumerate() {
            if let Some(y) = slot {
                let m_exp = val3(self.group.order_at(d));
                o *= 3u64.pow(m_exp - val3(y[d]));
            }
        }
        o
    }

    /// Enumerate all subgroup elements (products over the echelon basis).
    pub fn elements(&self) -> Vec<PcElement> {
        let gens: Vec<(PcElement, u64)> = self
            .slots
            .iter()
            .enumerate()
            .filter_map(|(d, s)| {
                s.as_ref().map(|y| {
                    let m_exp = val3(self.group.order_at(d));
                    (y.clone(), 3u64.pow(m_exp - val3(y[d])))
                })
            })
            .collect();
        let mut out = vec![self.group.identity()];
        for (y, o) in gens {
            let mut next = Vec::with_capacity(out.len() * o as usize);
            let mut p = self.group.identity();
            for _ in 0..o {
                for x in &out {
                    next.push(self.group.mul(x, &p));
                }
                p = self.group.mul(&p, &y);
            }
            out = next;
        }
        out
    }
}

/// Echelon closure of a generating set inside `group`.
pub fn subgroup<'g, G: GroupOps>(group: &'g G, gens: &[PcElement]) -> SubgroupEchelon<'g, G> {
    let mut e = SubgroupEchelon::new(group);
    for g in gens {
        e.sift(g);
    }
    e.saturate();
    e
}

/// Normal closure of a generating set.
pub fn normal_closure<'g, G: GroupOps>(
    group: &'g G,
    gens: &[PcElement],
    conjugators: &[PcElement],
) -> SubgroupEchelon<'g, G> {
    let mut e = subgroup(group, gens);
    e.close_under_conjugation(conjugators);
    e
}

// ---------------------------------------------------------------------------
// Structure report
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StructureReport {
    pub order: u64,
    pub center_order: u64,
    pub center_invariants: Vec<u64>,
    /// depths (1-based generator indices) of the center's echelon basis
    pub center_depths: Vec<usize>,
    pub derived_order: u64,
    pub derived_depths: Vec<usize>,
    pub lower_central_orders: Vec<u64>,
    pub class: usize,
    pub exponent: u64,
    pub abelian_invariants: Vec<u64>,
}

/// Abelian invariant factors (powers of 3) from the multiset of element
/// orders of an abelian 3-group: with invariants 3^(e_1)..3^(e_r) the count
/// of elements of order dividing 3^k is 3^(Σ min(k, e_i)).
fn abelian_invariants_from_orders(orders: &[u64]) -> Vec<u64> {
    let max_e = orders.iter().map(|&o| val3(o)).max().unwrap_or(0);
    let s: Vec<u32> = (0..=max_e + 1)
        .map(|k| {
            let cnt = orders.iter().filter(|&&o| o <= 3u64.pow(k)).count() as u64;
            val3(cnt.max(1))
        })
        .collect();
    let mut inv = Vec::new();
    for k in 1..=max_e {
        let d_k = s[k as usize] - s[(k - 1) as usize]; // #{i : e_i >= k}
        let d_next = s[(k + 1) as usize] - s[k as usize];
        for _ in 0..d_k - d_next {
            inv.push(3u64.pow(k));
        }
    }
    inv.sort();
    inv
}

pub fn structure(p: &PcPresentation) -> StructureReport {
    let n = p.ngens();
    let gens: Vec<PcElement> = (0..n).map(|i| p.generator(i)).collect();
    let all = p.enumerate();

    let center: Vec<PcElement> = all
        .iter()
        .filter(|x| gens.iter().all(|g| p.commutator(x, g) == p.identity()))
        .cloned()
        .collect();
    let center_orders: Vec<u64> = center.iter().map(|x| p.element_order(x)).collect();
    let center_ech = subgroup(p, &center);
    let center_depths: Vec<usize> = center_ech
        .slots
        .iter()
        .enumerate()
        .filter_map(|(d, s)| s.as_ref().map(|_| d + 1))
        .collect();

    let mut comm_gens = Vec::new();
    for j in 0..n {
        for i in 0..j {
            comm_gens.push(p.commutator(&gens[j], &gens[i]));
        }
    }
    let derived = normal_closure(p, &comm_gens, &gens);
    let derived_depths: Vec<usize> = derived
        .slots
        .iter()
        .enumerate()
        .filter_map(|(d, s)| s.as_ref().map(|_| d + 1))
        .collect();

    // lower central series
    let mut lcs_orders = vec![p.group_order()];
    let mut current = derived.generators();
    loop {
        let ech = normal_closure(p, &current, &gens);
        let o = ech.order();
        lcs_orders.push(o);
        if o == 1 {
            break;
        }
        let mut next = Vec::new();
        for x in ech.generators() {
            for g in &gens {
                next.push(p.commutator(&x, g));
            }
        }
        current = next;
    }
    let class = lcs_orders.len() - 1;

    let exponent = all.iter().map(|x| p.element_order(x)).max().unwrap_or(1);

    StructureReport {
        order: p.group_order(),
        center_order: center.len() as u64,
        center_invariants: abelian_invariants_from_orders(&center_orders),
        center_depths,
        derived_order: derived.order(),
        derived_depths,
        lower_central_orders: lcs_orders,
        class,
        exponent,
        abelian_invariants: p.abelian_invariants(),
    }
}

/// All ordered pairs (x, y) with trivial commutator. The count is also
/// cross-checkable as the sum of centralizer orders.
pub fn commuting_pairs(p: &PcPresentation) -> Vec<(PcElement, PcElement)> {
    let all = p.enumerate();
    let mut pairs = Vec::new();
    for x in &all {
        for y in &all {
            if p.commutator(x, y) == p.identity() {
                pairs.push((x.clone(), y.clone()));
            }
        }
    }
    pairs
}

// ---------------------------------------------------------------------------
// Finite group tables, quotients, isoclinism
// ---------------------------------------------------------------------------

/// Small finite group as an explicit multiplication table.
#[derive(Clone)]
pub struct FiniteGroupTable {
    pub n: usize,
    pub mul: Vec<usize>,
    pub inv: Vec<usize>,
    pub orders: Vec<usize>,
    /// original elements behind each table index (when built from a pc-group)
    pub reps: Vec<PcElement>,
}

impl FiniteGroupTable {
    pub fn product(&self, a: usize, b: usize) -> usize {
        self.mul[a * self.n + b]
    }

    pub fn from_elements<G: GroupOps>(group: &G, elements: &[PcElement]) -> Self {
        let n = elements.len();
        let index: HashMap<&PcElement, usize> =
            elements.iter().enumerate().map(|(i, e)| (e, i)).collect();
        let mut mul = vec![0usize; n * n];
        for (i, a) in elements.iter().enumerate() {
            for (j, b) in elements.iter().enumerate() {
                let prod = group.mul(a, b);
                mul[i * n + j] = *index.get(&prod).expect("product escaped element set");
            }
        }
        let id = *index.get(&group.identity()).expect("missing identity");
        let mut inv = vec![0usize; n];
        let mut orders = vec![0usize; n];
        for i in 0..n {
            inv[i] = (0..n).find(|&j| mul[i * n + j] == id).expect("missing inverse");
            let mut k = 1;
            let mut p = i;
            while p != id {
                p = mul[p * n + i];
                k += 1;
            }
            orders[i] = k;
        }
        // move the identity to index 0 for convenience of callers
        debug_assert_eq!(orders[id], 1);
        FiniteGroupTable {
            n,
            mul,
            inv,
            orders,
            reps: elements.to_vec(),
        }
    }

    pub fn identity_index(&self) -> usize {
        self.orders.iter().position(|&o| o == 1).expect("identity")
    }

    pub fn order_multiset(&self) -> Vec<usize> {
        let mut o = self.orders.clone();
        o.sort();
        o
    }

    pub fn is_abelian(&self) -> bool {
        (0..self.n).all(|a| (0..self.n).all(|b| self.product(a, b) == self.product(b, a)))
    }

    /// Greedy minimal generating sequence.
    pub fn generating_sequence(&self) -> Vec<usize> {
        let id = self.identity_index();
        let mut gens: Vec<usize> = Vec::new();
        let mut closed: Vec<usize> = vec![id];
        while closed.len() < self.n {
            let next = (0..self.n).find(|x| !closed.contains(x)).unwrap();
            gens.push(next);
            // close
            let mut frontier = vec![next];
            closed.push(next);
            while let Some(x) = frontier.pop() {
                for &g in closed.clone().iter() {
                    for prod in [self.product(x, g), self.product(g, x)] {
                        if !closed.contains(&prod) {
                            closed.push(prod);
                            frontier.push(prod);
                        }
                    }
                }
            }
        }
        gens
    }

    /// Canonical word (as generator index sequence) for every element, via
    /// BFS over right multiplication by generators.
    pub fn words(&self, gens: &[usize]) -> Vec<Vec<usize>> {
        let id = self.identity_index();
        let mut words: Vec<Option<Vec<usize>>> = vec![None; self.n];
        words[id] = Some(Vec::new());
        let mut queue = std::collections::VecDeque::from([id]);
        while let Some(x) = queue.pop_front() {
            for (gi, &g) in gens.iter().enumerate() {
                let y = self.product(x, g);
                if words[y].is_none() {
                    let mut w = words[x].clone().unwrap();
                    w.push(gi);
                    words[y] = Some(w);
                    queue.push_back(y);
                }
            }
        }
        words
            .into_iter()
            .map(|w| w.expect("generators do not generate"))
            .collect()
    }
}

/// Central quotient G/Z as a table, with the coset representative map.
pub fn central_quotient(p: &PcPresentation) -> (FiniteGroupTable, Vec<PcElement>) {
    let n = p.ngens();
    let gens: Vec<PcElement> = (0..n).map(|i| p.generator(i)).collect();
    let all = p.enumerate();
    let center: Vec<PcElement> = all
        .iter()
        .filter(|x| gens.iter().all(|g| p.commutator(x, g) == p.identity()))
        .cloned()
        .collect();
    let zech = subgroup(p, &center);
    // canonical coset representative: clear each center-echelon depth
    let canon = |x: &PcElement| -> PcElement {
        let mut x = x.clone();
        for d in 0..n {
            if let Some(z) = &zech.slots[d] {
                let q = x[d] / z[d];
                if q > 0 {
                    let zq = p.pow(z, q);
                    x = p.mul(&x, &p.inv(&zq));
                }
                debug_assert!(x[d] < z[d]);
            }
        }
        x
    };
    let mut reps: Vec<PcElement> = Vec::new();
    for x in &all {
        let c = canon(x);
        if !reps.contains(&c) {
            reps.push(c);
        }
    }
    reps.sort();
    let index: HashMap<&PcElement, usize> = reps.iter().enumerate().map(|(i, e)| (e, i))
        .collect();
    let nq = reps.len();
    let mut mul = vec![0usize; nq * nq];
    for (i, a) in reps.iter().enumerate() {
        for (j, b) in reps.iter().enumerate() {
            let prod = canon(&p.mul(a, b));
            mul[i * nq + j] = index[&prod];
        }
    }
    let id = index[&canon(&p.identity())];
    let mut inv = vec![0usize; nq];
    let mut orders = vec![0usize; nq];
    for i in 0..nq {
        inv[i] = (0..nq).find(|&j| mul[i * nq + j] == id).expect("inverse");
        let mut k = 1;
        let mut q = i;
        while q != id {
            q = mul[q * nq + i];
            k += 1;
        }
        orders[i] = k;
    }
    (
        FiniteGroupTable {
            n: nq,
            mul,
            inv,
            orders,
            reps: reps.clone(),
        },
        reps,
    )
}

/// Result of the isoclinism decision.
#[derive(Debug, Clone)]
pub struct IsoclinismResult {
    pub isoclinic: bool,
    /// images of the quotient generating sequence under θ, as exponent
    /// vectors of coset representatives in the second group
    pub theta_witness: Option<Vec<PcElement>>,
    /// pairs (commutator value in G1, matched value in G2)
    pub phi_witness: Option<Vec<(PcElement, PcElement)>>,
}

struct IsoclinismData {
    quotient: FiniteGroupTable,
    derived: FiniteGroupTable,
    /// commutator pairing: quotient index pair -> derived index
    pairing: Vec<usize>,
}

fn isoclinism_data(p: &PcPresentation) -> IsoclinismData {
    let (quotient, reps) = central_quotient(p);
    let n = p.ngens();
    let gens: Vec<PcElement> = (0..n).map(|i| p.generator(i)).collect();
    let mut comm_gens = Vec::new();
    for j in 0..n {
        for i in 0..j {
            comm_gens.push(p.commutator(&gens[j], &gens[i]));
        }
    }
    let derived_ech = normal_closure(p, &comm_gens, &gens);
    let derived_elems = derived_ech.elements();
    let derived = FiniteGroupTable::from_elements(p, &derived_elems);
    let index: HashMap<&PcElement, usize> = derived_elems
        .iter()
        .enumerate()
        .map(|(i, e)| (e, i))
        .collect();
    let nq = quotient.n;
    let mut pairing = vec![0usize; nq * nq];
    for (i, a) in reps.iter().enumerate() {
        for (j, b) in reps.iter().enumerate() {
            let c = p.commutator(a, b);
            pairing[i * nq + j] = *index
                .get(&c)
                .expect("commutator of representatives must lie in derived subgroup");
        }
    }
    IsoclinismData {
        quotient,
        derived,
        pairing,
    }
}

/// Decide isoclinism (Definition: isomorphisms θ of the central quotients
/// and φ of the derived subgroups with φ([g,h]) = [θg, θh]).
pub fn is_isoclinic(p1: &PcPresentation, p2: &PcPresentation) -> IsoclinismResult {
    let d1 = isoclinism_data(p1);
    let d2 = isoclinism_data(p2);
    let reject = IsoclinismResult {
        isoclinic: false,
        theta_witness: None,
        phi_witness: None,
    };
    // isoclinism invariants: quotient and derived sizes and order profiles,
    // and the pairing profile (order of [a,b] against orders of a, b)
    if d1.quotient.n != d2.quotient.n || d1.derived.n != d2.derived.n {
        return reject;
    }
    if d1.quotient.order_multiset() != d2.quotient.order_multiset()
        || d1.derived.order_multiset() != d2.derived.order_multiset()
    {
        return reject;
    }
    let profile = |d: &IsoclinismData| {
        let mut prof: Vec<(usize, usize, usize)> = (0..d.quotient.n)
            .flat_map(|i| {
                let d = &d;
                (0..d.quotient.n).map(move |j| {
                    (
                        d.quotient.orders[i],
                        d.quotient.orders[j],
                        d.derived.orders[d.pairing[i * d.quotient.n + j]],
                    )
                })
            })
            .collect();
        prof.sort();
        prof
    };
    if profile(&d1) != profile(&d2) {
        return reject;
    }

    // backtracking search for θ over images of a generating sequence,
    // pruned by incremental commutator-pairing compatibility (which forces
    // φ on commutator values as the search deepens)
    let gens = d1.quotient.generating_sequence();
    let words = d1.quotient.words(&gens);
    let searcher = ThetaSearch {
        d1: &d1,
        d2: &d2,
        gens: &gens,
        words: &words,
    };
    let mut assignment = Vec::new();
    let mut phi: Vec<Option<usize>> = vec![None; d1.derived.n];
    match searcher.dfs(&mut assignment, &mut phi) {
        Some((theta, phi)) => {
            let theta_witness = gens
                .iter()
                .map(|&g| d2.quotient.reps[theta[g]].clone())
                .collect();
            let phi_witness = (0..d1.derived.n)
                .map(|i| (d1.derived.reps[i].clone(), d2.derived.reps[phi[i]].clone()))
                .collect();
            IsoclinismResult {
                isoclinic: true,
                theta_witness: Some(theta_witness),
                phi_witness: Some(phi_witness),
            }
        }
        None => reject,
    }
}

struct ThetaSearch<'a> {
    d1: &'a IsoclinismData,
    d2: &'a IsoclinismData,
    gens: &'a [usize],
    words: &'a [Vec<usize>],
}

impl ThetaSearch<'_> {
    /// Force φ(src) = dst; record the assignment for undo. Fails on conflict
    /// or loss of injectivity.
    fn force(
        phi: &mut [Option<usize>],
        trail: &mut Vec<usize>,
        src: usize,
        dst: usize,
    ) -> bool {
        match phi[src] {
            Some(prev) => prev == dst,
            None => {
                if phi.iter().any(|&v| v == Some(dst)) {
                    return false;
                }
                phi[src] = Some(dst);
                trail.push(src);
                true
            }
        }
    }

    fn dfs(
        &self,
        assignment: &mut Vec<usize>,
        phi: &mut Vec<Option<usize>>,
    ) -> Option<(Vec<usize>, Vec<usize>)> {
        let nq = self.d1.quotient.n;
        if assignment.len() == self.gens.len() {
            return self.check_leaf(assignment, phi);
        }
        let k = assignment.len();
        let want_order = self.d1.quotient.orders[self.gens[k]];
        for cand in 0..nq {
            if self.d2.quotient.orders[cand] != want_order {
                continue;
            }
            let mut trail = Vec::new();
            let mut ok = true;
            for a in 0..=k {
                let (ga, ca) = if a == k {
                    (self.gens[k], cand)
                } else {
                    (self.gens[a], assignment[a])
                };
                let pairs = [
                    (
                        self.d1.pairing[ga * nq + self.gens[k]],
                        self.d2.pairing[ca * nq + cand],
                    ),
                    (
                        self.d1.pairing[self.gens[k] * nq + ga],
                        self.d2.pairing[cand * nq + ca],
                    ),
                ];
                for (src, dst) in pairs {
                    if !Self::force(phi, &mut trail, src, dst) {
                        ok = false;
                        break;
                    }
                }
                if !ok {
                    break;
                }
            }
            if ok {
                assignment.push(cand);
                if let Some(hit) = self.dfs(assignment, phi) {
                    return Some(hit);
                }
                assignment.pop();
            }
            for src in trail {
                phi[src] = None;
            }
        }
        None
    }

    fn check_leaf(
        &self,
        assignment: &[usize],
        phi_partial: &[Option<usize>],
    ) -> Option<(Vec<usize>, Vec<usize>)> {
        let nq = self.d1.quotient.n;
        let id2 = self.d2.quotient.identity_index();
        let theta: Vec<usize> = self
            .words
            .iter()
            .map(|w| {
                w.iter()
                    .fold(id2, |acc, &gi| self.d2.quotient.product(acc, assignment[gi]))
            })
            .collect();
        let mut seen = vec![false; nq];
        for &t in &theta {
            if seen[t] {
                return None;
            }
            seen[t] = true;
        }
        for a in 0..nq {
            for b in 0..nq {
                if theta[self.d1.quotient.product(a, b)]
                    != self.d2.quotient.product(theta[a], theta[b])
                {
                    return None;
                }
            }
        }
        // φ forced on every commutator value
        let nd = self.d1.derived.n;
        let mut phi: Vec<Option<usize>> = phi_partial.to_vec();
        for a in 0..nq {
            for b in 0..nq {
                let src = self.d1.pairing[a * nq + b];
                let dst = self.d2.pairing[theta[a] * nq + theta[b]];
                match phi[src] {
                    None => phi[src] = Some(dst),
                    Some(prev) if prev != dst => return None,
                    _ => {}
                }
            }
        }
        // commutator values generate the derived subgroup: close
        // multiplicatively and check functional consistency
        let id_d1 = self.d1.derived.identity_index();
        let id_d2 = self.d2.derived.identity_index();
        match phi[id_d1] {
            Some(prev) if prev != id_d2 => return None,
            _ => phi[id_d1] = Some(id_d2),
        }
        loop {
            let mut changed = false;
            for a in 0..nd {
                let Some(fa) = phi[a] else { continue };
                for b in 0..nd {
                    let Some(fb) = phi[b] else { continue };
                    let ab = self.d1.derived.product(a, b);
                    let fab = self.d2.derived.product(fa, fb);
                    match phi[ab] {
                        None => {
                            phi[ab] = Some(fab);
                            changed = true;
                        }
                        Some(prev) if prev != fab => return None,
                        _ => {}
                    }
                }
            }
            if !changed {
                break;
            }
        }
        if phi.iter().any(|x| x.is_none()) {
            // commutator values fail to generate the derived subgroup;
            // does not occur for the groups handled here
            return None;
        }
        let phi: Vec<usize> = phi.into_iter().map(|x| x.unwrap()).collect();
        let mut seen = vec![false; nd];
        for &t in &phi {
            if seen[t] {
                return None;
            }
            seen[t] = true;
        }
        // φ must be multiplicative on all of the derived subgroup
        for a in 0..nd {
            for b in 0..nd {
                if phi[self.d1.derived.product(a, b)] != self.d2.derived.product(phi[a], phi[b]) {
                    return None;
                }
            }
        }
        Some((theta, phi))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vec5(a: u64, b: u64, c: u64, d: u64, e: u64) -> PcElement {
        vec![a, b, c, d, e]
    }

    /// Heisenberg group of order 27: [g2,g1] = g3, exponent 3.
    fn heisenberg() -> PcPresentation {
        PcPresentation::new(
            "H27",
            vec![3, 3, 3],
            vec![vec![0, 0, 0], vec![0, 0, 0], vec![0, 0, 0]],
            &[(1, 0, vec![0, 0, 1])],
        )
        .unwrap()
    }

    /// Extraspecial of order 27 and exponent 9: g1^3 = g3.
    fn extraspecial_exp9() -> PcPresentation {
        PcPresentation::new(
            "E27+",
            vec![3, 3, 3],
            vec![vec![0, 0, 1], vec![0, 0, 0], vec![0, 0, 0]],
            &[(1, 0, vec![0, 0, 1])],
        )
        .unwrap()
    }

    fn cyclic9() -> PcPresentation {
        PcPresentation::new(
            "C9",
            vec![3, 3],
            vec![vec![0, 1], vec![0, 0]],
            &[],
        )
        .unwrap()
    }

    fn elementary(n: usize) -> PcPresentation {
        PcPresentation::new(
            &format!("C3^{n}"),
            vec![3; n],
            (0..n).map(|_| vec![0; n]).collect(),
            &[],
        )
        .unwrap()
    }

    /// Φ6-shaped test group: the common relations with trivial extra powers.
    fn phi6_g3() -> PcPresentation {
        PcPresentation::new(
            "243#3",
            vec![3, 3, 3, 3, 3],
            vec![
                vec5(0, 0, 0, 0, 0),
                vec5(0, 0, 0, 0, 0),
                vec5(0, 0, 0, 0, 0),
                vec5(0, 0, 0, 0, 0),
                vec5(0, 0, 0, 0, 0),
            ],
            &[
                (1, 0, vec5(0, 0, 1, 0, 0)),
                (2, 0, vec5(0, 0, 0, 1, 0)),
                (2, 1, vec5(0, 0, 0, 0, 1)),
            ],
        )
        .unwrap()
    }

    #[test]
    fn collect_basic_exchange() {
        // g2 g1 = g1 g2 g3 in the Heisenberg group
        let h = heisenberg();
        let w = h.collect(&[(1, 1), (0, 1)]);
        assert_eq!(w, vec![1, 1, 1]);
        assert_eq!(h.collect(&[]), vec![0, 0, 0]);
    }

    #[test]
    fn power_relation_applied() {
        let e = extraspecial_exp9();
        let cube = e.collect(&[(0, 1), (0, 1), (0, 1)]);
        assert_eq!(cube, vec![0, 0, 1]);
        assert_eq!(e.element_order(&e.generator(0)), 9);
    }

    #[test]
    fn mul_inverse_identity() {
        let g = phi6_g3();
        let all = g.enumerate();
        assert_eq!(all.len(), 243);
        for x in all.iter().step_by(7) {
            assert_eq!(g.mul(x, &g.inv(x)), g.identity());
        }
    }

    #[test]
    fn consistency_of_fixtures() {
        for p in [heisenberg(), extraspecial_exp9(), cyclic9(), elementary(3), phi6_g3()] {
            let rep = p.verify_consistency(200, crate::seed_from_env());
            assert!(rep.passed(), "{}: {:?}", p.label, rep.violations);
        }
    }

    #[test]
    fn broken_presentation_reported() {
        // g1^3 = g2 makes g2 a power of g1, so [g2,g1] = g3 cannot hold:
        // the self power overlap g1·g1^3 = g1^3·g1 fails
        let p = PcPresentation::new(
            "broken",
            vec![3, 3, 3],
            vec![vec![0, 1, 0], vec![0, 0, 0], vec![0, 0, 0]],
            &[(1, 0, vec![0, 0, 1])],
        )
        .unwrap();
        let rep = p.verify_consistency(100, 7);
        assert!(!rep.passed());
    }

    #[test]
    fn structure_heisenberg() {
        let s = structure(&heisenberg());
        assert_eq!(s.order, 27);
        assert_eq!(s.center_order, 3);
        assert_eq!(s.derived_order, 3);
        assert_eq!(s.class, 2);
        assert_eq!(s.exponent, 3);
        assert_eq!(s.abelian_invariants, vec![3, 3]);
    }

    #[test]
    fn structure_phi6_shape() {
        let s = structure(&phi6_g3());
        assert_eq!(s.order, 243);
        assert_eq!(s.center_order, 9);
        assert_eq!(s.center_invariants, vec![3, 3]);
        assert_eq!(s.center_depths, vec![4, 5]);
        assert_eq!(s.derived_order, 27);
        assert_eq!(s.class, 3);
        // 2-generated of order 243, so by the order bound for 2-generated
        // exponent-3 groups the exponent must be 9 even though every
        // generator cubes to the identity
        assert_eq!(s.exponent, 9);
    }

    #[test]
    fn commuting_pairs_abelian() {
        let p = elementary(2);
        assert_eq!(commuting_pairs(&p).len(), 81);
    }

    #[test]
    fn commuting_pairs_crosscheck_centralizers() {
        let p = heisenberg();
        let pairs = commuting_pairs(&p);
        let all = p.enumerate();
        let total: usize = all
            .iter()
            .map(|x| all.iter().filter(|y| p.commutator(x, y) == p.identity()).count())
            .sum();
        assert_eq!(pairs.len(), total);
        // pairs (x, 1) always present
        assert!(all.iter().all(|x| pairs.contains(&(x.clone(), p.identity()))));
    }

    #[test]
    fn commutator_depends_only_on_central_cosets() {
        let p = phi6_g3();
        let s = structure(&p);
        assert_eq!(s.center_depths, vec![4, 5]);
        let mut rng = rand::rngs::StdRng::seed_from_u64(crate::seed_from_env());
        let all = p.enumerate();
        for _ in 0..200 {
            let x = &all[rng.gen_range(0..all.len())];
            let y = &all[rng.gen_range(0..all.len())];
            let z = p.collect(&[(3, rng.gen_range(0..3)), (4, rng.gen_range(0..3))]);
            let w = p.collect(&[(3, rng.gen_range(0..3)), (4, rng.gen_range(0..3))]);
            let lhs = p.commutator(&p.mul(x, &z), &p.mul(y, &w));
            assert_eq!(lhs, p.commutator(x, y));
        }
    }

    #[test]
    fn echelon_membership_matches_brute_force() {
        let p = phi6_g3();
        let g1 = p.generator(0);
        let g3 = p.generator(2);
        let ech = subgroup(&p, &[g1.clone(), g3.clone()]);
        // brute-force closure
        let mut set = vec![p.identity()];
        loop {
            let mut grew = false;
            for x in set.clone() {
                for g in [&g1, &g3] {
                    let y = p.mul(&x, g);
                    if !set.contains(&y) {
                        set.push(y);
                        grew = true;
                    }
                }
            }
            if !grew {
                break;
            }
        }
        assert_eq!(ech.order() as usize, set.len());
        for x in p.enumerate() {
            assert_eq!(ech.contains(&x), set.contains(&x), "element {x:?}");
        }
    }

    #[test]
    fn isoclinic_reflexive() {
        let p = heisenberg();
        let r = is_isoclinic(&p, &p);
        assert!(r.isoclinic);
        assert!(r.theta_witness.is_some());
    }

    #[test]
    fn heisenberg_and_exp9_are_isoclinic() {
        // the two nonabelian groups of order 27 are isoclinic
        let r = is_isoclinic(&heisenberg(), &extraspecial_exp9());
        assert!(r.isoclinic);
    }

    #[test]
    fn abelian_vs_nonabelian_not_isoclinic() {
        let r = is_isoclinic(&heisenberg(), &elementary(3));
        assert!(!r.isoclinic);
    }

    #[test]
    fn abelian_invariants_cyclic9() {
        assert_eq!(cyclic9().abelian_invariants(), vec![9]);
        assert_eq!(elementary(3).abelian_invariants(), vec![3, 3, 3]);
        assert_eq!(extraspecial_exp9().abelian_invariants(), vec![3, 3]);
    }
}
