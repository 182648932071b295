//! Exact linear programming over the rationals.
//!
//! Dense two-phase simplex with Bland's anti-cycling rule. Problems here
//! are small (hull membership, support functions of polytopes with a few
//! constraints), so clarity wins over sparse factorizations.

use crate::error::{Error, Result};
use crate::rational::Rational;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Cmp {
    Ge,
    Le,
    Eq,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Row {
    pub coeffs: Vec<(usize, Rational)>,
    pub cmp: Cmp,
    pub rhs: Rational,
}

/// Minimize `objective . x` subject to `rows` and `x >= 0`.
#[derive(Debug, Clone, Default)]
pub struct Lp {
    n: usize,
    rows: Vec<Row>,
    objective: Vec<(usize, Rational)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LpResult {
    Optimal { value: Rational, x: Vec<Rational> },
    Infeasible,
    Unbounded,
}

impl Lp {
    pub fn new(n: usize) -> Lp {
        Lp { n, rows: Vec::new(), objective: Vec::new() }
    }

    pub fn num_vars(&self) -> usize {
        self.n
    }

    pub fn add_row(&mut self, coeffs: Vec<(usize, Rational)>, cmp: Cmp, rhs: Rational) {
        debug_assert!(coeffs.iter().all(|(j, _)| *j < self.n));
        self.rows.push(Row { coeffs, cmp, rhs });
    }

    pub fn set_objective(&mut self, objective: Vec<(usize, Rational)>) {
        self.objective = objective;
    }

    pub fn minimize(&self) -> LpResult {
        Tableau::build(self).solve(true)
    }

    pub fn feasible_point(&self) -> Option<Vec<Rational>> {
        match Tableau::build(self).solve(false) {
            LpResult::Optimal { x, .. } => Some(x),
            _ => None,
        }
    }

    pub fn is_feasible(&self) -> bool {
        self.feasible_point().is_some()
    }
}

struct Tableau {
    n: usize,
    cols: usize,
    first_artificial: usize,
    t: Vec<Vec<Rational>>,
    rhs: Vec<Rational>,
    basis: Vec<usize>,
    cost: Vec<Rational>,
}

impl Tableau {
    fn build(lp: &Lp) -> Tableau {
        let m = lp.rows.len();
        let n_slack = lp.rows.iter().filter(|r| r.cmp != Cmp::Eq).count();
        let mut norm: Vec<(Vec<Rational>, Cmp, Rational)> = Vec::with_capacity(m);
        for r in &lp.rows {
            let mut dense = vec![Rational::zero(); lp.n];
            for (j, a) in &r.coeffs {
                dense[*j] += a;
            }
            if r.rhs.is_negative() {
                let cmp = match r.cmp {
                    Cmp::Ge => Cmp::Le,
                    Cmp::Le => Cmp::Ge,
                    Cmp::Eq => Cmp::Eq,
                };
                norm.push((dense.iter().map(|a| -a).collect(), cmp, -&r.rhs));
            } else {
                norm.push((dense, r.cmp, r.rhs.clone()));
            }
        }
        let n_art = norm.iter().filter(|(_, c, _)| *c != Cmp::Le).count();
        let first_artificial = lp.n + n_slack;
        let cols = first_artificial + n_art;
        let mut t = Vec::with_capacity(m);
        let mut rhs = Vec::with_capacity(m);
        let mut basis = Vec::with_capacity(m);
        let (mut slack, mut art) = (lp.n, first_artificial);
        for (dense, cmp, b) in norm {
            let mut row = dense;
            row.resize(cols, Rational::zero());
            match cmp {
                Cmp::Le => {
                    row[slack] = Rational::one();
                    basis.push(slack);
                    slack += 1;
                }
                Cmp::Ge => {
                    row[slack] = -Rational::one();
                    slack += 1;
                    row[art] = Rational::one();
                    basis.push(art);
                    art += 1;
                }
                Cmp::Eq => {
                    row[art] = Rational::one();
                    basis.push(art);
                    art += 1;
                }
            }
            t.push(row);
            rhs.push(b);
        }
        let mut cost = vec![Rational::zero(); cols];
        for (j, c) in &lp.objective {
            cost[*j] += c;
        }
        Tableau { n: lp.n, cols, first_artificial, t, rhs, basis, cost }
    }

    fn pivot(&mut self, r: usize, c: usize, d: &mut [Rational], value: &mut Rational) {
        let p = self.t[r][c].clone();
        if !p.is_one() {
            let inv = p.recip();
            for a in self.t[r].iter_mut() {
                if !a.is_zero() {
                    *a = &*a * &inv;
                }
            }
            self.rhs[r] = &self.rhs[r] * &inv;
        }
        let prow = self.t[r].clone();
        let prhs = self.rhs[r].clone();
        let nz: Vec<usize> = (0..self.cols).filter(|&j| !prow[j].is_zero()).collect();
        for i in 0..self.t.len() {
            if i == r || self.t[i][c].is_zero() {
                continue;
            }
            let f = self.t[i][c].clone();
            for &j in &nz {
                let v = &self.t[i][j] - &(&f * &prow[j]);
                self.t[i][j] = v;
            }
            self.rhs[i] = &self.rhs[i] - &(&f * &prhs);
        }
        if !d[c].is_zero() {
            let f = d[c].clone();
            for &j in &nz {
                d[j] = &d[j] - &(&f * &prow[j]);
            }
            *value = &*value + &(&f * &prhs);
        }
        self.basis[r] = c;
    }

    /// Runs simplex iterations on reduced costs `d`; returns false when unbounded.
    fn iterate(&mut self, d: &mut [Rational], value: &mut Rational, allow: usize) -> bool {
        loop {
            let Some(c) = (0..allow).find(|&j| d[j].is_negative()) else {
                return true;
            };
            let mut best: Option<(usize, Rational)> = None;
            for i in 0..self.t.len() {
                if !self.t[i][c].is_positive() {
                    continue;
                }
                let ratio = &self.rhs[i] / &self.t[i][c];
                best = match best {
                    None => Some((i, ratio)),
                    Some((bi, br)) => {
                        if ratio < br || (ratio == br && self.basis[i] < self.basis[bi]) {
                            Some((i, ratio))
                        } else {
                            Some((bi, br))
                        }
                    }
                };
            }
            match best {
                None => return false,
                Some((r, _)) => self.pivot(r, c, d, value),
            }
        }
    }

    fn solve(mut self, optimize: bool) -> LpResult {
        // Phase 1: minimize the sum of artificials.
        let mut d = vec![Rational::zero(); self.cols];
        let mut value = Rational::zero();
        for j in self.first_artificial..self.cols {
            d[j] = Rational::one();
        }
        for i in 0..self.t.len() {
            if self.basis[i] >= self.first_artificial {
                for j in 0..self.cols {
                    if !self.t[i][j].is_zero() {
                        d[j] = &d[j] - &self.t[i][j];
                    }
                }
                value = &value + &self.rhs[i];
            }
        }
        let mut obj = value;
        let fa = self.first_artificial;
        self.iterate(&mut d, &mut obj, fa);
        if obj.is_positive() {
            return LpResult::Infeasible;
        }
        // Drive remaining artificials out of the basis; drop redundant rows.
        let mut i = 0;
        while i < self.t.len() {
            if self.basis[i] >= fa {
                if let Some(c) = (0..fa).find(|&j| !self.t[i][j].is_zero()) {
                    let mut dummy = vec![Rational::zero(); self.cols];
                    let mut dv = Rational::zero();
                    self.pivot(i, c, &mut dummy, &mut dv);
                } else {
                    self.t.remove(i);
                    self.rhs.remove(i);
                    self.basis.remove(i);
                    continue;
                }
            }
            i += 1;
        }
        if !optimize {
            return LpResult::Optimal { value: Rational::zero(), x: self.extract() };
        }
        // Phase 2.
        let mut d: Vec<Rational> = self.cost.clone();
        let mut obj = Rational::zero();
        for i in 0..self.t.len() {
            let cb = self.cost[self.basis[i]].clone();
            if cb.is_zero() {
                continue;
            }
            for j in 0..self.cols {
                if !self.t[i][j].is_zero() {
                    d[j] = &d[j] - &(&cb * &self.t[i][j]);
                }
            }
            obj = &obj + &(&cb * &self.rhs[i]);
        }
        if !self.iterate(&mut d, &mut obj, fa) {
            return LpResult::Unbounded;
        }
        let x = self.extract();
        LpResult::Optimal { value: obj, x }
    }

    fn extract(&self) -> Vec<Rational> {
        let mut x = vec![Rational::zero(); self.n];
        for (i, &b) in self.basis.iter().enumerate() {
            if b < self.n {
                x[b] = self.rhs[i].clone();
            }
        }
        x
    }
}

/// Solves a square system exactly; `None` when singular.
pub fn solve_square(a: &[Vec<Rational>], b: &[Rational]) -> Option<Vec<Rational>> {
    let n = a.len();
    let mut m: Vec<Vec<Rational>> = a
        .iter()
        .zip(b)
        .map(|(row, bi)| {
            let mut r = row.clone();
            r.push(bi.clone());
            r
        })
        .collect();
    for col in 0..n {
        let piv = (col..n).find(|&r| !m[r][col].is_zero())?;
        m.swap(col, piv);
        let inv = m[col][col].recip();
        for v in m[col].iter_mut() {
            *v = &*v * &inv;
        }
        for r in 0..n {
            if r != col && !m[r][col].is_zero() {
                let f = m[r][col].clone();
                for k in col..=n {
                    let v = &m[r][k] - &(&f * &m[col][k]);
                    m[r][k] = v;
                }
            }
        }
    }
    Some(m.into_iter().map(|mut r| r.pop().unwrap()).collect())
}

/// Reduces `[A | b]` to its independent rows. `None` if inconsistent.
fn independent_rows(a: &[Vec<Rational>], b: &[Rational]) -> Option<(Vec<Vec<Rational>>, Vec<Rational>)> {
    let n = a.first().map_or(0, |r| r.len());
    let mut m: Vec<Vec<Rational>> = a
        .iter()
        .zip(b)
        .map(|(row, bi)| {
            let mut r = row.clone();
            r.push(bi.clone());
            r
        })
        .collect();
    let mut rank = 0;
    for col in 0..n {
        let Some(piv) = (rank..m.len()).find(|&r| !m[r][col].is_zero()) else {
            continue;
        };
        m.swap(rank, piv);
        let inv = m[rank][col].recip();
        for v in m[rank].iter_mut() {
            *v = &*v * &inv;
        }
        for r in 0..m.len() {
            if r != rank && !m[r][col].is_zero() {
                let f = m[r][col].clone();
                for k in col..=n {
                    let v = &m[r][k] - &(&f * &m[rank][k]);
                    m[r][k] = v;
                }
            }
        }
        rank += 1;
    }
    if m[rank..].iter().any(|r| !r[n].is_zero()) {
        return None;
    }
    m.truncate(rank);
    let b = m.iter_mut().map(|r| r.pop().unwrap()).collect();
    Some((m, b))
}

fn binomial(n: usize, k: usize) -> Option<usize> {
    let mut acc: usize = 1;
    for i in 0..k.min(n - k.min(n)) {
        acc = acc.checked_mul(n - i)? / (i + 1);
    }
    Some(acc)
}

/// All basic feasible solutions of `{x >= 0 : A x = b}`, deduplicated.
/// These are exactly the vertices of the polytope.
pub fn basic_feasible_solutions(
    a: &[Vec<Rational>],
    b: &[Rational],
    cap: usize,
) -> Result<Vec<Vec<Rational>>> {
    let n = a.first().map_or(0, |r| r.len());
    let Some((a, b)) = independent_rows(a, b) else {
        return Ok(Vec::new());
    };
    let m = a.len();
    if m == 0 {
        return Ok(vec![vec![Rational::zero(); n]]);
    }
    if m > n {
        return Ok(Vec::new());
    }
    match binomial(n, m) {
        Some(k) if k <= cap => {}
        _ => {
            return Err(Error::Explosion {
                what: format!("basis enumeration C({n},{m})"),
                cap,
            })
        }
    }
    let mut out: Vec<Vec<Rational>> = Vec::new();
    let mut idx: Vec<usize> = (0..m).collect();
    loop {
        let sub: Vec<Vec<Rational>> = a
            .iter()
            .map(|row| idx.iter().map(|&j| row[j].clone()).collect())
            .collect();
        if let Some(xb) = solve_square(&sub, &b) {
            if xb.iter().all(|v| !v.is_negative()) {
                let mut x = vec![Rational::zero(); n];
                for (k, &j) in idx.iter().enumerate() {
                    x[j] = xb[k].clone();
                }
                if !out.contains(&x) {
                    out.push(x);
                }
            }
        }
        // Next combination in lexicographic order.
        let mut i = m;
        loop {
            if i == 0 {
                return Ok(out);
            }
            i -= 1;
            if idx[i] < n - m + i {
                idx[i] += 1;
                for k in i + 1..m {
                    idx[k] = idx[k - 1] + 1;
                }
                break;
            }
        }
    }
}
