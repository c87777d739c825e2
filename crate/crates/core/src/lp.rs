//! Exact linear programming over rationals: a dense two-phase simplex with
//! Bland's rule. Problems here are small (transport plans between
//! distributions with a handful of support points), so a dense tableau of
//! big rationals is fast enough and never rounds.

use crate::rational::Rational;
use num_traits::{Signed, Zero};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone)]
pub struct Constraint {
    /// Sparse coefficients `(variable, value)`.
    pub coeffs: Vec<(usize, Rational)>,
    pub relation: Relation,
    pub rhs: Rational,
}

/// Minimize `objective . x` subject to `constraints` and `x >= 0`.
#[derive(Debug, Clone, Default)]
pub struct LinearProgram {
    pub num_vars: usize,
    pub objective: Vec<Rational>,
    pub constraints: Vec<Constraint>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LpOutcome {
    Optimal { x: Vec<Rational>, value: Rational },
    Infeasible,
    Unbounded,
}

impl LinearProgram {
    pub fn new(num_vars: usize) -> Self {
        LinearProgram { num_vars, objective: vec![Rational::zero(); num_vars], constraints: Vec::new() }
    }

    pub fn add(&mut self, coeffs: Vec<(usize, Rational)>, relation: Relation, rhs: Rational) {
        self.constraints.push(Constraint { coeffs, relation, rhs });
    }

    pub fn minimize(&self) -> LpOutcome {
        Tableau::build(self).solve(&self.objective)
    }

    /// Whether the constraints admit any solution.
    pub fn is_feasible(&self) -> bool {
        let mut lp = self.clone();
        lp.objective = vec![Rational::zero(); self.num_vars];
        matches!(lp.minimize(), LpOutcome::Optimal { .. })
    }
}

struct Tableau {
    rows: Vec<Vec<Rational>>,
    basis: Vec<usize>,
    /// Columns `[0, n)` are the program's variables, then slacks, then
    /// artificials starting at `first_artificial`.
    n: usize,
    first_artificial: usize,
    cols: usize,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Tableau {
        let n = lp.num_vars;
        let mut dense = Vec::with_capacity(lp.constraints.len());
        for c in &lp.constraints {
            let mut row = vec![Rational::zero(); n];
            for (j, v) in &c.coeffs {
                row[*j] += v;
            }
            let (mut rel, mut rhs) = (c.relation, c.rhs.clone());
            if rhs.is_negative() {
                row.iter_mut().for_each(|v| *v = -v.clone());
                rhs = -rhs;
                rel = match rel {
                    Relation::Le => Relation::Ge,
                    Relation::Ge => Relation::Le,
                    Relation::Eq => Relation::Eq,
                };
            }
            dense.push((row, rel, rhs));
        }
        let slacks = dense.iter().filter(|(_, r, _)| *r != Relation::Eq).count();
        let artificials = dense.iter().filter(|(_, r, _)| *r != Relation::Le).count();
        let first_artificial = n + slacks;
        let cols = first_artificial + artificials;
        let (mut s, mut a) = (n, first_artificial);
        let mut rows = Vec::with_capacity(dense.len());
        let mut basis = Vec::with_capacity(dense.len());
        for (coeffs, rel, rhs) in dense {
            let mut row = coeffs;
            row.resize(cols + 1, Rational::zero());
            match rel {
                Relation::Le => {
                    row[s] = Rational::from_integer(1.into());
                    basis.push(s);
                    s += 1;
                }
                Relation::Ge => {
                    row[s] = Rational::from_integer((-1).into());
                    row[a] = Rational::from_integer(1.into());
                    basis.push(a);
                    s += 1;
                    a += 1;
                }
                Relation::Eq => {
                    row[a] = Rational::from_integer(1.into());
                    basis.push(a);
                    a += 1;
                }
            }
            row[cols] = rhs;
            rows.push(row);
        }
        Tableau { rows, basis, n, first_artificial, cols }
    }

    fn reduced_costs(&self, cost: &[Rational]) -> Vec<Rational> {
        let mut z: Vec<Rational> = (0..=self.cols).map(|j| cost.get(j).cloned().unwrap_or_default()).collect();
        z[self.cols] = Rational::zero();
        for (r, &b) in self.basis.iter().enumerate() {
            let cb = cost.get(b).cloned().unwrap_or_default();
            if cb.is_zero() {
                continue;
            }
            for (j, v) in self.rows[r].iter().enumerate() {
                if !v.is_zero() {
                    z[j] -= &cb * v;
                }
            }
        }
        z
    }

    fn pivot(&mut self, r: usize, j: usize, obj: &mut [Rational]) {
        let p = self.rows[r][j].clone();
        for v in self.rows[r].iter_mut() {
            if !v.is_zero() {
                *v /= &p;
            }
        }
        let pivot_row = self.rows[r].clone();
        let eliminate = |row: &mut [Rational]| {
            let f = row[j].clone();
            if f.is_zero() {
                return;
            }
            for (k, v) in pivot_row.iter().enumerate() {
                if !v.is_zero() {
                    row[k] -= &f * v;
                }
            }
        };
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i != r {
                eliminate(row);
            }
        }
        eliminate(obj);
        self.basis[r] = j;
    }

    /// Bland's rule iterations on columns `< limit`. Returns false if unbounded.
    fn iterate(&mut self, obj: &mut [Rational], limit: usize) -> bool {
        loop {
            let Some(j) = (0..limit).find(|&j| obj[j].is_negative()) else {
                return true;
            };
            let mut best: Option<(usize, Rational)> = None;
            for (r, row) in self.rows.iter().enumerate() {
                if !row[j].is_positive() {
                    continue;
                }
                let ratio = &row[self.cols] / &row[j];
                let better = match &best {
                    None => true,
                    Some((br, bv)) => ratio < *bv || (ratio == *bv && self.basis[r] < self.basis[*br]),
                };
                if better {
                    best = Some((r, ratio));
                }
            }
            let Some((r, _)) = best else {
                return false;
            };
            self.pivot(r, j, obj);
        }
    }

    fn solve(mut self, objective: &[Rational]) -> LpOutcome {
        if self.first_artificial < self.cols {
            let mut phase1 = vec![Rational::zero(); self.cols];
            for c in phase1.iter_mut().skip(self.first_artificial) {
                *c = Rational::from_integer(1.into());
            }
            let mut obj = self.reduced_costs(&phase1);
            self.iterate(&mut obj, self.cols);
            if !obj[self.cols].is_zero() {
                return LpOutcome::Infeasible;
            }
            let mut r = 0;
            while r < self.rows.len() {
                if self.basis[r] >= self.first_artificial {
                    match (0..self.first_artificial).find(|&j| !self.rows[r][j].is_zero()) {
                        Some(j) => self.pivot(r, j, &mut obj),
                        None => {
                            self.rows.remove(r);
                            self.basis.remove(r);
                            continue;
                        }
                    }
                }
                r += 1;
            }
        }
        let mut obj = self.reduced_costs(objective);
        if !self.iterate(&mut obj, self.first_artificial) {
            return LpOutcome::Unbounded;
        }
        let mut x = vec![Rational::zero(); self.n];
        for (r, &b) in self.basis.iter().enumerate() {
            if b < self.n {
                x[b] = self.rows[r][self.cols].clone();
            }
        }
        let value = x.iter().zip(objective).map(|(a, b)| a * b).sum();
        LpOutcome::Optimal { x, value }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    #[test]
    fn small_optimum() {
        // min -x - y  s.t.  x + 2y <= 4, 3x + y <= 6
        let mut lp = LinearProgram::new(2);
        lp.objective = vec![int(-1), int(-1)];
        lp.add(vec![(0, int(1)), (1, int(2))], Relation::Le, int(4));
        lp.add(vec![(0, int(3)), (1, int(1))], Relation::Le, int(6));
        match lp.minimize() {
            LpOutcome::Optimal { x, value } => {
                assert_eq!(x, vec![ratio(8, 5), ratio(6, 5)]);
                assert_eq!(value, ratio(-14, 5));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn equalities_and_redundancy() {
        // x + y = 1, x + y = 1 (redundant), x >= 1/3; min y
        let mut lp = LinearProgram::new(2);
        lp.objective = vec![int(0), int(1)];
        lp.add(vec![(0, int(1)), (1, int(1))], Relation::Eq, int(1));
        lp.add(vec![(0, int(1)), (1, int(1))], Relation::Eq, int(1));
        lp.add(vec![(0, int(1))], Relation::Ge, ratio(1, 3));
        assert_eq!(lp.minimize(), LpOutcome::Optimal { x: vec![int(1), int(0)], value: int(0) });
    }

    #[test]
    fn infeasible_and_unbounded() {
        let mut lp = LinearProgram::new(1);
        lp.add(vec![(0, int(1))], Relation::Le, int(1));
        lp.add(vec![(0, int(1))], Relation::Ge, int(2));
        assert_eq!(lp.minimize(), LpOutcome::Infeasible);
        let mut lp = LinearProgram::new(1);
        lp.objective = vec![int(-1)];
        lp.add(vec![(0, int(1))], Relation::Ge, int(2));
        assert_eq!(lp.minimize(), LpOutcome::Unbounded);
    }

    #[test]
    fn negative_rhs_is_flipped() {
        // -x <= -2  means x >= 2
        let mut lp = LinearProgram::new(1);
        lp.objective = vec![int(1)];
        lp.add(vec![(0, int(-1))], Relation::Le, int(-2));
        assert_eq!(lp.minimize(), LpOutcome::Optimal { x: vec![int(2)], value: int(2) });
    }
}
