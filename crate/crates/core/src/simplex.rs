//! Dense two-phase simplex with Bland's rule.
//!
//! Meant for the small exact LPs used as test oracles, not for scale.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};

pub const TOL: f64 = 1e-9;
pub const PIVOT_CAP: usize = 200_000;

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub value: f64,
    pub x: Vec<f64>,
}

struct Tableau {
    /// `rows × (cols + 1)`, last column is the right-hand side.
    t: Vec<Vec<f64>>,
    basis: Vec<usize>,
    cols: usize,
    pivots: usize,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.t[r][c];
        for v in self.t[r].iter_mut() {
            *v /= p;
        }
        let row = self.t[r].clone();
        for (i, other) in self.t.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = other[c];
            if f != 0.0 {
                for (o, v) in other.iter_mut().zip(&row) {
                    *o -= f * v;
                }
            }
        }
        self.basis[r] = c;
        self.pivots += 1;
    }

    /// Minimize `cost · x` over the current feasible basis, only letting
    /// columns with `allowed[j]` enter.
    fn optimize(&mut self, cost: &[f64], allowed: &[bool]) -> Result<()> {
        let rhs = self.cols;
        loop {
            if self.pivots > PIVOT_CAP {
                return Err(Error::SimplexIterationCap(PIVOT_CAP));
            }
            // reduced costs c_j − c_B B⁻¹ A_j, read off the tableau
            let mut entering = None;
            for j in 0..self.cols {
                if !allowed[j] || self.basis.contains(&j) {
                    continue;
                }
                let mut rc = cost[j];
                for (i, &b) in self.basis.iter().enumerate() {
                    rc -= cost[b] * self.t[i][j];
                }
                if rc < -TOL {
                    entering = Some(j);
                    break;
                }
            }
            let Some(c) = entering else { return Ok(()) };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.t.len() {
                let a = self.t[i][c];
                if a > TOL {
                    let ratio = self.t[i][rhs] / a;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((li, lr)) => {
                            if ratio < lr - TOL
                                || (ratio <= lr + TOL && self.basis[i] < self.basis[li])
                            {
                                Some((i, ratio))
                            } else {
                                Some((li, lr))
                            }
                        }
                    };
                }
            }
            match leave {
                Some((r, _)) => self.pivot(r, c),
                None => return Err(invalid("linear program is unbounded")),
            }
        }
    }
}

/// Solve `min c·x` subject to `A x = b`, `x ≥ 0`.
pub fn minimize(a: &[Vec<f64>], b: &[f64], c: &[f64]) -> Result<LpSolution> {
    let m = a.len();
    let n = c.len();
    if b.len() != m || a.iter().any(|r| r.len() != n) {
        return Err(invalid("inconsistent LP dimensions"));
    }
    // phase 1 tableau with one artificial per row, rows sign-normalized so b ≥ 0
    let cols = n + m;
    let mut t = Vec::with_capacity(m);
    for i in 0..m {
        let s = if b[i] < 0.0 { -1.0 } else { 1.0 };
        let mut row = vec![0.0; cols + 1];
        for j in 0..n {
            row[j] = s * a[i][j];
        }
        row[n + i] = 1.0;
        row[cols] = s * b[i];
        t.push(row);
    }
    let mut tab = Tableau {
        t,
        basis: (n..n + m).collect(),
        cols,
        pivots: 0,
    };
    let mut phase1 = vec![0.0; cols];
    phase1[n..].iter_mut().for_each(|v| *v = 1.0);
    tab.optimize(&phase1, &vec![true; cols])?;
    let infeas: f64 = tab
        .basis
        .iter()
        .enumerate()
        .filter(|(_, &bj)| bj >= n)
        .map(|(i, _)| tab.t[i][cols])
        .sum();
    if infeas > 1e-7 {
        return Err(Error::Infeasible);
    }
    // drive remaining artificials out of the basis; drop redundant rows
    let mut i = 0;
    while i < tab.t.len() {
        if tab.basis[i] >= n {
            match (0..n).find(|&j| tab.t[i][j].abs() > TOL && !tab.basis.contains(&j)) {
                Some(j) => {
                    tab.pivot(i, j);
                    i += 1;
                }
                None => {
                    tab.t.remove(i);
                    tab.basis.remove(i);
                }
            }
        } else {
            i += 1;
        }
    }
    let mut cost = vec![0.0; cols];
    cost[..n].copy_from_slice(c);
    let mut allowed = vec![true; cols];
    allowed[n..].iter_mut().for_each(|v| *v = false);
    tab.optimize(&cost, &allowed)?;
    let mut x = vec![0.0; n];
    for (i, &bj) in tab.basis.iter().enumerate() {
        if bj < n {
            x[bj] = tab.t[i][cols];
        }
    }
    let value = x.iter().zip(c).map(|(a, b)| a * b).sum();
    Ok(LpSolution { value, x })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_lp() {
        // min -x - y, x + 2y + s1 = 4, 3x + y + s2 = 6 → optimum at (8/5, 6/5)
        let a = vec![vec![1.0, 2.0, 1.0, 0.0], vec![3.0, 1.0, 0.0, 1.0]];
        let sol = minimize(&a, &[4.0, 6.0], &[-1.0, -1.0, 0.0, 0.0]).unwrap();
        assert!((sol.value + 2.8).abs() < 1e-12);
        assert!((sol.x[0] - 1.6).abs() < 1e-12 && (sol.x[1] - 1.2).abs() < 1e-12);
    }

    #[test]
    fn redundant_and_infeasible() {
        let a = vec![vec![1.0, 1.0], vec![2.0, 2.0]];
        let sol = minimize(&a, &[1.0, 2.0], &[1.0, 2.0]).unwrap();
        assert!((sol.value - 1.0).abs() < 1e-12);
        assert!(matches!(
            minimize(&a, &[1.0, 3.0], &[1.0, 2.0]),
            Err(Error::Infeasible)
        ));
    }

    #[test]
    fn transport_problem() {
        // 2×2 transport: supplies (0.5, 0.5), demands (0.3, 0.7), cost |i − j|
        let a = vec![
            vec![1.0, 1.0, 0.0, 0.0],
            vec![0.0, 0.0, 1.0, 1.0],
            vec![1.0, 0.0, 1.0, 0.0],
        ];
        let sol = minimize(&a, &[0.5, 0.5, 0.3], &[0.0, 1.0, 1.0, 0.0]).unwrap();
        assert!((sol.value - 0.2).abs() < 1e-12);
    }
}
