//! Dense two-phase primal simplex for small standard-form linear programs:
//!
//! ```text
//! minimize    c' x
//! subject to  A x = b,  x >= 0
//! ```
//!
//! Pivoting uses Bland's rule throughout, so heavily degenerate programs
//! (the feasibility checks built on top are exactly that) cannot cycle.
//! Alongside the primal solution the solver reports the simplex multipliers
//! of the final basis, which are the optimal dual variables.

use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::{cast, Scalar};

#[derive(Debug, Clone)]
pub struct StandardLp<F: Scalar> {
    /// Row-major constraint matrix, `rows x vars`.
    pub a: Vec<F>,
    pub rows: usize,
    pub vars: usize,
    pub b: Vec<F>,
    pub c: Vec<F>,
}

#[derive(Debug, Clone)]
pub enum LpOutcome<F: Scalar> {
    Optimal {
        x: Vec<F>,
        value: F,
        /// Simplex multipliers `y` of the final basis: `y' A <= c'` with
        /// equality on basic columns; the dual optimum.
        multipliers: Vec<F>,
    },
    Unbounded,
    Infeasible,
}

const FEAS_EPS: f64 = 1e-9;

struct Tableau<F: Scalar> {
    // rows x (cols + 1), the last column is the rhs
    t: Vec<F>,
    rows: usize,
    cols: usize,
    basis: Vec<usize>,
}

impl<F: Scalar> Tableau<F> {
    fn at(&self, r: usize, c: usize) -> F {
        self.t[r * (self.cols + 1) + c]
    }

    fn rhs(&self, r: usize) -> F {
        self.at(r, self.cols)
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let width = self.cols + 1;
        let d = self.at(pr, pc);
        for c in 0..width {
            let v = self.t[pr * width + c] / d;
            self.t[pr * width + c] = v;
        }
        for r in 0..self.rows {
            if r == pr {
                continue;
            }
            let f = self.at(r, pc);
            if f == F::zero() {
                continue;
            }
            for c in 0..width {
                let v = self.t[pr * width + c];
                self.t[r * width + c] = self.t[r * width + c] - f * v;
            }
        }
        self.basis[pr] = pc;
    }

    /// Run Bland-rule simplex on the given objective coefficients (to be
    /// minimized over the current basic feasible tableau). `active` limits
    /// the columns eligible to enter.
    fn optimize(&mut self, cost: &[F], active: usize, max_pivots: usize) -> PhaseEnd {
        let eps = cast::<F>(1e-11);
        for _ in 0..max_pivots {
            // reduced costs under the current basis
            let mut enter = None;
            for j in 0..active {
                if self.basis.contains(&j) {
                    continue;
                }
                let mut red = cost[j];
                for r in 0..self.rows {
                    red = red - cost[self.basis[r]] * self.at(r, j);
                }
                if red < -eps {
                    enter = Some(j);
                    break; // Bland: smallest improving index
                }
            }
            let Some(j) = enter else {
                return PhaseEnd::Optimal;
            };
            // ratio test, Bland tie-break on the leaving basic variable index
            let mut leave: Option<(usize, F)> = None;
            for r in 0..self.rows {
                let a = self.at(r, j);
                if a > eps {
                    let ratio = self.rhs(r) / a;
                    match leave {
                        None => leave = Some((r, ratio)),
                        Some((lr, lratio)) => {
                            if ratio < lratio - eps
                                || (ratio < lratio + eps && self.basis[r] < self.basis[lr])
                            {
                                leave = Some((r, ratio));
                            }
                        }
                    }
                }
            }
            let Some((pr, _)) = leave else {
                return PhaseEnd::Unbounded;
            };
            self.pivot(pr, j);
        }
        // Bland's rule terminates in finitely many pivots; hitting the cap
        // means the budget was too small for the problem size.
        PhaseEnd::Budget
    }
}

enum PhaseEnd {
    Optimal,
    Unbounded,
    Budget,
}

/// Solve a standard-form LP. `max_pivots` caps the total pivot count per
/// phase; a few thousand is plenty for the programs built in this crate.
pub fn solve<F: Scalar>(lp: &StandardLp<F>, max_pivots: usize) -> Result<LpOutcome<F>> {
    let rows = lp.rows;
    let vars = lp.vars;
    assert_eq!(lp.a.len(), rows * vars);
    assert_eq!(lp.b.len(), rows);
    assert_eq!(lp.c.len(), vars);

    // phase 1 tableau: [A | I_art | b], with rows flipped so b >= 0
    let total = vars + rows;
    let width = total + 1;
    let mut t = vec![F::zero(); rows * width];
    for r in 0..rows {
        let flip = lp.b[r] < F::zero();
        for j in 0..vars {
            let v = lp.a[r * vars + j];
            t[r * width + j] = if flip { -v } else { v };
        }
        t[r * width + vars + r] = F::one();
        t[r * width + total] = if flip { -lp.b[r] } else { lp.b[r] };
    }
    let mut tab = Tableau {
        t,
        rows,
        cols: total,
        basis: (vars..total).collect(),
    };

    let mut phase1_cost = vec![F::zero(); total];
    for j in vars..total {
        phase1_cost[j] = F::one();
    }
    match tab.optimize(&phase1_cost, total, max_pivots) {
        PhaseEnd::Optimal => {}
        PhaseEnd::Unbounded => return Err(Error::LpFailure("phase 1 reported unbounded".into())),
        PhaseEnd::Budget => {
            return Err(Error::LpFailure("phase 1 exceeded the pivot budget".into()))
        }
    }
    let mut infeas = F::zero();
    for r in 0..rows {
        if tab.basis[r] >= vars {
            infeas = infeas + tab.rhs(r);
        }
    }
    if infeas > cast(FEAS_EPS) {
        return Ok(LpOutcome::Infeasible);
    }
    // drive leftover artificials out of the basis where possible
    for r in 0..rows {
        if tab.basis[r] >= vars {
            let mut pivoted = false;
            for j in 0..vars {
                if tab.at(r, j).abs() > cast(1e-9) {
                    tab.pivot(r, j);
                    pivoted = true;
                    break;
                }
            }
            if !pivoted {
                // redundant row; leave the artificial basic at zero
                continue;
            }
        }
    }

    // phase 2 on the original columns; artificials cannot re-enter
    // (`active = vars`) and any left basic on redundant rows sit at zero
    // with zero cost.
    let mut phase2_cost = vec![F::zero(); total];
    phase2_cost[..vars].copy_from_slice(&lp.c);
    match tab.optimize(&phase2_cost, vars, max_pivots) {
        PhaseEnd::Optimal => {}
        PhaseEnd::Unbounded => return Ok(LpOutcome::Unbounded),
        PhaseEnd::Budget => {
            return Err(Error::LpFailure("phase 2 exceeded the pivot budget".into()))
        }
    }

    let mut x = vec![F::zero(); vars];
    for r in 0..rows {
        if tab.basis[r] < vars {
            x[tab.basis[r]] = tab.rhs(r);
        }
    }
    let value: F = lp.c.iter().zip(&x).map(|(&ci, &xi)| ci * xi).sum();

    // multipliers: solve B' y = c_B on the original (unflipped) system
    let mut bmat = vec![F::zero(); rows * rows];
    let mut cb = vec![F::zero(); rows];
    for (r, &col) in tab.basis.iter().enumerate() {
        for i in 0..rows {
            let v = if col < vars {
                lp.a[i * vars + col]
            } else if col - vars == i {
                // artificial basic at zero on a redundant row
                F::one()
            } else {
                F::zero()
            };
            // B' row r, column i
            bmat[r * rows + i] = v;
        }
        cb[r] = if col < vars { lp.c[col] } else { F::zero() };
    }
    let multipliers =
        linalg::solve(&bmat, rows, &cb, cast(1e-13)).unwrap_or_else(|| vec![F::nan(); rows]);

    Ok(LpOutcome::Optimal {
        x,
        value,
        multipliers,
    })
}
