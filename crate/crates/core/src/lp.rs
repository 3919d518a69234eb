//! Small dense two-phase simplex solver with Bland's anti-cycling rule.
//!
//! Problems here have a handful of variables and at most a few dozen
//! constraints, so a full tableau is the simplest exact-enough tool.

const PIVOT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone)]
struct Constraint {
    coeffs: Vec<f64>,
    relation: Relation,
    rhs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<f64>, value: f64 },
    Infeasible,
    Unbounded,
}

/// Maximize `c·x` over free variables `x` subject to linear constraints.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    n: usize,
    objective: Vec<f64>,
    constraints: Vec<Constraint>,
}

impl LinearProgram {
    pub fn maximize(objective: Vec<f64>) -> Self {
        LinearProgram {
            n: objective.len(),
            objective,
            constraints: Vec::new(),
        }
    }

    pub fn constrain(&mut self, coeffs: Vec<f64>, relation: Relation, rhs: f64) -> &mut Self {
        assert_eq!(coeffs.len(), self.n, "constraint arity");
        self.constraints.push(Constraint {
            coeffs,
            relation,
            rhs,
        });
        self
    }

    pub fn solve(&self) -> LpOutcome {
        // Free variables are split as x = x⁺ − x⁻. Column layout:
        // [x⁺ (n) | x⁻ (n) | slack/surplus (one per inequality) | artificial (one per row)]
        let n = self.n;
        let rows = self.constraints.len();
        let n_slack = self
            .constraints
            .iter()
            .filter(|c| c.relation != Relation::Eq)
            .count();
        let art0 = 2 * n + n_slack;
        let cols = art0 + rows;
        let width = cols + 1;
        let mut t = vec![0.0; (rows + 1) * width];
        let mut basis = vec![0usize; rows];
        let mut slack = 2 * n;
        for (r, c) in self.constraints.iter().enumerate() {
            let row = &mut t[r * width..(r + 1) * width];
            for j in 0..n {
                row[j] = c.coeffs[j];
                row[n + j] = -c.coeffs[j];
            }
            match c.relation {
                Relation::Le => {
                    row[slack] = 1.0;
                    slack += 1;
                }
                Relation::Ge => {
                    row[slack] = -1.0;
                    slack += 1;
                }
                Relation::Eq => {}
            }
            row[cols] = c.rhs;
            if c.rhs < 0.0 {
                for v in row.iter_mut() {
                    *v = -*v;
                }
            }
            row[art0 + r] = 1.0;
            basis[r] = art0 + r;
        }

        let mut tab = Tableau {
            t,
            width,
            rows,
            basis,
        };

        // Phase 1: minimize the sum of artificials (maximize the negated sum).
        let mut phase1 = vec![0.0; cols];
        for a in art0..cols {
            phase1[a] = -1.0;
        }
        tab.set_objective(&phase1);
        if tab.run(cols).is_err() {
            return LpOutcome::Infeasible;
        }
        if tab.objective_value() < -1e-8 * (1.0 + tab.rhs_scale()) {
            return LpOutcome::Infeasible;
        }
        // Drive degenerate artificials out of the basis where possible.
        for r in 0..rows {
            if tab.basis[r] >= art0 {
                if let Some(j) = (0..art0).find(|&j| tab.at(r, j).abs() > PIVOT_TOL) {
                    tab.pivot(r, j);
                }
            }
        }

        // Phase 2 over the structural and slack columns only.
        let mut obj = vec![0.0; cols];
        for j in 0..n {
            obj[j] = self.objective[j];
            obj[n + j] = -self.objective[j];
        }
        tab.set_objective(&obj);
        match tab.run(art0) {
            Err(()) => LpOutcome::Unbounded,
            Ok(()) => {
                let mut z = vec![0.0; cols];
                for r in 0..rows {
                    z[tab.basis[r]] = tab.at(r, cols);
                }
                let x: Vec<f64> = (0..n).map(|j| z[j] - z[n + j]).collect();
                let value = x.iter().zip(&self.objective).map(|(a, b)| a * b).sum();
                LpOutcome::Optimal { x, value }
            }
        }
    }
}

struct Tableau {
    t: Vec<f64>,
    width: usize,
    rows: usize,
    basis: Vec<usize>,
}

impl Tableau {
    fn at(&self, r: usize, c: usize) -> f64 {
        self.t[r * self.width + c]
    }

    fn rhs_scale(&self) -> f64 {
        (0..self.rows)
            .map(|r| self.at(r, self.width - 1).abs())
            .fold(0.0, f64::max)
    }

    /// Objective row stores reduced costs `c_B B⁻¹ A − c`; value in the last column.
    fn set_objective(&mut self, c: &[f64]) {
        let w = self.width;
        let obj = self.rows * w;
        for j in 0..w - 1 {
            self.t[obj + j] = -c[j];
        }
        self.t[obj + w - 1] = 0.0;
        for r in 0..self.rows {
            let cb = c[self.basis[r]];
            if cb != 0.0 {
                for j in 0..w {
                    self.t[obj + j] += cb * self.t[r * w + j];
                }
            }
        }
    }

    fn objective_value(&self) -> f64 {
        self.at(self.rows, self.width - 1)
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let w = self.width;
        let p = self.t[r * w + c];
        for j in 0..w {
            self.t[r * w + j] /= p;
        }
        for i in 0..=self.rows {
            if i == r {
                continue;
            }
            let f = self.t[i * w + c];
            if f != 0.0 {
                for j in 0..w {
                    self.t[i * w + j] -= f * self.t[r * w + j];
                }
            }
        }
        self.basis[r] = c;
    }

    /// Bland's rule over the first `active_cols` columns. `Err` means unbounded.
    fn run(&mut self, active_cols: usize) -> Result<(), ()> {
        let rhs = self.width - 1;
        for _ in 0..50_000 {
            let Some(enter) = (0..active_cols).find(|&j| self.at(self.rows, j) < -PIVOT_TOL) else {
                return Ok(());
            };
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.rows {
                let a = self.at(r, enter);
                if a > PIVOT_TOL {
                    let ratio = self.at(r, rhs) / a;
                    leave = match leave {
                        None => Some((r, ratio)),
                        Some((lr, lratio)) => {
                            if ratio < lratio - 1e-12
                                || (ratio <= lratio + 1e-12 && self.basis[r] < self.basis[lr])
                            {
                                Some((r, ratio))
                            } else {
                                Some((lr, lratio))
                            }
                        }
                    };
                }
            }
            match leave {
                None => return Err(()),
                Some((r, _)) => self.pivot(r, enter),
            }
        }
        Err(())
    }
}
