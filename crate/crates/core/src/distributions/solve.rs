//! Safeguarded one-dimensional Newton-Raphson.
//!
//! Every scalar M-step equation here has a single root on an interval where
//! the residual changes sign once. The solver keeps the tightest bracket seen
//! so far and falls back to bisection (or to halving toward the lower bound,
//! or doubling when no upper bound is known yet) whenever a Newton proposal
//! leaves it.

#[derive(Debug, Clone, Copy)]
pub(crate) struct Root {
    pub x: f64,
    pub residual: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Newton {
    /// Stop once `|f(x)| <= ftol`.
    pub ftol: f64,
    /// Stop once an accepted Newton step is shorter than `xtol`.
    pub xtol: f64,
    pub max_iter: usize,
    /// `true` when `f` increases through its root.
    pub increasing: bool,
    pub lower: f64,
    pub upper: f64,
}

impl Newton {
    pub fn solve(&self, x0: f64, f: impl Fn(f64) -> (f64, f64)) -> Root {
        let mut lo = self.lower;
        let mut hi = self.upper;
        let mut x = x0.clamp(lo, hi);
        if x <= lo || x >= hi {
            x = if hi.is_finite() {
                0.5 * (lo + hi)
            } else {
                lo.max(0.0) + 1.0
            };
        }
        let mut best = Root {
            x,
            residual: f64::INFINITY,
            converged: false,
        };
        for _ in 0..self.max_iter {
            let (fx, dfx) = f(x);
            if fx.abs() < best.residual.abs() || !best.residual.is_finite() {
                best = Root {
                    x,
                    residual: fx,
                    converged: false,
                };
            }
            if fx.abs() <= self.ftol {
                return Root {
                    x,
                    residual: fx,
                    converged: true,
                };
            }
            if (fx < 0.0) == self.increasing {
                lo = x;
            } else {
                hi = x;
            }
            let proposal = x - fx / dfx;
            let next = if proposal.is_finite() && proposal > lo && proposal < hi {
                if (proposal - x).abs() <= self.xtol {
                    return Root {
                        x: proposal,
                        residual: fx,
                        converged: true,
                    };
                }
                proposal
            } else if hi.is_finite() {
                0.5 * (lo + hi)
            } else {
                2.0 * x.max(lo) + 1.0
            };
            if next == x || (hi - lo) <= 4.0 * f64::EPSILON * x.abs() {
                break;
            }
            x = next;
        }
        best
    }
}
