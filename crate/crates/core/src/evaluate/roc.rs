//! Empirical ROC curve over distinct score cutoffs and its upper convex hull.
//!
//! Point `k` of the curve targets the `k` highest distinct-score groups
//! (every customer with score above the cutoff). Point 0 targets nobody and
//! the last point targets everybody. Coordinates are kept as integer counts
//! so that hull construction is exact.

use super::beta::betainc_reg;
use super::ProfitParams;
use crate::error::Result;

/// Customers sharing one distinct score.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreGroup {
    pub score: f64,
    pub churners: u64,
    pub nonchurners: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint {
    pub targeted_churners: u64,
    pub targeted_nonchurners: u64,
    /// Customers with score strictly above this value are targeted.
    pub cutoff: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve {
    points: Vec<RocPoint>,
    churners: u64,
    nonchurners: u64,
}

/// One vertex of the upper convex hull, in targeted fractions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HullVertex {
    /// Fraction of non-churners targeted.
    pub eta_n: f64,
    /// Fraction of churners targeted.
    pub eta_c: f64,
    /// Fraction of all customers targeted.
    pub eta: f64,
    /// Index of the underlying curve point.
    pub point: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RocHull {
    pub vertices: Vec<HullVertex>,
}

/// Largest representable value below `x`.
fn next_below(x: f64) -> f64 {
    x.next_down()
}

impl RocCurve {
    /// `groups` must hold distinct scores in descending order, each group
    /// non-empty.
    pub fn from_groups(groups: &[ScoreGroup]) -> Self {
        debug_assert!(groups.windows(2).all(|w| w[0].score > w[1].score));
        let churners = groups.iter().map(|g| g.churners).sum();
        let nonchurners = groups.iter().map(|g| g.nonchurners).sum();
        let mut points = Vec::with_capacity(groups.len() + 1);
        let (mut c, mut n) = (0u64, 0u64);
        let top = groups.first().map_or(1.0, |g| g.score);
        points.push(RocPoint {
            targeted_churners: 0,
            targeted_nonchurners: 0,
            cutoff: top.max(1.0),
        });
        for (k, g) in groups.iter().enumerate() {
            c += g.churners;
            n += g.nonchurners;
            let cutoff = match groups.get(k + 1) {
                Some(next) => next.score,
                None => next_below(g.score),
            };
            points.push(RocPoint {
                targeted_churners: c,
                targeted_nonchurners: n,
                cutoff,
            });
        }
        RocCurve {
            points,
            churners,
            nonchurners,
        }
    }

    pub fn points(&self) -> &[RocPoint] {
        &self.points
    }

    pub fn churners(&self) -> u64 {
        self.churners
    }

    pub fn nonchurners(&self) -> u64 {
        self.nonchurners
    }

    pub fn total(&self) -> u64 {
        self.churners + self.nonchurners
    }

    pub fn eta_c(&self, p: &RocPoint) -> f64 {
        if self.churners == 0 {
            0.0
        } else {
            p.targeted_churners as f64 / self.churners as f64
        }
    }

    pub fn eta_n(&self, p: &RocPoint) -> f64 {
        if self.nonchurners == 0 {
            0.0
        } else {
            p.targeted_nonchurners as f64 / self.nonchurners as f64
        }
    }

    /// Fraction of all customers targeted at `p`.
    pub fn eta(&self, p: &RocPoint) -> f64 {
        (p.targeted_churners + p.targeted_nonchurners) as f64 / self.total() as f64
    }

    /// Average churn profit per customer at point `p` for acceptance rate
    /// `gamma`.
    pub fn profit(&self, p: &RocPoint, params: &ProfitParams, gamma: f64) -> f64 {
        let (delta, phi) = (params.delta(), params.phi());
        params.clv
            * ((gamma * (1.0 - delta) - phi) * p.targeted_churners as f64
                - (delta + phi) * p.targeted_nonchurners as f64)
            / self.total() as f64
    }

    /// Upper convex hull from "target nobody" to "target everybody".
    /// Collinear points are dropped, so segment slopes strictly decrease.
    pub fn hull(&self) -> RocHull {
        // Scaling each axis by a positive constant keeps turn directions, so
        // raw counts give an exact orientation test.
        let xy = |i: usize| {
            let p = &self.points[i];
            (p.targeted_nonchurners as i128, p.targeted_churners as i128)
        };
        let mut stack: Vec<usize> = Vec::with_capacity(self.points.len());
        for i in 0..self.points.len() {
            while stack.len() >= 2 {
                let (ox, oy) = xy(stack[stack.len() - 2]);
                let (ax, ay) = xy(stack[stack.len() - 1]);
                let (bx, by) = xy(i);
                let cross = (ax - ox) * (by - oy) - (ay - oy) * (bx - ox);
                if cross >= 0 {
                    stack.pop();
                } else {
                    break;
                }
            }
            stack.push(i);
        }
        RocHull {
            vertices: stack
                .into_iter()
                .map(|i| {
                    let p = &self.points[i];
                    HullVertex {
                        eta_n: self.eta_n(p),
                        eta_c: self.eta_c(p),
                        eta: self.eta(p),
                        point: i,
                    }
                })
                .collect(),
        }
    }

    /// Maximum profit at `gamma` over all cutoffs; ties go to the lowest
    /// cutoff (largest campaign). Returns `(profit, point index)`.
    pub fn max_profit(&self, params: &ProfitParams, gamma: f64) -> (f64, usize) {
        let mut best = (f64::NEG_INFINITY, 0);
        for (i, p) in self.points.iter().enumerate().rev() {
            let v = self.profit(p, params, gamma);
            if v > best.0 {
                best = (v, i);
            }
        }
        best
    }

    /// Expected maximum profit over γ ~ Beta(α', β') and the expected
    /// profit-maximizing targeted fraction.
    ///
    /// Each hull vertex is optimal on a γ-interval bounded by the γ at which
    /// the adjacent segments break even. With segment `j` spanning `dx`
    /// non-churners and `dy` churners, the boundary is
    /// `((δ + φ)·dx/dy + φ) / (1 − δ)`; the profit of a vertex is affine in
    /// γ, so each interval integrates in closed form through I_γ(α', β') and
    /// I_γ(α' + 1, β').
    pub fn expected_max_profit(&self, params: &ProfitParams) -> Result<(f64, f64)> {
        if self.churners == 0 {
            return Ok((0.0, 0.0));
        }
        let hull = self.hull();
        let (delta, phi) = (params.delta(), params.phi());
        let (a, b) = (params.alpha, params.beta);
        let mean = a / (a + b);
        let n = self.total() as f64;

        // Breakpoints between consecutive vertices, clamped to [0, 1].
        let breaks: Vec<f64> = hull
            .vertices
            .windows(2)
            .map(|w| {
                let (p, q) = (&self.points[w[0].point], &self.points[w[1].point]);
                let dx = (q.targeted_nonchurners - p.targeted_nonchurners) as f64;
                let dy = (q.targeted_churners - p.targeted_churners) as f64;
                if dy == 0.0 {
                    1.0
                } else {
                    (((delta + phi) * dx / dy + phi) / (1.0 - delta)).clamp(0.0, 1.0)
                }
            })
            .collect();

        let cdfs = |g: f64| -> Result<(f64, f64)> { Ok((betainc_reg(a, b, g)?, betainc_reg(a + 1.0, b, g)?)) };
        let mut empc = 0.0;
        let mut eta = 0.0;
        let mut lower = cdfs(0.0)?;
        let mut lower_g = 0.0;
        for (i, v) in hull.vertices.iter().enumerate() {
            let upper_g = breaks.get(i).copied().unwrap_or(1.0);
            if upper_g <= lower_g {
                continue;
            }
            let upper = cdfs(upper_g)?;
            let mass = upper.0 - lower.0;
            let first_moment = mean * (upper.1 - lower.1);
            let p = &self.points[v.point];
            let c = p.targeted_churners as f64 / n;
            let nc = p.targeted_nonchurners as f64 / n;
            empc += params.clv * (c * ((1.0 - delta) * first_moment - phi * mass) - nc * (delta + phi) * mass);
            eta += v.eta * mass;
            lower = upper;
            lower_g = upper_g;
        }
        Ok((empc.max(0.0), eta.clamp(0.0, 1.0)))
    }
}
