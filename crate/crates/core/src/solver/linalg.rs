//! Exact linear algebra over ℚ: row reduction and Fourier–Motzkin
//! elimination.

use num_traits::{One, Signed, Zero};

use crate::rational::Rational;

#[derive(Debug, Clone, PartialEq)]
pub enum LinearSolution {
    Inconsistent,
    /// Every solution is `particular + Σ θ_j · null_basis[j]`.
    Solved {
        particular: Vec<Rational>,
        null_basis: Vec<Vec<Rational>>,
    },
}

/// Solves `A v = b` where each row is `[a_1, …, a_n, b]`.
pub fn solve(mut rows: Vec<Vec<Rational>>, n: usize) -> LinearSolution {
    let mut pivots: Vec<usize> = Vec::new();
    let mut r = 0;
    for c in 0..n {
        let Some(pr) = (r..rows.len()).find(|&i| !rows[i][c].is_zero()) else {
            continue;
        };
        rows.swap(r, pr);
        let inv = rows[r][c].recip();
        if !inv.is_one() {
            for v in rows[r][c..].iter_mut() {
                *v *= &inv;
            }
        }
        let pivot_row = rows[r].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i == r || row[c].is_zero() {
                continue;
            }
            let f = row[c].clone();
            for (v, p) in row[c..].iter_mut().zip(&pivot_row[c..]) {
                if !p.is_zero() {
                    *v -= &f * p;
                }
            }
        }
        pivots.push(c);
        r += 1;
        if r == rows.len() {
            break;
        }
    }
    if rows[r..].iter().any(|row| !row[n].is_zero()) {
        return LinearSolution::Inconsistent;
    }
    let mut particular = vec![Rational::zero(); n];
    for (i, &c) in pivots.iter().enumerate() {
        particular[c] = rows[i][n].clone();
    }
    let mut is_pivot = vec![false; n];
    for &c in &pivots {
        is_pivot[c] = true;
    }
    let null_basis = (0..n)
        .filter(|&f| !is_pivot[f])
        .map(|f| {
            let mut v = vec![Rational::zero(); n];
            v[f] = Rational::one();
            for (i, &c) in pivots.iter().enumerate() {
                v[c] = -rows[i][f].clone();
            }
            v
        })
        .collect();
    LinearSolution::Solved { particular, null_basis }
}

/// `Σ coeffs_i θ_i + constant ≥ 0`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Inequality {
    pub coeffs: Vec<Rational>,
    pub constant: Rational,
}

impl Inequality {
    fn is_constant(&self) -> bool {
        self.coeffs.iter().all(Zero::is_zero)
    }

    // Scale so that the first non-zero coefficient has magnitude one, which
    // makes duplicates comparable.
    fn normalized(mut self) -> Self {
        if let Some(lead) = self.coeffs.iter().find(|c| !c.is_zero()).map(|c| c.abs()) {
            for c in &mut self.coeffs {
                *c /= &lead;
            }
            self.constant /= &lead;
        }
        self
    }
}

/// A point of `{θ : every inequality holds}`, or `None` when empty.
///
/// Variables are eliminated from the last to the first, then assigned back
/// in order, each to the value of its feasible interval closest to zero.
/// The choice is deterministic and commutes with positive scaling of the
/// constants.
pub fn feasible_point(ineqs: &[Inequality], dim: usize) -> Option<Vec<Rational>> {
    let mut levels: Vec<Vec<Inequality>> = Vec::with_capacity(dim + 1);
    let mut current: Vec<Inequality> = dedup(ineqs.iter().cloned().map(Inequality::normalized).collect());
    for var in (0..dim).rev() {
        levels.push(current.clone());
        let (mut lower, mut upper, mut rest) = (Vec::new(), Vec::new(), Vec::new());
        for ineq in current {
            let c = &ineq.coeffs[var];
            if c.is_positive() {
                lower.push(ineq);
            } else if c.is_negative() {
                upper.push(ineq);
            } else {
                rest.push(ineq);
            }
        }
        for lo in &lower {
            for up in &upper {
                // Positive combination cancelling `var`.
                let (a, b) = (lo.coeffs[var].clone(), -up.coeffs[var].clone());
                let coeffs = lo.coeffs.iter().zip(&up.coeffs).map(|(x, y)| x * &b + y * &a).collect();
                rest.push(
                    Inequality {
                        coeffs,
                        constant: &lo.constant * &b + &up.constant * &a,
                    }
                    .normalized(),
                );
            }
        }
        current = dedup(rest);
    }
    if current.iter().any(|i| i.is_constant() && i.constant.is_negative()) {
        return None;
    }
    let mut point = vec![Rational::zero(); dim];
    for var in 0..dim {
        // levels[dim - 1 - var] still contains `var` and only earlier ones
        // have been fixed.
        let constraints = &levels[dim - 1 - var];
        let mut lo: Option<Rational> = None;
        let mut hi: Option<Rational> = None;
        for ineq in constraints {
            let c = &ineq.coeffs[var];
            if c.is_zero() {
                continue;
            }
            let fixed: Rational = ineq.constant.clone()
                + (0..var).map(|j| &ineq.coeffs[j] * &point[j]).sum::<Rational>();
            let bound = -fixed / c;
            if c.is_positive() {
                lo = Some(lo.map_or(bound.clone(), |l| l.max(bound)));
            } else {
                hi = Some(hi.map_or(bound.clone(), |h| h.min(bound)));
            }
        }
        let zero = Rational::zero();
        point[var] = match (lo, hi) {
            (Some(l), _) if l > zero => l,
            (_, Some(h)) if h < zero => h,
            _ => zero,
        };
    }
    Some(point)
}

fn dedup(mut v: Vec<Inequality>) -> Vec<Inequality> {
    v.retain(|i| !(i.is_constant() && !i.constant.is_negative()));
    let mut seen = std::collections::HashSet::new();
    v.retain(|i| seen.insert(i.clone()));
    v
}
