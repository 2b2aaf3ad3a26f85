//! Exact Gauss–Jordan elimination over the complex rationals.

use num_traits::Zero;

use crate::exactnum::ComplexRational;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SolveError {
    /// Some row reduces to `0 = c` with `c != 0`; `row` is the original index.
    Inconsistent { row: usize },
    /// The system has free unknowns; `rank < unknowns`.
    Underdetermined { rank: usize, unknowns: usize },
}

/// Solves `rows * x = rhs` exactly, requiring a unique solution.
pub fn solve_unique(
    mut rows: Vec<Vec<ComplexRational>>,
    mut rhs: Vec<ComplexRational>,
    unknowns: usize,
) -> Result<Vec<ComplexRational>, SolveError> {
    debug_assert_eq!(rows.len(), rhs.len());
    let mut origin: Vec<usize> = (0..rows.len()).collect();
    let mut pivot_cols = Vec::new();
    let mut r = 0;
    for col in 0..unknowns {
        let Some(p) = (r..rows.len()).find(|&i| !rows[i][col].is_zero()) else {
            continue;
        };
        rows.swap(r, p);
        rhs.swap(r, p);
        origin.swap(r, p);
        let inv = <ComplexRational as num_traits::One>::one() / &rows[r][col];
        for v in rows[r].iter_mut() {
            *v *= &inv;
        }
        rhs[r] *= &inv;
        for i in 0..rows.len() {
            if i == r || rows[i][col].is_zero() {
                continue;
            }
            let factor = rows[i][col].clone();
            for j in col..unknowns {
                if !rows[r][j].is_zero() {
                    let delta = &factor * &rows[r][j];
                    rows[i][j] -= delta;
                }
            }
            let delta = &factor * &rhs[r];
            rhs[i] -= delta;
        }
        pivot_cols.push(col);
        r += 1;
        if r == rows.len() {
            break;
        }
    }
    if let Some(i) = (r..rows.len()).find(|&i| !rhs[i].is_zero()) {
        return Err(SolveError::Inconsistent { row: origin[i] });
    }
    if r < unknowns {
        return Err(SolveError::Underdetermined { rank: r, unknowns });
    }
    let mut x = vec![ComplexRational::zero(); unknowns];
    for (i, &c) in pivot_cols.iter().enumerate() {
        x[c] = rhs[i].clone();
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactnum::{int, rat, real};

    fn c(n: i64) -> ComplexRational {
        real(int(n))
    }

    #[test]
    fn unique_solution() {
        let rows = vec![vec![c(2), c(1)], vec![c(1), c(3)], vec![c(3), c(4)]];
        let rhs = vec![c(3), c(4), c(7)];
        let x = solve_unique(rows, rhs, 2).unwrap();
        assert_eq!(x, vec![c(1), c(1)]);
    }

    #[test]
    fn inconsistent_and_underdetermined() {
        let rows = vec![vec![c(1), c(1)], vec![c(2), c(2)]];
        assert!(matches!(
            solve_unique(rows.clone(), vec![c(1), c(3)], 2),
            Err(SolveError::Inconsistent { .. })
        ));
        assert!(matches!(
            solve_unique(rows, vec![c(1), c(2)], 2),
            Err(SolveError::Underdetermined { rank: 1, unknowns: 2 })
        ));
        let x = solve_unique(vec![vec![c(3)]], vec![c(1)], 1).unwrap();
        assert_eq!(x, vec![real(rat(1, 3))]);
    }
}
