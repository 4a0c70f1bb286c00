//! Exact linear algebra over the expression field.
//!
//! Pivots are chosen by canonical nonzeroness, which in the fraction field is
//! genuine invertibility, so ranks and solutions are exact (generic over the
//! chart domain; callers substitute point coordinates first for pointwise
//! questions).

use alloc::vec::Vec;

use crate::expr::{Expr, ExprError};
use crate::surd::Surd;

/// Row-reduces `rows` in place (augmented or not) and returns pivot columns.
/// Only the first `cols` columns are eligible as pivots.
fn rref(rows: &mut [Vec<Expr>], cols: usize) -> Result<Vec<usize>, ExprError> {
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..rows.len()).find(|i| !rows[*i][c].is_zero_expr()) else {
            continue;
        };
        rows.swap(r, p);
        let inv = rows[r][c].recip()?;
        for x in rows[r].iter_mut() {
            *x = x.mul(&inv);
        }
        for i in 0..rows.len() {
            if i == r || rows[i][c].is_zero_expr() {
                continue;
            }
            let factor = rows[i][c].clone();
            let (pivot_row, row) = if i < r {
                let (a, b) = rows.split_at_mut(r);
                (&b[0], &mut a[i])
            } else {
                let (a, b) = rows.split_at_mut(i);
                (&a[r], &mut b[0])
            };
            for (x, p) in row.iter_mut().zip(pivot_row.iter()) {
                *x = x.sub(&p.mul(&factor));
            }
        }
        pivots.push(c);
        r += 1;
        if r == rows.len() {
            break;
        }
    }
    Ok(pivots)
}

/// Rank of the matrix as a map of vector spaces over the expression field.
pub fn rank(a: &[Vec<Expr>]) -> Result<usize, ExprError> {
    if a.is_empty() {
        return Ok(0);
    }
    let cols = a[0].len();
    let mut rows: Vec<Vec<Expr>> = a.to_vec();
    Ok(rref(&mut rows, cols)?.len())
}

/// Solves `A x = b`. Returns `None` when inconsistent; free variables are
/// set to zero, so the result is one exact solution, not the general one.
pub fn solve(a: &[Vec<Expr>], b: &[Expr]) -> Result<Option<Vec<Expr>>, ExprError> {
    assert_eq!(a.len(), b.len(), "matrix and rhs row counts differ");
    if a.is_empty() {
        return Ok(Some(Vec::new()));
    }
    let cols = a[0].len();
    let mut rows: Vec<Vec<Expr>> = a
        .iter()
        .zip(b.iter())
        .map(|(row, rhs)| {
            let mut r = row.clone();
            r.push(rhs.clone());
            r
        })
        .collect();
    let pivots = rref(&mut rows, cols)?;
    // Consistency: a zero row of A with nonzero rhs has no solution.
    for row in rows.iter().skip(pivots.len()) {
        if row[..cols].iter().all(Expr::is_zero_expr) && !row[cols].is_zero_expr() {
            return Ok(None);
        }
    }
    let mut x = alloc::vec![Expr::zero(); cols];
    for (r, c) in pivots.iter().enumerate() {
        x[*c] = rows[r][cols].clone();
    }
    Ok(Some(x))
}

/// Basis of the right nullspace of `A`.
pub fn nullspace(a: &[Vec<Expr>]) -> Result<Vec<Vec<Expr>>, ExprError> {
    if a.is_empty() {
        return Ok(Vec::new());
    }
    let cols = a[0].len();
    let mut rows: Vec<Vec<Expr>> = a.to_vec();
    let pivots = rref(&mut rows, cols)?;
    let mut basis = Vec::new();
    for free in 0..cols {
        if pivots.contains(&free) {
            continue;
        }
        let mut v = alloc::vec![Expr::zero(); cols];
        v[free] = Expr::one();
        for (r, c) in pivots.iter().enumerate() {
            v[*c] = rows[r][free].neg();
        }
        basis.push(v);
    }
    Ok(basis)
}

/// Rank of a matrix of exact algebraic numbers (used for pointwise dimension
/// checks after sampling; zero tests are exact).
pub fn rank_surd(a: &[Vec<Surd>]) -> usize {
    if a.is_empty() {
        return 0;
    }
    let cols = a[0].len();
    let mut rows: Vec<Vec<Surd>> = a.to_vec();
    let mut rank = 0;
    for c in 0..cols {
        let Some(p) = (rank..rows.len()).find(|i| !rows[*i][c].is_zero()) else {
            continue;
        };
        rows.swap(rank, p);
        let pivot = rows[rank][c].clone();
        for i in (rank + 1)..rows.len() {
            if rows[i][c].is_zero() {
                continue;
            }
            let factor = rows[i][c].div(&pivot).expect("pivot is nonzero");
            for k in c..cols {
                let delta = rows[rank][k].mul(&factor);
                rows[i][k] = rows[i][k].sub(&delta);
            }
        }
        rank += 1;
        if rank == rows.len() {
            break;
        }
    }
    rank
}

/// Determinant by cofactor expansion (matrices here stay small: minors of
/// Jacobians up to the chart dimension cap).
pub fn det(a: &[Vec<Expr>]) -> Expr {
    let n = a.len();
    debug_assert!(a.iter().all(|r| r.len() == n), "determinant of a nonsquare matrix");
    match n {
        0 => Expr::one(),
        1 => a[0][0].clone(),
        _ => {
            let mut acc = Expr::zero();
            for i in 0..n {
                if a[i][0].is_zero_expr() {
                    continue;
                }
                let minor: Vec<Vec<Expr>> = (0..n)
                    .filter(|r| *r != i)
                    .map(|r| a[r][1..].to_vec())
                    .collect();
                let term = a[i][0].mul(&det(&minor));
                acc = if i % 2 == 0 { acc.add(&term) } else { acc.sub(&term) };
            }
            acc
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expr;

    fn e(s: &str) -> Expr {
        parse_expr(s).unwrap()
    }

    #[test]
    fn solve_with_symbolic_pivots() {
        // [x 1; 0 x] * [x, x] = [x^2 + x, x^2]
        let a = alloc::vec![
            alloc::vec![e("x"), e("1")],
            alloc::vec![e("0"), e("x")],
        ];
        let b = alloc::vec![e("x^2 + x"), e("x^2")];
        let v = solve(&a, &b).unwrap().unwrap();
        assert!(v[0].sub(&e("x")).is_zero_expr());
        assert!(v[1].sub(&e("x")).is_zero_expr());
    }

    #[test]
    fn inconsistent_detected() {
        let a = alloc::vec![alloc::vec![e("x")], alloc::vec![e("x")]];
        let b = alloc::vec![e("1"), e("2")];
        assert_eq!(solve(&a, &b).unwrap(), None);
    }

    #[test]
    fn rank_and_nullspace() {
        let a = alloc::vec![
            alloc::vec![e("1"), e("x"), e("0")],
            alloc::vec![e("2"), e("2*x"), e("0")],
        ];
        assert_eq!(rank(&a).unwrap(), 1);
        let ns = nullspace(&a).unwrap();
        assert_eq!(ns.len(), 2);
        for v in &ns {
            let combo = v[0].add(&v[1].mul(&e("x")));
            assert!(combo.is_zero_expr());
        }
    }

    #[test]
    fn determinants() {
        let a = alloc::vec![
            alloc::vec![e("x"), e("y")],
            alloc::vec![e("1"), e("x")],
        ];
        assert!(det(&a).sub(&e("x^2 - y")).is_zero_expr());
        let rot = alloc::vec![
            alloc::vec![e("c"), e("-s"), e("0")],
            alloc::vec![e("s"), e("c"), e("0")],
            alloc::vec![e("0"), e("0"), e("1")],
        ];
        assert!(det(&rot).sub(&e("c^2 + s^2")).is_zero_expr());
    }
}
