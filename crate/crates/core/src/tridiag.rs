//! Thomas algorithm for tridiagonal systems.

/// Solves `sub[i] x[i-1] + diag[i] x[i] + sup[i] x[i+1] = rhs[i]` in place.
/// `sub[0]` and `sup[n-1]` are ignored. Returns `None` on a zero pivot.
pub fn solve(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &mut [f64]) -> Option<()> {
    let n = diag.len();
    debug_assert!(sub.len() == n && sup.len() == n && rhs.len() == n);
    if n == 0 {
        return Some(());
    }
    let mut c = vec![0.0; n];
    let mut pivot = diag[0];
    if pivot == 0.0 || !pivot.is_finite() {
        return None;
    }
    c[0] = sup[0] / pivot;
    rhs[0] /= pivot;
    for i in 1..n {
        pivot = diag[i] - sub[i] * c[i - 1];
        if pivot == 0.0 || !pivot.is_finite() {
            return None;
        }
        c[i] = sup[i] / pivot;
        rhs[i] = (rhs[i] - sub[i] * rhs[i - 1]) / pivot;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= c[i] * rhs[i + 1];
    }
    Some(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_system() {
        // [2 1 0; 1 3 1; 0 1 4] x = [3, 5, 5] -> x = [1, 1, 1]
        let mut rhs = vec![3.0, 5.0, 5.0];
        solve(&[0.0, 1.0, 1.0], &[2.0, 3.0, 4.0], &[1.0, 1.0, 0.0], &mut rhs).unwrap();
        for x in rhs {
            assert!((x - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_pivot_is_reported() {
        let mut rhs = vec![1.0, 1.0];
        assert!(solve(&[0.0, 1.0], &[0.0, 1.0], &[1.0, 0.0], &mut rhs).is_none());
    }
}
