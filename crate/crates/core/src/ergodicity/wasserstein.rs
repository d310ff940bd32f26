use std::cmp::Ordering;

use super::assignment::{solve, CostMatrix};
use crate::error::{Error, Result};
use crate::model::State;

/// Largest cloud solved exactly; larger inputs use their first `MAX_EXACT` points.
pub const MAX_EXACT: usize = 4096;

fn cmp_clouds(a: &[State], b: &[State]) -> Ordering {
    for (p, q) in a.iter().zip(b) {
        let o = p.x.total_cmp(&q.x).then(p.y.total_cmp(&q.y));
        if o != Ordering::Equal {
            return o;
        }
    }
    a.len().cmp(&b.len())
}

/// Exact empirical Wasserstein-1 distance between two equal-size point clouds under
/// the Euclidean ground metric: optimal assignment cost divided by `N`.
pub fn empirical_wasserstein1(a: &[State], b: &[State]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Input("empty ensemble".into()));
    }
    if a.len() != b.len() {
        return Err(Error::Input(format!("ensemble sizes differ: {} vs {}", a.len(), b.len())));
    }
    if a.iter().chain(b).any(|s| !s.is_finite()) {
        return Err(Error::Input("ensemble contains non-finite states".into()));
    }
    let n = a.len().min(MAX_EXACT);
    let (a, b) = (&a[..n], &b[..n]);
    // A canonical orientation makes the metric exactly symmetric.
    let (rows, cols) = if cmp_clouds(a, b) == Ordering::Greater { (b, a) } else { (a, b) };
    let c = CostMatrix::from_fn(n, |i, j| rows[i].dist(&cols[j]));
    let assignment = solve(&c);
    let mut matched: Vec<f64> = assignment.iter().enumerate().map(|(i, &j)| c.get(i, j)).collect();
    matched.sort_by(f64::total_cmp);
    Ok(matched.iter().sum::<f64>() / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sde::rng::NoiseStream;

    fn cloud(seed: u64, n: usize, shift: (f64, f64)) -> Vec<State> {
        let mut s = NoiseStream::new(seed, 0);
        (0..n)
            .map(|_| {
                let (a, b) = s.next_pair();
                State::new(a + shift.0, b + shift.1)
            })
            .collect()
    }

    #[test]
    fn identity_and_point_masses() {
        let a = cloud(1, 50, (0.0, 0.0));
        assert_eq!(empirical_wasserstein1(&a, &a).unwrap(), 0.0);
        let p = vec![State::ORIGIN; 10];
        let q = vec![State::new(3.0, 4.0); 10];
        assert!((empirical_wasserstein1(&p, &q).unwrap() - 5.0).abs() < 1e-15);
    }

    #[test]
    fn shifted_cloud() {
        let a = cloud(2, 1000, (0.0, 0.0));
        let b: Vec<State> = a.iter().map(|s| State::new(s.x + 1.0, s.y)).collect();
        let w = empirical_wasserstein1(&a, &b).unwrap();
        assert!((w - 1.0).abs() < 1e-12, "{w}");
    }

    #[test]
    fn errors() {
        assert!(empirical_wasserstein1(&[], &[]).is_err());
        assert!(empirical_wasserstein1(&[State::ORIGIN], &[State::ORIGIN; 2]).is_err());
    }

    #[test]
    fn symmetric_and_triangle() {
        for k in 0..30 {
            let a = cloud(3 * k, 40, (0.0, 0.0));
            let b = cloud(3 * k + 1, 40, (0.5, 0.0));
            let c = cloud(3 * k + 2, 40, (0.0, -1.0));
            let ab = empirical_wasserstein1(&a, &b).unwrap();
            assert_eq!(ab, empirical_wasserstein1(&b, &a).unwrap());
            let ac = empirical_wasserstein1(&a, &c).unwrap();
            let bc = empirical_wasserstein1(&b, &c).unwrap();
            assert!(ac <= ab + bc + 1e-12);
        }
    }
}
