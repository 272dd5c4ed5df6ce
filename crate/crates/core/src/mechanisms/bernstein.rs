//! Iterated Bernstein polynomial evaluation over a noisy lattice.

use crate::error::{Error, Result};

/// Flat index ordering for the lattice {0, 1/k, ..., 1}^dims: base-(k+1)
/// digits with dimension 0 most significant. Targets and mechanisms share
/// this ordering.
pub fn lattice_points(k: usize, dims: usize) -> Vec<Vec<f64>> {
    let size = (k + 1).pow(dims as u32);
    (0..size)
        .map(|mut t| {
            let mut point = vec![0.0; dims];
            for j in (0..dims).rev() {
                point[j] = (t % (k + 1)) as f64 / k as f64;
                t /= k + 1;
            }
            point
        })
        .collect()
}

fn binomial(n: usize, r: usize) -> f64 {
    let r = r.min(n - r);
    let mut acc = 1.0f64;
    for i in 0..r {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

/// Bernstein basis weights C(k, v) y^v (1-y)^(k-v) for v = 0..=k.
fn basis_weights(k: usize, y: f64) -> Vec<f64> {
    (0..=k)
        .map(|v| binomial(k, v) * y.powi(v as i32) * (1.0 - y).powi((k - v) as i32))
        .collect()
}

/// Plain (order-1) Bernstein polynomial of the lattice values at y.
fn eval_order_one(lattice: &[f64], k: usize, dims: usize, y: &[f64]) -> f64 {
    let per_dim: Vec<Vec<f64>> = y.iter().map(|&yj| basis_weights(k, yj)).collect();
    let mut acc = 0.0;
    for (t, &g) in lattice.iter().enumerate() {
        let mut weight = 1.0;
        let mut rest = t;
        for j in (0..dims).rev() {
            weight *= per_dim[j][rest % (k + 1)];
            rest /= k + 1;
        }
        acc += g * weight;
    }
    acc
}

/// Lattice-to-lattice Bernstein map: evaluate the order-1 polynomial of the
/// input values at every lattice point.
fn lattice_map(lattice: &[f64], k: usize, dims: usize) -> Vec<f64> {
    lattice_points(k, dims)
        .iter()
        .map(|p| eval_order_one(lattice, k, dims, p))
        .collect()
}

/// Effective lattice for the order-h iterated operator
/// `B^(h) = sum_{i=1..h} C(h,i) (-1)^(i-1) B^i`, exploiting that evaluation
/// is linear in the lattice values.
pub(crate) fn iterated_lattice(lattice: &[f64], k: usize, dims: usize, order: usize) -> Vec<f64> {
    if order == 1 {
        return lattice.to_vec();
    }
    let mut combined = vec![0.0; lattice.len()];
    let mut power = lattice.to_vec(); // B^(i-1) applied to the input
    for i in 1..=order {
        let coeff = binomial(order, i) * if i % 2 == 1 { 1.0 } else { -1.0 };
        for (c, v) in combined.iter_mut().zip(&power) {
            *c += coeff * v;
        }
        if i < order {
            power = lattice_map(&power, k, dims);
        }
    }
    combined
}

/// Evaluates the order-h Bernstein smoothing of the lattice values at a
/// query point y in [0,1]^dims.
pub fn bernstein_evaluate_lattice(
    lattice: &[f64],
    k: usize,
    dims: usize,
    order: usize,
    y: &[f64],
) -> Result<f64> {
    if k < 1 || dims < 1 || order < 1 {
        return Err(Error::Domain("bernstein: k, dims and order must be >= 1".into()));
    }
    let expected = (k + 1).pow(dims as u32);
    if lattice.len() != expected {
        return Err(Error::DimensionMismatch { expected, got: lattice.len() });
    }
    if y.len() != dims {
        return Err(Error::DimensionMismatch { expected: dims, got: y.len() });
    }
    if y.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::Domain(format!("bernstein query point {y:?} outside [0,1]^{dims}")));
    }
    let effective = iterated_lattice(lattice, k, dims, order);
    Ok(eval_order_one(&effective, k, dims, y))
}
