//! Special functions used by the planner: the two real branches of the
//! Lambert-W function and the one-sided DKW deviation term.

use num_traits::Float;

use crate::error::{Error, Result};

/// Real branch of the Lambert-W function, the inverse of `w * exp(w)`.
///
/// The principal branch maps `[-1/e, inf)` to `[-1, inf)`; the secondary
/// branch maps `[-1/e, 0)` to `(-inf, -1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BranchId {
    Principal,
    Secondary,
}

const MAX_ITERATIONS: usize = 100;

fn cast<T: Float>(x: f64) -> T {
    T::from(x).expect("constant representable in scalar type")
}

/// Residual tolerance, scaled so that f64 meets the 1e-12 relative target.
fn residual_tol<T: Float>() -> T {
    let eps_based = T::epsilon() * cast::<T>(8.0);
    let pinned = cast::<T>(1e-12);
    if eps_based > pinned {
        eps_based
    } else {
        pinned
    }
}

/// Lambert-W on the requested real branch.
///
/// Converges by Halley iteration from a branch-specific initial guess until
/// the residual `|w e^w - x|` falls below `tol * max(|x|, tiny)`.
pub fn lambert_w<T: Float>(branch: BranchId, x: T) -> Result<T> {
    let neg_inv_e = -T::one().exp().recip();
    if x < neg_inv_e {
        return Err(Error::Domain(format!(
            "lambert_w: argument {} below branch point -1/e",
            x.to_f64().unwrap_or(f64::NAN)
        )));
    }
    // Exact value at the branch point for both branches.
    if x == neg_inv_e {
        return Ok(-T::one());
    }
    match branch {
        BranchId::Principal => {
            if x == T::zero() {
                return Ok(T::zero());
            }
            halley(x, principal_guess(x, neg_inv_e), branch)
        }
        BranchId::Secondary => {
            if x >= T::zero() {
                return Err(Error::Domain(format!(
                    "lambert_w: secondary branch requires -1/e <= x < 0, got {}",
                    x.to_f64().unwrap_or(f64::NAN)
                )));
            }
            halley(x, secondary_guess(x, neg_inv_e), branch)
        }
    }
}

fn principal_guess<T: Float>(x: T, neg_inv_e: T) -> T {
    let quarter = cast::<T>(-0.25);
    if x < quarter {
        // Series about the branch point.
        let p = (cast::<T>(2.0) * (T::one() - x / neg_inv_e)).max(T::zero()).sqrt();
        -T::one() + p - p * p / cast::<T>(3.0) + cast::<T>(11.0 / 72.0) * p * p * p
    } else if x <= T::one().exp() {
        (T::one() + x).ln()
    } else {
        let l = x.ln();
        l - l.ln()
    }
}

fn secondary_guess<T: Float>(x: T, neg_inv_e: T) -> T {
    let quarter = cast::<T>(-0.25);
    if x < quarter {
        let p = (cast::<T>(2.0) * (T::one() - x / neg_inv_e)).max(T::zero()).sqrt();
        -T::one() - p - p * p / cast::<T>(3.0) - cast::<T>(11.0 / 72.0) * p * p * p
    } else {
        // Asymptotic expansion for x -> 0^-.
        let l1 = (-x).ln();
        let l2 = (-l1).ln();
        l1 - l2 + l2 / l1
    }
}

fn halley<T: Float>(x: T, guess: T, branch: BranchId) -> Result<T> {
    let tol = residual_tol::<T>();
    let tiny = T::min_positive_value();
    let target = tol * x.abs().max(tiny);
    let mut w = clamp_to_branch(guess, branch);
    for _ in 0..MAX_ITERATIONS {
        let ew = w.exp();
        let residual = w * ew - x;
        if residual.abs() <= target {
            return Ok(w);
        }
        let wp1 = w + T::one();
        let denom = ew * wp1 - (w + cast::<T>(2.0)) * residual / (cast::<T>(2.0) * wp1);
        if denom == T::zero() || !denom.is_finite() {
            break;
        }
        w = clamp_to_branch(w - residual / denom, branch);
    }
    // One last check: the iterate may have hit machine-precision stagnation
    // exactly on target.
    let residual = (w * w.exp() - x).abs();
    if residual <= target {
        Ok(w)
    } else {
        Err(Error::NumericFailure(format!(
            "lambert_w did not converge for x = {} (residual {})",
            x.to_f64().unwrap_or(f64::NAN),
            residual.to_f64().unwrap_or(f64::NAN)
        )))
    }
}

fn clamp_to_branch<T: Float>(w: T, branch: BranchId) -> T {
    match branch {
        BranchId::Principal => w.max(-T::one()),
        BranchId::Secondary => w.min(-T::one()),
    }
}

/// One-sided DKW deviation `sqrt(log(1/rho) / (2m))`.
///
/// Nonnegative, decreasing in `m` and in `rho`.
pub fn dkw_deviation<T: Float>(m: u64, rho: T) -> Result<T> {
    if m < 1 {
        return Err(Error::Domain("dkw_deviation: m must be >= 1".into()));
    }
    if !(rho > T::zero() && rho < T::one()) {
        return Err(Error::Domain(format!(
            "dkw_deviation: rho must lie in (0, 1), got {}",
            rho.to_f64().unwrap_or(f64::NAN)
        )));
    }
    let m = cast::<T>(m as f64);
    Ok((rho.recip().ln() / (cast::<T>(2.0) * m)).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent oracle: bisection on w e^w = x over a bracketing interval.
    fn bisect_w(x: f64, mut lo: f64, mut hi: f64) -> f64 {
        let f = |w: f64| w * w.exp() - x;
        assert!(
            f(lo) * f(hi) <= 0.0,
            "oracle bracket does not straddle root"
        );
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(lo) * f(mid) <= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn branch_point_is_exact() {
        let x = -(1.0f64.exp().recip());
        assert_eq!(lambert_w(BranchId::Secondary, x).unwrap(), -1.0);
        assert_eq!(lambert_w(BranchId::Principal, x).unwrap(), -1.0);
    }

    #[test]
    fn principal_at_e_is_one() {
        let w = lambert_w(BranchId::Principal, std::f64::consts::E).unwrap();
        assert!((w - 1.0).abs() < 1e-14);
    }

    #[test]
    fn secondary_matches_bisection_oracle() {
        for &x in &[-0.1, -1.0 / 6000.0] {
            let oracle = bisect_w(x, -700.0, -1.0);
            let w = lambert_w::<f64>(BranchId::Secondary, x).unwrap();
            assert!(
                (w - oracle).abs() < 1e-10,
                "x={x}: impl {w} vs oracle {oracle}"
            );
        }
        // Frozen spec-level spot values.
        assert!((lambert_w::<f64>(BranchId::Secondary, -0.1).unwrap() + 3.577152).abs() < 1e-5);
        assert!((lambert_w::<f64>(BranchId::Secondary, -1.0 / 6000.0).unwrap() + 11.107).abs() < 1e-3);
    }

    #[test]
    fn round_trip_on_grids() {
        // Secondary branch over w in [-30, -1], principal over [-1, 10].
        for i in 0..=1000 {
            let w = -30.0 + 29.0 * (i as f64) / 1000.0;
            let x = w * w.exp();
            let back = lambert_w::<f64>(BranchId::Secondary, x).unwrap();
            assert!((back - w).abs() < 1e-10, "secondary w={w} back={back}");
        }
        for i in 0..=1000 {
            let w = -1.0 + 11.0 * (i as f64) / 1000.0;
            let x = w * w.exp();
            let back = lambert_w::<f64>(BranchId::Principal, x).unwrap();
            assert!((back - w).abs() < 1e-10, "principal w={w} back={back}");
        }
    }

    #[test]
    fn secondary_footnote_bracket() {
        for &u in &[0.1, 1.0, 5.0, 20.0] {
            let x = -(-u - 1.0f64).exp();
            let w = lambert_w::<f64>(BranchId::Secondary, x).unwrap();
            let lo = -1.0 - (2.0 * u).sqrt() - u;
            let hi = -1.0 - (2.0 * u).sqrt() - 2.0 / 3.0 * u;
            assert!(lo < w && w < hi, "u={u}: {lo} < {w} < {hi} violated");
        }
    }

    #[test]
    fn secondary_strictly_decreasing() {
        let mut prev = lambert_w::<f64>(BranchId::Secondary, -0.367).unwrap();
        for i in 1..200 {
            let x = -0.367 + 0.366 * (i as f64) / 200.0;
            let w = lambert_w::<f64>(BranchId::Secondary, x).unwrap();
            assert!(w < prev, "not decreasing at x={x}");
            prev = w;
        }
    }

    #[test]
    fn domain_errors() {
        assert!(lambert_w::<f64>(BranchId::Principal, -0.4).is_err());
        assert!(lambert_w::<f64>(BranchId::Secondary, 0.0).is_err());
        assert!(lambert_w::<f64>(BranchId::Secondary, 0.5).is_err());
    }

    #[test]
    fn works_in_f32() {
        let w = lambert_w::<f32>(BranchId::Principal, std::f32::consts::E).unwrap();
        assert!((w - 1.0).abs() < 1e-5);
    }

    #[test]
    fn dkw_examples() {
        // sqrt(log 2 / 4)
        let v = dkw_deviation::<f64>(2, 0.5).unwrap();
        assert!((v - (2.0f64.ln() / 4.0).sqrt()).abs() < 1e-15);
        assert!((v - 0.41628).abs() < 1e-5);
        let v = dkw_deviation::<f64>(1500, 0.003874).unwrap();
        assert!((v - 0.04303).abs() < 1e-5);
        // rho -> 1 limit gives 0.
        let v = dkw_deviation::<f64>(10, 1.0 - 1e-15).unwrap();
        assert!(v < 1e-6);
    }

    #[test]
    fn dkw_monotone_and_domain() {
        assert!(dkw_deviation::<f64>(0, 0.5).is_err());
        assert!(dkw_deviation::<f64>(10, 0.0).is_err());
        assert!(dkw_deviation::<f64>(10, 1.0).is_err());
        let a = dkw_deviation::<f64>(100, 0.1).unwrap();
        let b = dkw_deviation::<f64>(200, 0.1).unwrap();
        let c = dkw_deviation::<f64>(100, 0.2).unwrap();
        assert!(b < a && c < a);
    }
}
