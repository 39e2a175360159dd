//! Evaluation arithmetic: gap closed, shifted geometric mean, target bounds.

use crate::scalar::Scalar;

/// Two dual bounds compared against a primal reference `p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapRecord<S> {
    pub p: S,
    pub d1: S,
    pub d2: S,
}

impl<S: Scalar> GapRecord<S> {
    pub fn gap_closed(&self) -> S {
        gap_closed(self.p, self.d1, self.d2)
    }
}

/// Gap of `d2` closed by `d1`, in `[-1, 1]`; positive iff `d1 > d2`.
///
/// When the weaker bound already equals `p` the ratio is undefined and the
/// result is `1` (or `-1` with the roles swapped).
pub fn gap_closed<S: Scalar>(p: S, d1: S, d2: S) -> S {
    if d1 == d2 {
        S::zero()
    } else if d1 > d2 {
        if p == d2 {
            return S::one();
        }
        // 1 - (p - d1) / (p - d2), without the cancellation
        (d1 - d2) / (p - d2)
    } else {
        if p == d1 {
            return -S::one();
        }
        -((d2 - d1) / (p - d1))
    }
}

/// `(prod (v_i + s))^(1/N) - s`.
pub fn shifted_geomean<S: Scalar>(values: &[S], shift: S) -> S {
    assert!(!values.is_empty(), "shifted geometric mean of an empty list");
    let base = values[0] + shift;
    if values.iter().any(|&v| v + shift == S::zero()) {
        return -shift;
    }
    // logs relative to the first entry keep equal inputs exact
    let n = S::lit(values.len() as f64);
    let mean_log = values.iter().map(|&v| ((v + shift) / base).ln()).sum::<S>() / n;
    base * mean_log.exp() - shift
}

/// `D + (P - D) * 0.2`.
pub fn target_bound<S: Scalar>(d: S, p: S) -> S {
    d + (p - d) * S::lit(0.2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gap_closed_examples() {
        assert_eq!(gap_closed(1.5, -2.0, -2.0), 0.0);
        assert_eq!(gap_closed(0.0, -1.0, -3.0), 2.0 / 3.0);
        assert_eq!(gap_closed(0.0, -3.0, -1.0), -2.0 / 3.0);
        assert_eq!(gap_closed(2.0, 3.0, 2.0), 1.0);
        assert_eq!(
            GapRecord {
                p: 0.0,
                d1: -1.0,
                d2: -3.0
            }
            .gap_closed(),
            2.0 / 3.0
        );
    }

    #[test]
    fn shifted_geomean_examples() {
        assert_eq!(shifted_geomean(&[4.0, 4.0, 4.0], 0.0), 4.0);
        assert_eq!(shifted_geomean(&[7.25], 3.0), 7.25);
        assert!((shifted_geomean(&[0.0, 10.0], 10.0) - (200f64.sqrt() - 10.0)).abs() < 1e-12);
        assert_eq!(shifted_geomean(&[0.0, 5.0], 0.0), 0.0);
    }

    #[test]
    fn target_bound_examples() {
        assert_eq!(target_bound(0.0, 10.0), 2.0);
        assert_eq!(target_bound(3.5, 3.5), 3.5);
        assert!((target_bound(-5246.0f64, -4318.1) + 5060.42).abs() < 1e-9);
    }
}
