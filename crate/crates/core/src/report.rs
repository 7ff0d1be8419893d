//! Pass/fail records for every checked identity or inequality.

use serde::Serialize;

use crate::numeric::float_or_tag;

/// One checked relation between two numbers. `slack ≥ 0` means the relation
/// holds with room to spare; `pass` applies the tolerance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    #[serde(with = "float_or_tag")]
    pub lhs: f64,
    #[serde(with = "float_or_tag")]
    pub rhs: f64,
    #[serde(with = "float_or_tag")]
    pub slack: f64,
    pub pass: bool,
}

fn gap(big: f64, small: f64) -> f64 {
    if big == small {
        0.0
    } else {
        big - small
    }
}

impl Check {
    /// `lhs ≤ rhs` up to `tol`.
    pub fn at_most(name: impl Into<String>, lhs: f64, rhs: f64, tol: f64) -> Check {
        let slack = gap(rhs, lhs);
        Check {
            name: name.into(),
            lhs,
            rhs,
            slack,
            pass: slack >= -tol,
        }
    }

    /// `lhs ≥ rhs` up to `tol`.
    pub fn at_least(name: impl Into<String>, lhs: f64, rhs: f64, tol: f64) -> Check {
        let slack = gap(lhs, rhs);
        Check {
            name: name.into(),
            lhs,
            rhs,
            slack,
            pass: slack >= -tol,
        }
    }

    /// `|lhs − rhs| ≤ tol`; the slack is `tol − |lhs − rhs|`.
    pub fn close(name: impl Into<String>, lhs: f64, rhs: f64, tol: f64) -> Check {
        let slack = tol - gap(lhs, rhs).abs();
        Check {
            name: name.into(),
            lhs,
            rhs,
            slack,
            pass: slack >= 0.0,
        }
    }

    pub fn residual(&self) -> f64 {
        gap(self.lhs, self.rhs).abs()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn infinite_sides() {
        let c = Check::at_most("empty set", f64::NEG_INFINITY, -3.0, 1e-9);
        assert!(c.pass);
        assert_eq!(c.slack, f64::INFINITY);
        let c = Check::at_most("both empty", f64::NEG_INFINITY, f64::NEG_INFINITY, 1e-9);
        assert!(c.pass);
        let json = serde_json::to_string(&Check::at_least("x", f64::INFINITY, 1.0, 0.0)).unwrap();
        assert!(json.contains("\"+inf\""));
    }

    #[test]
    fn tolerance_semantics() {
        assert!(Check::at_least("a", 1.0 - 1e-10, 1.0, 1e-9).pass);
        assert!(!Check::at_least("a", 1.0 - 1e-8, 1.0, 1e-9).pass);
        assert!(Check::close("c", 1.0, 1.0 + 1e-11, 1e-10).pass);
        assert!(!Check::close("c", 1.0, 1.1, 1e-10).pass);
    }
}
