//! Growth schedules for the scaling construction: functions theta with
//! integral of 1/theta over [1, inf) equal to 1, together with the tail
//! integrals the per-node accounting needs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScalingSchedule {
    /// theta(x) = x^2
    Square,
    /// theta(x) = (x+e-1) * ln^2(x+e-1)
    LogSquare,
}

impl ScalingSchedule {
    pub fn parse(s: &str) -> Result<ScalingSchedule> {
        match s {
            "square" => Ok(ScalingSchedule::Square),
            "logsquare" => Ok(ScalingSchedule::LogSquare),
            other => Err(Error::InvalidSchedule(format!("unknown schedule {other:?}"))),
        }
    }

    pub fn describe(&self) -> &'static str {
        match self {
            ScalingSchedule::Square => "square",
            ScalingSchedule::LogSquare => "logsquare",
        }
    }

    pub fn theta(&self, x: f64) -> f64 {
        match self {
            ScalingSchedule::Square => x * x,
            ScalingSchedule::LogSquare => {
                let y = x + std::f64::consts::E - 1.0;
                let l = y.ln();
                y * l * l
            }
        }
    }

    /// Tail integral of 1/theta from `l` to infinity, by double-exponential
    /// quadrature. Both built-in schedules also have closed forms, used as
    /// independent oracles in tests.
    pub fn tail(&self, l: f64) -> f64 {
        assert!(l >= 1.0, "tail defined for l >= 1");
        // substitute x = l + e^u; the integrand is evaluated as a stable
        // function of u so slowly decaying tails (reaching x ~ e^1000)
        // neither overflow nor get truncated
        let c = std::f64::consts::E - 1.0;
        exp_sinh(|u: f64| match self {
            // e^u / (l + e^u)^2, written to stay finite at both ends
            ScalingSchedule::Square => {
                if u >= 0.0 {
                    let s = (-u).exp();
                    s / (1.0 + l * s) / (1.0 + l * s)
                } else {
                    let q = u.exp();
                    q / (q + l) / (q + l)
                }
            }
            // e^u / ((l + e^u + c) ln^2(l + e^u + c))
            ScalingSchedule::LogSquare => {
                let s = (-u).exp();
                let log = u + ((l + c) * s).ln_1p();
                1.0 / ((1.0 + (l + c) * s) * log * log)
            }
        })
    }

    /// Numerical certificate that the schedule integrates to 1; checked at
    /// the entry points of the scaling construction.
    pub fn validate(&self) -> Result<()> {
        let total = self.tail(1.0);
        if (total - 1.0).abs() > 1e-6 {
            return Err(Error::InvalidSchedule(format!(
                "{}: integral of 1/theta over [1,inf) is {total}, expected 1",
                self.describe()
            )));
        }
        Ok(())
    }
}

/// Double-exponential quadrature of integral of g(u) du over the whole line,
/// via u = (pi/2) sinh(t). `g` must be smooth with at least exponential
/// decay in t after the substitution.
fn exp_sinh(g: impl Fn(f64) -> f64) -> f64 {
    let h = 0.02;
    let half_pi = std::f64::consts::FRAC_PI_2;
    let mut sum = 0.0;
    for k in -2000i32..=2000 {
        let t = k as f64 * h;
        let u = half_pi * t.sinh();
        let term = g(u) * half_pi * t.cosh();
        if term.is_finite() {
            sum += term;
        }
    }
    sum * h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn certificates() {
        ScalingSchedule::Square.validate().unwrap();
        ScalingSchedule::LogSquare.validate().unwrap();
    }

    #[test]
    fn square_tail_matches_closed_form() {
        for l in [1.0, 1.5, 2.0, 4.0, 10.0, 100.0] {
            let got = ScalingSchedule::Square.tail(l);
            let want = 1.0 / l;
            assert!((got - want).abs() <= 1e-9 * want, "l={l}: {got} vs {want}");
        }
    }

    #[test]
    fn logsquare_tail_matches_closed_form() {
        let e = std::f64::consts::E;
        for l in [1.0, 2.0, 5.0, 20.0] {
            let got = ScalingSchedule::LogSquare.tail(l);
            let want = 1.0 / (l + e - 1.0).ln();
            assert!((got - want).abs() <= 1e-9 * want, "l={l}: {got} vs {want}");
        }
    }

    #[test]
    fn parse_names() {
        assert_eq!(ScalingSchedule::parse("square").unwrap(), ScalingSchedule::Square);
        assert_eq!(ScalingSchedule::parse("logsquare").unwrap(), ScalingSchedule::LogSquare);
        assert!(ScalingSchedule::parse("cubic").is_err());
    }
}
