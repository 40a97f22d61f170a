//! Textual argument forms: grids, ranges and function specs.

use std::str::FromStr;

use anyhow::{anyhow, bail, ensure, Context};
use tracegap_core::frfun::{Expr, FRFunction, DEFAULT_L_MAX, DEFAULT_STEP};

/// `STEP:LMAX`
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    pub step: f64,
    pub l_max: f64,
}

impl Default for Grid {
    fn default() -> Self {
        Grid {
            step: DEFAULT_STEP,
            l_max: DEFAULT_L_MAX,
        }
    }
}

impl FromStr for Grid {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> anyhow::Result<Self> {
        let (a, b) = s
            .split_once(':')
            .ok_or_else(|| anyhow!("expected STEP:LMAX, got {s:?}"))?;
        let step: f64 = a.trim().parse().with_context(|| format!("bad step {a:?}"))?;
        let l_max: f64 = b.trim().parse().with_context(|| format!("bad lmax {b:?}"))?;
        ensure!(step > 0.0 && step.is_finite(), "step must be positive");
        ensure!(l_max > step && l_max.is_finite(), "lmax must exceed the step");
        Ok(Grid { step, l_max })
    }
}

/// `A..B:STEP`, endpoints included.
#[derive(Clone, Debug, PartialEq)]
pub struct EllRange {
    pub start: f64,
    pub end: f64,
    pub step: f64,
}

impl EllRange {
    pub fn values(&self) -> Vec<f64> {
        let count = ((self.end - self.start) / self.step + 1e-9).floor() as usize + 1;
        // snapped so that 1.0..2.0:0.1 prints as 1.3 and not 1.3000000000000003
        (0..count)
            .map(|i| ((self.start + i as f64 * self.step) * 1e12).round() / 1e12)
            .collect()
    }
}

impl FromStr for EllRange {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> anyhow::Result<Self> {
        let (range, step) = match s.split_once(':') {
            Some((r, st)) => (r, Some(st)),
            None => (s, None),
        };
        let (a, b) = match range.split_once("..") {
            Some(ab) => ab,
            None => (range, range),
        };
        let start: f64 = a.trim().parse().with_context(|| format!("bad range start {a:?}"))?;
        let end: f64 = b.trim().parse().with_context(|| format!("bad range end {b:?}"))?;
        let step: f64 = match step {
            Some(st) => st.trim().parse().with_context(|| format!("bad range step {st:?}"))?,
            None => 1.0,
        };
        ensure!(
            start.is_finite() && end.is_finite() && end >= start,
            "range {s:?} is empty"
        );
        ensure!(step > 0.0 && step.is_finite(), "range step must be positive");
        Ok(EllRange { start, end, step })
    }
}

pub fn parse_floats(s: &str) -> anyhow::Result<Vec<f64>> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().with_context(|| format!("bad number {t:?}")))
        .collect()
}

/// `PRINCIPAL;REMAINDER[;K[;N]]`: ascending coefficients of the polynomial in
/// front of `e^ℓ`, then an expression in `x` for the remainder. `K` defaults to
/// the number of coefficients and `N` to 1.
///
/// `1,0;exp(0.5*x)` is `e^ℓ + e^{ℓ/2}` and `;x*exp(0.4*x)` has no principal part.
#[derive(Clone, Debug, PartialEq)]
pub struct FnSpec {
    pub principal: Vec<f64>,
    pub remainder: Expr,
    pub k: usize,
    pub n: usize,
}

impl FromStr for FnSpec {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> anyhow::Result<Self> {
        let parts: Vec<&str> = s.split(';').collect();
        if parts.len() < 2 || parts.len() > 4 {
            bail!("expected PRINCIPAL;REMAINDER[;K[;N]], got {s:?}");
        }
        let principal = parse_floats(parts[0])?;
        let rem_text = if parts[1].trim().is_empty() { "0" } else { parts[1] };
        let remainder = Expr::parse(rem_text).map_err(|e| anyhow!("remainder {rem_text:?}: {e}"))?;
        ensure!(
            remainder.arity() <= 1,
            "remainder {rem_text:?} must be a function of x alone"
        );
        let k = match parts.get(2) {
            Some(t) => t.trim().parse().with_context(|| format!("bad K {t:?}"))?,
            None => principal.len(),
        };
        let n = match parts.get(3) {
            Some(t) => t.trim().parse().with_context(|| format!("bad N {t:?}"))?,
            None => 1,
        };
        Ok(FnSpec {
            principal,
            remainder,
            k,
            n,
        })
    }
}

impl FnSpec {
    pub fn sample(&self, grid: Grid) -> anyhow::Result<FRFunction> {
        let r = &self.remainder;
        Ok(FRFunction::sample(
            self.principal.clone(),
            |x| r.eval(&[x]),
            grid.step,
            grid.l_max,
            self.k,
            self.n,
        )?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        let r: EllRange = "1.0..2.0:0.1".parse().unwrap();
        let v = r.values();
        assert_eq!(v.len(), 11);
        assert_eq!(v[3], 1.3);
        assert_eq!(v[10], 2.0);
        assert_eq!("4".parse::<EllRange>().unwrap().values(), vec![4.0]);
        assert!("3..1".parse::<EllRange>().is_err());
        assert!("1..3:0".parse::<EllRange>().is_err());
    }

    #[test]
    fn grids() {
        let g: Grid = "0.01:20".parse().unwrap();
        assert_eq!((g.step, g.l_max), (0.01, 20.0));
        assert!("0.01".parse::<Grid>().is_err());
        assert!("-1:20".parse::<Grid>().is_err());
    }

    #[test]
    fn fn_specs() {
        let f: FnSpec = "1,0;exp(0.5*x)".parse().unwrap();
        assert_eq!(f.principal, vec![1.0, 0.0]);
        assert_eq!((f.k, f.n), (2, 1));
        let g: FnSpec = ";x;3;2".parse().unwrap();
        assert!(g.principal.is_empty());
        assert_eq!((g.k, g.n), (3, 2));
        assert!("1;x2".parse::<FnSpec>().is_err());
        assert!("1".parse::<FnSpec>().is_err());
        assert!("a;x".parse::<FnSpec>().is_err());
    }
}
