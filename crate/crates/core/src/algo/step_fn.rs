use serde::{Deserialize, Serialize};

/// Piecewise-constant function of a weight threshold w > 0.
///
/// `levels[k]` holds on `(breaks[k-1], breaks[k]]` (with `breaks[-1] = 0`); the
/// function is 0 past the last breakpoint.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StepFunction {
    breaks: Vec<f64>,
    levels: Vec<f64>,
}

impl StepFunction {
    pub fn value(&self, w: f64) -> f64 {
        let k = self.breaks.partition_point(|&b| b < w);
        self.levels.get(k).copied().unwrap_or(0.0)
    }

    fn insert_break(&mut self, w: f64) {
        if w <= 0.0 {
            return;
        }
        let k = self.breaks.partition_point(|&b| b < w);
        if self.breaks.get(k) == Some(&w) {
            return;
        }
        let level = self.levels.get(k).copied().unwrap_or(0.0);
        self.breaks.insert(k, w);
        self.levels.insert(k, level);
    }

    /// Adds `delta` on (lo, hi].
    pub fn raise(&mut self, lo: f64, hi: f64, delta: f64) {
        if hi <= lo {
            return;
        }
        self.insert_break(lo);
        self.insert_break(hi);
        let mut left = 0.0;
        for (b, l) in self.breaks.iter().zip(self.levels.iter_mut()) {
            if left >= lo && *b <= hi {
                *l += delta;
            }
            left = *b;
        }
    }

    /// Replaces the function with the indicator of (0, sigma].
    pub fn collapse(&mut self, sigma: f64) {
        self.breaks.clear();
        self.levels.clear();
        if sigma > 0.0 {
            self.breaks.push(sigma);
            self.levels.push(1.0);
        }
    }

    /// Integral of f(y(w)) over (0, upto].
    pub fn integral(&self, f: impl Fn(f64) -> f64, upto: f64) -> f64 {
        let mut acc = 0.0;
        let mut left = 0.0;
        for (&b, &l) in self.breaks.iter().zip(&self.levels) {
            if left >= upto {
                return acc;
            }
            acc += (b.min(upto) - left) * f(l);
            left = b;
        }
        if upto > left {
            acc += (upto - left) * f(0.0);
        }
        acc
    }

    /// Last breakpoint; the function vanishes beyond it.
    pub fn support_end(&self) -> f64 {
        self.breaks.last().copied().unwrap_or(0.0)
    }

    pub fn breakpoints(&self) -> usize {
        self.breaks.len()
    }

    /// Nonincreasing with all levels in [0, 1].
    pub fn is_valid(&self, tol: f64) -> bool {
        self.levels.iter().all(|&l| (-tol..=1.0 + tol).contains(&l))
            && self.levels.windows(2).all(|p| p[1] <= p[0] + tol)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn raise_and_collapse() {
        let mut y = StepFunction::default();
        y.collapse(2.0);
        y.raise(2.0, 5.0, 0.25);
        assert_eq!(y.value(1.0), 1.0);
        assert_eq!(y.value(2.0), 1.0);
        assert_eq!(y.value(3.0), 0.25);
        assert_eq!(y.value(5.0), 0.25);
        assert_eq!(y.value(5.5), 0.0);
        assert!(y.is_valid(0.0));
        assert_eq!(y.breakpoints(), 2);
        assert!((y.integral(|v| v, 6.0) - (2.0 + 0.75)).abs() < 1e-15);
        assert!((y.integral(|v| 1.0 - v, 6.0) - (0.0 + 2.25 + 1.0)).abs() < 1e-15);
        y.collapse(5.0);
        assert_eq!(y.value(4.0), 1.0);
        assert_eq!(y.breakpoints(), 1);
    }

    #[test]
    fn detects_increase() {
        let mut y = StepFunction::default();
        y.raise(0.0, 2.0, 0.5);
        assert!(y.is_valid(0.0));
        // level 0 on (0, 1] followed by 0.5 is increasing in w
        y.raise(1.0, 3.0, 0.5);
        y.raise(0.0, 1.0, -0.5);
        assert!(!y.is_valid(0.0));
    }
}
