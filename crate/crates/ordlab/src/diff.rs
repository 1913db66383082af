//! Central finite differences with Richardson extrapolation.
//!
//! All numeric differentiation in the crate funnels through [`DiffConfig`].
//! `base_step` is the reference step for a first derivative with the
//! second-order stencil; other derivative/stencil orders rescale it as
//! `base_step^(3/(k+p))` (k = derivative order, p = stencil order) so each
//! stencil runs near its own truncation/roundoff optimum. With the default
//! `base_step = eps^(1/3)` this reproduces the textbook `eps^(1/(k+p))`
//! step for every combination.

use crate::error::{Error, Result};

/// Numeric differentiation settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffConfig {
    /// Reference step, scaled per coordinate by `max(1, |x|)`.
    pub base_step: f64,
    /// Richardson tableau depth; 1 means the bare stencil.
    pub richardson_levels: usize,
    /// Central stencil order: 2, 4 or 6.
    pub stencil_order: usize,
}

impl Default for DiffConfig {
    fn default() -> Self {
        DiffConfig {
            base_step: f64::EPSILON.cbrt(),
            richardson_levels: 2,
            stencil_order: 4,
        }
    }
}

impl DiffConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.base_step > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "base_step must be positive, got {}",
                self.base_step
            )));
        }
        if self.richardson_levels < 1 {
            return Err(Error::InvalidConfig(
                "richardson_levels must be >= 1".into(),
            ));
        }
        if ![2, 4, 6].contains(&self.stencil_order) {
            return Err(Error::InvalidConfig(format!(
                "stencil_order must be 2, 4 or 6, got {}",
                self.stencil_order
            )));
        }
        Ok(())
    }

    /// Step size for a k-th derivative at coordinate value `x`.
    pub fn step(&self, x: f64, k: usize) -> f64 {
        let p = self.stencil_order as f64;
        let h = self.base_step.powf(3.0 / (k as f64 + p));
        h * x.abs().max(1.0)
    }

    /// Same config with the base step widened by `factor` (outer nesting step).
    pub fn widened(&self, factor: f64) -> Self {
        DiffConfig {
            base_step: self.base_step * factor,
            ..*self
        }
    }
}

/// Antisymmetric weights for the first-derivative central stencil:
/// f'(x) ~ sum_i w_i (f(x + i h) - f(x - i h)) / h.
fn d1_weights(order: usize) -> &'static [f64] {
    match order {
        2 => &[0.5],
        4 => &[8.0 / 12.0, -1.0 / 12.0],
        6 => &[45.0 / 60.0, -9.0 / 60.0, 1.0 / 60.0],
        _ => unreachable!("validated stencil order"),
    }
}

/// Symmetric weights for the second-derivative central stencil:
/// f''(x) ~ (w_0 f(x) + sum_{i>0} w_i (f(x + i h) + f(x - i h))) / h^2.
fn d2_weights(order: usize) -> &'static [f64] {
    match order {
        2 => &[-2.0, 1.0],
        4 => &[-30.0 / 12.0, 16.0 / 12.0, -1.0 / 12.0],
        6 => &[-490.0 / 180.0, 270.0 / 180.0, -27.0 / 180.0, 2.0 / 180.0],
        _ => unreachable!("validated stencil order"),
    }
}

fn stencil_d1<F: FnMut(f64) -> f64>(f: &mut F, x: f64, h: f64, order: usize) -> f64 {
    let w = d1_weights(order);
    let mut acc = 0.0;
    for (i, wi) in w.iter().enumerate() {
        let off = (i + 1) as f64 * h;
        acc += wi * (f(x + off) - f(x - off));
    }
    acc / h
}

fn stencil_d2<F: FnMut(f64) -> f64>(f: &mut F, x: f64, h: f64, order: usize) -> f64 {
    let w = d2_weights(order);
    let mut acc = w[0] * f(x);
    for (i, wi) in w.iter().enumerate().skip(1) {
        let off = i as f64 * h;
        acc += wi * (f(x + off) + f(x - off));
    }
    acc / (h * h)
}

/// Richardson tableau over halved steps. The central stencils carry an even
/// error series starting at h^p, so level j removes the h^(p + 2(j-1)) term.
fn richardson<G: FnMut(f64) -> f64>(mut eval: G, h0: f64, p: usize, levels: usize) -> f64 {
    let mut tableau = vec![vec![0.0; levels]; levels];
    for (i, row) in tableau.iter_mut().enumerate() {
        row[0] = eval(h0 / 2f64.powi(i as i32));
    }
    for j in 1..levels {
        for i in j..levels {
            let q = 2f64.powi((p + 2 * (j - 1)) as i32);
            tableau[i][j] = (q * tableau[i][j - 1] - tableau[i - 1][j - 1]) / (q - 1.0);
        }
    }
    tableau[levels - 1][levels - 1]
}

/// First derivative of a scalar function of one variable.
pub fn derivative1<F: Fn(f64) -> f64>(f: F, x: f64, cfg: &DiffConfig) -> f64 {
    let h0 = cfg.step(x, 1);
    richardson(
        |h| stencil_d1(&mut |t| f(t), x, h, cfg.stencil_order),
        h0,
        cfg.stencil_order,
        cfg.richardson_levels,
    )
}

/// Second derivative of a scalar function of one variable.
pub fn derivative2<F: Fn(f64) -> f64>(f: F, x: f64, cfg: &DiffConfig) -> f64 {
    let h0 = cfg.step(x, 2);
    richardson(
        |h| stencil_d2(&mut |t| f(t), x, h, cfg.stencil_order),
        h0,
        cfg.stencil_order,
        cfg.richardson_levels,
    )
}

/// Partial derivative along axis `a` of a function on R^n.
pub fn partial<F: Fn(&[f64]) -> f64>(f: F, x: &[f64], a: usize, cfg: &DiffConfig) -> f64 {
    let base = x.to_vec();
    derivative1(
        |t| {
            let mut y = base.clone();
            y[a] = t;
            f(&y)
        },
        x[a],
        cfg,
    )
}

/// Second partial along axes `a`, `b` (equal or mixed).
pub fn partial2<F: Fn(&[f64]) -> f64>(
    f: F,
    x: &[f64],
    a: usize,
    b: usize,
    cfg: &DiffConfig,
) -> f64 {
    if a == b {
        let base = x.to_vec();
        derivative2(
            |t| {
                let mut y = base.clone();
                y[a] = t;
                f(&y)
            },
            x[a],
            cfg,
        )
    } else {
        let base = x.to_vec();
        // nested first-derivative stencils
        derivative1(
            |t| {
                let mut y = base.clone();
                y[a] = t;
                partial(&f, &y, b, cfg)
            },
            x[a],
            cfg,
        )
    }
}
