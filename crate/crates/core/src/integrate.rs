//! Classical fixed-step fourth-order Runge–Kutta for complex state vectors.

use num_complex::Complex64 as C64;

pub struct Rk4 {
    k1: Vec<C64>,
    k2: Vec<C64>,
    k3: Vec<C64>,
    k4: Vec<C64>,
    tmp: Vec<C64>,
}

impl Rk4 {
    pub fn new(dim: usize) -> Self {
        let z = vec![C64::new(0.0, 0.0); dim];
        Self { k1: z.clone(), k2: z.clone(), k3: z.clone(), k4: z.clone(), tmp: z }
    }

    /// Advance `y` from `t` to `t + h`; `f(t, y, dy)` writes the derivative.
    pub fn step<F>(&mut self, f: &mut F, t: f64, h: f64, y: &mut [C64])
    where
        F: FnMut(f64, &[C64], &mut [C64]),
    {
        let n = y.len();
        f(t, y, &mut self.k1);
        for i in 0..n {
            self.tmp[i] = y[i] + self.k1[i] * (0.5 * h);
        }
        f(t + 0.5 * h, &self.tmp, &mut self.k2);
        for i in 0..n {
            self.tmp[i] = y[i] + self.k2[i] * (0.5 * h);
        }
        f(t + 0.5 * h, &self.tmp, &mut self.k3);
        for i in 0..n {
            self.tmp[i] = y[i] + self.k3[i] * h;
        }
        f(t + h, &self.tmp, &mut self.k4);
        let h6 = h / 6.0;
        for i in 0..n {
            y[i] += (self.k1[i] + (self.k2[i] + self.k3[i]) * 2.0 + self.k4[i]) * h6;
        }
    }
}

/// Integrate from `t0` to `t1` in `ceil((t1−t0)/max_step)` equal steps.
pub fn integrate_interval<F>(rk: &mut Rk4, f: &mut F, t0: f64, t1: f64, max_step: f64, y: &mut [C64])
where
    F: FnMut(f64, &[C64], &mut [C64]),
{
    let span = t1 - t0;
    if span <= 0.0 {
        return;
    }
    let n = (span / max_step).ceil().max(1.0) as usize;
    let h = span / n as f64;
    for k in 0..n {
        rk.step(f, t0 + k as f64 * h, h, y);
    }
}
