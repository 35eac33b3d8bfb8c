//! Classical fourth-order Runge–Kutta on complex state vectors.

use crate::hardy::C64;

/// Advances `y` by one step of size `h`. `f` returns the time derivative and
/// is called four times, so any state-dependent coefficient it uses is
/// re-evaluated at every stage.
pub fn rk4_step<F>(y: &mut [C64], h: f64, mut f: F)
where
    F: FnMut(&[C64]) -> Vec<C64>,
{
    let n = y.len();
    let mut stage = vec![C64::new(0.0, 0.0); n];

    let k1 = f(y);
    for i in 0..n {
        stage[i] = y[i] + k1[i] * (0.5 * h);
    }
    let k2 = f(&stage);
    for i in 0..n {
        stage[i] = y[i] + k2[i] * (0.5 * h);
    }
    let k3 = f(&stage);
    for i in 0..n {
        stage[i] = y[i] + k3[i] * h;
    }
    let k4 = f(&stage);
    for i in 0..n {
        y[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (h / 6.0);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_oscillator_has_fourth_order_error() {
        // y' = -i y, y(1) = e^{-i}
        let run = |steps: usize| {
            let h = 1.0 / steps as f64;
            let mut y = vec![C64::new(1.0, 0.0)];
            for _ in 0..steps {
                rk4_step(&mut y, h, |s| vec![-C64::i() * s[0]]);
            }
            (y[0] - C64::from_polar(1.0, -1.0)).norm()
        };
        let ratio = run(20) / run(40);
        assert!((ratio - 16.0).abs() < 1.0, "{ratio}");
    }
}
