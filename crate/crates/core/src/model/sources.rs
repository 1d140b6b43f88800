use std::f64::consts::PI;

use super::PhysicalParameters;

/// Right-hand sides of the momentum, fluid mass, structure and storage equations.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SourceValues {
    pub f: [f64; 2],
    pub g: f64,
    pub h: [f64; 2],
    pub s: f64,
}

/// Manufactured sources of the channel benchmark.
pub fn test1_sources(x: f64, y: f64, t: f64, params: &PhysicalParameters) -> SourceValues {
    let et = t.exp();
    let (sx, cx) = (PI * x).sin_cos();
    let (sy2, cy2) = (0.5 * PI * y).sin_cos();
    let a = params.alpha;
    SourceValues {
        f: [
            PI * et * cy2 * cx + PI * params.mu_f * y.cos() * (PI * t).cos(),
            -0.5 * PI * et * sx * sy2,
        ],
        g: -2.0 * PI * (PI * t).cos(),
        h: [
            a * PI * et * cy2 * cx + params.mu_p * y.cos() * (PI * t).sin(),
            -0.5 * PI * a * et * sx * sy2,
        ],
        s: (params.s0 - 0.75 * PI * PI) * et * sx * cy2 - 2.0 * a * PI * (PI * t).cos(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SourceKind {
    Zero,
    Test1,
    /// Uniform fluid-mass source `g` over the fluid region, all others zero.
    Injection { g: f64 },
}

impl SourceKind {
    pub fn eval(&self, p: [f64; 2], t: f64, params: &PhysicalParameters) -> SourceValues {
        match *self {
            SourceKind::Zero => SourceValues::default(),
            SourceKind::Test1 => test1_sources(p[0], p[1], t, params),
            SourceKind::Injection { g } => SourceValues { g, ..Default::default() },
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, SourceKind::Zero | SourceKind::Injection { g: 0.0 })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> PhysicalParameters {
        PhysicalParameters::table2()
    }

    #[test]
    fn values_at_origin() {
        let v = test1_sources(0.0, 0.0, 0.0, &p());
        assert!((v.f[0] - (PI + PI * p().mu_f)).abs() < 1e-15);
        assert_eq!(v.f[1], 0.0);
        assert!((v.g + 2.0 * PI).abs() < 1e-15);
        assert!((v.s + 2.0 * p().alpha * PI).abs() < 1e-15);
        for (x, y) in [(0.3, 0.7), (0.9, -0.4)] {
            assert!((test1_sources(x, y, 0.0, &p()).g + 2.0 * PI).abs() < 1e-15);
        }
    }

    /// Analytic derivatives of the source formulas, written independently.
    fn derivs(x: f64, y: f64, t: f64, q: &PhysicalParameters) -> [[f64; 3]; 6] {
        let e = t.exp();
        let (a, mf, mp, s0) = (q.alpha, q.mu_f, q.mu_p, q.s0);
        let (c, s) = (f64::cos, f64::sin);
        let h = 0.5 * PI;
        [
            // f_x
            [
                -PI * PI * e * c(h * y) * s(PI * x),
                -PI * h * e * s(h * y) * c(PI * x) - PI * mf * s(y) * c(PI * t),
                PI * e * c(h * y) * c(PI * x) - PI * PI * mf * c(y) * s(PI * t),
            ],
            // f_y
            [-h * PI * e * c(PI * x) * s(h * y), -h * h * e * s(PI * x) * c(h * y), -h * e * s(PI * x) * s(h * y)],
            // h_x
            [
                -a * PI * PI * e * c(h * y) * s(PI * x),
                -a * PI * h * e * s(h * y) * c(PI * x) - mp * s(y) * s(PI * t),
                a * PI * e * c(h * y) * c(PI * x) + PI * mp * c(y) * c(PI * t),
            ],
            // h_y
            [
                -h * PI * a * e * c(PI * x) * s(h * y),
                -h * h * a * e * s(PI * x) * c(h * y),
                -h * a * e * s(PI * x) * s(h * y),
            ],
            // g
            [0.0, 0.0, 2.0 * PI * PI * s(PI * t)],
            // s
            [
                (s0 - 0.75 * PI * PI) * e * PI * c(PI * x) * c(h * y),
                -(s0 - 0.75 * PI * PI) * e * s(PI * x) * h * s(h * y),
                (s0 - 0.75 * PI * PI) * e * s(PI * x) * c(h * y) + 2.0 * a * PI * PI * s(PI * t),
            ],
        ]
    }

    fn flat(v: SourceValues) -> [f64; 6] {
        [v.f[0], v.f[1], v.h[0], v.h[1], v.g, v.s]
    }

    #[test]
    fn central_differences_converge_quadratically() {
        // Moderate parameters keep the difference quotients out of round-off.
        let q = PhysicalParameters {
            mu_p: 3.0,
            ..p()
        };
        let pt = [0.37, -0.61, 0.42];
        let exact = derivs(pt[0], pt[1], pt[2], &q);
        let err_at = |step: f64| {
            let mut worst = 0.0f64;
            for dir in 0..3 {
                let mut a = pt;
                let mut b = pt;
                a[dir] += step;
                b[dir] -= step;
                let fa = flat(test1_sources(a[0], a[1], a[2], &q));
                let fb = flat(test1_sources(b[0], b[1], b[2], &q));
                for k in 0..6 {
                    worst = worst.max(((fa[k] - fb[k]) / (2.0 * step) - exact[k][dir]).abs());
                }
            }
            worst
        };
        let errs: Vec<f64> = [1e-2, 5e-3, 2.5e-3].iter().map(|&s| err_at(s)).collect();
        for w in errs.windows(2) {
            let ratio = w[0] / w[1];
            assert!((3.5..4.5).contains(&ratio), "ratio {ratio} from {errs:?}");
        }
    }
}
