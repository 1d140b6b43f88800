//! Quadrature on the reference triangle and the unit segment.

use crate::error::{Error, Result};

/// Points in barycentric form (`D = 3` for triangles, `D = 2` for segments).
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule<const D: usize> {
    pub points: Vec<[f64; D]>,
    /// Sum to the reference measure: 1/2 for the triangle, 1 for the segment.
    pub weights: Vec<f64>,
    pub degree: usize,
}

pub type TriangleRule = QuadratureRule<3>;
pub type EdgeRule = QuadratureRule<2>;

impl<const D: usize> QuadratureRule<D> {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Builder for fully symmetric triangle rules with area-normalized weights.
struct Orbits(Vec<[f64; 3]>, Vec<f64>);

impl Orbits {
    fn new() -> Self {
        Orbits(Vec::new(), Vec::new())
    }

    fn centroid(mut self, w: f64) -> Self {
        self.0.push([1.0 / 3.0; 3]);
        self.1.push(w);
        self
    }

    /// The three permutations of (a, a, 1 - 2a).
    fn three(mut self, a: f64, w: f64) -> Self {
        let b = 1.0 - 2.0 * a;
        for p in [[b, a, a], [a, b, a], [a, a, b]] {
            self.0.push(p);
            self.1.push(w);
        }
        self
    }

    /// The six permutations of (a, b, 1 - a - b).
    fn six(mut self, a: f64, b: f64, w: f64) -> Self {
        let c = 1.0 - a - b;
        for p in [[a, b, c], [b, a, c], [a, c, b], [c, a, b], [b, c, a], [c, b, a]] {
            self.0.push(p);
            self.1.push(w);
        }
        self
    }

    fn finish(self, degree: usize) -> TriangleRule {
        QuadratureRule {
            points: self.0,
            weights: self.1.into_iter().map(|w| 0.5 * w).collect(),
            degree,
        }
    }
}

/// Symmetric rule exact for polynomials of total degree `min_exact_degree`.
pub fn triangle_quadrature(min_exact_degree: usize) -> Result<TriangleRule> {
    let rule = match min_exact_degree {
        1 => Orbits::new().centroid(1.0).finish(1),
        2 => Orbits::new().three(1.0 / 6.0, 1.0 / 3.0).finish(2),
        3 | 4 => Orbits::new()
            .three(0.445_948_490_915_964_886_32, 0.223_381_589_678_011_465_7)
            .three(0.091_576_213_509_770_743_46, 0.109_951_743_655_321_867_64)
            .finish(4),
        5 => Orbits::new()
            .centroid(0.225)
            .three(0.470_142_064_105_115_089_77, 0.132_394_152_788_506_180_74)
            .three(0.101_286_507_323_456_338_8, 0.125_939_180_544_827_152_6)
            .finish(5),
        6 => Orbits::new()
            .three(0.249_286_745_170_910_421_29, 0.116_786_275_726_379_366_03)
            .three(0.063_089_014_491_502_228_34, 0.050_844_906_370_206_816_921)
            .six(
                0.053_145_049_844_816_947_353,
                0.310_352_451_033_784_405_42,
                0.082_851_075_618_373_575_194,
            )
            .finish(6),
        d => {
            return Err(Error::Parameter(format!(
                "no triangle rule for degree {d}; supported degrees are 1 to 6"
            )))
        }
    };
    Ok(rule)
}

/// Gauss–Legendre rule on [0, 1] exact to `min_exact_degree`.
pub fn edge_quadrature(min_exact_degree: usize) -> Result<EdgeRule> {
    let (s, w, degree): (Vec<f64>, Vec<f64>, usize) = match min_exact_degree {
        1 => (vec![0.5], vec![1.0], 1),
        2 | 3 => {
            let d = 0.5 / 3f64.sqrt();
            (vec![0.5 - d, 0.5 + d], vec![0.5, 0.5], 3)
        }
        4 | 5 => {
            let d = 0.5 * 0.6f64.sqrt();
            (vec![0.5 - d, 0.5, 0.5 + d], vec![5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0], 5)
        }
        6 => {
            let r = 2.0 / 7.0 * 1.2f64.sqrt();
            let inner = (3.0 / 7.0 - r).sqrt();
            let outer = (3.0 / 7.0 + r).sqrt();
            let wi = (18.0 + 30f64.sqrt()) / 72.0;
            let wo = (18.0 - 30f64.sqrt()) / 72.0;
            (
                vec![0.5 - 0.5 * outer, 0.5 - 0.5 * inner, 0.5 + 0.5 * inner, 0.5 + 0.5 * outer],
                vec![wo, wi, wi, wo],
                7,
            )
        }
        d => {
            return Err(Error::Parameter(format!(
                "no edge rule for degree {d}; supported degrees are 1 to 6"
            )))
        }
    };
    Ok(QuadratureRule {
        points: s.into_iter().map(|s| [1.0 - s, s]).collect(),
        weights: w,
        degree,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: u32) -> f64 {
        (1..=n).map(f64::from).product()
    }

    /// Integral of x^a y^b over the reference triangle.
    fn monomial_exact(a: u32, b: u32) -> f64 {
        factorial(a) * factorial(b) / factorial(a + b + 2)
    }

    fn integrate(rule: &TriangleRule, f: impl Fn(f64, f64) -> f64) -> f64 {
        rule.points
            .iter()
            .zip(&rule.weights)
            .map(|(p, w)| w * f(p[1], p[2]))
            .sum()
    }

    #[test]
    fn spot_values() {
        let r = triangle_quadrature(4).unwrap();
        assert!((integrate(&r, |_, _| 1.0) - 0.5).abs() < 1e-15);
        assert!((integrate(&r, |x, _| x) - 1.0 / 6.0).abs() < 1e-15);
        assert!((integrate(&r, |x, y| x * x * y * y) - 1.0 / 180.0).abs() < 1e-15);

        let e = edge_quadrature(5).unwrap();
        assert_eq!(e.len(), 3);
        let s4: f64 = e.points.iter().zip(&e.weights).map(|(p, w)| w * p[1].powi(4)).sum();
        assert!((s4 - 0.2).abs() < 1e-15);
    }

    #[test]
    fn triangle_rules_are_exact_on_monomials() {
        for deg in 1..=6 {
            let r = triangle_quadrature(deg).unwrap();
            assert!(r.weights.iter().all(|&w| w > 0.0));
            for p in &r.points {
                assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-15);
            }
            for a in 0..=deg as u32 {
                for b in 0..=(deg as u32 - a) {
                    let got = integrate(&r, |x, y| x.powi(a as i32) * y.powi(b as i32));
                    let want = monomial_exact(a, b);
                    assert!((got - want).abs() < 1e-13, "deg {deg}: x^{a} y^{b}: {got} vs {want}");
                }
            }
        }
    }

    #[test]
    fn edge_rules_are_exact_on_monomials() {
        for deg in 1..=6 {
            let r = edge_quadrature(deg).unwrap();
            assert!(r.weights.iter().all(|&w| w > 0.0));
            for k in 0..=deg as i32 {
                let got: f64 = r.points.iter().zip(&r.weights).map(|(p, w)| w * p[1].powi(k)).sum();
                assert!((got - 1.0 / (k as f64 + 1.0)).abs() < 1e-13, "deg {deg}, s^{k}");
            }
        }
    }

    #[test]
    fn unsupported_degrees() {
        assert!(triangle_quadrature(0).is_err());
        assert!(triangle_quadrature(7).is_err());
        assert!(edge_quadrature(0).is_err());
        assert!(edge_quadrature(7).is_err());
    }
}
