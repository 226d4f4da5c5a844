//! Tabulated Gauss rules on the reference triangle `{x, y >= 0, x + y <= 1}`
//! and the reference edge `[0, 1]`.

use crate::{Error, Result, Vec2};

pub const MAX_DEGREE: usize = 6;

#[derive(Debug, Clone)]
pub struct QuadRule {
    /// Reference coordinates; edge rules use only the first component.
    pub points: Vec<Vec2>,
    pub weights: Vec<f64>,
    pub exactness_degree: usize,
}

impl QuadRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Vec2, f64)> + '_ {
        self.points
            .iter()
            .copied()
            .zip(self.weights.iter().copied())
    }
}

fn check_degree(degree: usize) -> Result<()> {
    if (1..=MAX_DEGREE).contains(&degree) {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "no quadrature rule for degree {degree} (supported 1..={MAX_DEGREE})"
        )))
    }
}

// Symmetric orbits: S3(a) = {(a, a), (1-2a, a), (a, 1-2a)},
// S6(a, b) = all permutations of (a, b, 1-a-b).
fn push_s3(rule: &mut QuadRule, a: f64, w: f64) {
    let b = 1.0 - 2.0 * a;
    for p in [[a, a], [b, a], [a, b]] {
        rule.points.push(p);
        rule.weights.push(0.5 * w);
    }
}

fn push_s6(rule: &mut QuadRule, a: f64, b: f64, w: f64) {
    let c = 1.0 - a - b;
    for p in [[a, b], [b, a], [a, c], [c, a], [b, c], [c, b]] {
        rule.points.push(p);
        rule.weights.push(0.5 * w);
    }
}

/// Symmetric Gauss rule on the reference triangle exact for total degree
/// `degree`. Weights are positive and sum to 1/2.
pub fn triangle_rule(degree: usize) -> Result<QuadRule> {
    check_degree(degree)?;
    let mut rule = QuadRule {
        points: Vec::new(),
        weights: Vec::new(),
        exactness_degree: 0,
    };
    match degree {
        1 => {
            rule.points.push([1.0 / 3.0, 1.0 / 3.0]);
            rule.weights.push(0.5);
            rule.exactness_degree = 1;
        }
        2 => {
            push_s3(&mut rule, 1.0 / 6.0, 1.0 / 3.0);
            rule.exactness_degree = 2;
        }
        // the classical degree-3 rule has a negative weight; use the degree-4 one
        3 | 4 => {
            push_s3(
                &mut rule,
                0.445_948_490_915_964_886_3,
                0.223_381_589_678_011_465_7,
            );
            push_s3(
                &mut rule,
                0.091_576_213_509_770_743_46,
                0.109_951_743_655_321_867_6,
            );
            rule.exactness_degree = 4;
        }
        5 => {
            rule.points.push([1.0 / 3.0, 1.0 / 3.0]);
            rule.weights.push(0.5 * 0.225);
            push_s3(
                &mut rule,
                0.101_286_507_323_456_338_8,
                0.125_939_180_544_827_152_6,
            );
            push_s3(
                &mut rule,
                0.470_142_064_105_115_089_8,
                0.132_394_152_788_506_180_7,
            );
            rule.exactness_degree = 5;
        }
        _ => {
            push_s3(
                &mut rule,
                0.063_089_014_491_502_964_90,
                0.050_844_906_370_207_822_12,
            );
            push_s3(
                &mut rule,
                0.249_286_745_170_908_414_7,
                0.116_786_275_726_382_626_5,
            );
            push_s6(
                &mut rule,
                0.053_145_049_844_815_590_38,
                0.310_352_451_033_786_502_7,
                0.082_851_075_618_371_442_34,
            );
            rule.exactness_degree = 6;
        }
    }
    Ok(rule)
}

/// Gauss-Legendre rule on `[0, 1]` exact for polynomials of degree `degree`.
pub fn edge_rule(degree: usize) -> Result<QuadRule> {
    check_degree(degree)?;
    let (nodes, weights): (&[f64], &[f64]) = match degree {
        1 => (&[0.5], &[1.0]),
        2 | 3 => (
            &[0.211_324_865_405_187_117_8, 0.788_675_134_594_812_882_3],
            &[0.5, 0.5],
        ),
        4 | 5 => (
            &[
                0.112_701_665_379_258_311_5,
                0.5,
                0.887_298_334_620_741_688_5,
            ],
            &[5.0 / 18.0, 4.0 / 9.0, 5.0 / 18.0],
        ),
        _ => (
            &[
                0.069_431_844_202_973_712_39,
                0.330_009_478_207_571_867_6,
                0.669_990_521_792_428_132_4,
                0.930_568_155_797_026_287_6,
            ],
            &[
                0.173_927_422_568_726_928_7,
                0.326_072_577_431_273_071_3,
                0.326_072_577_431_273_071_3,
                0.173_927_422_568_726_928_7,
            ],
        ),
    };
    Ok(QuadRule {
        points: nodes.iter().map(|&s| [s, 0.0]).collect(),
        weights: weights.to_vec(),
        exactness_degree: 2 * nodes.len() - 1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::AffineMap;

    fn factorial(n: usize) -> f64 {
        (1..=n).map(|k| k as f64).product()
    }

    // x^a y^b over the reference triangle: a! b! / (a + b + 2)!
    fn triangle_monomial(a: usize, b: usize) -> f64 {
        factorial(a) * factorial(b) / factorial(a + b + 2)
    }

    fn integrate(rule: &QuadRule, f: impl Fn(f64, f64) -> f64) -> f64 {
        rule.iter().map(|(p, w)| w * f(p[0], p[1])).sum()
    }

    #[test]
    fn triangle_examples() {
        let r1 = triangle_rule(1).unwrap();
        assert!((integrate(&r1, |_, _| 1.0) - 0.5).abs() < 1e-15);
        let r3 = triangle_rule(3).unwrap();
        assert!((integrate(&r3, |x, y| x * x * y) - 1.0 / 60.0).abs() < 1e-15);
        let r2 = triangle_rule(2).unwrap();
        assert!((integrate(&r2, |x, y| x + y) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn edge_examples() {
        let r1 = edge_rule(1).unwrap();
        assert!((integrate(&r1, |_, _| 1.0) - 1.0).abs() < 1e-15);
        let r3 = edge_rule(3).unwrap();
        assert!((integrate(&r3, |x, _| x.powi(3)) - 0.25).abs() < 1e-15);
        let r5 = edge_rule(5).unwrap();
        assert!((integrate(&r5, |x, _| x.powi(5)) - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn exactness_sweep() {
        for d in 1..=MAX_DEGREE {
            let tri = triangle_rule(d).unwrap();
            assert!(tri.exactness_degree >= d);
            assert!(tri.weights.iter().all(|&w| w > 0.0));
            assert!(tri
                .points
                .iter()
                .all(|p| p[0] >= 0.0 && p[1] >= 0.0 && p[0] + p[1] <= 1.0));
            for a in 0..=tri.exactness_degree {
                for b in 0..=tri.exactness_degree - a {
                    let exact = triangle_monomial(a, b);
                    let q = integrate(&tri, |x, y| x.powi(a as i32) * y.powi(b as i32));
                    assert!(
                        (q - exact).abs() <= 1e-13 * exact,
                        "deg {d} x^{a} y^{b}: {q} vs {exact}"
                    );
                }
            }
            let edge = edge_rule(d).unwrap();
            assert!(edge.exactness_degree >= d);
            assert!(edge.weights.iter().all(|&w| w > 0.0));
            for a in 0..=edge.exactness_degree {
                let exact = 1.0 / (a as f64 + 1.0);
                let q = integrate(&edge, |x, _| x.powi(a as i32));
                assert!((q - exact).abs() <= 1e-13 * exact, "edge deg {d} x^{a}");
            }
        }
    }

    #[test]
    fn mapped_rule_measures_area() {
        let map = AffineMap::new([0.2, 0.1], [0.9, 0.3], [0.4, 0.8]);
        let rule = triangle_rule(4).unwrap();
        let area: f64 = rule.weights.iter().map(|w| w * map.det).sum();
        assert!((area - 0.5 * map.det).abs() < 1e-15);
    }

    #[test]
    fn unsupported_degrees() {
        assert!(matches!(triangle_rule(0), Err(Error::Config(_))));
        assert!(matches!(edge_rule(7), Err(Error::Config(_))));
    }
}
