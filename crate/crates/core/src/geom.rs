//! Placement geometry for the low-level planner: direct least-squares
//! ellipse fitting of object outlines and major-axis alignment to the table.

use nalgebra::{Matrix3, Matrix6, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::world::{ObjectInstance, Workspace};

/// Axis ratio below which an outline counts as circular.
pub const ECCENTRICITY_CUTOFF: f64 = 1.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EllipseFit {
    pub center: (f64, f64),
    /// `(a, b)` with `a >= b > 0`.
    pub semi_axes: (f64, f64),
    /// Major-axis direction in degrees, `[0, 180)`.
    pub angle: f64,
    pub eccentricity_ok: bool,
}

/// General conic `A x^2 + B xy + C y^2 + D x + E y + F = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Conic(pub [f64; 6]);

/// Fits an ellipse to 2D points with the ellipse-specific algebraic least
/// squares method (constraint `4AC - B^2 = 1`), solved in the numerically
/// stable block form. Points are centered and scaled before fitting.
pub fn fit_ellipse(points: &[(f64, f64)]) -> Result<EllipseFit> {
    if points.len() < 6 || points.iter().any(|p| !p.0.is_finite() || !p.1.is_finite()) {
        return Err(Error::DegeneratePointSet);
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for &(x, y) in points {
        let (dx, dy) = (x - mx, y - my);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    let scale = ((sxx + syy) / n).sqrt();
    if scale <= 1e-15 {
        return Err(Error::DegeneratePointSet);
    }
    // smallest eigenvalue of the scatter matrix vanishes for collinear sets
    let (tr, det) = (sxx + syy, sxx * syy - sxy * sxy);
    let lmin = 0.5 * (tr - (tr * tr - 4.0 * det).max(0.0).sqrt());
    if lmin / tr < 1e-12 {
        return Err(Error::DegeneratePointSet);
    }

    let mut s1 = Matrix3::<f64>::zeros();
    let mut s2 = Matrix3::<f64>::zeros();
    let mut s3 = Matrix3::<f64>::zeros();
    for &(x, y) in points {
        let (x, y) = ((x - mx) / scale, (y - my) / scale);
        let d1 = Vector3::new(x * x, x * y, y * y);
        let d2 = Vector3::new(x, y, 1.0);
        s1 += d1 * d1.transpose();
        s2 += d1 * d2.transpose();
        s3 += d2 * d2.transpose();
    }
    if !general_conic_is_ellipse(&s1, &s2, &s3) {
        return Err(Error::NonEllipticFit);
    }
    let s3_inv = s3.try_inverse().ok_or(Error::DegeneratePointSet)?;
    let t = -s3_inv * s2.transpose();
    let reduced = s1 + s2 * t;
    // premultiply by the inverse of the constraint block [[0,0,2],[0,-1,0],[2,0,0]]
    let m = Matrix3::from_rows(&[
        reduced.row(2) / 2.0,
        -reduced.row(1),
        reduced.row(0) / 2.0,
    ]);

    let mut best: Option<(f64, Vector3<f64>)> = None;
    for lambda in real_eigenvalues(&m) {
        let Some(v) = null_vector(&(m - Matrix3::identity() * lambda)) else { continue };
        let cond = 4.0 * v[0] * v[2] - v[1] * v[1];
        if cond > 0.0 {
            // the admissible solution minimizes the algebraic error, i.e. has the
            // smallest non-negative generalized eigenvalue
            if best.is_none_or(|(l, _)| lambda.abs() < l.abs()) {
                best = Some((lambda, v));
            }
        }
    }
    let (_, a1) = best.ok_or(Error::NonEllipticFit)?;
    let a2 = t * a1;
    let conic = Conic([a1[0], a1[1], a1[2], a2[0], a2[1], a2[2]]);
    let fit = conic_to_ellipse(&conic)?;
    Ok(EllipseFit {
        center: (mx + fit.center.0 * scale, my + fit.center.1 * scale),
        semi_axes: (fit.semi_axes.0 * scale, fit.semi_axes.1 * scale),
        ..fit
    })
}

/// Whether the unconstrained algebraic best fit (unit-norm coefficients) is an ellipse.
fn general_conic_is_ellipse(s1: &Matrix3<f64>, s2: &Matrix3<f64>, s3: &Matrix3<f64>) -> bool {
    let mut scatter = Matrix6::<f64>::zeros();
    scatter.fixed_view_mut::<3, 3>(0, 0).copy_from(s1);
    scatter.fixed_view_mut::<3, 3>(0, 3).copy_from(s2);
    scatter.fixed_view_mut::<3, 3>(3, 0).copy_from(&s2.transpose());
    scatter.fixed_view_mut::<3, 3>(3, 3).copy_from(s3);
    let eig = scatter.symmetric_eigen();
    let (k, _) = eig.eigenvalues.argmin();
    let v = eig.eigenvectors.column(k);
    4.0 * v[0] * v[2] - v[1] * v[1] > 0.0
}

fn real_eigenvalues(m: &Matrix3<f64>) -> Vec<f64> {
    let scale = m.abs().max().max(1e-300);
    m.complex_eigenvalues()
        .iter()
        .filter(|c| c.im.abs() <= 1e-9 * scale)
        .map(|c| c.re)
        .collect()
}

/// Unit vector spanning the (numerical) null space of a rank-2 matrix.
fn null_vector(m: &Matrix3<f64>) -> Option<Vector3<f64>> {
    let rows = [m.row(0).transpose(), m.row(1).transpose(), m.row(2).transpose()];
    let candidates = [rows[0].cross(&rows[1]), rows[0].cross(&rows[2]), rows[1].cross(&rows[2])];
    let best = candidates.into_iter().max_by(|a, b| a.norm().total_cmp(&b.norm()))?;
    let norm = best.norm();
    (norm > 1e-300).then(|| best / norm)
}

/// Geometric parameters of a conic that is a real ellipse.
pub fn conic_to_ellipse(conic: &Conic) -> Result<EllipseFit> {
    let [mut a, mut b, mut c, mut d, mut e, mut f] = conic.0;
    if 4.0 * a * c - b * b <= 0.0 {
        return Err(Error::NonEllipticFit);
    }
    if a + c < 0.0 {
        [a, b, c, d, e, f] = [-a, -b, -c, -d, -e, -f];
    }
    let det = 4.0 * a * c - b * b;
    let xc = (b * e - 2.0 * c * d) / det;
    let yc = (b * d - 2.0 * a * e) / det;
    let f0 = f + 0.5 * (d * xc + e * yc);
    let mean = 0.5 * (a + c);
    let half_diff = (0.25 * (a - c) * (a - c) + 0.25 * b * b).sqrt();
    let (l_big, l_small) = (mean + half_diff, mean - half_diff);
    if f0 >= 0.0 || l_small <= 0.0 {
        return Err(Error::NonEllipticFit);
    }
    let major = (-f0 / l_small).sqrt();
    let minor = (-f0 / l_big).sqrt();
    // direction of the larger eigenvalue is the minor axis
    let minor_dir = 0.5 * b.atan2(a - c).to_degrees();
    let angle = (minor_dir + 90.0).rem_euclid(180.0);
    let angle = if angle >= 180.0 { 0.0 } else { angle };
    Ok(EllipseFit {
        center: (xc, yc),
        semi_axes: (major, minor),
        angle,
        eccentricity_ok: major / minor >= ECCENTRICITY_CUTOFF,
    })
}

/// Smallest rotation in `(-45, 45]` degrees taking the major axis onto the
/// nearest table axis. Near-circular fits need none.
pub fn alignment_rotation(fit: &EllipseFit) -> f64 {
    if !fit.eccentricity_ok {
        return 0.0;
    }
    let r = fit.angle.rem_euclid(90.0);
    if r < 45.0 {
        -r
    } else {
        90.0 - r
    }
}

/// Evenly spaced points along the outline of the posed footprint, starting at
/// the local `(-hx, -hy)` corner and walking counter-clockwise.
pub fn footprint_points(obj: &ObjectInstance, samples: usize) -> Vec<(f64, f64)> {
    let samples = samples.max(8);
    let rect = obj.footprint();
    let (hx, hy) = obj.half_extents;
    let perimeter = 4.0 * (hx + hy);
    let edges = [
        ((-hx, -hy), (1.0, 0.0), 2.0 * hx),
        ((hx, -hy), (0.0, 1.0), 2.0 * hy),
        ((hx, hy), (-1.0, 0.0), 2.0 * hx),
        ((-hx, hy), (0.0, -1.0), 2.0 * hy),
    ];
    (0..samples)
        .map(|k| {
            let mut s = perimeter * k as f64 / samples as f64;
            let mut point = edges[3].0;
            for &(start, dir, len) in &edges {
                if s < len {
                    point = (start.0 + dir.0 * s, start.1 + dir.1 * s);
                    break;
                }
                s -= len;
            }
            rect.to_world(point.0, point.1)
        })
        .collect()
}

/// Rotation bin for placing `obj`: the bin closest to its current heading
/// corrected by the outline's alignment rotation.
pub fn placement_bin(obj: &ObjectInstance, ws: &Workspace) -> usize {
    let correction = fit_ellipse(&footprint_points(obj, 64)).map(|f| alignment_rotation(&f)).unwrap_or(0.0);
    ws.nearest_bin(obj.pose.theta + correction)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::category::Category;
    use crate::world::Pose;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn ellipse_points(cx: f64, cy: f64, a: f64, b: f64, angle_deg: f64, n: usize) -> Vec<(f64, f64)> {
        let (s, c) = angle_deg.to_radians().sin_cos();
        (0..n)
            .map(|k| {
                let t = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                let (x, y) = (a * t.cos(), b * t.sin());
                (cx + x * c - y * s, cy + x * s + y * c)
            })
            .collect()
    }

    fn angle_diff(a: f64, b: f64) -> f64 {
        let d = (a - b).rem_euclid(180.0);
        d.min(180.0 - d)
    }

    #[test]
    fn exact_axis_aligned_ellipse() {
        let fit = fit_ellipse(&ellipse_points(0.0, 0.0, 0.2, 0.1, 0.0, 50)).unwrap();
        assert!(angle_diff(fit.angle, 0.0) < 1e-6, "{fit:?}");
        assert!((fit.semi_axes.0 - 0.2).abs() < 1e-6);
        assert!((fit.semi_axes.1 - 0.1).abs() < 1e-6);
        assert!(fit.center.0.abs() < 1e-9 && fit.center.1.abs() < 1e-9);
        assert!(fit.eccentricity_ok);
    }

    #[test]
    fn circle_is_not_eccentric() {
        let fit = fit_ellipse(&ellipse_points(0.4, 0.3, 0.1, 0.1, 0.0, 40)).unwrap();
        assert!(!fit.eccentricity_ok);
        assert_eq!(alignment_rotation(&fit), 0.0);
    }

    #[test]
    fn degenerate_inputs() {
        let five = ellipse_points(0.0, 0.0, 0.2, 0.1, 0.0, 5);
        assert_eq!(fit_ellipse(&five), Err(Error::DegeneratePointSet));
        let line: Vec<(f64, f64)> = (0..10).map(|i| (i as f64, 2.0 * i as f64)).collect();
        assert_eq!(fit_ellipse(&line), Err(Error::DegeneratePointSet));
    }

    #[test]
    fn hyperbola_points_are_not_elliptic() {
        let pts: Vec<(f64, f64)> = (1..=12)
            .flat_map(|i| {
                let x = 0.5 + i as f64 * 0.25;
                [(x, 1.0 / x), (-x, -1.0 / x)]
            })
            .collect();
        assert!(fit_ellipse(&pts).is_err());
    }

    #[test]
    fn noisy_rotated_ellipse() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let noise = Normal::new(0.0, 0.01 * 0.2).unwrap();
        let pts: Vec<(f64, f64)> = ellipse_points(0.3, 0.2, 0.2, 0.1, 30.0, 200)
            .into_iter()
            .map(|(x, y)| (x + noise.sample(&mut rng), y + noise.sample(&mut rng)))
            .collect();
        let fit = fit_ellipse(&pts).unwrap();
        assert!(angle_diff(fit.angle, 30.0) < 2.0);
        assert!((fit.semi_axes.0 / 0.2 - 1.0).abs() < 0.05);
        assert!((fit.semi_axes.1 / 0.1 - 1.0).abs() < 0.05);
    }

    #[test]
    fn alignment_examples() {
        let fit = |angle| EllipseFit {
            center: (0.0, 0.0),
            semi_axes: (0.2, 0.1),
            angle,
            eccentricity_ok: true,
        };
        assert_eq!(alignment_rotation(&fit(10.0)), -10.0);
        assert_eq!(alignment_rotation(&fit(80.0)), 10.0);
        assert_eq!(alignment_rotation(&fit(45.0)), 45.0);
        assert_eq!(alignment_rotation(&fit(135.0)), 45.0);
        assert_eq!(alignment_rotation(&fit(179.0)), 1.0);
    }

    fn rect(hx: f64, hy: f64, x: f64, y: f64, theta: f64) -> ObjectInstance {
        ObjectInstance {
            id: 0,
            category: Category::Book,
            half_extents: (hx, hy),
            pose: Pose::new(x, y, theta),
            is_support: false,
        }
    }

    #[test]
    fn unit_square_samples_corners_and_midpoints() {
        let pts = footprint_points(&rect(0.5, 0.5, 0.0, 0.0, 0.0), 8);
        let expected = [(-0.5, -0.5), (0.0, -0.5), (0.5, -0.5), (0.5, 0.0), (0.5, 0.5), (0.0, 0.5), (-0.5, 0.5), (-0.5, 0.0)];
        for (p, e) in pts.iter().zip(expected) {
            assert!((p.0 - e.0).abs() < 1e-12 && (p.1 - e.1).abs() < 1e-12, "{p:?} vs {e:?}");
        }
    }

    #[test]
    fn rotated_rectangle_equals_swapped_extents() {
        let a = footprint_points(&rect(0.2, 0.1, 0.5, 0.5, 90.0), 24);
        let b = footprint_points(&rect(0.1, 0.2, 0.5, 0.5, 0.0), 24);
        for p in &a {
            assert!(b.iter().any(|q| (p.0 - q.0).abs() < 1e-9 && (p.1 - q.1).abs() < 1e-9), "{p:?}");
        }
    }

    #[test]
    fn rectangle_outline_fit_tracks_heading() {
        for theta in [0.0, 17.0, 30.0, 60.0, 95.0, 143.0, 250.0] {
            let fit = fit_ellipse(&footprint_points(&rect(0.1, 0.05, 0.4, 0.3, theta), 64)).unwrap();
            assert!(angle_diff(fit.angle, theta) < 1.0, "theta {theta}: {fit:?}");
        }
    }

    #[test]
    fn placement_bin_snaps_to_axis() {
        let ws = Workspace::default();
        assert_eq!(placement_bin(&rect(0.1, 0.05, 0.5, 0.3, 37.0), &ws), 0);
        assert_eq!(placement_bin(&rect(0.1, 0.05, 0.5, 0.3, 100.0), &ws), 1);
        assert_eq!(placement_bin(&rect(0.05, 0.05, 0.5, 0.3, 181.0), &ws), 2);
    }

    #[test]
    fn catalog_outlines_fit() {
        for c in Category::ALL {
            let obj = ObjectInstance::from_category(0, c, Pose::new(0.5, 0.3, 23.0));
            let fit = fit_ellipse(&footprint_points(&obj, 64));
            assert!(fit.is_ok(), "{c}: {fit:?}");
        }
    }

    #[test]
    fn fit_is_rotation_equivariant() {
        let base = ellipse_points(0.1, -0.2, 0.3, 0.12, 20.0, 40);
        let f0 = fit_ellipse(&base).unwrap();
        for phi in [15.0f64, 70.0, 133.0] {
            let (s, c) = phi.to_radians().sin_cos();
            let rotated: Vec<(f64, f64)> = base.iter().map(|&(x, y)| (x * c - y * s, x * s + y * c)).collect();
            let f = fit_ellipse(&rotated).unwrap();
            assert!(angle_diff(f.angle, f0.angle + phi) < 1e-6);
        }
    }
}
