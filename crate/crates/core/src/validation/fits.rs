//! Hydrodynamic scaling-law fits over section-averaged predictions.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize)]
pub struct FitResult {
    pub depth: f64,
    /// `[C]` for the origin-constrained drag law, `[F_0, C_L]` for the
    /// vertical law.
    pub coeffs: Vec<f64>,
    pub r2: f64,
    pub n: usize,
}

fn centered_r2(residual_sq: f64, total_sq: f64) -> f64 {
    if total_sq == 0.0 {
        if residual_sq == 0.0 {
            1.0
        } else {
            f64::NEG_INFINITY
        }
    } else {
        1.0 - residual_sq / total_sq
    }
}

/// Origin-constrained least squares y = C x, with R² computed against the
/// centered mean as usual.
pub fn fit_drag(points: &[(f64, f64)], depth: f64) -> Result<FitResult> {
    if points.len() < 2 {
        return Err(Error::Data("drag fit needs at least two points".into()));
    }
    let sxx: f64 = points.iter().map(|(x, _)| x * x).sum();
    if sxx == 0.0 {
        return Err(Error::Numeric("degenerate drag fit: all speeds zero".into()));
    }
    let sxy: f64 = points.iter().map(|(x, y)| x * y).sum();
    let c = sxy / sxx;
    let ybar = points.iter().map(|(_, y)| y).sum::<f64>() / points.len() as f64;
    let ss_res: f64 = points.iter().map(|(x, y)| (y - c * x).powi(2)).sum();
    let ss_tot: f64 = points.iter().map(|(_, y)| (y - ybar).powi(2)).sum();
    Ok(FitResult {
        depth,
        coeffs: vec![c],
        r2: centered_r2(ss_res, ss_tot),
        n: points.len(),
    })
}

/// Ordinary least squares y = a + b x, returning (a, b, R²).
pub fn fit_linear(points: &[(f64, f64)]) -> Result<(f64, f64, f64)> {
    if points.len() < 2 {
        return Err(Error::Data("linear fit needs at least two points".into()));
    }
    let n = points.len() as f64;
    let xbar = points.iter().map(|(x, _)| x).sum::<f64>() / n;
    let ybar = points.iter().map(|(_, y)| y).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|(x, _)| (x - xbar).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Numeric(
            "degenerate linear fit: no spread in the predictor".into(),
        ));
    }
    let sxy: f64 = points.iter().map(|(x, y)| (x - xbar) * (y - ybar)).sum();
    let b = sxy / sxx;
    let a = ybar - b * xbar;
    let ss_res: f64 = points.iter().map(|(x, y)| (y - a - b * x).powi(2)).sum();
    let ss_tot: f64 = points.iter().map(|(_, y)| (y - ybar).powi(2)).sum();
    Ok((a, b, centered_r2(ss_res, ss_tot)))
}

/// Free-intercept fit of the vertical force law F_z = F_0 + C_L v².
pub fn fit_vertical(points: &[(f64, f64)], depth: f64) -> Result<FitResult> {
    let (f0, cl, r2) = fit_linear(points)?;
    Ok(FitResult {
        depth,
        coeffs: vec![f0, cl],
        r2,
        n: points.len(),
    })
}

/// Dimensionless drag coefficient from the effective one, treating the
/// frontal area as width times depth.
pub fn physical_cd(cd_eff: f64, density: f64, width: f64, depth: f64) -> Result<f64> {
    if density <= 0.0 || width <= 0.0 {
        return Err(Error::Config("density and width must be positive".into()));
    }
    if depth <= 0.0 {
        return Err(Error::Numeric("physical drag coefficient undefined at zero depth".into()));
    }
    Ok(cd_eff / (0.5 * density * width * depth))
}

/// One section-averaged trial point for pairing: nominal depth, mean
/// speed, and mean absolute streamwise force.
#[derive(Debug, Clone, Copy)]
pub struct PairPoint {
    pub depth: f64,
    pub speed: f64,
    pub fx_abs: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PairStats {
    pub depth_a: f64,
    pub depth_b: f64,
    pub n_pairs: usize,
    /// Mean over pairs of C_b / C_a with C = |F̄_x| / v̄².
    pub mean_ratio: f64,
    /// Ratio implied by the per-depth aggregate fits.
    pub fit_ratio: f64,
    pub pct_dev: f64,
}

/// Speed-matched cross-depth ratio check of per-trial drag coefficients
/// against the aggregate fits.
pub fn matched_pair_check(
    points: &[PairPoint],
    fits: &[FitResult],
    speed_tol: f64,
    min_speed: f64,
) -> Vec<PairStats> {
    let mut out = Vec::new();
    for (ai, a) in fits.iter().enumerate() {
        for b in fits.iter().skip(ai + 1) {
            let pa: Vec<&PairPoint> = points
                .iter()
                .filter(|p| p.depth == a.depth && p.speed >= min_speed)
                .collect();
            let pb: Vec<&PairPoint> = points
                .iter()
                .filter(|p| p.depth == b.depth && p.speed >= min_speed)
                .collect();
            let mut ratios = Vec::new();
            for i in &pa {
                for j in &pb {
                    if (i.speed - j.speed).abs() <= speed_tol {
                        let ci = i.fx_abs / (i.speed * i.speed);
                        let cj = j.fx_abs / (j.speed * j.speed);
                        if ci > 0.0 {
                            ratios.push(cj / ci);
                        }
                    }
                }
            }
            if ratios.is_empty() {
                continue;
            }
            let mean_ratio = ratios.iter().sum::<f64>() / ratios.len() as f64;
            let fit_ratio = b.coeffs[0] / a.coeffs[0];
            out.push(PairStats {
                depth_a: a.depth,
                depth_b: b.depth,
                n_pairs: ratios.len(),
                mean_ratio,
                fit_ratio,
                pct_dev: 100.0 * (mean_ratio - fit_ratio).abs() / fit_ratio.abs(),
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn drag_fit_exact_proportionality() {
        let fit = fit_drag(&[(1.0, 50.0), (4.0, 200.0)], 0.1).unwrap();
        assert_relative_eq!(fit.coeffs[0], 50.0, epsilon = 1e-12);
        assert_relative_eq!(fit.r2, 1.0, epsilon = 1e-12);
        assert_eq!(fit.n, 2);
    }

    #[test]
    fn drag_fit_residuals_are_orthogonal_to_x() {
        let points: Vec<(f64, f64)> = (1..20)
            .map(|k| {
                let x = k as f64 * 0.37;
                (x, 48.0 * x + ((k * 7919) % 13) as f64 - 6.0)
            })
            .collect();
        let fit = fit_drag(&points, 0.2).unwrap();
        let c = fit.coeffs[0];
        let dot: f64 = points.iter().map(|(x, y)| x * (y - c * x)).sum();
        let scale: f64 = points.iter().map(|(x, y)| (x * y).abs()).sum();
        assert!(dot.abs() / scale < 1e-9);
    }

    #[test]
    fn drag_fit_degenerate_inputs() {
        assert!(matches!(fit_drag(&[(1.0, 2.0)], 0.1), Err(Error::Data(_))));
        assert!(matches!(
            fit_drag(&[(0.0, 2.0), (0.0, 3.0)], 0.1),
            Err(Error::Numeric(_))
        ));
    }

    #[test]
    fn physical_cd_reference_values() {
        // Back-computed width fixture: 49.2 / (0.5 * 1000 * 1.383 * 0.1016).
        let cd = physical_cd(49.2, 1000.0, 1.383, 0.1016).unwrap();
        assert_relative_eq!(cd, 0.70, epsilon = 5e-3);
        let half = physical_cd(49.2, 1000.0, 2.0 * 1.383, 0.1016).unwrap();
        assert_relative_eq!(half, cd / 2.0, epsilon = 1e-12);
        let unity = physical_cd(0.5 * 1000.0 * 1.383 * 0.1016, 1000.0, 1.383, 0.1016).unwrap();
        assert_relative_eq!(unity, 1.0, epsilon = 1e-12);
        assert!(physical_cd(49.2, 1000.0, 1.383, 0.0).is_err());
    }

    #[test]
    fn vertical_fit_recovers_intercept_and_slope() {
        let fit = fit_vertical(&[(0.0, 5.0), (1.0, 5.0), (4.0, 5.0)], 0.1).unwrap();
        assert_relative_eq!(fit.coeffs[0], 5.0, epsilon = 1e-12);
        assert_relative_eq!(fit.coeffs[1], 0.0, epsilon = 1e-12);
        assert_relative_eq!(fit.r2, 1.0, epsilon = 1e-12);

        let fit = fit_vertical(&[(1.0, 12.0), (2.0, 14.0), (3.0, 16.0)], 0.1).unwrap();
        assert_relative_eq!(fit.coeffs[0], 10.0, epsilon = 1e-12);
        assert_relative_eq!(fit.coeffs[1], 2.0, epsilon = 1e-12);
    }

    #[test]
    fn intercepts_versus_depth_match_reference_statistics() {
        // Buoyancy intercepts at 4, 8, and 10 inches of water.
        let points = [(0.1016, 280.0), (0.2032, 543.0), (0.2540, 784.0)];
        let (_, slope, r2) = fit_linear(&points).unwrap();
        assert!(slope > 0.0);
        assert_relative_eq!(r2, 0.973, epsilon = 5e-4);
    }

    #[test]
    fn matched_pairs_ratio_and_speed_rules() {
        let fits = [
            FitResult { depth: 0.1, coeffs: vec![50.0], r2: 1.0, n: 2 },
            FitResult { depth: 0.2, coeffs: vec![100.0], r2: 1.0, n: 2 },
        ];
        let points = [
            PairPoint { depth: 0.1, speed: 1.0, fx_abs: 50.0 },
            PairPoint { depth: 0.2, speed: 1.0, fx_abs: 100.0 },
            PairPoint { depth: 0.1, speed: 0.5, fx_abs: 12.5 },
            PairPoint { depth: 0.2, speed: 0.5, fx_abs: 25.0 },
        ];
        let stats = matched_pair_check(&points, &fits, 0.3, 0.6);
        assert_eq!(stats.len(), 1);
        assert_eq!(stats[0].n_pairs, 1);
        assert_relative_eq!(stats[0].mean_ratio, 2.0, epsilon = 1e-12);
        assert_relative_eq!(stats[0].fit_ratio, 2.0, epsilon = 1e-12);
        assert_relative_eq!(stats[0].pct_dev, 0.0, epsilon = 1e-12);

        let lonely = [PairPoint { depth: 0.1, speed: 1.0, fx_abs: 50.0 }];
        assert!(matched_pair_check(&lonely, &fits, 0.3, 0.6).is_empty());
    }
}
