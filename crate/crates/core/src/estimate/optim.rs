//! Derivative-free minimizers: golden-section search in one dimension and
//! Nelder–Mead in several.

/// Outcome of a minimization.
#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub fx: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Stopping rules shared by both minimizers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Maximum spread of the points, in the optimizer's coordinates.
    pub xtol: f64,
    /// Maximum spread of objective values, relative to `1 + |f|`.
    pub ftol: f64,
    pub max_iter: usize,
}

fn sanitize(v: f64) -> f64 {
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

/// Golden-section search for a minimum of `f` on `[a, b]`.
pub fn golden_section<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: &Tolerances) -> Minimum {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let (mut a, mut b) = if a <= b { (a, b) } else { (b, a) };
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = sanitize(f(c));
    let mut fd = sanitize(f(d));
    let mut iterations = 0;
    let mut converged = false;
    while iterations < tol.max_iter {
        let width_ok = b - a <= tol.xtol * (1.0 + c.abs().max(d.abs()));
        let f_ok = (fc - fd).abs() <= tol.ftol * (1.0 + fc.abs().min(fd.abs()));
        if width_ok && (f_ok || !fc.is_finite()) {
            converged = true;
            break;
        }
        iterations += 1;
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = sanitize(f(c));
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = sanitize(f(d));
        }
    }
    let (x, fx) = if fc <= fd { (c, fc) } else { (d, fd) };
    Minimum { x: vec![x], fx, iterations, converged }
}

/// Nelder–Mead with reflection 1, expansion 2, contraction 0.5 and shrink
/// 0.5. The initial simplex is `x0` plus `spread` along each axis.
pub fn nelder_mead<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    x0: &[f64],
    spread: f64,
    tol: &Tolerances,
) -> Minimum {
    const ALPHA: f64 = 1.0;
    const GAMMA: f64 = 2.0;
    const RHO: f64 = 0.5;
    const SIGMA: f64 = 0.5;

    let n = x0.len();
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(x0.to_vec());
    for i in 0..n {
        let mut p = x0.to_vec();
        p[i] += spread;
        simplex.push(p);
    }
    let mut values: Vec<f64> = simplex.iter().map(|p| sanitize(f(p))).collect();

    let mut iterations = 0;
    let mut converged = false;
    loop {
        // order by objective; ties keep the older vertex first
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let x_spread = simplex[1..]
            .iter()
            .flat_map(|p| p.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        let f_spread = values[n] - values[0];
        if x_spread <= tol.xtol && f_spread <= tol.ftol * (1.0 + values[0].abs()) {
            converged = true;
            break;
        }
        if iterations >= tol.max_iter {
            break;
        }
        iterations += 1;

        let centroid: Vec<f64> = (0..n)
            .map(|k| simplex[..n].iter().map(|p| p[k]).sum::<f64>() / n as f64)
            .collect();
        let along = |t: f64, from: &[f64]| -> Vec<f64> {
            centroid.iter().zip(from).map(|(c, w)| c + t * (w - c)).collect()
        };

        let xr = along(-ALPHA, &simplex[n]);
        let fr = sanitize(f(&xr));
        if fr < values[0] {
            let xe = along(-GAMMA, &simplex[n]);
            let fe = sanitize(f(&xe));
            if fe < fr {
                simplex[n] = xe;
                values[n] = fe;
            } else {
                simplex[n] = xr;
                values[n] = fr;
            }
            continue;
        }
        if fr < values[n - 1] {
            simplex[n] = xr;
            values[n] = fr;
            continue;
        }
        let (xc, fc, accept) = if fr < values[n] {
            let xc = along(-RHO, &simplex[n]);
            let fc = sanitize(f(&xc));
            let ok = fc <= fr;
            (xc, fc, ok)
        } else {
            let xc = along(RHO, &simplex[n]);
            let fc = sanitize(f(&xc));
            let ok = fc < values[n];
            (xc, fc, ok)
        };
        if accept {
            simplex[n] = xc;
            values[n] = fc;
            continue;
        }
        let best = simplex[0].clone();
        for i in 1..=n {
            let p: Vec<f64> = best
                .iter()
                .zip(&simplex[i])
                .map(|(b, x)| b + SIGMA * (x - b))
                .collect();
            values[i] = sanitize(f(&p));
            simplex[i] = p;
        }
    }
    Minimum {
        x: simplex[0].clone(),
        fx: values[0],
        iterations,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOL: Tolerances = Tolerances { xtol: 1e-8, ftol: 1e-12, max_iter: 5000 };

    #[test]
    fn golden_finds_parabola_minimum() {
        let m = golden_section(|x| (x - 1.3).powi(2) + 2.0, -5.0, 5.0, &TOL);
        assert!(m.converged);
        assert!((m.x[0] - 1.3).abs() < 1e-7);
        assert!((m.fx - 2.0).abs() < 1e-12);
    }

    #[test]
    fn golden_tolerates_infinite_regions() {
        let f = |x: f64| if x < 0.0 { f64::INFINITY } else { (x - 0.5).powi(2) };
        let m = golden_section(f, -3.0, 2.0, &TOL);
        assert!((m.x[0] - 0.5).abs() < 1e-7);
    }

    #[test]
    fn nelder_mead_rosenbrock() {
        let rosen = |p: &[f64]| (1.0 - p[0]).powi(2) + 100.0 * (p[1] - p[0] * p[0]).powi(2);
        let m = nelder_mead(rosen, &[-1.2, 1.0], 0.1, &TOL);
        assert!(m.converged);
        assert!((m.x[0] - 1.0).abs() < 1e-5 && (m.x[1] - 1.0).abs() < 1e-5, "{:?}", m.x);
    }

    #[test]
    fn nelder_mead_quadratic_5d() {
        let target = [0.3, -1.0, 2.0, 0.0, 5.0];
        let f = |p: &[f64]| p.iter().zip(&target).enumerate().map(|(i, (a, b))| (i + 1) as f64 * (a - b).powi(2)).sum();
        let m = nelder_mead(f, &[0.0; 5], 0.1, &TOL);
        assert!(m.converged);
        for (a, b) in m.x.iter().zip(&target) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn nelder_mead_never_worsens_start() {
        let f = |p: &[f64]| (p[0] - 2.0).abs() + (p[1] + 1.0).powi(2);
        let x0 = [2.0, -1.0];
        let m = nelder_mead(f, &x0, 0.1, &Tolerances { max_iter: 3, ..TOL });
        assert!(m.fx <= f(&x0));
    }

    #[test]
    fn nelder_mead_respects_iteration_cap() {
        let rosen = |p: &[f64]| (1.0 - p[0]).powi(2) + 100.0 * (p[1] - p[0] * p[0]).powi(2);
        let m = nelder_mead(rosen, &[-1.2, 1.0], 0.1, &Tolerances { max_iter: 10, ..TOL });
        assert!(!m.converged);
        assert_eq!(m.iterations, 10);
    }
}
