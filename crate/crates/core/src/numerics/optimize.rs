const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section maximization of a unimodal function on `[lo, hi]`.
///
/// The endpoints are compared against the interior optimum at the end, so
/// a monotone `f` reports its maximizing endpoint.
pub fn concave_maximize<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, iters: usize) -> (f64, f64) {
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..iters {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let mut best = if fc >= fd { (c, fc) } else { (d, fd) };
    for x in [lo, hi] {
        let fx = f(x);
        if fx > best.1 {
            best = (x, fx);
        }
    }
    best
}

/// Scans `grid` equispaced points, then refines around the best one with
/// golden section. Suited to functions that are unimodal but whose
/// maximum may sit in a narrow region.
pub fn grid_then_golden<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, grid: usize, iters: usize) -> (f64, f64) {
    let grid = grid.max(2);
    let step = (hi - lo) / (grid - 1) as f64;
    let mut best_i = 0;
    let mut best_f = f64::NEG_INFINITY;
    for i in 0..grid {
        let x = if i == grid - 1 { hi } else { lo + step * i as f64 };
        let fx = f(x);
        if fx > best_f {
            best_f = fx;
            best_i = i;
        }
    }
    let a = if best_i == 0 { lo } else { lo + step * (best_i - 1) as f64 };
    let b = if best_i + 1 >= grid { hi } else { lo + step * (best_i + 1) as f64 };
    let refined = concave_maximize(&f, a, b, iters);
    if refined.1 >= best_f {
        refined
    } else {
        let x = if best_i == grid - 1 { hi } else { lo + step * best_i as f64 };
        (x, best_f)
    }
}
