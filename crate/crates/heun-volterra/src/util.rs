//! Shared helpers: thread budget, order-preserving parallel map, small dense
//! complex solves, slope fitting, and the "re,im" scalar syntax used by the
//! command line.

use crate::C64;

/// Worker-thread budget for independent subproblems.
///
/// Controlled by the `HEUN_THREADS` environment variable. Unset, zero, or
/// unparsable values fall back to the machine parallelism capped at 8.
pub fn thread_cap() -> usize {
    match std::env::var("HEUN_THREADS") {
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n >= 1 => n,
            _ => default_threads(),
        },
        Err(_) => default_threads(),
    }
}

fn default_threads() -> usize {
    std::thread::available_parallelism()
        .map(|n| n.get().min(8))
        .unwrap_or(1)
}

/// Maps `f` over `items` on up to [`thread_cap`] scoped threads.
///
/// Output order always matches input order, so results are identical to the
/// sequential map regardless of the thread budget.
pub fn par_map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync,
{
    let cap = thread_cap().min(items.len().max(1));
    if cap <= 1 || items.len() <= 1 {
        return items.iter().map(|t| f(t)).collect();
    }
    let chunk = items.len().div_ceil(cap);
    let f = &f;
    let mut parts: Vec<Vec<U>> = Vec::new();
    std::thread::scope(|scope| {
        let handles: Vec<_> = items
            .chunks(chunk)
            .map(|slice| scope.spawn(move || slice.iter().map(|t| f(t)).collect::<Vec<U>>()))
            .collect();
        parts = handles
            .into_iter()
            .map(|h| h.join().expect("parallel map worker panicked"))
            .collect();
    });
    parts.into_iter().flatten().collect()
}

/// Solves the dense complex system `a x = b` in place; `a` is row-major n*n
/// and `b` holds the right-hand side on entry, the solution on exit.
///
/// Partial-pivot Gaussian elimination. Returns `false` when a pivot vanishes.
pub fn solve_dense(a: &mut [C64], b: &mut [C64], n: usize) -> bool {
    debug_assert_eq!(a.len(), n * n);
    debug_assert_eq!(b.len(), n);
    for col in 0..n {
        let mut piv = col;
        let mut best = a[col * n + col].norm_sqr();
        for r in col + 1..n {
            let m = a[r * n + col].norm_sqr();
            if m > best {
                best = m;
                piv = r;
            }
        }
        if best == 0.0 || !best.is_finite() {
            return false;
        }
        if piv != col {
            for c in col..n {
                a.swap(col * n + c, piv * n + c);
            }
            b.swap(col, piv);
        }
        let d = a[col * n + col];
        for r in col + 1..n {
            let m = a[r * n + col] / d;
            if m != C64::new(0.0, 0.0) {
                for c in col + 1..n {
                    let v = a[col * n + c];
                    a[r * n + c] -= m * v;
                }
                let bv = b[col];
                b[r] -= m * bv;
            }
            a[r * n + col] = C64::new(0.0, 0.0);
        }
    }
    for r in (0..n).rev() {
        let mut s = b[r];
        for c in r + 1..n {
            s -= a[r * n + c] * b[c];
        }
        b[r] = s / a[r * n + r];
    }
    true
}

/// Least-squares fit of `y = intercept + slope * x`; returns (intercept, slope).
///
/// Needs at least two distinct abscissae.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    assert!(xs.len() == ys.len() && xs.len() >= 2, "need paired samples");
    let n = xs.len() as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
    let denom = n * sxx - sx * sx;
    assert!(denom.abs() > 0.0, "degenerate abscissae");
    let slope = (n * sxy - sx * sy) / denom;
    ((sy - slope * sx) / n, slope)
}

/// Parses "re" or "re,im" into a complex number.
pub fn parse_complex(s: &str) -> Result<C64, String> {
    let t = s.trim();
    if let Some((re, im)) = t.split_once(',') {
        let re: f64 = re
            .trim()
            .parse()
            .map_err(|_| format!("bad real part in {t:?}"))?;
        let im: f64 = im
            .trim()
            .parse()
            .map_err(|_| format!("bad imaginary part in {t:?}"))?;
        Ok(C64::new(re, im))
    } else {
        t.parse::<f64>()
            .map(|re| C64::new(re, 0.0))
            .map_err(|_| format!("bad number {t:?}"))
    }
}

/// Formats a float with 17 significant digits, locale independent.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}
