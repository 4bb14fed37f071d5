//! Completing-the-square splits behind the trace inequalities.
//!
//! With `a = tr Q` (or the mean curvature) and `b = <D log w, γ'>`,
//!
//! ```text
//! -a²/n - b²/α = -(a + b)²/(n + α) - n/(α (n + α)) · (α a / n - b)²
//! ```
//!
//! for `n = m` along Jacobi fields and `n = m - 1` on geodesic spheres. The
//! second term is nonpositive, which turns `tr(Q²) ≥ (tr Q)²/m` plus the
//! Bakry–Émery bound into a Riccati inequality for `a + b`.

/// Right-hand side of the split for general `n`: returns
/// `(-(a+b)²/(n+α), -n/(α(n+α)) (α a/n - b)²)`.
pub fn completed_square_split(n: f64, alpha: f64, a: f64, b: f64) -> (f64, f64) {
    let sum = -(a + b) * (a + b) / (n + alpha);
    let d = alpha * a / n - b;
    let rest = -n / (alpha * (n + alpha)) * d * d;
    (sum, rest)
}

/// Split along Jacobi fields, `n = m`.
pub fn trace_split(m: usize, alpha: f64, a: f64, b: f64) -> (f64, f64) {
    completed_square_split(m as f64, alpha, a, b)
}

/// Split on geodesic spheres, `n = m - 1`.
pub fn tan_trace_split(m: usize, alpha: f64, a: f64, b: f64) -> (f64, f64) {
    completed_square_split(m as f64 - 1.0, alpha, a, b)
}
