use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectrum::{classify_partial_sums, CovarianceSpectrum, Verdict};

/// Gaussian-exponent scaling of the defining integral
///     G_d(x) = sum_k int_0^inf (4 pi t)^{-d/2} e^{-t} E(|x + 2 pi k|, t) dt.
/// `AsPrinted` takes E = e^{-rho^2 / t} exactly as the formula is usually
/// displayed; `StandardHeat` takes the heat-kernel pairing e^{-rho^2 / (4t)}
/// that matches the (4 pi t)^{-d/2} prefactor. The short-distance asymptotics
/// (log for d = 2, rho^{2-d} for d >= 3) agree up to constants, so both are
/// provided and neither is asserted as canonical.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    AsPrinted,
    StandardHeat,
}

impl Normalization {
    fn c(self) -> f64 {
        match self {
            Normalization::AsPrinted => 1.0,
            Normalization::StandardHeat => 4.0,
        }
    }
    /// Exponential decay rate of one periodized summand at large distance;
    /// used for the lattice-tail error estimate.
    fn decay(self) -> f64 {
        match self {
            Normalization::AsPrinted => 2.0,
            Normalization::StandardHeat => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GdQuad {
    /// Periodization images truncated at |k|_inf <= lattice_cut.
    pub lattice_cut: u32,
    /// Trapezoid step in u = ln t.
    pub ustep: f64,
}

impl Default for GdQuad {
    fn default() -> Self {
        GdQuad {
            lattice_cut: 3,
            ustep: 0.05,
        }
    }
}

// exp(-746) underflows f64; integration limits are chosen so the integrand
// stays representable.
const EXP_UNDERFLOW: f64 = 745.0;

/// One radial summand I(rho) = int (4 pi t)^{-d/2} e^{-t} E(rho, t) dt by
/// trapezoid in u = ln t (the integrand is a smooth bump in u).
fn i_of_rho(rho: f64, d: u32, c: f64, ustep: f64) -> f64 {
    let u_max = EXP_UNDERFLOW.ln();
    let u_min = if rho > 0.0 {
        (rho * rho / (c * EXP_UNDERFLOW)).ln()
    } else {
        -60.0
    };
    if u_min >= u_max {
        return 0.0;
    }
    let n = ((u_max - u_min) / ustep).ceil() as usize;
    let du = (u_max - u_min) / n as f64;
    let half_d = d as f64 / 2.0;
    let r2c = rho * rho / c;
    let mut acc = 0.0;
    for i in 0..=n {
        let u = u_min + i as f64 * du;
        let t = u.exp();
        let ln_pref = -half_d * (4.0 * std::f64::consts::PI * t).ln();
        let expo = ln_pref - t - r2c / t + u;
        let v = if expo < -EXP_UNDERFLOW { 0.0 } else { expo.exp() };
        acc += if i == 0 || i == n { 0.5 * v } else { v };
    }
    acc * du
}

fn for_each_shell_point(d: u32, shell: u32, mut visit: impl FnMut(&[i32])) {
    let s = shell as i32;
    let mut point = vec![0i32; d as usize];
    fn rec(point: &mut Vec<i32>, axis: usize, s: i32, on_shell: bool, visit: &mut impl FnMut(&[i32])) {
        if axis == point.len() {
            if on_shell {
                visit(point);
            }
            return;
        }
        for c in -s..=s {
            point[axis] = c;
            rec(point, axis + 1, s, on_shell || c.abs() == s, visit);
        }
    }
    rec(&mut point, 0, s, shell == 0, &mut visit);
}

/// Pointwise G_d(x) with an error estimate combining quadrature halving and
/// the periodization tail. x is used as given; callers supply points in the
/// fundamental domain (-pi, pi]^d. The origin is singular for d >= 2.
pub fn eval_gd(d: u32, x: &[f64], quad: GdQuad, norm: Normalization) -> Result<(f64, f64)> {
    if d == 0 || x.len() != d as usize {
        return Err(Error::Config(format!(
            "point dimension {} does not match d = {d}",
            x.len()
        )));
    }
    if d >= 2 && x.iter().all(|&v| v == 0.0) {
        return Err(Error::SingularPoint);
    }
    let c = norm.c();
    let mut fine = 0.0f64;
    let mut coarse = 0.0f64;
    let mut last_shell = 0.0f64;
    for shell in 0..=quad.lattice_cut {
        let mut shell_fine = 0.0;
        let mut shell_coarse = 0.0;
        for_each_shell_point(d, shell, |k| {
            let rho2: f64 = x
                .iter()
                .zip(k)
                .map(|(&xi, &ki)| {
                    let y = xi + 2.0 * std::f64::consts::PI * ki as f64;
                    y * y
                })
                .sum();
            let rho = rho2.sqrt();
            shell_fine += i_of_rho(rho, d, c, quad.ustep);
            shell_coarse += i_of_rho(rho, d, c, quad.ustep * 2.0);
        });
        fine += shell_fine;
        coarse += shell_coarse;
        last_shell = shell_fine;
    }
    if !fine.is_finite() {
        return Err(Error::NonFinite("eval_gd"));
    }
    let quad_err = (fine - coarse).abs() / 3.0;
    // Image shells shrink at least by the radial decay across one period.
    let q = (-norm.decay() * 2.0 * std::f64::consts::PI).exp();
    let tail_err = last_shell.abs() * q / (1.0 - q)
        + if quad.lattice_cut == 0 { f64::NAN } else { 0.0 };
    let tail_err = if tail_err.is_nan() { fine.abs() } else { tail_err };
    Ok((fine, quad_err + tail_err))
}

/// Torus pairing weight of one lattice mode: the value of
/// int_{T^d} e^{i n theta} G_d(theta) dtheta as a function of m = |n|^2.
/// Serves as the coefficient-space oracle for the grid quadrature.
pub fn pairing_mode_weight(d: u32, m: u64, norm: Normalization) -> f64 {
    let mf = m as f64;
    match norm {
        Normalization::AsPrinted => 4.0 / ((4.0 + mf) * (2.0f64).powi(d as i32)),
        Normalization::StandardHeat => 1.0 / (1.0 + mf),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairingParams {
    /// Spectral truncations N for the partial pairings; >= 4 ascending levels.
    pub levels: Vec<u32>,
    /// Quadrature grid has grid_mult * max(levels) midpoints per axis.
    pub grid_mult: u32,
    pub quad: GdQuad,
    pub normalization: Normalization,
}

impl PairingParams {
    pub fn for_dimension(d: u32, normalization: Normalization) -> Self {
        let levels = match d {
            1 => vec![4, 8, 16, 32],
            2 => vec![2, 4, 8, 16],
            _ => vec![1, 2, 4, 8],
        };
        PairingParams {
            levels,
            grid_mult: 4,
            quad: GdQuad::default(),
            normalization,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairingReport {
    pub d: u32,
    pub normalization: Normalization,
    pub levels: Vec<u32>,
    /// Quadrature of Gamma_N(theta) G_d(theta) per truncation level.
    pub values: Vec<f64>,
    /// Grid minimum of the Fejer-smoothed partial sums per level; the
    /// nonnegativity precondition runs on these (raw partial sums of a
    /// nonnegative measure oscillate below zero, Fejer means never do).
    pub min_smoothed: Vec<f64>,
    pub verdict: Verdict,
    /// Final value when the ladder does not diverge.
    pub value: Option<f64>,
}

/// Separable evaluation of G_d on the d-fold product of a 1-D midpoint grid:
/// per t-node, one periodized-Gaussian table per axis; G at a grid point is
/// the weighted sum over t of the product of its axis factors.
struct GdGridEvaluator {
    /// weights[t], already folded with the trapezoid step in u.
    weights: Vec<f64>,
    /// tables[t][i] = sum_k exp(-(theta_i + 2 pi k)^2 / (c t)).
    tables: Vec<Vec<f64>>,
}

fn midpoint_grid(mm: usize) -> Vec<f64> {
    let h = 2.0 * std::f64::consts::PI / mm as f64;
    (0..mm)
        .map(|i| -std::f64::consts::PI + (i as f64 + 0.5) * h)
        .collect()
}

impl GdGridEvaluator {
    fn build(d: u32, thetas: &[f64], quad: GdQuad, norm: Normalization) -> Self {
        let c = norm.c();
        let rho_min = thetas
            .iter()
            .map(|t| t.abs())
            .fold(f64::INFINITY, f64::min)
            .max(1e-6);
        let u_max = EXP_UNDERFLOW.ln();
        let u_min = (rho_min * rho_min / (c * EXP_UNDERFLOW)).ln().min(-20.0);
        let n = ((u_max - u_min) / quad.ustep).ceil() as usize;
        let du = (u_max - u_min) / n as f64;
        let half_d = d as f64 / 2.0;
        let mut weights = Vec::with_capacity(n + 1);
        let mut tables = Vec::with_capacity(n + 1);
        for iu in 0..=n {
            let u = u_min + iu as f64 * du;
            let t = u.exp();
            let trap = if iu == 0 || iu == n { 0.5 } else { 1.0 };
            let ln_pref = -half_d * (4.0 * std::f64::consts::PI * t).ln();
            let w = (ln_pref - t + u).exp() * du * trap;
            let ct = c * t;
            let table: Vec<f64> = thetas
                .iter()
                .map(|&th| {
                    let mut s = 0.0;
                    for k in -(quad.lattice_cut as i32)..=quad.lattice_cut as i32 {
                        let y = th + 2.0 * std::f64::consts::PI * k as f64;
                        let e = y * y / ct;
                        if e < EXP_UNDERFLOW {
                            s += (-e).exp();
                        }
                    }
                    s
                })
                .collect();
            weights.push(w);
            tables.push(table);
        }
        GdGridEvaluator { weights, tables }
    }

    /// G at the grid point with per-axis indices `idx`.
    fn eval(&self, idx: &[usize]) -> f64 {
        let mut acc = 0.0;
        for (t, w) in self.weights.iter().enumerate() {
            let mut p = *w;
            for &i in idx {
                p *= self.tables[t][i];
            }
            acc += p;
        }
        acc
    }
}

/// Walks the full grid {0..M}^d in row-major order.
fn for_each_grid_point(d: u32, mm: usize, mut visit: impl FnMut(&[usize])) {
    let mut idx = vec![0usize; d as usize];
    loop {
        visit(&idx);
        let mut axis = d as usize;
        loop {
            if axis == 0 {
                return;
            }
            axis -= 1;
            idx[axis] += 1;
            if idx[axis] < mm {
                break;
            }
            idx[axis] = 0;
            if axis == 0 {
                return;
            }
        }
    }
}

/// Quadrature test of the pairing (Gamma, G_d) over increasing spectral
/// truncations, with a nonnegativity precondition on the smoothed partial
/// sums. Returns the value ladder and a divergence verdict.
pub fn pairing_gamma_gd(spec: &CovarianceSpectrum, params: &PairingParams) -> Result<PairingReport> {
    let d = spec.d;
    if !(1..=3).contains(&d) {
        return Err(Error::Config("pairing quadrature supports d in {1,2,3}".into()));
    }
    if params.levels.len() < 4 || params.levels.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config(
            "pairing needs an ascending truncation ladder with >= 4 levels".into(),
        ));
    }
    let n_top = *params.levels.last().unwrap();
    let mm = (params.grid_mult.max(2) * n_top.max(1)) as usize;
    let thetas = midpoint_grid(mm);
    let gd = GdGridEvaluator::build(d, &thetas, params.quad, params.normalization);

    let mut g_grid = Vec::with_capacity(mm.pow(d));
    for_each_grid_point(d, mm, |idx| g_grid.push(gd.eval(idx)));

    // Per-axis cosine/sine tables for frequencies 0..=n_top.
    let cos_t: Vec<Vec<f64>> = (0..=n_top as usize)
        .map(|n| thetas.iter().map(|&t| (n as f64 * t).cos()).collect())
        .collect();
    let sin_t: Vec<Vec<f64>> = (0..=n_top as usize)
        .map(|n| thetas.iter().map(|&t| (n as f64 * t).sin()).collect())
        .collect();

    // Gamma_N on the grid, built incrementally over the level ladder; the
    // Fejer-weighted sums are rebuilt per level (their weights depend on N).
    let cell = (2.0 * std::f64::consts::PI / mm as f64).powi(d as i32);
    let scale: f64 = total_gamma_mass(spec, n_top);
    let mut gamma_grid = vec![0.0f64; g_grid.len()];
    let mut values = Vec::new();
    let mut min_smoothed = Vec::new();
    let mut prev_level = -1i64;
    for &level in &params.levels {
        if level > spec.n_max {
            return Err(Error::Config(format!(
                "truncation level {level} exceeds spectrum n_max = {}",
                spec.n_max
            )));
        }
        accumulate_modes(
            spec,
            d,
            prev_level,
            level as i64,
            &cos_t,
            &sin_t,
            mm,
            None,
            &mut gamma_grid,
        );
        let value = cell
            * gamma_grid
                .iter()
                .zip(&g_grid)
                .map(|(a, b)| a * b)
                .sum::<f64>();
        values.push(value);

        let mut fejer_grid = vec![0.0f64; g_grid.len()];
        accumulate_modes(
            spec,
            d,
            -1,
            level as i64,
            &cos_t,
            &sin_t,
            mm,
            Some(level),
            &mut fejer_grid,
        );
        let min_f = fejer_grid.iter().copied().fold(f64::INFINITY, f64::min);
        min_smoothed.push(min_f);
        if min_f < -1e-10 * scale.max(1e-300) {
            return Err(Error::NegativePartialSums {
                min: min_f,
                level: level as usize,
            });
        }
        prev_level = level as i64;
    }
    let verdict = classify_partial_sums(&values);
    Ok(PairingReport {
        d,
        normalization: params.normalization,
        levels: params.levels.clone(),
        values: values.clone(),
        min_smoothed,
        verdict,
        value: (verdict != Verdict::Divergent).then(|| *values.last().unwrap()),
    })
}

fn total_gamma_mass(spec: &CovarianceSpectrum, n_top: u32) -> f64 {
    let mut mass = 0.0;
    let mut point = vec![0i32; spec.d as usize];
    sum_lattice(spec, &mut point, 0, n_top as i32, &mut mass);
    mass
}

fn sum_lattice(spec: &CovarianceSpectrum, point: &mut Vec<i32>, axis: usize, cut: i32, acc: &mut f64) {
    if axis == point.len() {
        *acc += spec.gamma(point).abs();
        return;
    }
    for c in -cut..=cut {
        point[axis] = c;
        sum_lattice(spec, point, axis + 1, cut, acc);
    }
}

/// Adds the modes with prev < |n|_inf <= level onto `grid`:
///     gamma_0 (once, when prev < 0) + 2 gamma_n cos(n . theta) per half-lattice n,
/// optionally Fejer-weighted by prod_a (1 - |n_a| / (N + 1)).
#[allow(clippy::too_many_arguments)]
fn accumulate_modes(
    spec: &CovarianceSpectrum,
    d: u32,
    prev: i64,
    level: i64,
    cos_t: &[Vec<f64>],
    sin_t: &[Vec<f64>],
    mm: usize,
    fejer_n: Option<u32>,
    grid: &mut [f64],
) {
    if prev < 0 {
        let zero = vec![0i32; d as usize];
        let g0 = spec.gamma(&zero);
        if g0 != 0.0 {
            for v in grid.iter_mut() {
                *v += g0;
            }
        }
    }
    let mut point = vec![0i32; d as usize];
    let mut rec = RecState {
        spec,
        cos_t,
        sin_t,
        mm,
        fejer_n,
        grid,
        prev,
        level,
    };
    accumulate_rec(&mut rec, &mut point, 0);
}

struct RecState<'a> {
    spec: &'a CovarianceSpectrum,
    cos_t: &'a [Vec<f64>],
    sin_t: &'a [Vec<f64>],
    mm: usize,
    fejer_n: Option<u32>,
    grid: &'a mut [f64],
    prev: i64,
    level: i64,
}

fn accumulate_rec(st: &mut RecState<'_>, point: &mut Vec<i32>, axis: usize) {
    if axis == point.len() {
        if !crate::lattice::is_half_lattice_member(point) {
            return;
        }
        let sup = point.iter().map(|c| c.abs() as i64).max().unwrap();
        if sup <= st.prev || sup > st.level {
            return;
        }
        let mut g = 2.0 * st.spec.gamma(point);
        if let Some(nn) = st.fejer_n {
            for &c in point.iter() {
                g *= 1.0 - c.abs() as f64 / (nn as f64 + 1.0);
            }
        }
        if g == 0.0 {
            return;
        }
        add_cosine_mode(st, point, g);
        return;
    }
    let bound = st.level as i32;
    for c in -bound..=bound {
        point[axis] = c;
        accumulate_rec(st, point, axis + 1);
    }
}

/// grid += g cos(n . theta), expanded per axis with the angle-addition
/// formula; grids are row-major over the d-fold midpoint grid.
fn add_cosine_mode(st: &mut RecState<'_>, n: &[i32], g: f64) {
    let mm = st.mm;
    let axis = |a: usize| -> (&[f64], &[f64], f64) {
        let f = n[a].unsigned_abs() as usize;
        let sign = if n[a] >= 0 { 1.0 } else { -1.0 };
        (&st.cos_t[f], &st.sin_t[f], sign)
    };
    match n.len() {
        // Half-lattice d = 1 frequencies are positive and cosine is even.
        1 => {
            let (c0, _, _) = axis(0);
            for (v, c) in st.grid.iter_mut().zip(c0) {
                *v += g * c;
            }
        }
        2 => {
            let (c0, s0, g0) = axis(0);
            let (c1, s1, g1) = axis(1);
            for i in 0..mm {
                let (ca, sa) = (c0[i], g0 * s0[i]);
                let row = &mut st.grid[i * mm..(i + 1) * mm];
                for (j, v) in row.iter_mut().enumerate() {
                    *v += g * (ca * c1[j] - sa * g1 * s1[j]);
                }
            }
        }
        3 => {
            let (c0, s0, g0) = axis(0);
            let (c1, s1, g1) = axis(1);
            let (c2, s2, g2) = axis(2);
            for i in 0..mm {
                let (ca, sa) = (c0[i], g0 * s0[i]);
                for j in 0..mm {
                    let (cb, sb) = (c1[j], g1 * s1[j]);
                    let cab = ca * cb - sa * sb;
                    let sab = ca * sb + sa * cb;
                    let row = &mut st.grid[(i * mm + j) * mm..(i * mm + j + 1) * mm];
                    for (k, v) in row.iter_mut().enumerate() {
                        *v += g * (cab * c2[k] - sab * g2 * s2[k]);
                    }
                }
            }
        }
        _ => unreachable!("pairing is restricted to d <= 3"),
    }
}
