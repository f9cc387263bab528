//! Long-time harmonic components of the density matrix under a two-tone drive.
//!
//! With `ρ(t) = Σ_m ρ_m e^{imδt}` the master equation splits into
//! `imδ ρ_m = L0 ρ_m + L_a ρ_{m+1} + L_b ρ_{m−1}`, a block-tridiagonal system.
//! It is truncated at `|m| ≤ m_max` and eliminated from both edges toward
//! `m = 0` (a matrix continued fraction). The `m = 0` block keeps one equation
//! replaced by `Tr ρ_0 = 1`.

use faer::prelude::*;
use faer::Mat;

use crate::error::{Error, Result};
use crate::liouvillian::{Liouvillian, Superoperator};
use crate::{CMatrix, C64};

/// Solver knobs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FloquetOptions {
    pub m_max: usize,
    /// Largest allowed `‖ρ_{±m_max}‖ / ‖ρ_0‖`.
    pub harmonic_tolerance: f64,
    /// Smallest allowed `min|U_ii| / max|U_ii|` in any LU factor.
    pub pivot_tolerance: f64,
}

impl Default for FloquetOptions {
    fn default() -> Self {
        Self { m_max: 3, harmonic_tolerance: 5e-2, pivot_tolerance: 1e-13 }
    }
}

impl FloquetOptions {
    pub fn with_m_max(mut self, m_max: usize) -> Self {
        self.m_max = m_max;
        self
    }
}

/// Harmonic components `ρ_m`, `m ∈ [−m_max, m_max]`.
#[derive(Debug, Clone)]
pub struct FloquetSolution {
    m_max: usize,
    delta: f64,
    components: Vec<CMatrix>,
    residual: f64,
    edge_ratio: f64,
}

impl FloquetSolution {
    pub fn m_max(&self) -> usize {
        self.m_max
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn component(&self, m: i64) -> Option<&CMatrix> {
        let k = m + self.m_max as i64;
        usize::try_from(k).ok().and_then(|k| self.components.get(k))
    }

    /// The time-averaged state.
    pub fn rho0(&self) -> &CMatrix {
        &self.components[self.m_max]
    }

    pub fn components(&self) -> impl Iterator<Item = (i64, &CMatrix)> {
        let m_max = self.m_max as i64;
        self.components.iter().enumerate().map(move |(k, c)| (k as i64 - m_max, c))
    }

    /// Master-equation defect `‖dρ/dt − L(t)ρ(t)‖` at `t = 0`; nonzero only
    /// through the truncation.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    /// `max(‖ρ_{m_max}‖, ‖ρ_{−m_max}‖) / ‖ρ_0‖`.
    pub fn edge_ratio(&self) -> f64 {
        self.edge_ratio
    }

    /// `ρ(t) = Σ ρ_m e^{imδt}`.
    pub fn state_at(&self, t: f64) -> CMatrix {
        let d = self.rho0().nrows();
        self.components()
            .fold(CMatrix::zeros(d, d), |acc, (m, c)| acc + c * C64::from_polar(1.0, m as f64 * self.delta * t))
    }

    /// Time-averaged `Tr(A ρ)`.
    pub fn expectation(&self, op: &CMatrix) -> C64 {
        (op * self.rho0()).trace()
    }

    /// `max_m ‖ρ_{−m} − ρ_m†‖`.
    pub fn reality_defect(&self) -> f64 {
        let m_max = self.m_max as i64;
        (0..=m_max)
            .map(|m| crate::operators::max_abs(&(self.component(-m).unwrap() - self.component(m).unwrap().adjoint())))
            .fold(0.0, f64::max)
    }

    /// `max(|Tr ρ_0 − 1|, max_{m≠0} |Tr ρ_m|)`.
    pub fn trace_defect(&self) -> f64 {
        self.components()
            .map(|(m, c)| {
                let target = if m == 0 { 1.0 } else { 0.0 };
                (c.trace() - target).norm()
            })
            .fold(0.0, f64::max)
    }
}

fn to_faer(m: &CMatrix) -> Mat<c64> {
    Mat::from_fn(m.nrows(), m.ncols(), |r, c| {
        let z = m[(r, c)];
        c64::new(z.re, z.im)
    })
}

fn from_faer_col(m: &Mat<c64>, col: usize, d: usize) -> CMatrix {
    CMatrix::from_fn(d, d, |r, c| {
        let z = m.read(c * d + r, col);
        C64::new(z.re, z.im)
    })
}

fn shifted(l0: &Mat<c64>, shift: c64) -> Mat<c64> {
    let mut m = l0.clone();
    for k in 0..m.nrows() {
        m.write(k, k, m.read(k, k) + shift);
    }
    m
}

/// LU with a pivot-ratio rank check.
fn factor(m: &Mat<c64>, tolerance: f64, what: &str) -> Result<faer::linalg::solvers::PartialPivLu<c64>> {
    let lu = m.partial_piv_lu();
    let u = lu.compute_u();
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for k in 0..u.nrows() {
        let p = u.read(k, k).abs();
        lo = lo.min(p);
        hi = hi.max(p);
    }
    if !(lo > tolerance * hi) || !lo.is_finite() {
        return Err(Error::SingularSystem(format!("{what}: pivot ratio {:.3e}", lo / hi)));
    }
    Ok(lu)
}

/// Solve for the truncated harmonic expansion.
pub fn solve_floquet(
    l0: &Superoperator,
    scan_plus: &Superoperator,
    scan_minus: &Superoperator,
    delta: f64,
    options: &FloquetOptions,
) -> Result<FloquetSolution> {
    if options.m_max < 1 {
        return Err(Error::invalid("m_max", "must be at least 1"));
    }
    if delta == 0.0 || !delta.is_finite() {
        return Err(Error::invalid(
            "delta",
            "must be finite and nonzero; fold a degenerate second tone into the fixed drive",
        ));
    }
    let d = l0.dim();
    let n = d * d;
    let m_max = options.m_max;
    let base = to_faer(l0.matrix());
    let la = to_faer(scan_plus.matrix());
    let lb = to_faer(scan_minus.matrix());

    // up[k] maps ρ_{k} to ρ_{k+1} (k ≥ 0); down[k] maps ρ_{−k} to ρ_{−k−1}.
    let mut up: Vec<Mat<c64>> = vec![Mat::zeros(n, n); m_max];
    let mut down: Vec<Mat<c64>> = vec![Mat::zeros(n, n); m_max];
    let mut next_up: Option<Mat<c64>> = None;
    let mut next_down: Option<Mat<c64>> = None;
    for m in (1..=m_max).rev() {
        let w = m as f64 * delta;
        let mut block = shifted(&base, c64::new(0.0, -w));
        if let Some(s) = &next_up {
            block += &la * s;
        }
        let s = -factor(&block, options.pivot_tolerance, "positive harmonic block")?.solve(&lb);
        let mut block = shifted(&base, c64::new(0.0, w));
        if let Some(t) = &next_down {
            block += &lb * t;
        }
        let t = -factor(&block, options.pivot_tolerance, "negative harmonic block")?.solve(&la);
        up[m - 1] = s.clone();
        down[m - 1] = t.clone();
        next_up = Some(s);
        next_down = Some(t);
    }

    let mut centre = base + &la * &up[0] + &lb * &down[0];
    for c in 0..n {
        centre.write(0, c, c64::new(0.0, 0.0));
    }
    for k in 0..d {
        centre.write(0, k * d + k, c64::new(1.0, 0.0));
    }
    let mut rhs = Mat::<c64>::zeros(n, 1);
    rhs.write(0, 0, c64::new(1.0, 0.0));
    let rho0 = factor(&centre, options.pivot_tolerance, "normalized zero-harmonic block")?.solve(&rhs);

    let mut positive = Vec::with_capacity(m_max);
    let mut negative = Vec::with_capacity(m_max);
    let (mut p, mut q) = (rho0.clone(), rho0.clone());
    for k in 0..m_max {
        p = &up[k] * &p;
        q = &down[k] * &q;
        positive.push(from_faer_col(&p, 0, d));
        negative.push(from_faer_col(&q, 0, d));
    }
    let mut components: Vec<CMatrix> = negative.into_iter().rev().collect();
    components.push(from_faer_col(&rho0, 0, d));
    components.extend(positive);

    let norm0 = components[m_max].norm();
    let edge = components[0].norm().max(components[2 * m_max].norm());
    let edge_ratio = edge / norm0;
    if !edge_ratio.is_finite() || edge_ratio > options.harmonic_tolerance {
        return Err(Error::NonConvergent { m_max, ratio: edge_ratio, tolerance: options.harmonic_tolerance });
    }

    let mut solution = FloquetSolution { m_max, delta, components, residual: 0.0, edge_ratio };
    let rho = solution.state_at(0.0);
    let drho: CMatrix =
        solution.components().fold(CMatrix::zeros(d, d), |acc, (m, c)| acc + c * C64::new(0.0, m as f64 * delta));
    let generator = Superoperator::from_matrix(l0.matrix() + scan_plus.matrix() + scan_minus.matrix());
    solution.residual = (drho - generator.apply(&rho)).norm();
    Ok(solution)
}

/// Convenience wrapper over an assembled [`Liouvillian`].
pub fn solve_liouvillian(l: &Liouvillian, delta: f64, options: &FloquetOptions) -> Result<FloquetSolution> {
    solve_floquet(&l.static_part, &l.scan_plus, &l.scan_minus, delta, options)
}

/// Solve `L0 ρ = 0` with one row replaced by `Tr ρ = 1`, without checking
/// that the result is actually stationary. For generators that leak norm
/// this is the state with the lost norm returned to `|0,g⟩`.
pub fn conditional_state(l0: &Superoperator) -> Result<CMatrix> {
    let d = l0.dim();
    let n = d * d;
    let mut m = to_faer(l0.matrix());
    for c in 0..n {
        m.write(0, c, c64::new(0.0, 0.0));
    }
    for k in 0..d {
        m.write(0, k * d + k, c64::new(1.0, 0.0));
    }
    let mut rhs = Mat::<c64>::zeros(n, 1);
    rhs.write(0, 0, c64::new(1.0, 0.0));
    let x = factor(&m, FloquetOptions::default().pivot_tolerance, "stationary-state system")?.solve(&rhs);
    Ok(from_faer_col(&x, 0, d))
}

/// Unique unit-trace null vector of a trace-preserving `L0`.
pub fn steady_state(l0: &Superoperator) -> Result<CMatrix> {
    let scale = 1.0 + l0.max_abs();
    if l0.trace_defect() > 1e-10 * scale {
        return Err(Error::invalid("L0", "steady_state needs a trace-preserving generator; use conditional_state"));
    }
    let rho = conditional_state(l0)?;
    let defect = crate::operators::max_abs(&l0.apply(&rho));
    if defect > 1e-10 * scale {
        return Err(Error::SingularSystem(format!("no stationary state: ‖L0 ρ‖ = {defect:.3e}")));
    }
    Ok(rho)
}

/// Smallest eigenvalue of the Hermitian part of `rho`.
pub fn min_eigenvalue(rho: &CMatrix) -> f64 {
    let h = (rho + rho.adjoint()) * C64::new(0.5, 0.0);
    h.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
}

/// Knobs for the direct time-integration oracle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleOptions {
    /// Total integration time; rounded up to whole beat periods.
    pub t_final: f64,
    /// Requested step; shrunk so a whole number of steps fits one period.
    pub dt: f64,
    /// Largest allowed step-doubling defect per step.
    pub step_tolerance: f64,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self { t_final: 120.0, dt: 2e-3, step_tolerance: 1e-8 }
    }
}

/// Output of [`time_integrate_oracle`].
#[derive(Debug, Clone)]
pub struct OracleResult {
    /// `ρ(t)` averaged over the final beat period.
    pub mean_state: CMatrix,
    /// Largest `|Tr ρ(t) − 1|` seen along the trajectory.
    pub trace_drift: f64,
    /// Largest step-doubling defect over the final period.
    pub step_defect: f64,
    pub dt: f64,
    pub periods: usize,
}

struct Rk4<'a> {
    l0: &'a CMatrix,
    la: &'a CMatrix,
    lb: &'a CMatrix,
    delta: f64,
}

impl Rk4<'_> {
    fn generator(&self, t: f64) -> CMatrix {
        let phase = C64::from_polar(1.0, -self.delta * t);
        self.l0 + self.la * phase + self.lb * phase.conj()
    }

    /// One classic RK4 step applied to every column of `y`.
    fn step(&self, t: f64, dt: f64, y: &CMatrix) -> CMatrix {
        let (g0, gh, g1) = (self.generator(t), self.generator(t + 0.5 * dt), self.generator(t + dt));
        let h = C64::new(dt, 0.0);
        let k1 = &g0 * y;
        let k2 = &gh * (y + &k1 * (h * 0.5));
        let k3 = &gh * (y + &k2 * (h * 0.5));
        let k4 = &g1 * (y + &k3 * h);
        y + (k1 + (k2 + k3) * C64::new(2.0, 0.0) + k4) * (h / 6.0)
    }
}

fn trace_of(v: &CMatrix, d: usize) -> C64 {
    (0..d).map(|k| v[(k * d + k, 0)]).sum()
}

/// Integrate `dρ/dt = (L0 + e^{−iδt}L_a + e^{+iδt}L_b)ρ` from the vacuum with
/// fixed-step RK4 and average `ρ` over the final beat period `2π/δ`.
///
/// Because the generator is periodic, the RK4 map over one period is built
/// once as a matrix and applied repeatedly; the final period is stepped
/// explicitly with a step-doubling defect check.
pub fn time_integrate_oracle(
    l0: &Superoperator,
    scan_plus: &Superoperator,
    scan_minus: &Superoperator,
    delta: f64,
    options: &OracleOptions,
) -> Result<OracleResult> {
    if delta == 0.0 || !delta.is_finite() {
        return Err(Error::invalid("delta", "must be finite and nonzero"));
    }
    if !(options.dt > 0.0) || !(options.t_final > 0.0) {
        return Err(Error::invalid("dt", "dt and t_final must be positive"));
    }
    let d = l0.dim();
    let n = d * d;
    let period = 2.0 * std::f64::consts::PI / delta.abs();
    let steps = (period / options.dt).ceil().max(1.0) as usize;
    let dt = period / steps as f64;
    let periods = (options.t_final / period).ceil().max(1.0) as usize;
    let rk = Rk4 { l0: l0.matrix(), la: scan_plus.matrix(), lb: scan_minus.matrix(), delta };

    let mut propagator = CMatrix::identity(n, n);
    for k in 0..steps {
        propagator = rk.step(k as f64 * dt, dt, &propagator);
    }

    let mut y = CMatrix::zeros(n, 1);
    y[(0, 0)] = C64::new(1.0, 0.0);
    let mut drift = 0.0f64;
    for _ in 0..periods.saturating_sub(1) {
        y = &propagator * &y;
        drift = drift.max((trace_of(&y, d) - 1.0).norm());
    }

    let mut sum = CMatrix::zeros(n, 1);
    let mut defect = 0.0f64;
    for k in 0..steps {
        let t = k as f64 * dt;
        sum += &y;
        let full = rk.step(t, dt, &y);
        let half = rk.step(t + 0.5 * dt, 0.5 * dt, &rk.step(t, 0.5 * dt, &y));
        defect = defect.max((&full - &half).norm());
        if defect > options.step_tolerance {
            return Err(Error::StepSizeTooLarge { dt, defect, tolerance: options.step_tolerance });
        }
        y = half;
        drift = drift.max((trace_of(&y, d) - 1.0).norm());
    }
    let mean = sum / C64::new(steps as f64, 0.0);
    let mean_state = CMatrix::from_column_slice(d, d, mean.as_slice());
    Ok(OracleResult { mean_state, trace_drift: drift, step_defect: defect, dt, periods })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::liouvillian::{AblationSpec, Liouvillian, ModelParams, PhysicalParams};
    use crate::operators::{build_annihilation, max_abs, Atom, SystemDims};

    fn w2(rho: &CMatrix, dims: &SystemDims) -> f64 {
        let a = build_annihilation(dims);
        let ad = a.adjoint();
        ((&ad * &ad) * (&a * &a) * rho).trace().re
    }

    fn reference(dims: &SystemDims, delta_tilde: f64) -> (Liouvillian, f64) {
        let p = PhysicalParams::reference_point().with_delta_tilde(delta_tilde);
        (Liouvillian::assemble(&p.model(), dims, &AblationSpec::none()).unwrap(), p.delta)
    }

    /// Dense stacked solve of the truncated system, independent of the
    /// continued-fraction elimination.
    fn stacked(l: &Liouvillian, delta: f64, m_max: usize) -> Vec<CMatrix> {
        let d = l.dim();
        let n = d * d;
        let blocks = 2 * m_max + 1;
        let mut big = CMatrix::zeros(blocks * n, blocks * n);
        for b in 0..blocks {
            let m = b as f64 - m_max as f64;
            let diag = l.static_part.matrix() - CMatrix::identity(n, n) * C64::new(0.0, m * delta);
            big.view_mut((b * n, b * n), (n, n)).copy_from(&diag);
            if b + 1 < blocks {
                big.view_mut((b * n, (b + 1) * n), (n, n)).copy_from(l.scan_plus.matrix());
            }
            if b > 0 {
                big.view_mut((b * n, (b - 1) * n), (n, n)).copy_from(l.scan_minus.matrix());
            }
        }
        let row = m_max * n;
        big.row_mut(row).fill(C64::new(0.0, 0.0));
        for k in 0..d {
            big[(row, row + k * d + k)] = C64::new(1.0, 0.0);
        }
        let mut rhs = nalgebra::DVector::zeros(blocks * n);
        rhs[row] = C64::new(1.0, 0.0);
        let x = big.lu().solve(&rhs).unwrap();
        (0..blocks).map(|b| CMatrix::from_column_slice(d, d, &x.as_slice()[b * n..(b + 1) * n])).collect()
    }

    #[test]
    fn continued_fraction_matches_stacked_solve() {
        let dims = SystemDims::new(3).unwrap();
        let (l, delta) = reference(&dims, 1.0 + 2f64.sqrt());
        for m_max in [1, 2, 3] {
            let opts = FloquetOptions { harmonic_tolerance: 1.0, ..Default::default() }.with_m_max(m_max);
            let sol = solve_liouvillian(&l, delta, &opts).unwrap();
            let dense = stacked(&l, delta, m_max);
            for (k, (_, c)) in sol.components().enumerate() {
                assert!(max_abs(&(c - &dense[k])) < 1e-11, "m_max {m_max} block {k}");
            }
        }
    }

    #[test]
    fn vacuum_when_undriven() {
        let dims = SystemDims::new(3).unwrap();
        let m = ModelParams { g: 9.0, detuning: 9.0, kappa: 1.0, gamma: 2.0, e1: 0.0, e2: 0.0 };
        let l = Liouvillian::assemble(&m, &dims, &AblationSpec::none()).unwrap();
        let sol = solve_liouvillian(&l, 20.0, &FloquetOptions::default()).unwrap();
        assert!(max_abs(&(sol.rho0() - dims.projector(0, Atom::Ground))) < 1e-12);
        assert!(max_abs(&(steady_state(&l.static_part).unwrap() - dims.projector(0, Atom::Ground))) < 1e-12);
    }

    #[test]
    fn monochromatic_limit() {
        let dims = SystemDims::new(3).unwrap();
        let mut m = PhysicalParams::reference_point().model();
        m.e2 = 0.0;
        let l = Liouvillian::assemble(&m, &dims, &AblationSpec::none()).unwrap();
        let sol = solve_liouvillian(&l, 30.0, &FloquetOptions::default()).unwrap();
        let ss = steady_state(&l.static_part).unwrap();
        assert!(max_abs(&(sol.rho0() - &ss)) < 1e-12);
        for (m, c) in sol.components() {
            if m != 0 {
                assert!(max_abs(c) < 1e-14);
            }
        }
        let e = dims.index(0, Atom::Excited).unwrap();
        assert!(ss[(e, e)].re > 0.0);
        assert!(max_abs(&l.static_part.apply(&ss)) < 1e-10);
    }

    #[test]
    fn invariants_at_reference_point() {
        let dims = SystemDims::new(3).unwrap();
        let (l, delta) = reference(&dims, 1.0 + 2f64.sqrt());
        let sol = solve_liouvillian(&l, delta, &FloquetOptions::default()).unwrap();
        assert!(sol.reality_defect() < 1e-10);
        assert!(sol.trace_defect() < 1e-10);
        assert!(min_eigenvalue(sol.rho0()) > -1e-8);
        assert!(sol.edge_ratio() < 1e-3);
    }

    #[test]
    fn truncation_converges() {
        let dims = SystemDims::new(3).unwrap();
        for dt in [2.3, 1.0 + 2f64.sqrt(), 2.5] {
            let (l, delta) = reference(&dims, dt);
            let two = solve_liouvillian(&l, delta, &FloquetOptions::default().with_m_max(2)).unwrap();
            let three = solve_liouvillian(&l, delta, &FloquetOptions::default().with_m_max(3)).unwrap();
            let (a, b) = (w2(two.rho0(), &dims), w2(three.rho0(), &dims));
            assert!(((a - b) / b).abs() < 1e-3, "{a} {b}");
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let dims = SystemDims::new(2).unwrap();
        let (l, _) = reference(&dims, 2.4);
        assert!(matches!(solve_liouvillian(&l, 0.0, &FloquetOptions::default()), Err(Error::InvalidParameter { .. })));
        assert!(solve_liouvillian(&l, 20.0, &FloquetOptions::default().with_m_max(0)).is_err());
        let tight = FloquetOptions { harmonic_tolerance: 1e-30, ..Default::default() };
        assert!(matches!(solve_liouvillian(&l, 20.0, &tight), Err(Error::NonConvergent { .. })));
    }

    #[test]
    fn singular_generator_detected() {
        let dims = SystemDims::new(2).unwrap();
        let zero = Superoperator::zeros(dims.dim());
        assert!(matches!(
            solve_floquet(&zero, &zero, &zero, 5.0, &FloquetOptions::default()),
            Err(Error::SingularSystem(_))
        ));
        assert!(matches!(steady_state(&zero), Err(Error::SingularSystem(_))));
    }

    #[test]
    fn conditional_state_for_leaky_generator() {
        let dims = SystemDims::new(2).unwrap();
        let ab = AblationSpec { drop_jump_term: true, ..Default::default() };
        let m = PhysicalParams::reference_point().model();
        let l = Liouvillian::assemble(&m, &dims, &ab).unwrap();
        assert!(steady_state(&l.static_part).is_err());
        let rho = conditional_state(&l.static_part).unwrap();
        assert!((rho.trace() - 1.0).norm() < 1e-12);
        assert!(crate::operators::hermiticity_defect(&rho) < 1e-12);
    }

    #[test]
    fn oracle_matches_steady_state_without_second_tone() {
        let dims = SystemDims::new(2).unwrap();
        let mut m = PhysicalParams::reference_point().model();
        m.e2 = 0.0;
        let l = Liouvillian::assemble(&m, &dims, &AblationSpec::none()).unwrap();
        let res = time_integrate_oracle(&l.static_part, &l.scan_plus, &l.scan_minus, 30.0, &OracleOptions::default())
            .unwrap();
        let ss = steady_state(&l.static_part).unwrap();
        assert!(max_abs(&(res.mean_state - ss)) < 1e-6);
        assert!(res.trace_drift < 1e-8);
    }

    #[test]
    fn oracle_matches_floquet_at_reference_point() {
        let dims = SystemDims::new(2).unwrap();
        let (l, delta) = reference(&dims, 1.0 + 2f64.sqrt());
        let sol = solve_liouvillian(&l, delta, &FloquetOptions::default()).unwrap();
        let res = time_integrate_oracle(&l.static_part, &l.scan_plus, &l.scan_minus, delta, &OracleOptions::default())
            .unwrap();
        let (a, b) = (w2(sol.rho0(), &dims), w2(&res.mean_state, &dims));
        assert!(((a - b) / b).abs() < 0.01, "{a} {b}");
        assert!(res.trace_drift < 1e-8);
    }

    #[test]
    fn oracle_flags_coarse_steps() {
        let dims = SystemDims::new(2).unwrap();
        let (l, delta) = reference(&dims, 2.4);
        let coarse = OracleOptions { dt: 0.1, ..Default::default() };
        assert!(matches!(
            time_integrate_oracle(&l.static_part, &l.scan_plus, &l.scan_minus, delta, &coarse),
            Err(Error::StepSizeTooLarge { .. })
        ));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(16))]
            #[test]
            fn solution_invariants(
                g in 3.0f64..15.0, gamma in 0.5f64..3.0, e1 in 0.0f64..1.4, e2 in 0.0f64..1.4, delta in 8.0f64..35.0,
            ) {
                let dims = SystemDims::new(2).unwrap();
                let m = ModelParams { g, detuning: 9.0, kappa: 1.0, gamma, e1, e2 };
                let l = Liouvillian::assemble(&m, &dims, &AblationSpec::none()).unwrap();
                let opts = FloquetOptions::default();
                let sol = solve_liouvillian(&l, delta, &opts).unwrap();
                prop_assert!(sol.reality_defect() < 1e-10);
                prop_assert!(sol.trace_defect() < 1e-10);
                prop_assert!(min_eigenvalue(sol.rho0()) > -1e-8);
            }
        }
    }
}
