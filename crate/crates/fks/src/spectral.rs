//! Spectral evaluation of the Boltzmann collision operator.
//!
//! The operator is computed in scaled velocity units on `[-pi, pi]^dv`
//! (`kappa = pi / L` maps the user's velocity box there), with the data
//! nominally supported in the ball of radius `lambda * pi`,
//! `lambda = 2 / (3 + sqrt 2)`, and the pair integral truncated at
//! [`cutoff_radius`] so that the periodized gain term stays essentially
//! alias-free. The decoupling of the collision kernel along a set of discrete
//! angles turns the gain term into `A` (or `A1*A2`) products of two masked
//! inverse transforms, giving `O(A * N^dv log N)` work per cell.
//!
//! Two evaluators are provided: the fast transform-based path used by the
//! solver, and a literal quadratic-cost double sum over mode pairs used as a
//! cross-check oracle. They share only the angle tables.

use std::f64::consts::PI;

use crate::conservation::Projector;
use crate::error::{FksError, Result};
use crate::fft::{C64, FftScratch, NdFft};
use crate::grid::VelocityGrid;

/// Fraction of the scaled box radius that data may occupy without aliasing.
pub fn support_fraction() -> f64 {
    2.0 / (3.0 + 2.0_f64.sqrt())
}

/// Support ball radius in scaled units.
pub fn support_radius() -> f64 {
    support_fraction() * PI
}

/// Truncation radius of the pair integral in scaled units, set to 3/2 of the
/// support radius. Wider cutoffs capture more of the tail interactions but
/// fold gain-term images back onto the grid as soon as the data spills past
/// the nominal support ball; narrower ones discard genuine collisions. The
/// 3/2 compromise keeps the relaxation rate of a thermal distribution
/// accurate on velocity boxes as tight as four thermal widths per side.
pub fn cutoff_radius() -> f64 {
    1.5 * support_radius()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelKind {
    /// Constant collision kernel (two-dimensional velocity space).
    Maxwell,
    /// Kernel proportional to the relative speed (three-dimensional).
    HardSphere,
}

impl KernelKind {
    /// Exponent of the relative-speed factor in the kernel.
    pub fn speed_exponent(&self) -> i32 {
        match self {
            KernelKind::Maxwell => 0,
            KernelKind::HardSphere => 1,
        }
    }
}

/// Parameters fixing one collision discretization.
#[derive(Debug, Clone)]
pub struct SpectralConfig {
    pub dv: usize,
    pub n: usize,
    pub kernel: KernelKind,
    /// Angle counts: `[A, 1]` in 2D, `[A1, A2]` in 3D.
    pub angles: [usize; 2],
    /// Velocity box half-width in user units.
    pub vel_bound: f64,
    /// Kernel strength constant.
    pub kernel_const: f64,
    /// Relaxation scale dividing the whole operator.
    pub tau: f64,
}

impl SpectralConfig {
    pub fn validate(&self) -> Result<()> {
        match (self.dv, self.kernel) {
            (2, KernelKind::Maxwell) | (3, KernelKind::HardSphere) => {}
            (dv, k) => {
                return Err(FksError::Config(format!(
                    "unsupported kernel pairing: {k:?} with dv={dv}"
                )))
            }
        }
        if self.n < 4 || self.n % 2 != 0 {
            return Err(FksError::Config(format!("spectral N must be even and >= 4, got {}", self.n)));
        }
        if self.angles[0] < 1 || (self.dv == 3 && self.angles[1] < 1) {
            return Err(FksError::Config("angle counts must be >= 1".into()));
        }
        if !(self.vel_bound > 0.0) || !(self.kernel_const > 0.0) || !(self.tau > 0.0) {
            return Err(FksError::Config("velocity bound, kernel constant and tau must be positive".into()));
        }
        Ok(())
    }
}

/// Precomputed angle tables shared by the fast and direct evaluators.
pub struct CollisionTables {
    pub dv: usize,
    pub n: usize,
    pairs: usize,
    /// Per angle pair, values of the first decoupled factor over all modes.
    alpha: Vec<f64>,
    /// Per angle pair, values of the second decoupled factor over all modes.
    alpha_prime: Vec<f64>,
    /// Loss symbol: angle-weighted sum of `alpha * alpha_prime` per mode.
    diag: Vec<f64>,
    angle_weight: f64,
    /// User-unit prefactor: kernel constant, Carleman factor, velocity-box
    /// Jacobian and 1/tau folded together.
    scale: f64,
    fft: NdFft,
}

/// Per-worker buffers for [`CollisionTables::evaluate_fast`].
pub struct CollisionScratch {
    fft: FftScratch,
    ghat: Vec<C64>,
    packed: Vec<C64>,
    gain: Vec<f64>,
}

fn sinc(x: f64) -> f64 {
    let ax = x.abs();
    if ax < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}

/// First decoupled factor for the constant 2D kernel: `2R * Sinc(R s)`.
pub fn phi2(s: f64, r: f64) -> f64 {
    2.0 * r * sinc(r * s.abs())
}

/// First decoupled factor for 3D hard spheres:
/// `R^2 * (2 Sinc(R s) - Sinc^2(R s / 2))`.
pub fn phi3_hs(s: f64, r: f64) -> f64 {
    let s = s.abs();
    let half = sinc(0.5 * r * s);
    r * r * (2.0 * sinc(r * s) - half * half)
}

/// Second decoupled factor for 3D hard spheres: `2 R^2 Sinc^2(R s / 2)`.
pub fn psi3_hs(s: f64, r: f64) -> f64 {
    let half = sinc(0.5 * r * s.abs());
    2.0 * r * r * half * half
}

/// Quadrature form of [`phi3_hs`] for a general radial kernel weight `a`:
/// `2 * integral_0^R a(rho) rho cos(rho s) d rho`, trapezoid on `points` panels.
pub fn phi3_quadrature(s: f64, r: f64, a: impl Fn(f64) -> f64, points: usize) -> f64 {
    let h = r / points as f64;
    let mut sum = 0.5 * (0.0 + a(r) * r * (r * s).cos());
    for i in 1..points {
        let rho = i as f64 * h;
        sum += a(rho) * rho * (rho * s).cos();
    }
    2.0 * sum * h
}

/// Quadrature form of [`psi3_hs`] for a general radial kernel weight `b`:
/// `4 * integral_0^R b(rho) rho Sinc(rho s) d rho`, trapezoid on `points` panels.
pub fn psi3_quadrature(s: f64, r: f64, b: impl Fn(f64) -> f64, points: usize) -> f64 {
    let h = r / points as f64;
    let mut sum = 0.5 * (0.0 + b(r) * r * sinc(r * s));
    for i in 1..points {
        let rho = i as f64 * h;
        sum += b(rho) * rho * sinc(rho * s);
    }
    4.0 * sum * h
}

/// Signed mode value of DFT bin `b` in wrap-around order.
#[inline]
fn mode_of_bin(b: usize, n: usize) -> i64 {
    if b < n / 2 {
        b as i64
    } else {
        b as i64 - n as i64
    }
}

/// Evaluate a table entry at the mode of bin `b`, folding the sign-ambiguous
/// highest mode: a bin digit at `N/2` represents both `+N/2` and `-N/2`, so
/// the entry is the mean of `eval` over every sign choice. The values are
/// sorted before summing, which makes the result exactly invariant under bin
/// mirroring and keeps each masked spectrum Hermitian for real input.
fn fold_nyquist(b: [usize; 3], d: usize, n: usize, eval: impl Fn([f64; 3]) -> f64) -> f64 {
    let mut modes = [0.0f64; 3];
    let mut nyq = [0usize; 3];
    let mut s = 0;
    for a in 0..d {
        if b[a] == n / 2 {
            nyq[s] = a;
            s += 1;
        }
        modes[a] = mode_of_bin(b[a], n) as f64;
    }
    if s == 0 {
        return eval(modes);
    }
    let mut vals = [0.0f64; 8];
    for mask in 0..(1usize << s) {
        let mut l = modes;
        for (i, &axis) in nyq[..s].iter().enumerate() {
            let half = n as f64 / 2.0;
            l[axis] = if mask & (1 << i) != 0 { -half } else { half };
        }
        vals[mask] = eval(l);
    }
    let active = &mut vals[..1 << s];
    active.sort_by(f64::total_cmp);
    active.iter().sum::<f64>() / (1 << s) as f64
}

impl CollisionTables {
    pub fn build(cfg: &SpectralConfig) -> Result<Self> {
        cfg.validate()?;
        let r = cutoff_radius();
        let n = cfg.n;
        let modes = n.pow(cfg.dv as u32);

        let (pairs, angle_weight) = match cfg.dv {
            2 => (cfg.angles[0], PI / cfg.angles[0] as f64),
            _ => (
                cfg.angles[0] * cfg.angles[1],
                PI * PI / (cfg.angles[0] * cfg.angles[1]) as f64,
            ),
        };

        let mut alpha = vec![0.0; pairs * modes];
        let mut alpha_prime = vec![0.0; pairs * modes];

        if cfg.dv == 2 {
            let a = cfg.angles[0];
            for p in 1..=a {
                let theta = PI * p as f64 / a as f64;
                let e = [theta.cos(), theta.sin()];
                let eperp = [-theta.sin(), theta.cos()];
                let base = (p - 1) * modes;
                for by in 0..n {
                    for bx in 0..n {
                        let bin = bx + n * by;
                        alpha[base + bin] = fold_nyquist([bx, by, 0], 2, n, |l| {
                            phi2(l[0] * e[0] + l[1] * e[1], r)
                        });
                        alpha_prime[base + bin] = fold_nyquist([bx, by, 0], 2, n, |l| {
                            phi2(l[0] * eperp[0] + l[1] * eperp[1], r)
                        });
                    }
                }
            }
        } else {
            let (a1, a2) = (cfg.angles[0], cfg.angles[1]);
            for p in 1..=a1 {
                let theta = PI * p as f64 / a1 as f64;
                for q in 1..=a2 {
                    let phi = PI * q as f64 / a2 as f64;
                    let e = [
                        theta.sin() * phi.cos(),
                        theta.sin() * phi.sin(),
                        theta.cos(),
                    ];
                    let base = ((p - 1) * a2 + (q - 1)) * modes;
                    for bz in 0..n {
                        for by in 0..n {
                            for bx in 0..n {
                                let bin = bx + n * (by + n * bz);
                                alpha[base + bin] = fold_nyquist([bx, by, bz], 3, n, |l| {
                                    phi3_hs(l[0] * e[0] + l[1] * e[1] + l[2] * e[2], r)
                                });
                                alpha_prime[base + bin] = fold_nyquist([bx, by, bz], 3, n, |l| {
                                    let dot = l[0] * e[0] + l[1] * e[1] + l[2] * e[2];
                                    let msq = l[0] * l[0] + l[1] * l[1] + l[2] * l[2];
                                    psi3_hs((msq - dot * dot).max(0.0).sqrt(), r)
                                });
                            }
                        }
                    }
                }
            }
        }

        // The decoupled factors are even in the mode, so every table must be
        // exactly symmetric under bin mirroring; a violation means broken
        // mode indexing, which would silently corrupt the Hermitian structure
        // the packed evaluator relies on.
        for t in 0..pairs {
            let base = t * modes;
            for bin in 0..modes {
                let mb = mirror_bin(bin, n, cfg.dv);
                assert_eq!(alpha[base + bin].to_bits(), alpha[base + mb].to_bits());
                assert_eq!(alpha_prime[base + bin].to_bits(), alpha_prime[base + mb].to_bits());
            }
        }

        let mut diag = vec![0.0; modes];
        for bin in 0..modes {
            let mut s = 0.0;
            for t in 0..pairs {
                s += alpha[t * modes + bin] * alpha_prime[t * modes + bin];
            }
            diag[bin] = angle_weight * s;
        }

        let kappa = PI / cfg.vel_bound;
        let jac = kappa.powi(-(cfg.dv as i32 + cfg.kernel.speed_exponent()));
        let scale =
            cfg.kernel_const * 2f64.powi(cfg.dv as i32 - 1) * jac / cfg.tau;

        Ok(Self {
            dv: cfg.dv,
            n,
            pairs,
            alpha,
            alpha_prime,
            diag,
            angle_weight,
            scale,
            fft: NdFft::new(cfg.dv, n),
        })
    }

    pub fn modes(&self) -> usize {
        self.n.pow(self.dv as u32)
    }

    pub fn angle_pairs(&self) -> usize {
        self.pairs
    }

    pub fn make_scratch(&self) -> CollisionScratch {
        let m = self.modes();
        CollisionScratch {
            fft: self.fft.make_scratch(),
            ghat: vec![C64::new(0.0, 0.0); m],
            packed: vec![C64::new(0.0, 0.0); m],
            gain: vec![0.0; m],
        }
    }

    /// Transform-based collision operator: `O(pairs * N^dv log N)` per call.
    ///
    /// Writes `Q(f)/tau` in user units into `out`. Deterministic for a fixed
    /// input regardless of the caller's threading, since all accumulation
    /// orders are fixed.
    pub fn evaluate_fast(&self, f: &[f64], scratch: &mut CollisionScratch, out: &mut [f64]) {
        let m = self.modes();
        assert_eq!(f.len(), m);
        assert_eq!(out.len(), m);
        let inv_m = 1.0 / m as f64;
        let CollisionScratch { fft, ghat, packed, gain } = scratch;

        for (g, fk) in ghat.iter_mut().zip(f.iter()) {
            *g = C64::new(*fk, 0.0);
        }
        self.fft.forward(ghat, fft);
        for g in ghat.iter_mut() {
            *g *= inv_m;
        }

        #[cfg(debug_assertions)]
        self.assert_hermitian(ghat);

        // Gain: per angle pair, the two masked spectra are packed into one
        // complex transform; both unpacked factors are real because the masks
        // are even and the spectrum Hermitian, so each product is re * im of
        // the transformed value, accumulated straight off the final pass.
        gain.fill(0.0);
        for t in 0..self.pairs {
            let a = &self.alpha[t * m..(t + 1) * m];
            let b = &self.alpha_prime[t * m..(t + 1) * m];
            for bin in 0..m {
                let g = ghat[bin];
                packed[bin] = C64::new(
                    a[bin] * g.re - b[bin] * g.im,
                    a[bin] * g.im + b[bin] * g.re,
                );
            }
            self.fft.inverse_consume(packed, fft, |j, w| gain[j] += w.re * w.im);
        }

        // Loss: one masked transform multiplied pointwise by f, folded into
        // the output together with the gain as it streams out.
        for bin in 0..m {
            packed[bin] = ghat[bin] * self.diag[bin];
        }
        let mut re_max = 0.0f64;
        let mut im_max = 0.0f64;
        self.fft.inverse_consume(packed, fft, |j, w| {
            re_max = re_max.max(w.re.abs());
            im_max = im_max.max(w.im.abs());
            out[j] = self.scale * (self.angle_weight * gain[j] - f[j] * w.re);
        });
        assert!(
            im_max <= 1e-10 * re_max.max(f64::MIN_POSITIVE),
            "imaginary residue {im_max:.3e} vs {re_max:.3e}: broken table symmetry or indexing"
        );
    }

    #[cfg(debug_assertions)]
    fn assert_hermitian(&self, ghat: &[C64]) {
        let mut peak = 0.0f64;
        for g in ghat {
            peak = peak.max(g.norm_sqr());
        }
        let peak = peak.sqrt();
        for bin in 0..ghat.len() {
            let mb = mirror_bin(bin, self.n, self.dv);
            let d = ghat[bin] - ghat[mb].conj();
            assert!(
                d.norm() <= 1e-10 * peak.max(f64::MIN_POSITIVE),
                "spectrum not Hermitian at bin {bin}"
            );
        }
    }

    /// Literal double sum over mode pairs on the extended `(2N-1)^dv` grid.
    ///
    /// Mathematically identical to [`Self::evaluate_fast`] but shares nothing
    /// with it except the angle tables: the transforms here are hand-rolled
    /// sums against the true node phases.
    pub fn evaluate_direct(&self, f: &[f64], out: &mut [f64]) -> Result<()> {
        let m = self.modes();
        if m > 4096 {
            return Err(FksError::Config(format!(
                "direct evaluator limited to 4096 modes, got {m}"
            )));
        }
        assert_eq!(f.len(), m);
        assert_eq!(out.len(), m);
        let n = self.n;
        let d = self.dv;

        // Node phases on [-pi, pi): xi_j = -pi + (j + 1/2) * 2pi/N.
        let xi: Vec<f64> = (0..n).map(|j| -PI + (j as f64 + 0.5) * 2.0 * PI / n as f64).collect();
        // Forward twiddles t[l_bin][j] = exp(-i l xi_j).
        let mut fw = vec![C64::new(0.0, 0.0); n * n];
        for lb in 0..n {
            let l = mode_of_bin(lb, n) as f64;
            for j in 0..n {
                fw[lb * n + j] = C64::new((l * xi[j]).cos(), -(l * xi[j]).sin());
            }
        }

        let mut ghat = vec![C64::new(0.0, 0.0); m];
        for lbin in 0..m {
            let lb = decompose_bin(lbin, n, d);
            let mut acc = C64::new(0.0, 0.0);
            for j in 0..m {
                let jb = decompose_bin(j, n, d);
                let mut tw = fw[lb[0] * n + jb[0]];
                for a in 1..d {
                    tw *= fw[lb[a] * n + jb[a]];
                }
                acc += tw * f[j];
            }
            ghat[lbin] = acc / m as f64;
        }

        // Gain spectrum on the extended grid k = l + m, k_a in [-N, N-2].
        let ext = 2 * n - 1;
        let ext_total = ext.pow(d as u32);
        let mut qext = vec![C64::new(0.0, 0.0); ext_total];
        for lbin in 0..m {
            let lb = decompose_bin(lbin, n, d);
            for mbin in 0..m {
                let mb = decompose_bin(mbin, n, d);
                let mut beta = 0.0;
                for t in 0..self.pairs {
                    beta += self.alpha[t * m + lbin] * self.alpha_prime[t * m + mbin];
                }
                beta *= self.angle_weight;
                let mut kidx = 0usize;
                for a in (0..d).rev() {
                    let k = mode_of_bin(lb[a], n) + mode_of_bin(mb[a], n) + n as i64;
                    kidx = kidx * ext + k as usize;
                }
                qext[kidx] += ghat[lbin] * ghat[mbin] * beta;
            }
        }

        // Loss factor per node: sum_m D(m) ghat_m exp(i m xi_j).
        let mut loss = vec![C64::new(0.0, 0.0); m];
        for mbin in 0..m {
            let mb = decompose_bin(mbin, n, d);
            let gd = ghat[mbin] * self.diag[mbin];
            for j in 0..m {
                let jb = decompose_bin(j, n, d);
                let mut tw = fw[mb[0] * n + jb[0]].conj();
                for a in 1..d {
                    tw *= fw[mb[a] * n + jb[a]].conj();
                }
                loss[j] += gd * tw;
            }
        }

        // Evaluate the extended gain spectrum at the true node phases.
        for j in 0..m {
            let jb = decompose_bin(j, n, d);
            let mut gain = C64::new(0.0, 0.0);
            for kidx in 0..ext_total {
                let mut rest = kidx;
                let mut phase = 0.0;
                for a in 0..d {
                    let k = (rest % ext) as i64 - n as i64;
                    rest /= ext;
                    phase += k as f64 * xi[jb[a]];
                }
                gain += qext[kidx] * C64::new(phase.cos(), phase.sin());
            }
            out[j] = self.scale * (gain.re - f[j] * loss[j].re);
        }
        Ok(())
    }
}

fn decompose_bin(bin: usize, n: usize, d: usize) -> [usize; 3] {
    let b0 = bin % n;
    let rest = bin / n;
    if d == 2 {
        [b0, rest, 0]
    } else {
        [b0, rest % n, rest / n]
    }
}

fn mirror_bin(bin: usize, n: usize, d: usize) -> usize {
    let b = decompose_bin(bin, n, d);
    let mut out = 0usize;
    for a in (0..d).rev() {
        out = out * n + (n - b[a]) % n;
    }
    out
}

/// One forward-Euler collision step with conservative correction:
/// `f += dt * P0(Q(f))` where `P0` removes all invariant moments.
pub fn boltzmann_step(
    f: &mut [f64],
    dt: f64,
    tables: &CollisionTables,
    scratch: &mut CollisionScratch,
    q: &mut [f64],
    proj: &Projector,
) {
    tables.evaluate_fast(f, scratch, q);
    proj.project_to_zero(q);
    for (fk, qk) in f.iter_mut().zip(q.iter()) {
        *fk += dt * qk;
    }
}

/// Stability bound on the hard-sphere loss rate per unit density: total
/// cross section times the largest relative speed between two supported
/// points, `2 * lambda * pi`. This stays an upper bound for the narrower
/// pair-integral cutoff actually applied.
pub fn hard_sphere_rate_bound(kernel_const: f64) -> f64 {
    kernel_const * 4.0 * PI * 2.0 * support_radius()
}

/// Fraction of |f|-mass on nodes outside the alias-safe ball `|v| <= lambda L`.
pub fn mass_fraction_outside_support(f: &[f64], grid: &VelocityGrid) -> f64 {
    let limit = support_fraction() * grid.bound;
    let limit_sq = limit * limit;
    let mut inside = 0.0;
    let mut outside = 0.0;
    for k in 0..grid.total_nodes() {
        let v = grid.node(k);
        let vsq = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
        if vsq > limit_sq {
            outside += f[k].abs();
        } else {
            inside += f[k].abs();
        }
    }
    if inside + outside == 0.0 {
        0.0
    } else {
        outside / (inside + outside)
    }
}
