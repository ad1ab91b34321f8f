//! One NUTS transition: multinomial sampling over a trajectory that doubles
//! until the generalized no-U-turn criterion fails, the tree reaches its
//! maximum depth, or a leapfrog step diverges.

use rand::Rng;
use rand_distr::StandardNormal;

use super::LogDensity;

#[derive(Debug, Clone)]
pub(crate) struct PhasePoint {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    pub grad: Vec<f64>,
    pub logp: f64,
}

impl PhasePoint {
    pub(crate) fn new<T: LogDensity + ?Sized>(target: &T, q: Vec<f64>) -> Self {
        let mut grad = vec![0.0; q.len()];
        let logp = target.logp_and_grad(&q, &mut grad);
        let p = vec![0.0; q.len()];
        PhasePoint { q, p, grad, logp }
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct TransitionStats {
    pub accept_stat: f64,
    pub divergent: bool,
    pub depth: u32,
}

pub(crate) struct Hamiltonian<'a, T: ?Sized> {
    pub target: &'a T,
    pub inv_mass: &'a [f64],
}

impl<T: LogDensity + ?Sized> Hamiltonian<'_, T> {
    pub(crate) fn energy(&self, z: &PhasePoint) -> f64 {
        let kinetic: f64 = z.p.iter().zip(self.inv_mass).map(|(p, m)| p * p * m).sum();
        let h = -z.logp + 0.5 * kinetic;
        if h.is_nan() {
            f64::INFINITY
        } else {
            h
        }
    }

    pub(crate) fn velocity(&self, p: &[f64], out: &mut [f64]) {
        for ((o, p), m) in out.iter_mut().zip(p).zip(self.inv_mass) {
            *o = p * m;
        }
    }

    pub(crate) fn sample_momentum<R: Rng>(&self, z: &mut PhasePoint, rng: &mut R) {
        for (p, m) in z.p.iter_mut().zip(self.inv_mass) {
            let n: f64 = rng.sample(StandardNormal);
            *p = n / m.sqrt();
        }
    }

    pub(crate) fn leapfrog(&self, z: &mut PhasePoint, eps: f64) {
        for (p, g) in z.p.iter_mut().zip(&z.grad) {
            *p += 0.5 * eps * g;
        }
        for ((q, p), m) in z.q.iter_mut().zip(&z.p).zip(self.inv_mass) {
            *q += eps * m * p;
        }
        z.logp = self.target.logp_and_grad(&z.q, &mut z.grad);
        for (p, g) in z.p.iter_mut().zip(&z.grad) {
            *p += 0.5 * eps * g;
        }
    }
}

fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

fn no_u_turn(p_sharp_minus: &[f64], p_sharp_plus: &[f64], rho: &[f64]) -> bool {
    dot(p_sharp_plus, rho) > 0.0 && dot(p_sharp_minus, rho) > 0.0
}

struct TreeBuilder<'a, 'h, T: ?Sized, R> {
    ham: &'h Hamiltonian<'a, T>,
    rng: &'h mut R,
    eps: f64,
    h0: f64,
    max_delta_h: f64,
    n_leapfrog: u32,
    sum_metro_prob: f64,
    divergent: bool,
}

impl<T: LogDensity + ?Sized, R: Rng> TreeBuilder<'_, '_, T, R> {
    /// Extends the trajectory from edge state `z` by `2^depth` leapfrog steps
    /// in direction `sign`. Returns false if the subtree diverged or turned
    /// back on itself.
    #[allow(clippy::too_many_arguments)]
    fn build(
        &mut self,
        depth: u32,
        z: &mut PhasePoint,
        z_propose: &mut PhasePoint,
        p_sharp_beg: &mut [f64],
        p_sharp_end: &mut [f64],
        rho: &mut [f64],
        p_beg: &mut [f64],
        p_end: &mut [f64],
        sign: f64,
        log_sum_weight: &mut f64,
    ) -> bool {
        if depth == 0 {
            self.ham.leapfrog(z, sign * self.eps);
            self.n_leapfrog += 1;
            let h = self.ham.energy(z);
            if !(h - self.h0 <= self.max_delta_h) {
                self.divergent = true;
            }
            *log_sum_weight = log_add_exp(*log_sum_weight, self.h0 - h);
            self.sum_metro_prob += if self.h0 - h > 0.0 {
                1.0
            } else {
                (self.h0 - h).exp()
            };
            z_propose.clone_from(z);
            self.ham.velocity(&z.p, p_sharp_beg);
            p_sharp_end.copy_from_slice(p_sharp_beg);
            for (r, p) in rho.iter_mut().zip(&z.p) {
                *r += p;
            }
            p_beg.copy_from_slice(&z.p);
            p_end.copy_from_slice(&z.p);
            return !self.divergent;
        }

        let dim = z.q.len();

        // initial half
        let mut p_sharp_init_end = vec![0.0; dim];
        let mut p_init_end = vec![0.0; dim];
        let mut rho_init = vec![0.0; dim];
        let mut lsw_init = f64::NEG_INFINITY;
        let valid_init = self.build(
            depth - 1,
            z,
            z_propose,
            p_sharp_beg,
            &mut p_sharp_init_end,
            &mut rho_init,
            p_beg,
            &mut p_init_end,
            sign,
            &mut lsw_init,
        );
        if !valid_init {
            return false;
        }

        // final half
        let mut z_propose_final = z.clone();
        let mut p_sharp_final_beg = vec![0.0; dim];
        let mut p_final_beg = vec![0.0; dim];
        let mut rho_final = vec![0.0; dim];
        let mut lsw_final = f64::NEG_INFINITY;
        let valid_final = self.build(
            depth - 1,
            z,
            &mut z_propose_final,
            &mut p_sharp_final_beg,
            p_sharp_end,
            &mut rho_final,
            &mut p_final_beg,
            p_end,
            sign,
            &mut lsw_final,
        );
        if !valid_final {
            return false;
        }

        let lsw_subtree = log_add_exp(lsw_init, lsw_final);
        *log_sum_weight = log_add_exp(*log_sum_weight, lsw_subtree);
        if lsw_final > lsw_subtree {
            *z_propose = z_propose_final;
        } else {
            let accept_prob = (lsw_final - lsw_subtree).exp();
            if self.rng.random::<f64>() < accept_prob {
                *z_propose = z_propose_final;
            }
        }

        let rho_subtree = add(&rho_init, &rho_final);
        for (r, s) in rho.iter_mut().zip(&rho_subtree) {
            *r += s;
        }

        let mut persist = no_u_turn(p_sharp_beg, p_sharp_end, &rho_subtree);
        let rho_extended = add(&rho_init, &p_final_beg);
        persist &= no_u_turn(p_sharp_beg, &p_sharp_final_beg, &rho_extended);
        let rho_extended = add(&rho_final, &p_init_end);
        persist &= no_u_turn(&p_sharp_init_end, p_sharp_end, &rho_extended);
        persist
    }
}

/// Runs one transition from `z` (position, gradient and log density filled
/// in; the momentum is resampled). Returns the selected state.
pub(crate) fn transition<T: LogDensity + ?Sized, R: Rng>(
    ham: &Hamiltonian<'_, T>,
    z: &PhasePoint,
    eps: f64,
    max_depth: u32,
    max_delta_h: f64,
    rng: &mut R,
) -> (PhasePoint, TransitionStats) {
    let dim = z.q.len();
    let mut start = z.clone();
    ham.sample_momentum(&mut start, rng);
    let h0 = ham.energy(&start);

    let mut z_fwd = start.clone();
    let mut z_bck = start.clone();
    let mut z_sample = start.clone();
    let mut z_propose = start.clone();

    let mut p_sharp_fwd_fwd = vec![0.0; dim];
    ham.velocity(&start.p, &mut p_sharp_fwd_fwd);
    let mut p_sharp_fwd_bck = p_sharp_fwd_fwd.clone();
    let mut p_sharp_bck_fwd = p_sharp_fwd_fwd.clone();
    let mut p_sharp_bck_bck = p_sharp_fwd_fwd.clone();
    let mut p_fwd_fwd = start.p.clone();
    let mut p_fwd_bck = start.p.clone();
    let mut p_bck_fwd = start.p.clone();
    let mut p_bck_bck = start.p.clone();
    let mut rho = start.p.clone();

    let mut log_sum_weight = 0.0;
    let mut depth = 0;

    let mut builder = TreeBuilder {
        ham,
        rng,
        eps,
        h0,
        max_delta_h,
        n_leapfrog: 0,
        sum_metro_prob: 0.0,
        divergent: false,
    };

    while depth < max_depth {
        let mut rho_fwd = vec![0.0; dim];
        let mut rho_bck = vec![0.0; dim];
        let mut lsw_subtree = f64::NEG_INFINITY;

        let valid_subtree = if builder.rng.random::<bool>() {
            // the existing tree becomes the backward half
            rho_bck.copy_from_slice(&rho);
            p_bck_fwd.copy_from_slice(&p_fwd_bck);
            p_sharp_bck_fwd.copy_from_slice(&p_sharp_fwd_bck);
            builder.build(
                depth,
                &mut z_fwd,
                &mut z_propose,
                &mut p_sharp_fwd_bck,
                &mut p_sharp_fwd_fwd,
                &mut rho_fwd,
                &mut p_fwd_bck,
                &mut p_fwd_fwd,
                1.0,
                &mut lsw_subtree,
            )
        } else {
            rho_fwd.copy_from_slice(&rho);
            p_fwd_bck.copy_from_slice(&p_bck_fwd);
            p_sharp_fwd_bck.copy_from_slice(&p_sharp_bck_fwd);
            builder.build(
                depth,
                &mut z_bck,
                &mut z_propose,
                &mut p_sharp_bck_fwd,
                &mut p_sharp_bck_bck,
                &mut rho_bck,
                &mut p_bck_fwd,
                &mut p_bck_bck,
                -1.0,
                &mut lsw_subtree,
            )
        };

        if !valid_subtree {
            break;
        }
        depth += 1;

        if lsw_subtree > log_sum_weight {
            z_sample.clone_from(&z_propose);
        } else {
            let accept_prob = (lsw_subtree - log_sum_weight).exp();
            if builder.rng.random::<f64>() < accept_prob {
                z_sample.clone_from(&z_propose);
            }
        }
        log_sum_weight = log_add_exp(log_sum_weight, lsw_subtree);

        rho = add(&rho_bck, &rho_fwd);
        let mut persist = no_u_turn(&p_sharp_bck_bck, &p_sharp_fwd_fwd, &rho);
        let rho_extended = add(&rho_bck, &p_fwd_bck);
        persist &= no_u_turn(&p_sharp_bck_bck, &p_sharp_fwd_bck, &rho_extended);
        let rho_extended = add(&rho_fwd, &p_bck_fwd);
        persist &= no_u_turn(&p_sharp_bck_fwd, &p_sharp_fwd_fwd, &rho_extended);
        if !persist {
            break;
        }
    }

    let stats = TransitionStats {
        accept_stat: if builder.n_leapfrog > 0 {
            builder.sum_metro_prob / builder.n_leapfrog as f64
        } else {
            0.0
        },
        divergent: builder.divergent,
        depth,
    };
    (z_sample, stats)
}

/// Heuristic initial step size: doubles or halves `eps` until the one-step
/// acceptance probability crosses one half.
pub(crate) fn find_reasonable_step<T: LogDensity + ?Sized, R: Rng>(
    ham: &Hamiltonian<'_, T>,
    z: &PhasePoint,
    initial: f64,
    rng: &mut R,
) -> f64 {
    let log_half = 0.5f64.ln();
    let mut eps = initial;
    let mut direction = 0.0;
    for _ in 0..100 {
        let mut trial = z.clone();
        ham.sample_momentum(&mut trial, rng);
        let h0 = ham.energy(&trial);
        ham.leapfrog(&mut trial, eps);
        let h = ham.energy(&trial);
        let delta = h0 - h;
        let delta = if delta.is_nan() {
            f64::NEG_INFINITY
        } else {
            delta
        };

        if direction == 0.0 {
            direction = if delta > log_half { 1.0 } else { -1.0 };
        }
        if direction > 0.0 && !(delta > log_half) {
            break;
        }
        if direction < 0.0 && !(delta < log_half) {
            break;
        }
        eps = if direction > 0.0 {
            2.0 * eps
        } else {
            0.5 * eps
        };
        if !(1e-12..=1e7).contains(&eps) {
            break;
        }
    }
    eps.clamp(1e-12, 1e7)
}
