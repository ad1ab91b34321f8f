//! Warmup adaptation: dual averaging of the step size and windowed estimation
//! of a diagonal inverse mass matrix.

#[derive(Debug, Clone, Copy)]
pub struct DualAverageOptions {
    pub gamma: f64,
    pub t0: f64,
    pub kappa: f64,
}

impl Default for DualAverageOptions {
    fn default() -> Self {
        DualAverageOptions {
            gamma: 0.05,
            t0: 10.0,
            kappa: 0.75,
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct DualAverage {
    opts: DualAverageOptions,
    mu: f64,
    hbar: f64,
    log_step: f64,
    log_step_bar: f64,
    count: u64,
}

impl DualAverage {
    pub(crate) fn new(opts: DualAverageOptions, initial_step: f64) -> Self {
        DualAverage {
            opts,
            mu: (10.0 * initial_step).ln(),
            hbar: 0.0,
            log_step: initial_step.ln(),
            log_step_bar: 0.0,
            count: 0,
        }
    }

    pub(crate) fn restart(&mut self, initial_step: f64) {
        *self = DualAverage::new(self.opts, initial_step);
    }

    /// Records one acceptance statistic and returns the next step size.
    pub(crate) fn update(&mut self, accept_stat: f64, target: f64) -> f64 {
        let accept_stat = if accept_stat.is_finite() {
            accept_stat.min(1.0)
        } else {
            0.0
        };
        self.count += 1;
        let n = self.count as f64;
        let w = 1.0 / (n + self.opts.t0);
        self.hbar = (1.0 - w) * self.hbar + w * (target - accept_stat);
        self.log_step = self.mu - n.sqrt() / self.opts.gamma * self.hbar;
        let eta = n.powf(-self.opts.kappa);
        self.log_step_bar = eta * self.log_step + (1.0 - eta) * self.log_step_bar;
        self.log_step.exp()
    }

    /// The averaged step size used after warmup.
    pub(crate) fn final_step(&self) -> f64 {
        self.log_step_bar.exp()
    }
}

/// Running per-coordinate variance (Welford).
#[derive(Debug, Clone)]
pub(crate) struct RunningVariance {
    n: u64,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl RunningVariance {
    pub(crate) fn new(dim: usize) -> Self {
        RunningVariance {
            n: 0,
            mean: vec![0.0; dim],
            m2: vec![0.0; dim],
        }
    }

    pub(crate) fn push(&mut self, x: &[f64]) {
        self.n += 1;
        let n = self.n as f64;
        for ((m, s), &v) in self.mean.iter_mut().zip(self.m2.iter_mut()).zip(x) {
            let delta = v - *m;
            *m += delta / n;
            *s += delta * (v - *m);
        }
    }

    /// Variance shrunk towards `1e-3`, as an inverse mass diagonal.
    pub(crate) fn regularized(&self) -> Vec<f64> {
        let n = self.n as f64;
        self.m2
            .iter()
            .map(|s| {
                let var = s / (n - 1.0);
                (n / (n + 5.0)) * var + 1e-3 * (5.0 / (n + 5.0))
            })
            .collect()
    }

    pub(crate) fn reset(&mut self) {
        self.n = 0;
        self.mean.iter_mut().for_each(|v| *v = 0.0);
        self.m2.iter_mut().for_each(|v| *v = 0.0);
    }
}

/// Expanding-window schedule: a fast initial buffer, slow windows that double
/// in length and feed the mass matrix, and a fast terminal buffer.
#[derive(Debug, Clone)]
pub(crate) struct WindowSchedule {
    warmup: usize,
    init_buffer: usize,
    term_buffer: usize,
    window_size: usize,
    next_window_end: usize,
    enabled: bool,
}

impl WindowSchedule {
    pub(crate) fn new(warmup: usize) -> Self {
        let (mut init_buffer, mut term_buffer, mut base_window) = (75, 50, 25);
        let enabled = warmup >= 20;
        if enabled && init_buffer + base_window + term_buffer > warmup {
            init_buffer = (0.15 * warmup as f64) as usize;
            term_buffer = (0.1 * warmup as f64) as usize;
            base_window = warmup - (init_buffer + term_buffer);
        }
        WindowSchedule {
            warmup,
            init_buffer,
            term_buffer,
            window_size: base_window,
            next_window_end: init_buffer + base_window - 1,
            enabled,
        }
    }

    /// Whether draw `i` of warmup contributes to the mass matrix estimate.
    pub(crate) fn in_slow_window(&self, i: usize) -> bool {
        self.enabled
            && i >= self.init_buffer
            && i < self.warmup - self.term_buffer
            && i != self.warmup
    }

    /// Whether a slow window closes at draw `i`; advances the schedule if so.
    pub(crate) fn window_closes(&mut self, i: usize) -> bool {
        if !(self.enabled && i == self.next_window_end && i != self.warmup) {
            return false;
        }
        let last = self.warmup - self.term_buffer - 1;
        if self.next_window_end != last {
            self.window_size *= 2;
            self.next_window_end = i + self.window_size;
            if self.next_window_end != last
                && self.next_window_end + 2 * self.window_size >= self.warmup - self.term_buffer
            {
                self.next_window_end = last;
            }
        }
        true
    }
}
