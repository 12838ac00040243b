//! Warm-up adaptation: dual-averaging step size and a windowed diagonal
//! metric estimate.

/// Nesterov dual averaging of `log ε` towards a target acceptance rate.
#[derive(Debug, Clone)]
pub struct DualAveraging {
    target_accept: f64,
    mu: f64,
    log_eps: f64,
    log_eps_bar: f64,
    h_bar: f64,
    count: f64,
}

const GAMMA: f64 = 0.05;
const T0: f64 = 10.0;
const KAPPA: f64 = 0.75;

impl DualAveraging {
    pub fn new(initial_step: f64, target_accept: f64) -> Self {
        Self {
            target_accept,
            mu: (10.0 * initial_step).ln(),
            log_eps: initial_step.ln(),
            log_eps_bar: 0.0,
            h_bar: 0.0,
            count: 0.0,
        }
    }

    pub fn update(&mut self, accept_stat: f64) {
        self.count += 1.0;
        let t = self.count;
        let w = 1.0 / (t + T0);
        self.h_bar = (1.0 - w) * self.h_bar + w * (self.target_accept - accept_stat);
        self.log_eps = self.mu - t.sqrt() / GAMMA * self.h_bar;
        let eta = t.powf(-KAPPA);
        self.log_eps_bar = eta * self.log_eps + (1.0 - eta) * self.log_eps_bar;
    }

    /// Step size to use for the next warm-up transition.
    pub fn current(&self) -> f64 {
        self.log_eps.exp()
    }

    /// Averaged step size, used once warm-up ends.
    pub fn final_step(&self) -> f64 {
        if self.count == 0.0 {
            self.current()
        } else {
            self.log_eps_bar.exp()
        }
    }
}

/// Welford running variance per coordinate.
#[derive(Debug, Clone)]
pub struct RunningVariance {
    n: usize,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl RunningVariance {
    pub fn new(dim: usize) -> Self {
        Self { n: 0, mean: vec![0.0; dim], m2: vec![0.0; dim] }
    }

    pub fn push(&mut self, x: &[f64]) {
        self.n += 1;
        let n = self.n as f64;
        for ((m, s), v) in self.mean.iter_mut().zip(self.m2.iter_mut()).zip(x) {
            let d = v - *m;
            *m += d / n;
            *s += d * (v - *m);
        }
    }

    pub fn count(&self) -> usize {
        self.n
    }

    /// Sample variance shrunk slightly towards a small constant so that a
    /// short window cannot collapse a coordinate.
    pub fn regularized(&self) -> Vec<f64> {
        let n = self.n as f64;
        self.m2
            .iter()
            .map(|s| {
                let var = s / (n - 1.0);
                (n / (n + 5.0)) * var + 1e-5 * (5.0 / (n + 5.0))
            })
            .collect()
    }
}

/// Warm-up phases: an initial step-size-only buffer, doubling metric
/// windows, and a final step-size-only buffer.
#[derive(Debug, Clone)]
pub struct WarmupSchedule {
    pub init_buffer: usize,
    pub term_buffer: usize,
    /// End (exclusive) of each metric window, in iteration counts.
    pub window_ends: Vec<usize>,
}

impl WarmupSchedule {
    pub fn new(warmup: usize) -> Self {
        let (mut init, mut term, base) = (75, 50, 25);
        if warmup < init + term + base {
            init = (0.15 * warmup as f64) as usize;
            term = (0.1 * warmup as f64) as usize;
        }
        let end = warmup.saturating_sub(term);
        let mut window_ends = Vec::new();
        if end > init + 1 {
            let mut start = init;
            let mut size = base.min(end - init);
            loop {
                let next = start + size;
                // stretch the last window if the one after would not fit
                if next + 2 * size > end {
                    window_ends.push(end);
                    break;
                }
                window_ends.push(next);
                start = next;
                size *= 2;
            }
        }
        Self { init_buffer: init, term_buffer: term, window_ends }
    }

    pub fn window_start(&self, index: usize) -> usize {
        if index == 0 {
            self.init_buffer
        } else {
            self.window_ends[index - 1]
        }
    }

    pub fn in_window(&self, iter: usize) -> Option<usize> {
        if iter < self.init_buffer {
            return None;
        }
        self.window_ends.iter().position(|&e| iter < e)
    }
}
