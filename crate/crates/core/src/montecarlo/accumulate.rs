/// Streaming mean and variance of `exp(scale · (t - shift))` with a
/// running shift equal to the largest `t` seen, so that exponents in the
/// hundreds neither overflow nor lose the bulk of the sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct LogMean {
    scale: f64,
    shift: f64,
    count: u64,
    mean: f64,
    m2: f64,
}

impl LogMean {
    pub fn new(scale: f64) -> Self {
        Self { scale, shift: f64::NEG_INFINITY, count: 0, mean: 0.0, m2: 0.0 }
    }

    fn rescale(&mut self, shift: f64) {
        if self.count > 0 && shift > self.shift {
            let f = (-self.scale * (shift - self.shift)).exp();
            self.mean *= f;
            self.m2 *= f * f;
        }
        if shift > self.shift {
            self.shift = shift;
        }
    }

    pub fn push(&mut self, t: f64) {
        self.rescale(t);
        let x = (self.scale * (t - self.shift)).exp();
        self.count += 1;
        let d = x - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (x - self.mean);
    }

    /// Chan's parallel combination; `self` is taken first for determinism.
    pub fn merge(mut self, mut other: Self) -> Self {
        if other.count == 0 {
            return self;
        }
        if self.count == 0 {
            return other;
        }
        let shift = self.shift.max(other.shift);
        self.rescale(shift);
        other.rescale(shift);
        let n = (self.count + other.count) as f64;
        let delta = other.mean - self.mean;
        let na = self.count as f64;
        let nb = other.count as f64;
        Self {
            scale: self.scale,
            shift,
            count: self.count + other.count,
            mean: self.mean + delta * nb / n,
            m2: self.m2 + other.m2 + delta * delta * na * nb / n,
        }
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    /// `(1/scale) · log(mean of exp(scale·t))`.
    pub fn log_mean(&self) -> f64 {
        self.shift + self.mean.ln() / self.scale
    }

    /// Delta-method standard error of [`LogMean::log_mean`].
    pub fn log_std_error(&self) -> f64 {
        if self.count < 2 || self.m2 == 0.0 {
            return 0.0;
        }
        self.mean_std_error() / self.mean / self.scale
    }

    fn mean_std_error(&self) -> f64 {
        let n = self.count as f64;
        (self.m2.max(0.0) / (n - 1.0) / n).sqrt()
    }

    /// Mean of `exp(scale·t)` on the natural scale, with its standard error.
    pub fn natural(&self) -> (f64, f64) {
        let f = (self.scale * self.shift).exp();
        let se = if self.count < 2 { 0.0 } else { self.mean_std_error() };
        (self.mean * f, se * f)
    }
}
