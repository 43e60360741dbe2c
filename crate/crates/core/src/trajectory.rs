use nalgebra::Vector2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySample {
    pub t: f64,
    pub q: Vector2<f64>,
    pub u: f64,
    pub r: f64,
    pub purity: f64,
}

impl TrajectorySample {
    pub fn new(t: f64, q: Vector2<f64>, u: f64) -> Self {
        let r = q.norm();
        Self {
            t,
            q,
            u,
            r,
            purity: 0.5 * (1.0 + r * r),
        }
    }
}

/// Time-ordered planar samples.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<TrajectorySample>,
}

impl Trajectory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, sample: TrajectorySample) {
        self.samples.push(sample);
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn first(&self) -> Option<&TrajectorySample> {
        self.samples.first()
    }

    pub fn last(&self) -> Option<&TrajectorySample> {
        self.samples.last()
    }

    pub fn duration(&self) -> f64 {
        match (self.first(), self.last()) {
            (Some(a), Some(b)) => b.t - a.t,
            _ => 0.0,
        }
    }

    /// `t` strictly increasing and `r <= 1 + 1e-9`.
    pub fn is_valid(&self) -> bool {
        self.samples.windows(2).all(|w| w[1].t > w[0].t)
            && self.samples.iter().all(|s| s.r <= 1.0 + 1e-9)
    }

    pub fn max_radius(&self) -> f64 {
        self.samples.iter().map(|s| s.r).fold(0.0, f64::max)
    }
}
