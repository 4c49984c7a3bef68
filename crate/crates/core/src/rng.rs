//! Counter-based random number streams.
//!
//! Every particle index owns an independent stream derived from
//! `(master_seed, index)`. Draws are a pure function of the stream key and a
//! `(purpose, step, draw)` counter, so output does not depend on thread count
//! or evaluation order, and streams never share state. The generator is
//! Philox-4x64 with 10 rounds; normal variates use Box-Muller (fixed
//! consumption per draw, no rejection, which keeps counters aligned).

const PHILOX_M0: u64 = 0xD2E7_470E_E14C_6C93;
const PHILOX_M1: u64 = 0xCA5A_8263_9512_1157;
const PHILOX_W0: u64 = 0x9E37_79B9_7F4A_7C15;
const PHILOX_W1: u64 = 0xBB67_AE85_84CA_A73B;

const TWO_POW_NEG53: f64 = 1.0 / (1u64 << 53) as f64;

/// Purpose tags keep draw families (noise, initial states, coefficients)
/// on disjoint counters within one stream.
mod purpose {
    pub const NOISE: u64 = 0;
    pub const INIT: u64 = 1;
    pub const COEFF: u64 = 2;
    pub const DERIVE: u64 = 3;
}

#[inline]
fn mul_hi_lo(a: u64, b: u64) -> (u64, u64) {
    let wide = (a as u128) * (b as u128);
    ((wide >> 64) as u64, wide as u64)
}

#[inline]
fn philox4x64(mut ctr: [u64; 4], mut key: [u64; 2]) -> [u64; 4] {
    for _ in 0..10 {
        let (hi0, lo0) = mul_hi_lo(PHILOX_M0, ctr[0]);
        let (hi1, lo1) = mul_hi_lo(PHILOX_M1, ctr[2]);
        ctr = [hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0];
        key[0] = key[0].wrapping_add(PHILOX_W0);
        key[1] = key[1].wrapping_add(PHILOX_W1);
    }
    ctr
}

/// `[0, 1)` from the high 53 bits.
#[inline]
fn to_unit(x: u64) -> f64 {
    (x >> 11) as f64 * TWO_POW_NEG53
}

/// `(0, 1]`; safe as the log argument in Box-Muller.
#[inline]
fn to_unit_open(x: u64) -> f64 {
    ((x >> 11) + 1) as f64 * TWO_POW_NEG53
}

#[inline]
fn box_muller(u: u64, v: u64) -> (f64, f64) {
    let r = (-2.0 * to_unit_open(u).ln()).sqrt();
    let theta = std::f64::consts::TAU * to_unit(v);
    (r * theta.cos(), r * theta.sin())
}

/// Deterministic plan assigning one independent stream per particle index.
#[derive(Debug, Clone, Copy)]
pub struct RngPlan {
    master_seed: u64,
}

impl RngPlan {
    pub fn new(master_seed: u64) -> Self {
        Self { master_seed }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    /// The stream for particle `m`. Streams with distinct `m` never share draws.
    pub fn stream(&self, m: u64) -> ParticleStream {
        ParticleStream {
            key: [self.master_seed, m],
        }
    }

    /// Deterministically derives an independent sub-plan (for sweep cells,
    /// reference runs, and other auxiliary sampling).
    pub fn derive(&self, tag: u64) -> RngPlan {
        let words = philox4x64([tag, 0, purpose::DERIVE, 0], [self.master_seed, 0]);
        RngPlan::new(words[0])
    }
}

/// Stateless per-particle stream; each draw is addressed by counters.
#[derive(Debug, Clone, Copy)]
pub struct ParticleStream {
    key: [u64; 2],
}

impl ParticleStream {
    #[inline]
    fn block(&self, purpose: u64, hi: u64, lo: u64) -> [u64; 4] {
        philox4x64([lo, hi, purpose, 0], self.key)
    }

    /// Fills `out` with the Brownian increment for one time step: i.i.d.
    /// Normal(0, dt) entries, a pure function of `(stream, step)`.
    pub fn brownian_increment(&self, step: u64, dt: f64, out: &mut [f64]) {
        let sqrt_dt = dt.sqrt();
        let mut i = 0;
        let mut blk = 0u64;
        while i < out.len() {
            let words = self.block(purpose::NOISE, step, blk);
            let (z0, z1) = box_muller(words[0], words[1]);
            let (z2, z3) = box_muller(words[2], words[3]);
            for z in [z0, z1, z2, z3] {
                if i >= out.len() {
                    break;
                }
                out[i] = z * sqrt_dt;
                i += 1;
            }
            blk += 1;
        }
    }

    /// Sequential draws for sampling the initial state.
    pub fn init_draws(&self) -> DrawCursor {
        DrawCursor::new(*self, purpose::INIT)
    }

    /// Sequential draws for per-trajectory random coefficients.
    pub fn coeff_draws(&self) -> DrawCursor {
        DrawCursor::new(*self, purpose::COEFF)
    }
}

/// Sequential view over one purpose lane of a stream.
pub struct DrawCursor {
    stream: ParticleStream,
    purpose: u64,
    next_block: u64,
    buf: [u64; 4],
    pos: usize,
    cached_normal: Option<f64>,
}

impl DrawCursor {
    fn new(stream: ParticleStream, purpose: u64) -> Self {
        Self {
            stream,
            purpose,
            next_block: 0,
            buf: [0; 4],
            pos: 4,
            cached_normal: None,
        }
    }

    #[inline]
    fn next_u64(&mut self) -> u64 {
        if self.pos == 4 {
            self.buf = self.stream.block(self.purpose, 0, self.next_block);
            self.next_block += 1;
            self.pos = 0;
        }
        let w = self.buf[self.pos];
        self.pos += 1;
        w
    }

    /// Uniform in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        to_unit(self.next_u64())
    }

    /// Uniform in `[a, b)`.
    pub fn uniform_in(&mut self, a: f64, b: f64) -> f64 {
        a + (b - a) * self.uniform()
    }

    /// Standard normal (Box-Muller; the paired variate is cached).
    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.cached_normal.take() {
            return z;
        }
        let (u, v) = (self.next_u64(), self.next_u64());
        let (z0, z1) = box_muller(u, v);
        self.cached_normal = Some(z1);
        z0
    }

    /// Fair coin.
    pub fn bernoulli(&mut self) -> bool {
        self.uniform() < 0.5
    }
}
