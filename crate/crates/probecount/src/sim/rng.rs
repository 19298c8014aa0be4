//! Fixed, named random generator for scenario synthesis: xoshiro256**,
//! seeded through SplitMix64.
//!
//! Scenario bytes must be identical for a given seed across runs, platforms
//! and dependency upgrades, so the generator is pinned here instead of
//! delegating to a library whose stream might change.

#[derive(Debug, Clone)]
pub struct Xoshiro256StarStar {
    state: [u64; 4],
}

impl Xoshiro256StarStar {
    pub fn seed_from(seed: u64) -> Self {
        // SplitMix64 expansion of the 64-bit seed into the 256-bit state.
        let mut sm = seed;
        let mut next = || {
            sm = sm.wrapping_add(0x9e37_79b9_7f4a_7c15);
            let mut z = sm;
            z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
            z ^ (z >> 31)
        };
        Xoshiro256StarStar {
            state: [next(), next(), next(), next()],
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        let result = self.state[1]
            .wrapping_mul(5)
            .rotate_left(7)
            .wrapping_mul(9);
        let t = self.state[1] << 17;
        self.state[2] ^= self.state[0];
        self.state[3] ^= self.state[1];
        self.state[1] ^= self.state[2];
        self.state[0] ^= self.state[3];
        self.state[2] ^= t;
        self.state[3] = self.state[3].rotate_left(45);
        result
    }

    /// Uniform in [0, 1) with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in [lo, hi], inclusive both ends.
    pub fn uniform_i64(&mut self, lo: i64, hi: i64) -> i64 {
        debug_assert!(lo <= hi);
        let span = (hi - lo) as u128 + 1;
        // Fixed-point multiply keeps the draw deterministic and unbiased
        // enough for synthetic data (span is tiny next to 2^64).
        let draw = (self.next_u64() as u128 * span) >> 64;
        lo + draw as i64
    }

    pub fn uniform_usize(&mut self, lo: usize, hi: usize) -> usize {
        self.uniform_i64(lo as i64, hi as i64) as usize
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.next_f64() < p
    }

    /// Exponential with the given mean.
    pub fn exponential(&mut self, mean: f64) -> f64 {
        debug_assert!(mean > 0.0);
        -mean * (1.0 - self.next_f64()).ln()
    }

    /// Poisson draw (Knuth's product method; large lambdas split into
    /// halves, since a Poisson sum of independent Poissons is Poisson).
    pub fn poisson(&mut self, lambda: f64) -> u64 {
        debug_assert!(lambda >= 0.0);
        if lambda == 0.0 {
            return 0;
        }
        if lambda > 30.0 {
            return self.poisson(lambda / 2.0) + self.poisson(lambda - lambda / 2.0);
        }
        let limit = (-lambda).exp();
        let mut product = self.next_f64();
        let mut count = 0u64;
        while product > limit {
            count += 1;
            product *= self.next_f64();
        }
        count
    }

    pub fn mac_address(&mut self, locally_administered: bool) -> [u8; 6] {
        let bits = self.next_u64().to_le_bytes();
        let mut mac = [bits[0], bits[1], bits[2], bits[3], bits[4], bits[5]];
        mac[0] &= !0x01; // never multicast
        if locally_administered {
            mac[0] |= 0x02;
        } else {
            mac[0] &= !0x02;
        }
        mac
    }
}
