//! Small numeric helpers shared across modules.

/// Bits per limb of the accumulator; limbs are stored in `i64` so signed
/// contributions can pile up without carrying.
const LIMB_BITS: u32 = 32;
const LIMB_MASK: i64 = (1 << LIMB_BITS) - 1;
/// Every finite double is an integer multiple of 2^-1074 below 2^1024, i.e.
/// fits in 2098 bits; two spare limbs absorb carries.
const LIMBS: usize = 68;
/// Each add moves less than 2^32 into a limb, so 2^30 adds are always safe
/// before carries must be propagated.
const CARRY_EVERY: u32 = 1 << 30;

/// Fixed-point accumulator over the whole double range (a Kulisch-style
/// "superaccumulator"). Addition is exact, so the final rounded value does
/// not depend on the order of the inputs.
#[derive(Clone)]
pub struct ExactAccumulator {
    limbs: [i64; LIMBS],
    pending: u32,
    special: f64,
}

impl Default for ExactAccumulator {
    fn default() -> Self {
        Self {
            limbs: [0; LIMBS],
            pending: 0,
            special: 0.0,
        }
    }
}

impl ExactAccumulator {
    #[inline]
    pub fn add(&mut self, x: f64) {
        let bits = x.to_bits();
        let biased = ((bits >> 52) & 0x7ff) as u32;
        if biased == 0x7ff {
            self.special += x;
            return;
        }
        let frac = bits & ((1u64 << 52) - 1);
        // x = mant * 2^(pos - 1074)
        let (mant, pos) = if biased == 0 {
            (frac, 0)
        } else {
            (frac | (1u64 << 52), biased - 1)
        };
        if mant == 0 {
            return;
        }
        let limb = (pos / LIMB_BITS) as usize;
        let wide = (mant as u128) << (pos % LIMB_BITS);
        let parts = [
            (wide as i64) & LIMB_MASK,
            ((wide >> 32) as i64) & LIMB_MASK,
            (wide >> 64) as i64,
        ];
        if bits >> 63 == 1 {
            for (l, p) in self.limbs[limb..limb + 3].iter_mut().zip(parts) {
                *l -= p;
            }
        } else {
            for (l, p) in self.limbs[limb..limb + 3].iter_mut().zip(parts) {
                *l += p;
            }
        }
        self.pending += 1;
        if self.pending == CARRY_EVERY {
            self.carry();
        }
    }

    /// Leave every limb but the last in `[0, 2^32)`; the last keeps the sign.
    fn carry(&mut self) {
        let mut c = 0i64;
        for l in self.limbs.iter_mut() {
            let v = *l + c;
            c = v >> LIMB_BITS;
            *l = v & LIMB_MASK;
        }
        self.limbs[LIMBS - 1] += c << LIMB_BITS;
        self.pending = 0;
    }

    /// The exact sum rounded to nearest, ties to even. Non-finite inputs
    /// propagate as a non-finite result; an exact sum beyond the double
    /// range gives an infinity.
    pub fn sum(&self) -> f64 {
        if self.special != 0.0 || self.special.is_nan() {
            return self.special;
        }
        let mut acc = self.clone();
        acc.carry();
        let negative = acc.limbs[LIMBS - 1] < 0;
        if negative {
            for l in acc.limbs.iter_mut() {
                *l = -*l;
            }
            acc.carry();
        }
        let Some(top) = acc.limbs.iter().rposition(|&l| l != 0) else {
            return 0.0;
        };
        let limbs = &acc.limbs;
        // index of the highest set bit of the integer N (value = N * 2^-1074)
        let high = top as u32 * LIMB_BITS + (63 - limbs[top].leading_zeros());
        let magnitude = if high < 53 {
            // exact: N < 2^53 and N * 2^-1074 is representable
            let n = limbs[0] as u64 | ((limbs[1] as u64) << 32);
            n as f64 * f64::from_bits(1)
        } else {
            let shift = high - 52;
            let window = |from: u32| -> u128 {
                let li = (from / LIMB_BITS) as usize;
                let mut w = 0u128;
                for (k, &l) in limbs.iter().enumerate().skip(li).take(4) {
                    w += (l as u128) << (32 * (k - li));
                }
                w >> (from % LIMB_BITS)
            };
            let mut mant = (window(shift) & ((1u128 << 53) - 1)) as u64;
            let half = window(shift - 1) & 1 == 1;
            let sticky = {
                let below = shift - 1;
                let li = (below / LIMB_BITS) as usize;
                limbs[..li].iter().any(|&l| l != 0) || (limbs[li] & ((1i64 << (below % LIMB_BITS)) - 1)) != 0
            };
            let mut shift = shift as i32;
            if half && (sticky || mant & 1 == 1) {
                mant += 1;
                if mant == 1 << 53 {
                    mant >>= 1;
                    shift += 1;
                }
            }
            let exp = shift - 1074;
            if exp > 1023 - 52 {
                f64::INFINITY
            } else {
                let scale = if exp >= -1022 {
                    f64::from_bits(((exp + 1023) as u64) << 52)
                } else {
                    f64::from_bits(1u64 << (exp + 1074))
                };
                mant as f64 * scale
            }
        };
        if negative {
            -magnitude
        } else {
            magnitude
        }
    }
}

/// Correctly rounded sum of `values`; the result does not depend on their
/// order. Non-finite inputs propagate as a non-finite result.
pub fn exact_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut acc = ExactAccumulator::default();
    for v in values {
        acc.add(v);
    }
    acc.sum()
}

/// `x^(1/p)`, using `sqrt` for `p = 2`.
#[inline]
pub fn root(x: f64, p: f64) -> f64 {
    if p == 2.0 {
        x.sqrt()
    } else if p == 1.0 {
        x
    } else {
        x.powf(1.0 / p)
    }
}
