//! Small numerical building blocks: an extended-precision accumulator and an
//! adaptive Gauss-Kronrod integrator.

/// Double-double accumulator.
///
/// Sums of the same multiset of terms agree to far below one ulp of the
/// rounded result regardless of summation order, and sums of integers below
/// 2^106 are exact. Permutation statistics rely on this: a resample whose
/// pair distances are a rearrangement of the observed ones must reproduce the
/// observed statistic bit for bit.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DoubleDouble {
    hi: f64,
    lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl DoubleDouble {
    pub const ZERO: DoubleDouble = DoubleDouble { hi: 0.0, lo: 0.0 };

    pub fn from_f64(x: f64) -> Self {
        DoubleDouble { hi: x, lo: 0.0 }
    }

    /// Exact conversion of integers below 2^106.
    pub fn from_u128(x: u128) -> Self {
        let hi = x as f64;
        // `hi` rounds to nearest, so the residual fits in an i128 and is exactly
        // representable once below 2^53.
        let lo = (x as i128 - hi as i128) as f64;
        let (hi, lo) = two_sum(hi, lo);
        DoubleDouble { hi, lo }
    }

    #[inline]
    pub fn add_f64(&mut self, x: f64) {
        let (s, e) = two_sum(self.hi, x);
        let lo = self.lo + e;
        let (hi, lo) = two_sum(s, lo);
        self.hi = hi;
        self.lo = lo;
    }

    pub fn add(self, other: DoubleDouble) -> DoubleDouble {
        let (s, e) = two_sum(self.hi, other.hi);
        let lo = e + self.lo + other.lo;
        let (hi, lo) = two_sum(s, lo);
        DoubleDouble { hi, lo }
    }

    pub fn neg(self) -> DoubleDouble {
        DoubleDouble {
            hi: -self.hi,
            lo: -self.lo,
        }
    }

    pub fn mul(self, other: DoubleDouble) -> DoubleDouble {
        let (p, e) = two_prod(self.hi, other.hi);
        let e = e + self.hi * other.lo + self.lo * other.hi;
        let (hi, lo) = two_sum(p, e);
        DoubleDouble { hi, lo }
    }

    pub fn div_f64(self, d: f64) -> DoubleDouble {
        let q1 = self.hi / d;
        let (p, e) = two_prod(q1, d);
        let r = ((self.hi - p) - e + self.lo) / d;
        let (hi, lo) = two_sum(q1, r);
        DoubleDouble { hi, lo }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }
}

const GK_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const G_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Kronrod estimate and error bound on `[a, b]`. The bound never drops below
/// the rounding noise of the rule itself.
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = GK_WEIGHTS[7] * fc;
    let mut gauss = G_WEIGHTS[3] * fc;
    let mut abs = GK_WEIGHTS[7] * fc.abs();
    for i in 0..7 {
        let dx = h * GK_NODES[i];
        let (l, r) = (f(c - dx), f(c + dx));
        kronrod += GK_WEIGHTS[i] * (l + r);
        abs += GK_WEIGHTS[i] * (l.abs() + r.abs());
        if i % 2 == 1 {
            gauss += G_WEIGHTS[i / 2] * (l + r);
        }
    }
    let err = ((kronrod - gauss) * h)
        .abs()
        .max(50.0 * f64::EPSILON * abs * h.abs());
    (kronrod * h, err)
}

const MAX_PIECES: usize = 2000;

struct Piece {
    lo: f64,
    hi: f64,
    val: f64,
    err: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.err.total_cmp(&other.err).is_eq()
    }
}

impl Eq for Piece {}

impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Piece {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// Globally adaptive Gauss-Kronrod (7/15) quadrature of `f` over `[a, b]`:
/// the piece with the largest error estimate is bisected until the summed
/// estimate falls below `tol` or below rounding level.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let (val, err) = gk15(&f, a, b);
    let mut heap = std::collections::BinaryHeap::from([Piece {
        lo: a,
        hi: b,
        val,
        err,
    }]);
    let (mut total, mut total_err) = (val, err);
    while total_err > tol.max(1e-15 * total.abs()) && heap.len() < MAX_PIECES {
        let worst = heap.pop().unwrap();
        let mid = 0.5 * (worst.lo + worst.hi);
        if mid <= worst.lo || mid >= worst.hi {
            heap.push(worst);
            break;
        }
        let (lv, le) = gk15(&f, worst.lo, mid);
        let (rv, re) = gk15(&f, mid, worst.hi);
        total += lv + rv - worst.val;
        total_err += le + re - worst.err;
        heap.push(Piece {
            lo: worst.lo,
            hi: mid,
            val: lv,
            err: le,
        });
        heap.push(Piece {
            lo: mid,
            hi: worst.hi,
            val: rv,
            err: re,
        });
    }
    heap.iter().map(|p| p.val).sum()
}

/// Bits of a seed-mixing function (splitmix64 finalizer).
pub fn mix_seed(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
