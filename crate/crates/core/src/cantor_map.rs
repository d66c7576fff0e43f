//! Middle-thirds Cantor set, the bump function `g` vanishing exactly on it,
//! its primitive `f`, the Cantor function `C`, the shift `h = id + θC` and the
//! maps `f_m = f ∘ h⁻¹`.
//!
//! Points of `[0, 1]` are classified by exact ternary expansion of the `f64`
//! input, so the gap generation, the relative position inside a gap and `C`
//! are all computed without cancellation.

use alloc::format;
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{erfc, exp, ln, sqrt, LogSigned, E, LN_2, PI};
use crate::monotone::{bisect_inverse, MonotoneMap, INVERSE_TOL};
use crate::quadrature::GaussLegendre;

/// Number of ternary digits examined before a point is declared to lie in K.
pub const TERNARY_DEPTH: u32 = 53;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RemovedInterval {
    pub generation: u32,
    /// 1-based, in increasing order of position.
    pub index: u64,
    pub center: f64,
    pub half_width: f64,
}

impl RemovedInterval {
    pub fn contains(&self, x: f64) -> bool {
        (x - self.center).abs() < self.half_width
    }

    pub fn left(&self) -> f64 {
        self.center - self.half_width
    }

    pub fn right(&self) -> f64 {
        self.center + self.half_width
    }
}

/// `1 / (2·3^k)`
pub fn half_width(generation: u32) -> f64 {
    0.5 / pow3(generation)
}

fn pow3(k: u32) -> f64 {
    let mut p = 1.0;
    for _ in 0..k {
        p *= 3.0;
    }
    p
}

/// The gap of generation `k` with index `index` (1-based).
pub fn removed_interval(generation: u32, index: u64) -> RemovedInterval {
    let k = generation;
    // Left end of the surviving cell of generation k-1, in units of 3^{-(k-1)}.
    let mut a: u128 = 0;
    for i in 0..k.saturating_sub(1) {
        let bit = (index - 1) >> (k - 2 - i) & 1;
        a = 3 * a + 2 * bit as u128;
    }
    let scale = pow3(k - 1);
    RemovedInterval {
        generation: k,
        index,
        center: (2.0 * a as f64 + 1.0) / (2.0 * scale),
        half_width: half_width(k),
    }
}

/// All gaps of generations `1..=k_max` in increasing `(k, j)` order.
pub fn removed_intervals(k_max: u32) -> Result<Vec<RemovedInterval>> {
    if k_max == 0 || k_max > 30 {
        return Err(Error::param("k_max", format!("must lie in 1..=30, got {k_max}")));
    }
    let mut out = Vec::with_capacity((1usize << k_max) - 1);
    for k in 1..=k_max {
        for j in 1..=(1u64 << (k - 1)) {
            out.push(removed_interval(k, j));
        }
    }
    Ok(out)
}

/// Where a point of `[0, 1]` sits relative to the Cantor set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Location {
    /// No ternary digit 1 within the examined depth (or an exact gap endpoint).
    Cantor { cantor_value: f64, bits: u64, depth: u32 },
    Gap {
        generation: u32,
        /// Digits before the first 1, halved: `index = bits + 1`.
        bits: u64,
        /// Position inside the gap in `(0, 1)`, with `1 − rho` kept separately.
        rho: f64,
        one_minus_rho: f64,
        cantor_value: f64,
    },
}

impl Location {
    pub fn cantor_value(&self) -> f64 {
        match *self {
            Location::Cantor { cantor_value, .. } | Location::Gap { cantor_value, .. } => cantor_value,
        }
    }

    /// Relative coordinate `u = (x − y)/r ∈ (−1, 1)` inside a gap.
    pub fn gap_coordinate(&self) -> Option<(u32, f64)> {
        match *self {
            Location::Gap { generation, rho, one_minus_rho, .. } => {
                let u = if rho < 0.5 { 2.0 * rho - 1.0 } else { 1.0 - 2.0 * one_minus_rho };
                Some((generation, u))
            }
            Location::Cantor { .. } => None,
        }
    }

    /// `1 − u²`, computed as `4ρ(1−ρ)`.
    pub fn one_minus_u2(&self) -> Option<f64> {
        match *self {
            Location::Gap { rho, one_minus_rho, .. } => Some(4.0 * rho * one_minus_rho),
            Location::Cantor { .. } => None,
        }
    }
}

/// Classify `x ∈ [0, 1]`. Inputs outside are clamped; the flag reports it.
pub fn locate(x: f64) -> (Location, bool) {
    let clamped = !(0.0..=1.0).contains(&x);
    let x = if x.is_nan() { 0.0 } else { x.clamp(0.0, 1.0) };
    if x == 0.0 {
        return (Location::Cantor { cantor_value: 0.0, bits: 0, depth: 0 }, clamped);
    }
    if x == 1.0 {
        return (Location::Cantor { cantor_value: 1.0, bits: u64::MAX >> (64 - TERNARY_DEPTH), depth: TERNARY_DEPTH }, clamped);
    }
    let (mut m, mut e) = mantissa_exponent(x);
    let tz = m.trailing_zeros().min(e);
    m >>= tz;
    e -= tz;
    let loc = if e <= 125 { locate_u128(m as u128, e) } else { locate_big(m, e) };
    (loc, clamped)
}

/// `x = m · 2^{−e}` for `x ∈ (0, 1)`.
fn mantissa_exponent(x: f64) -> (u64, u32) {
    let bits = x.to_bits();
    let exp_field = ((bits >> 52) & 0x7ff) as u32;
    let frac = bits & ((1u64 << 52) - 1);
    if exp_field == 0 {
        (frac, 1074)
    } else {
        (frac | (1u64 << 52), 1075 - exp_field)
    }
}

struct Walk {
    bits: u64,
    value: f64,
    weight: f64,
}

impl Walk {
    fn new() -> Self {
        Walk { bits: 0, value: 0.0, weight: 0.5 }
    }

    /// Consume digit 0 or 2.
    fn push(&mut self, digit: u32) {
        self.bits <<= 1;
        if digit == 2 {
            self.bits |= 1;
            self.value += self.weight;
        }
        self.weight *= 0.5;
    }

    fn gap(self, k: u32, rho: f64, one_minus_rho: f64) -> Location {
        Location::Gap { generation: k, bits: self.bits, rho, one_minus_rho, cantor_value: self.value + self.weight }
    }

    fn cantor_endpoint(self, k: u32) -> Location {
        // x = 0.d₁…d_{k−1}1 exactly: the left end of a gap, which belongs to K.
        Location::Cantor { cantor_value: self.value + self.weight, bits: self.bits, depth: k }
    }

    fn cantor(self, depth: u32) -> Location {
        Location::Cantor { cantor_value: self.value, bits: self.bits, depth }
    }
}

fn locate_u128(m: u128, e: u32) -> Location {
    let mask: u128 = if e == 0 { 0 } else { (1u128 << e) - 1 };
    let scale = exp2_neg(e);
    let mut r = m;
    let mut walk = Walk::new();
    for k in 1..=TERNARY_DEPTH {
        r *= 3;
        let d = (r >> e) as u32;
        r &= mask;
        if d == 1 {
            if r == 0 {
                return walk.cantor_endpoint(k);
            }
            let rest = (mask - r) + 1;
            return walk.gap(k, r as f64 * scale, rest as f64 * scale);
        }
        walk.push(d);
        if r == 0 {
            return walk.cantor(k);
        }
    }
    walk.cantor(TERNARY_DEPTH)
}

/// Same walk with a little-endian multi-limb remainder, for tiny inputs.
fn locate_big(m: u64, e: u32) -> Location {
    let limbs = (e as usize + 2).div_ceil(64);
    let mut r = alloc::vec![0u64; limbs];
    r[0] = m;
    let top_limb = (e / 64) as usize;
    let top_shift = e % 64;
    let mut walk = Walk::new();
    for k in 1..=TERNARY_DEPTH {
        let mut carry: u128 = 0;
        for limb in r.iter_mut() {
            let v = *limb as u128 * 3 + carry;
            *limb = v as u64;
            carry = v >> 64;
        }
        // Bits e and e+1 hold the digit; they may straddle a limb boundary.
        let lo = r[top_limb] >> top_shift;
        let hi = if top_shift > 62 && top_limb + 1 < limbs { r[top_limb + 1] << (64 - top_shift) } else { 0 };
        let d = ((lo | hi) & 3) as u32;
        r[top_limb] &= if top_shift == 0 { 0 } else { (1u64 << top_shift) - 1 };
        for limb in r.iter_mut().skip(top_limb + 1) {
            *limb = 0;
        }
        let zero = r.iter().all(|&l| l == 0);
        if d == 1 {
            if zero {
                return walk.cantor_endpoint(k);
            }
            let rho = big_fraction(&r, e);
            return walk.gap(k, rho, 1.0 - rho);
        }
        walk.push(d);
        if zero {
            return walk.cantor(k);
        }
    }
    walk.cantor(TERNARY_DEPTH)
}

fn big_fraction(r: &[u64], e: u32) -> f64 {
    let mut v = 0.0;
    for (i, &limb) in r.iter().enumerate() {
        if limb != 0 {
            v += limb as f64 * exp2_neg(e).max(f64::MIN_POSITIVE) * exp2_pos(64 * i as u32);
        }
    }
    v.min(1.0)
}

fn exp2_neg(e: u32) -> f64 {
    let mut v = 1.0;
    let mut left = e;
    while left > 0 {
        let s = left.min(60);
        v /= (1u64 << s) as f64;
        left -= s;
    }
    v
}

fn exp2_pos(e: u32) -> f64 {
    let mut v = 1.0;
    let mut left = e;
    while left > 0 {
        let s = left.min(60);
        v *= (1u64 << s) as f64;
        left -= s;
    }
    v
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CantorValue {
    pub value: f64,
    /// The input lay outside `[0, 1]` and was clamped.
    pub clamped: bool,
}

/// The Cantor function (devil's staircase).
pub fn cantor_function(x: f64) -> CantorValue {
    let (loc, clamped) = locate(x);
    CantorValue { value: loc.cantor_value(), clamped }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BumpProfile {
    /// `exp(−exp(exp(1/(r_k² − (x−y)²))))` on each gap; underflows everywhere in `f64`.
    Exact,
    /// `a^k exp(1 − 1/(1−u²))` on generation-`k` gaps, `u = (x−y)/r_k`.
    Demo { peak_decay: f64 },
}

impl BumpProfile {
    pub fn demo(peak_decay: f64) -> Self {
        BumpProfile::Demo { peak_decay }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            BumpProfile::Exact => Ok(()),
            BumpProfile::Demo { peak_decay } if peak_decay > 0.0 && peak_decay < 1.0 => Ok(()),
            BumpProfile::Demo { peak_decay } => {
                Err(Error::param("peak_decay", format!("must lie in (0, 1), got {peak_decay}")))
            }
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, BumpProfile::Exact)
    }
}

/// Which piece of the line a point falls in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Piece {
    /// `x < 0`, carrying `t = x`.
    LeftTail(f64),
    /// `x > 1`, carrying `t = x − 1`.
    RightTail(f64),
    Inner(Location),
}

pub fn piece(x: f64) -> Piece {
    if x < 0.0 {
        Piece::LeftTail(x)
    } else if x > 1.0 {
        Piece::RightTail(x - 1.0)
    } else {
        Piece::Inner(locate(x).0)
    }
}

/// The function `g`: a bump on every removed gap plus, optionally, tails on
/// `(−∞, 0)` and `(1, ∞)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bump {
    pub profile: BumpProfile,
    pub tails: bool,
}

impl Bump {
    pub fn new(profile: BumpProfile, tails: bool) -> Result<Self> {
        profile.validate()?;
        Ok(Bump { profile, tails })
    }

    /// `log g(x)`; `−∞` on K and wherever `g` underflows.
    pub fn log_value(&self, x: f64) -> f64 {
        match piece(x) {
            Piece::Inner(loc) => self.log_value_inner(&loc),
            Piece::LeftTail(t) | Piece::RightTail(t) => self.log_tail(t),
        }
    }

    fn log_tail(&self, t: f64) -> f64 {
        if !self.tails {
            return f64::NEG_INFINITY;
        }
        let v = 1.0 / (t * t);
        match self.profile {
            BumpProfile::Exact => -exp(exp(v)),
            BumpProfile::Demo { peak_decay } => ln(peak_decay) - v,
        }
    }

    pub fn log_value_inner(&self, loc: &Location) -> f64 {
        let Some(q) = loc.one_minus_u2() else {
            return f64::NEG_INFINITY;
        };
        let Location::Gap { generation: k, .. } = *loc else { unreachable!() };
        match self.profile {
            BumpProfile::Exact => {
                let r = half_width(k);
                let w = 1.0 / (r * r * q);
                -exp(exp(w))
            }
            BumpProfile::Demo { peak_decay } => k as f64 * ln(peak_decay) + 1.0 - 1.0 / q,
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        exp(self.log_value(x))
    }

    /// `g′/g` in sign/log form; zero on K, at gap centers and where `g ≡ 0`.
    pub fn log_ratio(&self, x: f64) -> LogSigned {
        match piece(x) {
            Piece::Inner(loc) => self.log_ratio_inner(&loc),
            Piece::LeftTail(t) | Piece::RightTail(t) => self.log_ratio_tail(t),
        }
    }

    pub fn log_ratio_tail(&self, t: f64) -> LogSigned {
        if !self.tails {
            return LogSigned::ZERO;
        }
        let sign = if t > 0.0 { 1 } else { -1 };
        let v = 1.0 / (t * t);
        let log_cubic = LN_2 - 3.0 * ln(t.abs());
        match self.profile {
            BumpProfile::Exact => LogSigned::new(sign, exp(v) + v + log_cubic),
            BumpProfile::Demo { .. } => LogSigned::new(sign, log_cubic),
        }
    }

    pub fn log_ratio_inner(&self, loc: &Location) -> LogSigned {
        let Some((k, u)) = loc.gap_coordinate() else {
            return LogSigned::ZERO;
        };
        if u == 0.0 {
            return LogSigned::ZERO;
        }
        let q = loc.one_minus_u2().unwrap();
        let r = half_width(k);
        let sign = if u > 0.0 { -1 } else { 1 };
        match self.profile {
            BumpProfile::Exact => {
                let w = 1.0 / (r * r * q);
                // |d| w² with d = u r
                LogSigned::new(sign, exp(w) + w + ln(2.0 * u.abs() * r * w * w))
            }
            BumpProfile::Demo { .. } => LogSigned::new(sign, ln(2.0 * u.abs() / r) - 2.0 * ln(q)),
        }
    }

    /// `g′(x)`; only meaningful where it is representable (Demo profile).
    pub fn derivative(&self, x: f64) -> f64 {
        match piece(x) {
            Piece::Inner(loc) => {
                let lr = self.log_ratio_inner(&loc);
                if lr.is_zero() {
                    return 0.0;
                }
                lr.sign as f64 * exp(self.log_value_inner(&loc) + lr.log_magnitude)
            }
            Piece::LeftTail(t) | Piece::RightTail(t) => {
                let lr = self.log_ratio_tail(t);
                if lr.is_zero() {
                    return 0.0;
                }
                lr.sign as f64 * exp(self.log_tail(t) + lr.log_magnitude)
            }
        }
    }
}

/// `log g(x)` for the given profile, with or without the outer tails.
pub fn g_log(x: f64, profile: BumpProfile, tails: bool) -> f64 {
    Bump { profile, tails }.log_value(x)
}

/// `∫_{−1}^{u} exp(1 − 1/(1−v²)) dv`, tabulated.
#[derive(Debug)]
struct BumpCumulative {
    rule: GaussLegendre,
    table: Vec<f64>,
    du: f64,
}

const BUMP_PANELS: usize = 512;

fn unit_bump(v: f64) -> f64 {
    let q = (1.0 - v) * (1.0 + v);
    if q <= 0.0 {
        0.0
    } else {
        exp(1.0 - 1.0 / q)
    }
}

impl BumpCumulative {
    fn new() -> Self {
        let rule = GaussLegendre::new(10);
        let du = 2.0 / BUMP_PANELS as f64;
        let mut table = Vec::with_capacity(BUMP_PANELS + 1);
        let mut acc = 0.0;
        table.push(0.0);
        for i in 0..BUMP_PANELS {
            let a = -1.0 + i as f64 * du;
            acc += rule.integrate(unit_bump, a, a + du);
            table.push(acc);
        }
        BumpCumulative { rule, table, du }
    }

    fn total(&self) -> f64 {
        self.table[BUMP_PANELS]
    }

    fn at(&self, u: f64) -> f64 {
        if u <= -1.0 {
            return 0.0;
        }
        if u >= 1.0 {
            return self.total();
        }
        let i = (((u + 1.0) / self.du) as usize).min(BUMP_PANELS - 1);
        let a = -1.0 + i as f64 * self.du;
        self.table[i] + self.rule.integrate(unit_bump, a, u)
    }
}

/// `∫_0^X exp(−exp(exp(1/s²))) ds`, tabulated on panels.
#[derive(Debug)]
struct ExactTail {
    rule: GaussLegendre,
    breaks: Vec<f64>,
    cumulative: Vec<f64>,
}

fn exact_tail_integrand(s: f64) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    exp(-exp(exp(1.0 / (s * s))))
}

impl ExactTail {
    fn new() -> Self {
        let rule = GaussLegendre::new(16);
        let mut breaks = Vec::new();
        // Below 0.3 the integrand is far beneath the smallest subnormal.
        breaks.push(0.0);
        let mut s: f64 = 0.3;
        while s < 8.0 {
            breaks.push(s);
            s += 1.0 / 64.0;
        }
        while s < 1e9 {
            breaks.push(s);
            s *= 1.125;
        }
        breaks.push(s);
        let mut cumulative = Vec::with_capacity(breaks.len());
        let mut acc = 0.0;
        cumulative.push(0.0);
        for w in breaks.windows(2) {
            acc += rule.integrate(exact_tail_integrand, w[0], w[1]);
            cumulative.push(acc);
        }
        ExactTail { rule, breaks, cumulative }
    }

    fn at(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let last = *self.breaks.last().unwrap();
        if x >= last {
            // The integrand is within 1e-17 of its limit e^{−e} out here.
            return self.cumulative[self.cumulative.len() - 1] + exp(-E) * (x - last);
        }
        let i = self.breaks.partition_point(|&b| b <= x) - 1;
        self.cumulative[i] + self.rule.integrate(exact_tail_integrand, self.breaks[i], x)
    }
}

/// `∫_0^X exp(−1/s²) ds = X e^{−1/X²} − √π erfc(1/X)`.
pub fn demo_tail_primitive(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let v = 1.0 / x;
    x * exp(-v * v) - sqrt(PI) * erfc(v)
}

#[derive(Debug)]
enum PrimitiveData {
    Demo { peak_decay: f64, cumulative: BumpCumulative, total: f64, at_two_thirds: f64 },
    Exact { tail: Option<ExactTail> },
}

/// The primitive `f(x) = ∫_0^x g`.
#[derive(Debug, Clone)]
pub struct FMap {
    bump: Bump,
    data: Arc<PrimitiveData>,
}

impl FMap {
    pub fn new(profile: BumpProfile) -> Result<Self> {
        Self::with_tails(profile, true)
    }

    pub fn with_tails(profile: BumpProfile, tails: bool) -> Result<Self> {
        let bump = Bump::new(profile, tails)?;
        let data = match profile {
            BumpProfile::Demo { peak_decay } => {
                let cumulative = BumpCumulative::new();
                let r1 = half_width(1);
                let middle = peak_decay * r1 * cumulative.total();
                let total = middle / (1.0 - 2.0 * peak_decay / 3.0);
                let at_two_thirds = peak_decay / 3.0 * total + middle;
                PrimitiveData::Demo { peak_decay, cumulative, total, at_two_thirds }
            }
            BumpProfile::Exact => PrimitiveData::Exact { tail: tails.then(ExactTail::new) },
        };
        Ok(FMap { bump, data: Arc::new(data) })
    }

    pub fn bump(&self) -> &Bump {
        &self.bump
    }

    pub fn profile(&self) -> BumpProfile {
        self.bump.profile
    }

    /// `∫_0^1 g`
    pub fn unit_mass(&self) -> f64 {
        match &*self.data {
            PrimitiveData::Demo { total, .. } => *total,
            PrimitiveData::Exact { .. } => 0.0,
        }
    }

    fn inner(&self, loc: &Location) -> f64 {
        let PrimitiveData::Demo { peak_decay, cumulative, total, at_two_thirds } = &*self.data else {
            // Every Exact bump integrates to less than exp(−e^{e^{36}}).
            return 0.0;
        };
        // f(x) = (a/3) f(3x) on [0,1/3] and f(2/3) + (a/3) f(3x−2) on [2/3,1].
        let ratio = peak_decay / 3.0;
        let (bits, depth) = match *loc {
            Location::Cantor { bits, depth, .. } => (bits, depth),
            Location::Gap { bits, generation, .. } => (bits, generation - 1),
        };
        let mut acc = 0.0;
        let mut scale = 1.0;
        for i in 0..depth {
            if (bits >> (depth - 1 - i)) & 1 == 1 {
                acc += scale * at_two_thirds;
            }
            scale *= ratio;
        }
        if let Some((_, u)) = loc.gap_coordinate() {
            let middle = ratio * total + peak_decay * half_width(1) * cumulative.at(u);
            acc += scale * middle;
        }
        acc
    }

    fn tail(&self, t: f64) -> f64 {
        if !self.bump.tails {
            return 0.0;
        }
        match &*self.data {
            PrimitiveData::Demo { peak_decay, .. } => peak_decay * demo_tail_primitive(t),
            PrimitiveData::Exact { tail } => tail.as_ref().map_or(0.0, |tl| tl.at(t)),
        }
    }
}

impl MonotoneMap for FMap {
    fn eval(&self, x: f64) -> f64 {
        match piece(x) {
            Piece::LeftTail(t) => -self.tail(-t),
            Piece::RightTail(t) => self.unit_mass() + self.tail(t),
            Piece::Inner(loc) => self.inner(&loc),
        }
    }

    fn derivative(&self, x: f64) -> f64 {
        self.bump.value(x)
    }
}

/// `h(x) = x + θ C(x)`, extended by `x` on the left and `x + θ` on the right.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HMap {
    pub theta: f64,
}

impl HMap {
    pub fn new(theta: f64) -> Result<Self> {
        if !(theta >= 0.0) || !theta.is_finite() {
            return Err(Error::param("theta", format!("must be finite and nonnegative, got {theta}")));
        }
        Ok(HMap { theta })
    }

    /// Inverse by the self-similarity `h_θ(x/3) = h_{3θ/2}(x)/3` of the left third.
    pub fn inverse_structural(&self, s: f64) -> f64 {
        let theta = self.theta;
        if s <= 0.0 || theta == 0.0 {
            return if s > 1.0 + theta { s - theta } else { s };
        }
        if s >= 1.0 + theta {
            return s - theta;
        }
        let mut s = s;
        let mut th = theta;
        let mut offset = 0.0;
        let mut scale = 1.0;
        for _ in 0..80 {
            let left_end = 1.0 / 3.0 + 0.5 * th;
            let right_start = 2.0 / 3.0 + 0.5 * th;
            if s < left_end {
                s *= 3.0;
            } else if s > right_start {
                offset += scale * (2.0 / 3.0);
                s = 3.0 * (s - right_start);
            } else {
                return offset + scale * (s - 0.5 * th);
            }
            scale /= 3.0;
            th *= 1.5;
            if scale < 1e-17 {
                break;
            }
        }
        offset
    }
}

impl MonotoneMap for HMap {
    fn eval(&self, x: f64) -> f64 {
        if x < 0.0 {
            x
        } else if x > 1.0 {
            x + self.theta
        } else {
            x + self.theta * cantor_function(x).value
        }
    }

    /// `1` off K; the Cantor part has no density.
    fn derivative(&self, _x: f64) -> f64 {
        1.0
    }

    fn inverse(&self, y: f64) -> Result<f64> {
        if !y.is_finite() {
            return Err(Error::Domain(format!("inverse requested at {y}")));
        }
        Ok(self.inverse_structural(y))
    }
}

/// `f_m = f ∘ h⁻¹` for `m = θ·(Cantor–Lebesgue measure)`.
#[derive(Debug, Clone)]
pub struct FmMap {
    pub f: FMap,
    pub h: HMap,
}

impl FmMap {
    pub fn new(f: FMap, theta: f64) -> Result<Self> {
        Ok(FmMap { f, h: HMap::new(theta)? })
    }

    pub fn theta(&self) -> f64 {
        self.h.theta
    }

    /// `f_m″(s) = g′(h⁻¹(s))`
    pub fn second_derivative(&self, s: f64) -> f64 {
        self.f.bump().derivative(self.h.inverse_structural(s))
    }

    /// `h⁻¹` by generic bisection; slower, kept as an independent check.
    pub fn h_inverse_bisection(&self, s: f64) -> Result<f64> {
        let h = self.h;
        bisect_inverse(|x| h.eval(x), s, (f64::NEG_INFINITY, f64::INFINITY), INVERSE_TOL)
    }
}

impl MonotoneMap for FmMap {
    fn eval(&self, s: f64) -> f64 {
        self.f.eval(self.h.inverse_structural(s))
    }

    /// `f_m′(s) = g(h⁻¹(s))`: `h⁻¹` has slope 1 on gap images and `g = 0` on K.
    fn derivative(&self, s: f64) -> f64 {
        self.f.derivative(self.h.inverse_structural(s))
    }

    /// `f_m⁻¹ = h ∘ f⁻¹`
    fn inverse(&self, t: f64) -> Result<f64> {
        Ok(self.h.eval(self.f.inverse(t)?))
    }
}

pub fn f_map(profile: BumpProfile) -> Result<FMap> {
    FMap::new(profile)
}

pub fn f_m_map(profile: BumpProfile, theta: f64) -> Result<FmMap> {
    FmMap::new(FMap::new(profile)?, theta)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stencil {
    /// `(F(s+δ) − F(s−δ)) / 2δ`
    Centered2,
    /// Fourth-order five-point stencil.
    Centered4,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityCheck {
    pub max_abs_error: f64,
    pub evaluated: usize,
    pub skipped: usize,
}

/// Compares a finite-difference `f_m′(f_m⁻¹(t))` with `f′(f⁻¹(t))` at each `t`.
pub fn fm_derivative_identity_check(fm: &FmMap, ts: &[f64], delta: f64, stencil: Stencil) -> Result<IdentityCheck> {
    if !(delta > 0.0) {
        return Err(Error::param("delta", "must be positive"));
    }
    let mut out = IdentityCheck { max_abs_error: 0.0, evaluated: 0, skipped: 0 };
    for &t in ts {
        let (Ok(s), Ok(x)) = (fm.inverse(t), fm.f.inverse(t)) else {
            out.skipped += 1;
            continue;
        };
        let d = |k: f64| fm.eval(s + k * delta);
        let lhs = match stencil {
            Stencil::Centered2 => (d(1.0) - d(-1.0)) / (2.0 * delta),
            Stencil::Centered4 => (8.0 * (d(1.0) - d(-1.0)) - (d(2.0) - d(-2.0))) / (12.0 * delta),
        };
        let rhs = fm.f.derivative(x);
        out.max_abs_error = out.max_abs_error.max((lhs - rhs).abs());
        out.evaluated += 1;
    }
    Ok(out)
}
