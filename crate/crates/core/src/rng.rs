//! Counter-based Gaussian generation: every variate is a pure function of
//! (seed, path, stream, counter), so ensembles are bit-identical regardless
//! of scheduling or degree of parallelism.

/// Scheme tag stored in ensemble provenance for the convolution sampler.
pub const SCHEME_CONVOLUTION: &str = "ctr-mix64-boxmuller-v1";
/// Scheme tag for the dense-factorization exact sampler.
pub const SCHEME_EXACT: &str = "ctr-mix64-boxmuller-chol-v1";

const PHI: u64 = 0x9e37_79b9_7f4a_7c15;
const LABEL_PATH: u64 = 0xa076_1d64_78bd_642f;
const LABEL_STREAM: u64 = 0xe703_7ed1_a0b4_28db;
const ROOT_SALT: u64 = 0x6a09_e667_f3bc_c909;

/// 64-bit finalizer (SplitMix64); bijective, so distinct counters never
/// collide within a stream.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z ^= z >> 30;
    z = z.wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z ^= z >> 27;
    z = z.wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[inline]
fn word(key: u64, counter: u64) -> u64 {
    mix64(key.wrapping_add(counter.wrapping_add(1).wrapping_mul(PHI)))
}

/// (0,1) uniform from the top 53 bits; never 0, so logarithms are safe.
#[inline]
fn unit(x: u64) -> f64 {
    ((x >> 11) as f64 + 0.5) * (1.0 / 9_007_199_254_740_992.0)
}

pub fn root_key(seed: u64) -> u64 {
    mix64(seed ^ ROOT_SALT)
}

pub fn path_key(root: u64, path: u64) -> u64 {
    mix64(root ^ mix64(LABEL_PATH ^ path.wrapping_mul(PHI)))
}

/// Stream 0 is the zero mode; half-lattice member j owns streams 1+2j
/// (cosine component) and 2+2j (sine component).
pub fn stream_key(path_key: u64, stream: u64) -> u64 {
    mix64(path_key ^ mix64(LABEL_STREAM ^ stream.wrapping_mul(PHI)))
}

/// Box-Muller pair at an even-aligned counter: (cosine leg, sine leg).
///
/// Never inlined: the single- and bulk-draw entry points must share one
/// lowering of sin/cos, or libm call fusion (sin+cos -> sincos) can shift
/// results by 1 ulp between them and break `fill_normals`'s contract.
#[inline(never)]
fn pair_at(stream_key: u64, base: u64) -> (f64, f64) {
    let u1 = unit(word(stream_key, base));
    let u2 = unit(word(stream_key, base + 1));
    let r = (-2.0 * u1.ln()).sqrt();
    let (sin, cos) = (2.0 * std::f64::consts::PI * u2).sin_cos();
    (r * cos, r * sin)
}

/// Standard normal at one counter position: Box-Muller over the pair of
/// uniforms at the even-aligned counter, cosine leg at even counters and
/// sine leg at odd ones.
pub fn normal_at(stream_key: u64, counter: u64) -> f64 {
    let (even, odd) = pair_at(stream_key, counter & !1u64);
    if counter & 1 == 0 {
        even
    } else {
        odd
    }
}

/// Fills `out[i] = normal_at(stream_key, start + i)`, sharing the Box-Muller
/// pair work between adjacent counters.
pub fn fill_normals(stream_key: u64, start: u64, out: &mut [f64]) {
    let mut i = 0usize;
    let n = out.len();
    if n == 0 {
        return;
    }
    if start & 1 == 1 {
        out[0] = normal_at(stream_key, start);
        i = 1;
    }
    while i + 1 < n {
        let (even, odd) = pair_at(stream_key, start + i as u64);
        out[i] = even;
        out[i + 1] = odd;
        i += 2;
    }
    if i < n {
        out[i] = normal_at(stream_key, start + i as u64);
    }
}
