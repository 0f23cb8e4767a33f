//! High-precision reference arithmetic for unit tests (256-bit mantissa,
//! roughly 77 significant decimal digits).

use astro_float::ctx::Context;
use astro_float::{BigFloat, Consts, Radix, RoundingMode};

pub const PREC: usize = 256;

pub fn ctx() -> Context {
    Context::new(
        PREC,
        RoundingMode::ToEven,
        Consts::new().expect("constants cache"),
        -1_000_000,
        1_000_000,
    )
}

pub fn big(x: f64) -> BigFloat {
    BigFloat::from_f64(x, PREC)
}

pub fn to_f64(x: &BigFloat, ctx: &mut Context) -> f64 {
    let s = x
        .format(Radix::Dec, RoundingMode::ToEven, ctx.consts())
        .expect("format");
    s.parse::<f64>().unwrap_or_else(|_| panic!("unparseable {s}"))
}
