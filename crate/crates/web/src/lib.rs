//! Browser bindings for the demo page in `www/`.
//!
//! Every entry point returns a JSON string; failures come back as
//! `{"error": "..."}` so the page never has to catch exceptions.

use bitblast::lang::{self, EvalConfig};
use bitblast::library::{self, PieceKind, PieceSpec};
use bitblast::oracle::{naive_discretize, naive_discretize_gamma};
use bitblast::{compiler, query, BitVectorDist, Error, InferenceContext};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Largest bit width the page may request; keeps tables small.
pub const MAX_DEMO_BITS: u32 = 12;

#[derive(Debug, Serialize)]
pub struct Comparison {
    pub lo: f64,
    pub step: f64,
    pub flips: usize,
    pub compiled: Vec<f64>,
    pub reference: Vec<f64>,
    pub max_abs_error: f64,
    pub total_variation: f64,
}

#[derive(Serialize)]
struct Failure {
    error: String,
    zero_evidence: bool,
}

fn to_json<T: Serialize>(r: Result<T, Error>) -> String {
    match r {
        Ok(v) => serde_json::to_string(&v).expect("serializable"),
        Err(e) => serde_json::to_string(&Failure {
            zero_evidence: e == Error::ZeroEvidence,
            error: e.to_string(),
        })
        .expect("serializable"),
    }
}

fn check_bits(bits: u32) -> Result<(), Error> {
    if (1..=MAX_DEMO_BITS).contains(&bits) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "bits must be in 1..={MAX_DEMO_BITS}"
        )))
    }
}

fn grid_masses(ctx: &mut InferenceContext, x: &BitVectorDist) -> Result<Vec<f64>, Error> {
    let f = x.format();
    let mut out = vec![0.0; 1usize << f.total_bits];
    for &(v, p) in query::pr(ctx, x)?.entries() {
        out[(f.raw_of(v)? - f.min_raw()) as usize] = p;
    }
    Ok(out)
}

fn compare(
    ctx: &mut InferenceContext,
    x: &BitVectorDist,
    reference: Vec<f64>,
) -> Result<Comparison, Error> {
    let compiled = grid_masses(ctx, x)?;
    let f = x.format();
    let max_abs_error = compiled
        .iter()
        .zip(&reference)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let total_variation = 0.5
        * compiled
            .iter()
            .zip(&reference)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>();
    Ok(Comparison {
        lo: f.min_value(),
        step: f.step(),
        flips: ctx.flip_count(),
        compiled,
        reference,
        max_abs_error,
        total_variation,
    })
}

/// Exact compilation of `x^α e^{βx}` on `[0, 1)` next to its interval
/// integrals.
pub fn gamma_comparison(alpha: u32, beta: f64, bits: u32) -> Result<Comparison, Error> {
    check_bits(bits)?;
    if alpha > 3 {
        return Err(Error::InvalidParameter("alpha must be at most 3".into()));
    }
    let mut ctx = InferenceContext::new();
    let x = compiler::compile_general_gamma(&mut ctx, alpha, beta, bits)?;
    let reference = naive_discretize_gamma(alpha, beta, bits, 0.0, 1.0)?;
    compare(&mut ctx, &x, reference.masses().to_vec())
}

/// Piecewise standard normal on `[−8, 8)` next to its quadrature masses.
pub fn gaussian_comparison(bits: u32, pieces: u32, kind: &str) -> Result<Comparison, Error> {
    check_bits(bits)?;
    let kind: PieceKind = kind.parse()?;
    if !pieces.is_power_of_two() {
        return Err(Error::InvalidParameter(
            "pieces must be a power of two".into(),
        ));
    }
    let density = library::gaussian_density(0.0, 1.0, -8.0, 8.0)?;
    let mut ctx = InferenceContext::new();
    let x = library::bitblast(
        &mut ctx,
        bits,
        &density,
        PieceSpec::new(pieces, kind).clamped(bits),
    )?;
    let reference = naive_discretize(&density, bits)?;
    compare(&mut ctx, &x, reference.masses().to_vec())
}

pub fn run_source(
    src: &str,
    bits: u32,
    pieces: u32,
    kind: &str,
) -> Result<lang::QueryOutput, Error> {
    check_bits(bits)?;
    let config = EvalConfig {
        bits,
        pieces,
        piece_kind: kind.parse()?,
    };
    lang::run(src, &config)
}

#[wasm_bindgen]
pub fn gamma_demo(alpha: u32, beta: f64, bits: u32) -> String {
    to_json(gamma_comparison(alpha, beta, bits))
}

#[wasm_bindgen]
pub fn gaussian_demo(bits: u32, pieces: u32, kind: &str) -> String {
    to_json(gaussian_comparison(bits, pieces, kind))
}

#[wasm_bindgen]
pub fn run_program(src: &str, bits: u32, pieces: u32, kind: &str) -> String {
    to_json(run_source(src, bits, pieces, kind))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_is_exact() {
        let c = gamma_comparison(2, -1.5, 6).unwrap();
        assert_eq!(c.compiled.len(), 64);
        assert!(c.max_abs_error < 1e-12, "{}", c.max_abs_error);
    }

    #[test]
    fn more_pieces_fit_better() {
        let coarse = gaussian_comparison(6, 2, "exponential").unwrap();
        let fine = gaussian_comparison(6, 16, "exponential").unwrap();
        assert!(fine.total_variation < coarse.total_variation);
        assert_eq!(fine.lo, -8.0);
        assert_eq!(fine.step, 0.25);
    }

    #[test]
    fn program_errors_are_json() {
        let v: serde_json::Value = serde_json::from_str(&run_program(
            "x = flip(0.5)\nobserve(x & !x)\nreturn x",
            4,
            4,
            "linear",
        ))
        .unwrap();
        assert_eq!(v["zero_evidence"], true);
        let v: serde_json::Value =
            serde_json::from_str(&run_program("return y", 4, 4, "linear")).unwrap();
        assert!(v["error"].as_str().unwrap().contains("`y`"));
        let v: serde_json::Value = serde_json::from_str(&gamma_demo(1, 0.0, 40)).unwrap();
        assert!(v.get("error").is_some());
    }

    #[test]
    fn program_output_is_json() {
        let v: serde_json::Value = serde_json::from_str(&run_program(
            "x = uniform(0, 4)\nreturn pr(x)",
            2,
            1,
            "exponential",
        ))
        .unwrap();
        assert_eq!(v["posterior"].as_array().unwrap().len(), 4);
    }
}
