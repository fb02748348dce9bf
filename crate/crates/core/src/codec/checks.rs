//! Exact relations between the stored signals of a trace, and integrity
//! verification for traces read back from disk.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::transform::Plane;

use super::cycle::{decode_spectrum, spectrum_of, CompressionTrace};

/// Largest absolute residual of each noise identity over all cycles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IdentityResiduals {
    /// `x⁽ᵏ⁾ − IDCT(y⁽ᵏ⁾)`
    pub spatial_from_quantization: f64,
    /// `y⁽ᵏ→ᵏ⁺¹⁾ − DCT(x⁽ᵏ→ᵏ⁺¹⁾)`
    pub dct_from_rounding: f64,
    /// `x⁽ᵏ→ᵏ⁺¹⁾ + (x⁽ᵏ⁾ − [x⁽ᵏ⁾])`, skipping exact half-integer ties
    pub rounding_from_spatial: f64,
    /// Samples where `x⁽ᵏ⁾` sits on a rounding tie. There the two sides can
    /// differ by exactly one because `[n + t] ≠ n + [t]` at `t = ±0.5`.
    pub tie_points: usize,
}

impl IdentityResiduals {
    pub fn max(&self) -> f64 {
        self.spatial_from_quantization
            .max(self.dct_from_rounding)
            .max(self.rounding_from_spatial)
    }
}

/// Evaluates the three noise identities on every cycle of `trace`.
pub fn identity_residuals<T: Scalar>(trace: &CompressionTrace<T>) -> Result<IdentityResiduals> {
    let opts = trace.options;
    let unshifted = crate::codec::CodecOptions {
        level_shift: false,
        ..opts
    };
    let mut out = IdentityResiduals {
        spatial_from_quantization: 0.0,
        dct_from_rounding: 0.0,
        rounding_from_spatial: 0.0,
        tie_points: 0,
    };
    let half = T::of(0.5);
    for n in &trace.noises {
        let idct_y = decode_spectrum(&n.quantization, &unshifted)?;
        let r6 = n.aux_spatial.max_abs_diff(&idct_y)?;

        let dct_x: Plane<T> = dct_of_real(&n.rounding)?;
        let r7 = n.aux_dct.max_abs_diff(&dct_x)?;

        let mut r8 = T::zero();
        for (&xr, &xa) in n.rounding.as_slice().iter().zip(n.aux_spatial.as_slice()) {
            let frac = (xa - opts.rounding.apply(xa)).abs();
            if (frac - half).abs() <= T::integral_slack() * T::of(1024.0) {
                out.tie_points += 1;
                continue;
            }
            let rhs = -(xa - opts.rounding.apply(xa));
            r8 = r8.max((xr - rhs).abs());
        }
        out.spatial_from_quantization = out.spatial_from_quantization.max(r6.to_f64_lossy());
        out.dct_from_rounding = out.dct_from_rounding.max(r7.to_f64_lossy());
        out.rounding_from_spatial = out.rounding_from_spatial.max(r8.to_f64_lossy());
    }
    Ok(out)
}

fn dct_of_real<T: Scalar>(plane: &Plane<T>) -> Result<Plane<T>> {
    use crate::transform::{tile_blocks, untile_blocks, Dct8, Tile};
    let dct = Dct8::<T>::new();
    let tiles: Vec<Tile<T>> = tile_blocks(plane)?
        .into_iter()
        .map(|t| Tile {
            bx: t.bx,
            by: t.by,
            values: dct.forward(&t.values),
        })
        .collect();
    untile_blocks(plane.width(), plane.height(), &tiles)
}

fn integrity(msg: String) -> Error {
    Error::Integrity(msg)
}

/// Checks every structural invariant of a trace: chaining of cycles,
/// quantizer lattice membership of Ỹ, support bounds of the quantization and
/// rounding noises, consistency of the noise planes with the signals, and
/// the DCT relations between signals. `tol` is the absolute tolerance for
/// real-valued comparisons.
pub fn verify_trace<T: Scalar>(trace: &CompressionTrace<T>, tol: f64) -> Result<()> {
    if trace.cycles.is_empty() || trace.cycles.len() != trace.noises.len() {
        return Err(integrity(format!(
            "trace has {} cycles and {} noise sets",
            trace.cycles.len(),
            trace.noises.len()
        )));
    }
    let tol_t = T::of(tol);
    let opts = trace.options;
    if trace.cycles[0].input != trace.source {
        return Err(integrity("cycle 1 input differs from source".into()));
    }
    for (i, (rec, noise)) in trace.cycles.iter().zip(&trace.noises).enumerate() {
        let k = i + 1;
        let shapes = [
            rec.spectrum.same_shape(&rec.input),
            rec.dequantized.same_shape(&rec.input),
            rec.levels.same_shape(&rec.input),
            rec.decoded.same_shape(&rec.input),
            rec.output.same_shape(&rec.input),
        ];
        if shapes.contains(&false) {
            return Err(integrity(format!("cycle {k}: plane dimensions disagree")));
        }
        if let Some(next) = trace.cycles.get(i + 1) {
            if next.input != rec.output {
                return Err(integrity(format!(
                    "cycle {k} output is not cycle {} input",
                    k + 1
                )));
            }
        }

        let spectrum = spectrum_of::<T>(&rec.input, &opts)?;
        if spectrum.max_abs_diff(&rec.spectrum)? > tol_t {
            return Err(integrity(format!("cycle {k}: spectrum is not the DCT of the input")));
        }
        let decoded = decode_spectrum(&rec.dequantized, &opts)?;
        if decoded.max_abs_diff(&rec.decoded)? > tol_t {
            return Err(integrity(format!(
                "cycle {k}: decoded plane is not the inverse DCT of the dequantized plane"
            )));
        }

        let w = rec.input.width();
        for (idx, (&d, &l)) in rec
            .dequantized
            .as_slice()
            .iter()
            .zip(rec.levels.as_slice())
            .enumerate()
        {
            let (x, y) = (idx % w, idx / w);
            let u = (y % 8) * 8 + x % 8;
            let q = T::of(rec.table.step(u) as f64);
            if (d - T::of(l as f64) * q).abs() > tol_t {
                return Err(integrity(format!(
                    "cycle {k}: coefficient at ({x}, {y}) is not level {l} times step {}",
                    rec.table.step(u)
                )));
            }
            let yq = rec.spectrum.as_slice()[idx] - d;
            if yq.abs() > q / T::of(2.0) + tol_t {
                return Err(integrity(format!(
                    "cycle {k}: quantization noise at ({x}, {y}) exceeds half a step"
                )));
            }
        }
        if !opts.clip {
            for (idx, (&d, &o)) in rec.decoded.as_slice().iter().zip(rec.output.as_slice()).enumerate() {
                if (d - T::of(o as f64)).abs() > T::of(0.5) + tol_t {
                    return Err(integrity(format!(
                        "cycle {k}: rounding noise at sample {idx} exceeds 0.5"
                    )));
                }
            }
        }

        let next_spectrum = match trace.cycles.get(i + 1) {
            Some(c) => c.spectrum.clone(),
            None => spectrum_of::<T>(&rec.output, &opts)?,
        };
        let expect = super::cycle::extract_noises(rec, &next_spectrum)?;
        for kind in super::cycle::NoiseKind::ALL {
            if expect.get(kind).max_abs_diff(noise.get(kind))? > tol_t {
                return Err(integrity(format!(
                    "cycle {k}: stored {} noise disagrees with the signals",
                    kind.name()
                )));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::{run_cycles, CodecOptions, QuantTable};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn image(seed: u64) -> Plane<i32> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Plane::from_fn(32, 24, |x, y| {
            (100 + (x * 3 + y) as i32 % 50 + rng.random_range(-20..=20)).clamp(0, 255)
        })
        .unwrap()
    }

    #[test]
    fn identities_hold_on_simulated_chain() {
        let tables = [
            QuantTable::ijg_luminance(80).unwrap(),
            QuantTable::constant(3).unwrap(),
            QuantTable::ijg_luminance(95).unwrap(),
        ];
        let tr = run_cycles::<f64>(&image(1), &tables, &CodecOptions::default()).unwrap();
        let r = identity_residuals(&tr).unwrap();
        assert!(r.spatial_from_quantization < 1e-9, "{r:?}");
        assert!(r.dct_from_rounding < 1e-9, "{r:?}");
        assert!(r.rounding_from_spatial < 1e-9, "{r:?}");
        verify_trace(&tr, 1e-9).unwrap();
    }

    #[test]
    fn tampered_trace_fails_verification() {
        let tables = [QuantTable::constant(4).unwrap(), QuantTable::constant(2).unwrap()];
        let tr = run_cycles::<f64>(&image(2), &tables, &CodecOptions::default()).unwrap();

        let mut bad = tr.clone();
        let v = bad.cycles[1].input.get(0, 0);
        bad.cycles[1].input.set(0, 0, v + 1);
        assert!(matches!(verify_trace(&bad, 1e-9), Err(Error::Integrity(_))));

        let mut bad = tr.clone();
        let v = bad.cycles[0].dequantized.get(3, 3);
        bad.cycles[0].dequantized.set(3, 3, v + 1.0);
        assert!(verify_trace(&bad, 1e-9).is_err());

        let mut bad = tr.clone();
        let v = bad.noises[0].aux_dct.get(5, 1);
        bad.noises[0].aux_dct.set(5, 1, v + 1e-3);
        assert!(verify_trace(&bad, 1e-9).is_err());

        let mut bad = tr;
        bad.noises.pop();
        assert!(verify_trace(&bad, 1e-9).is_err());
    }

    #[test]
    fn tie_points_are_counted_not_hidden() {
        // A flat image with unit DC step: decoded values are exact integers,
        // so there are no ties and nothing is skipped.
        let img = Plane::filled(8, 8, 77).unwrap();
        let tr = run_cycles::<f64>(&img, &[QuantTable::constant(1).unwrap()], &CodecOptions::default())
            .unwrap();
        let r = identity_residuals(&tr).unwrap();
        assert_eq!(r.tie_points, 0);
    }
}
