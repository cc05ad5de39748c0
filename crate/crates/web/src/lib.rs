//! Browser demo: reduce the heated-rod delay benchmark and compare the full
//! and reduced models in frequency and time.
//!
//! Every export returns plain numbers or strings so the page needs no
//! bindings beyond what `wasm-bindgen` generates. The same functions run
//! natively, which is how they are tested.

use num_complex::Complex64;
use wasm_bindgen::prelude::*;

use pbmor::bench::gen_heated_rod_delay;
use pbmor::matfun::StructuredSystem;
use pbmor::mor::{build_spec, InterpolationSpec, ReducedSystem, Sidedness};
use pbmor::sim::{simulate, SimProblem, Signal};
use pbmor::tf::{eval_gk, TransferEvalRequest};
use pbmor::verify::logspace;

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

#[wasm_bindgen]
pub struct RodDemo {
    full: StructuredSystem,
    reduced: ReducedSystem,
}

#[wasm_bindgen]
impl RodDemo {
    /// Rod with `n` grid points, reduced at `+-1e-4i`, `+-1e4i` and
    /// `mu in {1, 5.5, 10}` for the first two transfer functions.
    #[wasm_bindgen(constructor)]
    pub fn new(n: usize) -> Result<RodDemo, String> {
        let full = gen_heated_rod_delay(n).map_err(err)?;
        let reduced = reduce(&full, &[1.0, 5.5, 10.0], 2)?;
        Ok(RodDemo { full, reduced })
    }

    /// Rebuilds the reduced model for new parameter points and chain depth.
    /// Returns a JSON summary of the reduction.
    pub fn reduce(&mut self, mu_points: Vec<f64>, depth: usize) -> Result<String, String> {
        if mu_points.is_empty() {
            return Err("give at least one parameter point".into());
        }
        if !(1..=3).contains(&depth) {
            return Err("depth must be 1, 2 or 3".into());
        }
        self.reduced = reduce(&self.full, &mu_points, depth)?;
        Ok(self.summary())
    }

    pub fn summary(&self) -> String {
        serde_json::json!({
            "full_order": self.full.n,
            "reduced_order": self.reduced.order(),
            "info": self.reduced.info,
        })
        .to_string()
    }

    pub fn full_order(&self) -> usize {
        self.full.n
    }

    pub fn reduced_order(&self) -> usize {
        self.reduced.order()
    }

    /// `|G_1(i w)|` of both models on a log grid over `[1e-4, 1e4]`,
    /// flattened as `[w, full, reduced, rel_err]` per point.
    pub fn frequency_response(&self, mu: f64, points: usize) -> Result<Vec<f64>, String> {
        let mut out = Vec::with_capacity(4 * points);
        for w in logspace(1e-4, 1e4, points) {
            let req = TransferEvalRequest::new(vec![Complex64::new(0.0, w)], vec![mu]);
            let g = eval_gk(&self.full, &req).map_err(err)?[(0, 0)];
            let gr = eval_gk(&self.reduced.sys, &req).map_err(err)?[(0, 0)];
            out.extend([w, g.norm(), gr.norm(), (g - gr).norm() / g.norm().max(1e-300)]);
        }
        Ok(out)
    }

    /// Output of both models for the input signal `input(t)`, flattened as
    /// `[t, y, y_reduced]` per sample. The step must divide the unit delay.
    pub fn time_response(&self, mu: f64, input: &str, t_end: f64, step: f64) -> Result<Vec<f64>, String> {
        let u = Signal::parse(input).map_err(err)?;
        let prob = SimProblem::new(vec![mu], vec![u], t_end, step);
        let a = simulate(&self.full, &prob).map_err(err)?;
        let b = simulate(&self.reduced.sys, &prob).map_err(err)?;
        let mut out = Vec::with_capacity(3 * a.t.len());
        for (k, t) in a.t.iter().enumerate() {
            out.extend([*t, a.y[(k, 0)].re, b.y[(k, 0)].re]);
        }
        Ok(out)
    }
}

fn reduce(full: &StructuredSystem, mu_points: &[f64], depth: usize) -> Result<ReducedSystem, String> {
    let points = [Complex64::new(0.0, 1e-4), Complex64::new(0.0, -1e-4), Complex64::new(0.0, 1e4), Complex64::new(0.0, -1e4)];
    let mus = mu_points.iter().map(|&m| vec![m]).collect();
    let spec = InterpolationSpec::from_points(&points, depth, 0, mus, Sidedness::TwoSidedIdentical);
    build_spec(full, &spec).map_err(err)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reduced_model_tracks_the_rod() {
        let demo = RodDemo::new(80).unwrap();
        assert!(demo.reduced_order() < demo.full_order());
        let fr = demo.frequency_response(5.5, 30).unwrap();
        assert_eq!(fr.len(), 120);
        let worst = fr.chunks(4).map(|c| c[3]).fold(0.0, f64::max);
        assert!(worst < 1e-2, "{worst}");
        let tr = demo.time_response(5.5, "0.05*(cos(10*t) + cos(5*t))", 2.0, 0.01).unwrap();
        assert_eq!(tr.len(), 3 * 201);
        let dev = tr.chunks(3).map(|c| (c[1] - c[2]).abs()).fold(0.0, f64::max);
        let size = tr.chunks(3).map(|c| c[1].abs()).fold(0.0, f64::max);
        assert!(dev < 1e-2 * size);
    }

    #[test]
    fn reduce_reports_and_rejects() {
        let mut demo = RodDemo::new(40).unwrap();
        let info: serde_json::Value = serde_json::from_str(&demo.reduce(vec![2.0], 1).unwrap()).unwrap();
        assert_eq!(info["full_order"], 40);
        assert!(demo.reduce(vec![], 2).is_err());
        assert!(demo.reduce(vec![1.0], 7).is_err());
        assert!(demo.time_response(1.0, "cos(", 1.0, 0.01).is_err());
        assert!(demo.time_response(1.0, "1", 1.0, 0.3).is_err());
    }
}
