//! Browser bindings: a trajectory tracer, the non-resonance check and the
//! action of circles through a constant loop.

use std::f64::consts::PI;

use serde_json::json;
use wasm_bindgen::prelude::*;

use magtorus::dynamics::{integrate_lifted, IntegrateOptions};
use magtorus::loopspace::{action, cz_index, hessian_index, FourierLoop};
use magtorus::trig::{Mode2, TrigPoly2};
use magtorus::{atlas, certify_nonresonance, MagneticField, Potential};

/// `a(x) = a0 + amp sin(2 pi x1)`.
fn field(a0: f64, amp: f64) -> Result<MagneticField, String> {
    let modes = if amp == 0.0 { vec![] } else { vec![Mode2 { m: 1, n: 0, c_cos: 0.0, c_sin: amp }] };
    let poly = TrigPoly2::new(a0, modes).map_err(|e| e.to_string())?;
    MagneticField::new(vec![poly]).map_err(|e| e.to_string())
}

/// Lifted positions `x1, x2` interleaved, `samples + 1` points over `[0, t_end]`.
pub fn trace(a0: f64, amp: f64, v_amp: f64, x: [f64; 2], p: [f64; 2], t_end: f64, samples: usize) -> Result<Vec<f64>, String> {
    if !(t_end > 0.0) || samples == 0 || samples > 20_000 {
        return Err("need t_end > 0 and 1..=20000 samples".into());
    }
    let f = field(a0, amp)?;
    let v = Potential::cosine_sum(2, 1.0, v_amp);
    let traj = integrate_lifted(&f, &v, &x, &p, (0.0, t_end), IntegrateOptions { tol: 1e-9, samples, ..Default::default() })
        .map_err(|e| e.to_string())?;
    Ok(traj.lifted.iter().flat_map(|q| [q[0], q[1]]).collect())
}

/// Certificate and predicted ranks as JSON, or the resonance diagnosis.
pub fn certificate_json(a0: f64, amp: f64, tau: f64) -> Result<String, String> {
    let f = field(a0, amp)?;
    match certify_nonresonance(&f, tau) {
        Ok(cert) => {
            let pred = atlas::predict(&f, tau).map_err(|e| e.to_string())?;
            Ok(json!({
                "resonant": false,
                "k": cert.k,
                "b_lo": cert.b_lo,
                "b_hi": cert.b_hi,
                "epsilon": cert.epsilon,
                "ranks": pred.hf_ranks,
                "min_count": pred.min_count,
                "generic_count": pred.generic_count,
            })
            .to_string())
        }
        Err(e) => Ok(json!({ "resonant": true, "reason": e.to_string() }).to_string()),
    }
}

/// Actions of the circles `x0 + R (cos 2 pi t, sin 2 pi t)` for `R` in
/// `[0, r_max]`, with the index of the constant loop, as JSON.
pub fn circles_json(a: f64, r_max: f64, points: usize) -> Result<String, String> {
    if points < 2 || points > 2000 || !(r_max > 0.0) {
        return Err("need r_max > 0 and 2..=2000 points".into());
    }
    let f = MagneticField::constant(&[a]);
    let v = Potential::zero(2, 1.0);
    let mut radii = Vec::with_capacity(points);
    let mut actions = Vec::with_capacity(points);
    for i in 0..points {
        let r = r_max * i as f64 / (points - 1) as f64;
        let mut lp = FourierLoop::constant(&[0.0, 0.0], 1.0, 1).map_err(|e| e.to_string())?;
        lp.coeffs_mut()[4] = r;
        radii.push(r);
        actions.push(action(&f, &v, &lp).map_err(|e| e.to_string())?.total);
    }
    let c = FourierLoop::constant(&[0.0, 0.0], 1.0, 1).map_err(|e| e.to_string())?;
    let hi = hessian_index(&f, &v, &c, 64).map_err(|e| e.to_string())?;
    let mu = cz_index(&f, &v, &c, false).map_err(|e| e.to_string())?;
    Ok(json!({
        "radii": radii,
        "actions": actions,
        "slope": PI * (2.0 * PI - a),
        "morse_index": hi.morse_index,
        "nullity": hi.nullity,
        "mu": mu,
    })
    .to_string())
}

#[wasm_bindgen]
pub fn trajectory(a0: f64, amp: f64, v_amp: f64, x1: f64, x2: f64, p1: f64, p2: f64, t_end: f64, samples: usize) -> Result<Vec<f64>, JsValue> {
    trace(a0, amp, v_amp, [x1, x2], [p1, p2], t_end, samples).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn certify(a0: f64, amp: f64, tau: f64) -> Result<String, JsValue> {
    certificate_json(a0, amp, tau).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn circles(a: f64, r_max: f64, points: usize) -> Result<String, JsValue> {
    circles_json(a, r_max, points).map_err(|e| JsValue::from_str(&e))
}
