//! Adaptive Dormand–Prince 5(4) for the linear companion system
//! w₀′ = w₁, …, w_{N−2}′ = w_{N−1}, w_{N−1}′ = q(x)·w₀.

use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self { rtol: 1e-12, atol: 1e-15, max_steps: 2_000_000 }
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn rhs<Q: Fn(f64) -> C64>(q: &Q, x: f64, w: &[C64], out: &mut [C64]) {
    let n = w.len();
    for k in 0..n - 1 {
        out[k] = w[k + 1];
    }
    out[n - 1] = q(x) * w[0];
}

/// Advances w from xa to xb (either direction) and returns the number of accepted steps.
pub fn integrate<Q: Fn(f64) -> C64>(q: &Q, w: &mut [C64], xa: f64, xb: f64, opts: &OdeOptions) -> usize {
    let n = w.len();
    let span = xb - xa;
    if span == 0.0 {
        return 0;
    }
    let dir = span.signum();
    let mut x = xa;
    let mut h = span.abs().min(0.05) * dir;
    let mut k = vec![vec![C64::new(0.0, 0.0); n]; 7];
    let mut tmp = vec![C64::new(0.0, 0.0); n];
    let mut ynew = vec![C64::new(0.0, 0.0); n];
    rhs(q, x, w, &mut k[0]);
    let mut steps = 0;
    let mut last_reject = false;
    for _ in 0..opts.max_steps {
        if (xb - x) * dir <= 0.0 {
            break;
        }
        let final_step = (x + h - xb) * dir >= 0.0;
        if final_step {
            h = xb - x;
        }
        let stage = |coef: &[(usize, f64)], tmp: &mut Vec<C64>, k: &Vec<Vec<C64>>| {
            for i in 0..n {
                let mut s = w[i];
                for &(j, a) in coef {
                    s += k[j][i] * (a * h);
                }
                tmp[i] = s;
            }
        };
        stage(&[(0, A21)], &mut tmp, &k);
        rhs(q, x + C2 * h, &tmp, &mut k[1]);
        stage(&[(0, A31), (1, A32)], &mut tmp, &k);
        rhs(q, x + C3 * h, &tmp, &mut k[2]);
        stage(&[(0, A41), (1, A42), (2, A43)], &mut tmp, &k);
        rhs(q, x + C4 * h, &tmp, &mut k[3]);
        stage(&[(0, A51), (1, A52), (2, A53), (3, A54)], &mut tmp, &k);
        rhs(q, x + C5 * h, &tmp, &mut k[4]);
        stage(&[(0, A61), (1, A62), (2, A63), (3, A64), (4, A65)], &mut tmp, &k);
        rhs(q, x + h, &tmp, &mut k[5]);
        for i in 0..n {
            ynew[i] = w[i] + (k[0][i] * B1 + k[2][i] * B3 + k[3][i] * B4 + k[4][i] * B5 + k[5][i] * B6) * h;
        }
        let xn = if final_step { xb } else { x + h };
        rhs(q, xn, &ynew, &mut k[6]);
        let mut err: f64 = 0.0;
        for i in 0..n {
            let e = (k[0][i] * E1 + k[2][i] * E3 + k[3][i] * E4 + k[4][i] * E5 + k[5][i] * E6 + k[6][i] * E7) * h;
            let sc = opts.atol + opts.rtol * w[i].norm().max(ynew[i].norm());
            err = err.max(e.norm() / sc);
        }
        if err <= 1.0 {
            x = xn;
            w.copy_from_slice(&ynew);
            k.swap(0, 6);
            steps += 1;
            let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            let fac = if last_reject { fac.min(1.0) } else { fac };
            last_reject = false;
            if !final_step {
                h *= fac;
            }
        } else {
            last_reject = true;
            h *= (0.9 * err.powf(-0.2)).clamp(0.2, 1.0);
        }
    }
    steps
}
