//! Unitary n-dimensional FFT on flat sample vectors, axis by axis.

use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

thread_local! {
    static PLANS: RefCell<HashMap<(usize, bool), Arc<dyn Fft<f64>>>> = RefCell::new(HashMap::new());
}

fn plan(n: usize, direction: Direction) -> Arc<dyn Fft<f64>> {
    let forward = direction == Direction::Forward;
    PLANS.with(|cache| {
        cache
            .borrow_mut()
            .entry((n, forward))
            .or_insert_with(|| {
                let mut planner = FftPlanner::new();
                if forward {
                    planner.plan_fft_forward(n)
                } else {
                    planner.plan_fft_inverse(n)
                }
            })
            .clone()
    })
}

/// In-place unitary DFT along every axis of a row-major `n^dim` block.
/// Each axis pass carries a `1/sqrt(n)` factor, so forward and inverse are
/// exact adjoints of one another.
pub fn transform(values: &mut [Complex64], dim: usize, n: usize, direction: Direction) {
    debug_assert_eq!(values.len(), n.pow(dim as u32));
    let fft = plan(n, direction);
    let norm = 1.0 / (n as f64).sqrt();
    let mut line = vec![Complex64::new(0.0, 0.0); n];
    for axis in 0..dim {
        let stride = n.pow((dim - 1 - axis) as u32);
        let block = stride * n;
        let outer = values.len() / block;
        for o in 0..outer {
            let base_block = o * block;
            for i in 0..stride {
                let base = base_block + i;
                if stride == 1 {
                    let chunk = &mut values[base..base + n];
                    fft.process(chunk);
                    for v in chunk {
                        *v *= norm;
                    }
                } else {
                    for (j, slot) in line.iter_mut().enumerate() {
                        *slot = values[base + j * stride];
                    }
                    fft.process(&mut line);
                    for (j, slot) in line.iter().enumerate() {
                        values[base + j * stride] = slot * norm;
                    }
                }
            }
        }
    }
}
