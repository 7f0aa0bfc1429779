//! The request-update rule in isolation: how the rate request walks toward
//! the target for encoders that systematically overshoot, undershoot, or
//! respond exactly.
//!
//! ```bash
//! cargo run -p ratesearch --example bisection_demo
//! ```

use ratesearch::next_request;

fn trace(target: f64, gain: f64, steps: u32) {
    println!("target {target} kb/s, encoder responds with {gain} x request:");
    println!("  step  request kb/s  achieved kb/s  next move");
    let mut request = target;
    for step in 0..steps {
        let achieved = gain * request;
        let next = next_request(target, request, achieved, step == 0);
        println!(
            "  {step:>4}  {request:>12.5}  {achieved:>13.5}  {}",
            if achieved >= target { "overshoot, move down" } else { "undershoot, move up" }
        );
        request = next;
    }
    println!();
}

fn main() {
    trace(50.0, 1.2, 8); // typical CBR overshoot
    trace(50.0, 0.8, 8); // conservative encoder
    trace(50.0, 1.0, 8); // exact response: requests close in as r(1 - 2^-k)
}
