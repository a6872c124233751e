//! Fixtures shared by the pipeline benchmarks.

use cmt_core::{cases, parse_system, SystemSpec};

pub fn bundled(name: &str) -> SystemSpec {
    let text = cases::by_name(name).unwrap_or_else(|| panic!("no bundled system `{name}`"));
    parse_system(text).expect("bundled systems parse")
}

/// A 6-dimensional system: the generic 3-D rotation block plus three
/// weakly coupled decaying directions.
pub fn six_dim() -> SystemSpec {
    parse_system(
        "vars x y z p q w\n\
         dx/dt = y + x^2 + y*z + p*q\n\
         dy/dt = -x + x*y + w^2\n\
         dz/dt = -z + x^2 + y^2\n\
         dp/dt = -2*p + 0.5*q + x*y\n\
         dq/dt = -0.5*p - 2*q + y^2\n\
         dw/dt = -3*w + 0.1*z + x^2\n",
    )
    .expect("fixture parses")
}
