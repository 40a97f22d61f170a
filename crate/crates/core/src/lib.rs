//! Exact volume polynomials, geodesic length formulas for generalized
//! eights, Friedman-Ramanujan function operators and trace experiments on
//! random regular graphs.

pub mod diagram;
pub mod frfun;
pub mod geolen;
pub mod graphlab;
pub mod hypgeom;
pub mod pipoly;
pub mod quad;
pub mod volfun;

pub use diagram::{Diagram, FillingSignature, Sign, ThetaLabel, ValidDiagram};
pub use frfun::FRFunction;
pub use pipoly::{PiPolynomial, PiRational, VolumeTable};
