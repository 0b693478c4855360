pub mod fock;
pub mod pv;
pub mod rabi;
