pub mod criticality;
pub mod energy;
pub mod minimize_cmd;
pub mod quadbound;
pub mod rigidity;
pub mod search;
pub mod selftest;
pub mod split;
pub mod wulff;
