pub mod judge;
pub mod plan;
pub mod run;
pub mod scaling;
pub mod score;
pub mod train;
