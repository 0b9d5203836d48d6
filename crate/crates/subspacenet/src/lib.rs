pub mod checkpoint;
pub mod diff_rootmusic;
pub mod eval;
pub mod features;
pub mod loss;
pub mod model;
pub mod trainer;
