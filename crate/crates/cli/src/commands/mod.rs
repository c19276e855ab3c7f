pub mod diagnose;
pub mod evaluate;
pub mod fit;
pub mod forecast;
pub mod simulate;
