pub mod bijection;
pub mod blp;
pub mod coupling;
pub mod stack;
pub mod walk;
