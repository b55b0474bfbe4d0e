pub mod centering;
pub mod excursion;
pub mod ks;
pub mod limits;
pub mod moments;
pub mod report;
pub mod speed;
pub mod stable;
pub mod tail;
