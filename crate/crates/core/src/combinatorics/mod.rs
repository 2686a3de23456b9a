//! Monotone partitions of fiber compositions and the census of the sets
//! C_δ(a₁, …, aₙ).

mod census;
mod partition;

pub use census::{
    check_size_bound, choice_cascade, component_census, census_sweep, tag_visits, verify_counting_bounds, CascadeReport,
    CensusComponent, ComponentCensus, CountingReport, SizeBoundReport,
};
pub use partition::{monotone_partition, monotone_partition_with_cap, partition_levels, Cell, MonotonePartition, DEFAULT_CELL_CAP};
