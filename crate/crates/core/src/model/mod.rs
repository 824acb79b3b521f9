//! Domain types shared by the full and reduced systems.

mod connectivity;
mod params;
mod state;

pub use connectivity::{
    renormalize_to_density, validate_connectivity, volume_matrix, ConnectivityMatrix,
    ConnectivityReport,
};
pub use params::{PatchParams, ScaleParams, StrainPerturbations, TraitDeviations};
pub(crate) use state::{mass_defect as state_mass_defect, simplex_defect as state_simplex_defect};
pub use state::{FrequencyState, FullState};
