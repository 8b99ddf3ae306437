# Expose the main entry points for tests and external use
from .birman import bs_matrix, n_below_via_bs, n_bound_states_bs
from .boxop import assemble, count_below, n_bound_states
from .dispersion import Dispersion, laplacian, make_dispersion, morse_report
from .green import eta, green_table, green_value
from .potential import Potential, from_samples, from_tail, level_count
from .semiclassical import n_sc, sublevel_volume

__all__ = [
    "Dispersion",
    "Potential",
    "assemble",
    "bs_matrix",
    "count_below",
    "eta",
    "from_samples",
    "from_tail",
    "green_table",
    "green_value",
    "laplacian",
    "level_count",
    "make_dispersion",
    "morse_report",
    "n_below_via_bs",
    "n_bound_states",
    "n_bound_states_bs",
    "n_sc",
    "sublevel_volume",
]
