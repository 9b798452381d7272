from .absence import AbsenceMap, blob_grid, image_absence, pixel_absence, series_absence, video_absence
from .memory import NOT_CONVERGED, PotentialMemoryReport, potential_memory, resting_output
from .recurrence import LayerContribution, RecurrencePlot, default_epsilon, layer_contribution, recurrence_plot, rp_mean

__all__ = [
    "AbsenceMap",
    "LayerContribution",
    "NOT_CONVERGED",
    "PotentialMemoryReport",
    "RecurrencePlot",
    "blob_grid",
    "default_epsilon",
    "image_absence",
    "layer_contribution",
    "pixel_absence",
    "potential_memory",
    "recurrence_plot",
    "resting_output",
    "rp_mean",
    "series_absence",
    "video_absence",
]
