"""Period map of height-2 Lubin-Tate deformation spaces: local fields, series, formal modules,
the coordinates phi0/phi1, and closed-form fiber and radius predictions."""
from .errors import (NotADeformation, OutOfRange, PrecisionLoss, StabilizationFailure,
                     ZeroDivisor)
from .localfield import INF, FieldTower, PadicElem
from .periodmap import (PeriodPair, ProjPoint, compute_phi, eval_period, fiber_series,
                        hecke_image, hecke_image_consistent)

__all__ = ["INF", "FieldTower", "PadicElem", "PeriodPair", "ProjPoint", "compute_phi",
           "eval_period", "fiber_series", "hecke_image", "hecke_image_consistent",
           "NotADeformation", "OutOfRange", "PrecisionLoss", "StabilizationFailure", "ZeroDivisor"]
__version__ = "0.1.0"
