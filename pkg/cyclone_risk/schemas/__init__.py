from .records import (
    CovariateRow,
    DatasetRecord,
    IntensityGroup,
    SaffirSimpson,
    SeasonObservation,
    StandardizationRecord,
    StormRecord,
)

__all__ = [
    "CovariateRow",
    "DatasetRecord",
    "IntensityGroup",
    "SaffirSimpson",
    "SeasonObservation",
    "StandardizationRecord",
    "StormRecord",
]
