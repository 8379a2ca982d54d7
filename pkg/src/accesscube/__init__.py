"""Place-based space-time job accessibility engine.

Pipeline: hourly disaggregation of interval count tables, dasymetric
redistribution onto a uniform grid, many-to-many network cost matrices,
friction calibration, hour-indexed two-step gravity accessibility, and a
volumetric space-time cube for interactive viewing.
"""

__version__ = "0.1.0"
