"""
Defaults for the exploratory statistics.
"""

# ACF/PACF
DEFAULT_MAX_LAG = 40
CONFIDENCE_Z = 1.96

# Poisson slot intensity (minutes)
DEFAULT_SLOT_MINUTES = 100
DEFAULT_SLOT_MINUTES_B = 1000
CONSISTENCY_TOLERANCE = 0.05
SLOT_METHODS = ('mean', 'histogram')
HISTOGRAM_GRID_POINTS = 400

# Fee quartiles
QUARTILES = (0.25, 0.5, 0.75)
QUARTILE_LABELS = ('Q1', 'Q2', 'Q3', 'Q4')

# Histogram bins for fitted-distribution plots
PLOT_BINS = 40
