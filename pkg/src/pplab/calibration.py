"""Desk-scale trend thresholds, frozen from pilot Monte-Carlo runs.

The limit statements the experiments probe are asymptotic; at desk scale
every trend test needs a concrete number.  The constants below were fixed
from pilot batches run at the same pinned parameters as the tests but on
disjoint seeds, and then frozen.  Loosening one to make a test pass
defeats the point — re-run the pilot instead.
"""
from __future__ import annotations

# Phase sweeps (GIRG d=2, tau=2.5, alpha=2, c=0.5, product penalty mu=1,
# n in {2^10, 2^12, 2^14}, 30 pairs x 5 graphs per cell).
# Below threshold the median two-point distance is flat in n up to noise;
# pilots put the fitted slope well inside +-0.05 per doubling.
NONGROWING_SLOPE_BUDGET = 0.1
# Above threshold the medians should climb monotonically across the three
# sizes; pilots show occasional inversions from quantile noise, so demand
# a strict increase in this fraction of independent sweep repetitions.
GROWING_REPETITION_FRACTION = 0.8
GROWING_REPETITIONS = 20

# Degree/weight diagnostics.
DEGREE_RATIO_SPREAD_MAX = 10.0     # max/min decade ratio, reliable decades
DEGREE_TAIL_BAND = 0.3             # Hill estimate within tau-1 +- this
RELIABLE_DECADE_COUNT = 30         # below this a decade is flagged

# Giant component curve (tau=2.5, 10 graphs per size).
GIANT_MIN_FRACTION = 0.1           # at n = 2^12
GIANT_STABILITY_FACTOR = 0.5       # frac(2^14) >= factor * frac(2^12)
GIANT_SECOND_MAX_FRACTION = 0.05   # at n = 2^14

# Mapped hyperbolic kernel and weights.
HRG_WEIGHT_TAIL_BAND = 0.2         # Hill estimate within 2*alpha_H +- this
HRG_KERNEL_DEVIATION_MAX = 0.05    # per bin with >= this many pairs:
HRG_KERNEL_MIN_PAIRS = 500

# Boxing events (windowed IGIRG, side 10^3, d=1, 50 runs).
F1_RUN_FRACTION = 0.9              # runs with F1 at every k <= k_star

# Self-avoiding path decay under the t0 recipe.
SAW_DECAY_MIN_FACTOR = 1.5         # mean count ratio per extra step

# Directional asymmetry (tau=1.5, beta=1, f = w1^3 w2^(1/4)).
# The direction comparison conditions on origins whose weight landed in
# ASYMMETRY_WEIGHT_BAND; see experiments.direction_criterion for why the
# unconditioned means cannot separate the directions.  Pilot batches
# (sides 32/128/512, 35 reps per batch, three seeds) won 20/20 per seed
# and showed banded outward growth around x1.3 per doubling of the side.
ASYMMETRY_SIDES = (32.0, 128.0, 512.0)
ASYMMETRY_T = 1.0
ASYMMETRY_WEIGHT_BAND = (1.0, 2.0)
ASYMMETRY_BATCHES = 20
ASYMMETRY_REPS_PER_BATCH = 35
ASYMMETRY_BATCH_FRACTION = 0.9     # batches the direction criterion must win
ASYMMETRY_OUTWARD_GROWTH_MIN = 1.15   # banded outward mean, per doubling
