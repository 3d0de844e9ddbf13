import math

#: Speed of light in vacuum, m/s
SPEED_OF_LIGHT = 299_792_458.0

#: Relative tolerance used by series and quadrature when nothing else is given
DEFAULT_TOL = 1e-8

#: Absolute floor handed to the adaptive quadrature
QUAD_ABS_FLOOR = 1e-15

#: Relative error estimate above which a quadrature that raised a warning is rejected
QUAD_ERROR_CEILING = 1e-6

#: Hard cap on fading-law series (shadowed-Rician CDF)
CHANNEL_SERIES_CAP = 200

#: Hard cap on the closed-form error series and the binomial capacity series
SERIES_CAP = 500

#: Natural log of two, for nats/bits bookkeeping
LN2 = math.log(2.0)

#: Environment variables that override the scenario file
ENV_SEED = "SAGIN_SEED"
ENV_THREADS = "SAGIN_THREADS"
