"""Spin-squeezing simulation toolkit.

Positionally disordered dipolar spin ensembles: exact Krylov propagation,
a cluster trajectory-sampling engine, closed-form references, decay fitting,
and the T2 <-> variance dictionary. All lengths are nm, times are us, and
rates/couplings are rad/us.
"""

from _squeezelab import *  # noqa: F401,F403
from _squeezelab import __version__, J0_DEFAULT  # noqa: F401
