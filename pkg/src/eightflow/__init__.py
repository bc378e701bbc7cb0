"""Curve shortening flow on symmetric figure-eight curves.

Front-tracking integrator for the quarter-arc fundamental domain, with the
diagnostic quantities needed to observe the late-time asymptotics: Grim
Reaper convergence of the rescaled curvature profile, area/width/height
rates, and Hausdorff convergence of the box-renormalized curve to the
bowtie quadrilateral.
"""

__version__ = "0.1.0"
