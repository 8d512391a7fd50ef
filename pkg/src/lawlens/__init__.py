"""Traffic-law compliance engine.

Grounds legal provisions in a hierarchical scenario taxonomy, matches
provisions to scenario tags, retrieves applicable provisions by subset
lookup, derives mandatory/prohibitive driving requirements, attaches them
to map geometry, and monitors trajectories for violations.
"""

__version__ = "0.1.0"
