"""bosskit: articulated multi-layer statistical shape modeling toolkit.

Builds statistical shape models of multi-layer bodies (outer surface,
skeleton segments, internal organs) from registered surface scans, and
validates the full pipeline on procedurally generated phantoms.
"""

__version__ = "0.1.0"
