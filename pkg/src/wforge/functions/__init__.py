"""Pure functions over wforge programs.

This package contains functions organized by their purpose rather than
putting them in a general utils folder: parsing and printing, unification,
canonical forms, homomorphism search, affectedness analysis and the
unfold/fold/grounding transformations.
"""
