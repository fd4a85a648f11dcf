"""Constructors for the bundled tower families.

Each submodule builds finite-depth approximations of one family:

* :mod:`basic`: static fences without interesting dynamics (identity
  loops): cantor, lelek, fraisse, twosided.
* :mod:`cycles`: periodic-cycle levels realizing isometric lifts.
* :mod:`shift`: full-shift cylinder towers and invariant cylinder masks.
* :mod:`orbit`: orbit-footprint towers over a designated transitive
  point of the 2-shift (transitive / chaotic / mixing lifts).
* :mod:`odometer`: cycle refinements with equal-piece interval grids and
  the minimal lift over the resulting odometer base.
"""

from . import basic, cycles, odometer, orbit, shift  # noqa: F401
