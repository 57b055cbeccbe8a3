"""Sub-Riemannian limits of curvature functionals on twisted BCV products.

Modules: ``jets`` (forward-mode jets), ``frames`` and ``coordgeom`` (oracles),
``bcv``, ``twisted``, ``surface``, ``quadrature``, ``functionals`` and the
batch driver ``cli``.
"""

__version__ = "0.1.0"
