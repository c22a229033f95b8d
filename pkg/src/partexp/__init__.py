"""partexp: partitioned exponential W-methods for stiff ODEs.

Subpackages and modules:

- phifuncs: dense phi/psi kernels
- operators: matrix-free linear-operator handles
- krylov: adaptive Arnoldi/Lanczos phi and psi actions
- tableaus: exact-rational method coefficients
- ordercond: TPS-tree B-series engine and order verification
- integrators: single steps and fixed/adaptive drivers
- problems: benchmark initial value problems
- experiments: convergence / work-precision studies and CSV emission
- cli: command line entry point
"""

__version__ = "0.1.0"
