"""Test-suite environment: pin BLAS to one thread (the solver's small
factorizations are faster without pool overhead) and let the grid runner
use both cores at the trial level instead."""

import os

os.environ.setdefault("OMP_NUM_THREADS", "1")
os.environ.setdefault("OPENBLAS_NUM_THREADS", "1")
os.environ.setdefault("MKL_NUM_THREADS", "1")
