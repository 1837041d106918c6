"""Borel normality and CSSS randomness tests for RNG output."""

__version__ = "0.1.0"

from .bitstore import BitCursor, BitString, LoopedView, complement, load_bits, loop_to, store_bits
from .borel import BorelResult, bias, borel_metric
from .csss import csss_test_1_2, csss_test_3, csss_test_4, run_sample
from .numtheory import (
    DEFAULT_TEST_NUMBERS,
    TestNumberSet,
    carmichael_up_to,
    cs_params,
    jacobi,
    load_carmichael,
    ss_predicate,
)
from .sources import fetch_qrng, gfsr4_bits, mt19937_bits
from .stats import compare_all, ks_two_sample, shapiro_wilk, welch_t

__all__ = [
    "BitCursor", "BitString", "LoopedView", "complement", "load_bits", "loop_to", "store_bits",
    "BorelResult", "bias", "borel_metric",
    "csss_test_1_2", "csss_test_3", "csss_test_4", "run_sample",
    "DEFAULT_TEST_NUMBERS", "TestNumberSet", "carmichael_up_to", "cs_params", "jacobi",
    "load_carmichael", "ss_predicate",
    "fetch_qrng", "gfsr4_bits", "mt19937_bits",
    "compare_all", "ks_two_sample", "shapiro_wilk", "welch_t",
]
