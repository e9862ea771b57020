"""Link-level Monte Carlo simulator for polarized modulation over dual-polarized satellite channels."""

from .constellation import get_constellation, hard_demap, modulate, soft_demap
from .pmod import (
    DemodResult,
    IllConditioned,
    demod_hd,
    demod_llr,
    demod_ml,
    demod_sd,
    demod_zf,
    mmse_frontend,
    pmod_map,
    throughput_gain,
)

__version__ = "0.1.0"
