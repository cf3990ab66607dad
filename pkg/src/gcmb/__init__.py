"""Golden-coded multiple beamforming: codecs, decoders, and Monte Carlo harness."""

from .channel import ChannelRealization, SnrPoint, gc_baseline_apply, gcmb_channel_apply, sample_channel
from .errors import (
    ConfigurationError,
    DegenerateChannelError,
    SingularMatrixError,
    UnsupportedDimensionError,
)
from .golden import (
    GOLDEN,
    DecodeResult,
    effective_channel,
    gcmb_decode,
    golden_encode,
    golden_encode_lattice,
    ml_codeword_decode,
    receive_decompose,
    split_real,
)
from .lattice import LatticeProblem, SdResult, SearchStats, exhaustive_ml, real_sd, round_to_levels
from .numerics import Constellation, SeededRng, SvdFactors, qam_constellation, qr, svd
from .pstbc import (
    PerfectCodeSpec,
    bundled_generator_path,
    build_shift_matrix,
    golden_spec,
    load_generator_file,
    pcmb_decode,
    pcmb_group,
    pstbc_encode,
)

__version__ = "0.1.0"
