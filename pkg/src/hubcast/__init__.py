"""Simulator and coding library for interactive protocols over networks of
intersecting noisy broadcast links."""

from .channel import BroadcastChannel, MissingSend, NoiseModel, broadcast_round
from .chunked import (ChunkCodecs, ProtocolTree, build_chunk_codecs,
                      payload_width, run_chunked, run_chunked_noiseless,
                      run_chunked_simple, suggested_k)
from .coding import (BK, BscCode, ConstructionFailed, EvenLength, GvCode,
                     InvalidRate, build_bsc_code, build_gv_code, gv_expansion,
                     is_parseable, majority_decode, majority_error_exact,
                     parse, parse_view, rho_error_bound)
from .exchange import ConfigError as StrategyConfigError
from .exchange import ExchangeStrategy, StrategyParams, make_strategy, resolve_params
from .harness import (ConfigError, ExperimentReport, RegimeThresholds,
                      run_experiment, run_sweep, select_regime, sweep_to_csv,
                      wilson_interval)
from .instrument import Trace, check_step_bound, compute_x
from .model import (P0, Party, Protocol, Topology, Transcript, inputs_from_seed,
                    make_protocol, run_noiseless, sent_stream)
from .rs import LengthMismatch, RsResult, cons_check, run_rs
from .treecode import (DecodeIntractable, DepthExceeded, TreeCode,
                       build_tree_code, lemma_alphabet_size)

__version__ = "0.1.0"
