"""Link-level simulator for two-way OFDM links that sample inside zero intervals (ZIMS)."""

from .channel import (ChannelSet, ChannelSpec, MultipathChannel, draw_channel_set,
                      freq_channel_matrix, freq_gain, mimo_channel_matrix, subcarrier_gains)
from .frame_timing import (DelayExtrema, FrameTiming, Interval, NonFiniteTimingError,
                           TimingError, ValidationReport, candidate_interval, data_interval,
                           feasible_alpha_range, sampling_times, si_free_interval,
                           validate_timing)
from .linksim import (EquivalentChannel, SampleBlock, SamplingMatrix, SymbolBlock,
                      equivalent_channel_mimo, equivalent_channel_siso, matrix_domain_samples,
                      oracle_carrier, receiver_channels, sampling_matrix, simulate_block,
                      time_domain_oracle)
from .runner import ExperimentConfig, ResultTable, load_config, parse_config, preset_config, run_experiment

__version__ = "0.1.0"
