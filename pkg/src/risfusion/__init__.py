"""Decision fusion over a RIS-assisted multiple access channel to a large-array FC."""

from .channel import (ChannelRealization, FadingParams, LosTerms, RisPhases,
                      composite_channel, draw_direct_channel, draw_noise,
                      draw_ris_channels, gram_v, v_bar, v_los)
from .detect import (RocPoint, TrialConfig, calibrate_threshold, draw_decisions,
                     estimate_roc_point, estimate_roc_points, observation_bound,
                     observation_bound_curve)
from .fusion import (FusionInput, SensorModel, llr_statistic, mmrc1_statistic,
                     mmrc2_statistic, mrc_statistic, zfc_statistic)
from .geometry import (NetworkLayout, PathGains, SteeringAngles, compute_angles,
                       compute_path_gains, path_loss, ula_steering, upa_steering)
from .risopt import (LongTermDesignInputs, MmTrace, build_design_inputs, g_objective,
                     mm_update, optimize_phases)
from .scenario import Scenario, build_scenario

__version__ = "0.1.0"
