"""Inference on two-state Boltzmann machines and their spiking-network forms.

The package provides three inference engines (Gibbs sampling, mean-field
variational updates and their semi-stochastic combination), exact
enumeration oracles for small models, the rewrites that map inference onto
neuron-per-event spiking networks, a discrete-time spiking simulator, and
fixed-point / stochastic-stability analysis tools, all behind a
reproducibility-first CLI.
"""

__version__ = "0.1.0"

from .errors import CapacityError, ConfigError, SpikebmError, ValidationError
from .kernels import KernelSpec
from .model import (BoltzmannMachine, PairwiseParams, derive_pairwise, energy,
                    exact_joint, exact_posterior_marginals, load_model,
                    save_model, validate)
from .inference import (RunConfig, Trajectory, free_energy,
                        gibbs_chain_marginals, moving_average, run,
                        run_network)
from .transforms import (LnpNetwork, TransformRecord, dale_split, event_split,
                         load_network, readback, remove_biases, save_network,
                         shift)
from .lnp import lecam_check, rate, simulate
from .stability import (classify, deterministic_step, ensemble,
                        excluded_region_check, field_export,
                        find_fixed_points)
from .stats import (scatter_mean_vs_var, split_residuals, std_vs_mean,
                    summarize)
