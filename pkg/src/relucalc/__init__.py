"""Exact derivative calculus and constructive approximation for ReLU-type networks."""

from .activations import ActivationSpec, abs_activation, custom, leaky_relu, relu
from .calculus import (chain_rule_check, chain_rule_residual, mask, net_derivative,
                       net_derivative_general, stability_probe)
from .constructors import (ApproxParams, GrowthTarget, InnerContractError, build_char,
                           build_global, build_global_square, build_mult, build_sawtooth,
                           build_square, build_squared_norm, square_target)
from .netcore import (ActivationMismatch, Network, NetworkError, NoIdentityGadget,
                      SizeMetrics, affine_network, compose, identity_network, parallelize,
                      random_network, realize, realize_partial, size_metrics, validate)
from .verify import (breakpoint_scan, fd_jacobian, global_bound_check, grid_error_report,
                     lipschitz_certificate)

__version__ = "0.1.0"
