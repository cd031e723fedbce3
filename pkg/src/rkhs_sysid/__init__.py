"""Impulse-response identification with stable reproducing kernels."""
from .checks import (CheckReport, check_continuity_certificate, check_dyadic_cauchy,
                     check_fubini, check_integrability, check_partial_sum_cauchy,
                     check_stability_probe, run_checks)
from .convolution import (Representer, Signal, apply_L, apply_L_with_error, operator_norm,
                          partial_sum_element, representer_phi)
from .errors import DivergenceSuspected, InvalidArgument, NumericalFailure
from .estimator import (Estimate, OutputKernelMatrix, fit, objective, output_kernel_matrix,
                        predict_impulse, predict_output, restore_estimate, select_lambda)
from .kernels import (GramMatrix, KernelDescriptor, TimeDomain, constant, dc, eval_kernel, gram,
                      integrability_measure, make_kernel, ss, tabulated,
                      tabulated_box_integral, tail_mass, tc)
from .rkhs import (RkhsElement, combination, cross_form, element_gram, evaluate, inner, norm,
                   section, section_integral, section_sum)
from .simulation import (Dataset, ExponentialSystem, ImpulseTableSystem, NoiseSpec,
                         TransferFunctionSystem, make_dataset, make_input, one_pole, simulate,
                         true_response)

__all__ = [
    "CheckReport", "check_continuity_certificate", "check_dyadic_cauchy", "check_fubini",
    "check_integrability", "check_partial_sum_cauchy", "check_stability_probe", "run_checks",
    "Representer", "Signal", "apply_L", "apply_L_with_error", "operator_norm",
    "partial_sum_element", "representer_phi",
    "DivergenceSuspected", "InvalidArgument", "NumericalFailure",
    "Estimate", "OutputKernelMatrix", "fit", "objective", "output_kernel_matrix",
    "predict_impulse", "predict_output", "restore_estimate", "select_lambda",
    "GramMatrix", "KernelDescriptor", "TimeDomain", "constant", "dc", "eval_kernel", "gram",
    "integrability_measure", "make_kernel", "ss", "tabulated",
    "tabulated_box_integral", "tail_mass", "tc",
    "RkhsElement", "combination", "cross_form", "element_gram", "evaluate", "inner", "norm",
    "section", "section_integral", "section_sum",
    "Dataset", "ExponentialSystem", "ImpulseTableSystem", "NoiseSpec", "TransferFunctionSystem",
    "make_dataset", "make_input", "one_pole", "simulate", "true_response",
]
