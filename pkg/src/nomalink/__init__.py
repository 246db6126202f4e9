"""Two-user NOMA link simulator: blind SVM modulation classification, decode-free
SINR estimation from margin violators, and frame-by-frame link adaptation."""

from .amc import AmcConfig, AmcHypothesisFit, AmcResult, classify, fit_hypothesis, pseudo_label
from .capacity import CapacityReport, PowerLedger, compare_baselines, sum_capacity, user_rates
from .config import SimConfig, load_config
from .cqi import DEFAULT_TABLE, CqiLevel, CqiTable, load_cqi_csv
from .link import LinkConfig, LinkDecision, LinkState, Situation, coding_rate, decide, update_power
from .phy import Scheme, constellation, modulate, sic_detect, superpose_tu_noma
from .sinr import ErrorSignal, SinrEstimate, estimate_sinr, extract_error_signal
from .svm import KernelParams, SvmModel, train_binary, train_multiclass

__all__ = [
    "AmcConfig",
    "AmcHypothesisFit",
    "AmcResult",
    "CapacityReport",
    "CqiLevel",
    "CqiTable",
    "DEFAULT_TABLE",
    "ErrorSignal",
    "KernelParams",
    "LinkConfig",
    "LinkDecision",
    "LinkState",
    "PowerLedger",
    "Scheme",
    "SimConfig",
    "SinrEstimate",
    "Situation",
    "SvmModel",
    "classify",
    "coding_rate",
    "compare_baselines",
    "constellation",
    "decide",
    "estimate_sinr",
    "extract_error_signal",
    "fit_hypothesis",
    "load_config",
    "load_cqi_csv",
    "modulate",
    "pseudo_label",
    "sic_detect",
    "sum_capacity",
    "superpose_tu_noma",
    "train_binary",
    "train_multiclass",
    "update_power",
    "user_rates",
]
