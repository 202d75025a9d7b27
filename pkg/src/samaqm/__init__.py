"""Discrete-event AQM simulator with RED, Blue, PI and an SVM-based controller (SAM)."""

from .aqm import AqmDecision, Blue, BlueParams, DropTail, Pi, PiParams, Red, RedParams
from .config import ScenarioConfig, parse_config
from .engine import Bottleneck, Packet, QueueState, Simulator
from .metrics import MetricsLog, RunSummary
from .sam import LabelPolicy, PatternWindow, Sam, gen_dataset, label, train_sam
from .scenario import run_scenario
from .svm import SvmModel, TrainConfig, classify, decision_value, load_model, save_model, smo_train

__version__ = "0.1.0"
