"""Frequency response, realizability and synthesis of spring-mass networks."""

from .assembly import AssembledSystem, assemble, quadratic_form, spring_energy
from .dynsynth import ResonantGadget, make_resonant_gadget, synth_dynamic
from .io import read_network, read_response, write_network, write_response
from .model import (
    BalancedForceSystem,
    ModalResponse,
    Network,
    Node,
    Spring,
    StaticResponse,
    check_balanced,
    evaluate_modal,
)
from .realizability import split_modal, split_rank_one, validate_modal, validate_static
from .robust import Perturbation, apply_perturbation, eliminate_floppy, stability_experiment
from .reduce import dynamic_response_at, extract_modal, floppy_modes, static_response
from .synth2d import PlacementPolicy, SynthesisReport, synth_rank_one, synth_static

__version__ = "0.1.0"
