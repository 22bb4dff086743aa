"""Test-repair tooling: context mining, prompt encoding, candidate validation,
evaluation metrics, repair taxonomy, and trust prediction."""

__version__ = "0.1.0"

from .model import (
    BreakageKind,
    BreakageSpec,
    CallGraph,
    CandidateRepair,
    GraphKind,
    Hunk,
    HunkLevel,
    RepairInstance,
    TestCase,
    Verdict,
    load_dataset,
    save_dataset,
)

__all__ = [
    "BreakageKind",
    "BreakageSpec",
    "CallGraph",
    "CandidateRepair",
    "GraphKind",
    "Hunk",
    "HunkLevel",
    "RepairInstance",
    "TestCase",
    "Verdict",
    "load_dataset",
    "save_dataset",
    "__version__",
]
