"""Python interface to the evofuzz core.

The analysis functions come straight from the native module. ``compare``
and ``static_campaign`` return plain dictionaries decoded from the JSON the
core produces.
"""
import json

from ._evofuzz import (
    Bandit,
    FitnessScore,
    InvalidTarget,
    Rng,
    build_prompt,
    eliminate_dead_code,
    find_calls,
    fitness,
    norm_hash,
    normalize,
    parse_check,
    remove_prints,
    trim_to_parse,
    values_close,
)
from ._evofuzz import _compare_reports, _static_campaign

__all__ = [
    "Bandit",
    "FitnessScore",
    "InvalidTarget",
    "Rng",
    "build_prompt",
    "compare",
    "eliminate_dead_code",
    "find_calls",
    "fitness",
    "norm_hash",
    "normalize",
    "parse_check",
    "remove_prints",
    "static_campaign",
    "trim_to_parse",
    "values_close",
]


def compare(cpu_report, accelerator_report, rtol=1e-3, atol=1e-6):
    """Differential verdict for two reports in the shim's JSONL format."""
    return json.loads(_compare_reports(cpu_report, accelerator_report, rtol, atol))


def static_campaign(api, signature="", fixtures="", iterations=50, rng_seed=0):
    """Runs one campaign against the mock backend with static validity only.

    ``fixtures`` names a directory of recorded completions; without it the
    mock answers seed prompts with nothing and the campaign ends with the
    "no-seeds" note.
    """
    return json.loads(_static_campaign(api, signature, str(fixtures), iterations, rng_seed))
