"""randworlds - degrees of belief from statistical knowledge bases by the random-worlds method.

Quick start::

    from randworlds import Reasoner, parse_kb, parse_query

    kb = parse_kb('''
        pred Apartment; pred Mistress; pred Murderer;
        const Jane;
        stat ||Murderer(x) | Apartment(x) & Mistress(x)||x ~= 0.6;
        fact Apartment(Jane); fact Mistress(Jane);
    ''')
    outcome = Reasoner().belief(kb, parse_query("Murderer(Jane)", kb))
    print(outcome.estimate.value)  # 3/5
"""

from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("randworlds")
except PackageNotFoundError:
    # Package is not installed (e.g., running from source during development)
    __version__ = "0.0.0.dev"

from randworlds.api import BeliefOutcome, Reasoner
from randworlds.dsl import parse_kb, parse_query, print_kb, read_kb
from randworlds.inference import DirectInferenceResult, infer, resolve
from randworlds.models import KnowledgeBase, Query, ToleranceSpec, validate_kb
from randworlds.worlds import BeliefEstimate, belief, count_models, sample_belief

__all__ = [
    "BeliefEstimate",
    "BeliefOutcome",
    "DirectInferenceResult",
    "KnowledgeBase",
    "Query",
    "Reasoner",
    "ToleranceSpec",
    "__version__",
    "belief",
    "count_models",
    "infer",
    "parse_kb",
    "parse_query",
    "print_kb",
    "read_kb",
    "resolve",
    "sample_belief",
    "validate_kb",
]
