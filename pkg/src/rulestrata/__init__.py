"""Consequent-constrained association rule mining over categorical records."""

__version__ = "0.1.0"

from .errors import (  # noqa: F401
    DegenerateResponse,
    DuplicateKey,
    EmptyDatabase,
    EmptyInput,
    EmptySelection,
    IoError,
    SchemaViolation,
    TooLargeForOracle,
    UndefinedConfidence,
    UnknownItem,
)
from .miner import FrequentItemsetTable, MiningParams, generate_candidates, mine_frequent  # noqa: F401
from .model import (  # noqa: F401
    Item,
    ItemDictionary,
    ItemsetSupport,
    Transaction,
    TransactionDatabase,
    build_dictionary,
    decode,
    encode_record,
    item_frequencies,
    support_count,
)
from .rules import Rule, RuleSet, compute_metrics, generate_rules, prune_redundant, sort_rules  # noqa: F401
