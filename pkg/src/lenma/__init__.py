"""Online syslog template mining by word-length similarity.

Messages are tokenized into words, and each message's vector of word
lengths is compared against known clusters with cosine similarity plus
a positional same-word gate; matching clusters absorb the message
(wildcarding positions whose words differ), otherwise a new cluster is
born.  One pass, no training phase, checkpointable at any message.
"""

from .analyze import (GroupCluster, MinuteGroup, chi2_distance,
                      cluster_groups, group_by_minute, report_patterns)
from .core import (WILDCARD, Cluster, ClusterIndex, LengthMismatch,
                   MiningConfig, TemplateMiner, cosine_similarity,
                   find_or_create_cluster, positional_similarity,
                   render_template, similarity, template_matches)
from .ingest import IngestReport, UdpListener, pump, read_file
from .state import (CorruptState, StateError, VersionMismatch, load_state,
                    save_state)
from .tokenizer import (EmptyMessage, ParsedMessage, RawLine,
                        TokenizerConfig, tokenize, word_length_vector)

__version__ = "0.1.0"

__all__ = [
    "WILDCARD",
    "Cluster",
    "ClusterIndex",
    "CorruptState",
    "EmptyMessage",
    "GroupCluster",
    "IngestReport",
    "LengthMismatch",
    "MiningConfig",
    "MinuteGroup",
    "ParsedMessage",
    "RawLine",
    "StateError",
    "TemplateMiner",
    "TokenizerConfig",
    "UdpListener",
    "VersionMismatch",
    "chi2_distance",
    "cluster_groups",
    "cosine_similarity",
    "find_or_create_cluster",
    "group_by_minute",
    "load_state",
    "positional_similarity",
    "pump",
    "read_file",
    "render_template",
    "report_patterns",
    "save_state",
    "similarity",
    "template_matches",
    "tokenize",
    "word_length_vector",
    "__version__",
]
