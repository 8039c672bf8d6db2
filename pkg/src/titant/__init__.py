"""titant: transaction-fraud detection at desk scale.

Offline: build a user-to-user transfer network from a record window,
learn node embeddings from weighted random walks, train a detector on
basic + embedding features, and publish a date-versioned feature store
snapshot. Online: a scoring server fetches features by user key, scores
each transfer in real time, and flags suspicious ones for interruption.
"""

from .detect import (DetectorModel, concat_features, fit_discretizer, load_model,
                     predict, save_model, train_gbdt, train_iforest, train_lr,
                     train_tree)
from .embed import (EmbeddingMatrix, SkipGramConfig, WalkConfig, generate_walks,
                    lookup_embedding, train_skipgram, train_skipgram_distributed)
from .graph import TransactionNetwork, as_undirected, build_network, out_neighbors
from .ingest import (LabelRecord, RecordFrame, SyntheticConfig, TransactionRecord,
                     WindowSpec, generate_synthetic, parse_records,
                     serialize_records, slice_windows)
from .pipeline import (EvalReport, PipelineConfig, evaluate, f1_score,
                       recall_at_top_frac, run_t_plus_1, sweep)
from .serve import ModelServer, ScoreRequest, ScoreResponse, serve_loop
from .store import FeatureStore

__version__ = "0.1.0"
