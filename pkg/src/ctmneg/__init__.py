"""Contextualized neural topic model with negative-sampling triplet training,
topic coherence/diversity metrics, and a benchmark harness."""

from .corpus import (
    BowVector,
    Corpus,
    CorpusError,
    SplitSpec,
    Vocabulary,
    build_vocabulary,
    fallback_embeddings,
    load_corpus,
    load_embeddings,
    split,
    to_bow,
    write_embeddings,
)
from .model import (
    CtmNegModel,
    LossBreakdown,
    ModelConfig,
    kl_divergence,
    laplace_prior,
    perturb_theta,
    reconstruction_loss,
    reparameterize,
    triplet_loss,
)
from .metrics import (
    MetricReport,
    cooccurrence_counts,
    cv_score,
    evaluate_topics,
    irbo,
    npmi_pair,
    rbo,
    topic_npmi,
)
from .synthetic import make_topic_corpus
from .harness import (
    BenchmarkReport,
    Dataset,
    ExperimentGrid,
    classify,
    hyperparam_search,
    prepare_dataset,
    run_benchmark,
    train_model,
)

__version__ = "0.1.0"
