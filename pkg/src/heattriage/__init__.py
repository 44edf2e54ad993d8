"""heattriage: extract and rank multistage attack campaigns from IDS alerts.

Pipeline: ingest EVE JSON alerts and tag each with an attack-intent stage;
aggregate per (source key, stage) into episodes at smoothed-volume peaks;
learn an analyst's 0-3 heat grades over episode pairs; given a critical
alert, heat all prior episodes, keep the hot ones as its campaign, and rank
candidate campaigns by entropy gain.
"""

from .alerts import (
    Alert,
    AsnTable,
    IngestStats,
    StageMapping,
    StageVocabulary,
    map_signature,
    parse_eve_file,
    parse_eve_stream,
    resolve_aggregation_key,
)
from .episodes import (
    Episode,
    EpisodeStore,
    SmoothingConfig,
    build_all_episodes,
    build_histogram,
    gaussian_smooth,
    segment_episodes,
)
from .errors import (
    AmbiguousIocError,
    NotFoundError,
    TrainingInProgressError,
    TriageError,
    ValidationError,
)
from .features import PairFeatures, PairFeaturizer, Standardizer, feature_names
from .gain import (
    GainConfig,
    GainReport,
    RankedIoc,
    StageDistribution,
    compute_gain,
    conditional_entropy,
    entropy,
    quantize_heat,
    rank_iocs,
)
from .hac import Hac, Ioc, extract_baseline, extract_hac, hac_payload, resolve_ioc
from .model import HeatModel, Hyperparams, LabeledPair, dedupe_labels, fine_tune, train
from .regressors import GradientBoostedTreesRegressor, TwoLayerPerceptronRegressor
from .synth import CampaignTemplate, Scenario, ScenarioSpec, generate

__version__ = "0.1.0"

__all__ = [
    "Alert",
    "AmbiguousIocError",
    "AsnTable",
    "CampaignTemplate",
    "Episode",
    "EpisodeStore",
    "GainConfig",
    "GainReport",
    "GradientBoostedTreesRegressor",
    "Hac",
    "HeatModel",
    "Hyperparams",
    "IngestStats",
    "Ioc",
    "LabeledPair",
    "NotFoundError",
    "PairFeatures",
    "PairFeaturizer",
    "RankedIoc",
    "Scenario",
    "ScenarioSpec",
    "SmoothingConfig",
    "StageDistribution",
    "StageMapping",
    "StageVocabulary",
    "Standardizer",
    "TrainingInProgressError",
    "TriageError",
    "TwoLayerPerceptronRegressor",
    "ValidationError",
    "build_all_episodes",
    "build_histogram",
    "compute_gain",
    "conditional_entropy",
    "dedupe_labels",
    "entropy",
    "extract_baseline",
    "extract_hac",
    "feature_names",
    "fine_tune",
    "gaussian_smooth",
    "generate",
    "hac_payload",
    "map_signature",
    "parse_eve_file",
    "parse_eve_stream",
    "quantize_heat",
    "rank_iocs",
    "resolve_aggregation_key",
    "resolve_ioc",
    "segment_episodes",
    "train",
]
