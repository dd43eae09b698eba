"""PAD evaluation engine: linear probes on frozen embeddings, score
fusion, ISO/IEC 30107-3 metrics and protocol runners."""

__version__ = "0.1.0"

from .data import (  # noqa: F401
    EmbeddingStore,
    Label,
    LabeledDataset,
    Manifest,
    SampleRecord,
    Split,
    join,
    load_embeddings,
    load_manifest,
    make_filter,
    write_embeddings,
    write_manifest,
)
from .fusion import FusionRule, VideoScore, fuse_models, fuse_pipeline, video_score  # noqa: F401
from .metrics import (  # noqa: F401
    DetPoint,
    MetricsReport,
    ScoreSet,
    aggregate,
    apcer_at,
    auc,
    bpcer_at,
    bpcer_at_apcer,
    compute_report,
    d_eer,
    det_curve,
    hter,
)
from .probe import (  # noqa: F401
    ProbeHead,
    TrainConfig,
    TrainLog,
    balanced_batches,
    bce_loss,
    load_head,
    loss_gradient,
    predict,
    predict_batch,
    save_head,
    train_head,
)
from .protocols import (  # noqa: F401
    CrossDatabaseSpec,
    FilterSpec,
    GroupedFold,
    GroupedSplitsSpec,
    KnownAttackSpec,
    LeaveOneOutSpec,
    ProtocolResult,
    ProtocolSpec,
    parse_protocol_spec,
    run_cross_database,
    run_grouped_splits,
    run_known_attack,
    run_leave_one_out,
    run_protocol,
)
