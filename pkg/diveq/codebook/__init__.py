from diveq.codebook.checkpoint import CHECKPOINT_MAGIC, load_checkpoint, save_checkpoint
from diveq.codebook.codebook import (
    Codebook,
    DitheredCodebook,
    UsageStats,
    dither,
    nearest,
    project_onto_curve,
    usage_stats,
)
