import catalogue

from diveq.metrics.quality import distortion, distortion_per_bit, entropy_bits
from diveq.metrics.rate_distortion import rate_distortion_table
from diveq.metrics.record import METRICS_COLUMNS, MetricsRecord, records_to_frame
from diveq.metrics.snapshot import (
    AlignmentSnapshot,
    export_alignment_snapshot,
    load_alignment_snapshot,
)


def perplexity(usage):
    return usage.perplexity


def usage_fraction(usage):
    return usage.usage_fraction


metrics = catalogue.create("diveq", "metrics")

metrics.register("distortion", func=distortion)
metrics.register("distortion_per_bit", func=distortion_per_bit)
metrics.register("perplexity", func=perplexity)
metrics.register("usage_fraction", func=usage_fraction)
