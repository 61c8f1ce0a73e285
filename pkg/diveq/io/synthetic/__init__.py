from diveq.io.synthetic.synthetic import (
    DatasetKind,
    DatasetSpec,
    SyntheticDataset,
    generate,
    generators,
)
