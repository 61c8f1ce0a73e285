from .files import export_dataset, import_dataset
from .synthetic.synthetic import (
    DatasetKind,
    DatasetSpec,
    SyntheticDataset,
    generate,
    generators,
)
